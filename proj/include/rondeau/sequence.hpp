// Copyright 2026 The Rondeau Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Drive protocols built from the two monopole blocks. Streams are always
// stored in execution (time) order: the recursion U_n^s = U_{n-1}^{-s} U_{n-1}^{s}
// is an operator product, so the block that acts first is the rightmost one.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rondeau/error.hpp"
#include "rondeau/rng.hpp"
#include "rondeau/spectrum.hpp"

namespace rondeau {

enum class Symbol : std::int8_t { kPlus = 1, kMinus = -1 };

constexpr Symbol flip(Symbol s) noexcept { return s == Symbol::kPlus ? Symbol::kMinus : Symbol::kPlus; }
constexpr double sign_of(Symbol s) noexcept { return s == Symbol::kPlus ? 1.0 : -1.0; }
constexpr char to_char(Symbol s) noexcept { return s == Symbol::kPlus ? '+' : '-'; }

/// Timing and pulse angles shared by the + and - monopole blocks.
///
/// A block is a train of `pulses_per_block` spin-lock cycles with a single
/// y kick inserted after `kick_plus` (for +) or `kick_minus` (for -) cycles.
/// Every pulse, the kick included, is followed by a free-evolution window of
/// length `tau`, so both blocks last (N + 1) tau.
struct MonopoleSpec {
    int pulses_per_block = 300;  // N
    int kick_plus = 200;         // N_+
    int kick_minus = 100;        // N_-
    double tau = 1.0;
    double theta_x = std::numbers::pi / 2;
    double gamma_y = std::numbers::pi;

    double block_duration() const noexcept { return (pulses_per_block + 1) * tau; }
    double epsilon() const noexcept { return gamma_y - std::numbers::pi; }
    int kick_position(Symbol s) const noexcept { return s == Symbol::kPlus ? kick_plus : kick_minus; }
    int pulses_per_cycle() const noexcept { return pulses_per_block + 1; }

    /// Intra-cycle index p of the pulse whose readout, taken at (p + 1) tau,
    /// lies nearest to half a period; ties go to the earlier sample.
    int half_period_pulse_index() const noexcept { return (pulses_per_block + 1) / 2 - 1; }

    /// True when the half-period readout sits after the - kick and before the
    /// + kick, so its sign tells the two blocks apart.
    bool half_period_resolves_blocks() const noexcept {
        const int p = half_period_pulse_index();
        return kick_minus <= p && p < kick_plus;
    }

    void validate() const {
        if (!(0 < kick_minus && kick_minus < kick_plus && kick_plus < pulses_per_block))
            throw ArgumentError("monopole spec requires 0 < N_minus < N_plus < N");
        if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("monopole spec requires tau > 0");
        if (!std::isfinite(theta_x) || !std::isfinite(gamma_y)) throw ArgumentError("pulse angles must be finite");
    }

    friend bool operator==(const MonopoleSpec &, const MonopoleSpec &) = default;
};

enum class DriveKind { kRmd, kThueMorse, kFloquet, kExplicit };

constexpr std::string_view to_string(DriveKind kind) noexcept {
    switch (kind) {
        case DriveKind::kRmd: return "rmd";
        case DriveKind::kThueMorse: return "thue_morse";
        case DriveKind::kFloquet: return "floquet";
        case DriveKind::kExplicit: return "explicit";
    }
    return "unknown";
}

inline constexpr int kInfiniteOrder = std::numeric_limits<int>::max();
inline constexpr std::size_t kDefaultStreamCap = std::size_t{1} << 20;

struct SymbolStream {
    std::vector<Symbol> symbols;
    DriveKind kind = DriveKind::kExplicit;
    int n_order = 0;  // kInfiniteOrder for Thue-Morse
    std::optional<std::uint64_t> seed;

    std::size_t size() const noexcept { return symbols.size(); }
    bool empty() const noexcept { return symbols.empty(); }
    Symbol operator[](std::size_t i) const { return symbols[i]; }

    std::vector<double> as_signs() const {
        std::vector<double> out;
        out.reserve(symbols.size());
        for (Symbol s : symbols) out.push_back(sign_of(s));
        return out;
    }

    std::string to_string() const {
        std::string out;
        out.reserve(symbols.size());
        for (Symbol s : symbols) out.push_back(to_char(s));
        return out;
    }

    friend bool operator==(const SymbolStream &, const SymbolStream &) = default;
};

/// Time-ordered unrolling of U_n^{sign}: 2^n monopole symbols.
inline SymbolStream unroll_multipole(int n, Symbol sign, std::size_t cap = kDefaultStreamCap) {
    if (n < 0) throw ArgumentError("multipole order must be non-negative");
    if (n >= 63 || (std::size_t{1} << n) > cap)
        throw CapacityError("2^" + std::to_string(n) + " symbols exceeds the stream-length cap of " +
                            std::to_string(cap));
    const std::size_t len = std::size_t{1} << n;
    SymbolStream out;
    out.kind = DriveKind::kRmd;
    out.n_order = n;
    out.symbols.reserve(len);
    out.symbols.push_back(sign);
    // Doubling step: time(U_k^s) = time(U_{k-1}^s) ++ time(U_{k-1}^{-s}).
    while (out.symbols.size() < len) {
        const std::size_t half = out.symbols.size();
        for (std::size_t i = 0; i < half; ++i) out.symbols.push_back(flip(out.symbols[i]));
    }
    return out;
}

/// n-RMD: `cycles / 2^n` independent fair choices between U_n^+ and U_n^-.
inline SymbolStream sample_rmd(int n, std::size_t cycles, std::uint64_t seed, std::size_t cap = kDefaultStreamCap) {
    if (cycles > cap) throw CapacityError("requested " + std::to_string(cycles) + " cycles exceeds the cap");
    const SymbolStream plus = unroll_multipole(n, Symbol::kPlus, cap);
    const std::size_t chunk = plus.size();
    if (cycles % chunk != 0)
        throw ArgumentError("cycles (" + std::to_string(cycles) + ") must be a multiple of 2^n = " +
                            std::to_string(chunk));
    SymbolStream out;
    out.kind = DriveKind::kRmd;
    out.n_order = n;
    out.seed = seed;
    out.symbols.reserve(cycles);
    Rng rng(seed);
    for (std::size_t c = 0; c < cycles / chunk; ++c) {
        const bool pick_plus = rng.coin();
        for (Symbol s : plus.symbols) out.symbols.push_back(pick_plus ? s : flip(s));
    }
    return out;
}

/// Prefix of the n -> infinity limit: t_k = parity of popcount(k), + for even.
inline SymbolStream thue_morse_stream(std::size_t cycles, std::size_t cap = kDefaultStreamCap) {
    if (cycles < 1) throw ArgumentError("Thue-Morse stream needs at least one cycle");
    if (cycles > cap) throw CapacityError("requested " + std::to_string(cycles) + " cycles exceeds the cap");
    SymbolStream out;
    out.kind = DriveKind::kThueMorse;
    out.n_order = kInfiniteOrder;
    out.symbols.reserve(cycles);
    for (std::size_t k = 0; k < cycles; ++k)
        out.symbols.push_back((std::popcount(k) & 1) == 0 ? Symbol::kPlus : Symbol::kMinus);
    return out;
}

/// Periodic drive repeating a single block.
inline SymbolStream floquet_stream(std::size_t cycles, Symbol block = Symbol::kPlus) {
    SymbolStream out;
    out.kind = DriveKind::kFloquet;
    out.symbols.assign(cycles, block);
    return out;
}

/// Drive built from an explicit "+-" string. Whitespace is ignored.
inline SymbolStream parse_symbols(std::string_view text) {
    SymbolStream out;
    out.kind = DriveKind::kExplicit;
    for (char c : text) {
        if (c == '+') out.symbols.push_back(Symbol::kPlus);
        else if (c == '-') out.symbols.push_back(Symbol::kMinus);
        else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        else throw ParseError(std::string("unexpected character '") + c + "' in symbol stream");
    }
    return out;
}

/// Normalized DFT amplitudes of the stream mapped to +1/-1.
inline SpectrumResult symbol_dft(const SymbolStream &stream) {
    if (stream.empty()) throw ArgumentError("symbol_dft needs a nonempty stream");
    const auto signs = stream.as_signs();
    return amplitude_spectrum(signs, SpectrumKind::kSymbol);
}

struct EnvelopePrediction {
    int n_order = 0;
    std::vector<double> grid;
    std::vector<double> amplitude;
};

/// prod_{j=1}^{n} [1 - cos(2^{j-1} nu)]^{1/2}; the n = 0 product is 1.
inline double envelope_value(int n, double nu) {
    double acc = 1.0;
    double scale = 1.0;
    for (int j = 1; j <= n; ++j) {
        // 1 - cos x = 2 sin^2(x/2) avoids cancellation near nu = 0
        const double s = std::sin(0.5 * scale * nu);
        acc *= std::sqrt(2.0 * s * s);
        scale *= 2.0;
    }
    return acc;
}

inline EnvelopePrediction envelope(int n, std::vector<double> grid) {
    if (n < 0) throw ArgumentError("multipole order must be non-negative");
    EnvelopePrediction out;
    out.n_order = n;
    out.amplitude.reserve(grid.size());
    for (double nu : grid) {
        if (nu < 0.0 || nu > std::numbers::pi) throw ArgumentError("envelope grid must lie in [0, pi]");
        out.amplitude.push_back(envelope_value(n, nu));
    }
    out.grid = std::move(grid);
    return out;
}

}  // namespace rondeau

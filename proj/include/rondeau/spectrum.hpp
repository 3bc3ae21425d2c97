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

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace rondeau {

enum class SpectrumKind { kMicro, kStrobo, kSymbol };

constexpr std::string_view to_string(SpectrumKind kind) noexcept {
    switch (kind) {
        case SpectrumKind::kMicro: return "micro";
        case SpectrumKind::kStrobo: return "strobo";
        case SpectrumKind::kSymbol: return "symbol";
    }
    return "unknown";
}

/// |DFT| on the grid omega_k = 2 pi k / M, k = 0 .. M-1, normalized by 1/M.
struct SpectrumResult {
    std::vector<double> omegas;
    std::vector<double> amplitudes;
    SpectrumKind kind = SpectrumKind::kSymbol;

    std::size_t size() const noexcept { return amplitudes.size(); }
};

namespace detail {

/// Twiddle table w[j] = exp(-2 pi i j / M). Entries j and M - j are exact
/// conjugates so mirrored bins come out bit-identical.
inline std::vector<std::complex<double>> twiddles(std::size_t m) {
    std::vector<std::complex<double>> w(m);
    for (std::size_t j = 0; j <= m / 2; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
        w[j] = {std::cos(angle), std::sin(angle)};
        if (j != 0 && j != m - j) w[m - j] = std::conj(w[j]);
    }
    if (m % 4 == 0) {
        w[m / 4] = {0.0, -1.0};
        w[3 * m / 4] = {0.0, 1.0};
    }
    if (m % 2 == 0) w[m / 2] = {-1.0, 0.0};
    return w;
}

}  // namespace detail

/// Direct O(M^2) transform (1/M) sum_l exp(-i omega_k l) x_l. Sample counts
/// here are at most a few thousand, and the exact index arithmetic keeps
/// symmetry identities exact.
inline std::vector<std::complex<double>> dft(std::span<const double> samples) {
    const std::size_t m = samples.size();
    std::vector<std::complex<double>> out(m);
    if (m == 0) return out;
    const auto w = detail::twiddles(m);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::complex<double> acc{0.0, 0.0};
        std::size_t idx = 0;
        for (std::size_t l = 0; l < m; ++l) {
            acc += samples[l] * w[idx];
            idx += k;
            if (idx >= m) idx -= m;
        }
        out[k] = acc * inv_m;
    }
    return out;
}

inline SpectrumResult amplitude_spectrum(std::span<const double> samples, SpectrumKind kind) {
    SpectrumResult result;
    result.kind = kind;
    const std::size_t m = samples.size();
    const auto coeffs = dft(samples);
    result.omegas.resize(m);
    result.amplitudes.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        result.omegas[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        result.amplitudes[k] = std::abs(coeffs[k]);
    }
    return result;
}

}  // namespace rondeau

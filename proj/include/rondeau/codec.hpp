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

// Text carried in the micromotion. Each cycle carries one bit, read as the
// sign of the half-period sample: positive for 1, negative for 0. With a
// perfect kick that sign is (-1)^M sigma_M, so the encoder picks
// sigma_M = (-1)^M s_M.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rondeau/analysis.hpp"
#include "rondeau/error.hpp"
#include "rondeau/evolution.hpp"
#include "rondeau/sequence.hpp"

namespace rondeau {

inline constexpr int kBitsPerChar = 7;

struct Message {
    std::string text;
    std::vector<std::uint8_t> bits;  // 7 per character, MSB first
};

inline Message make_message(std::string_view text) {
    Message m;
    m.text = std::string(text);
    m.bits.reserve(text.size() * kBitsPerChar);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto code = static_cast<unsigned char>(text[i]);
        if (code > 0x7f)
            throw EncodingError("character at position " + std::to_string(i) + " is not 7-bit encodable");
        for (int b = kBitsPerChar - 1; b >= 0; --b) m.bits.push_back(static_cast<std::uint8_t>((code >> b) & 1U));
    }
    return m;
}

/// Symbol stream whose half-period signs spell the message. `offset` cycles
/// of + blocks precede the payload; bit i is carried by cycle offset + i.
inline SymbolStream encode(const Message &message, std::size_t offset = 0) {
    if (message.bits.empty()) throw EncodingError("cannot encode an empty message");
    SymbolStream out;
    out.kind = DriveKind::kExplicit;
    out.symbols.assign(offset, Symbol::kPlus);
    for (std::size_t i = 0; i < message.bits.size(); ++i) {
        const std::size_t cycle = offset + i;
        const bool positive = message.bits[i] != 0;
        const bool odd = (cycle & 1U) != 0;
        out.symbols.push_back(positive != odd ? Symbol::kPlus : Symbol::kMinus);
    }
    return out;
}

inline SymbolStream encode(std::string_view text, std::size_t offset = 0) { return encode(make_message(text), offset); }

struct DecodeResult {
    Message message;
    std::vector<double> margins;  // half-period sample per payload cycle
};

/// Hard-sliced decoder. Samples with |value| < `min_margin` are rejected.
inline DecodeResult decode(const SignalTrace &trace, const MonopoleSpec &spec, double min_margin = 0.0,
                           std::size_t offset = 0) {
    if (!spec.half_period_resolves_blocks())
        throw ConfigurationError("need N_minus < N/2 < N_plus to read blocks at half periods");
    SignalTrace view = trace;
    view.spec = spec;
    const auto samples = half_period_samples(view);
    if (samples.size() < offset) throw InsufficientDataError("trace shorter than the preamble");
    const std::size_t payload = samples.size() - offset;
    if (payload == 0 || payload % kBitsPerChar != 0)
        throw InsufficientDataError("payload of " + std::to_string(payload) +
                                    " cycles is not a whole number of 7-bit characters");
    DecodeResult result;
    std::vector<std::size_t> weak;
    for (std::size_t i = 0; i < payload; ++i) {
        const double v = samples[offset + i];
        result.margins.push_back(v);
        if (std::abs(v) < min_margin) weak.push_back(offset + i);
        result.message.bits.push_back(v > 0.0 ? 1 : 0);
    }
    if (!weak.empty()) {
        std::string list;
        for (std::size_t c : weak) list += (list.empty() ? "" : ",") + std::to_string(c);
        throw LowConfidenceError("half-period samples below the significance threshold at cycles " + list,
                                 std::move(weak));
    }
    for (std::size_t c = 0; c < payload / kBitsPerChar; ++c) {
        unsigned code = 0;
        for (int b = 0; b < kBitsPerChar; ++b) code = (code << 1U) | result.message.bits[c * kBitsPerChar + b];
        result.message.text.push_back(static_cast<char>(code));
    }
    return result;
}

/// Characters that fit before `t_hit`: floor(floor(t_hit / T) / bits).
///
/// By default T counts the N spin-lock cycles of a block (N tau), the
/// clock-cycle accounting used for the experimental estimate; pass
/// `include_kick_slot` to use the full (N + 1) tau block.
inline std::size_t capacity(double t_hit, const MonopoleSpec &spec, int bits_per_char = kBitsPerChar,
                            bool include_kick_slot = false) {
    if (!(t_hit > 0.0)) throw ArgumentError("t_hit must be positive");
    if (bits_per_char < 1) throw ArgumentError("bits per character must be positive");
    const double period = include_kick_slot ? spec.block_duration() : spec.pulses_per_block * spec.tau;
    const auto cycles = static_cast<std::size_t>(std::floor(t_hit / period));
    return cycles / static_cast<std::size_t>(bits_per_char);
}

}  // namespace rondeau

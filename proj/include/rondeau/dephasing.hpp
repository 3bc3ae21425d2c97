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

// Closed-form dephasing-limit model. Each kick maps the protected
// polarization S -> -cos(eps) S (the transverse part it creates is assumed
// echoed away before the next kick), and every free window of length tau
// multiplies it by exp(-Gamma_0 tau).

#include <cmath>
#include <numbers>
#include <string>

#include "rondeau/error.hpp"
#include "rondeau/evolution.hpp"
#include "rondeau/sequence.hpp"

namespace rondeau {

struct DephasingParams {
    double epsilon = 0.0;  // kick deviation gamma_y - pi
    double gamma_0 = 0.0;  // intrinsic decay rate
    MonopoleSpec spec;
    double b_slope = 0.0;    // B in eps = delta_eps + B T
    double delta_eps = 0.0;  // calibration offset
    double initial_value = 1.0;

    /// Parameters on the swept line eps = delta_eps + B T.
    static DephasingParams swept(const MonopoleSpec &spec, double gamma_0, double b_slope, double delta_eps = 0.0) {
        DephasingParams p;
        p.spec = spec;
        p.gamma_0 = gamma_0;
        p.b_slope = b_slope;
        p.delta_eps = delta_eps;
        p.epsilon = delta_eps + b_slope * spec.block_duration();
        return p;
    }
};

/// Piecewise-constant trace with the same sample layout as `evolve`.
inline SignalTrace model_signal(const SymbolStream &stream, const DephasingParams &params) {
    const MonopoleSpec &spec = params.spec;
    spec.validate();
    if (!spec.half_period_resolves_blocks())
        throw ConfigurationError("need N_minus < N/2 < N_plus so half-period samples distinguish the blocks");
    if (params.gamma_0 < 0.0) throw ConfigurationError("Gamma_0 must be non-negative");
    SignalTrace trace;
    trace.spec = spec;
    trace.spec.gamma_y = std::numbers::pi + params.epsilon;
    trace.initial_value = params.initial_value;
    trace.metadata["engine"] = "dephasing";
    const int per_cycle = spec.pulses_per_cycle();
    const double kick_factor = -std::cos(params.epsilon);
    const std::size_t total = stream.size() * static_cast<std::size_t>(per_cycle);
    trace.times.reserve(total);
    trace.values.reserve(total);
    trace.cycles.reserve(total);
    trace.pulse_indices.reserve(total);
    // Closed form in the kick and window counts, so equal counts give
    // bit-identical values whatever the block order.
    const double log_decay = -params.gamma_0 * spec.tau;
    for (std::size_t c = 0; c < stream.size(); ++c) {
        const int kick = spec.kick_position(stream[c]);
        for (int p = 0; p < per_cycle; ++p) {
            const double kicks = static_cast<double>(c + (p >= kick ? 1 : 0));
            const auto windows = static_cast<std::int64_t>(c) * per_cycle + p + 1;
            const double s = params.initial_value * std::pow(kick_factor, kicks) *
                             std::exp(log_decay * static_cast<double>(windows));
            trace.push(static_cast<double>(windows) * spec.tau, s, static_cast<std::int64_t>(c), p);
        }
    }
    return trace;
}

/// Gamma_e = Gamma_0 + eps^2 / (2T), from cos(eps)^M ~ exp(-M eps^2 / 2).
inline double predicted_rate(const DephasingParams &params) {
    if (!(std::abs(params.epsilon) < std::numbers::pi / 2))
        throw ArgumentError("predicted_rate requires |eps| < pi/2");
    const double period = params.spec.block_duration();
    return params.gamma_0 + params.epsilon * params.epsilon / (2.0 * period);
}

}  // namespace rondeau

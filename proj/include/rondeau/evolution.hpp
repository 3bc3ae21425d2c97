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

// Pulse programs and exact pure-state evolution. Pulses are instantaneous
// global rotations applied spin by spin; free evolution multiplies phases in
// the cached eigenbasis of H_dd.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rondeau/error.hpp"
#include "rondeau/rng.hpp"
#include "rondeau/sequence.hpp"
#include "rondeau/spinsystem.hpp"

namespace rondeau {

using cplx = std::complex<double>;

enum class EventType { kXPulse, kYPulse, kFree, kReadout };

struct PulseEvent {
    EventType type;
    double time;       // absolute start time
    double value;      // rotation angle for pulses, duration for free windows
    std::int64_t cycle;
    int pulse_index;   // position within the block, 0 .. N
};

/// Fully unrolled drive. Each block contributes N x pulses and one y kick,
/// every pulse followed by FREE(tau) and READOUT.
struct PulseProgram {
    std::vector<PulseEvent> events;
    MonopoleSpec spec;
    SymbolStream stream;

    std::size_t pulse_count() const {
        std::size_t c = 0;
        for (const auto &e : events) c += (e.type == EventType::kXPulse || e.type == EventType::kYPulse);
        return c;
    }
};

inline PulseProgram compile_program(const SymbolStream &stream, const MonopoleSpec &spec) {
    spec.validate();
    PulseProgram prog;
    prog.spec = spec;
    prog.stream = stream;
    const int per_cycle = spec.pulses_per_cycle();
    prog.events.reserve(stream.size() * static_cast<std::size_t>(per_cycle) * 3);
    for (std::size_t c = 0; c < stream.size(); ++c) {
        const int kick = spec.kick_position(stream[c]);
        for (int p = 0; p < per_cycle; ++p) {
            const double t0 = static_cast<double>(static_cast<std::int64_t>(c) * per_cycle + p) * spec.tau;
            const auto cyc = static_cast<std::int64_t>(c);
            if (p == kick) prog.events.push_back({EventType::kYPulse, t0, spec.gamma_y, cyc, p});
            else prog.events.push_back({EventType::kXPulse, t0, spec.theta_x, cyc, p});
            prog.events.push_back({EventType::kFree, t0, spec.tau, cyc, p});
            const double t1 = static_cast<double>(static_cast<std::int64_t>(c) * per_cycle + p + 1) * spec.tau;
            prog.events.push_back({EventType::kReadout, t1, 0.0, cyc, p});
        }
    }
    return prog;
}

/// Pure state on 2^N amplitudes.
struct QuantumState {
    int num_spins = 0;
    std::vector<cplx> amplitudes;

    double norm() const {
        double acc = 0.0;
        for (const cplx &a : amplitudes) acc += std::norm(a);
        return std::sqrt(acc);
    }
};

/// <I^x> = sum_k Re(conj(psi_up) psi_down) over spin-k pairs.
inline double expect_ix(const QuantumState &psi) {
    const std::size_t dim = psi.amplitudes.size();
    double acc = 0.0;
    for (int k = 0; k < psi.num_spins; ++k) {
        const std::size_t bit = std::size_t{1} << k;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & bit) continue;
            acc += (std::conj(psi.amplitudes[i]) * psi.amplitudes[i | bit]).real();
        }
    }
    return acc;
}

inline double expect_iy(const QuantumState &psi) {
    const std::size_t dim = psi.amplitudes.size();
    double acc = 0.0;
    for (int k = 0; k < psi.num_spins; ++k) {
        const std::size_t bit = std::size_t{1} << k;
        for (std::size_t i = 0; i < dim; ++i) {
            if (i & bit) continue;
            acc += (std::conj(psi.amplitudes[i]) * psi.amplitudes[i | bit]).imag();
        }
    }
    return acc;
}

inline double expect_iz(const QuantumState &psi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.amplitudes.size(); ++i)
        acc += std::norm(psi.amplitudes[i]) * (0.5 * psi.num_spins - std::popcount(i));
    return acc;
}

/// exp(-i theta sigma_x / 2) on spin k: [[c, -is], [-is, c]].
inline void rotate_x(QuantumState &psi, int k, double theta) {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    const std::size_t bit = std::size_t{1} << k;
    for (std::size_t i = 0; i < psi.amplitudes.size(); ++i) {
        if (i & bit) continue;
        const cplx a = psi.amplitudes[i], b = psi.amplitudes[i | bit];
        psi.amplitudes[i] = c * a + cplx(0.0, -s) * b;
        psi.amplitudes[i | bit] = cplx(0.0, -s) * a + c * b;
    }
}

/// exp(-i gamma sigma_y / 2) on spin k: [[c, -s], [s, c]].
inline void rotate_y(QuantumState &psi, int k, double gamma) {
    const double c = std::cos(0.5 * gamma), s = std::sin(0.5 * gamma);
    const std::size_t bit = std::size_t{1} << k;
    for (std::size_t i = 0; i < psi.amplitudes.size(); ++i) {
        if (i & bit) continue;
        const cplx a = psi.amplitudes[i], b = psi.amplitudes[i | bit];
        psi.amplitudes[i] = c * a - s * b;
        psi.amplitudes[i | bit] = s * a + c * b;
    }
}

inline void rotate_x_all(QuantumState &psi, double theta) {
    for (int k = 0; k < psi.num_spins; ++k) rotate_x(psi, k, theta);
}

inline void rotate_y_all(QuantumState &psi, double gamma) {
    for (int k = 0; k < psi.num_spins; ++k) rotate_y(psi, k, gamma);
}

/// exp(-i t H_dd) in the sector eigenbases, with phases cached for one t.
class FreePropagator {
   public:
    FreePropagator(const Hamiltonian &h, double t) : h_(&h), t_(t) {
        if (!h.diagonalized()) throw ArgumentError("free evolution needs a diagonalized Hamiltonian");
        for (const Sector &s : h.sectors()) {
            Eigen::VectorXcd ph(s.energies.size());
            for (Eigen::Index i = 0; i < s.energies.size(); ++i) ph[i] = std::polar(1.0, -t * s.energies[i]);
            phases_.push_back(std::move(ph));
        }
    }

    double duration() const noexcept { return t_; }

    void apply(QuantumState &psi) const {
        const auto &sectors = h_->sectors();
        for (std::size_t si = 0; si < sectors.size(); ++si) {
            const Sector &s = sectors[si];
            const auto d = static_cast<Eigen::Index>(s.states.size());
            if (d == 1) {
                psi.amplitudes[s.states[0]] *= phases_[si][0];
                continue;
            }
            work_.resize(d, 2);
            for (Eigen::Index a = 0; a < d; ++a) {
                const cplx v = psi.amplitudes[s.states[static_cast<std::size_t>(a)]];
                work_(a, 0) = v.real();
                work_(a, 1) = v.imag();
            }
            eig_.noalias() = s.vectors.transpose() * work_;
            for (Eigen::Index a = 0; a < d; ++a) {
                const cplx v = cplx(eig_(a, 0), eig_(a, 1)) * phases_[si][a];
                eig_(a, 0) = v.real();
                eig_(a, 1) = v.imag();
            }
            work_.noalias() = s.vectors * eig_;
            for (Eigen::Index a = 0; a < d; ++a)
                psi.amplitudes[s.states[static_cast<std::size_t>(a)]] = cplx(work_(a, 0), work_(a, 1));
        }
    }

   private:
    const Hamiltonian *h_;
    double t_;
    std::vector<Eigen::VectorXcd> phases_;
    mutable Eigen::Matrix<double, Eigen::Dynamic, 2> work_;
    mutable Eigen::Matrix<double, Eigen::Dynamic, 2> eig_;
};

inline void free_evolve(QuantumState &psi, const Hamiltonian &h, double t) {
    if (t == 0.0) return;
    FreePropagator(h, t).apply(psi);
}

/// Every spin along +x, then free evolution under H for t_d.
inline QuantumState initial_state(int num_spins, const Hamiltonian &h, double t_d) {
    if (t_d < 0.0) throw ArgumentError("initial decay time must be non-negative");
    if (num_spins != h.num_spins()) throw DimensionError("initial state and Hamiltonian disagree on spin count");
    QuantumState psi;
    psi.num_spins = num_spins;
    const std::size_t dim = std::size_t{1} << num_spins;
    psi.amplitudes.assign(dim, cplx(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
    free_evolve(psi, h, t_d);
    return psi;
}

/// Per-readout <I^x> samples with timing metadata.
struct SignalTrace {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<std::int64_t> cycles;
    std::vector<int> pulse_indices;
    double initial_value = 0.0;  // signal at t = 0, before the first pulse
    MonopoleSpec spec;
    std::map<std::string, std::string> metadata;

    std::size_t size() const noexcept { return values.size(); }

    void push(double t, double v, std::int64_t cycle, int pulse) {
        times.push_back(t);
        values.push_back(v);
        cycles.push_back(cycle);
        pulse_indices.push_back(pulse);
    }

    /// Number of cycles whose last readout is present.
    std::size_t full_cycles() const {
        std::size_t count = 0;
        for (std::size_t i = 0; i < size(); ++i)
            if (pulse_indices[i] == spec.pulses_per_block) ++count;
        return count;
    }
};

struct EvolveOptions {
    /// Standard deviation of additive Gaussian readout noise (signal units).
    double readout_noise = 0.0;
    std::uint64_t noise_seed = 0;
    /// Full width of the static uniform per-spin kick-angle disorder, as a
    /// fraction of gamma_y; 0 disables it. 0.018 reproduces the measured
    /// pulse inhomogeneity.
    double kick_disorder_width = 0.0;
    std::uint64_t disorder_seed = 0;
    double norm_tolerance = 1e-8;
    /// Norm check cadence in pulses.
    std::size_t norm_check_every = 64;
};

inline constexpr double kMeasuredKickInhomogeneity = 0.018;

inline SignalTrace evolve(const PulseProgram &program, const Hamiltonian &h, QuantumState psi,
                          const EvolveOptions &opts = {}) {
    if (psi.num_spins != h.num_spins() || psi.amplitudes.size() != h.dimension())
        throw DimensionError("state and Hamiltonian dimensions disagree");
    const int n = psi.num_spins;
    std::vector<double> kick_angles(static_cast<std::size_t>(n), program.spec.gamma_y);
    if (opts.kick_disorder_width > 0.0) {
        Rng rng(opts.disorder_seed);
        for (double &g : kick_angles) g *= 1.0 + opts.kick_disorder_width * (rng.uniform() - 0.5);
    }
    std::optional<Rng> noise;
    if (opts.readout_noise > 0.0) noise.emplace(opts.noise_seed);

    SignalTrace trace;
    trace.spec = program.spec;
    trace.initial_value = expect_ix(psi);
    const std::size_t readouts = program.events.size() / 3;
    trace.times.reserve(readouts);
    trace.values.reserve(readouts);
    trace.cycles.reserve(readouts);
    trace.pulse_indices.reserve(readouts);

    std::optional<FreePropagator> cached;
    std::size_t pulses = 0;
    for (const PulseEvent &e : program.events) {
        switch (e.type) {
            case EventType::kXPulse: rotate_x_all(psi, e.value); break;
            case EventType::kYPulse:
                if (opts.kick_disorder_width > 0.0)
                    for (int k = 0; k < n; ++k) rotate_y(psi, k, kick_angles[static_cast<std::size_t>(k)]);
                else rotate_y_all(psi, e.value);
                break;
            case EventType::kFree:
                if (!cached || cached->duration() != e.value) cached.emplace(h, e.value);
                cached->apply(psi);
                break;
            case EventType::kReadout: {
                double v = expect_ix(psi);
                if (noise) v += opts.readout_noise * noise->normal();
                trace.push(e.time, v, e.cycle, e.pulse_index);
                if (++pulses % opts.norm_check_every == 0) {
                    const double drift = std::abs(psi.norm() - 1.0);
                    if (drift > opts.norm_tolerance)
                        throw NumericalIntegrityError("state norm drifted by " + std::to_string(drift) + " after " +
                                                      std::to_string(pulses) + " pulses");
                }
                break;
            }
        }
    }
    return trace;
}

}  // namespace rondeau

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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "rondeau/error.hpp"
#include "rondeau/evolution.hpp"
#include "rondeau/sequence.hpp"
#include "rondeau/spectrum.hpp"

namespace rondeau {

inline constexpr std::size_t kMinSpectralCycles = 8;

/// sgn with the tie sgn(0) = +1.
inline double digitize(double v) noexcept { return v >= 0.0 ? 1.0 : -1.0; }

/// Readouts nearest to the half periods (2l + 1) T / 2, one per full cycle.
/// Readout p of a cycle sits at (p + 1) tau, so the nearest one is
/// `spec.half_period_pulse_index()` (ties resolved toward the earlier sample).
inline std::vector<double> half_period_samples(const SignalTrace &trace) {
    const int target = trace.spec.half_period_pulse_index();
    std::vector<double> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace.pulse_indices[i] != target) continue;
        const auto cycle = static_cast<std::size_t>(trace.cycles[i]);
        if (cycle != out.size()) throw ArgumentError("trace cycles are not contiguous");
        out.push_back(trace.values[i]);
    }
    // drop a trailing partial cycle
    const std::size_t full = trace.full_cycles();
    if (out.size() > full) out.resize(full);
    return out;
}

/// S(l T) for l = 0 .. M, where S(0) is the pre-drive value and S(l T) for
/// l >= 1 is the last readout of cycle l - 1.
inline std::vector<double> stroboscopic_samples(const SignalTrace &trace) {
    std::vector<double> out{trace.initial_value};
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.pulse_indices[i] == trace.spec.pulses_per_block) out.push_back(trace.values[i]);
    return out;
}

inline SpectrumResult dft_micromotion(const SignalTrace &trace) {
    auto samples = half_period_samples(trace);
    if (samples.size() < kMinSpectralCycles)
        throw InsufficientDataError("micromotion DFT needs at least 8 full cycles, got " + std::to_string(samples.size()));
    for (double &v : samples) v = digitize(v);
    return amplitude_spectrum(samples, SpectrumKind::kMicro);
}

inline SpectrumResult dft_stroboscopic(const SignalTrace &trace) {
    auto samples = stroboscopic_samples(trace);
    const std::size_t m = samples.size() - 1;  // full cycles
    if (m < kMinSpectralCycles)
        throw InsufficientDataError("stroboscopic DFT needs at least 8 full cycles, got " + std::to_string(m));
    samples.resize(m);
    return amplitude_spectrum(samples, SpectrumKind::kStrobo);
}

/// Lifetime and rate summary. Power-law fields are filled by sweep drivers.
struct HeatingFit {
    double t_e = 0.0;
    double gamma_e = 0.0;
    std::optional<double> gamma_0;
    std::optional<double> fit_exponent;
    std::optional<double> fit_stderr;
    std::size_t sample_index = 0;
    bool reached = false;  // a sample at or below S_0/e exists
};

enum class LifetimeRule {
    kClosest,        // global argmin_t ||S(t)| - S_0/e|
    kFirstCrossing,  // first sample with |S(t)| <= S_0/e
};

/// 1/e lifetime of a sampled series whose first entry is S_0 at t = times[0].
/// Ties go to the earliest time.
inline HeatingFit lifetime(std::span<const double> times, std::span<const double> values,
                           LifetimeRule rule = LifetimeRule::kClosest) {
    if (times.size() != values.size() || times.size() < 2) throw ArgumentError("lifetime needs at least two samples");
    const double s0 = std::abs(values[0]);
    if (!(s0 > 0.0)) {
        bool all_zero = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
        throw ArgumentError(all_zero ? "lifetime of an all-zero trace is undefined" : "initial sample S_0 is zero");
    }
    const double target = s0 / std::numbers::e;
    std::size_t best = 1;
    bool reached = false;
    if (rule == LifetimeRule::kClosest) {
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < values.size(); ++i) {
            const double d = std::abs(std::abs(values[i]) - target);
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
            reached = reached || std::abs(values[i]) <= target;
        }
    } else {
        best = values.size() - 1;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (std::abs(values[i]) <= target) {
                best = i;
                reached = true;
                break;
            }
    }
    HeatingFit fit;
    fit.t_e = times[best] - times[0];
    fit.gamma_e = 1.0 / fit.t_e;
    fit.sample_index = best;
    fit.reached = reached;
    return fit;
}

/// Lifetime over the stroboscopic samples S(l T).
inline HeatingFit lifetime(const SignalTrace &trace, LifetimeRule rule = LifetimeRule::kClosest) {
    const auto values = stroboscopic_samples(trace);
    std::vector<double> times(values.size());
    const double period = trace.spec.block_duration();
    for (std::size_t l = 0; l < times.size(); ++l) times[l] = static_cast<double>(l) * period;
    return lifetime(times, values, rule);
}

struct PowerLawFit {
    double exponent = 0.0;
    double stderr_ = 0.0;
    double prefactor = 0.0;
    std::size_t points = 0;
};

/// Least-squares slope of log y against log x.
inline PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ArgumentError("power-law fit needs equally many x and y values");
    if (xs.size() < 3) throw ArgumentError("power-law fit needs at least three points");
    const std::size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw ArgumentError("power-law fit needs positive data");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw ArgumentError("power-law fit needs at least two distinct x values");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - intercept - fit.exponent * lx[i];
        ssr += r * r;
    }
    fit.stderr_ = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    fit.prefactor = std::exp(intercept);
    fit.points = n;
    return fit;
}

/// Fit restricted to x within `decades` of the smallest x.
inline PowerLawFit fit_power_law_window(std::span<const double> xs, std::span<const double> ys, double decades = 1.0) {
    if (xs.size() != ys.size() || xs.empty()) throw ArgumentError("power-law fit needs matching nonempty data");
    const double lo = *std::min_element(xs.begin(), xs.end());
    const double hi = lo * std::pow(10.0, decades);
    std::vector<double> wx, wy;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] <= hi * (1.0 + 1e-12)) {
            wx.push_back(xs[i]);
            wy.push_back(ys[i]);
        }
    return fit_power_law(wx, wy);
}

/// Log-log slope of a spectrum near nu -> 0 (or, when `pi_shifted`, against
/// pi - nu as nu -> pi), using the `bins` lowest nonzero frequencies.
inline PowerLawFit low_frequency_slope(std::span<const double> amplitudes, bool pi_shifted, std::size_t bins = 10) {
    const std::size_t m = amplitudes.size();
    if (m < 2 * bins + 2) throw InsufficientDataError("spectrum too short for the requested fit window");
    std::vector<double> xs, ys;
    for (std::size_t j = 1; j <= bins; ++j) {
        const std::size_t k = pi_shifted ? m / 2 - j : j;
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        xs.push_back(pi_shifted ? std::numbers::pi - omega : omega);
        ys.push_back(amplitudes[k]);
    }
    return fit_power_law(xs, ys);
}

struct BiexponentialFit {
    double a1 = 0.0, tau1 = 0.0;  // faster component
    double a2 = 0.0, tau2 = 0.0;
    double t_hit = std::numeric_limits<double>::infinity();
    double residual_norm = 0.0;
    int iterations = 0;

    double operator()(double t) const { return a1 * std::exp(-t / tau1) + a2 * std::exp(-t / tau2); }
};

namespace detail {

// Parameters (A1, log tau1, A2, log tau2).
struct BiexpResidual : Eigen::DenseFunctor<double> {
    std::span<const double> t, y;
    BiexpResidual(std::span<const double> t_, std::span<const double> y_)
        : Eigen::DenseFunctor<double>(4, static_cast<int>(t_.size())), t(t_), y(y_) {}

    int operator()(const InputType &p, ValueType &r) const {
        const double k1 = std::exp(-p[1]), k2 = std::exp(-p[3]);
        for (std::size_t i = 0; i < t.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = p[0] * std::exp(-t[i] * k1) + p[2] * std::exp(-t[i] * k2) - y[i];
        return 0;
    }

    int df(const InputType &p, JacobianType &j) const {
        const double k1 = std::exp(-p[1]), k2 = std::exp(-p[3]);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const double e1 = std::exp(-t[i] * k1), e2 = std::exp(-t[i] * k2);
            j(row, 0) = e1;
            j(row, 1) = p[0] * e1 * t[i] * k1;
            j(row, 2) = e2;
            j(row, 3) = p[2] * e2 * t[i] * k2;
        }
        return 0;
    }
};

}  // namespace detail

/// Nonlinear least squares for A1 exp(-t/tau1) + A2 exp(-t/tau2) on a
/// decaying envelope, plus the first time the fitted curve reaches
/// `noise_floor`.
inline BiexponentialFit fit_biexponential(std::span<const double> times, std::span<const double> values,
                                          double noise_floor, int max_evaluations = 4000) {
    if (times.size() != values.size() || times.size() < 8)
        throw ArgumentError("biexponential fit needs at least eight samples");
    // Seed from a log-linear single-exponential fit on the positive samples.
    std::vector<double> tx, ly;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (values[i] > 0.0) {
            tx.push_back(times[i]);
            ly.push_back(std::log(values[i]));
        }
    double a0 = values[0], tau0 = (times.back() - times.front()) / 3.0;
    if (tx.size() >= 3) {
        const double mx = std::accumulate(tx.begin(), tx.end(), 0.0) / static_cast<double>(tx.size());
        const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < tx.size(); ++i) {
            sxx += (tx[i] - mx) * (tx[i] - mx);
            sxy += (tx[i] - mx) * (ly[i] - my);
        }
        if (sxx > 0.0 && sxy < 0.0) {
            tau0 = -sxx / sxy;
            a0 = std::exp(my + mx / tau0);
        }
    }
    if (!(tau0 > 0.0)) tau0 = 1.0;

    detail::BiexpResidual functor(times, values);
    Eigen::LevenbergMarquardt<detail::BiexpResidual> lm(functor);
    lm.setMaxfev(max_evaluations);
    lm.setXtol(1e-12);
    lm.setFtol(1e-12);
    Eigen::VectorXd p(4);
    p << 0.5 * a0, std::log(tau0 / 3.0), 0.5 * a0, std::log(tau0 * 3.0);
    const auto status = lm.minimize(p);
    Eigen::VectorXd r(static_cast<Eigen::Index>(times.size()));
    functor(p, r);
    const double residual = r.norm();
    if (status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation ||
        status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite())
        throw FitError("biexponential fit did not converge (status " + std::to_string(static_cast<int>(status)) + ")",
                       residual);

    BiexponentialFit fit;
    fit.a1 = p[0];
    fit.tau1 = std::exp(p[1]);
    fit.a2 = p[2];
    fit.tau2 = std::exp(p[3]);
    if (fit.tau1 > fit.tau2) {
        std::swap(fit.a1, fit.a2);
        std::swap(fit.tau1, fit.tau2);
    }
    fit.residual_norm = residual;
    fit.iterations = static_cast<int>(lm.iterations());

    // First crossing of the noise floor: march on a grid, then bisect.
    const double t0 = times.front();
    if (fit(t0) <= noise_floor) {
        fit.t_hit = t0;
    } else {
        const double horizon = t0 + 200.0 * fit.tau2;
        const double step = std::max(fit.tau1 / 8.0, (horizon - t0) * 1e-6);
        double lo = t0, hi = t0;
        while (hi < horizon && fit(hi) > noise_floor) {
            lo = hi;
            hi += step;
        }
        if (fit(hi) <= noise_floor) {
            for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                (fit(mid) > noise_floor ? lo : hi) = mid;
            }
            fit.t_hit = hi;
        }
    }
    return fit;
}

enum class RowNormalization { kPerRow, kGlobal, kNone };

/// Stroboscopic |DFT|^2 per kick angle, averaged over drive realizations.
struct PhaseDiagram {
    std::vector<double> gamma_grid;
    std::vector<double> nu_grid;                 // omega_k in rad per period; nu = omega / T
    std::vector<std::vector<double>> intensity;  // [gamma][nu]
    std::vector<std::vector<double>> raw_intensity;
    int n_order = 0;
    std::vector<std::size_t> realizations;       // averaging count per row
    RowNormalization normalization = RowNormalization::kPerRow;
};

/// Ratio of the intensity at omega = pi to the row median.
inline double period_doubling_contrast(std::span<const double> row) {
    if (row.empty()) throw ArgumentError("empty spectrum row");
    std::vector<double> copy(row.begin(), row.end());
    const std::size_t mid = copy.size() / 2;
    std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(mid), copy.end());
    const double median = copy[mid];
    const double peak = row[row.size() / 2];
    if (!(median > 0.0)) return std::numeric_limits<double>::infinity();
    return peak / median;
}

inline PhaseDiagram phase_diagram(const std::vector<std::pair<double, SignalTrace>> &sweep,
                                  RowNormalization norm = RowNormalization::kPerRow, int n_order = 0) {
    if (sweep.empty()) throw ArgumentError("phase diagram needs at least one trace");
    const MonopoleSpec &ref = sweep.front().second.spec;
    const std::size_t cycles = sweep.front().second.full_cycles();
    std::map<double, std::pair<std::vector<double>, std::size_t>> rows;
    std::vector<double> omegas;
    for (const auto &[gamma, trace] : sweep) {
        MonopoleSpec a = trace.spec, b = ref;
        a.gamma_y = b.gamma_y = 0.0;
        if (!(a == b) || trace.full_cycles() != cycles)
            throw ArgumentError("inconsistent specs across the phase-diagram sweep");
        const SpectrumResult spec = dft_stroboscopic(trace);
        if (omegas.empty()) omegas = spec.omegas;
        auto &[acc, count] = rows[gamma];
        if (acc.empty()) acc.assign(spec.size(), 0.0);
        for (std::size_t k = 0; k < spec.size(); ++k) acc[k] += spec.amplitudes[k] * spec.amplitudes[k];
        ++count;
    }
    PhaseDiagram pd;
    pd.nu_grid = omegas;
    pd.n_order = n_order;
    pd.normalization = norm;
    double global_max = 0.0;
    for (auto &[gamma, entry] : rows) {
        auto &[acc, count] = entry;
        for (double &v : acc) v /= static_cast<double>(count);
        pd.gamma_grid.push_back(gamma);
        pd.raw_intensity.push_back(acc);
        pd.realizations.push_back(count);
        global_max = std::max(global_max, *std::max_element(acc.begin(), acc.end()));
    }
    for (const auto &row : pd.raw_intensity) {
        std::vector<double> out = row;
        double scale = 1.0;
        if (norm == RowNormalization::kPerRow) scale = *std::max_element(row.begin(), row.end());
        else if (norm == RowNormalization::kGlobal) scale = global_max;
        if (scale > 0.0)
            for (double &v : out) v /= scale;
        pd.intensity.push_back(std::move(out));
    }
    return pd;
}

}  // namespace rondeau

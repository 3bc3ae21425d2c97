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

#include "rondeau/analysis.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "gtest/gtest.h"

#include "rondeau/dephasing.hpp"

using namespace rondeau;

namespace {

MonopoleSpec spec10() {
    MonopoleSpec s;
    s.pulses_per_block = 10;
    s.kick_plus = 7;
    s.kick_minus = 2;
    s.tau = 0.5;
    return s;
}

/// Trace whose half-period and end-of-cycle readouts are given per cycle;
/// other readouts hold the end-of-cycle value.
SignalTrace synthetic(const std::vector<double> &half, const std::vector<double> &strobe, double s0 = 1.0) {
    SignalTrace tr;
    tr.spec = spec10();
    tr.initial_value = s0;
    const int per = tr.spec.pulses_per_cycle();
    for (std::size_t c = 0; c < strobe.size(); ++c)
        for (int p = 0; p < per; ++p) {
            const double v = p == tr.spec.half_period_pulse_index() ? half[c] : strobe[c];
            tr.push(static_cast<double>(static_cast<int>(c) * per + p + 1) * tr.spec.tau, v, static_cast<std::int64_t>(c), p);
        }
    return tr;
}

std::vector<double> naive_dft_abs(const std::vector<double> &s) {
    const std::size_t m = s.size();
    std::vector<double> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::complex<long double> acc = 0;
        for (std::size_t l = 0; l < m; ++l) {
            const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * l % m) / m;
            acc += static_cast<long double>(s[l]) * std::complex<long double>(std::cos(ang), std::sin(ang));
        }
        out[k] = static_cast<double>(std::abs(acc) / m);
    }
    return out;
}

}  // namespace

TEST(analysis, digitize_tie_break) {
    EXPECT_EQ(digitize(0.0), 1.0);
    EXPECT_EQ(digitize(-0.0), 1.0);
    EXPECT_EQ(digitize(-1e-300), -1.0);
    EXPECT_EQ(digitize(3.0), 1.0);
}

TEST(analysis, half_period_index_is_nearest_sample) {
    for (int n = 3; n < 40; ++n) {
        MonopoleSpec s;
        s.pulses_per_block = n;
        const double half = 0.5 * s.block_duration();
        int best = 0;
        for (int p = 0; p <= n; ++p)
            if (std::abs((p + 1) * s.tau - half) < std::abs((best + 1) * s.tau - half)) best = p;
        EXPECT_EQ(s.half_period_pulse_index(), best) << n;
    }
}

TEST(analysis, dft_micromotion_lines) {
    const std::vector<double> ones(8, 0.3);
    auto flat = dft_micromotion(synthetic(ones, ones));
    EXPECT_EQ(flat.kind, SpectrumKind::kMicro);
    EXPECT_NEAR(flat.amplitudes[0], 1.0, 1e-15);
    for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(flat.amplitudes[k], 0.0, 1e-15);
    std::vector<double> alt;
    for (int l = 0; l < 8; ++l) alt.push_back(l % 2 ? -0.2 : 0.7);
    auto pi_line = dft_micromotion(synthetic(alt, ones));
    EXPECT_NEAR(pi_line.amplitudes[4], 1.0, 1e-15);
    EXPECT_NEAR(pi_line.omegas[4], std::numbers::pi, 1e-15);
}

TEST(analysis, dft_stroboscopic_lines) {
    std::vector<double> alt, half(8, 1.0);
    for (int l = 1; l <= 8; ++l) alt.push_back(l % 2 ? -1.0 : 1.0);
    auto s = dft_stroboscopic(synthetic(half, alt, 1.0));
    EXPECT_EQ(s.size(), 8u);
    EXPECT_NEAR(s.amplitudes[4], 1.0, 1e-15);
    for (std::size_t k = 0; k < 8; ++k)
        if (k != 4) EXPECT_NEAR(s.amplitudes[k], 0.0, 1e-15);
    auto c = dft_stroboscopic(synthetic(half, std::vector<double>(8, 2.0), 2.0));
    EXPECT_NEAR(c.amplitudes[0], 2.0, 1e-15);
}

TEST(analysis, insufficient_cycles) {
    const std::vector<double> seven(7, 1.0);
    EXPECT_THROW(dft_micromotion(synthetic(seven, seven)), InsufficientDataError);
    EXPECT_THROW(dft_stroboscopic(synthetic(seven, seven)), InsufficientDataError);
}

TEST(analysis, dft_matches_naive_sum) {
    Rng rng(3);
    for (std::size_t m : {1u, 2u, 7u, 64u, 243u}) {
        std::vector<double> s(m);
        for (double &v : s) v = rng.normal();
        const auto got = amplitude_spectrum(s, SpectrumKind::kStrobo);
        const auto ref = naive_dft_abs(s);
        for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(got.amplitudes[k], ref[k], 1e-12) << m << ":" << k;
    }
}

TEST(analysis, parseval) {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> half, strobe;
        for (int l = 0; l < 50 + trial; ++l) {
            half.push_back(rng.normal());
            strobe.push_back(rng.normal());
        }
        const auto tr = synthetic(half, strobe, rng.normal());
        for (const auto &[spec, samples] :
             {std::pair{dft_micromotion(tr), [&] {
                  std::vector<double> d;
                  for (double v : half) d.push_back(digitize(v));
                  return d;
              }()},
              std::pair{dft_stroboscopic(tr), [&] {
                  auto s = stroboscopic_samples(tr);
                  s.pop_back();
                  return s;
              }()}}) {
            double lhs = 0.0, rhs = 0.0;
            for (double a : spec.amplitudes) lhs += a * a;
            for (double v : samples) rhs += v * v;
            rhs /= static_cast<double>(samples.size());
            EXPECT_NEAR(lhs, rhs, 1e-12 * rhs);
        }
    }
}

TEST(analysis, pi_shift_mirror_for_dephasing_traces) {
    MonopoleSpec spec;
    for (int n = 0; n <= 3; ++n)
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto stream = sample_rmd(n, 720, seed);
            DephasingParams p;
            p.spec = spec;
            p.gamma_0 = 1e-4;
            const auto micro = dft_micromotion(model_signal(stream, p));
            const auto sym = symbol_dft(stream);
            const std::size_t m = sym.size();
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t mirror = (m / 2 + m - k) % m;  // pi - omega_k
                ASSERT_NEAR(micro.amplitudes[k], sym.amplitudes[mirror], 1e-12) << k;
            }
        }
}

TEST(analysis, lifetime_examples) {
    const std::vector<double> t{0, 1, 2, 3}, s{1.0, 0.5, 0.3, 0.2};
    const auto fit = lifetime(t, s);
    EXPECT_EQ(fit.t_e, 2.0);
    EXPECT_EQ(fit.gamma_e, 0.5);
    EXPECT_TRUE(fit.reached);
    // Ties go to the earliest sample.
    const double e = 1.0 / std::numbers::e;
    const auto tie = lifetime(std::vector<double>{0, 1, 2}, std::vector<double>{1.0, e + 0.01, e - 0.01});
    EXPECT_EQ(tie.t_e, 1.0);
    EXPECT_THROW(lifetime(std::vector<double>{0, 1}, std::vector<double>{0.0, 0.0}), ArgumentError);
    EXPECT_THROW(lifetime(std::vector<double>{0, 1}, std::vector<double>{0.0, 1.0}), ArgumentError);
}

TEST(analysis, lifetime_of_dense_exponential) {
    const double tau0 = 37.0, dt = 0.25;
    std::vector<double> t, s;
    for (int i = 0; i < 1000; ++i) {
        t.push_back(i * dt);
        s.push_back(std::exp(-i * dt / tau0));
    }
    EXPECT_NEAR(lifetime(t, s).t_e, tau0, dt);
    EXPECT_NEAR(lifetime(t, s, LifetimeRule::kFirstCrossing).t_e, tau0, dt);
}

TEST(analysis, lifetime_on_monotone_traces_matches_first_crossing) {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t{0.0}, s{1.0};
        for (int i = 1; i < 80; ++i) {
            t.push_back(i);
            s.push_back(s.back() * (1.0 - 0.1 * rng.uniform()));
        }
        const auto closest = lifetime(t, s);
        const auto first = lifetime(t, s, LifetimeRule::kFirstCrossing);
        if (first.reached) EXPECT_LE(std::abs(closest.t_e - first.t_e), 1.0);
    }
}

TEST(analysis, lifetime_uses_stroboscopic_samples) {
    MonopoleSpec spec = spec10();
    DephasingParams p;
    p.spec = spec;
    p.gamma_0 = 0.01;
    const auto tr = model_signal(floquet_stream(200), p);
    const auto fit = lifetime(tr);
    // exp(-Gamma_0 M T) crosses 1/e at M T = 100; samples are T = 5.5 apart.
    EXPECT_NEAR(fit.t_e, 100.0, spec.block_duration());
    EXPECT_EQ(std::fmod(fit.t_e, spec.block_duration()), 0.0);
}

TEST(analysis, power_law_exact) {
    std::vector<double> x{0.5, 1, 2, 4, 8}, y2, y3;
    for (double v : x) {
        y2.push_back(v * v);
        y3.push_back(3 * v);
    }
    const auto a = fit_power_law(x, y2);
    EXPECT_NEAR(a.exponent, 2.0, 1e-14);
    EXPECT_NEAR(a.stderr_, 0.0, 1e-14);
    const auto b = fit_power_law(x, y3);
    EXPECT_NEAR(b.exponent, 1.0, 1e-14);
    EXPECT_NEAR(b.prefactor, 3.0, 1e-13);
    EXPECT_THROW(fit_power_law(std::vector<double>{1, 2, 3}, std::vector<double>{1, -2, 3}), ArgumentError);
    EXPECT_THROW(fit_power_law(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ArgumentError);
}

TEST(analysis, power_law_window) {
    std::vector<double> x, y;
    for (double v = 0.01; v < 10; v *= 1.5) {
        x.push_back(v);
        y.push_back(v < 0.1 ? v * v : 0.01 * v);  // bends at 0.1
    }
    EXPECT_NEAR(fit_power_law_window(x, y, 1.0).exponent, 2.0, 0.05);
}

TEST(analysis, biexponential_single_component) {
    std::vector<double> t, y;
    for (int i = 0; i < 60; ++i) {
        t.push_back(i * 0.5);
        y.push_back(2.0 * std::exp(-t.back() / 7.0));
    }
    const auto fit = fit_biexponential(t, y, 1e-3);
    const double dominant_tau = std::abs(fit.a1) > std::abs(fit.a2) ? fit.tau1 : fit.tau2;
    EXPECT_NEAR(dominant_tau, 7.0, 0.07);
    EXPECT_NEAR(fit.t_hit, 7.0 * std::log(2.0 / 1e-3), 0.5);
}

TEST(analysis, biexponential_with_noise) {
    Rng rng(5);
    std::vector<double> t, y;
    for (int i = 0; i < 400; ++i) {
        t.push_back(i * 0.25);
        const double clean = 0.6 * std::exp(-t.back() / 2.0) + 0.4 * std::exp(-t.back() / 30.0);
        y.push_back(clean * (1.0 + 0.01 * rng.normal()));
    }
    const auto fit = fit_biexponential(t, y, 0.01);
    EXPECT_NEAR(fit.a1, 0.6, 0.03);
    EXPECT_NEAR(fit.tau1, 2.0, 0.1);
    EXPECT_NEAR(fit.a2, 0.4, 0.02);
    EXPECT_NEAR(fit.tau2, 30.0, 1.5);
    EXPECT_GT(fit.t_hit, 30.0 * std::log(0.4 / 0.01) * 0.9);
}

TEST(analysis, biexponential_errors) {
    std::vector<double> t{0, 1, 2}, y{1, 0.5, 0.2};
    EXPECT_THROW(fit_biexponential(t, y, 0.1), ArgumentError);
    std::vector<double> tt, yy;
    for (int i = 0; i < 30; ++i) {
        tt.push_back(i);
        yy.push_back(std::exp(-i / 5.0) + 0.3 * std::exp(-i / 40.0));
    }
    try {
        fit_biexponential(tt, yy, 0.01, 3);
        FAIL() << "expected a fit error";
    } catch (const FitError &e) {
        EXPECT_GE(e.residual(), 0.0);
    }
}

TEST(analysis, phase_diagram_rows) {
    MonopoleSpec spec = spec10();
    std::vector<std::pair<double, SignalTrace>> sweep;
    for (double g : {0.8, 1.0})
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            DephasingParams p;
            p.spec = spec;
            p.epsilon = (g - 1.0) * std::numbers::pi;
            sweep.emplace_back(g * std::numbers::pi, model_signal(sample_rmd(0, 32, seed), p));
        }
    const auto pd = phase_diagram(sweep);
    ASSERT_EQ(pd.gamma_grid.size(), 2u);
    EXPECT_EQ(pd.realizations, (std::vector<std::size_t>{3, 3}));
    const auto &row = pd.intensity[1];
    EXPECT_EQ(std::max_element(row.begin(), row.end()) - row.begin(), 16);
    EXPECT_DOUBLE_EQ(row[16], 1.0);
    for (const auto &r : pd.intensity)
        for (double v : r) EXPECT_GE(v, 0.0);
    EXPECT_GT(period_doubling_contrast(pd.raw_intensity[1]), 5.0);

    const auto global = phase_diagram(sweep, RowNormalization::kGlobal);
    double mx = 0.0;
    for (const auto &r : global.intensity) mx = std::max(mx, *std::max_element(r.begin(), r.end()));
    EXPECT_DOUBLE_EQ(mx, 1.0);

    auto bad = sweep;
    bad.back().second.spec.tau = 0.7;
    EXPECT_THROW(phase_diagram(bad), ArgumentError);
    EXPECT_THROW(phase_diagram({}), ArgumentError);
}

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

// Disordered spin graphs and the secular dipolar Hamiltonian
//
//   H_dd = sum_{k<l} B_kl [3 I_k^z I_l^z - I_k . I_l],   I = sigma / 2.
//
// H_dd commutes with total I^z, so it is stored block-diagonally, one dense
// real-symmetric block per magnetization sector, each with its eigenbasis.
//
// Basis convention: bit k of a basis index is 0 for spin k up (I^z = +1/2)
// and 1 for spin k down.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "rondeau/error.hpp"
#include "rondeau/rng.hpp"

namespace rondeau {

using Vec3 = std::array<double, 3>;

struct SpinGraph {
    std::vector<Vec3> positions;
    double edge_length = 0.0;
    double r_min = 0.9;
    double r_max = 1.1;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return positions.size(); }
};

inline double distance(const Vec3 &a, const Vec3 &b) noexcept {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Cube edge giving roughly unit mean spacing: num_spins^{1/3}.
inline double default_edge_length(int num_spins) { return std::cbrt(static_cast<double>(num_spins)); }

inline constexpr std::size_t kDefaultProposalBudget = 100000;

/// Sequential accept-reject placement in a cube of side `edge_length`. A
/// proposal is accepted when it keeps distance >= r_min to every placed spin
/// and lies within r_max of at least one of them.
inline SpinGraph generate_graph(int num_spins, double edge_length, double r_min, double r_max, std::uint64_t seed,
                                std::size_t proposal_budget = kDefaultProposalBudget) {
    if (num_spins < 2) throw ArgumentError("a spin graph needs at least two spins");
    if (!(0.0 < r_min && r_min < r_max && r_max < edge_length))
        throw ArgumentError("graph constraints require 0 < r_min < r_max < edge_length");
    SpinGraph g;
    g.edge_length = edge_length;
    g.r_min = r_min;
    g.r_max = r_max;
    g.seed = seed;
    g.positions.reserve(static_cast<std::size_t>(num_spins));
    Rng rng(seed);
    auto propose = [&] { return Vec3{rng.uniform(0.0, edge_length), rng.uniform(0.0, edge_length), rng.uniform(0.0, edge_length)}; };
    g.positions.push_back(propose());
    for (int k = 1; k < num_spins; ++k) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < proposal_budget && !placed; ++attempt) {
            const Vec3 p = propose();
            bool too_close = false;
            bool has_neighbor = false;
            for (const Vec3 &q : g.positions) {
                const double d = distance(p, q);
                if (d < r_min) {
                    too_close = true;
                    break;
                }
                if (d <= r_max) has_neighbor = true;
            }
            if (!too_close && has_neighbor) {
                g.positions.push_back(p);
                placed = true;
            }
        }
        if (!placed)
            throw PackingInfeasibleError("could not place spin " + std::to_string(k) + " after " +
                                         std::to_string(proposal_budget) + " proposals");
    }
    return g;
}

inline SpinGraph generate_graph(int num_spins, std::uint64_t seed) {
    return generate_graph(num_spins, default_edge_length(num_spins), 0.9, 1.1, seed);
}

/// Checks the placement constraints; returns an empty string when valid.
inline std::string graph_violation(const SpinGraph &g) {
    const std::size_t n = g.size();
    for (std::size_t k = 0; k < n; ++k) {
        for (double c : g.positions[k])
            if (c < 0.0 || c > g.edge_length) return "spin " + std::to_string(k) + " outside the cube";
        bool has_neighbor = false;
        for (std::size_t l = 0; l < n; ++l) {
            if (l == k) continue;
            const double d = distance(g.positions[k], g.positions[l]);
            if (d < g.r_min) return "spins " + std::to_string(k) + "," + std::to_string(l) + " closer than r_min";
            if (d <= g.r_max) has_neighbor = true;
        }
        if (!has_neighbor) return "spin " + std::to_string(k) + " has no neighbor within r_max";
    }
    return {};
}

enum class CouplingModel { kIsotropic, kAngular };

constexpr std::string_view to_string(CouplingModel m) noexcept {
    return m == CouplingModel::kIsotropic ? "isotropic" : "angular";
}

/// Symmetric pairwise couplings, normalized so the median |B_kl| over k < l
/// equals `j_median`.
struct CouplingSet {
    int num_spins = 0;
    Eigen::MatrixXd b;  // zero diagonal
    double j_median = 0.0;
    double j_mean = 0.0;
    CouplingModel model = CouplingModel::kIsotropic;

    double operator()(int k, int l) const { return b(k, l); }
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

inline double angular_factor(const Vec3 &a, const Vec3 &b) {
    const double r = distance(a, b);
    const double cos_theta = (b[2] - a[2]) / r;
    return 0.5 * (3.0 * cos_theta * cos_theta - 1.0);
}

inline CouplingSet compute_couplings(const SpinGraph &graph, double j_target,
                                     CouplingModel model = CouplingModel::kIsotropic) {
    const int n = static_cast<int>(graph.size());
    if (n < 2) throw ArgumentError("couplings need at least two spins");
    if (!(j_target > 0.0)) throw ArgumentError("target median coupling must be positive");
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> magnitudes, radial;
    for (int k = 0; k < n; ++k) {
        for (int l = k + 1; l < n; ++l) {
            const double r = distance(graph.positions[k], graph.positions[l]);
            if (!(r > 0.0)) throw ArgumentError("coincident spins");
            double v = 1.0 / (r * r * r);
            radial.push_back(v);
            if (model == CouplingModel::kAngular) v *= angular_factor(graph.positions[k], graph.positions[l]);
            raw(k, l) = raw(l, k) = v;
            magnitudes.push_back(std::abs(v));
        }
    }
    const double med = median_of(magnitudes);
    if (!(med > 1e-12 * median_of(radial)))
        throw NormalizationError("median coupling is zero; cannot normalize");
    CouplingSet out;
    out.num_spins = n;
    out.model = model;
    out.b = raw * (j_target / med);
    std::vector<double> scaled;
    scaled.reserve(magnitudes.size());
    for (double m : magnitudes) scaled.push_back(m * (j_target / med));
    out.j_median = median_of(scaled);
    out.j_mean = std::accumulate(scaled.begin(), scaled.end(), 0.0) / static_cast<double>(scaled.size());
    return out;
}

/// Couplings given explicitly, e.g. B = 0 for the non-interacting limit.
inline CouplingSet couplings_from_matrix(const Eigen::MatrixXd &b, CouplingModel model = CouplingModel::kIsotropic) {
    if (b.rows() != b.cols() || b.rows() < 1) throw ArgumentError("coupling matrix must be square");
    const int n = static_cast<int>(b.rows());
    CouplingSet out;
    out.num_spins = n;
    out.model = model;
    out.b = 0.5 * (b + b.transpose());
    out.b.diagonal().setZero();
    std::vector<double> mags;
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) mags.push_back(std::abs(out.b(k, l)));
    out.j_median = median_of(mags);
    out.j_mean = mags.empty() ? 0.0 : std::accumulate(mags.begin(), mags.end(), 0.0) / static_cast<double>(mags.size());
    return out;
}

inline constexpr int kDefaultMaxSpins = 14;

/// One magnetization sector of H_dd with its eigendecomposition.
struct Sector {
    int down_count = 0;                 // number of down spins
    std::vector<std::uint32_t> states;  // basis indices, ascending
    Eigen::MatrixXd block;              // H restricted to the sector
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;            // columns are eigenvectors (real)
};

class Hamiltonian {
   public:
    int num_spins() const noexcept { return num_spins_; }
    std::size_t dimension() const noexcept { return std::size_t{1} << num_spins_; }
    const CouplingSet &couplings() const noexcept { return couplings_; }
    const std::vector<Sector> &sectors() const noexcept { return sectors_; }
    bool diagonalized() const noexcept { return diagonalized_; }

    /// Dense 2^N x 2^N matrix; intended for small systems and tests.
    Eigen::MatrixXd dense() const {
        const auto dim = static_cast<Eigen::Index>(dimension());
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        for (const Sector &s : sectors_)
            for (std::size_t a = 0; a < s.states.size(); ++a)
                for (std::size_t b = 0; b < s.states.size(); ++b)
                    h(s.states[a], s.states[b]) = s.block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        return h;
    }

    /// Spectrum over all sectors, ascending.
    std::vector<double> eigenvalues() const {
        std::vector<double> out;
        out.reserve(dimension());
        for (const Sector &s : sectors_)
            for (Eigen::Index i = 0; i < s.energies.size(); ++i) out.push_back(s.energies[i]);
        std::sort(out.begin(), out.end());
        return out;
    }

    double diagonal_element(std::uint32_t state) const {
        double e = 0.0;
        for (int k = 0; k < num_spins_; ++k)
            for (int l = k + 1; l < num_spins_; ++l) {
                const bool same = ((state >> k) & 1U) == ((state >> l) & 1U);
                e += couplings_.b(k, l) * (same ? 0.5 : -0.5);
            }
        return e;
    }

   private:
    friend Hamiltonian build_hamiltonian(const CouplingSet &, int, bool);

    int num_spins_ = 0;
    CouplingSet couplings_;
    std::vector<Sector> sectors_;
    bool diagonalized_ = false;
};

/// Builds H_dd. In the z basis the diagonal is 2 B_kl m_k m_l = +-B_kl/2 and
/// each anti-aligned pair has a flip-flop element -B_kl/2.
inline Hamiltonian build_hamiltonian(const CouplingSet &couplings, int max_spins = kDefaultMaxSpins,
                                     bool diagonalize = true) {
    const int n = couplings.num_spins;
    if (n < 1) throw ArgumentError("Hamiltonian needs at least one spin");
    if (n > max_spins || n > 30)
        throw DimensionError(std::to_string(n) + " spins exceeds the configured cap of " + std::to_string(max_spins));
    Hamiltonian h;
    h.num_spins_ = n;
    h.couplings_ = couplings;
    const std::uint32_t dim = 1U << n;
    h.sectors_.resize(static_cast<std::size_t>(n) + 1);
    std::vector<std::uint32_t> local(dim);
    for (int d = 0; d <= n; ++d) h.sectors_[d].down_count = d;
    for (std::uint32_t s = 0; s < dim; ++s) {
        auto &sec = h.sectors_[static_cast<std::size_t>(std::popcount(s))];
        local[s] = static_cast<std::uint32_t>(sec.states.size());
        sec.states.push_back(s);
    }
    for (Sector &sec : h.sectors_) {
        const auto size = static_cast<Eigen::Index>(sec.states.size());
        sec.block = Eigen::MatrixXd::Zero(size, size);
        for (Eigen::Index a = 0; a < size; ++a) {
            const std::uint32_t s = sec.states[static_cast<std::size_t>(a)];
            sec.block(a, a) = h.diagonal_element(s);
            for (int k = 0; k < n; ++k)
                for (int l = k + 1; l < n; ++l) {
                    if (((s >> k) & 1U) == ((s >> l) & 1U)) continue;
                    const std::uint32_t t = s ^ (1U << k) ^ (1U << l);
                    sec.block(a, local[t]) += -0.5 * couplings.b(k, l);
                }
        }
        if (diagonalize) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sec.block);
            if (solver.info() != Eigen::Success) throw NumericalIntegrityError("sector eigendecomposition failed");
            sec.energies = solver.eigenvalues();
            sec.vectors = solver.eigenvectors();
        }
    }
    h.diagonalized_ = diagonalize;
    return h;
}

}  // namespace rondeau

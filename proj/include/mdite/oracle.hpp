// Copyright 2026 The MDITE Authors
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

// Exact density-matrix reference for the measurement-dressed imaginary-time
// evolution on small systems. All operators involved are real symmetric in the
// Z basis, so states are stored as real matrices.
//
// Basis convention: bit i of the basis index set <=> site i is spin down (-1).

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/model.hpp"

namespace mdite::oracle {

constexpr int kDefaultSiteCap = 12;
constexpr int kPatternFlagCap = 20;

using Matrix = Eigen::MatrixXd;

inline int8_t basis_spin(uint64_t state, int site) { return ((state >> site) & 1U) ? int8_t{-1} : int8_t{1}; }

inline std::vector<int8_t> basis_spins(uint64_t state, int n_sites) {
    std::vector<int8_t> spins(n_sites);
    for (int i = 0; i < n_sites; ++i) spins[i] = basis_spin(state, i);
    return spins;
}

struct DenseState {
    int n_sites = 0;
    Matrix rho;

    static DenseState maximally_mixed(int n_sites) {
        const Eigen::Index dim = Eigen::Index{1} << n_sites;
        return DenseState{n_sites, Matrix::Identity(dim, dim) / static_cast<double>(dim)};
    }

    Eigen::Index dim() const { return rho.rows(); }
    double trace() const { return rho.trace(); }
    double hermiticity_error() const { return (rho - rho.transpose()).cwiseAbs().maxCoeff(); }
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(rho, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }
};

/// 1/2 ||a - b||_1
inline double trace_distance(const Matrix &a, const Matrix &b) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

inline void check_capacity(const ModelSpec &model, int cap) {
    if (model.n_sites() > cap)
        throw Error(ErrorKind::Capacity, "dense oracle limited to " + std::to_string(cap) + " sites, model has " +
                                             std::to_string(model.n_sites()));
}

inline Matrix build_hamiltonian_matrix(const ModelSpec &model, int cap = kDefaultSiteCap) {
    model.validate();
    check_capacity(model, cap);
    const int n = model.n_sites();
    const Eigen::Index dim = Eigen::Index{1} << n;
    Matrix H = Matrix::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) {
        const auto state = static_cast<uint64_t>(s);
        for (const Bond &bond : model.lattice.bonds) {
            const double jb = model.coupling(bond);
            const int sa = basis_spin(state, bond.a), sb = basis_spin(state, bond.b);
            if (model.kind == ModelKind::Tfim) {
                H(s, s) -= jb * sa * sb;
            } else {
                H(s, s) += 0.25 * jb * sa * sb;
                if (sa != sb) {
                    const uint64_t flipped = state ^ ((uint64_t{1} << bond.a) | (uint64_t{1} << bond.b));
                    H(static_cast<Eigen::Index>(flipped), s) += 0.5 * jb;
                }
            }
        }
        if (model.kind == ModelKind::Tfim && model.h != 0.0) {
            for (int i = 0; i < n; ++i) H(static_cast<Eigen::Index>(state ^ (uint64_t{1} << i)), s) -= model.h;
        }
    }
    return H;
}

/// exp(-t H) for real symmetric H.
inline Matrix ite_propagator(const Matrix &H, double t) {
    if (H.rows() != H.cols()) throw Error(ErrorKind::Contract, "propagator needs a square matrix");
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(ErrorKind::Contract, "propagator input is not Hermitian");
    if (t < 0.0) throw Error(ErrorKind::Contract, "propagation time must be >= 0");
    if (t == 0.0) return Matrix::Identity(H.rows(), H.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(H);
    const Eigen::VectorXd weights = (-t * solver.eigenvalues().array()).exp().matrix();
    Matrix out = solver.eigenvectors() * weights.asDiagonal() * solver.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

/// Measurement-averaged map on every site in `site_mask`:
/// rho -> (1-p) rho + p sum_s P_s rho P_s. Elements whose row and column
/// indices differ on k masked sites pick up (1-p)^k.
inline void dephase_in_place(Matrix &rho, double p, uint64_t site_mask) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Contract, "measurement rate must lie in [0, 1]");
    if (p == 0.0 || site_mask == 0) return;
    const int max_k = std::popcount(site_mask);
    std::vector<double> factor(max_k + 1, 1.0);
    for (int k = 1; k <= max_k; ++k) factor[k] = factor[k - 1] * (1.0 - p);
    for (Eigen::Index c = 0; c < rho.cols(); ++c)
        for (Eigen::Index r = 0; r < rho.rows(); ++r) {
            const uint64_t diff = (static_cast<uint64_t>(r) ^ static_cast<uint64_t>(c)) & site_mask;
            if (diff) rho(r, c) *= factor[std::popcount(diff)];
        }
}

inline uint64_t all_sites_mask(int n_sites) {
    return n_sites >= 64 ? ~uint64_t{0} : (uint64_t{1} << n_sites) - 1;
}

inline uint64_t mask_of(const std::vector<int> &sites) {
    uint64_t mask = 0;
    for (int s : sites) mask |= uint64_t{1} << s;
    return mask;
}

inline DenseState dephase_channel(DenseState state, double p, const std::vector<int> &sites) {
    dephase_in_place(state.rho, p, mask_of(sites));
    return state;
}

/// One protocol layer with a fixed propagator: dephase at rate p (optionally a
/// different rate on a subset of sites), sandwich with exp(-tau H / 2) and
/// return the trace that was divided out.
class LayerMap {
   public:
    LayerMap(const ModelSpec &model, double tau, int cap = kDefaultSiteCap)
        : n_sites_(model.n_sites()), half_step_(ite_propagator(build_hamiltonian_matrix(model, cap), 0.5 * tau)) {}

    int n_sites() const { return n_sites_; }
    const Matrix &half_step() const { return half_step_; }

    /// Returns log of the normalization N_k.
    double apply(Matrix &rho, double p, uint64_t full_dephase_mask = 0) const {
        dephase_in_place(rho, p, all_sites_mask(n_sites_) & ~full_dephase_mask);
        dephase_in_place(rho, 1.0, full_dephase_mask);
        rho = half_step_ * rho * half_step_;
        const double tr = rho.trace();
        if (!(tr > 1e-300)) throw Error(ErrorKind::Numeric, "trace underflow in layer map");
        rho /= tr;
        rho = 0.5 * (rho + rho.transpose());
        return std::log(tr);
    }

   private:
    int n_sites_;
    Matrix half_step_;
};

inline DenseState mdite_step(DenseState state, const ModelSpec &model, const ProtocolParams &protocol) {
    if (!(protocol.p >= 0.0 && protocol.p <= 1.0)) throw Error(ErrorKind::Contract, "p must lie in [0, 1]");
    if (protocol.tau < 0.0) throw Error(ErrorKind::Contract, "tau must be >= 0");
    LayerMap layer(model, protocol.tau);
    layer.apply(state.rho, protocol.p);
    return state;
}

/// rho_{n_d} starting from the maximally mixed state, plus the accumulated
/// log normalization (log of Tr of the unnormalized evolution with rho_0 = I/2^N).
struct Evolution {
    DenseState state;
    double log_norm = 0.0;
};

inline Evolution evolve(const ModelSpec &model, const ProtocolParams &protocol, int cap = kDefaultSiteCap) {
    protocol.validate();
    LayerMap layer(model, protocol.tau, cap);
    Evolution out{DenseState::maximally_mixed(model.n_sites()), 0.0};
    for (int k = 0; k < protocol.n_layers; ++k) out.log_norm += layer.apply(out.state.rho, protocol.p);
    return out;
}

/// exp(-beta H) / Z
inline DenseState thermal_state(const ModelSpec &model, double beta, int cap = kDefaultSiteCap) {
    Matrix rho = ite_propagator(build_hamiltonian_matrix(model, cap), beta);
    rho /= rho.trace();
    return DenseState{model.n_sites(), rho};
}

struct StationaryResult {
    DenseState state;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Iterates the layer map from I/2^N until the trace distance between
/// consecutive states drops below `tol`.
inline StationaryResult iterate_to_stationary(const ModelSpec &model, const ProtocolParams &protocol,
                                              double tol = 1e-10, int max_iters = 10000,
                                              int cap = kDefaultSiteCap) {
    if (!(tol > 0.0)) throw Error(ErrorKind::Contract, "tolerance must be > 0");
    LayerMap layer(model, protocol.tau, cap);
    StationaryResult out{DenseState::maximally_mixed(model.n_sites()), 0, 0.0, false};
    for (int k = 1; k <= max_iters; ++k) {
        Matrix previous = out.state.rho;
        layer.apply(out.state.rho, protocol.p);
        out.iterations = k;
        out.residual = trace_distance(out.state.rho, previous);
        if (out.residual < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

struct ExactObservables {
    double m_mean = 0.0;
    double m_abs = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
    double binder = 0.0;
};

/// Moments of the (uniform or staggered) Z magnetization over the diagonal
/// distribution q(s) = rho[s, s].
inline ExactObservables exact_observables(const DenseState &state, const ModelSpec &model) {
    if (state.n_sites != model.n_sites()) throw Error(ErrorKind::Shape, "state and model sizes differ");
    ExactObservables obs;
    for (Eigen::Index s = 0; s < state.dim(); ++s) {
        const double q = state.rho(s, s);
        const double m = magnetization(basis_spins(static_cast<uint64_t>(s), model.n_sites()), model);
        obs.m_mean += q * m;
        obs.m_abs += q * std::abs(m);
        obs.m2 += q * m * m;
        obs.m4 += q * m * m * m * m;
    }
    if (!(obs.m2 > 0.0)) throw Error(ErrorKind::DegenerateData, "<m^2> vanishes; Binder ratio undefined");
    obs.binder = obs.m4 / (obs.m2 * obs.m2);
    return obs;
}

/// Flags of one extended-ensemble member. Level l = 1..n_layers-1 is the
/// measurement point between layer l and layer l+1.
struct MeasurementPattern {
    int n_sites = 0;
    int n_levels = 0;
    std::vector<uint8_t> measured;  // [(level - 1) * n_sites + site]

    bool at(int site, int level) const { return measured[(level - 1) * n_sites + site] != 0; }
    uint64_t level_mask(int level) const {
        uint64_t mask = 0;
        for (int i = 0; i < n_sites; ++i)
            if (at(i, level)) mask |= uint64_t{1} << i;
        return mask;
    }
    int count() const {
        int c = 0;
        for (uint8_t f : measured) c += f;
        return c;
    }
};

/// Probabilities of every measurement pattern in the extended ensemble:
/// P(A) ∝ prod_l p^|A_l| (1-p)^(N-|A_l|) Q(A), with Q computed by the
/// deterministic pattern-resolved channel. Pattern code packs level l's site
/// mask into bits [(l-1)N, lN).
struct PatternDistribution {
    int n_sites = 0;
    int n_levels = 0;
    std::vector<double> probability;

    MeasurementPattern pattern(uint64_t code) const {
        MeasurementPattern pat{n_sites, n_levels, std::vector<uint8_t>(static_cast<size_t>(n_sites) * n_levels)};
        for (size_t bit = 0; bit < pat.measured.size(); ++bit) pat.measured[bit] = (code >> bit) & 1U;
        return pat;
    }

    /// P(site measured at level)
    double marginal(int site, int level) const {
        const int bit = (level - 1) * n_sites + site;
        double total = 0.0;
        for (size_t code = 0; code < probability.size(); ++code)
            if ((code >> bit) & 1U) total += probability[code];
        return total;
    }

    double total() const {
        double t = 0.0;
        for (double p : probability) t += p;
        return t;
    }
};

inline PatternDistribution enumerate_pattern_distribution(const ModelSpec &model, const ProtocolParams &protocol) {
    protocol.validate();
    const int n = model.n_sites();
    const int levels = protocol.n_layers - 1;
    const int flags = n * levels;
    if (flags > kPatternFlagCap)
        throw Error(ErrorKind::Capacity, "pattern enumeration limited to " + std::to_string(kPatternFlagCap) +
                                             " flags, requested " + std::to_string(flags));
    LayerMap layer(model, protocol.tau);
    const uint64_t subsets = uint64_t{1} << n;
    std::vector<double> log_weight(uint64_t{1} << flags, -std::numeric_limits<double>::infinity());
    const double log_p = std::log(protocol.p), log_q = std::log1p(-protocol.p);
    auto binomial_log = [&](uint64_t mask) {
        const int k = std::popcount(mask);
        double w = 0.0;
        if (k > 0) w += k * log_p;
        if (n - k > 0) w += (n - k) * log_q;
        return w;
    };

    // Depth-first over levels so patterns sharing a prefix share its evolution.
    const Matrix start = DenseState::maximally_mixed(n).rho;
    std::vector<Matrix> stack(levels + 1);
    std::vector<double> stack_log(levels + 1, 0.0);
    stack[0] = start;
    stack_log[0] = layer.apply(stack[0], 0.0);  // layer 1: dephasing I/2^N is trivial
    auto recurse = [&](auto &&self, int level, uint64_t code, double logw) -> void {
        if (level > levels) {
            log_weight[code] = logw + stack_log[level - 1];
            return;
        }
        for (uint64_t mask = 0; mask < subsets; ++mask) {
            const double wl = binomial_log(mask);
            if (!std::isfinite(wl)) continue;  // zero-probability branch at p = 0 or 1
            stack[level] = stack[level - 1];
            stack_log[level] = stack_log[level - 1] + layer.apply(stack[level], 0.0, mask);
            self(self, level + 1, code | (mask << ((level - 1) * n)), logw + wl);
        }
    };
    recurse(recurse, 1, 0, 0.0);

    PatternDistribution out{n, levels, std::vector<double>(log_weight.size(), 0.0)};
    double peak = -std::numeric_limits<double>::infinity();
    for (double lw : log_weight) peak = std::max(peak, lw);
    double norm = 0.0;
    for (size_t c = 0; c < log_weight.size(); ++c) {
        out.probability[c] = std::isfinite(log_weight[c]) ? std::exp(log_weight[c] - peak) : 0.0;
        norm += out.probability[c];
    }
    for (double &pr : out.probability) pr /= norm;
    return out;
}

/// P(site measured at level) without enumerating patterns: by linearity the
/// ensemble restricted to "site i measured at level l" is the averaged channel
/// with that one site fully dephased at that level, weighted by p.
inline Eigen::MatrixXd flag_marginals(const ModelSpec &model, const ProtocolParams &protocol,
                                      int cap = kDefaultSiteCap) {
    protocol.validate();
    const int n = model.n_sites();
    const int levels = protocol.n_layers - 1;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, std::max(levels, 0));
    if (levels <= 0 || protocol.p == 0.0) return out;
    LayerMap layer(model, protocol.tau, cap);

    // Base chain, remembering rho_l (before the dephasing at level l).
    std::vector<Matrix> before(levels + 1);
    std::vector<double> log_before(levels + 1, 0.0);
    Matrix rho = DenseState::maximally_mixed(n).rho;
    double log_norm = layer.apply(rho, protocol.p);
    for (int l = 1; l <= levels; ++l) {
        before[l] = rho;
        log_before[l] = log_norm;
        log_norm += layer.apply(rho, protocol.p);
    }
    const double log_total = log_norm;
    for (int l = 1; l <= levels; ++l) {
        for (int i = 0; i < n; ++i) {
            Matrix r = before[l];
            double lg = log_before[l] + layer.apply(r, protocol.p, uint64_t{1} << i);
            for (int k = l + 1; k <= levels; ++k) lg += layer.apply(r, protocol.p);
            out(i, l - 1) = protocol.p * std::exp(lg - log_total);
        }
    }
    return out;
}

}  // namespace mdite::oracle

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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "mdite/oracle.hpp"

using namespace mdite;
using namespace mdite::oracle;

namespace {

ModelSpec single_spin(double h) {
    return ModelSpec{ModelKind::Tfim, build_explicit_lattice(1, {}), h, 0.0, 1.0};
}

ModelSpec heisenberg_pair() {
    return ModelSpec{ModelKind::Cdhm, build_explicit_lattice(2, {{0, 1}}, {{0, 0}, {1, 0}}), 0.0, 1.0, 1.0};
}

// Reference built from Kronecker products and a generic matrix exponential.
// Operator order is kron(site N-1, ..., site 0), matching bit i for site i.
struct KronReference {
    int n;
    Matrix I2 = Matrix::Identity(2, 2);
    Matrix X{{0, 1}, {1, 0}};
    Matrix Z{{1, 0}, {0, -1}};
    Matrix P_up{{1, 0}, {0, 0}};
    Matrix P_dn{{0, 0}, {0, 1}};

    Matrix on_site(const Matrix &op, int site) const {
        Matrix out = Matrix::Identity(1, 1);
        for (int i = n - 1; i >= 0; --i) {
            const Matrix &f = i == site ? op : I2;
            Matrix next(out.rows() * 2, out.cols() * 2);
            for (int r = 0; r < out.rows(); ++r)
                for (int c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * f;
            out = next;
        }
        return out;
    }

    Matrix tfim(const ModelSpec &m) const {
        const Eigen::Index d = Eigen::Index{1} << n;
        Matrix H = Matrix::Zero(d, d);
        for (const Bond &b : m.lattice.bonds) H -= m.coupling(b) * on_site(Z, b.a) * on_site(Z, b.b);
        for (int i = 0; i < n; ++i) H -= m.h * on_site(X, i);
        return H;
    }

    Matrix dephase_fully(const Matrix &rho, int site) const {
        const Matrix up = on_site(P_up, site), dn = on_site(P_dn, site);
        return up * rho * up + dn * rho * dn;
    }
};

}  // namespace

TEST(Hamiltonian, SingleSpinIsMinusHX) {
    const Matrix H = build_hamiltonian_matrix(single_spin(2.0));
    const Matrix expected{{0, -2}, {-2, 0}};
    EXPECT_LT((H - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Hamiltonian, TwoSiteChainGroundEnergy) {
    const Matrix H = build_hamiltonian_matrix(make_tfim(2, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    EXPECT_NEAR(es.eigenvalues().minCoeff(), -2.0, 1e-12);
}

TEST(Hamiltonian, HeisenbergPairSpectrum) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(build_hamiltonian_matrix(heisenberg_pair()));
    const Eigen::VectorXd ev = es.eigenvalues();
    EXPECT_NEAR(ev(0), -0.75, 1e-12);
    for (int k = 1; k < 4; ++k) EXPECT_NEAR(ev(k), 0.25, 1e-12);
}

TEST(Hamiltonian, MatchesKroneckerReference) {
    const ModelSpec m = make_tfim(4, 0.7);
    KronReference ref{4};
    EXPECT_LT((build_hamiltonian_matrix(m) - ref.tfim(m)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hamiltonian, CapacityError) {
    try {
        build_hamiltonian_matrix(make_tfim(13, 1.0));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Capacity);
    }
    EXPECT_NO_THROW(check_capacity(make_tfim(13, 1.0), 14));
}

TEST(Propagator, ZeroTimeIsIdentity) {
    const Matrix H = build_hamiltonian_matrix(make_tfim(3, 1.0));
    EXPECT_LT((ite_propagator(H, 0.0) - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Propagator, SingleSpinClosedForm) {
    const double t = 0.5;
    const Matrix U = ite_propagator(build_hamiltonian_matrix(single_spin(1.0)), t);
    EXPECT_NEAR(U(0, 0), std::cosh(t), 1e-12);
    EXPECT_NEAR(U(0, 1), std::sinh(t), 1e-12);
}

TEST(Propagator, Semigroup) {
    const Matrix H = build_hamiltonian_matrix(make_tfim(3, 0.8));
    const Matrix lhs = ite_propagator(H, 0.3) * ite_propagator(H, 0.45);
    const Matrix rhs = ite_propagator(H, 0.75);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Propagator, MatchesMatrixExponential) {
    const Matrix H = build_hamiltonian_matrix(heisenberg_pair());
    const Matrix ref = (-0.9 * H).exp();
    EXPECT_LT((ite_propagator(H, 0.9) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Propagator, RejectsNonHermitian) {
    Matrix H{{0, 1}, {0, 0}};
    try {
        ite_propagator(H, 1.0);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Contract);
    }
}

TEST(Dephasing, RateZeroIsIdentity) {
    const DenseState s = evolve(make_tfim(2, 1.0), ProtocolParams{1.0, 0.0, 2}).state;
    const DenseState d = dephase_channel(s, 0.0, {0, 1});
    EXPECT_EQ((d.rho - s.rho).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dephasing, RateOneKeepsDiagonal) {
    const DenseState s = evolve(make_tfim(3, 1.0), ProtocolParams{1.0, 0.0, 2}).state;
    const DenseState d = dephase_channel(s, 1.0, {0, 1, 2});
    Matrix diag = s.rho.diagonal().asDiagonal();
    EXPECT_LT((d.rho - diag).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dephasing, HalfRateOnPlusState) {
    DenseState plus{1, Matrix::Constant(2, 2, 0.5)};
    const DenseState d = dephase_channel(plus, 0.5, {0});
    EXPECT_DOUBLE_EQ(d.rho(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(d.rho(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(d.rho(1, 0), 0.25);
}

TEST(Dephasing, FullRateIdempotent) {
    const DenseState s = evolve(make_tfim(3, 1.3), ProtocolParams{0.7, 0.0, 3}).state;
    const DenseState once = dephase_channel(s, 1.0, {0, 2});
    const DenseState twice = dephase_channel(once, 1.0, {0, 2});
    EXPECT_EQ((once.rho - twice.rho).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dephasing, MatchesProjectorSum) {
    const DenseState s = evolve(make_tfim(3, 1.1), ProtocolParams{0.9, 0.0, 2}).state;
    KronReference ref{3};
    const Matrix expected = 0.6 * s.rho + 0.4 * ref.dephase_fully(s.rho, 1);
    EXPECT_LT((dephase_channel(s, 0.4, {1}).rho - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dephasing, RejectsBadRate) { EXPECT_THROW(dephase_channel(DenseState::maximally_mixed(1), 1.5, {0}), Error); }

TEST(Step, SingleSpinFromMixed) {
    const double h = 1.0, tau = 0.8;
    const DenseState s = mdite_step(DenseState::maximally_mixed(1), single_spin(h), ProtocolParams{tau, 0.3, 1});
    EXPECT_NEAR(s.rho(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(s.rho(0, 1), 0.5 * std::tanh(tau * h), 1e-14);
}

TEST(Step, FullMeasurementResets) {
    const ModelSpec m = single_spin(1.0);
    const ProtocolParams pr{0.8, 1.0, 1};
    const DenseState a = mdite_step(DenseState::maximally_mixed(1), m, pr);
    const DenseState b = mdite_step(a, m, pr);
    EXPECT_LT((a.rho - b.rho).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Stationary, SingleSpinFixedPoint) {
    // off-diagonal a' = (s/2 + (1-p) a c) / (c + 2 (1-p) a s), c = cosh(tau h), s = sinh(tau h)
    const double tau = 0.6, h = 1.0, p = 0.4;
    const double c = std::cosh(tau * h), s = std::sinh(tau * h), q = 1.0 - p;
    double a = 0.0;
    for (int k = 0; k < 2000; ++k) a = (0.5 * s + q * a * c) / (c + 2 * q * a * s);
    const StationaryResult r = iterate_to_stationary(single_spin(h), ProtocolParams{tau, p, 1}, 1e-13);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.state.rho(0, 1), a, 1e-11);
}

TEST(Stationary, NoMeasurementApproachesGroundState) {
    const ModelSpec m = make_tfim(4, 0.6);
    const StationaryResult r = iterate_to_stationary(m, ProtocolParams{1.0, 0.0, 1}, 1e-12);
    ASSERT_TRUE(r.converged);
    Eigen::SelfAdjointEigenSolver<Matrix> es(build_hamiltonian_matrix(m));
    const Eigen::VectorXd g = es.eigenvectors().col(0);
    EXPECT_NEAR(g.transpose() * r.state.rho * g, 1.0, 1e-9);
}

TEST(Stationary, DepthConvergence) {
    const ModelSpec m = make_tfim(4, 1.8);
    const StationaryResult r = iterate_to_stationary(m, ProtocolParams{1.0, 0.66, 1}, 1e-12);
    ASSERT_TRUE(r.converged);
    const DenseState deep = evolve(m, ProtocolParams{1.0, 0.66, r.iterations + 20}).state;
    EXPECT_LT(trace_distance(deep.rho, r.state.rho), 1e-10);
}

TEST(Observables, MaximallyMixed) {
    const ExactObservables o = exact_observables(DenseState::maximally_mixed(4), make_tfim(4, 1.0));
    EXPECT_NEAR(o.m_mean, 0.0, 1e-14);
    EXPECT_NEAR(o.m2, 4.0, 1e-13);
    EXPECT_NEAR(o.m4, 40.0, 1e-12);
    EXPECT_NEAR(o.binder, 2.5, 1e-13);
}

TEST(Observables, GhzHasUnitBinder) {
    DenseState ghz{4, Matrix::Zero(16, 16)};
    ghz.rho(0, 0) = ghz.rho(15, 15) = ghz.rho(0, 15) = ghz.rho(15, 0) = 0.5;
    const ExactObservables o = exact_observables(ghz, make_tfim(4, 1.0));
    EXPECT_NEAR(o.binder, 1.0, 1e-14);
    EXPECT_NEAR(o.m_abs, 4.0, 1e-14);
}

TEST(Observables, StaggeredNeelState) {
    const ModelSpec m = make_cdhm(2, 2, 1.0);
    DenseState s{4, Matrix::Zero(16, 16)};
    uint64_t neel = 0;
    for (int i = 0; i < 4; ++i)
        if (m.lattice.stagger_sign(i) < 0) neel |= uint64_t{1} << i;
    s.rho(neel, neel) = 1.0;
    EXPECT_NEAR(exact_observables(s, m).m_mean, 4.0, 1e-14);
}

TEST(Observables, ZeroMomentIsDegenerate) {
    DenseState s{2, Matrix::Zero(4, 4)};
    s.rho(1, 1) = 1.0;  // m = 0
    try {
        exact_observables(s, make_tfim(2, 1.0));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateData);
    }
}

TEST(Patterns, NoMeasurementMassOnEmptyPattern) {
    const PatternDistribution d = enumerate_pattern_distribution(make_tfim(2, 1.0), ProtocolParams{1.0, 0.0, 3});
    EXPECT_NEAR(d.probability[0], 1.0, 1e-14);
}

TEST(Patterns, FullMeasurementMassOnFullPattern) {
    const PatternDistribution d = enumerate_pattern_distribution(make_tfim(2, 1.0), ProtocolParams{1.0, 1.0, 3});
    EXPECT_NEAR(d.probability.back(), 1.0, 1e-14);
}

TEST(Patterns, SumsToOne) {
    const PatternDistribution d = enumerate_pattern_distribution(make_tfim(3, 1.2), ProtocolParams{0.8, 0.35, 3});
    EXPECT_NEAR(d.total(), 1.0, 1e-12);
    for (double pr : d.probability) EXPECT_GE(pr, 0.0);
}

TEST(Patterns, TooManyFlags) {
    try {
        enumerate_pattern_distribution(make_tfim(4, 1.0), ProtocolParams{1.0, 0.5, 7});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Capacity);
    }
}

TEST(Patterns, TwoSiteMarginalAgainstReference) {
    const ModelSpec m = make_tfim(2, 1.0);
    const double tau = 1.0, p = 0.5;
    KronReference ref{2};
    const Matrix U = (-0.5 * tau * ref.tfim(m)).exp();
    const Matrix rho1 = U * Matrix::Identity(4, 4) / 4.0 * U;
    double weight[4], total = 0.0;
    for (int a = 0; a < 4; ++a) {
        Matrix r = rho1;
        for (int i = 0; i < 2; ++i)
            if (a & (1 << i)) r = ref.dephase_fully(r, i);
        weight[a] = p * p * (U * r * U).trace();  // p^k (1-p)^(2-k) with p = 1/2
        total += weight[a];
    }
    const double reference = (weight[1] + weight[3]) / total;
    const PatternDistribution d = enumerate_pattern_distribution(m, ProtocolParams{tau, p, 2});
    EXPECT_NEAR(d.marginal(0, 1), reference, 1e-12);
    EXPECT_NEAR(d.marginal(1, 1), reference, 1e-12);
    EXPECT_NEAR(reference, 0.4565665030725744, 1e-12);
}

TEST(Patterns, LinearityMatchesEnumeration) {
    const ModelSpec m = make_tfim(3, 1.4);
    const ProtocolParams pr{0.9, 0.45, 4};
    const PatternDistribution d = enumerate_pattern_distribution(m, pr);
    const Eigen::MatrixXd marg = flag_marginals(m, pr);
    for (int level = 1; level <= 3; ++level)
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(marg(i, level - 1), d.marginal(i, level), 1e-12);
}

TEST(Patterns, MarginalsIncreaseWithRate) {
    const ModelSpec m = make_tfim(3, 1.0);
    double last = -1.0;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double v = flag_marginals(m, ProtocolParams{1.0, p, 3})(0, 0);
        EXPECT_GT(v, last);
        last = v;
    }
}

TEST(Patterns, MarginalsAtExtremeRates) {
    const ModelSpec m = make_tfim(3, 1.0);
    EXPECT_EQ(flag_marginals(m, ProtocolParams{1.0, 0.0, 3}).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(flag_marginals(m, ProtocolParams{1.0, 1.0, 3}).minCoeff(), 1.0, 1e-12);
}

class StateInvariants : public ::testing::TestWithParam<std::tuple<double, double, int>> {};

TEST_P(StateInvariants, TracePositivityHermiticity) {
    const auto [tau, p, n_d] = GetParam();
    for (const ModelSpec &m : {make_tfim(4, 1.3), make_cdhm(2, 2, 2.0)}) {
        const DenseState s = evolve(m, ProtocolParams{tau, p, n_d}).state;
        EXPECT_NEAR(s.trace(), 1.0, 1e-12);
        EXPECT_LT(s.hermiticity_error(), 1e-14);
        EXPECT_GT(s.min_eigenvalue(), -1e-12);
        EXPECT_GE(exact_observables(s, m).binder, 1.0 - 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(Grid, StateInvariants,
                         ::testing::Combine(::testing::Values(0.1, 1.0, 3.0), ::testing::Values(0.0, 0.5, 1.0),
                                            ::testing::Values(1, 5)));

TEST(Thermal, UnitBetaMatchesPropagator) {
    const ModelSpec m = make_tfim(3, 0.9);
    const Matrix U = ite_propagator(build_hamiltonian_matrix(m), 2.0);
    const DenseState t = thermal_state(m, 2.0);
    EXPECT_LT((t.rho - U / U.trace()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Thermal, UnmeasuredEvolutionIsThermal) {
    const ModelSpec m = make_tfim(4, 1.1);
    const DenseState a = evolve(m, ProtocolParams{0.5, 0.0, 6}).state;
    const DenseState b = thermal_state(m, 3.0);
    EXPECT_LT(trace_distance(a.rho, b.rho), 1e-12);
}

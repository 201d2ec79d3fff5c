#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "logspect/feasibility.hpp"
#include "logspect/solvers.hpp"
#include "oracles.hpp"

using namespace logspect;

namespace {

CovarianceEstimate diag2(double h11, double h22) {
    return CovarianceEstimate::exact((Matrix(2, 2) << h11, 0, 0, h22).finished());
}

SolverConfig tight(double alpha, double delta) {
    SolverConfig c;
    c.alpha = alpha;
    c.delta = delta;
    c.eps_primal = c.eps_dual = 1e-9;
    c.max_iters = 200000;
    return c;
}

CovarianceEstimate sample_instance(Index m, std::uint64_t seed, long long n = 50) {
    const auto g = generate(GraphEnsembleSpec{GraphFamily::ER, m, 0.5, seed});
    return sample_covariance(sample_signals(FilterSpec::quadratic(), g, n, seed + 1000));
}

double initial_commutator(const CovarianceEstimate& cov) {
    const Index m = cov.nodes();
    const Matrix S0 = (Matrix::Ones(m, m) - Matrix::Identity(m, m)) / static_cast<double>(m - 1);
    return CommutatorOp(cov.matrix()).apply(S0).norm();
}

}  // namespace

TEST(SolverConfig, Validation) {
    SolverConfig c;
    c.alpha = 0;
    EXPECT_THROW(c.validate(3, 1.0), ParameterError);
    c = {};
    c.delta = -1;
    EXPECT_THROW(c.validate(3, 1.0), ParameterError);
    c = {};
    c.tau = 3.5;
    EXPECT_THROW(c.validate(3, 1.0), ParameterError);
    c.tau = 4.5;
    EXPECT_NO_THROW(c.validate(3, 1.0));
    c.tau = 1.0;
    c.allow_unsafe_tau = true;
    EXPECT_NO_THROW(c.validate(3, 1.0));
    EXPECT_DOUBLE_EQ(SolverConfig::default_tau(4, 2.0), 1.05 * 8.0);
}

TEST(Objective, SentinelOnZeroDegree) {
    EXPECT_EQ(logspect_objective(AdjacencyMatrix::empty(3), 1.0), std::numeric_limits<double>::infinity());
    const auto g = AdjacencyMatrix(2, (Vector(1) << 1.0).finished());
    EXPECT_DOUBLE_EQ(logspect_objective(g, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(logspect_objective(g.dense(), 1.0), 2.0);
}

TEST(RLogSpecT, TwoNodeCommutingCovariance) {
    const auto r = solve_rlogspect(diag2(2.0, 2.0), tight(1.0, 0.1));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.S_hat.weight(0, 1), 1.0, 1e-6);
    EXPECT_NEAR(r.objective, 2.0, 1e-6);
}

TEST(RLogSpecT, TwoNodeClosedForm) {
    for (double alpha : {0.5, 1.0, 2.0})
        for (double delta : {0.01, 0.3, 1.0, 5.0}) {
            const double h11 = 1.0, h22 = 3.0;
            const double s = std::min(alpha, delta / (std::sqrt(2.0) * std::abs(h11 - h22)));
            const auto r = solve_rlogspect(diag2(h11, h22), tight(alpha, delta));
            EXPECT_NEAR(r.S_hat.weight(0, 1), s, 1e-6) << alpha << " " << delta;
            EXPECT_NEAR(r.objective, 2 * s - 2 * alpha * std::log(s), 1e-5);
        }
}

TEST(RLogSpecT, ExactCovarianceWithZeroRadius) {
    const auto g = generate_ba(6, 3);
    const auto cov = true_covariance(FilterSpec::quadratic(), g);
    const auto r = solve_rlogspect(cov, tight(1.0, 0.0));
    EXPECT_TRUE(std::isfinite(r.objective));
    EXPECT_LE(r.commutator_norm, 1e-4 * cov.matrix().norm());
}

TEST(RLogSpecT, IterateInvariantsAndQUpdate) {
    const auto cov = sample_instance(6, 4);
    SolverConfig cfg = tight(1.0, 0.3 * initial_commutator(cov));
    cfg.normalize_covariance = false;
    cfg.max_iters = 3000;
    Vector d_prev = Vector::Constant(6, cfg.alpha);
    Vector lambda2_prev = Vector::Zero(6);
    long long checked = 0;
    double worst_q = 0.0;
    solve_rlogspect(cov, cfg, [&](const SolverState& st) {
        ASSERT_EQ(st.S, st.S.transpose());
        ASSERT_TRUE((st.S.diagonal().array() == 0.0).all());
        ASSERT_TRUE((st.S.array() >= 0.0).all());
        ASSERT_LE(st.Z.norm(), cfg.delta * (1 + 1e-12));
        ASSERT_TRUE((st.q.array() > 0.0).all());
        for (Index i = 0; i < 6; ++i) {
            const double cond = -cfg.alpha / st.q[i] + lambda2_prev[i] + st.rho * (st.q[i] - d_prev[i]);
            worst_q = std::max(worst_q, std::abs(cond) / (1 + std::abs(lambda2_prev[i]) + st.rho * std::abs(d_prev[i])));
        }
        d_prev = st.S.rowwise().sum();
        lambda2_prev = st.lambda2;
        ++checked;
    });
    EXPECT_GT(checked, 0);
    EXPECT_LT(worst_q, 1e-10);
}

TEST(RLogSpecT, L11Bound) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto cov = sample_instance(8, s, 100);
        for (double alpha : {0.5, 2.0}) {
            const auto r = solve_rlogspect(cov, tight(alpha, 0.2 * initial_commutator(cov)));
            EXPECT_LE(r.S_hat.l11_norm(), 1.01 * alpha * 8);
        }
    }
}

TEST(RLogSpecT, AlwaysFiniteForPositiveRadius) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 10; ++t) {
        const auto cov = CovarianceEstimate::exact(oracle::random_spd(7, rng));
        SolverConfig cfg;
        cfg.delta = 1e-3;
        cfg.max_iters = 5000;
        const auto r = solve_rlogspect(cov, cfg);
        EXPECT_TRUE(std::isfinite(r.objective));
        EXPECT_TRUE((r.S_hat.degrees().array() > 0.0).all());
    }
}

TEST(RLogSpecT, ConvergedObjectiveMatchesLongerRun) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto cov = sample_instance(5 + static_cast<Index>(s), s);
        SolverConfig cfg;
        cfg.delta = 0.2 * initial_commutator(cov);
        const auto r = solve_rlogspect(cov, cfg);
        ASSERT_TRUE(r.converged);
        SolverConfig longer = cfg;
        longer.max_iters = 10 * r.iterations;
        longer.eps_primal = longer.eps_dual = 1e-14;
        const auto ref = solve_rlogspect(cov, longer);
        EXPECT_LT(std::abs(r.objective - ref.objective), 1e-4 * std::abs(ref.objective));
    }
}

TEST(RLogSpecT, ResidualsSettleBeforeStopping) {
    const auto cov = sample_instance(6, 9);
    SolverConfig cfg;
    cfg.delta = 0.2 * initial_commutator(cov);
    const auto r = solve_rlogspect(cov, cfg);
    ASSERT_TRUE(r.converged);
    const auto& h = r.residual_history;
    ASSERT_GE(h.size(), 60u);
    std::vector<double> med;
    for (std::size_t end = h.size() - 50; end <= h.size(); ++end) {
        std::vector<double> w;
        for (std::size_t k = end - 10; k < end; ++k) w.push_back(std::max(h[k].first, h[k].second));
        med.push_back(oracle::quantile(w, 0.5));
    }
    for (std::size_t k = 1; k < med.size(); ++k) EXPECT_LE(med[k], med[k - 1] * (1 + 1e-9));
}

TEST(RLogSpecT, MatchesSubgradientOracle) {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto cov = sample_instance(4, s);
        const double delta = 0.3 * initial_commutator(cov);
        const auto r = solve_rlogspect(cov, tight(1.0, delta));
        const double ref = oracle::rlogspect_subgradient(cov.matrix(), 1.0, delta, 300000);
        EXPECT_LT(std::abs(r.objective - ref), 1e-3 * std::abs(ref));
    }
}

TEST(RLogSpecT, DivergenceIsReported) {
    const auto cov = sample_instance(6, 5);
    SolverConfig cfg;
    cfg.delta = 0.1;
    cfg.tau = 1e-6;
    cfg.allow_unsafe_tau = true;
    cfg.max_iters = 100000;
    try {
        solve_rlogspect(cov, cfg);
        ADD_FAILURE() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GT(e.iteration(), 0u);
        EXPECT_FALSE(e.residual_trace().empty());
    }
}

TEST(LogSpecT, KktIdentityAndLowerBound) {
    for (std::uint64_t s = 0; s < 6; ++s) {
        const auto g = generate(GraphEnsembleSpec{s % 2 ? GraphFamily::BA : GraphFamily::ER, 8, 0.4, s + 50});
        if ((g.degrees().array() == 0.0).any()) continue;
        for (const auto& f : {FilterSpec::lowpass_exp(), FilterSpec::highpass_exp(), FilterSpec::quadratic()}) {
            const auto cov = true_covariance(f, g);
            for (double alpha : {0.5, 2.0}) {
                const auto r = solve_logspect(cov, alpha);
                EXPECT_NEAR(r.S_hat.l11_norm(), alpha * 8, 0.01 * alpha * 8);
                EXPECT_GE(r.objective, alpha * 8 * (1 - std::log(alpha)) - 1e-6);
            }
        }
    }
    EXPECT_THROW(solve_logspect(sample_instance(4, 1), 1.0), ParameterError);
}

TEST(LogSpecT, ScalingAtTwoNodes) {
    const auto cov = CovarianceEstimate::exact((Matrix(2, 2) << 2.0, 0.5, 0.5, 2.0).finished());
    const auto r1 = solve_logspect(cov, 1.0);
    const auto r2 = solve_logspect(cov, 2.0);
    EXPECT_LT((r2.S_hat.dense() - 2.0 * r1.S_hat.dense()).norm(), 0.01 * r2.S_hat.dense().norm());
}

TEST(CommutantPreconditioner, SameCommutant) {
    const auto g = generate_ba(7, 2);
    const auto cov = true_covariance(FilterSpec::lowpass_exp(), g);
    const Matrix P = commutant_preconditioner(cov.matrix());
    const Matrix S = g.dense();
    EXPECT_LT((P * S - S * P).norm(), 1e-8 * (1 + P.norm() * S.norm()));
    // Eigenvalues are consecutive integers starting at 0.
    const Vector ev = eigen_symmetric(P).eigenvalues();
    EXPECT_NEAR(ev(0), 0.0, 1e-9);
    for (Index i = 1; i < ev.size(); ++i) EXPECT_NEAR(ev(i) - ev(i - 1), std::round(ev(i) - ev(i - 1)), 1e-9);
}

TEST(RSpecT, TwoNodeCommutingIsForced) {
    for (double delta : {0.0, 0.5}) {
        const auto r = solve_rspect(diag2(3.0, 3.0), delta, 0.0);
        EXPECT_NEAR(r.S_hat.weight(0, 1), 1.0, 1e-9);
        EXPECT_NEAR(r.objective, 2.0, 1e-9);
    }
}

TEST(RSpecT, TwoNodeInfeasible) {
    const auto cov = diag2(1.0, 2.0);
    EXPECT_THROW(solve_rspect(cov, 0.5 * std::sqrt(2.0)), InfeasibleError);
    try {
        solve_rspect(cov, 0.1);
    } catch (const InfeasibleError& e) {
        EXPECT_TRUE(e.rank_certified());
        EXPECT_NEAR(e.delta_min(), std::sqrt(2.0), 1e-8);
    }
}

TEST(RSpecT, MatchesSubgradientOracle) {
    for (std::uint64_t s = 0; s < 2; ++s) {
        const auto g = generate(GraphEnsembleSpec{GraphFamily::ER, 4, 0.7, s + 3});
        if (g.degrees()[0] == 0.0) continue;
        for (const auto& cov : {true_covariance(FilterSpec::quadratic(), g),
                                sample_covariance(sample_signals(FilterSpec::quadratic(), g, 200, s + 11))}) {
            const auto dm = delta_min(cov);
            const double delta = dm.delta_min + 0.2 * initial_commutator(cov);
            SolverConfig cfg;
            cfg.eps_primal = cfg.eps_dual = 1e-9;
            cfg.max_iters = 500000;
            const auto r = solve_rspect(cov, delta, dm.delta_min, cfg);
            EXPECT_LE(r.commutator_norm, delta + 1e-6 * CommutatorOp(cov).op_norm());
            EXPECT_NEAR(r.S_hat.degrees()[0], 1.0, 1e-6);
            const double ref = oracle::rspect_subgradient(cov.matrix(), delta, 1000000);
            EXPECT_LT(std::abs(r.objective - ref), 1e-3 * std::abs(ref));
        }
    }
}

TEST(CorrelationBaseline, Examples) {
    EXPECT_EQ(correlation_baseline(CovarianceEstimate::exact(Matrix::Identity(4, 4)), 0.1).edge_count(), 0);
    std::mt19937_64 rng(1);
    EXPECT_EQ(correlation_baseline(CovarianceEstimate::exact(oracle::random_spd(5, rng)), 0.0).edge_count(), 10);
    const auto g = correlation_baseline(CovarianceEstimate::exact((Matrix(2, 2) << 1, 0.5, 0.5, 1).finished()), 0.4);
    EXPECT_EQ(g.edge_count(), 1);
    EXPECT_THROW(correlation_baseline(CovarianceEstimate::exact((Matrix(2, 2) << 1, 0, 0, 0).finished()), 0.1),
                 ValidationError);
}

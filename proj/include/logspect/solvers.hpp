#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "logspect/errors.hpp"
#include "logspect/graphs.hpp"
#include "logspect/linops.hpp"
#include "logspect/signals.hpp"

namespace logspect {

/// Hyperparameters of the linearized ADMM solvers.
struct SolverConfig {
    double alpha = 1.0;               ///< log-barrier weight
    double delta = 0.0;               ///< commutator ball radius
    double rho0 = 1.0;                ///< initial penalty
    std::optional<double> tau;        ///< proximal step parameter of the iterated problem; auto when unset
    bool allow_unsafe_tau = false;    ///< accept tau at or below the convergence threshold
    long long max_iters = 50000;
    double eps_primal = 1e-5;
    double eps_dual = 1e-5;
    bool rho_adapt = true;
    long long rho_adapt_iters = 2000;  ///< rho is frozen after this many iterations
    /// Iterations between rho updates. Updating every iteration can lock
    /// the penalty into a growing oscillation.
    long long rho_adapt_every = 25;
    bool record_history = true;
    /// Solve the equivalent problem with (C, delta) divided by
    /// ||A_n|| / sqrt(m), which balances the commutator and degree blocks.
    bool normalize_covariance = true;

    /// tau used when none is given: 5% above the convergence threshold
    /// m + ||A_n||^2.
    static double default_tau(Index m, double op_norm) { return 1.05 * (static_cast<double>(m) + op_norm * op_norm); }

    void validate(Index m, double op_norm) const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be positive");
        if (!(delta >= 0.0) || !std::isfinite(delta)) throw ParameterError("delta must be nonnegative");
        if (!(rho0 > 0.0) || !std::isfinite(rho0)) throw ParameterError("rho0 must be positive");
        if (max_iters < 1) throw ParameterError("max_iters must be positive");
        if (rho_adapt_every < 1) throw ParameterError("rho_adapt_every must be positive");
        if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw ParameterError("residual tolerances must be positive");
        if (tau && !(*tau > 0.0)) throw ParameterError("tau must be positive");
        if (tau && !allow_unsafe_tau && !(*tau > static_cast<double>(m) + op_norm * op_norm))
            throw ParameterError("tau must exceed m + ||A_n||^2 = " + std::to_string(static_cast<double>(m) + op_norm * op_norm));
    }
};

/// Iterate of the rLogSpecT L-ADMM.
struct SolverState {
    Matrix S;        ///< adjacency iterate, always in the valid set
    Matrix Z;        ///< commutator slack, ||Z||_F <= delta
    Vector q;        ///< degree slack, q > 0
    Matrix Lambda;   ///< multiplier of C S - S C = Z
    Vector lambda2;  ///< multiplier of q = S 1
    double rho = 1.0;
    long long k = 0;
    std::vector<std::pair<double, double>> residuals;  ///< (p_res, d_res) per iteration
};

struct SolveResult {
    AdjacencyMatrix S_hat;
    double objective = std::numeric_limits<double>::infinity();
    long long iterations = 0;
    bool converged = false;
    double primal_residual = std::numeric_limits<double>::infinity();
    double dual_residual = std::numeric_limits<double>::infinity();
    double commutator_norm = 0.0;  ///< ||C S_hat - S_hat C||_F
    double delta = 0.0;
    double tau = 0.0;
    double scale = 1.0;  ///< covariance divisor of the iterated problem
    std::vector<double> objective_history;
    std::vector<std::pair<double, double>> residual_history;
};

inline constexpr double kDegreeFloor = 1e-300;

/// ||S||_{1,1} - alpha * sum_i log((S 1)_i); +inf once any degree drops to
/// kDegreeFloor or below.
inline double logspect_objective(const Matrix& S, double alpha) {
    const Vector d = S.rowwise().sum();
    if ((d.array() <= kDegreeFloor).any()) return std::numeric_limits<double>::infinity();
    return S.sum() - alpha * d.array().log().sum();
}

inline double logspect_objective(const AdjacencyMatrix& g, double alpha) {
    const Vector d = g.degrees();
    if ((d.array() <= kDegreeFloor).any()) return std::numeric_limits<double>::infinity();
    return g.l11_norm() - alpha * d.array().log().sum();
}

namespace detail {

/// Positive root of q^2 - qt q - c = 0, c > 0, without cancellation.
inline double positive_root(double qt, double c) {
    const double r = std::sqrt(qt * qt + 4.0 * c);
    return qt >= 0.0 ? 0.5 * (qt + r) : 2.0 * c / (r - qt);
}

inline void ball_project(Matrix& Z, double radius) {
    const double nz = Z.norm();
    if (nz > radius) {
        if (radius > 0.0 && nz > 0.0) Z *= radius / nz;
        else Z.setZero();
    }
}

inline constexpr double kRhoMin = 1e-6, kRhoMax = 1e6;

inline void adapt_rho(double& rho, double p_res, double d_res) {
    if (p_res > 5.0 * d_res) rho = std::min(2.0 * rho, kRhoMax);
    else if (d_res > 5.0 * p_res) rho = std::max(0.5 * rho, kRhoMin);
}

}  // namespace detail

using SolverObserver = std::function<void(const SolverState&)>;

/// rLogSpecT: min ||S||_{1,1} - alpha 1^T log(S 1) over valid S with
/// ||C S - S C||_F <= delta, by linearized ADMM on the splitting
/// C S - S C = Z, S 1 = q.
///
/// Each iteration takes the closed-form (Z, q) step, a projected gradient
/// step on the linearized augmented Lagrangian in S, and dual ascent.
/// `observer`, when set, sees the state after every iteration, before rho
/// is adapted.
inline SolveResult solve_rlogspect(const CovarianceEstimate& cov, const SolverConfig& cfg,
                                   const SolverObserver& observer = {}) {
    const CommutatorOp raw(cov.matrix());
    const Index m = raw.size();
    if (m < 2) throw ParameterError("need at least two nodes");

    const double scale = cfg.normalize_covariance && raw.op_norm() > 0.0
                             ? raw.op_norm() / std::sqrt(static_cast<double>(m))
                             : 1.0;
    const CommutatorOp op = scale == 1.0 ? raw : CommutatorOp(raw.matrix() / scale);
    const Matrix& C = op.matrix();
    const double alpha = cfg.alpha;
    cfg.validate(m, op.op_norm());
    const double delta = cfg.delta / scale;
    const double tau = cfg.tau.value_or(SolverConfig::default_tau(m, op.op_norm()));

    SolverState st;
    st.S = Matrix::Constant(m, m, alpha / static_cast<double>(m - 1));
    st.S.diagonal().setZero();
    st.Z = Matrix::Zero(m, m);
    st.q = Vector::Zero(m);
    st.Lambda = Matrix::Zero(m, m);
    st.lambda2 = Vector::Zero(m);
    st.rho = cfg.rho0;

    SolveResult res;
    res.tau = tau;
    res.scale = scale;

    Matrix comm_S = op.apply(st.S);
    Matrix R(m, m), G(m, m), S_next(m, m), comm_next(m, m);
    Vector d = st.S.rowwise().sum();

    for (st.k = 1; st.k <= cfg.max_iters; ++st.k) {
        const double rho = st.rho;

        // (Z, q) block.
        st.Z = comm_S + st.Lambda / rho;
        detail::ball_project(st.Z, delta);
        for (Index i = 0; i < m; ++i) st.q[i] = detail::positive_root(d[i] - st.lambda2[i] / rho, alpha / rho);

        // Linearized S step: gradient of the augmented Lagrangian at S^(k).
        R = st.Lambda + rho * (comm_S - st.Z);
        G.noalias() = C * R;
        G.noalias() -= R * C;
        const Vector row_shift = st.lambda2 + rho * (st.q - d);
        G.colwise() -= row_shift;
        G.array() += 1.0;
        S_next = st.S - G / (rho * tau);
        project_valid_inplace(S_next);

        comm_next.noalias() = C * S_next;
        comm_next.noalias() -= S_next * C;
        const Vector d_next = S_next.rowwise().sum();

        // Dual ascent.
        st.Lambda += rho * (comm_next - st.Z);
        st.lambda2 += rho * (st.q - d_next);

        const double p_res = std::sqrt((st.Z - comm_next).squaredNorm() + (st.q - d_next).squaredNorm());
        const double d_res = rho * std::sqrt((comm_next - comm_S).squaredNorm() + (d_next - d).squaredNorm());

        st.S.swap(S_next);
        comm_S.swap(comm_next);
        d = d_next;

        if (!std::isfinite(p_res) || !std::isfinite(d_res) || !st.S.allFinite()) {
            st.residuals.emplace_back(p_res, d_res);
            throw DivergenceError(static_cast<std::size_t>(st.k), std::move(st.residuals));
        }
        if (cfg.record_history) {
            st.residuals.emplace_back(p_res, d_res);
            res.objective_history.push_back(logspect_objective(st.S, alpha));
        }
        res.primal_residual = p_res;
        res.dual_residual = d_res;
        if (observer) observer(st);
        if (cfg.rho_adapt && st.k <= cfg.rho_adapt_iters && st.k % cfg.rho_adapt_every == 0) detail::adapt_rho(st.rho, p_res, d_res);
        if (p_res < cfg.eps_primal && d_res < cfg.eps_dual) {
            res.converged = true;
            break;
        }
    }

    res.iterations = std::min(st.k, cfg.max_iters);
    res.S_hat = AdjacencyMatrix::from_dense(st.S);
    res.objective = logspect_objective(st.S, alpha);
    res.commutator_norm = comm_S.norm() * scale;
    res.delta = cfg.delta;
    res.residual_history = std::move(st.residuals);
    return res;
}

/// Default relative radius standing in for the equality C S = S C.
inline constexpr double kEqualityEpsilon = 1e-6;

/// Spectral norm of a symmetric matrix.
inline double spectral_norm(const Matrix& C) {
    const Vector ev = eigen_symmetric(detail::symmetrized(C)).eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Matrix with the eigenvectors of C and its eigenvalue clusters mapped to
/// 0, 1, 2, ... in increasing order. It commutes with exactly the matrices
/// that commute with C. Eigenvalues closer than rel_tol times the spread of
/// the spectrum form one cluster.
inline Matrix commutant_preconditioner(const Matrix& C, double rel_tol = 1e-10) {
    const auto es = eigen_symmetric(detail::symmetrized(C));
    const Vector& ev = es.eigenvalues();
    const Index m = ev.size();
    Vector g(m);
    if (m == 0) return C;
    const double tol = rel_tol * (ev(m - 1) - ev(0));
    double level = 0.0;
    g(0) = 0.0;
    for (Index i = 1; i < m; ++i) {
        if (ev(i) - ev(i - 1) > tol) level += 1.0;
        g(i) = level;
    }
    return detail::spectral_apply(es, g);
}

/// LogSpecT with the exact covariance. The equality C S = S C is imposed
/// through the commutant-preserving surrogate of C and approximated by a
/// ball of radius eps_eq times the surrogate's spectral norm.
inline SolveResult solve_logspect(const CovarianceEstimate& cov, double alpha, SolverConfig cfg = {},
                                  double eps_eq = kEqualityEpsilon) {
    if (!cov.is_exact()) throw ParameterError("LogSpecT needs an exact covariance");
    if (!(eps_eq >= 0.0)) throw ParameterError("eps_eq must be nonnegative");
    const Matrix surrogate = commutant_preconditioner(cov.matrix());
    cfg.alpha = alpha;
    cfg.delta = eps_eq * std::max(spectral_norm(surrogate), 1.0);
    SolveResult res = solve_rlogspect(CovarianceEstimate::exact(surrogate), cfg);
    res.commutator_norm = CommutatorOp(cov.matrix()).apply(res.S_hat.dense()).norm();
    return res;
}

namespace detail {

/// Euclidean projection of v onto {x >= 0, sum x = 1}.
template <typename Seg>
void project_simplex(Seg v) {
    const Index n = v.size();
    if (n == 0) return;
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (Index j = 0; j < n; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
    }
    for (Index j = 0; j < n; ++j) v[j] = std::max(0.0, v[j] - theta);
}

}  // namespace detail

/// Projection onto valid S with (S 1)_0 = 1, in pair coordinates: the first
/// m-1 pairs (edges at node 0) go to the unit simplex, the rest to the
/// nonnegative orthant.
inline void project_normalized_pairs(Vector& y, Index m) {
    detail::project_simplex(y.head(m - 1));
    auto tail = y.tail(y.size() - (m - 1));
    tail = tail.cwiseMax(0.0);
}

/// rSpecT: min ||S||_{1,1} over valid S with (S 1)_0 = 1 and
/// ||C S - S C||_F <= delta, by the same linearized ADMM skeleton with only
/// the commutator split. The caller supplies delta_min from the
/// feasibility analysis; delta < delta_min raises InfeasibleError.
inline SolveResult solve_rspect(const CovarianceEstimate& cov, double delta, double delta_min, SolverConfig cfg = {},
                                bool rank_certified = false) {
    const CommutatorOp raw(cov.matrix());
    const Index m = raw.size();
    if (m < 2) throw ParameterError("need at least two nodes");
    cfg.delta = delta;
    if (delta < delta_min) throw InfeasibleError(delta, delta_min, rank_certified);

    // Unit eigenvalue spread; the objective does not depend on the scale.
    const double scale = cfg.normalize_covariance && raw.op_norm() > 0.0 ? raw.op_norm() : 1.0;
    const CommutatorOp op = scale == 1.0 ? raw : CommutatorOp(raw.matrix() / scale);
    // The rSpecT linearization has no degree block, so its threshold is ||A_n||^2.
    cfg.validate(0, op.op_norm());
    const Matrix& C = op.matrix();
    const double norm2 = op.op_norm() * op.op_norm();
    const double tau = cfg.tau.value_or(norm2 > 0.0 ? 1.05 * norm2 : 1.0);
    const double radius = delta / scale;

    Vector y = Vector::Zero(pair_count(m));
    y.head(m - 1).setConstant(1.0 / static_cast<double>(m - 1));
    Matrix S = b_embed(m, y);
    Matrix comm_S = op.apply(S);
    Matrix Z = Matrix::Zero(m, m), Lambda = Matrix::Zero(m, m), R(m, m), G(m, m), comm_next(m, m);
    double rho = cfg.rho0;

    SolveResult res;
    res.delta = delta;
    res.tau = tau;
    res.scale = scale;
    long long k = 1;
    for (; k <= cfg.max_iters; ++k) {
        Z = comm_S + Lambda / rho;
        detail::ball_project(Z, radius);

        R = Lambda + rho * (comm_S - Z);
        G.noalias() = C * R;
        G.noalias() -= R * C;
        G.array() += 1.0;
        // Frobenius projection of S - G/(rho tau) in pair coordinates: each
        // pair's value is the average of its two entries.
        Vector y_next = b_adjoint(S - G / (rho * tau)) * 0.5;
        project_normalized_pairs(y_next, m);
        Matrix S_next = b_embed(m, y_next);

        comm_next.noalias() = C * S_next;
        comm_next.noalias() -= S_next * C;
        Lambda += rho * (comm_next - Z);

        const double p_res = (Z - comm_next).norm();
        const double d_res = rho * (comm_next - comm_S).norm();
        S.swap(S_next);
        comm_S.swap(comm_next);
        y = std::move(y_next);

        if (!std::isfinite(p_res) || !std::isfinite(d_res))
            throw DivergenceError(static_cast<std::size_t>(k), std::move(res.residual_history));
        if (cfg.record_history) {
            res.residual_history.emplace_back(p_res, d_res);
            res.objective_history.push_back(S.sum());
        }
        res.primal_residual = p_res;
        res.dual_residual = d_res;
        if (cfg.rho_adapt && k <= cfg.rho_adapt_iters && k % cfg.rho_adapt_every == 0) detail::adapt_rho(rho, p_res, d_res);
        if (p_res < cfg.eps_primal && d_res < cfg.eps_dual) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(k, cfg.max_iters);
    res.S_hat = AdjacencyMatrix(m, y);
    res.objective = S.sum();
    res.commutator_norm = comm_S.norm() * scale;
    return res;
}

/// Thresholded correlation graph: edge (i, j) iff |C_ij| / sqrt(C_ii C_jj)
/// reaches the threshold.
inline AdjacencyMatrix correlation_baseline(const CovarianceEstimate& cov, double threshold) {
    const Matrix& C = cov.matrix();
    const Index m = C.rows();
    for (Index i = 0; i < m; ++i)
        if (!(C(i, i) > 0.0)) throw ValidationError("zero variance at node " + std::to_string(i));
    Vector w(pair_count(m));
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) {
            const double corr = std::abs(C(i, j)) / std::sqrt(C(i, i) * C(j, j));
            w[pair_index(m, i, j)] = corr >= threshold ? 1.0 : 0.0;
        }
    return AdjacencyMatrix(m, std::move(w));
}

}  // namespace logspect

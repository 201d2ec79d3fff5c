#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logspect/graphs.hpp"
#include "logspect/linops.hpp"
#include "logspect/nnls.hpp"
#include "logspect/parallel.hpp"
#include "logspect/rng.hpp"
#include "logspect/signals.hpp"
#include "logspect/solvers.hpp"

namespace logspect {

struct RankCertificate {
    Index rank = 0;
    bool full_column_rank = false;
    double tolerance = 0.0;
};

/// Numerical rank of A_n B. Full column rank certifies that rSpecT has no
/// feasible point for all radii in some interval [0, delta_bar).
///
/// The default tolerance is max(m^2, m(m-1)/2) * sigma_max * machine eps.
inline RankCertificate rank_certificate(const CovarianceEstimate& cov, std::optional<double> tol = std::nullopt) {
    const CommutatorOp op(cov.matrix());
    const Index m = op.size();
    if (m < 2) throw ParameterError("need at least two nodes");
    const Matrix M = assemble_AnB(op);
    Eigen::BDCSVD<Matrix> svd(M);
    const Vector& sv = svd.singularValues();
    RankCertificate out;
    const double smax = sv.size() ? sv(0) : 0.0;
    out.tolerance = tol.value_or(static_cast<double>(std::max(M.rows(), M.cols())) * smax *
                                 std::numeric_limits<double>::epsilon());
    out.rank = static_cast<Index>((sv.array() > out.tolerance).count());
    out.full_column_rank = out.rank == M.cols();
    return out;
}

struct DeltaMinResult {
    double delta_min = 0.0;
    Vector y;  ///< minimizing pair weights, (B y 1)_0 = 1
    long long iterations = 0;
    bool converged = false;
};

struct DeltaMinOptions {
    enum class Method { ActiveSet, ProjectedGradient };
    Method method = Method::ActiveSet;
    double tol = 1e-10;  ///< projected gradient: stop when the gradient mapping norm falls below this
    long long max_iters = 200000;
    double normalization_weight = 1.0;  ///< active set: weight of the (B y 1)_0 = 1 row; any w > 0 gives the same direction
};

namespace detail {

/// Active-set route: nonnegative least squares on [A_n B; w h^T] y = [0; w]
/// with h the indicator of the first m-1 pairs, then exact renormalization.
inline DeltaMinResult delta_min_active_set(const CommutatorOp& op, const DeltaMinOptions& opt) {
    const Index m = op.size();
    const Index p = pair_count(m);
    Matrix E(m * m + 1, p);
    E.topRows(m * m) = assemble_AnB(op);
    E.row(m * m).setZero();
    E.row(m * m).head(m - 1).setConstant(opt.normalization_weight);
    Vector f = Vector::Zero(m * m + 1);
    f[m * m] = opt.normalization_weight;
    const auto sol = nnls(E, f);
    DeltaMinResult out;
    out.iterations = sol.iterations;
    out.converged = sol.converged;
    const double head = sol.x.head(m - 1).sum();
    if (!(head > 0.0)) throw NumericalError("delta_min: active-set solution lost the normalization");
    out.y = sol.x / head;
    return out;
}

inline DeltaMinResult delta_min_projected_gradient(const CommutatorOp& op, const DeltaMinOptions& opt);

}  // namespace detail

/// Smallest radius delta for which rSpecT is feasible:
/// min ||C B y - B y C||_F over y >= 0 with the first m-1 entries summing
/// to 1. Solved for C rescaled to unit eigenvalue spread, either exactly by
/// an active-set method or by accelerated projected gradient with adaptive
/// restart; the attained norm is scaled back.
inline DeltaMinResult delta_min(const CovarianceEstimate& cov, const DeltaMinOptions& opt = {}) {
    const CommutatorOp raw(cov.matrix());
    const Index m = raw.size();
    if (m < 2) throw ParameterError("need at least two nodes");
    if (m > kMaxAssemblyNodes) throw ParameterError("delta_min supports m <= " + std::to_string(kMaxAssemblyNodes));

    const double spread = raw.op_norm();
    if (spread == 0.0) {
        DeltaMinResult out;
        out.y = Vector::Zero(pair_count(m));
        out.y.head(m - 1).setConstant(1.0 / static_cast<double>(m - 1));
        out.converged = true;
        return out;
    }
    const CommutatorOp op(raw.matrix() / spread);
    DeltaMinResult out = opt.method == DeltaMinOptions::Method::ActiveSet ? detail::delta_min_active_set(op, opt)
                                                                           : detail::delta_min_projected_gradient(op, opt);
    out.delta_min = spread * op.apply(b_embed(m, out.y)).norm();
    return out;
}

inline DeltaMinResult detail::delta_min_projected_gradient(const CommutatorOp& op, const DeltaMinOptions& opt) {
    const Index m = op.size();
    DeltaMinResult out;
    out.y = Vector::Zero(pair_count(m));
    out.y.head(m - 1).setConstant(1.0 / static_cast<double>(m - 1));
    // ||B|| = sqrt(2) and ||A_n|| = 1 after rescaling.
    const double L = 2.0;

    auto residual = [&](const Vector& y) { return op.apply(b_embed(m, y)); };
    auto value = [&](const Matrix& R) { return 0.5 * R.squaredNorm(); };
    auto gradient = [&](const Matrix& R) { return b_adjoint(op.adjoint_apply(R)); };

    Vector y = out.y, x = y;
    double t = 1.0;
    Matrix Ry = residual(y);
    double fy = value(Ry);
    Vector best = y;
    double fbest = fy;
    long long k = 0;
    for (; k < opt.max_iters; ++k) {
        const Matrix Rx = residual(x);
        const Vector gx = gradient(Rx);
        Vector y_next = x - gx / L;
        project_normalized_pairs(y_next, m);
        const double gm = L * (y_next - x).norm();

        const Matrix R_next = residual(y_next);
        const double f_next = value(R_next);
        if (f_next < fbest) {
            fbest = f_next;
            best = y_next;
        }
        if (gm < opt.tol) {
            out.converged = true;
            break;
        }
        if (f_next > fy) {
            // Function-value restart: drop momentum.
            t = 1.0;
            x = y;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        x = y_next + ((t - 1.0) / t_next) * (y_next - y);
        y = std::move(y_next);
        fy = f_next;
        t = t_next;
        if (fbest == 0.0) {
            out.converged = true;
            break;
        }
    }
    out.iterations = k;
    out.y = best;
    return out;
}

struct FeasibilityReport {
    enum class CertificateKind { RankCertificate, DeltaMinOnly };

    Index m = 0;
    Index rank_AnB = 0;
    bool full_column_rank = false;
    double delta_min = 0.0;
    bool delta_min_converged = false;
    CertificateKind certificate_kind = CertificateKind::DeltaMinOnly;
};

inline std::string to_string(FeasibilityReport::CertificateKind k) {
    return k == FeasibilityReport::CertificateKind::RankCertificate ? "RankCertificate" : "DeltaMinOnly";
}

inline FeasibilityReport analyze_feasibility(const CovarianceEstimate& cov, const DeltaMinOptions& opt = {}) {
    FeasibilityReport rep;
    rep.m = cov.nodes();
    const auto cert = rank_certificate(cov);
    rep.rank_AnB = cert.rank;
    rep.full_column_rank = cert.full_column_rank;
    const auto dm = delta_min(cov, opt);
    rep.delta_min = dm.delta_min;
    rep.delta_min_converged = dm.converged;
    rep.certificate_kind = cert.full_column_rank ? FeasibilityReport::CertificateKind::RankCertificate
                                                 : FeasibilityReport::CertificateKind::DeltaMinOnly;
    return rep;
}

/// rSpecT with the feasibility analysis done here: InfeasibleError when
/// delta < delta_min, carrying whether the rank certificate also fired.
inline SolveResult solve_rspect(const CovarianceEstimate& cov, double delta, const SolverConfig& cfg = {}) {
    const auto dm = delta_min(cov);
    if (delta < dm.delta_min) {
        const bool certified = cov.nodes() <= 60 && rank_certificate(cov).full_column_rank;
        throw InfeasibleError(delta, dm.delta_min, certified);
    }
    return solve_rspect(cov, delta, dm.delta_min, cfg);
}

/// How infeasibility_frequency draws its graph filters.
struct FilterLaw {
    enum class Kind { RandomQuadratic, Fixed };
    Kind kind = Kind::RandomQuadratic;
    double sigma = 2.0;  ///< standard deviation of the random coefficients
    FilterSpec fixed;

    static FilterLaw random_quadratic(double sigma = 2.0) { return {Kind::RandomQuadratic, sigma, {}}; }
    static FilterLaw fixed_filter(FilterSpec f) { return {Kind::Fixed, 0.0, std::move(f)}; }
};

struct InfeasibilityStats {
    double frequency = 0.0;
    double mean_delta_min = 0.0;
    std::vector<double> delta_mins;
    long long unconverged = 0;
};

/// Monte-Carlo estimate of how often rSpecT is infeasible at radius 0.
///
/// Each trial draws a graph from the ensemble, a filter from the law and
/// n_samples signals (n_samples = 0 uses the exact covariance), then
/// computes delta_min. Trial t uses seeds derived from (seed, t).
inline InfeasibilityStats infeasibility_frequency(const GraphEnsembleSpec& ensemble, const FilterLaw& law,
                                                  long long n_samples, long long trials, std::uint64_t seed,
                                                  double tol_pos = 1e-6, unsigned threads = 1) {
    if (trials < 1) throw ParameterError("trials must be positive");
    if (n_samples < 0) throw ParameterError("n_samples must be nonnegative");
    if (ensemble.m < 2) throw ParameterError("ensemble needs m >= 2");
    InfeasibilityStats out;
    out.delta_mins.assign(static_cast<std::size_t>(trials), 0.0);
    std::vector<char> converged(static_cast<std::size_t>(trials), 1);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
        GraphEnsembleSpec spec = ensemble;
        spec.seed = derive_seed(seed, {0x67, t});
        const AdjacencyMatrix g = generate(spec);
        std::mt19937_64 filter_rng(derive_seed(seed, {0x66, t}));
        const FilterSpec filter =
            law.kind == FilterLaw::Kind::Fixed ? law.fixed : random_quadratic_filter(filter_rng, law.sigma);
        const CovarianceEstimate cov =
            n_samples == 0 ? true_covariance(filter, g)
                           : sample_covariance(sample_signals(filter, g, n_samples,
                                                              derive_seed(seed, {0x73, t, static_cast<std::uint64_t>(n_samples)})));
        const auto dm = delta_min(cov);
        out.delta_mins[t] = dm.delta_min;
        converged[t] = dm.converged;
    });
    long long positive = 0;
    double sum = 0.0;
    for (std::size_t t = 0; t < out.delta_mins.size(); ++t) {
        positive += out.delta_mins[t] > tol_pos;
        sum += out.delta_mins[t];
        out.unconverged += !converged[t];
    }
    out.frequency = static_cast<double>(positive) / static_cast<double>(trials);
    out.mean_delta_min = sum / static_cast<double>(trials);
    return out;
}

}  // namespace logspect

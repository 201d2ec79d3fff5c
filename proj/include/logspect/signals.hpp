#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logspect/graph_io.hpp"
#include "logspect/graphs.hpp"

namespace logspect {

/// Graph filter h(S).
///
/// LowpassExp(t) is exp(tS), HighpassExp(t) is exp(-tS); the defaults give
/// exp(S/2) and exp(-S). Quadratic is S^2 + S + I. Polynomial holds
/// coefficients h_0, h_1, ..., h_p of sum h_i S^i.
struct FilterSpec {
    enum class Kind { LowpassExp, HighpassExp, Quadratic, Polynomial };

    Kind kind = Kind::Quadratic;
    double t = 0.0;
    std::vector<double> coeffs;

    static FilterSpec lowpass_exp(double t = 0.5) { return {Kind::LowpassExp, t, {}}; }
    static FilterSpec highpass_exp(double t = 1.0) { return {Kind::HighpassExp, t, {}}; }
    static FilterSpec quadratic() { return {Kind::Quadratic, 0.0, {}}; }
    static FilterSpec polynomial(std::vector<double> c) { return {Kind::Polynomial, 0.0, std::move(c)}; }

    void validate() const {
        if ((kind == Kind::LowpassExp || kind == Kind::HighpassExp) && !std::isfinite(t))
            throw ParameterError("exponential filter parameter must be finite");
        if (kind == Kind::Polynomial) {
            if (coeffs.empty()) throw ParameterError("polynomial filter needs at least one coefficient");
            for (double c : coeffs)
                if (!std::isfinite(c)) throw ParameterError("non-finite polynomial coefficient");
        }
    }

    /// Scalar frequency response f(lambda).
    double response(double lambda) const {
        switch (kind) {
            case Kind::LowpassExp: return std::exp(t * lambda);
            case Kind::HighpassExp: return std::exp(-t * lambda);
            case Kind::Quadratic: return lambda * lambda + lambda + 1.0;
            case Kind::Polynomial: {
                double acc = 0.0;
                for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * lambda + *it;
                return acc;
            }
        }
        return 0.0;
    }

    bool operator==(const FilterSpec&) const = default;
};

inline std::string to_string(const FilterSpec& f) {
    std::ostringstream os;
    switch (f.kind) {
        case FilterSpec::Kind::LowpassExp: os << "lowpass-exp(" << detail::format_double(f.t) << ')'; break;
        case FilterSpec::Kind::HighpassExp: os << "highpass-exp(" << detail::format_double(f.t) << ')'; break;
        case FilterSpec::Kind::Quadratic: os << "qua"; break;
        case FilterSpec::Kind::Polynomial:
            os << "poly(";
            for (std::size_t i = 0; i < f.coeffs.size(); ++i) os << (i ? ";" : "") << detail::format_double(f.coeffs[i]);
            os << ')';
            break;
    }
    return os.str();
}

/// Parses the names produced by to_string, plus the bare aliases
/// "lowpass-exp", "highpass-exp" and "qua" with default parameters.
inline FilterSpec parse_filter(const std::string& s) {
    auto arg = [&](const std::string& prefix) -> std::optional<std::string> {
        if (s.rfind(prefix + "(", 0) == 0 && s.back() == ')')
            return s.substr(prefix.size() + 1, s.size() - prefix.size() - 2);
        return std::nullopt;
    };
    FilterSpec f;
    if (s == "lowpass-exp") f = FilterSpec::lowpass_exp();
    else if (s == "highpass-exp") f = FilterSpec::highpass_exp();
    else if (s == "qua" || s == "quadratic") f = FilterSpec::quadratic();
    else if (auto a = arg("lowpass-exp")) f = FilterSpec::lowpass_exp(detail::parse_double(*a, 0));
    else if (auto b = arg("highpass-exp")) f = FilterSpec::highpass_exp(detail::parse_double(*b, 0));
    else if (auto c = arg("poly")) {
        std::vector<double> cs;
        for (const auto& tok : detail::split(*c, ';')) cs.push_back(detail::parse_double(tok, 0));
        f = FilterSpec::polynomial(std::move(cs));
    } else {
        throw ParameterError("unknown filter '" + s + "'");
    }
    f.validate();
    return f;
}

/// Random quadratic filter t1 S^2 + t2 S + t3 I with i.i.d. N(0, sigma^2)
/// coefficients; sigma is a standard deviation.
inline FilterSpec random_quadratic_filter(std::mt19937_64& rng, double sigma = 2.0) {
    std::normal_distribution<double> gauss(0.0, sigma);
    const double t1 = gauss(rng), t2 = gauss(rng), t3 = gauss(rng);
    return FilterSpec::polynomial({t3, t2, t1});
}

inline Eigen::SelfAdjointEigenSolver<Matrix> eigen_symmetric(const Matrix& A) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success) {
        std::ostringstream os;
        os << "symmetric eigendecomposition failed (m=" << A.rows() << ", ||A||_F=" << A.norm()
           << ", max|A_ij|=" << A.cwiseAbs().maxCoeff() << ")";
        throw NumericalError(os.str());
    }
    return es;
}

namespace detail {

inline Matrix symmetrized(const Matrix& A) { return 0.5 * (A + A.transpose()); }

inline Matrix spectral_apply(const Eigen::SelfAdjointEigenSolver<Matrix>& es, const Vector& fvals) {
    const Matrix& U = es.eigenvectors();
    return symmetrized(U * fvals.asDiagonal() * U.transpose());
}

}  // namespace detail

/// h(S). Polynomial filters use Horner's rule on matrices; exponentials go
/// through S = U diag(lambda) U^T.
inline Matrix apply_filter(const FilterSpec& filter, const AdjacencyMatrix& g) {
    filter.validate();
    const Matrix S = g.dense();
    const Index m = S.rows();
    if (filter.kind == FilterSpec::Kind::Quadratic || filter.kind == FilterSpec::Kind::Polynomial) {
        const std::vector<double> c =
            filter.kind == FilterSpec::Kind::Quadratic ? std::vector<double>{1.0, 1.0, 1.0} : filter.coeffs;
        Matrix acc = c.back() * Matrix::Identity(m, m);
        for (auto it = c.rbegin() + 1; it != c.rend(); ++it) {
            acc = (acc * S).eval();
            acc.diagonal().array() += *it;
        }
        return detail::symmetrized(acc);
    }
    const auto es = eigen_symmetric(S);
    Vector f = es.eigenvalues().unaryExpr([&](double l) { return filter.response(l); });
    return detail::spectral_apply(es, f);
}

/// Covariance matrix together with how it was obtained.
class CovarianceEstimate {
public:
    enum class Provenance { Exact, Sample };

    CovarianceEstimate() = default;

    CovarianceEstimate(Matrix C, Provenance prov, long long n = 0) : C_(std::move(C)), prov_(prov), n_(n) {
        if (C_.rows() != C_.cols()) throw ShapeError("covariance must be square");
        if (!C_.allFinite()) throw ValidationError("covariance has non-finite entries");
        const double scale = std::max(1.0, C_.cwiseAbs().maxCoeff());
        if ((C_ - C_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw ValidationError("covariance is not symmetric");
        C_ = detail::symmetrized(C_);
        if (C_.rows() > 0) {
            const double lmin = eigen_symmetric(C_).eigenvalues()(0);
            if (lmin < -1e-8 * scale) throw ValidationError("covariance is not positive semidefinite");
        }
        if (prov_ == Provenance::Sample && n_ < 1) throw ParameterError("sample covariance needs n >= 1");
    }

    static CovarianceEstimate exact(Matrix C) { return {std::move(C), Provenance::Exact}; }
    static CovarianceEstimate sample(Matrix C, long long n) { return {std::move(C), Provenance::Sample, n}; }

    const Matrix& matrix() const noexcept { return C_; }
    Index nodes() const noexcept { return C_.rows(); }
    Provenance provenance() const noexcept { return prov_; }
    bool is_exact() const noexcept { return prov_ == Provenance::Exact; }
    long long samples() const noexcept { return n_; }

private:
    Matrix C_;
    Provenance prov_ = Provenance::Exact;
    long long n_ = 0;
};

/// C_inf = h(S) h(S)^T = h(S)^2 for white unit-variance input.
inline CovarianceEstimate true_covariance(const FilterSpec& filter, const AdjacencyMatrix& g) {
    filter.validate();
    if (filter.kind == FilterSpec::Kind::LowpassExp || filter.kind == FilterSpec::Kind::HighpassExp) {
        const auto es = eigen_symmetric(g.dense());
        Vector f = es.eigenvalues().unaryExpr([&](double l) {
            const double h = filter.response(l);
            return h * h;
        });
        return CovarianceEstimate::exact(detail::spectral_apply(es, f));
    }
    const Matrix H = apply_filter(filter, g);
    return CovarianceEstimate::exact(detail::symmetrized(H * H));
}

/// Columns of the result are h(S) w_k for the given noise columns w_k.
inline Matrix filter_noise(const FilterSpec& filter, const AdjacencyMatrix& g, const Matrix& noise) {
    if (noise.rows() != g.nodes()) throw ShapeError("noise rows must equal node count");
    return apply_filter(filter, g) * noise;
}

/// n i.i.d. stationary signals x = h(S) w with w ~ N(0, I); m x n.
inline Matrix sample_signals(const FilterSpec& filter, const AdjacencyMatrix& g, long long n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("need at least one signal sample");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix W(g.nodes(), static_cast<Index>(n));
    for (Index j = 0; j < W.cols(); ++j)
        for (Index i = 0; i < W.rows(); ++i) W(i, j) = gauss(rng);
    return filter_noise(filter, g, W);
}

/// C_n = (1/n) X X^T. The model mean is zero, so no centering unless asked.
inline CovarianceEstimate sample_covariance(const Matrix& signals, bool center = false) {
    if (signals.rows() == 0 || signals.cols() == 0) throw ParameterError("empty signal matrix");
    const double n = static_cast<double>(signals.cols());
    Matrix C(signals.rows(), signals.rows());
    if (center) {
        const Matrix Xc = signals.colwise() - signals.rowwise().mean();
        C.noalias() = Xc * Xc.transpose() / n;
    } else {
        C.setZero();
        C.selfadjointView<Eigen::Lower>().rankUpdate(signals, 1.0 / n);
        C = C.selfadjointView<Eigen::Lower>();
    }
    return CovarianceEstimate::sample(std::move(C), signals.cols());
}

/// Spectral norm of the difference of two symmetric matrices.
inline double spectral_gap_norm(const Matrix& A, const Matrix& B) {
    const auto ev = eigen_symmetric(detail::symmetrized(A - B)).eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Rule for the constraint radius delta_n.
struct DeltaRule {
    enum class Kind { SqrtLogN, CovGap };
    Kind kind = Kind::SqrtLogN;
    double factor = 0.2;  // c for SqrtLogN, multiplier for CovGap

    static DeltaRule sqrt_log_n(double c) { return {Kind::SqrtLogN, c}; }
    static DeltaRule cov_gap(double multiplier = 1.0) { return {Kind::CovGap, multiplier}; }
};

inline std::string to_string(const DeltaRule& r) {
    return (r.kind == DeltaRule::Kind::SqrtLogN ? "sqrt-log-n(" : "cov-gap(") + detail::format_double(r.factor) + ")";
}

inline DeltaRule parse_delta_rule(const std::string& s) {
    for (auto [name, kind] : {std::pair{"sqrt-log-n", DeltaRule::Kind::SqrtLogN},
                              std::pair{"cov-gap", DeltaRule::Kind::CovGap}}) {
        const std::string prefix = std::string(name) + "(";
        if (s.rfind(prefix, 0) == 0 && s.back() == ')')
            return {kind, detail::parse_double(s.substr(prefix.size(), s.size() - prefix.size() - 1), 0)};
        if (s == name) return {kind, kind == DeltaRule::Kind::SqrtLogN ? 0.2 : 1.0};
    }
    throw ParameterError("unknown delta rule '" + s + "'");
}

/// delta_n for sample count n. n is real so that non-integer test points
/// work; CovGap requires the measured gap.
inline double delta_schedule(const DeltaRule& rule, double n, std::optional<double> cov_gap = std::nullopt) {
    if (rule.kind == DeltaRule::Kind::SqrtLogN) {
        if (!(n >= 2.0)) throw ParameterError("sqrt(log n / n) schedule needs n >= 2");
        if (rule.factor < 0.0) throw ParameterError("schedule constant must be nonnegative");
        return rule.factor * std::sqrt(std::log(n) / n);
    }
    if (!cov_gap) throw ParameterError("cov-gap schedule needs the covariance gap");
    if (*cov_gap < 0.0 || rule.factor < 0.0) throw ParameterError("cov-gap schedule inputs must be nonnegative");
    return rule.factor * *cov_gap;
}

/// Dense signal CSV: rows are nodes, columns are samples.
inline void write_signals(const Matrix& X, const std::string& path, std::uint64_t seed, const FilterSpec& filter) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_dense_csv(out, X,
                    "m=" + std::to_string(X.rows()) + " n=" + std::to_string(X.cols()) + " seed=" + std::to_string(seed) +
                        " filter=" + to_string(filter));
    if (!out) throw Error("write failed for '" + path + "'");
}

inline Matrix read_signals(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_dense_csv(in);
}

}  // namespace logspect

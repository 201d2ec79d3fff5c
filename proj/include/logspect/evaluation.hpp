#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "logspect/errors.hpp"
#include "logspect/graphs.hpp"

namespace logspect {

/// How a weighted output is turned into an edge set.
struct BinarizationStrategy {
    enum class Kind { Fixed, SearchingBased, TrainingBased };
    Kind kind = Kind::SearchingBased;
    double eps = 0.5;
    int grid_size = 101;
    int train_set_size = 10;

    static BinarizationStrategy fixed(double eps) { return {Kind::Fixed, eps, 101, 0}; }
    static BinarizationStrategy searching(int grid_size = 101) { return {Kind::SearchingBased, 0.0, grid_size, 0}; }
    static BinarizationStrategy training(int train_set_size, int grid_size = 101) {
        return {Kind::TrainingBased, 0.0, grid_size, train_set_size};
    }

    void validate() const {
        if (kind == Kind::Fixed && !(eps >= 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in [0, 1]");
        if (kind != Kind::Fixed && grid_size < 2) throw ParameterError("grid_size must be at least 2");
        if (kind == Kind::TrainingBased && train_set_size < 1) throw ParameterError("train_set_size must be positive");
    }
};

inline std::string to_string(BinarizationStrategy::Kind k) {
    switch (k) {
        case BinarizationStrategy::Kind::Fixed: return "fixed";
        case BinarizationStrategy::Kind::SearchingBased: return "searching";
        case BinarizationStrategy::Kind::TrainingBased: return "training";
    }
    return "?";
}

inline BinarizationStrategy::Kind parse_binarization_kind(const std::string& s) {
    if (s == "fixed") return BinarizationStrategy::Kind::Fixed;
    if (s == "searching") return BinarizationStrategy::Kind::SearchingBased;
    if (s == "training") return BinarizationStrategy::Kind::TrainingBased;
    throw ParameterError("unknown binarization '" + s + "'");
}

struct Binarized {
    AdjacencyMatrix graph;
    bool zero_input = false;  ///< W was identically zero; graph is empty
};

/// Edge (i, j) iff W_ij / max W >= eps.
inline Binarized binarize(const AdjacencyMatrix& W, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in [0, 1]");
    const Vector& w = W.pair_weights();
    const double wmax = w.size() ? w.maxCoeff() : 0.0;
    if (!(wmax > 0.0)) return {AdjacencyMatrix::empty(W.nodes()), true};
    Vector b(w.size());
    for (Index k = 0; k < w.size(); ++k) b[k] = w[k] / wmax >= eps ? 1.0 : 0.0;
    return {AdjacencyMatrix(W.nodes(), std::move(b)), false};
}

struct RecoveryMetrics {
    double f_measure = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    long long tp = 0, fp = 0, fn = 0;
};

/// Edge-recovery counts over unordered pairs. Nonzero weights count as
/// edges. Ratios with a zero denominator are reported as 0.
inline RecoveryMetrics metrics(const AdjacencyMatrix& learned, const AdjacencyMatrix& truth) {
    if (learned.nodes() != truth.nodes()) throw ShapeError("graphs have different node counts");
    const Vector& a = learned.pair_weights();
    const Vector& b = truth.pair_weights();
    RecoveryMetrics r;
    for (Index k = 0; k < a.size(); ++k) {
        const bool x = a[k] != 0.0, y = b[k] != 0.0;
        r.tp += x && y;
        r.fp += x && !y;
        r.fn += !x && y;
    }
    const auto ratio = [](long long num, long long den) { return den > 0 ? static_cast<double>(num) / den : 0.0; };
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
    r.f_measure = ratio(2 * r.tp, 2 * r.tp + r.fn + r.fp);
    return r;
}

/// k-th point of the uniform grid of n points on [0, 1].
inline double grid_point(int k, int n) { return static_cast<double>(k) / static_cast<double>(n - 1); }

struct ThresholdSearch {
    double eps_star = 0.0;
    RecoveryMetrics best;
};

/// Best-F threshold on the uniform grid; ties go to the larger eps.
inline ThresholdSearch search_threshold(const AdjacencyMatrix& W, const AdjacencyMatrix& truth, int grid_size = 101) {
    if (grid_size < 2) throw ParameterError("grid_size must be at least 2");
    if (W.nodes() != truth.nodes()) throw ShapeError("graphs have different node counts");
    ThresholdSearch out;
    bool first = true;
    for (int k = 0; k < grid_size; ++k) {
        const double eps = grid_point(k, grid_size);
        const auto r = metrics(binarize(W, eps).graph, truth);
        if (first || r.f_measure >= out.best.f_measure) {
            out.eps_star = eps;
            out.best = r;
            first = false;
        }
    }
    return out;
}

/// Grid threshold maximizing the mean F-measure over training pairs
/// (weighted output, ground truth); ties go to the larger eps.
inline double train_threshold(const std::vector<std::pair<AdjacencyMatrix, AdjacencyMatrix>>& pairs, int grid_size = 101) {
    if (pairs.empty()) throw ParameterError("training set is empty");
    if (grid_size < 2) throw ParameterError("grid_size must be at least 2");
    double best_eps = 0.0, best_f = -1.0;
    for (int k = 0; k < grid_size; ++k) {
        const double eps = grid_point(k, grid_size);
        double sum = 0.0;
        for (const auto& [W, truth] : pairs) sum += metrics(binarize(W, eps).graph, truth).f_measure;
        const double mean = sum / static_cast<double>(pairs.size());
        if (mean >= best_f) {
            best_f = mean;
            best_eps = eps;
        }
    }
    return best_eps;
}

/// One trial's outcome, matching a row of the tidy results table.
struct RecoveryReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    long long n = 0;  ///< 0 for the exact covariance
    std::string family;
    std::string filter;
    std::string method;
    RecoveryMetrics metrics;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double objective_gap = std::numeric_limits<double>::quiet_NaN();  ///< |f_n - f*| / |f*|
    double degree_gap = std::numeric_limits<double>::quiet_NaN();     ///< ||d - d*|| / ||d*||
    double cov_gap = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double eps = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

struct SummaryStats {
    long long count = 0;  ///< finite values used
    double mean = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
};

/// Linear-interpolation quantile of sorted data, p in [0, 1].
inline double quantile_sorted(const std::vector<double>& v, double p) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Statistics over the finite entries of xs.
inline SummaryStats summarize(std::vector<double> xs) {
    xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return !std::isfinite(x); }), xs.end());
    SummaryStats s;
    s.count = static_cast<long long>(xs.size());
    if (xs.empty()) return s;
    std::sort(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    s.median = quantile_sorted(xs, 0.5);
    s.q1 = quantile_sorted(xs, 0.25);
    s.q3 = quantile_sorted(xs, 0.75);
    s.min = xs.front();
    s.max = xs.back();
    return s;
}

struct RecoverySummary {
    long long trials = 0;
    long long failed = 0;  ///< reports whose status is not "ok"
    SummaryStats f_measure, precision, recall, objective_gap, degree_gap, cov_gap;
};

inline RecoverySummary aggregate(const std::vector<RecoveryReport>& reports) {
    if (reports.empty()) throw ParameterError("nothing to aggregate");
    RecoverySummary s;
    s.trials = static_cast<long long>(reports.size());
    std::vector<double> f, p, r, og, dg, cg;
    for (const auto& rep : reports) {
        s.failed += rep.status != "ok";
        f.push_back(rep.metrics.f_measure);
        p.push_back(rep.metrics.precision);
        r.push_back(rep.metrics.recall);
        og.push_back(rep.objective_gap);
        dg.push_back(rep.degree_gap);
        cg.push_back(rep.cov_gap);
    }
    s.f_measure = summarize(std::move(f));
    s.precision = summarize(std::move(p));
    s.recall = summarize(std::move(r));
    s.objective_gap = summarize(std::move(og));
    s.degree_gap = summarize(std::move(dg));
    s.cov_gap = summarize(std::move(cg));
    return s;
}

/// Configuration key of a report: everything but the seed.
inline std::string configuration_key(const RecoveryReport& r) {
    return r.config_hash + "|" + r.family + "|" + r.filter + "|" + r.method + "|" + std::to_string(r.n);
}

inline std::map<std::string, RecoverySummary> aggregate_by_configuration(const std::vector<RecoveryReport>& reports) {
    std::map<std::string, std::vector<RecoveryReport>> groups;
    for (const auto& r : reports) groups[configuration_key(r)].push_back(r);
    std::map<std::string, RecoverySummary> out;
    for (const auto& [k, v] : groups) out.emplace(k, aggregate(v));
    return out;
}

}  // namespace logspect

#pragma once

// JSON views of results and configurations. Needs nlohmann/json as
// "json.hpp" on the include path.

#include <cmath>
#include <string>

#include "json.hpp"

#include "logspect/evaluation.hpp"
#include "logspect/feasibility.hpp"
#include "logspect/graphs.hpp"
#include "logspect/signals.hpp"
#include "logspect/solvers.hpp"

namespace logspect {

using Json = nlohmann::json;

namespace detail {
// JSON has no infinities or NaN; they become null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
}  // namespace detail

/// Pair weights in canonical order plus the node count.
inline Json to_json(const AdjacencyMatrix& g) {
    Json w = Json::array();
    for (Index k = 0; k < g.pair_weights().size(); ++k) w.push_back(g.pair_weights()[k]);
    return {{"m", g.nodes()}, {"upper_triangle", std::move(w)}};
}

inline AdjacencyMatrix adjacency_from_json(const Json& j) {
    const auto m = j.at("m").get<Index>();
    const auto& w = j.at("upper_triangle");
    if (!w.is_array() || static_cast<Index>(w.size()) != pair_count(m)) throw ParseError(0, "upper_triangle has the wrong length");
    Vector v(pair_count(m));
    for (Index k = 0; k < v.size(); ++k) v[k] = w[static_cast<std::size_t>(k)].get<double>();
    return AdjacencyMatrix(m, std::move(v));
}

inline Json to_json(const SolveResult& r, bool with_history = false) {
    Json j = {{"objective", detail::number(r.objective)},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"primal_residual", detail::number(r.primal_residual)},
              {"dual_residual", detail::number(r.dual_residual)},
              {"commutator_norm", detail::number(r.commutator_norm)},
              {"delta", detail::number(r.delta)},
              {"tau", detail::number(r.tau)},
              {"scale", detail::number(r.scale)},
              {"S_hat", to_json(r.S_hat)}};
    if (with_history) {
        Json h = Json::array();
        for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
            const double f = k < r.objective_history.size() ? r.objective_history[k] : std::nan("");
            h.push_back({detail::number(r.residual_history[k].first), detail::number(r.residual_history[k].second),
                         detail::number(f)});
        }
        j["history"] = std::move(h);
    }
    return j;
}

inline Json to_json(const FeasibilityReport& r) {
    return {{"m", r.m},
            {"rank_AnB", r.rank_AnB},
            {"full_column_rank", r.full_column_rank},
            {"delta_min", detail::number(r.delta_min)},
            {"delta_min_converged", r.delta_min_converged},
            {"certificate_kind", to_string(r.certificate_kind)}};
}

inline Json to_json(const SolverConfig& c) {
    Json j = {{"alpha", c.alpha},
              {"delta", c.delta},
              {"rho0", c.rho0},
              {"max_iters", c.max_iters},
              {"eps_primal", c.eps_primal},
              {"eps_dual", c.eps_dual},
              {"rho_adapt", c.rho_adapt},
              {"rho_adapt_iters", c.rho_adapt_iters},
              {"rho_adapt_every", c.rho_adapt_every},
              {"allow_unsafe_tau", c.allow_unsafe_tau},
              {"normalize_covariance", c.normalize_covariance}};
    j["tau"] = c.tau ? Json(*c.tau) : Json(nullptr);
    return j;
}

/// Reads the keys present in j into c; absent keys keep their values.
inline void update_from_json(SolverConfig& c, const Json& j) {
    for (const auto& [key, v] : j.items()) {
        if (key == "alpha") c.alpha = v.get<double>();
        else if (key == "delta") c.delta = v.get<double>();
        else if (key == "rho0") c.rho0 = v.get<double>();
        else if (key == "tau") c.tau = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
        else if (key == "max_iters") c.max_iters = v.get<long long>();
        else if (key == "eps_primal") c.eps_primal = v.get<double>();
        else if (key == "eps_dual") c.eps_dual = v.get<double>();
        else if (key == "rho_adapt") c.rho_adapt = v.get<bool>();
        else if (key == "rho_adapt_iters") c.rho_adapt_iters = v.get<long long>();
        else if (key == "rho_adapt_every") c.rho_adapt_every = v.get<long long>();
        else if (key == "allow_unsafe_tau") c.allow_unsafe_tau = v.get<bool>();
        else if (key == "normalize_covariance") c.normalize_covariance = v.get<bool>();
        else throw ParameterError("unknown solver key '" + key + "'");
    }
}

inline Json to_json(const RecoveryMetrics& r) {
    return {{"f_measure", r.f_measure}, {"precision", r.precision}, {"recall", r.recall},
            {"tp", r.tp},               {"fp", r.fp},               {"fn", r.fn}};
}

inline Json to_json(const SummaryStats& s) {
    return {{"count", s.count},
            {"mean", detail::number(s.mean)},
            {"median", detail::number(s.median)},
            {"q1", detail::number(s.q1)},
            {"q3", detail::number(s.q3)},
            {"min", detail::number(s.min)},
            {"max", detail::number(s.max)}};
}

inline Json to_json(const RecoverySummary& s) {
    return {{"trials", s.trials},
            {"failed", s.failed},
            {"f_measure", to_json(s.f_measure)},
            {"precision", to_json(s.precision)},
            {"recall", to_json(s.recall)},
            {"objective_gap", to_json(s.objective_gap)},
            {"degree_gap", to_json(s.degree_gap)},
            {"cov_gap", to_json(s.cov_gap)}};
}

}  // namespace logspect

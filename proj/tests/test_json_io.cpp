#include <gtest/gtest.h>

#include "logspect/json_io.hpp"

using namespace logspect;

TEST(JsonIO, AdjacencyRoundTrip) {
    const auto g = generate_ba(7, 3);
    const Json j = to_json(g);
    EXPECT_EQ(j.at("upper_triangle").size(), 21u);
    EXPECT_EQ(adjacency_from_json(j), g);
    Json bad = j;
    bad["upper_triangle"].erase(0);
    EXPECT_THROW(adjacency_from_json(bad), ParseError);
}

TEST(JsonIO, SolveResultFields) {
    const auto cov = CovarianceEstimate::exact((Matrix(2, 2) << 1, 0, 0, 2).finished());
    SolverConfig cfg;
    cfg.delta = 0.5;
    const auto r = solve_rlogspect(cov, cfg);
    const Json j = to_json(r, true);
    for (const char* key : {"objective", "iterations", "converged", "primal_residual", "dual_residual", "S_hat", "history"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["history"].size(), r.residual_history.size());
    EXPECT_EQ(adjacency_from_json(j["S_hat"]), r.S_hat);
    EXPECT_TRUE(to_json(SolveResult{}).at("objective").is_null());
}

TEST(JsonIO, SolverConfigRoundTrip) {
    SolverConfig c;
    c.alpha = 2.5;
    c.tau = 40.0;
    c.max_iters = 123;
    SolverConfig d;
    update_from_json(d, to_json(c));
    EXPECT_EQ(d.alpha, 2.5);
    EXPECT_EQ(d.tau, std::optional<double>(40.0));
    EXPECT_EQ(d.max_iters, 123);
    EXPECT_THROW(update_from_json(d, Json{{"nope", 1}}), ParameterError);
}

TEST(JsonIO, FeasibilityReport) {
    const auto rep = analyze_feasibility(CovarianceEstimate::exact((Matrix(2, 2) << 1, 0, 0, 3).finished()));
    const Json j = to_json(rep);
    EXPECT_EQ(j.at("certificate_kind"), "RankCertificate");
    EXPECT_EQ(j.at("rank_AnB"), 1);
}

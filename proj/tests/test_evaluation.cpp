#include <gtest/gtest.h>

#include <random>

#include "logspect/evaluation.hpp"
#include "oracles.hpp"

using namespace logspect;

namespace {
AdjacencyMatrix cycle4(bool chord) {
    Matrix S = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) S(i, (i + 1) % 4) = S((i + 1) % 4, i) = 1;
    if (chord) S(0, 2) = S(2, 0) = 1;
    return AdjacencyMatrix::from_dense(S);
}

AdjacencyMatrix random_weighted(Index m, std::mt19937_64& rng) {
    return AdjacencyMatrix::from_dense(oracle::random_valid(m, rng, 0.8));
}
}  // namespace

TEST(Binarize, Examples) {
    std::mt19937_64 rng(1);
    Matrix S = oracle::random_valid(5, rng, 1.0);
    S = S.array() + 0.01;
    S.diagonal().setZero();
    const auto W = AdjacencyMatrix::from_dense(S);
    EXPECT_EQ(binarize(W, 0.0).graph.edge_count(), 10);
    const auto top = binarize(W, 1.0).graph;
    EXPECT_EQ(top.edge_count(), 1);
    const Vector w = (Vector(3) << 0.2, 0.5, 1.0).finished();
    const auto b = binarize(AdjacencyMatrix(3, w), 0.4).graph;
    EXPECT_EQ(b.pair_weights(), (Vector(3) << 0, 1, 1).finished());
    EXPECT_THROW(binarize(W, 1.5), ParameterError);
    const auto z = binarize(AdjacencyMatrix::empty(4), 0.3);
    EXPECT_TRUE(z.zero_input);
    EXPECT_EQ(z.graph.edge_count(), 0);
}

TEST(Binarize, MonotoneAndScaleInvariant) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto W = random_weighted(7, rng);
        const auto W3 = AdjacencyMatrix(7, 3.7 * W.pair_weights());
        for (int k = 0; k < 20; ++k) {
            const double e1 = k / 20.0, e2 = (k + 1) / 20.0;
            const Vector a = binarize(W, e1).graph.pair_weights();
            const Vector b = binarize(W, e2).graph.pair_weights();
            EXPECT_TRUE((b.array() <= a.array()).all());
            EXPECT_EQ(binarize(W3, e1).graph, binarize(W, e1).graph);
        }
    }
}

TEST(Metrics, Examples) {
    const auto c = cycle4(false);
    const auto r1 = metrics(c, c);
    EXPECT_EQ(r1.f_measure, 1.0);
    EXPECT_EQ(r1.precision, 1.0);
    EXPECT_EQ(r1.recall, 1.0);
    const auto r2 = metrics(AdjacencyMatrix::empty(4), c);
    EXPECT_EQ(r2.tp, 0);
    EXPECT_EQ(r2.f_measure, 0.0);
    const auto r3 = metrics(cycle4(true), c);
    EXPECT_DOUBLE_EQ(r3.precision, 4.0 / 5.0);
    EXPECT_DOUBLE_EQ(r3.recall, 1.0);
    EXPECT_DOUBLE_EQ(r3.f_measure, 8.0 / 9.0);
    EXPECT_EQ(r3.fp, 1);
    EXPECT_THROW(metrics(c, AdjacencyMatrix::empty(5)), ShapeError);
}

TEST(Metrics, PermutationSymmetric) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto a = binarize(random_weighted(6, rng), 0.5).graph;
        const auto b = binarize(random_weighted(6, rng), 0.5).graph;
        std::vector<Index> perm{0, 1, 2, 3, 4, 5};
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto r = metrics(a, b);
        const auto rp = metrics(permute(a, perm), permute(b, perm));
        EXPECT_EQ(r.tp, rp.tp);
        EXPECT_EQ(r.fp, rp.fp);
        EXPECT_EQ(r.fn, rp.fn);
    }
}

TEST(SearchThreshold, Examples) {
    const auto truth = cycle4(true);
    EXPECT_EQ(search_threshold(truth, truth).best.f_measure, 1.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0, 0.01);
    Vector w = truth.pair_weights();
    for (Index k = 0; k < w.size(); ++k)
        if (w[k] > 0) w[k] += U(rng);
    EXPECT_EQ(search_threshold(AdjacencyMatrix(4, w), truth).best.f_measure, 1.0);
    EXPECT_THROW(search_threshold(truth, truth, 1), ParameterError);
}

TEST(SearchThreshold, BeatsEveryGridPointAndPrefersLargerEps) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        const auto W = random_weighted(8, rng);
        const auto truth = binarize(random_weighted(8, rng), 0.3).graph;
        const auto res = search_threshold(W, truth, 101);
        double best = -1, best_eps = -1;
        for (int k = 0; k <= 100; ++k) {
            const double eps = k / 100.0;
            const double f = metrics(binarize(W, eps).graph, truth).f_measure;
            EXPECT_GE(res.best.f_measure, f);
            if (f >= best) {
                best = f;
                best_eps = eps;
            }
        }
        EXPECT_DOUBLE_EQ(res.eps_star, best_eps);
    }
}

TEST(TrainThreshold, Cases) {
    std::mt19937_64 rng(6);
    const auto W = random_weighted(8, rng);
    const auto truth = binarize(random_weighted(8, rng), 0.3).graph;
    const double single = train_threshold({{W, truth}});
    EXPECT_DOUBLE_EQ(single, search_threshold(W, truth).eps_star);
    EXPECT_DOUBLE_EQ(train_threshold({{W, truth}, {W, truth}}), single);
    EXPECT_THROW(train_threshold({}), ParameterError);

    std::vector<std::pair<AdjacencyMatrix, AdjacencyMatrix>> pairs;
    for (int k = 0; k < 10; ++k) pairs.emplace_back(random_weighted(8, rng), binarize(random_weighted(8, rng), 0.4).graph);
    const double eps = train_threshold(pairs, 51);
    auto mean_f = [&](double e) {
        double s = 0;
        for (const auto& [w, tr] : pairs) s += metrics(binarize(w, e).graph, tr).f_measure;
        return s / pairs.size();
    };
    for (int k = 0; k <= 50; ++k) EXPECT_GE(mean_f(eps), mean_f(k / 50.0));
}

TEST(Aggregate, Cases) {
    EXPECT_THROW(aggregate({}), ParameterError);
    RecoveryReport r;
    r.metrics.f_measure = 0.7;
    r.cov_gap = 0.1;
    const auto s1 = aggregate({r});
    EXPECT_EQ(s1.f_measure.mean, 0.7);
    EXPECT_EQ(s1.f_measure.median, 0.7);
    EXPECT_EQ(s1.f_measure.q1, 0.7);
    EXPECT_EQ(s1.cov_gap.q3, 0.1);
    EXPECT_EQ(s1.objective_gap.count, 0);

    RecoveryReport a, b;
    a.metrics.f_measure = 0.0;
    b.metrics.f_measure = 1.0;
    const auto s2 = aggregate({a, b});
    EXPECT_EQ(s2.f_measure.mean, 0.5);
    EXPECT_EQ(s2.f_measure.median, 0.5);
}

TEST(Aggregate, QuartilesMatchSortOracle) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<RecoveryReport> reps(100);
    std::vector<double> f;
    for (auto& r : reps) {
        r.metrics.f_measure = U(rng);
        f.push_back(r.metrics.f_measure);
    }
    const auto s = aggregate(reps);
    EXPECT_NEAR(s.f_measure.q1, oracle::quantile(f, 0.25), 1e-15);
    EXPECT_NEAR(s.f_measure.median, oracle::quantile(f, 0.5), 1e-15);
    EXPECT_NEAR(s.f_measure.q3, oracle::quantile(f, 0.75), 1e-15);
}

TEST(Aggregate, GroupsByConfiguration) {
    RecoveryReport a, b, c;
    a.method = b.method = "rLogSpecT";
    c.method = "LogSpecT";
    b.seed = 1;
    const auto groups = aggregate_by_configuration({a, b, c});
    EXPECT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups.at(configuration_key(a)).trials, 2);
}

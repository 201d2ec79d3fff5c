#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logspect/errors.hpp"
#include "logspect/rng.hpp"

namespace logspect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Number of unordered node pairs, m(m-1)/2.
constexpr Index pair_count(Index m) noexcept { return m * (m - 1) / 2; }

/// Position of the pair {i, j}, i != j, in the canonical edge ordering.
///
/// Pairs are ordered by the smaller endpoint, then the larger one:
/// (0,1), (0,2), ..., (0,m-1), (1,2), ... This is the strict lower
/// triangle read column by column, so the first m-1 slots are the edges
/// incident to node 0.
constexpr Index pair_index(Index m, Index i, Index j) noexcept {
    if (i > j) {
        const Index t = i;
        i = j;
        j = t;
    }
    return i * (2 * m - i - 1) / 2 + (j - i - 1);
}

/// Undirected, loop-free, nonnegatively weighted graph on m nodes.
///
/// Only the strict upper triangle is stored, so symmetry and the zero
/// diagonal hold by representation. Nonnegativity and finiteness are
/// checked on construction. Instances are immutable.
class AdjacencyMatrix {
public:
    AdjacencyMatrix() = default;

    /// Builds from canonical pair weights; throws ValidationError on
    /// negative or non-finite weights.
    AdjacencyMatrix(Index m, Vector pair_weights) : m_(m), w_(std::move(pair_weights)) {
        if (m_ < 1) throw ParameterError("graph needs at least one node");
        if (w_.size() != pair_count(m_))
            throw ShapeError("expected " + std::to_string(pair_count(m_)) +
                             " pair weights, got " + std::to_string(w_.size()));
        for (Index k = 0; k < w_.size(); ++k) {
            if (!std::isfinite(w_[k])) throw ValidationError("non-finite edge weight");
            if (w_[k] < 0.0) throw ValidationError("negative edge weight");
        }
    }

    static AdjacencyMatrix empty(Index m) { return AdjacencyMatrix(m, Vector::Zero(pair_count(m))); }

    /// Reads a dense matrix that must already lie in the valid set: square,
    /// exactly symmetric, zero diagonal, nonnegative.
    static AdjacencyMatrix from_dense(const Matrix& X) {
        if (X.rows() != X.cols()) throw ShapeError("adjacency matrix must be square");
        const Index m = X.rows();
        Vector w(pair_count(m));
        for (Index i = 0; i < m; ++i) {
            if (X(i, i) != 0.0) throw ValidationError("nonzero diagonal (self-loop) at node " + std::to_string(i));
            for (Index j = i + 1; j < m; ++j) {
                if (X(i, j) != X(j, i))
                    throw ValidationError("asymmetric entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
                w[pair_index(m, i, j)] = X(i, j);
            }
        }
        return AdjacencyMatrix(m, std::move(w));
    }

    Index nodes() const noexcept { return m_; }
    const Vector& pair_weights() const noexcept { return w_; }

    double weight(Index i, Index j) const {
        if (i == j) return 0.0;
        return w_[pair_index(m_, i, j)];
    }

    Matrix dense() const {
        Matrix S = Matrix::Zero(m_, m_);
        Index k = 0;
        for (Index i = 0; i < m_; ++i)
            for (Index j = i + 1; j < m_; ++j, ++k) S(i, j) = S(j, i) = w_[k];
        return S;
    }

    Vector degrees() const {
        Vector d = Vector::Zero(m_);
        Index k = 0;
        for (Index i = 0; i < m_; ++i)
            for (Index j = i + 1; j < m_; ++j, ++k) {
                d[i] += w_[k];
                d[j] += w_[k];
            }
        return d;
    }

    /// Entrywise l1 norm of the full matrix (each edge counted twice).
    double l11_norm() const { return 2.0 * w_.sum(); }

    Index edge_count() const { return static_cast<Index>((w_.array() > 0.0).count()); }

    bool is_binary() const {
        return ((w_.array() == 0.0) || (w_.array() == 1.0)).all();
    }

    bool operator==(const AdjacencyMatrix& o) const { return m_ == o.m_ && w_ == o.w_; }

private:
    Index m_ = 0;
    Vector w_;
};

enum class GraphFamily { ER, BA };

inline std::string to_string(GraphFamily f) { return f == GraphFamily::ER ? "ER" : "BA"; }

inline GraphFamily parse_graph_family(const std::string& s) {
    if (s == "ER" || s == "er") return GraphFamily::ER;
    if (s == "BA" || s == "ba") return GraphFamily::BA;
    throw ParameterError("unknown graph family '" + s + "'");
}

struct GraphEnsembleSpec {
    GraphFamily family = GraphFamily::ER;
    Index m = 20;
    double p = 0.2;
    std::uint64_t seed = 0;
};

/// Erdos-Renyi graph: every pair is an edge of weight 1 independently with
/// probability p.
inline AdjacencyMatrix generate_er(Index m, double p, std::mt19937_64& rng) {
    if (m < 2) throw ParameterError("ER graph needs m >= 2");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("ER edge probability must lie in [0,1]");
    std::bernoulli_distribution coin(p);
    Vector w(pair_count(m));
    for (Index k = 0; k < w.size(); ++k) w[k] = coin(rng) ? 1.0 : 0.0;
    return AdjacencyMatrix(m, std::move(w));
}

/// Barabasi-Albert tree: start from one edge (0,1); each new node attaches
/// to exactly one existing node drawn with probability proportional to its
/// current degree.
inline AdjacencyMatrix generate_ba(Index m, std::mt19937_64& rng) {
    if (m < 2) throw ParameterError("BA graph needs m >= 2");
    Vector w = Vector::Zero(pair_count(m));
    // Each edge contributes both endpoints, so a uniform draw from this list
    // is a degree-proportional draw over nodes.
    std::vector<Index> endpoint_bag{0, 1};
    endpoint_bag.reserve(static_cast<std::size_t>(2 * (m - 1)));
    w[pair_index(m, 0, 1)] = 1.0;
    for (Index v = 2; v < m; ++v) {
        std::uniform_int_distribution<std::size_t> pick(0, endpoint_bag.size() - 1);
        const Index u = endpoint_bag[pick(rng)];
        w[pair_index(m, u, v)] = 1.0;
        endpoint_bag.push_back(u);
        endpoint_bag.push_back(v);
    }
    return AdjacencyMatrix(m, std::move(w));
}

inline AdjacencyMatrix generate_er(const GraphEnsembleSpec& spec) {
    if (spec.family != GraphFamily::ER) throw ParameterError("generate_er called with a non-ER spec");
    std::mt19937_64 rng(spec.seed);
    return generate_er(spec.m, spec.p, rng);
}

inline AdjacencyMatrix generate_ba(Index m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return generate_ba(m, rng);
}

inline AdjacencyMatrix generate(const GraphEnsembleSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    return spec.family == GraphFamily::ER ? generate_er(spec.m, spec.p, rng) : generate_ba(spec.m, rng);
}

/// Draw from the ensemble conditioned on every node having an edge: ER
/// draws are repeated with seeds derived from (seed, attempt) until no node
/// is isolated. BA trees never have isolated nodes.
inline AdjacencyMatrix generate_without_isolated(const GraphEnsembleSpec& spec, int max_attempts = 1000) {
    GraphEnsembleSpec s = spec;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempt > 0) s.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(attempt)});
        AdjacencyMatrix g = generate(s);
        if ((g.degrees().array() > 0.0).all()) return g;
    }
    throw ParameterError("no graph without isolated nodes after " + std::to_string(max_attempts) + " draws");
}

/// In-place Euclidean projection of a square matrix onto the valid
/// adjacency set: off-diagonal (X_ij + X_ji)/2 clamped at 0, zero diagonal.
template <typename Derived>
void project_valid_inplace(Eigen::MatrixBase<Derived>& X) {
    const Index m = X.rows();
    for (Index j = 0; j < m; ++j) {
        X(j, j) = 0.0;
        for (Index i = j + 1; i < m; ++i) {
            const double v = 0.5 * (X(i, j) + X(j, i));
            X(i, j) = X(j, i) = v > 0.0 ? v : 0.0;
        }
    }
}

inline AdjacencyMatrix project_valid(const Matrix& X) {
    if (X.rows() != X.cols()) throw ShapeError("projection needs a square matrix");
    const Index m = X.rows();
    Vector w(pair_count(m));
    Index k = 0;
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j, ++k) w[k] = std::max(0.0, 0.5 * (X(i, j) + X(j, i)));
    return AdjacencyMatrix(m, std::move(w));
}

/// Breadth-first connectivity test on the support of the graph.
inline bool is_connected(const AdjacencyMatrix& g) {
    const Index m = g.nodes();
    if (m == 0) return true;
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::vector<Index> queue{0};
    seen[0] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const Index u = queue[head];
        for (Index v = 0; v < m; ++v)
            if (v != u && !seen[static_cast<std::size_t>(v)] && g.weight(u, v) > 0.0) {
                seen[static_cast<std::size_t>(v)] = 1;
                queue.push_back(v);
            }
    }
    return queue.size() == static_cast<std::size_t>(m);
}

/// Relabels nodes: node i of the result is node perm[i] of g.
inline AdjacencyMatrix permute(const AdjacencyMatrix& g, const std::vector<Index>& perm) {
    const Index m = g.nodes();
    if (static_cast<Index>(perm.size()) != m) throw ShapeError("permutation length mismatch");
    Vector w(pair_count(m));
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) w[pair_index(m, i, j)] = g.weight(perm[i], perm[j]);
    return AdjacencyMatrix(m, std::move(w));
}

}  // namespace logspect

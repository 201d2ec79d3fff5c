#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the solver code paths it is compared against.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "logspect/graphs.hpp"

namespace oracle {

using logspect::Index;
using logspect::Matrix;
using logspect::Vector;

/// I (x) C - C (x) I, the explicit m^2 x m^2 commutator matrix acting on
/// column-major vec(S).
inline Matrix kron_commutator(const Matrix& C) {
    const Matrix I = Matrix::Identity(C.rows(), C.cols());
    return Matrix(Eigen::kroneckerProduct(I, C)) - Matrix(Eigen::kroneckerProduct(C, I));
}

inline Vector vec(const Matrix& X) { return Eigen::Map<const Vector>(X.data(), X.size()); }

/// sum_{k <= terms} A^k / k!
inline Matrix taylor_exp(const Matrix& A, int terms = 30) {
    Matrix out = Matrix::Identity(A.rows(), A.cols());
    Matrix term = out;
    for (int k = 1; k <= terms; ++k) {
        term = term * A / static_cast<double>(k);
        out += term;
    }
    return out;
}

/// Per-entry minimizer of (X_ij - s)^2 + (X_ji - s)^2 over s >= 0, found by
/// scanning the derivative sign instead of using the closed form.
inline Matrix project_valid_bruteforce(const Matrix& X) {
    const Index m = X.rows();
    Matrix S = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) {
            // d/ds = 4 s - 2 (X_ij + X_ji); bisection on [0, hi].
            double lo = 0.0, hi = std::max(1.0, std::abs(X(i, j)) + std::abs(X(j, i)));
            if (-2.0 * (X(i, j) + X(j, i)) >= 0.0) {
                S(i, j) = S(j, i) = 0.0;
                continue;
            }
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (4.0 * mid - 2.0 * (X(i, j) + X(j, i)) > 0.0 ? hi : lo) = mid;
            }
            S(i, j) = S(j, i) = 0.5 * (lo + hi);
        }
    return S;
}

/// Pair ordering from the column-major strict lower triangle formula:
/// entry (i, j), i > j (1-based), sits at i - j + ((j - 1) / 2)(2m - j).
inline Index lower_column_major_index(Index m, Index i1, Index j1) {
    return i1 - j1 + ((j1 - 1) * (2 * m - j1)) / 2 - 1;
}

/// Dense pair basis matrix M with columns vec(C E_k - E_k C), built from
/// the Kronecker matrix and the lower-triangle index formula.
inline Matrix AnB_via_kron(const Matrix& C) {
    const Index m = C.rows();
    const Matrix K = kron_commutator(C);
    Matrix B = Matrix::Zero(m * m, m * (m - 1) / 2);
    for (Index j1 = 1; j1 <= m; ++j1)
        for (Index i1 = j1 + 1; i1 <= m; ++i1) {
            const Index col = lower_column_major_index(m, i1, j1);
            B((j1 - 1) * m + (i1 - 1), col) = 1.0;
            B((i1 - 1) * m + (j1 - 1), col) = 1.0;
        }
    return K * B;
}

/// Largest singular value by power iteration on M^T M.
inline double top_singular_value(const Matrix& M, int iters = 5000) {
    Vector v = Vector::Ones(M.cols()).normalized();
    double s = 0.0;
    for (int k = 0; k < iters; ++k) {
        Vector w = M.transpose() * (M * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        s = std::sqrt(nw);
    }
    return s;
}

/// Reference rLogSpecT value by projected subgradient on the exact-penalty
/// form min 2 sum y - alpha sum log d(y) + mu max(0, ||M y|| - delta) over
/// y >= 0, with C rescaled to unit eigenvalue spread. The penalty is only
/// exact once mu exceeds the constraint multiplier, so mu grows tenfold per
/// stage of iters steps (warm started, step scaled by 1/mu) until the best iterate of a
/// stage violates the ball by less than 1e-6 relative. Returns that stage's
/// best penalized value.
inline double rlogspect_subgradient(const Matrix& C, double alpha, double delta, long long iters = 1000000,
                                    double mu = 10.0, double eta0 = 0.02, int stages = 5) {
    const Index m = C.rows();
    const Index p = m * (m - 1) / 2;
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    const double spread = es.eigenvalues()(m - 1) - es.eigenvalues()(0);
    const double sc = spread > 0.0 ? spread : 1.0;
    const Matrix M = AnB_via_kron(C / sc);
    const double d0 = delta / sc;

    std::vector<std::pair<Index, Index>> pairs;
    for (Index j1 = 1; j1 <= m; ++j1)
        for (Index i1 = j1 + 1; i1 <= m; ++i1) pairs.emplace_back(i1 - 1, j1 - 1);
    auto degrees = [&](const Vector& y) {
        Vector d = Vector::Zero(m);
        for (Index k = 0; k < p; ++k) {
            d[pairs[k].first] += y[k];
            d[pairs[k].second] += y[k];
        }
        return d;
    };
    auto value = [&](const Vector& y, double w) {
        const Vector d = degrees(y);
        if ((d.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
        return 2.0 * y.sum() - alpha * d.array().log().sum() + w * std::max(0.0, (M * y).norm() - d0);
    };

    Vector y = Vector::Constant(p, alpha / static_cast<double>(m - 1));
    double best = value(y, mu);
    for (int stage = 0; stage < stages; ++stage) {
        const double eta = eta0 * 10.0 / mu;
        Vector best_y = y;
        best = value(y, mu);
        for (long long k = 1; k <= iters; ++k) {
            const Vector d = degrees(y);
            Vector g(p);
            for (Index t = 0; t < p; ++t) g[t] = 2.0 - alpha / d[pairs[t].first] - alpha / d[pairs[t].second];
            const Vector r = M * y;
            const double nr = r.norm();
            if (nr > d0) g += mu * M.transpose() * r / nr;
            y = (y - eta / std::sqrt(static_cast<double>(k)) * g).cwiseMax(1e-12);
            const double v = value(y, mu);
            if (v < best) {
                best = v;
                best_y = y;
            }
        }
        y = best_y;
        const double violation = (M * y).norm() - d0;
        if (violation <= 1e-6 * std::max(d0, 1.0)) break;
        mu *= 10.0;
    }
    return best;
}

/// Reference rSpecT value by projected subgradient on
/// min 2 sum y + mu max(0, ||M y|| - delta) over {y >= 0, sum_{pairs at
/// node 0} y = 1}; the node-0 block is projected by bisection on the
/// simplex threshold.
inline double rspect_subgradient(const Matrix& C, double delta, long long iters = 1000000, double mu = 10.0,
                                 double eta0 = 0.02) {
    const Index m = C.rows();
    const Index p = m * (m - 1) / 2;
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    const double spread = es.eigenvalues()(m - 1) - es.eigenvalues()(0);
    const double sc = spread > 0.0 ? spread : 1.0;
    const Matrix M = AnB_via_kron(C / sc);
    const double d0 = delta / sc;
    // Pairs touching node 0 are the first m-1 columns in this ordering.
    auto project = [&](Vector& y) {
        double lo = y.head(m - 1).minCoeff() - 1.0, hi = y.head(m - 1).maxCoeff();
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            ((y.head(m - 1).array() - mid).cwiseMax(0.0).sum() > 1.0 ? lo : hi) = mid;
        }
        const double theta = 0.5 * (lo + hi);
        y.head(m - 1) = (y.head(m - 1).array() - theta).cwiseMax(0.0);
        y.tail(p - (m - 1)) = y.tail(p - (m - 1)).cwiseMax(0.0);
    };
    auto value = [&](const Vector& y) { return 2.0 * y.sum() + mu * std::max(0.0, (M * y).norm() - d0); };
    Vector y = Vector::Zero(p);
    y.head(m - 1).setConstant(1.0 / static_cast<double>(m - 1));
    double best = value(y);
    for (long long k = 1; k <= iters; ++k) {
        Vector g = Vector::Constant(p, 2.0);
        const Vector r = M * y;
        const double nr = r.norm();
        if (nr > d0) g += mu * M.transpose() * r / nr;
        y -= eta0 / std::sqrt(static_cast<double>(k)) * g;
        project(y);
        best = std::min(best, value(y));
    }
    return best;
}

/// Sort-based quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] * (1.0 - (pos - static_cast<double>(i))) + v[i + 1] * (pos - static_cast<double>(i));
}

inline Matrix random_symmetric(Index m, std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    Matrix A(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) A(i, j) = N(rng);
    return 0.5 * (A + A.transpose());
}

inline Matrix random_spd(Index m, std::mt19937_64& rng) {
    const Matrix A = random_symmetric(m, rng);
    return A * A.transpose() + 0.1 * Matrix::Identity(m, m);
}

inline Matrix random_valid(Index m, std::mt19937_64& rng, double density = 0.6) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Matrix S = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j)
            if (U(rng) < density) S(i, j) = S(j, i) = U(rng) * 2.0;
    return S;
}

}  // namespace oracle

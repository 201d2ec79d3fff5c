#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "logspect/errors.hpp"

namespace logspect {

struct NnlsResult {
    Eigen::VectorXd x;
    long long iterations = 0;
    bool converged = false;
};

/// Lawson-Hanson active-set solver for min ||E x - f||_2 subject to x >= 0.
inline NnlsResult nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, long long max_iters = -1) {
    using Eigen::Index;
    const Index n = E.cols();
    if (E.rows() != f.size()) throw ShapeError("nnls: rhs length mismatch");
    if (max_iters < 0) max_iters = 3 * n + 10;

    NnlsResult out;
    out.x = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * E.norm() *
                       static_cast<double>(std::max(E.rows(), n)) * std::max(1.0, f.norm());

    auto solve_passive = [&](Eigen::VectorXd& s) {
        std::vector<Index> idx;
        for (Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Eigen::MatrixXd Ep(E.rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) Ep.col(static_cast<Index>(c)) = E.col(idx[c]);
        const Eigen::VectorXd sp = Ep.colPivHouseholderQr().solve(f);
        s.setZero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) s[idx[c]] = sp[static_cast<Index>(c)];
    };

    Eigen::VectorXd w = E.transpose() * (f - E * out.x);
    Eigen::VectorXd s(n);
    for (; out.iterations < max_iters; ++out.iterations) {
        Index t = -1;
        double wmax = tol;
        for (Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w[j] > wmax) {
                wmax = w[j];
                t = j;
            }
        if (t < 0) {
            out.converged = true;
            break;
        }
        passive[static_cast<std::size_t>(t)] = 1;
        for (long long inner = 0; inner <= n; ++inner) {
            solve_passive(s);
            if (inner == 0 && s[t] <= 0.0) {
                // Dependent column: the gradient sign was roundoff.
                passive[static_cast<std::size_t>(t)] = 0;
                break;
            }
            bool feasible = true;
            double step = 1.0;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
                    feasible = false;
                    const double denom = out.x[j] - s[j];
                    if (denom > 0.0) step = std::min(step, out.x[j] / denom);
                }
            if (feasible) {
                out.x = s;
                break;
            }
            out.x += step * (s - out.x);
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && out.x[j] <= tol) {
                    passive[static_cast<std::size_t>(j)] = 0;
                    out.x[j] = 0.0;
                }
        }
        w = E.transpose() * (f - E * out.x);
        if (!passive[static_cast<std::size_t>(t)] && out.x[t] == 0.0) w[t] = 0.0;
    }
    return out;
}

}  // namespace logspect

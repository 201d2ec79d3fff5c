#pragma once

#include <string>

#include <Eigen/Dense>

#include "logspect/graphs.hpp"
#include "logspect/signals.hpp"

namespace logspect {

/// The commutator map S -> C S - S C for a fixed symmetric C.
///
/// In vectorized form this is A = I (x) C - C (x) I acting on vec(S); it is
/// never formed here. The map is self-adjoint under the Frobenius inner
/// product, and its spectral norm is the eigenvalue spread of C. The
/// eigenvalues are computed once at construction.
class CommutatorOp {
public:
    CommutatorOp() = default;

    explicit CommutatorOp(Matrix C) : C_(std::move(C)) {
        if (C_.rows() != C_.cols()) throw ShapeError("commutator needs a square matrix");
        const double scale = std::max(1.0, C_.cwiseAbs().maxCoeff());
        if ((C_ - C_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw ValidationError("commutator matrix must be symmetric");
        C_ = detail::symmetrized(C_);
        if (C_.rows() > 0) eigenvalues_ = eigen_symmetric(C_).eigenvalues();
    }

    explicit CommutatorOp(const CovarianceEstimate& cov) : CommutatorOp(cov.matrix()) {}

    const Matrix& matrix() const noexcept { return C_; }
    Index size() const noexcept { return C_.rows(); }
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }

    Matrix apply(const Matrix& S) const {
        check(S);
        Matrix out(C_.rows(), C_.rows());
        out.noalias() = C_ * S;
        out.noalias() -= S * C_;
        return out;
    }

    /// C Y - Y C; equal to apply() because C is symmetric.
    Matrix adjoint_apply(const Matrix& Y) const { return apply(Y); }

    /// lambda_max(C) - lambda_min(C) = ||I (x) C - C (x) I||_2.
    double op_norm() const {
        if (eigenvalues_.size() == 0) return 0.0;
        return eigenvalues_(eigenvalues_.size() - 1) - eigenvalues_(0);
    }

private:
    void check(const Matrix& S) const {
        if (S.rows() != C_.rows() || S.cols() != C_.cols())
            throw ShapeError("commutator operand is " + std::to_string(S.rows()) + "x" + std::to_string(S.cols()) +
                             ", expected " + std::to_string(C_.rows()) + "x" + std::to_string(C_.cols()));
    }

    Matrix C_;
    Vector eigenvalues_;
};

inline Matrix commutator_apply(const CommutatorOp& op, const Matrix& S) { return op.apply(S); }
inline Matrix commutator_adjoint_apply(const CommutatorOp& op, const Matrix& Y) { return op.adjoint_apply(Y); }
inline double commutator_op_norm(const CommutatorOp& op) { return op.op_norm(); }

/// Edge weights in canonical pair order (strict lower triangle read column
/// by column).
struct UpperTriangleVector {
    Index m = 0;
    Vector y;

    UpperTriangleVector() = default;
    UpperTriangleVector(Index nodes, Vector values) : m(nodes), y(std::move(values)) {
        if (y.size() != pair_count(m))
            throw ShapeError("upper-triangle vector of length " + std::to_string(y.size()) + " does not match m=" +
                             std::to_string(m));
    }
};

/// B y: the valid adjacency matrix with the given pair weights.
inline AdjacencyMatrix b_map(const UpperTriangleVector& v) {
    for (Index k = 0; k < v.y.size(); ++k)
        if (v.y[k] < 0.0) throw ValidationError("b_map needs nonnegative entries");
    return AdjacencyMatrix(v.m, v.y);
}

inline UpperTriangleVector b_map_inverse(const AdjacencyMatrix& g) { return {g.nodes(), g.pair_weights()}; }

/// Linear extension of B to signed vectors: symmetric zero-diagonal matrix.
inline Matrix b_embed(Index m, const Vector& y) {
    if (y.size() != pair_count(m)) throw ShapeError("pair vector length mismatch");
    Matrix S = Matrix::Zero(m, m);
    Index k = 0;
    for (Index j = 0; j < m; ++j)
        for (Index i = j + 1; i < m; ++i, ++k) S(i, j) = S(j, i) = y[k];
    return S;
}

/// B^T: pair k of the result is M_ij + M_ji.
inline Vector b_adjoint(const Matrix& M) {
    const Index m = M.rows();
    Vector y(pair_count(m));
    Index k = 0;
    for (Index j = 0; j < m; ++j)
        for (Index i = j + 1; i < m; ++i, ++k) y[k] = M(i, j) + M(j, i);
    return y;
}

inline constexpr Index kMaxAssemblyNodes = 200;

/// Dense A_n B, m^2 x m(m-1)/2, with column k = vec(C E_k - E_k C) in
/// column-major vec order, E_k the symmetric unit matrix of pair k.
inline Matrix assemble_AnB(const CommutatorOp& op) {
    const Index m = op.size();
    if (m > kMaxAssemblyNodes)
        throw ParameterError("assemble_AnB refuses m=" + std::to_string(m) + " > " + std::to_string(kMaxAssemblyNodes));
    const Matrix& C = op.matrix();
    Matrix M = Matrix::Zero(m * m, pair_count(m));
    Index k = 0;
    for (Index j = 0; j < m; ++j)
        for (Index i = j + 1; i < m; ++i, ++k) {
            // C E: column j gets C(:,i), column i gets C(:,j).
            // E C: row i gets C(j,:), row j gets C(i,:).
            auto col = M.col(k);
            for (Index r = 0; r < m; ++r) {
                col(r + m * j) += C(r, i);
                col(r + m * i) += C(r, j);
                col(i + m * r) -= C(j, r);
                col(j + m * r) -= C(i, r);
            }
        }
    return M;
}

}  // namespace logspect

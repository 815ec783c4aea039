#include "cosparse/numkernels.hpp"

#include "cosparse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cosparse {

Matrix soft_threshold(const Matrix& m, double theta) {
    if (!std::isfinite(theta) || theta < 0.0)
        throw InvalidArgument("soft_threshold: threshold must be finite and nonnegative");
    return m.unaryExpr([theta](double v) {
        double shrunk = std::abs(v) - theta;
        return shrunk > 0.0 ? (v > 0.0 ? shrunk : -shrunk) : 0.0;
    });
}

double scaled_eps(double rel, double normal_trace) {
    return rel * std::max(1.0, normal_trace);
}

Matrix ridge_solve(const Matrix& a, const Matrix& y, double eps) {
    if (a.rows() != y.rows())
        throw InvalidArgument("ridge_solve: a and y must have the same number of rows");
    if (!std::isfinite(eps) || eps < 0.0)
        throw InvalidArgument("ridge_solve: eps must be finite and nonnegative");
    if (!a.allFinite() || !y.allFinite())
        throw InvalidArgument("ridge_solve: non-finite input");

    Matrix g = a.transpose() * a;
    Matrix rhs = a.transpose() * y;
    if (eps == 0.0) {
        // No damping requested: reject singular normal matrices outright
        // instead of returning one arbitrary least-squares solution.
        Eigen::SelfAdjointEigenSolver<Matrix> es(g);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("ridge_solve: eigendecomposition of the normal matrix failed");
        double lmax = g.rows() ? es.eigenvalues().maxCoeff() : 0.0;
        double lmin = g.rows() ? es.eigenvalues().minCoeff() : 0.0;
        if (g.rows() && (lmax <= 0.0 || lmin <= 1e-12 * lmax))
            throw RankDeficient("ridge_solve: normal matrix is singular with eps == 0; pass eps > 0");
    } else {
        g.diagonal().array() += eps;
    }
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("ridge_solve: Cholesky factorization of the damped normal matrix failed");
    return llt.solve(rhs);
}

Matrix sylvester_solve(const Matrix& a, const Matrix& c, const Matrix& e) {
    if (a.rows() != a.cols() || c.rows() != c.cols() || e.rows() != a.rows() || e.cols() != c.rows())
        throw InvalidArgument("sylvester_solve: need a (p x p), c (d x d), e (p x d)");
    if (!a.allFinite() || !c.allFinite() || !e.allFinite())
        throw InvalidArgument("sylvester_solve: non-finite input");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()) ||
        (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff()))
        throw InvalidArgument("sylvester_solve: a and c must be symmetric");

    const Eigen::Index p = a.rows();
    const Eigen::Index n = c.rows();
    Matrix d;
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a);
    Eigen::SelfAdjointEigenSolver<Matrix> ec(c);
    if (ea.info() == Eigen::Success && ec.info() == Eigen::Success) {
        // In the joint eigenbasis the operator is diagonal with entries
        // lambda_i + mu_j; divisions by ~0 are caught by the residual check.
        Matrix et = ea.eigenvectors().transpose() * e * ec.eigenvectors();
        for (Eigen::Index i = 0; i < et.rows(); ++i)
            for (Eigen::Index j = 0; j < et.cols(); ++j)
                et(i, j) /= ea.eigenvalues()(i) + ec.eigenvalues()(j);
        d = ea.eigenvectors() * et * ec.eigenvectors().transpose();
    } else {
        // The QL iteration can stall on heavily clustered spectra. Fall back
        // to the dense vectorized system (I (x) a + c^T (x) I) vec(d) = vec(e).
        if (p * n > 8192)
            throw NumericalFailure("sylvester_solve: eigendecomposition failed on a system too large "
                                   "for the dense fallback");
        Matrix k = Matrix::Zero(p * n, p * n);
        for (Eigen::Index j = 0; j < n; ++j) k.block(p * j, p * j, p, p) = a;
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index col = 0; col < n; ++col)
                for (Eigen::Index i = 0; i < p; ++i) k(p * r + i, p * col + i) += c(col, r);
        Eigen::VectorXd ve = Eigen::Map<const Eigen::VectorXd>(e.data(), p * n);
        Eigen::LLT<Matrix> llt(k);
        Eigen::VectorXd vd;
        if (llt.info() == Eigen::Success) {
            vd = llt.solve(ve);
        } else {
            vd = k.partialPivLu().solve(ve);
        }
        d = Eigen::Map<Matrix>(vd.data(), p, n);
    }

    double residual = (a * d + d * c - e).norm();
    double bound = 1e-8 * std::max(1.0, e.norm());
    if (!(residual <= bound)) {
        std::ostringstream msg;
        msg << "sylvester_solve: residual " << residual << " exceeds " << bound
            << " (eigenvalue pair summing to zero?)";
        throw NumericalFailure(msg.str());
    }
    return d;
}

Matrix seeded_gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    if (rows <= 0 || cols <= 0)
        throw InvalidArgument("seeded_gaussian: dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = normal(rng);
    for (Eigen::Index r = 0; r < rows; ++r) {
        double norm = m.row(r).norm();
        if (norm > 0.0)
            m.row(r) /= norm;
        else
            m(r, 0) = 1.0;  // unreachable in practice, keeps the unit-row contract
    }
    return m;
}

}  // namespace cosparse

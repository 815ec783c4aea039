#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace cosparse {

using Matrix = Eigen::MatrixXd;

// Entrywise sign(x) * max(|x| - theta, 0). theta must be finite and >= 0.
Matrix soft_threshold(const Matrix& m, double theta);

// Solves the Tikhonov-damped normal equations (a^T a + eps I) w = a^T y of
// min_w ||y - a w||_F^2. With eps == 0 the normal matrix must be invertible;
// a rank-deficient system raises RankDeficient telling the caller to pass
// eps > 0. Right-sided problems min_D ||r - D m||_F^2 are solved by callers
// through the transposed system.
Matrix ridge_solve(const Matrix& a, const Matrix& y, double eps);

// Damping "relative to the trace of the normal matrix": rel * max(1, trace).
// trace(a^T a) == ||a||_F^2, so callers typically pass a.squaredNorm().
// The max(1, .) floor keeps all-zero data solvable.
double scaled_eps(double rel, double normal_trace);

// Solves a d + d c = e with a (p x p) and c (d x d) symmetric PSD via their
// eigendecompositions. Callers make the spectrum sums nonzero by adding
// eps I beforehand. The solution is verified against
// ||a d + d c - e||_F <= 1e-8 * max(1, ||e||_F); NumericalFailure otherwise.
Matrix sylvester_solve(const Matrix& a, const Matrix& c, const Matrix& e);

// Deterministic standard-normal matrix, rows rescaled to unit Euclidean norm.
// Same seed always yields the same matrix on a given platform.
Matrix seeded_gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

}  // namespace cosparse

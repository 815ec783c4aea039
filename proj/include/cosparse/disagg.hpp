#pragma once

#include "cosparse/train.hpp"

#include <vector>

namespace cosparse {

struct DisaggOptions {
    bool clip = true;  // zero out negative entries of the final estimates
    BregmanInit bregman_init = BregmanInit::zeros;
    // When set, each appliance sub-problem is iterated to its own convergence
    // instead of the default single pass, which makes the objective trace a
    // true block-coordinate descent (used by the monotonicity tests).
    bool inner_converged = false;
    int inner_max = 100;
    double inner_tol = 1e-10;
};

struct DisaggResult {
    std::vector<Matrix> estimates;        // one slots x days block per appliance
    std::vector<double> objective_trace;  // index 0 is the initial split
    double sum_residual = 0.0;            // ||X - sum X^_i|| / ||X||, 0 for zero data
    bool clipped = false;
    std::vector<double> clipped_fraction;  // per appliance, empty when not clipped
    int iterations = 0;
};

// ||x - sum_i estimates[i]||^2 + lambda * sum_i ||dicts[i] * estimates[i]||_1
double disagg_objective(const Matrix& x_agg, const std::vector<Matrix>& estimates,
                        const std::vector<AnalysisDict>& dicts, double lambda);

struct ClipResult {
    std::vector<Matrix> estimates;
    std::vector<double> fraction;  // |clipped energy| / |total energy|, 0 for empty
};

ClipResult clip_nonnegative(const std::vector<Matrix>& estimates);

// Block-coordinate Split Bregman on the convex program above with the
// dictionaries fixed. Starts from the uniform split x_agg / N.
DisaggResult disaggregate(const Matrix& x_agg, const std::vector<AnalysisDict>& dicts,
                          const Hyperparams& h, const DisaggOptions& opts = {});

}  // namespace cosparse

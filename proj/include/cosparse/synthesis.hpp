#pragma once

#include "cosparse/disagg.hpp"
#include "cosparse/numkernels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cosparse {

struct SynthesisDict {
    std::string appliance_id;
    Matrix basis;  // slots x atoms, unit-norm columns
};

struct SynthesisControls {
    int atoms = 3;
    double lambda = 0.1;
    int max_outer = 100;
    double tol = 1e-6;       // relative objective change that stops the outer loop
    int code_max = 200;      // shrinkage iterations per code step
    double code_tol = 1e-10;
    double ls_eps = 1e-8;
    std::uint64_t seed = 1;
    Matrix basis_init;  // optional; empty means seeded random unit columns
};

void validate(const SynthesisControls& c);

struct SynthesisResult {
    SynthesisDict dict;
    Matrix codes;  // atoms x days, entrywise >= 0
    std::vector<double> objective;  // ||X - D Z||_F^2 + lambda ||Z||_1, index 0 initial
    int iterations = 0;
};

// ||x - d z||_F^2 + lambda ||z||_1 (the codes are nonnegative so the l1 term
// is just the entry sum, but the absolute-value form is kept for generality).
double synthesis_objective(const Matrix& x, const Matrix& d, const Matrix& z, double lambda);

// Proximal gradient (iterative shrinkage) for the nonnegative sparse coding
// problem min_{z >= 0} ||x - d z||_F^2 + lambda ||z||_1 with d fixed. The
// step is 0.99 / sigma_max(d)^2; larger steps can diverge (the bound is
// 1 / sigma_max(d)^2) and an objective increase raises NumericalFailure.
// z0 warm-starts the iteration (zeros when null), which keeps the outer
// training objective monotone across alternating rounds.
Matrix nonneg_sparse_code(const Matrix& d, const Matrix& x, double lambda,
                          int max_iter, double tol, std::vector<double>* trace = nullptr,
                          const Matrix* z0 = nullptr);

// Alternating minimization: code step to inner tolerance, then a ridge
// dictionary step with columns renormalized to unit length (scale absorbed
// into the codes).
SynthesisResult train_synthesis(const Matrix& x, const SynthesisControls& c,
                                const std::string& appliance_id = "");

// Packages independent per-appliance synthesis runs like the analysis
// trainers do, with model == "synthesis" and the basis stored per appliance.
TrainArtifacts train_synthesis_set(const std::vector<Matrix>& xs, const SynthesisControls& c,
                                   const std::vector<std::string>& labels = {});

// Sparse recovery over the column-concatenated dictionary, then per-appliance
// reconstruction X^_i = D_i Z_i. Codes stay nonnegative; clipping only
// touches the reconstructions. Pass codes_out to inspect the recovered
// loading coefficients.
DisaggResult disaggregate_synthesis(const Matrix& x_agg, const std::vector<SynthesisDict>& dicts,
                                    double lambda, int max_iter = 2000, double tol = 1e-12,
                                    bool clip = true, Matrix* codes_out = nullptr);

}  // namespace cosparse

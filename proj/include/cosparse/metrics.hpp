#pragma once

#include "cosparse/numkernels.hpp"

#include <string>
#include <vector>

namespace cosparse {

// 1 - sum_t sum_n |est - truth| / (2 * sum_t aggregate). The accumulation
// order is pinned (day-major, slot-minor, appliances left to right; the
// denominator accumulated in the same day/slot order) so that generators
// summing appliances in the same order reproduce 0.5 bitwise on coverage-1
// data with zero estimates. Always <= 1; can be negative for bad estimates.
double disaggregation_accuracy(const std::vector<Matrix>& est, const std::vector<Matrix>& truth,
                               const Matrix& aggregate);

// sum_t |est - truth| / sum_t truth for one appliance. UndefinedMetric when
// the truth carries no energy.
double normalized_error(const Matrix& est, const Matrix& truth);

struct SplitSummary {
    double mean = 0.0;
    double std = 0.0;      // sample (n-1) standard deviation; 0 when undefined
    bool std_defined = false;  // false for a single value
    int count = 0;
};

SplitSummary summarize_splits(const std::vector<double>& values);

enum class TTestAlpha { a05, a01 };  // two-sided 0.05 / 0.01

struct TTestResult {
    double t = 0.0;
    bool significant = false;
    bool t_infinite = false;  // zero variance with nonzero mean difference
    int df = 0;
};

// Paired two-sided Student t on per-split differences a[i] - b[i]. The
// critical values are an embedded table for df 1..200; larger df clamp to
// the df=200 row (within 3e-3 of the normal limit). All-zero differences
// give t = 0, not significant; zero variance with nonzero mean is reported
// significant with the t value flagged infinite.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b,
                          TTestAlpha alpha);

// Tabulated two-sided critical value, df clamped to [1, 200].
double t_critical(int df, TTestAlpha alpha);

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<std::string> appliances;
    std::vector<double> per_appliance_normalized_error;
    double mean_accuracy = 0.0;  // across splits; equals `accuracy` for a single run
    double std_accuracy = 0.0;
    int split_count = 1;
};

}  // namespace cosparse

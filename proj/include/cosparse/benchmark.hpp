#pragma once

#include "cosparse/datapipe.hpp"
#include "cosparse/disagg.hpp"
#include "cosparse/synthesis.hpp"
#include "cosparse/train.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cosparse {

enum class ModelKind { simple, distinctive, disaggregating, synthesis };

const char* model_name(ModelKind m);
// Inverse of model_name; unknown names throw ConfigError listing the valid
// spellings.
ModelKind model_from_name(const std::string& name);

// The sweep grid plus the solver settings shared by every cell. Defaults
// give the stock comparison: five training fractions, all four models,
// twenty replications, converged dictionary training and a fixed 2000-pass
// disaggregation budget.
struct BenchmarkConfig {
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<ModelKind> models{ModelKind::simple, ModelKind::distinctive,
                                  ModelKind::disaggregating, ModelKind::synthesis};
    int replications = 20;
    std::uint64_t seed = 1;
    int threads = 1;  // worker count; 0 means one per hardware thread
    Hyperparams train;
    Hyperparams disagg;
    DisaggOptions disagg_options;
    SynthesisControls synthesis;

    BenchmarkConfig() {
        disagg.tol = 0.0;
        disagg.max_outer = 2000;
    }
};

void validate(const BenchmarkConfig& cfg);

// One (fraction, model, replication) outcome. A failed cell keeps its slot
// with ok = false and a "category: message" note; the sweep continues.
struct BenchmarkCell {
    double fraction = 0.0;
    int fraction_index = 0;
    ModelKind model = ModelKind::simple;
    int replication = 0;
    bool ok = false;
    std::string error;
    double accuracy = 0.0;
    std::vector<double> normalized_error;  // per appliance, dataset order
};

struct BenchmarkResult {
    std::vector<std::string> appliances;  // dataset appliance order
    std::vector<BenchmarkCell> cells;     // (fraction, model, replication) order
    int failed = 0;
};

// Seed for one sweep cell. Deliberately independent of the model so all
// models see the same train/test split of a (fraction, replication) pair,
// which is what makes the paired t-tests valid.
std::uint64_t benchmark_cell_seed(std::uint64_t base, std::size_t fraction_index,
                                  int replication);

// Runs the grid over day splits of one house: split, train, disaggregate,
// evaluate per cell on cfg.threads workers. Cell values do not depend on the
// worker count; only wall time does.
BenchmarkResult run_benchmark(const HouseDataset& ds, const BenchmarkConfig& cfg);

// Long format, one row per cell:
// fraction,model,replication,ok,accuracy,<label>_normalized_error...,error
void write_benchmark_csv(const std::string& path, const BenchmarkResult& res);

// Per (fraction, model): ok-cell count, mean/std accuracy, mean per-appliance
// normalized error. Rows with no ok cells keep the counts and leave the
// statistics empty.
void write_benchmark_summary_csv(const std::string& path, const BenchmarkResult& res);

// Pairwise paired t-tests over replications, per fraction, both significance
// levels. Pairs with fewer than two mutually ok replications leave the
// statistics empty.
void write_benchmark_ttests_csv(const std::string& path, const BenchmarkResult& res);

// JSON round trip for the sweep configuration. Parsing accepts partial
// objects (absent fields keep their defaults) and rejects unknown fields;
// serialization writes every field, so a serialized config is a complete
// run snapshot.
BenchmarkConfig parse_benchmark_config(const std::string& json_text);
std::string serialize_benchmark_config(const BenchmarkConfig& cfg);

}  // namespace cosparse

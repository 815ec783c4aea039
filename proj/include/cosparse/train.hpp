#pragma once

#include "cosparse/numkernels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cosparse {

// standard accumulates the constraint residual, b += D X^ - Z;
// reflected replaces the state instead, b = Z - D X^ - b.
enum class BregmanVariant { standard, reflected };
// gram_dxd penalizes ||D^T D_j - I|| (slots x slots);
// cross_gram_pxp penalizes ||D D_j^T - I|| (atoms x atoms).
enum class IncoherenceVariant { gram_dxd, cross_gram_pxp };
enum class BregmanInit { ones, zeros };
enum class TrainerMode { simple, distinctive, disaggregating };

struct Hyperparams {
    double lambda = 0.1;   // l1 weight on the analysis coefficients
    double mu = 0.5;       // augmented (Bregman) penalty weight
    double eta = 0.2;      // cross-dictionary incoherence weight
    double gamma = 0.05;   // cross-dictionary energy weight (disaggregating)
    int atoms = 3;         // rows per analysis operator
    int max_outer = 100;
    double tol = 1e-6;     // relative objective change that stops a block
    double ls_eps = 1e-8;  // Tikhonov damping relative to the normal-matrix trace
    std::uint64_t seed = 1;
    BregmanVariant bregman_variant = BregmanVariant::standard;
    IncoherenceVariant incoherence_variant = IncoherenceVariant::gram_dxd;
    BregmanInit b_init = BregmanInit::ones;  // training Bregman start
};

void validate(const Hyperparams& h);

struct AnalysisDict {
    std::string appliance_id;
    Matrix op;  // atoms x slots, applied from the left
};

struct TrainTrace {
    std::vector<double> objective;            // index 0 is the initial state
    std::vector<double> constraint_residual;  // ||Z - D X^|| / max(1, ||Z||)
    int iterations = 0;
    double final_fidelity = 0.0;  // ||X - X^||_F / ||X||_F, 0 for zero data
};

// One appliance's Split Bregman block together with the other appliances'
// dictionaries it couples to (empty for the simple formulation).
struct TrainState {
    Matrix data;      // X, slots x days
    Matrix dict;      // D, atoms x slots
    Matrix estimate;  // X^ (cleaned signal)
    Matrix proxy;     // Z = D X^ proxy, atoms x days
    Matrix bregman;   // B
    std::vector<Matrix> peer_dicts;
};

// Per-appliance seeds so coupled runs reproduce independent ones exactly.
std::uint64_t appliance_seed(std::uint64_t base, std::size_t index);

// X^ = X, B per h.b_init, D from seeded_gaussian, Z = D X^.
TrainState make_train_state(const Matrix& x, const Hyperparams& h, std::uint64_t seed);

// Augmented Lagrangian of one appliance block under the chosen formulation:
// ||X - X^||^2 + lambda ||Z||_1 + mu ||Z - D X^ - B||^2, plus the incoherence
// penalty against the peer dictionaries (distinctive and disaggregating) and
// the cross energy gamma * sum_j ||D_j X^||^2 (disaggregating only).
double augmented_objective(const TrainState& s, const Hyperparams& h, TrainerMode mode);

// The quantity the stopping rule watches: ||X - X^||^2 + lambda ||D X^||_1.
double unaugmented_objective(const TrainState& s, const Hyperparams& h);

double constraint_residual(const TrainState& s);

// Exact block minimizers, one variable each, everything else fixed. With
// eta == 0 the dictionary step takes the plain ridge path and with gamma == 0
// the estimate step omits the cross block, so degenerate hyperparameters
// reproduce the simpler trainers bitwise.
void dictionary_step(TrainState& s, const Hyperparams& h, TrainerMode mode);
void estimate_step(TrainState& s, const Hyperparams& h, TrainerMode mode);
void proxy_step(TrainState& s, const Hyperparams& h);
void bregman_step(TrainState& s, const Hyperparams& h);

struct TrainResult {
    AnalysisDict dict;
    TrainTrace trace;
    Matrix estimate;  // final cleaned signal X^
};

TrainResult train_simple(const Matrix& x, const Hyperparams& h,
                         const std::string& appliance_id = "");

struct TrainArtifacts {
    std::string model;  // simple | distinctive | disaggregating | synthesis
    Hyperparams hyper;
    int slots_per_day = 0;
    // Analysis operator (atoms x slots) per appliance; for model "synthesis"
    // the same container holds the slots x atoms basis instead.
    std::vector<AnalysisDict> dicts;
    std::vector<TrainTrace> traces;
    std::vector<Matrix> estimates;  // final cleaned signals, not serialized
};

// Independent per-appliance runs packaged like the coupled trainers.
TrainArtifacts train_simple_set(const std::vector<Matrix>& xs, const Hyperparams& h,
                                const std::vector<std::string>& labels = {});

TrainArtifacts train_distinctive(const std::vector<Matrix>& xs, const Hyperparams& h,
                                 const std::vector<std::string>& labels = {});

TrainArtifacts train_disaggregating(const std::vector<Matrix>& xs, const Hyperparams& h,
                                    const std::vector<std::string>& labels = {});

}  // namespace cosparse

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cosparse/numkernels.hpp"

namespace cosparse {

// Raw channel samples straight off a meter: strictly increasing UTC epoch
// second timestamps, one watt reading each.
struct TimeSeries {
    std::string channel_id;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
};

// One channel folded into slots x days; column k covers the complete UTC
// calendar day day_labels[k] ("YYYY-MM-DD").
struct DayMatrix {
    std::string channel_id;
    Matrix values;
    std::vector<std::string> day_labels;
    Eigen::Index slots() const { return values.rows(); }
    Eigen::Index days() const { return values.cols(); }
};

// A household: per-appliance day matrices (channel_id doubles as the
// appliance label) plus the mains channel. All matrices share shape and day
// labels. coverage is the fraction of mains energy explained by the listed
// appliances; synthetic data is exactly covered by construction.
struct HouseDataset {
    std::string house_id;
    std::vector<DayMatrix> appliances;
    DayMatrix aggregate;
    double coverage = 1.0;
};

enum class SplitMode { training_mode, testing_mode };

struct SplitSpec {
    SplitMode mode = SplitMode::training_mode;
    double fraction = 0.2;  // training_mode: share of days that train
    int house = 0;          // testing_mode: index of the training house
    std::uint64_t seed = 1;
    int replications = 1;
};

void validate(const TimeSeries& ts);

// Means samples into aligned windows of slot_seconds (window start = largest
// multiple of slot_seconds <= timestamp). The expected per-window count comes
// from the median sample cadence (1 when the series is a single sample);
// windows holding fewer than half of it count as missing and are omitted.
// Output timestamps are the window starts.
TimeSeries resample_mean(const TimeSeries& ts, std::int64_t slot_seconds);

// Folds a slot-aligned series into slots_per_day x n by UTC calendar day.
// slots_per_day must divide 86400 and every timestamp must sit on the slot
// grid. Days that have samples but miss at least one slot are dropped and
// their labels appended to *dropped_days when given; days with no samples at
// all are not reported. No complete day -> EmptyData.
DayMatrix build_day_matrix(const TimeSeries& ts, int slots_per_day,
                           std::vector<std::string>* dropped_days = nullptr);

// "YYYY-MM-DD" for a count of days since 1970-01-01, proleptic Gregorian,
// and the inverse. Bad labels -> ParseError.
std::string day_label(std::int64_t days_since_epoch);
std::int64_t parse_day_label(const std::string& label);

// Reads a house manifest JSON
//   {"house_id": ..., "slots_per_day": d, "mains": "mains.csv",
//    "appliances": [{"label": ..., "file": ...}, ...]}
// with channel paths resolved relative to the manifest. Channel files are
// CSV with header `timestamp,watts`. Each channel is resampled to 86400/d
// seconds, folded by UTC day, and all channels are restricted to the days
// complete in every one of them. coverage = appliance energy / mains energy
// clamped to [0, 1]; a zero-energy mains counts as fully covered.
HouseDataset load_house_csv(const std::string& manifest_path);

// Partitions day columns at random: round-half-up fraction*n columns train,
// the rest test, the same selection applied to every channel. Both sides
// stay chronologically ordered and share the parent's coverage. A side that
// would end up empty -> InvalidArgument.
std::pair<HouseDataset, HouseDataset> split_training_mode(const HouseDataset& ds,
                                                          double fraction,
                                                          std::uint64_t seed);

struct TestingSplit {
    HouseDataset train;
    std::vector<HouseDataset> test;
    std::vector<std::string> dropped_labels;  // sorted, absent from some house
};

// Keeps only appliance labels present in every house, ordered as in the
// training house, and splits by house index. Coverage is recomputed from the
// kept appliances. Fewer than two houses or an empty label intersection ->
// ProtocolError.
TestingSplit split_testing_mode(const std::vector<HouseDataset>& houses,
                                std::size_t train_house);

enum class SignatureType { two_state, multi_state, periodic_cycler, continuous_varying };

struct ApplianceSpec {
    std::string label;
    SignatureType type = SignatureType::two_state;
    std::vector<double> levels = {200.0};  // watts; multi_state steps through all
    double duty = 0.3;         // two_state / multi_state: fraction of slots on
    int period = 0;            // periodic_cycler: half cycle in slots; 0 -> slots/12
    int jitter = 2;            // slots of daily wobble around the appliance's
                               // fixed placement (0 = same slots every day)
    double noise_sigma = 0.0;  // Gaussian watts, signal + noise floored at 0
};

struct SynthConfig {
    std::string house_id = "synthetic";
    int slots_per_day = 144;
    int days = 30;
    std::string start_day = "2024-01-01";
    std::vector<ApplianceSpec> appliances;
};

void validate(const SynthConfig& cfg);

// Deterministic synthetic household. Appliance i draws from its own engine
// seeded with appliance_seed(seed, i): first the appliance's base placement
// (block start, cycle phase, or waveform phases), then per day one jitter
// draw when jitter > 0, then one noise draw per slot when noise_sigma > 0.
// Cells are max(signal + noise, 0). The mains matrix accumulates the
// appliance matrices left to right, so each cell is the exact running sum
// its order implies.
HouseDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed);

// JSON <-> SynthConfig with the field names above; appliance types are the
// enum spellings. Unknown or ill-typed fields -> ConfigError naming the
// field. serialize round-trips through parse bit-exactly.
SynthConfig parse_synth_config(const std::string& json_text);
std::string serialize_synth_config(const SynthConfig& cfg);

// Frozen three-appliance fixture with per-(slot, day) disjoint support:
// comb-shaped band signatures whose band rotates with day parity over the
// 20 training days and sits at the appliance's home band over the 10 test
// days. Amplitudes cycle through five deterministic steps per appliance.
HouseDataset disjoint_preset_train();
HouseDataset disjoint_preset_test();

// Canned four-appliance household (one appliance per signature type) at 72
// slots per day, kilowatt amplitudes, mild noise, and day-to-day placement
// spread wide enough that a handful of training days cannot span it; the
// stock dataset for low-training-volume model comparisons.
SynthConfig benchmark_preset_config();

}  // namespace cosparse

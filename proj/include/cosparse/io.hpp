#pragma once

#include <string>
#include <vector>

#include "cosparse/datapipe.hpp"
#include "cosparse/metrics.hpp"
#include "cosparse/train.hpp"

namespace cosparse {

// Day-matrix CSV: header `slot,<day label>,...`, one row per slot starting
// with its index, values at nine significant digits. Reading a file this
// wrote and writing the result again reproduces the file byte for byte.
void write_day_matrix_csv(const std::string& path, const DayMatrix& m);
DayMatrix read_day_matrix_csv(const std::string& path, const std::string& channel_id);

// Expands a day matrix into `timestamp,watts` rows at the slot cadence, the
// channel format load_house_csv ingests. The slot count must divide 86400.
void write_channel_csv(const std::string& path, const DayMatrix& m);

// Dataset directory: manifest.json plus one channel CSV for the mains and
// each appliance, loadable with load_house_csv.
void write_house_dataset(const std::string& dir, const HouseDataset& hd);

// Versioned artifacts JSON: model, hyperparameter snapshot, appliance order,
// row-major operator entries, per-appliance traces. Training estimates are
// not serialized. This file is the train -> disaggregate contract.
void save_artifacts(const std::string& path, const TrainArtifacts& art);
TrainArtifacts load_artifacts(const std::string& path);

// Estimates directory: estimates.json naming one day-matrix CSV per
// appliance, kept in order.
void write_estimates(const std::string& dir, const std::vector<DayMatrix>& estimates);
std::vector<DayMatrix> read_estimates(const std::string& dir);

// MetricsReport as JSON and as a header-plus-one-row CSV.
void write_metrics_report_json(const std::string& path, const MetricsReport& rep);
void write_metrics_report_csv(const std::string& path, const MetricsReport& rep);

}  // namespace cosparse

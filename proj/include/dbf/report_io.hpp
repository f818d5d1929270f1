#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dbf/pipeline.hpp"

namespace dbf {

struct OutputBundle {
    std::string command;  ///< "run", "sweep" or "calibrate"
    ScenarioConfig config;
    std::optional<CalibrationRecord> calibration;
    std::vector<RunReport> trials;
    std::optional<MonteCarloSummary> summary;
    std::vector<SweepPoint> sweep;
    double wall_time_s = 0.0;  ///< recorded in the manifest only
};

/// Writes the data files for whatever the bundle holds, then manifest.json
/// with a SHA-256 digest per file. Everything except the manifest is a pure
/// function of the bundle contents minus wall time. Returns the written
/// paths relative to `out_dir`. Throws IoError naming the failing path.
///
///   summary.json              scenario, calibration, aggregate metrics
///   trials.csv                one row per trial
///   localization_metrics.csv  quantity, rmse_m, bias_m, std_m, n_trials
///   exchanges.jsonl           one record per two-way exchange
///   beam_metrics.jsonl        one record per trial
///   power_map.csv             x, y, power_db (first trial carrying a map)
///   sweep.csv                 one row per sweep value
///   calibration.json          per-pair calibrated delays
///   waveforms/*.cf32(.json)   kept captures
std::vector<std::string> emit_outputs(const OutputBundle& bundle, const std::filesystem::path& out_dir);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace dbf

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dbf/beamformer.hpp"
#include "dbf/localization.hpp"
#include "dbf/scenario.hpp"
#include "dbf/sync.hpp"

namespace dbf {

/// Extra Gaussian errors layered on top of whatever the estimation chain
/// produces. Position error perturbs the free coordinates of the anchored
/// frame (y1, then x and y of every further node); sync error perturbs each
/// secondary node's residual clock offset.
struct ErrorInjection {
    double position_sigma_m = 0.0;
    double sync_sigma_s = 0.0;
};

struct PipelineOptions {
    ErrorInjection injected;
    std::size_t calibration_exchanges = 16;
    ExchangeConfig exchange;
    bool keep_waveforms = false;
    bool focus_only_gain = true;  ///< also run a capture with focus-only weights
    std::optional<GridSpec> power_map;
    unsigned jobs = 1;
};

/// Averages `calibration_exchanges` exchanges per node pair, each in a fresh
/// epoch, against the scenario's true ranges.
CalibrationRecord run_calibration(const ScenarioConfig& calibration, const PipelineOptions& options);

struct SyncEstimate {
    TimestampQuad quad;
    ExchangeTruth truth;
    double est_delay_s = 0.0;
    double est_offset_s = 0.0;
    double range_m = 0.0;
};

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t trial = 0;
    SimulationMode mode = SimulationMode::WaveformLevel;
    std::string failed_stage;  ///< empty on success
    std::string error;

    std::vector<SyncEstimate> exchanges;
    std::map<int, double> residual_offset_s;  ///< true minus estimated offset per node, after injection
    std::map<NodePairKey, double> ranges_m;
    RangeSet ranges;
    ArrayGeometry geometry;  ///< anchored frame, after injection
    BeamWeights weights;
    double constraint_residual = 0.0;  ///< max |w·C − g| on the estimated geometry

    RxPowerMetrics power;
    bool has_null = false;
    double coherent_gain = 0.0;
    double focus_only_coherent_gain = 0.0;

    std::optional<PowerMap> map;
    std::vector<std::pair<std::string, SampledWaveform>> waveforms;
    double wall_time_s = 0.0;

    [[nodiscard]] bool ok() const { return failed_stage.empty(); }
};

/// Default staggered patterns: every node alone once, then all together.
/// Three nodes get the reference staggered patterns of table_ask_patterns().
std::map<int, std::vector<std::uint8_t>> transmit_patterns(const ScenarioConfig& config);

/// One end-to-end trial. Stage failures are caught and recorded in the report.
RunReport run_pipeline(const ScenarioConfig& config, const CalibrationRecord& calibration,
                       const PipelineOptions& options = {}, std::size_t trial = 0);

struct MonteCarloSummary {
    std::size_t n_trials = 0;
    std::size_t n_failed = 0;
    std::map<std::string, std::size_t> failures_by_stage;
    std::vector<ErrorStats> localization;  ///< empty when no trial succeeded
    double median_null_depth_db = 0.0;
    double median_coherent_gain = 0.0;
    double median_focus_only_gain = 0.0;
    double mean_focus_power_db = 0.0;
    double mean_null_power_db = 0.0;
};

struct MonteCarloResult {
    std::vector<RunReport> trials;  ///< trial-index order
    MonteCarloSummary summary;
};

MonteCarloSummary summarize(const ScenarioConfig& config, const std::vector<RunReport>& trials);

/// Trials run on up to options.jobs threads; output order and content do not
/// depend on the thread count. Power maps and kept waveforms come from trial 0 only.
MonteCarloResult run_monte_carlo(const ScenarioConfig& config, const CalibrationRecord& calibration,
                                 const PipelineOptions& options, std::size_t n_trials);

inline const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes{"snr_db", "abstract_sigma_s", "position_sigma_m", "sync_sigma_s"};
    return axes;
}

struct SweepPoint {
    std::string axis;
    double value = 0.0;
    MonteCarloSummary summary;
};

/// Throws ValidationError on an unknown axis.
std::vector<SweepPoint> run_sweep(const ScenarioConfig& config, const CalibrationRecord& calibration,
                                  const PipelineOptions& options, const std::string& axis,
                                  const std::vector<double>& values, std::size_t n_trials);

}  // namespace dbf

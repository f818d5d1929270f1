#pragma once

#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dbf/clock.hpp"
#include "dbf/estimation.hpp"
#include "dbf/scenario.hpp"

namespace dbf {

/// One two-way exchange between a reference node (usually 0) and a remote
/// node n. Each time is on the local timebase of the node that produced it.
struct TimestampQuad {
    int reference_id = 0;
    int remote_id = 0;
    double t_tx_n = 0.0;  ///< remote transmits (remote clock)
    double t_rx_0 = 0.0;  ///< reference receives (reference clock)
    double t_tx_0 = 0.0;  ///< reference transmits (reference clock)
    double t_rx_n = 0.0;  ///< remote receives (remote clock)

    friend bool operator==(const TimestampQuad&, const TimestampQuad&) = default;
};

struct NodePair {
    int reference_id = 0;
    int remote_id = 0;
};

enum class Initiator { Remote, Reference };

struct ExchangeConfig {
    Initiator initiator = Initiator::Remote;
    double first_tx_s = 10e-6;      ///< initiator's scheduled transmit time, own clock
    double turnaround_s = 40e-6;    ///< responder transmits this long after its reception timestamp
    double capture_lead_s = 250e-9;  ///< capture opens this long before the nominal arrival
    double capture_tail_s = 750e-9;  ///< and stays open this long past the nominal pulse end
    ArrivalOptions arrival;
};

/// Ground truth behind one exchange, for scoring.
struct ExchangeTruth {
    double range_m = 0.0;
    double one_way_delay_s = 0.0;  ///< range/c plus the pair's mean chain latency
    double clock_offset_s = 0.0;   ///< Δ_remote − Δ_reference at the epoch start
};

struct ExchangeOutcome {
    TimestampQuad quad;
    ExchangeTruth truth;
    std::vector<SampledWaveform> captures;  ///< [reference capture, remote capture] when kept
};

/// Per-epoch clocks: each node's configured offset plus a uniform draw within
/// its PPS alignment bound.
std::map<int, ClockModel> realize_epoch_clocks(const ScenarioConfig& config, std::mt19937_64& rng);

/// Simulates both legs of the exchange. Detection failure on either leg
/// raises DetectionError.
ExchangeOutcome run_exchange(const ScenarioConfig& config, const std::map<int, ClockModel>& clocks, NodePair pair,
                             std::mt19937_64& rng, const ExchangeConfig& exchange = {}, bool keep_captures = false);

/// Convenience overload using the configured clocks without an epoch draw.
ExchangeOutcome run_exchange(const ScenarioConfig& config, NodePair pair, std::mt19937_64& rng,
                             const ExchangeConfig& exchange = {});

double est_prop_delay(const TimestampQuad& quad) noexcept;

/// Equals −(Δ_remote − Δ_reference) under the forward model.
double est_clock_offset(const TimestampQuad& quad) noexcept;

struct CalibrationRecord {
    std::map<NodePairKey, double> tau_cal_s;
    std::string source;

    [[nodiscard]] bool has(int a, int b) const { return tau_cal_s.count(make_pair_key(a, b)) != 0; }
    [[nodiscard]] double tau(int a, int b) const;  // throws CalibrationError
};

/// Below −1 ps raises CalibrationError.
CalibrationRecord calibrate(const TimestampQuad& quad, double true_range_m);

/// Averages the delay estimates of several exchanges of the same pair.
CalibrationRecord calibrate(std::span<const TimestampQuad> quads, double true_range_m);

/// Throws CalibrationError when the pair has no calibration entry.
double est_range(const TimestampQuad& quad, const CalibrationRecord& cal);

}  // namespace dbf

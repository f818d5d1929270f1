#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dbf/clock.hpp"
#include "dbf/geometry.hpp"
#include "dbf/waveforms.hpp"

namespace dbf {

struct NodeSpec {
    int id = 0;  ///< 0 is the primary (time and coordinate reference)
    Position2D true_position;
    ClockModel clock;
    double hardware_delay_s = 0.0;  ///< unmeasured radio-chain latency, half on TX, half on RX
    Position2D lever_arm;           ///< beamforming antenna minus sync antenna position
    std::vector<std::uint8_t> ask_pattern;

    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

enum class Objective { Focus, Null };

struct ReceiverSpec {
    int id = 0;
    Position2D true_position;
    Objective objective = Objective::Focus;

    friend bool operator==(const ReceiverSpec&, const ReceiverSpec&) = default;
};

enum class SimulationMode { WaveformLevel, AbstractError };

std::string_view to_string(SimulationMode mode);
std::string_view to_string(Objective objective);

struct ScenarioConfig {
    std::string name;
    std::vector<NodeSpec> nodes;
    std::vector<ReceiverSpec> receivers;
    WaveformSpec sync_waveform;
    WaveformSpec beam_waveform;
    ChannelModel channel;
    double carrier_beam_hz = 0.0;
    std::uint64_t seed = 0;
    SimulationMode mode = SimulationMode::WaveformLevel;

    [[nodiscard]] const NodeSpec& node(int id) const;  // throws ValidationError
    [[nodiscard]] std::vector<int> node_ids() const;   // ascending

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Checks every invariant; throws ValidationError naming the offending item.
void validate(const ScenarioConfig& config);

/// Parses and validates a scenario JSON document. Schema violations raise
/// ParseError naming the field path; invariant violations ValidationError.
ScenarioConfig load_scenario(std::string_view document);
ScenarioConfig load_scenario_file(const std::string& path);

std::string serialize_scenario(const ScenarioConfig& config);

/// Calibration geometry, experiment A positions 1-4, experiment B positions 1-4.
std::vector<ScenarioConfig> builtin_scenarios();
std::optional<ScenarioConfig> find_builtin(std::string_view name);

using NodePairKey = std::pair<int, int>;  ///< (lower id, higher id)

NodePairKey make_pair_key(int a, int b);

/// Laser-rangefinder style truth derived from the true node positions.
struct GroundTruth {
    std::map<int, Position2D> positions;
    std::map<NodePairKey, double> ranges;

    [[nodiscard]] double range(int a, int b) const;
};

GroundTruth ground_truth(const ScenarioConfig& config);

/// Reference staggered transmit bit patterns for nodes 0, 1 and 2: each node
/// alone in slots 1, 3, 5, pairs in 7, 9, 11, all three in 13.
const std::vector<std::vector<std::uint8_t>>& table_ask_patterns();

}  // namespace dbf

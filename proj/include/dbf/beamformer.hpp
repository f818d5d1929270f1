#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dbf/geometry.hpp"
#include "dbf/localization.hpp"
#include "dbf/scenario.hpp"
#include "dbf/waveforms.hpp"

namespace dbf {

inline constexpr double kMaxGramCondition = 1e8;

struct ConstraintSpec {
    std::vector<Position2D> receiver_positions;
    std::vector<double> g;          ///< 1 = beam, 0 = null
    std::vector<int> receiver_ids;  ///< for error messages; defaults to indices
    double wavenumber = 0.0;        ///< rad/m
};

/// Focus receivers map to 1, null receivers to 0, k from the beam carrier.
ConstraintSpec constraint_spec_from(const ScenarioConfig& config);

/// N×M, C(n, m) = exp(-j k r_nm).
struct ConstraintMatrix {
    Eigen::MatrixXcd entries;
    std::vector<int> receiver_ids;
};

struct BeamWeights {
    Eigen::VectorXcd w;  ///< one complex weight per transmitter, node-id order
    std::string normalization = "none";
};

ConstraintMatrix constraint_matrix(std::span<const Position2D> transmitters, const ConstraintSpec& spec);

/// Transmitters in ascending node-id order.
ConstraintMatrix constraint_matrix(const ArrayGeometry& geometry, const ConstraintSpec& spec);

/// 2-norm condition number of CᴴC.
double gram_condition(const ConstraintMatrix& c);

/// w = gᴴ(CᴴC)⁻¹Cᴴ, so that Σ_n w_n C(n, m) = g_m. Throws DegeneracyError
/// naming the most collinear receiver pair when the Gram matrix condition
/// number reaches kMaxGramCondition.
BeamWeights lcmp_weights(const ConstraintMatrix& c, std::span<const double> g);

/// Scales to max |w_n| = 1. Throws ValidationError on all-zero weights.
BeamWeights normalize_weights(BeamWeights w);

/// Scales down to max |w_n| = 1 only when some weight exceeds unit amplitude.
BeamWeights limit_weights(BeamWeights w);

enum class AmplitudeModel { PhaseOnly, InverseR };

inline constexpr double kMinFieldRange_m = 0.1;

cdouble field_at(Position2D point, std::span<const Position2D> transmitters, const BeamWeights& w, double k,
                 AmplitudeModel model = AmplitudeModel::PhaseOnly);

cdouble field_at(Position2D point, const ArrayGeometry& truth, const BeamWeights& w, double k,
                 AmplitudeModel model = AmplitudeModel::PhaseOnly);

inline constexpr std::size_t kMaxPowerMapPoints = 10'000'000;

struct GridSpec {
    double x_min = -1.0;
    double x_max = 3.0;
    double y_min = 0.0;
    double y_max = 6.0;
    double step = 0.02;
};

/// |field|² on the grid; values[iy * nx + ix] sits at (x_min + ix·step, y_min + iy·step).
struct PowerMap {
    GridSpec grid;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> values;

    [[nodiscard]] double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
    [[nodiscard]] Position2D point(std::size_t ix, std::size_t iy) const {
        return {grid.x_min + static_cast<double>(ix) * grid.step, grid.y_min + static_cast<double>(iy) * grid.step};
    }
};

/// Throws ValidationError on step ≤ 0, ResourceError above kMaxPowerMapPoints.
/// Rows are split across `threads` workers; the result does not depend on it.
PowerMap power_map(const GridSpec& grid, std::span<const Position2D> transmitters, const BeamWeights& w, double k,
                   AmplitudeModel model = AmplitudeModel::PhaseOnly, unsigned threads = 1);

/// Slot indices of the staggered transmit pattern: slots where exactly one
/// node transmits, where exactly two do, and where all do.
struct SlotLayout {
    std::map<int, std::size_t> individual;          ///< node id → slot
    std::map<NodePairKey, std::size_t> pairwise;    ///< node pair → slot
    std::vector<std::size_t> combined;              ///< slots with every node on
    double slot_s = 0.0;
    double guard_s = 0.0;  ///< excluded at both slot edges when averaging
};

/// `patterns` keyed by node id; all must have equal length.
SlotLayout derive_slot_layout(const std::map<int, std::vector<std::uint8_t>>& patterns, double slot_s);

/// One capture per receiver (config.receivers order). Node n's train leaves
/// `epoch_error_s[n]` late (negative = early), which also rotates its carrier
/// by -2π f δt. `transmitters` are true beamforming-antenna positions in the
/// same order as the weights.
std::vector<SampledWaveform> simulate_rx_capture(const ScenarioConfig& config,
                                                 std::span<const Position2D> transmitters, const BeamWeights& w,
                                                 const std::map<int, std::vector<std::uint8_t>>& patterns,
                                                 std::span<const double> epoch_error_s = {});

/// Mean envelope magnitude over the interior of slot `slot`.
double slot_amplitude(const SampledWaveform& capture, const SlotLayout& layout, std::size_t slot);

/// Mean envelope power over the interior of slot `slot`.
double slot_power(const SampledWaveform& capture, const SlotLayout& layout, std::size_t slot);

/// Amplitude of the all-node slot over the sum of the single-node slot
/// amplitudes. Throws ValidationError when a slot kind is missing.
double coherent_gain(const SampledWaveform& capture, const SlotLayout& layout);

struct RxPowerMetrics {
    double focus_power = 0.0;
    double null_power = 0.0;
    double null_depth_db = 0.0;
};

/// Throws ValidationError on a zero-power capture.
RxPowerMetrics rx_power_metrics(const SampledWaveform& focus_capture, const SampledWaveform& null_capture,
                                const SlotLayout& layout);

}  // namespace dbf

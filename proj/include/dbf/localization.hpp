#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dbf/geometry.hpp"
#include "dbf/scenario.hpp"

namespace dbf {

inline constexpr double kTriangleTolerance_m = 0.05;
inline constexpr double kClampTolerance_m = 0.01;

struct RangeSet {
    double d01 = 0.0;
    double d02 = 0.0;
    double d12 = 0.0;
    std::optional<double> std01, std02, std12;
};

struct NodeSolution {
    Position2D position;
    bool clamped = false;  ///< x² was slightly negative and forced to 0
};

/// Node 0 at the origin, node 1 on +y, remaining nodes at x ≥ 0.
struct ArrayGeometry {
    std::map<int, Position2D> positions;
    std::string convention = "origin-node0/y-node1/x-nonneg";
    bool clamped = false;

    [[nodiscard]] Position2D at(int id) const;  // throws ValidationError
};

/// Closed-form position of node n from its ranges to anchor 0 (origin) and
/// anchor m (on +y at distance d_0m). Throws GeometryError when the triangle
/// is infeasible by more than the clamp tolerance.
NodeSolution solve_node(double d_0m, double d_0n, double d_mn);

/// Throws ValidationError on non-positive ranges or a triangle violation
/// above kTriangleTolerance_m, GeometryError from solve_node.
ArrayGeometry localize_array(const RangeSet& ranges);

/// N-node form: every node other than 0 and 1 solved against anchors 0 and 1.
ArrayGeometry localize_array(const std::map<NodePairKey, double>& ranges);

RangeSet range_set_from(const GroundTruth& truth);

struct ErrorStats {
    std::string quantity;
    double rmse_m = 0.0;
    double bias_m = 0.0;
    double std_m = 0.0;  ///< population standard deviation of the error
    std::size_t n_trials = 0;
};

struct LocalizationTrial {
    RangeSet ranges;
    ArrayGeometry geometry;
};

/// Statistics for d01, d02, d12 and y1, x2, y2 (in that order). Truth
/// coordinates are the anchored-frame solution of the true ranges.
std::vector<ErrorStats> localization_error(std::span<const LocalizationTrial> trials, const GroundTruth& truth);

ErrorStats error_stats(std::string quantity, std::span<const double> errors);

/// Columns: quantity, rmse_m, bias_m, std_m, n_trials.
void write_error_csv(std::ostream& os, std::span<const ErrorStats> rows);

}  // namespace dbf

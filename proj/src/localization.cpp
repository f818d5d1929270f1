#include "dbf/localization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dbf/errors.hpp"

namespace dbf {

Position2D ArrayGeometry::at(int id) const {
    auto it = positions.find(id);
    if (it == positions.end()) throw ValidationError("geometry has no node " + std::to_string(id));
    return it->second;
}

NodeSolution solve_node(double d_0m, double d_0n, double d_mn) {
    if (!(d_0m > 0.0)) throw GeometryError("anchor baseline must be positive");
    if (!(d_0n >= 0.0) || !(d_mn >= 0.0)) throw GeometryError("ranges must be non-negative");
    const double y = (d_0m * d_0m - d_mn * d_mn + d_0n * d_0n) / (2.0 * d_0m);
    const double x2 = d_0n * d_0n - y * y;
    if (x2 >= 0.0) return {{std::sqrt(x2), y}, false};
    if (x2 >= -kClampTolerance_m * kClampTolerance_m) return {{0.0, y}, true};
    throw GeometryError("infeasible triangle: x^2 = " + std::to_string(x2) + " m^2");
}

namespace {

void check_triangle(double a, double b, double c, const std::string& label) {
    if (a > b + c + kTriangleTolerance_m || b > a + c + kTriangleTolerance_m || c > a + b + kTriangleTolerance_m) {
        throw ValidationError("ranges " + label + " violate the triangle inequality");
    }
}

}  // namespace

ArrayGeometry localize_array(const RangeSet& r) {
    if (r.d01 == 0.0) throw GeometryError("anchor baseline d01 collapsed to zero");
    if (!(r.d01 > 0.0 && r.d02 > 0.0 && r.d12 > 0.0)) throw ValidationError("ranges must be positive");
    check_triangle(r.d01, r.d02, r.d12, "d01/d02/d12");
    const auto s = solve_node(r.d01, r.d02, r.d12);
    ArrayGeometry g;
    g.positions[0] = {0.0, 0.0};
    g.positions[1] = {0.0, r.d01};
    g.positions[2] = s.position;
    g.clamped = s.clamped;
    return g;
}

ArrayGeometry localize_array(const std::map<NodePairKey, double>& ranges) {
    auto get = [&](int a, int b) {
        auto it = ranges.find(make_pair_key(a, b));
        if (it == ranges.end()) {
            throw ValidationError("missing range " + std::to_string(a) + "-" + std::to_string(b));
        }
        if (!(it->second > 0.0)) {
            throw ValidationError("range " + std::to_string(a) + "-" + std::to_string(b) + " must be positive");
        }
        return it->second;
    };
    std::vector<int> ids;
    for (const auto& [key, _] : ranges) {
        for (int id : {key.first, key.second}) {
            if (id >= 2 && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        }
    }
    std::sort(ids.begin(), ids.end());

    const double d01 = get(0, 1);
    ArrayGeometry g;
    g.positions[0] = {0.0, 0.0};
    g.positions[1] = {0.0, d01};
    for (int id : ids) {
        const double d0n = get(0, id);
        const double d1n = get(1, id);
        check_triangle(d01, d0n, d1n, "0/1/" + std::to_string(id));
        const auto s = solve_node(d01, d0n, d1n);
        g.positions[id] = s.position;
        g.clamped = g.clamped || s.clamped;
    }
    return g;
}

RangeSet range_set_from(const GroundTruth& truth) {
    return {truth.range(0, 1), truth.range(0, 2), truth.range(1, 2), std::nullopt, std::nullopt, std::nullopt};
}

ErrorStats error_stats(std::string quantity, std::span<const double> errors) {
    if (errors.empty()) throw ValidationError("error statistics need at least one trial");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double e : errors) {
        sum += e;
        sum_sq += e * e;
    }
    const double n = static_cast<double>(errors.size());
    ErrorStats s;
    s.quantity = std::move(quantity);
    s.n_trials = errors.size();
    s.bias_m = sum / n;
    s.rmse_m = std::sqrt(sum_sq / n);
    double var = 0.0;
    for (double e : errors) var += (e - s.bias_m) * (e - s.bias_m);
    s.std_m = std::sqrt(var / n);
    return s;
}

std::vector<ErrorStats> localization_error(std::span<const LocalizationTrial> trials, const GroundTruth& truth) {
    if (trials.empty()) throw ValidationError("localization_error needs at least one trial");
    const RangeSet true_ranges = range_set_from(truth);
    const ArrayGeometry true_geometry = localize_array(true_ranges);
    const Position2D p1 = true_geometry.at(1);
    const Position2D p2 = true_geometry.at(2);

    std::vector<double> e01, e02, e12, ey1, ex2, ey2;
    for (const auto& t : trials) {
        e01.push_back(t.ranges.d01 - true_ranges.d01);
        e02.push_back(t.ranges.d02 - true_ranges.d02);
        e12.push_back(t.ranges.d12 - true_ranges.d12);
        ey1.push_back(t.geometry.at(1).y - p1.y);
        ex2.push_back(t.geometry.at(2).x - p2.x);
        ey2.push_back(t.geometry.at(2).y - p2.y);
    }
    return {error_stats("d01", e01), error_stats("d02", e02), error_stats("d12", e12),
            error_stats("y1", ey1),  error_stats("x2", ex2),  error_stats("y2", ey2)};
}

void write_error_csv(std::ostream& os, std::span<const ErrorStats> rows) {
    os << "quantity,rmse_m,bias_m,std_m,n_trials\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%zu\n", r.rmse_m, r.bias_m, r.std_m, r.n_trials);
        os << r.quantity << buf;
    }
}

}  // namespace dbf

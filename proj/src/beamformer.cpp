#include "dbf/beamformer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dbf/errors.hpp"

namespace dbf {

ConstraintSpec constraint_spec_from(const ScenarioConfig& config) {
    ConstraintSpec spec;
    for (const auto& r : config.receivers) {
        spec.receiver_positions.push_back(r.true_position);
        spec.g.push_back(r.objective == Objective::Focus ? 1.0 : 0.0);
        spec.receiver_ids.push_back(r.id);
    }
    spec.wavenumber = wavenumber(config.carrier_beam_hz);
    return spec;
}

ConstraintMatrix constraint_matrix(std::span<const Position2D> transmitters, const ConstraintSpec& spec) {
    if (transmitters.empty()) throw ValidationError("constraint matrix needs at least one transmitter");
    if (spec.receiver_positions.empty()) throw ValidationError("constraint matrix needs at least one receiver");
    if (spec.g.size() != spec.receiver_positions.size()) {
        throw ValidationError("objective vector length " + std::to_string(spec.g.size()) + " != receiver count " +
                              std::to_string(spec.receiver_positions.size()));
    }
    const auto n = static_cast<Eigen::Index>(transmitters.size());
    const auto m = static_cast<Eigen::Index>(spec.receiver_positions.size());
    ConstraintMatrix c;
    c.entries.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double r = euclidean_range(transmitters[static_cast<std::size_t>(i)],
                                             spec.receiver_positions[static_cast<std::size_t>(j)]);
            c.entries(i, j) = std::polar(1.0, -spec.wavenumber * r);
        }
    }
    c.receiver_ids = spec.receiver_ids;
    if (c.receiver_ids.size() != spec.receiver_positions.size()) {
        c.receiver_ids.clear();
        for (Eigen::Index j = 0; j < m; ++j) c.receiver_ids.push_back(static_cast<int>(j));
    }
    return c;
}

ConstraintMatrix constraint_matrix(const ArrayGeometry& geometry, const ConstraintSpec& spec) {
    std::vector<Position2D> tx;
    for (const auto& [id, p] : geometry.positions) tx.push_back(p);
    return constraint_matrix(tx, spec);
}

double gram_condition(const ConstraintMatrix& c) {
    const Eigen::MatrixXcd gram = c.entries.adjoint() * c.entries;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gram);
    const auto& s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / smallest;
}

namespace {

std::string most_collinear_pair(const ConstraintMatrix& c) {
    const auto m = c.entries.cols();
    double worst = -1.0;
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double v = std::abs(c.entries.col(i).dot(c.entries.col(j)));
            if (v > worst) {
                worst = v;
                a = i;
                b = j;
            }
        }
    }
    if (worst < 0.0) return "receivers";
    return "receivers " + std::to_string(c.receiver_ids[static_cast<std::size_t>(a)]) + " and " +
           std::to_string(c.receiver_ids[static_cast<std::size_t>(b)]);
}

}  // namespace

BeamWeights lcmp_weights(const ConstraintMatrix& c, std::span<const double> g) {
    const auto m = c.entries.cols();
    if (static_cast<Eigen::Index>(g.size()) != m) {
        throw ValidationError("objective vector length " + std::to_string(g.size()) + " != receiver count " +
                              std::to_string(m));
    }
    if (std::none_of(g.begin(), g.end(), [](double v) { return v == 1.0; })) {
        throw ValidationError("objective vector needs at least one beam (g = 1) entry");
    }
    if (m > c.entries.rows()) {
        throw DegeneracyError("more constraints (" + std::to_string(m) + ") than transmitters (" +
                              std::to_string(c.entries.rows()) + ") among " + most_collinear_pair(c));
    }
    const double cond = gram_condition(c);
    if (!(cond < kMaxGramCondition)) {
        throw DegeneracyError("constraint Gram matrix ill-conditioned (cond " + std::to_string(cond) + ") for " +
                              most_collinear_pair(c));
    }
    const Eigen::MatrixXcd gram = c.entries.adjoint() * c.entries;
    Eigen::VectorXcd gv(m);
    for (Eigen::Index j = 0; j < m; ++j) gv(j) = g[static_cast<std::size_t>(j)];
    // (CᴴC) is Hermitian, so gᴴ(CᴴC)⁻¹Cᴴ = conj(C (CᴴC)⁻¹ g).
    const Eigen::VectorXcd a = gram.partialPivLu().solve(gv);
    BeamWeights out;
    out.w = (c.entries * a).conjugate();
    if (!out.w.allFinite()) throw DegeneracyError("non-finite weights for " + most_collinear_pair(c));
    return out;
}

BeamWeights normalize_weights(BeamWeights w) {
    const double peak = w.w.size() > 0 ? w.w.cwiseAbs().maxCoeff() : 0.0;
    if (!(peak > 0.0)) throw ValidationError("cannot normalize all-zero weights");
    w.w /= peak;
    w.normalization = "max-unit";
    return w;
}

BeamWeights limit_weights(BeamWeights w) {
    const double peak = w.w.size() > 0 ? w.w.cwiseAbs().maxCoeff() : 0.0;
    if (peak > 1.0) w.w /= peak;
    w.normalization = "limit-unit";
    return w;
}

cdouble field_at(Position2D point, std::span<const Position2D> transmitters, const BeamWeights& w, double k,
                 AmplitudeModel model) {
    if (static_cast<Eigen::Index>(transmitters.size()) != w.w.size()) {
        throw ValidationError("weight count does not match transmitter count");
    }
    cdouble acc{};
    for (std::size_t n = 0; n < transmitters.size(); ++n) {
        const double r = euclidean_range(transmitters[n], point);
        const double a = model == AmplitudeModel::PhaseOnly ? 1.0 : 1.0 / std::max(r, kMinFieldRange_m);
        acc += w.w(static_cast<Eigen::Index>(n)) * std::polar(a, -k * r);
    }
    return acc;
}

cdouble field_at(Position2D point, const ArrayGeometry& truth, const BeamWeights& w, double k, AmplitudeModel model) {
    std::vector<Position2D> tx;
    for (const auto& [id, p] : truth.positions) tx.push_back(p);
    return field_at(point, tx, w, k, model);
}

PowerMap power_map(const GridSpec& grid, std::span<const Position2D> transmitters, const BeamWeights& w, double k,
                   AmplitudeModel model, unsigned threads) {
    if (!(grid.step > 0.0)) throw ValidationError("power map step must be > 0");
    if (!(grid.x_max >= grid.x_min && grid.y_max >= grid.y_min)) throw ValidationError("power map extent is empty");
    const double nx_f = std::floor((grid.x_max - grid.x_min) / grid.step + 0.5) + 1.0;
    const double ny_f = std::floor((grid.y_max - grid.y_min) / grid.step + 0.5) + 1.0;
    if (nx_f * ny_f > static_cast<double>(kMaxPowerMapPoints)) {
        throw ResourceError("power map of " + std::to_string(nx_f * ny_f) + " points exceeds the limit of " +
                            std::to_string(kMaxPowerMapPoints));
    }
    PowerMap map;
    map.grid = grid;
    map.nx = static_cast<std::size_t>(nx_f);
    map.ny = static_cast<std::size_t>(ny_f);
    map.values.resize(map.nx * map.ny);

    auto rows = [&](std::size_t first, std::size_t stride) {
        for (std::size_t iy = first; iy < map.ny; iy += stride) {
            for (std::size_t ix = 0; ix < map.nx; ++ix) {
                map.values[iy * map.nx + ix] = std::norm(field_at(map.point(ix, iy), transmitters, w, k, model));
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(map.ny)));
    if (workers == 1) {
        rows(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(rows, t, workers);
    }
    return map;
}

SlotLayout derive_slot_layout(const std::map<int, std::vector<std::uint8_t>>& patterns, double slot_s) {
    if (patterns.empty()) throw ValidationError("no transmit patterns");
    const std::size_t len = patterns.begin()->second.size();
    for (const auto& [id, bits] : patterns) {
        if (bits.size() != len) {
            throw ValidationError("pattern of node " + std::to_string(id) + " has length " +
                                  std::to_string(bits.size()) + ", expected " + std::to_string(len));
        }
    }
    SlotLayout layout;
    layout.slot_s = slot_s;
    layout.guard_s = 0.1 * slot_s;
    for (std::size_t s = 0; s < len; ++s) {
        std::vector<int> on;
        for (const auto& [id, bits] : patterns) {
            if (bits[s] != 0) on.push_back(id);
        }
        if (on.size() == 1) {
            layout.individual.emplace(on[0], s);
        } else if (on.size() == patterns.size()) {
            layout.combined.push_back(s);
        } else if (on.size() == 2) {
            layout.pairwise.emplace(make_pair_key(on[0], on[1]), s);
        }
    }
    return layout;
}

std::vector<SampledWaveform> simulate_rx_capture(const ScenarioConfig& config,
                                                 std::span<const Position2D> transmitters, const BeamWeights& w,
                                                 const std::map<int, std::vector<std::uint8_t>>& patterns,
                                                 std::span<const double> epoch_error_s) {
    const auto ids = config.node_ids();
    if (transmitters.size() != ids.size() || static_cast<std::size_t>(w.w.size()) != ids.size()) {
        throw ValidationError("transmitter, weight and node counts disagree");
    }
    if (!epoch_error_s.empty() && epoch_error_s.size() != ids.size()) {
        throw ValidationError("epoch error count does not match node count");
    }
    std::vector<BitPattern> trains;
    std::size_t len = 0;
    for (int id : ids) {
        auto it = patterns.find(id);
        if (it == patterns.end()) throw ValidationError("no transmit pattern for node " + std::to_string(id));
        if (!trains.empty() && it->second.size() != len) {
            throw ValidationError("pattern length mismatch at node " + std::to_string(id));
        }
        len = it->second.size();
        trains.push_back({it->second, config.beam_waveform.data_rate_hz});
    }

    const auto& spec = config.beam_waveform;
    const double fs = spec.sample_rate_hz;
    const double k = wavenumber(config.carrier_beam_hz);
    // Room for propagation and epoch errors past the last slot.
    const double span = static_cast<double>(len) * spec.duration_s + 0.1 * spec.duration_s;
    const auto samples = static_cast<std::size_t>(std::ceil(span * fs));

    std::vector<SampledWaveform> out;
    for (const auto& rx : config.receivers) {
        SampledWaveform cap;
        cap.sample_rate_hz = fs;
        cap.epoch_s = 0.5 / fs;
        cap.samples.assign(samples, cdouble{});
        for (std::size_t n = 0; n < ids.size(); ++n) {
            const double dt = epoch_error_s.empty() ? 0.0 : epoch_error_s[n];
            const double r = euclidean_range(transmitters[n], rx.true_position);
            const double delay = r / kSpeedOfLight + dt;
            const cdouble phasor = w.w(static_cast<Eigen::Index>(n)) * std::polar(1.0, -k * r) *
                                   std::polar(1.0, -2.0 * kPi * config.carrier_beam_hz * dt);
            for (std::size_t i = 0; i < samples; ++i) {
                const cdouble v = ask_train_value(spec, trains[n], cap.time_of(i) - delay);
                if (v != cdouble{}) cap.samples[i] += phasor * v;
            }
        }
        out.push_back(std::move(cap));
    }
    return out;
}

namespace {

template <typename F>
double slot_mean(const SampledWaveform& capture, const SlotLayout& layout, std::size_t slot, F f) {
    const double begin = static_cast<double>(slot) * layout.slot_s + layout.guard_s;
    const double end = static_cast<double>(slot + 1) * layout.slot_s - layout.guard_s;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < capture.size(); ++i) {
        const double t = capture.time_of(i);
        if (t < begin) continue;
        if (t >= end) break;
        sum += f(capture.samples[i]);
        ++count;
    }
    if (count == 0) throw ValidationError("slot " + std::to_string(slot) + " lies outside the capture");
    return sum / static_cast<double>(count);
}

}  // namespace

double slot_amplitude(const SampledWaveform& capture, const SlotLayout& layout, std::size_t slot) {
    return slot_mean(capture, layout, slot, [](cdouble v) { return std::abs(v); });
}

double slot_power(const SampledWaveform& capture, const SlotLayout& layout, std::size_t slot) {
    return slot_mean(capture, layout, slot, [](cdouble v) { return std::norm(v); });
}

double coherent_gain(const SampledWaveform& capture, const SlotLayout& layout) {
    if (layout.combined.empty()) throw ValidationError("pattern has no slot with every node transmitting");
    if (layout.individual.empty()) throw ValidationError("pattern has no single-node slots");
    double individual = 0.0;
    for (const auto& [id, slot] : layout.individual) individual += slot_amplitude(capture, layout, slot);
    if (!(individual > 0.0)) throw ValidationError("single-node slots carry no signal");
    return slot_amplitude(capture, layout, layout.combined.front()) / individual;
}

RxPowerMetrics rx_power_metrics(const SampledWaveform& focus_capture, const SampledWaveform& null_capture,
                                const SlotLayout& layout) {
    if (layout.combined.empty()) throw ValidationError("pattern has no slot with every node transmitting");
    const std::size_t slot = layout.combined.front();
    RxPowerMetrics m;
    m.focus_power = slot_power(focus_capture, layout, slot);
    m.null_power = slot_power(null_capture, layout, slot);
    if (!(m.focus_power > 0.0)) throw ValidationError("focus capture has zero power");
    if (!(m.null_power > 0.0)) throw ValidationError("null capture has zero power");
    m.null_depth_db = 10.0 * std::log10(m.focus_power / m.null_power);
    return m;
}

}  // namespace dbf

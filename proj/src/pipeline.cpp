#include "dbf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "dbf/errors.hpp"
#include "dbf/seeding.hpp"

namespace dbf {

namespace {

std::vector<NodePair> all_pairs(const ScenarioConfig& config) {
    const auto ids = config.node_ids();
    std::vector<NodePair> pairs;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) pairs.push_back({ids[i], ids[j]});
    }
    return pairs;
}

/// Maps the anchored frame onto the scenario frame using the true pose of
/// anchors 0 and 1 (the receivers are specified in the scenario frame).
Position2D to_scenario_frame(Position2D anchored, Position2D p0, Position2D p1) {
    const double baseline = euclidean_range(p0, p1);
    const Position2D u{(p1.x - p0.x) / baseline, (p1.y - p0.y) / baseline};
    return {p0.x + anchored.x * u.y + anchored.y * u.x, p0.y - anchored.x * u.x + anchored.y * u.y};
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

std::size_t receiver_index(const ScenarioConfig& config, Objective objective) {
    for (std::size_t i = 0; i < config.receivers.size(); ++i) {
        if (config.receivers[i].objective == objective) return i;
    }
    return config.receivers.size();
}

}  // namespace

CalibrationRecord run_calibration(const ScenarioConfig& calibration, const PipelineOptions& options) {
    if (options.calibration_exchanges == 0) throw ValidationError("calibration needs at least one exchange");
    std::mt19937_64 rng(derive_seed(calibration.seed, 0, Stage::Calibration));
    const auto truth = ground_truth(calibration);
    CalibrationRecord record;
    record.source = calibration.name;
    for (const auto& pair : all_pairs(calibration)) {
        std::vector<TimestampQuad> quads;
        for (std::size_t k = 0; k < options.calibration_exchanges; ++k) {
            const auto clocks = realize_epoch_clocks(calibration, rng);
            quads.push_back(run_exchange(calibration, clocks, pair, rng, options.exchange).quad);
        }
        const auto rec = calibrate(quads, truth.range(pair.reference_id, pair.remote_id));
        record.tau_cal_s.insert(rec.tau_cal_s.begin(), rec.tau_cal_s.end());
    }
    return record;
}

std::map<int, std::vector<std::uint8_t>> transmit_patterns(const ScenarioConfig& config) {
    std::map<int, std::vector<std::uint8_t>> patterns;
    const bool configured = std::all_of(config.nodes.begin(), config.nodes.end(),
                                        [](const NodeSpec& n) { return !n.ask_pattern.empty(); });
    if (configured) {
        for (const auto& n : config.nodes) patterns[n.id] = n.ask_pattern;
        return patterns;
    }
    const auto ids = config.node_ids();
    if (ids.size() == 3) {
        for (std::size_t i = 0; i < 3; ++i) patterns[ids[i]] = table_ask_patterns()[i];
        return patterns;
    }
    // 0 n0 0 n1 ... 0 all 0
    const std::size_t len = 2 * ids.size() + 3;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::vector<std::uint8_t> bits(len, 0);
        bits[2 * i + 1] = 1;
        bits[len - 2] = 1;
        patterns[ids[i]] = std::move(bits);
    }
    return patterns;
}

RunReport run_pipeline(const ScenarioConfig& config, const CalibrationRecord& calibration,
                       const PipelineOptions& options, std::size_t trial) {
    const auto started = std::chrono::steady_clock::now();
    RunReport rep;
    rep.scenario = config.name;
    rep.seed = config.seed;
    rep.trial = trial;
    rep.mode = config.mode;

    std::string stage = "sync";
    try {
        const auto ids = config.node_ids();
        std::mt19937_64 sync_rng(derive_seed(config.seed, trial, Stage::Sync));
        const auto clocks = realize_epoch_clocks(config, sync_rng);
        for (const auto& pair : all_pairs(config)) {
            auto out = run_exchange(config, clocks, pair, sync_rng, options.exchange, options.keep_waveforms);
            SyncEstimate e;
            e.quad = out.quad;
            e.truth = out.truth;
            e.est_delay_s = est_prop_delay(out.quad);
            e.est_offset_s = est_clock_offset(out.quad);
            if (options.keep_waveforms && out.captures.size() == 2) {
                const std::string tag = std::to_string(pair.reference_id) + "_" + std::to_string(pair.remote_id);
                rep.waveforms.emplace_back("sync_" + tag + "_at_node" + std::to_string(pair.reference_id),
                                           std::move(out.captures[0]));
                rep.waveforms.emplace_back("sync_" + tag + "_at_node" + std::to_string(pair.remote_id),
                                           std::move(out.captures[1]));
            }
            rep.exchanges.push_back(std::move(e));
        }

        stage = "ranging";
        for (auto& e : rep.exchanges) {
            e.range_m = est_range(e.quad, calibration);
            rep.ranges_m[make_pair_key(e.quad.reference_id, e.quad.remote_id)] = e.range_m;
        }
        rep.residual_offset_s[ids.front()] = 0.0;
        for (const auto& e : rep.exchanges) {
            if (e.quad.reference_id != ids.front()) continue;
            // est_clock_offset estimates −Δ.
            rep.residual_offset_s[e.quad.remote_id] = e.truth.clock_offset_s + e.est_offset_s;
        }

        stage = "localization";
        rep.geometry = localize_array(rep.ranges_m);
        if (ids.size() == 3 && ids[0] == 0 && ids[1] == 1 && ids[2] == 2) {
            rep.ranges = {rep.ranges_m.at({0, 1}), rep.ranges_m.at({0, 2}), rep.ranges_m.at({1, 2}),
                          std::nullopt, std::nullopt, std::nullopt};
        }
        if (options.injected.position_sigma_m > 0.0) {
            std::mt19937_64 rng(derive_seed(config.seed, trial, Stage::Localization));
            std::normal_distribution<double> noise(0.0, options.injected.position_sigma_m);
            for (auto& [id, p] : rep.geometry.positions) {
                if (id == 0) continue;
                if (id == 1) {
                    p.y += noise(rng);
                    continue;
                }
                p.x += noise(rng);
                p.y += noise(rng);
            }
        }

        stage = "beamforming";
        const Position2D p0 = config.node(0).true_position;
        const Position2D p1 = config.node(1).true_position;
        std::vector<Position2D> tx_est;
        std::vector<Position2D> tx_true;
        for (int id : ids) {
            const auto& node = config.node(id);
            tx_est.push_back(to_scenario_frame(rep.geometry.at(id), p0, p1) + node.lever_arm);
            tx_true.push_back(node.true_position + node.lever_arm);
        }
        const auto spec = constraint_spec_from(config);
        const auto c = constraint_matrix(tx_est, spec);
        rep.weights = limit_weights(lcmp_weights(c, spec.g));
        const Eigen::RowVectorXcd response = rep.weights.w.transpose() * c.entries;
        for (Eigen::Index m = 0; m < response.size(); ++m) {
            rep.constraint_residual = std::max(
                rep.constraint_residual, std::abs(response(m) - spec.g[static_cast<std::size_t>(m)]));
        }
        if (options.injected.sync_sigma_s > 0.0) {
            std::mt19937_64 rng(derive_seed(config.seed, trial, Stage::Beamforming));
            std::normal_distribution<double> noise(0.0, options.injected.sync_sigma_s);
            for (auto& [id, r] : rep.residual_offset_s) {
                if (id != ids.front()) r += noise(rng);
            }
        }

        stage = "capture";
        const auto patterns = transmit_patterns(config);
        const auto layout = derive_slot_layout(patterns, config.beam_waveform.duration_s);
        // A clock running ahead by r fires its train r early.
        std::vector<double> epoch_error;
        for (int id : ids) {
            auto it = rep.residual_offset_s.find(id);
            epoch_error.push_back(it == rep.residual_offset_s.end() ? 0.0 : -it->second);
        }
        const auto captures = simulate_rx_capture(config, tx_true, rep.weights, patterns, epoch_error);
        const std::size_t focus = receiver_index(config, Objective::Focus);
        const std::size_t null = receiver_index(config, Objective::Null);
        if (focus >= captures.size()) throw ValidationError("scenario has no focus receiver");
        rep.coherent_gain = coherent_gain(captures[focus], layout);
        if (null < captures.size()) {
            rep.power = rx_power_metrics(captures[focus], captures[null], layout);
            rep.has_null = true;
        } else {
            rep.power.focus_power = slot_power(captures[focus], layout, layout.combined.front());
        }
        if (options.focus_only_gain) {
            ConstraintSpec focus_spec = spec;
            focus_spec.receiver_positions = {spec.receiver_positions[focus]};
            focus_spec.g = {1.0};
            focus_spec.receiver_ids = {spec.receiver_ids[focus]};
            const auto wf = limit_weights(lcmp_weights(constraint_matrix(tx_est, focus_spec), focus_spec.g));
            const auto fcaps = simulate_rx_capture(config, tx_true, wf, patterns, epoch_error);
            rep.focus_only_coherent_gain = coherent_gain(fcaps[focus], layout);
        }
        if (options.keep_waveforms) {
            for (std::size_t i = 0; i < captures.size(); ++i) {
                rep.waveforms.emplace_back("beam_rx" + std::to_string(config.receivers[i].id), captures[i]);
            }
        }
        if (options.power_map) {
            rep.map = power_map(*options.power_map, tx_true, rep.weights, spec.wavenumber,
                                AmplitudeModel::PhaseOnly, std::max(1u, options.jobs));
        }
    } catch (const Error& e) {
        rep.failed_stage = stage;
        rep.error = e.what();
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rep;
}

MonteCarloSummary summarize(const ScenarioConfig& config, const std::vector<RunReport>& trials) {
    MonteCarloSummary s;
    s.n_trials = trials.size();
    std::vector<LocalizationTrial> loc;
    std::vector<double> depth, gain, focus_gain;
    double focus_sum = 0.0;
    double null_sum = 0.0;
    std::size_t ok = 0;
    for (const auto& r : trials) {
        if (!r.ok()) {
            ++s.n_failed;
            ++s.failures_by_stage[r.failed_stage];
            continue;
        }
        ++ok;
        if (r.geometry.positions.count(2) != 0) loc.push_back({r.ranges, r.geometry});
        if (r.has_null) depth.push_back(r.power.null_depth_db);
        gain.push_back(r.coherent_gain);
        focus_gain.push_back(r.focus_only_coherent_gain);
        focus_sum += r.power.focus_power;
        null_sum += r.power.null_power;
    }
    if (!loc.empty() && config.nodes.size() == 3) s.localization = localization_error(loc, ground_truth(config));
    s.median_null_depth_db = median(depth);
    s.median_coherent_gain = median(gain);
    s.median_focus_only_gain = median(focus_gain);
    s.mean_focus_power_db = ok > 0 ? 10.0 * std::log10(focus_sum / static_cast<double>(ok)) : std::nan("");
    s.mean_null_power_db = ok > 0 ? 10.0 * std::log10(null_sum / static_cast<double>(ok)) : std::nan("");
    return s;
}

MonteCarloResult run_monte_carlo(const ScenarioConfig& config, const CalibrationRecord& calibration,
                                 const PipelineOptions& options, std::size_t n_trials) {
    if (n_trials == 0) throw ValidationError("n_trials must be >= 1");
    MonteCarloResult result;
    result.trials.resize(n_trials);
    PipelineOptions per_trial = options;
    per_trial.jobs = 1;

    const auto workers = static_cast<unsigned>(std::clamp<std::size_t>(options.jobs, 1, n_trials));
    std::atomic<std::size_t> next{0};
    PipelineOptions later = per_trial;
    later.power_map.reset();
    later.keep_waveforms = false;
    auto work = [&] {
        for (std::size_t i = next++; i < n_trials; i = next++) {
            result.trials[i] = run_pipeline(config, calibration, i == 0 ? per_trial : later, i);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    result.summary = summarize(config, result.trials);
    return result;
}

std::vector<SweepPoint> run_sweep(const ScenarioConfig& config, const CalibrationRecord& calibration,
                                  const PipelineOptions& options, const std::string& axis,
                                  const std::vector<double>& values, std::size_t n_trials) {
    const auto& axes = sweep_axes();
    if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
        throw ValidationError("unknown sweep axis '" + axis + "'");
    }
    if (values.empty()) throw ValidationError("sweep needs at least one value");
    std::vector<SweepPoint> points;
    for (double v : values) {
        ScenarioConfig cfg = config;
        PipelineOptions opts = options;
        if (axis == "snr_db") {
            cfg.channel.snr_db = v;
        } else if (axis == "abstract_sigma_s") {
            cfg.channel.abstract_timestamp_sigma_s = v;
        } else if (axis == "position_sigma_m") {
            opts.injected.position_sigma_m = v;
        } else {
            opts.injected.sync_sigma_s = v;
        }
        validate(cfg);
        points.push_back({axis, v, run_monte_carlo(cfg, calibration, opts, n_trials).summary});
    }
    return points;
}

}  // namespace dbf

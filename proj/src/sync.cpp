#include "dbf/sync.hpp"

#include <cmath>
#include <string>

#include "dbf/errors.hpp"
#include "dbf/geometry.hpp"

namespace dbf {

namespace {

struct LegResult {
    double t_rx_local = 0.0;
    std::optional<SampledWaveform> capture;
};

struct LegContext {
    const ScenarioConfig& config;
    const std::map<int, ClockModel>& clocks;
    const ExchangeConfig& exchange;
    const SampledWaveform* reference = nullptr;  // null in abstract mode
    double reference_power = 0.0;
    bool keep = false;
};

const ClockModel& clock_of(const std::map<int, ClockModel>& clocks, int id) {
    auto it = clocks.find(id);
    if (it == clocks.end()) throw ValidationError("no clock for node " + std::to_string(id));
    return it->second;
}

SampledWaveform synthesize_capture(const LegContext& ctx, const ClockModel& rx_clock, double window_start_local,
                                   double arrival_global) {
    const auto& spec = ctx.config.sync_waveform;
    const double fs = spec.sample_rate_hz;
    const double span = ctx.exchange.capture_lead_s + spec.duration_s + ctx.exchange.capture_tail_s;
    const auto length = static_cast<std::size_t>(std::llround(span * fs));
    const double centre_offset = static_cast<double>(pulse_samples(spec) - 1) / (2.0 * fs);

    struct Path {
        double excess_s;
        cdouble gain;
    };
    std::vector<Path> paths{{0.0, cdouble{1.0, 0.0}}};
    for (const auto& tap : ctx.config.channel.multipath) {
        paths.push_back({tap.excess_delay_s, std::polar(tap.relative_amplitude,
                                                        -2.0 * kPi * spec.carrier_hz * tap.excess_delay_s)});
    }

    SampledWaveform capture;
    capture.sample_rate_hz = fs;
    capture.epoch_s = window_start_local;
    capture.samples.resize(length);
    for (std::size_t k = 0; k < length; ++k) {
        const double g = global_time(rx_clock, capture.time_of(k));
        cdouble acc{};
        for (const auto& p : paths) acc += p.gain * pulse_value(spec, g - arrival_global - p.excess_s - centre_offset);
        capture.samples[k] = acc;
    }
    return capture;
}

/// One leg: `tx` transmits at its local time `t_tx_local`; `rx` expects the
/// pulse near its own local time `nominal_rx_local`.
LegResult run_leg(const LegContext& ctx, int tx, int rx, double t_tx_local, double nominal_rx_local,
                  std::mt19937_64& rng) {
    const auto& tx_node = ctx.config.node(tx);
    const auto& rx_node = ctx.config.node(rx);
    const auto& tx_clock = clock_of(ctx.clocks, tx);
    const auto& rx_clock = clock_of(ctx.clocks, rx);

    const double range = euclidean_range(tx_node.true_position, rx_node.true_position);
    const double arrival_global = global_time(tx_clock, t_tx_local) + 0.5 * tx_node.hardware_delay_s +
                                  range / kSpeedOfLight + 0.5 * rx_node.hardware_delay_s;

    LegResult out;
    if (ctx.config.mode == SimulationMode::AbstractError) {
        out.t_rx_local = local_time(rx_clock, arrival_global);
        const double sigma = ctx.config.channel.abstract_timestamp_sigma_s;
        if (sigma > 0.0) out.t_rx_local += std::normal_distribution<double>(0.0, sigma)(rng);
    } else {
        const double start = nominal_rx_local - ctx.exchange.capture_lead_s;
        auto capture = synthesize_capture(ctx, rx_clock, start, arrival_global);
        capture = add_awgn(capture, ctx.config.channel.snr_for(tx, rx), rng, ctx.reference_power);
        out.t_rx_local = estimate_arrival(capture, *ctx.reference, ctx.exchange.arrival).arrival_s;
        if (ctx.keep) out.capture = std::move(capture);
    }
    if (rx_clock.timestamp_jitter_s > 0.0) {
        out.t_rx_local += std::normal_distribution<double>(0.0, rx_clock.timestamp_jitter_s)(rng);
    }
    return out;
}

}  // namespace

std::map<int, ClockModel> realize_epoch_clocks(const ScenarioConfig& config, std::mt19937_64& rng) {
    std::map<int, ClockModel> clocks;
    for (const auto& n : config.nodes) {
        ClockModel c = n.clock;
        if (c.pps_alignment_s > 0.0) {
            c.offset_s += std::uniform_real_distribution<double>(-c.pps_alignment_s, c.pps_alignment_s)(rng);
        }
        clocks.emplace(n.id, c);
    }
    return clocks;
}

ExchangeOutcome run_exchange(const ScenarioConfig& config, const std::map<int, ClockModel>& clocks, NodePair pair,
                             std::mt19937_64& rng, const ExchangeConfig& exchange, bool keep_captures) {
    if (pair.reference_id == pair.remote_id) {
        throw ValidationError("exchange needs two distinct nodes, got " + std::to_string(pair.reference_id) + " twice");
    }
    const auto& ref_node = config.node(pair.reference_id);
    const auto& remote_node = config.node(pair.remote_id);

    std::optional<SampledWaveform> reference;
    LegContext ctx{config, clocks, exchange, nullptr, 0.0, keep_captures};
    if (config.mode == SimulationMode::WaveformLevel) {
        reference = synthesize_pulse(config.sync_waveform);
        double sum = 0.0;
        std::size_t active = 0;
        for (const auto& s : reference->samples) {
            if (s != cdouble{}) {
                sum += std::norm(s);
                ++active;
            }
        }
        ctx.reference = &*reference;
        ctx.reference_power = active > 0 ? sum / static_cast<double>(active) : 0.0;
    }

    ExchangeOutcome out;
    auto& q = out.quad;
    q.reference_id = pair.reference_id;
    q.remote_id = pair.remote_id;

    const double t0 = exchange.first_tx_s;
    const double t1 = exchange.first_tx_s + exchange.turnaround_s;
    LegResult first;
    LegResult second;
    if (exchange.initiator == Initiator::Remote) {
        q.t_tx_n = t0;
        first = run_leg(ctx, pair.remote_id, pair.reference_id, q.t_tx_n, t0, rng);
        q.t_rx_0 = first.t_rx_local;
        q.t_tx_0 = q.t_rx_0 + exchange.turnaround_s;
        second = run_leg(ctx, pair.reference_id, pair.remote_id, q.t_tx_0, t1, rng);
        q.t_rx_n = second.t_rx_local;
        if (keep_captures) out.captures = {std::move(*first.capture), std::move(*second.capture)};
    } else {
        q.t_tx_0 = t0;
        first = run_leg(ctx, pair.reference_id, pair.remote_id, q.t_tx_0, t0, rng);
        q.t_rx_n = first.t_rx_local;
        q.t_tx_n = q.t_rx_n + exchange.turnaround_s;
        second = run_leg(ctx, pair.remote_id, pair.reference_id, q.t_tx_n, t1, rng);
        q.t_rx_0 = second.t_rx_local;
        if (keep_captures) out.captures = {std::move(*second.capture), std::move(*first.capture)};
    }

    out.truth.range_m = euclidean_range(ref_node.true_position, remote_node.true_position);
    out.truth.one_way_delay_s =
        out.truth.range_m / kSpeedOfLight + 0.5 * (ref_node.hardware_delay_s + remote_node.hardware_delay_s);
    out.truth.clock_offset_s = clock_of(clocks, pair.remote_id).offset_s - clock_of(clocks, pair.reference_id).offset_s;
    return out;
}

ExchangeOutcome run_exchange(const ScenarioConfig& config, NodePair pair, std::mt19937_64& rng,
                             const ExchangeConfig& exchange) {
    std::map<int, ClockModel> clocks;
    for (const auto& n : config.nodes) clocks.emplace(n.id, n.clock);
    return run_exchange(config, clocks, pair, rng, exchange, false);
}

double est_prop_delay(const TimestampQuad& q) noexcept { return ((q.t_rx_0 - q.t_tx_n) + (q.t_rx_n - q.t_tx_0)) / 2.0; }

double est_clock_offset(const TimestampQuad& q) noexcept {
    return ((q.t_rx_0 - q.t_tx_n) - (q.t_rx_n - q.t_tx_0)) / 2.0;
}

double CalibrationRecord::tau(int a, int b) const {
    auto it = tau_cal_s.find(make_pair_key(a, b));
    if (it == tau_cal_s.end()) {
        throw CalibrationError("no calibration for pair " + std::to_string(a) + "-" + std::to_string(b));
    }
    return it->second;
}

CalibrationRecord calibrate(const TimestampQuad& quad, double true_range_m) {
    return calibrate(std::span<const TimestampQuad>(&quad, 1), true_range_m);
}

CalibrationRecord calibrate(std::span<const TimestampQuad> quads, double true_range_m) {
    if (quads.empty()) throw CalibrationError("calibration needs at least one exchange");
    if (!(true_range_m >= 0.0)) throw CalibrationError("calibration range must be >= 0");
    const auto key = make_pair_key(quads.front().reference_id, quads.front().remote_id);
    double sum = 0.0;
    for (const auto& q : quads) {
        if (make_pair_key(q.reference_id, q.remote_id) != key) {
            throw CalibrationError("calibration exchanges mix node pairs");
        }
        sum += est_prop_delay(q);
    }
    const double tau = sum / static_cast<double>(quads.size()) - true_range_m / kSpeedOfLight;
    if (tau < -1e-12) {
        throw CalibrationError("pair " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                               " calibrates to negative delay " + std::to_string(tau * 1e12) + " ps");
    }
    CalibrationRecord rec;
    rec.tau_cal_s[key] = tau;
    return rec;
}

double est_range(const TimestampQuad& quad, const CalibrationRecord& cal) {
    return (est_prop_delay(quad) - cal.tau(quad.reference_id, quad.remote_id)) * kSpeedOfLight;
}

}  // namespace dbf

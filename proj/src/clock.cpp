#include "dbf/clock.hpp"

#include <cmath>
#include <string>

#include "dbf/errors.hpp"

namespace dbf {

void validate(const ClockModel& clock) {
    if (!std::isfinite(clock.offset_s)) throw ValidationError("clock offset_s not finite");
    if (!(std::abs(clock.drift_ppb) < 1e4)) throw ValidationError("clock |drift_ppb| must be < 1e4");
    if (!(clock.timestamp_jitter_s >= 0.0)) throw ValidationError("clock timestamp_jitter_s must be >= 0");
    if (!(clock.pps_alignment_s >= 0.0)) throw ValidationError("clock pps_alignment_s must be >= 0");
}

double local_time(const ClockModel& clock, double global_t) noexcept {
    return global_t + clock.offset_s + clock.drift_ppb * 1e-9 * global_t;
}

double local_time(const ClockModel& clock, double global_t, std::mt19937_64& rng) {
    double t = local_time(clock, global_t);
    if (clock.timestamp_jitter_s > 0.0) {
        std::normal_distribution<double> jitter(0.0, clock.timestamp_jitter_s);
        t += jitter(rng);
    }
    return t;
}

double global_time(const ClockModel& clock, double local_t) noexcept {
    return (local_t - clock.offset_s) / (1.0 + clock.drift_ppb * 1e-9);
}

ClockModel apply_sync_correction(ClockModel clock, double offset_estimate) {
    clock.offset_s -= offset_estimate;
    return clock;
}

double ChannelModel::snr_for(int a, int b) const {
    for (const auto& l : links) {
        if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return l.snr_db;
    }
    return snr_db;
}

void validate(const ChannelModel& channel) {
    for (const auto& tap : channel.multipath) {
        if (!(tap.excess_delay_s > 0.0)) throw ValidationError("multipath excess_delay_s must be > 0");
        if (!(tap.relative_amplitude >= 0.0 && tap.relative_amplitude < 1.0)) {
            throw ValidationError("multipath relative_amplitude must be in [0, 1)");
        }
    }
    if (!(channel.abstract_timestamp_sigma_s >= 0.0)) {
        throw ValidationError("abstract_timestamp_sigma_s must be >= 0");
    }
    if (std::isnan(channel.snr_db)) throw ValidationError("snr_db is NaN");
    for (const auto& l : channel.links) {
        if (std::isnan(l.snr_db)) {
            throw ValidationError("link " + std::to_string(l.a) + "-" + std::to_string(l.b) + " snr_db is NaN");
        }
    }
}

}  // namespace dbf

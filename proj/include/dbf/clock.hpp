#pragma once

#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace dbf {

/// Local timebase of one node: local = global + offset + drift * global,
/// plus white jitter on every captured timestamp.
struct ClockModel {
    double offset_s = 0.0;            ///< Δ_n0, local minus global
    double drift_ppb = 0.0;
    double timestamp_jitter_s = 0.0;  ///< per-event std
    double pps_alignment_s = 0.0;     ///< coarse epoch alignment, offset drawn U(-a, a) per epoch

    friend bool operator==(const ClockModel&, const ClockModel&) = default;
};

/// Throws ValidationError.
void validate(const ClockModel& clock);

/// Noise-free local reading of the clock at global time `global_t`.
double local_time(const ClockModel& clock, double global_t) noexcept;

/// Local reading including one jitter draw (timestamp capture).
double local_time(const ClockModel& clock, double global_t, std::mt19937_64& rng);

/// Inverse of the noise-free model.
double global_time(const ClockModel& clock, double local_t) noexcept;

/// Returns `clock` with `offset_estimate` (an estimate of Δ, local minus
/// global) removed; the residual offset is original - estimate.
ClockModel apply_sync_correction(ClockModel clock, double offset_estimate);

struct MultipathTap {
    double excess_delay_s = 0.0;
    double relative_amplitude = 0.0;

    friend bool operator==(const MultipathTap&, const MultipathTap&) = default;
};

struct LinkSnr {
    int a = 0;
    int b = 0;
    double snr_db = std::numeric_limits<double>::infinity();

    friend bool operator==(const LinkSnr&, const LinkSnr&) = default;
};

/// Quasi-static reciprocal channel used for all synchronization links.
/// SNR of +inf disables noise.
struct ChannelModel {
    double snr_db = std::numeric_limits<double>::infinity();
    std::vector<LinkSnr> links;  ///< per-link overrides of snr_db
    std::vector<MultipathTap> multipath;
    double abstract_timestamp_sigma_s = 0.0;

    [[nodiscard]] double snr_for(int a, int b) const;

    friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

void validate(const ChannelModel& channel);

}  // namespace dbf

#pragma once

#include <cstddef>
#include <random>

#include "dbf/waveforms.hpp"

namespace dbf {

/// Magnitude of the complex cross-correlation of a capture with a reference.
/// Entry i corresponds to a lag of (i - lag0_index) samples, i.e. the
/// reference starting that many samples after the capture's first sample.
struct CorrelationSeries {
    std::vector<double> magnitudes;
    std::ptrdiff_t lag0_index = 0;
    double sample_rate_hz = 0.0;
};

struct ArrivalEstimate {
    double arrival_s = 0.0;  ///< time of the reference's first sample, capture timebase
    double peak_magnitude = 0.0;
    bool refined = false;
};

struct RefinedPeak {
    double index = 0.0;  ///< fractional index into the series
    bool refined = false;
};

struct ArrivalOptions {
    double detection_threshold_db = 10.0;  ///< peak over median correlation magnitude
    /// Local band-limited interpolation factor applied before the quadratic
    /// fit. 1 keeps the fit on native-rate lags.
    int upsample = 1;
};

/// Adds circular complex white Gaussian noise so that the pulse-average
/// signal power over noise power equals 10^(snr_db/10). Pulse-average power is
/// taken over non-zero samples unless `signal_power` is given. snr_db = +inf
/// returns the input unchanged.
SampledWaveform add_awgn(const SampledWaveform& wf, double snr_db, std::mt19937_64& rng, double signal_power = 0.0);

/// Throws ValidationError on sample-rate mismatch or empty inputs.
CorrelationSeries matched_filter(const SampledWaveform& rx, const SampledWaveform& reference);

/// Vertex of the parabola through the three magnitudes around `peak_index`.
/// Boundary peaks come back unrefined.
RefinedPeak qls_refine(const CorrelationSeries& series, std::size_t peak_index);

/// Matched filter + peak detection + quadratic refinement. Throws
/// DetectionError when no peak clears the threshold.
ArrivalEstimate estimate_arrival(const SampledWaveform& rx, const SampledWaveform& reference,
                                 const ArrivalOptions& options = {});

struct SidelobeMetrics {
    double peak_sidelobe_ratio_db = 0.0;
    double mainlobe_width_s = 0.0;  ///< -3 dB width
};

SidelobeMetrics sidelobe_metrics(const CorrelationSeries& series);

}  // namespace dbf

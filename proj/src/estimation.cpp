#include "dbf/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbf/errors.hpp"
#include "dbf/geometry.hpp"
#include "fft.hpp"

namespace dbf {

SampledWaveform add_awgn(const SampledWaveform& wf, double snr_db, std::mt19937_64& rng, double signal_power) {
    if (std::isinf(snr_db) && snr_db > 0.0) return wf;
    if (std::isnan(snr_db)) throw ValidationError("add_awgn: snr_db is NaN");
    double power = signal_power;
    if (power <= 0.0) {
        double sum = 0.0;
        std::size_t active = 0;
        for (const auto& s : wf.samples) {
            if (s != cdouble{}) {
                sum += std::norm(s);
                ++active;
            }
        }
        power = active > 0 ? sum / static_cast<double>(active) : 0.0;
    }
    const double noise_power = power / std::pow(10.0, snr_db / 10.0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power / 2.0));
    SampledWaveform out = wf;
    for (auto& s : out.samples) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        s += cdouble{re, im};
    }
    return out;
}

namespace {

struct CrossCorrelation {
    std::vector<cdouble> spectrum;  ///< X · conj(R), length n
    std::vector<cdouble> lags;      ///< circular correlation, length n (unnormalized by n)
    std::size_t n = 0;
};

CrossCorrelation cross_correlate(const SampledWaveform& rx, const SampledWaveform& reference) {
    if (rx.samples.empty() || reference.samples.empty()) {
        throw ValidationError("matched_filter: empty waveform");
    }
    if (rx.sample_rate_hz != reference.sample_rate_hz) {
        throw ValidationError("matched_filter: sample rate mismatch (" + std::to_string(rx.sample_rate_hz) + " vs " +
                              std::to_string(reference.sample_rate_hz) + ")");
    }
    CrossCorrelation cc;
    cc.n = detail::fft_size_for(rx.size() + reference.size() - 1);
    std::vector<cdouble> x(cc.n), r(cc.n);
    std::copy(rx.samples.begin(), rx.samples.end(), x.begin());
    std::copy(reference.samples.begin(), reference.samples.end(), r.begin());
    detail::fft(x, false);
    detail::fft(r, false);
    cc.spectrum.resize(cc.n);
    for (std::size_t k = 0; k < cc.n; ++k) cc.spectrum[k] = x[k] * std::conj(r[k]);
    cc.lags = cc.spectrum;
    detail::fft(cc.lags, true);
    return cc;
}

CorrelationSeries to_series(const CrossCorrelation& cc, const SampledWaveform& rx, const SampledWaveform& reference) {
    const std::size_t lrx = rx.size();
    const std::size_t lref = reference.size();
    CorrelationSeries series;
    series.sample_rate_hz = rx.sample_rate_hz;
    series.lag0_index = static_cast<std::ptrdiff_t>(lref) - 1;
    series.magnitudes.resize(lrx + lref - 1);
    const double scale = 1.0 / static_cast<double>(cc.n);
    for (std::size_t i = 0; i < series.magnitudes.size(); ++i) {
        const auto lag = static_cast<std::ptrdiff_t>(i) - series.lag0_index;
        const std::size_t slot = lag >= 0 ? static_cast<std::size_t>(lag) : cc.n - static_cast<std::size_t>(-lag);
        series.magnitudes[i] = std::abs(cc.lags[slot]) * scale;
    }
    return series;
}

/// Trigonometric interpolation of the correlation at a fractional lag.
double interpolated_magnitude(const CrossCorrelation& cc, double lag) {
    const auto n = static_cast<std::ptrdiff_t>(cc.n);
    cdouble acc{};
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const cdouble& p = cc.spectrum[static_cast<std::size_t>(k)];
        if (2 * k == n) {
            acc += p * std::cos(kPi * lag);
            continue;
        }
        const double freq = static_cast<double>(2 * k < n ? k : k - n);
        acc += p * std::polar(1.0, 2.0 * kPi * freq * lag / static_cast<double>(n));
    }
    return std::abs(acc) / static_cast<double>(n);
}

double parabola_vertex(double ym, double y0, double yp) {
    const double denom = 2.0 * (2.0 * y0 - ym - yp);
    if (!(denom > 0.0)) return 0.0;
    return std::clamp((yp - ym) / denom, -0.5, 0.5);
}

}  // namespace

CorrelationSeries matched_filter(const SampledWaveform& rx, const SampledWaveform& reference) {
    return to_series(cross_correlate(rx, reference), rx, reference);
}

RefinedPeak qls_refine(const CorrelationSeries& series, std::size_t peak_index) {
    const auto& m = series.magnitudes;
    if (peak_index == 0 || peak_index + 1 >= m.size()) {
        return {static_cast<double>(peak_index), false};
    }
    const double ym = m[peak_index - 1];
    const double y0 = m[peak_index];
    const double yp = m[peak_index + 1];
    if (y0 < ym || y0 < yp) return {static_cast<double>(peak_index), false};
    return {static_cast<double>(peak_index) + parabola_vertex(ym, y0, yp), true};
}

ArrivalEstimate estimate_arrival(const SampledWaveform& rx, const SampledWaveform& reference,
                                 const ArrivalOptions& options) {
    const auto cc = cross_correlate(rx, reference);
    const auto series = to_series(cc, rx, reference);
    const auto& m = series.magnitudes;

    const auto peak_it = std::max_element(m.begin(), m.end());
    const auto peak = static_cast<std::size_t>(peak_it - m.begin());
    const double peak_mag = *peak_it;

    std::vector<double> sorted = m;
    auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median = *mid;
    const double threshold = median * std::pow(10.0, options.detection_threshold_db / 20.0);
    if (!(peak_mag > 0.0) || peak_mag < threshold) {
        throw DetectionError("no correlation peak above " + std::to_string(options.detection_threshold_db) +
                             " dB over the median");
    }

    RefinedPeak refined = qls_refine(series, peak);
    if (options.upsample > 1 && refined.refined) {
        const int u = options.upsample;
        const double peak_lag = static_cast<double>(static_cast<std::ptrdiff_t>(peak) - series.lag0_index);
        std::vector<double> fine(static_cast<std::size_t>(2 * u + 1));
        for (int j = -u; j <= u; ++j) {
            fine[static_cast<std::size_t>(j + u)] =
                interpolated_magnitude(cc, peak_lag + static_cast<double>(j) / static_cast<double>(u));
        }
        const auto best = static_cast<std::size_t>(std::max_element(fine.begin(), fine.end()) - fine.begin());
        if (best > 0 && best + 1 < fine.size()) {
            const double offset = static_cast<double>(static_cast<int>(best) - u) +
                                  parabola_vertex(fine[best - 1], fine[best], fine[best + 1]);
            refined.index = static_cast<double>(peak) + offset / static_cast<double>(u);
        }
    }

    ArrivalEstimate est;
    est.arrival_s = (refined.index - static_cast<double>(series.lag0_index)) / rx.sample_rate_hz + rx.epoch_s;
    est.peak_magnitude = peak_mag;
    est.refined = refined.refined;
    return est;
}

SidelobeMetrics sidelobe_metrics(const CorrelationSeries& series) {
    const auto& m = series.magnitudes;
    if (m.size() < 3) throw ValidationError("sidelobe_metrics: series too short");
    const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
    if (!(*hi > *lo)) throw ValidationError("sidelobe_metrics: flat correlation series");
    const auto p = static_cast<std::size_t>(hi - m.begin());
    const double peak = *hi;

    std::size_t left = p;
    while (left > 0 && m[left - 1] < m[left]) --left;
    std::size_t right = p;
    while (right + 1 < m.size() && m[right + 1] < m[right]) ++right;

    double sidelobe = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i >= left && i <= right) continue;
        sidelobe = std::max(sidelobe, m[i]);
        any = true;
    }
    if (!any) throw ValidationError("sidelobe_metrics: no samples outside the mainlobe");

    const double half_power = peak / std::sqrt(2.0);
    double x_left = 0.0;
    double x_right = 0.0;
    {
        std::size_t i = p;
        while (i > 0 && m[i - 1] >= half_power) --i;
        if (i == 0) throw ValidationError("sidelobe_metrics: mainlobe reaches series start");
        x_left = static_cast<double>(i - 1) + (half_power - m[i - 1]) / (m[i] - m[i - 1]);
    }
    {
        std::size_t i = p;
        while (i + 1 < m.size() && m[i + 1] >= half_power) ++i;
        if (i + 1 >= m.size()) throw ValidationError("sidelobe_metrics: mainlobe reaches series end");
        x_right = static_cast<double>(i) + (m[i] - half_power) / (m[i] - m[i + 1]);
    }

    SidelobeMetrics out;
    out.peak_sidelobe_ratio_db =
        sidelobe > 0.0 ? 20.0 * std::log10(sidelobe / peak) : -std::numeric_limits<double>::infinity();
    out.mainlobe_width_s = (x_right - x_left) / series.sample_rate_hz;
    return out;
}

}  // namespace dbf

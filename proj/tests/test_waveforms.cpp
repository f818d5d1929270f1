#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dbf/errors.hpp"
#include "dbf/estimation.hpp"
#include "dbf/scenario.hpp"
#include "dbf/waveforms.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace dbf;

namespace {

WaveformSpec table_pulse(WaveformKind kind, double rise_fall = 0.0) {
    return {.kind = kind,
            .carrier_hz = 4.8e9,
            .bandwidth_hz = 40e6,
            .duration_s = 10e-6,
            .amplitude = 1.0,
            .rise_fall_s = rise_fall,
            .sample_rate_hz = 200e6};
}

/// Fraction of energy within |f| ≤ f_edge, from a DTFT on a grid 8x finer
/// than the pulse's natural resolution.
double energy_fraction_within(const std::vector<cdouble>& x, double fs, double f_edge) {
    const std::size_t n = x.size();
    const std::size_t grid = 8 * n;
    double inside = 0.0;
    double total = 0.0;
    for (std::size_t b = 0; b < grid; ++b) {
        const double f = -fs / 2 + fs * static_cast<double>(b) / static_cast<double>(grid);
        const cdouble step = std::polar(1.0, -2 * oracle::pi * f / fs);
        cdouble rot{1.0, 0.0};
        cdouble acc{};
        for (std::size_t k = 0; k < n; ++k) {
            acc += x[k] * rot;
            rot *= step;
        }
        const double p = std::norm(acc);
        total += p;
        if (std::abs(f) <= f_edge) inside += p;
    }
    return inside / total;
}

}  // namespace

TEST_CASE("two-tone pulse values") {
    const auto spec = table_pulse(WaveformKind::TwoTone);
    const cdouble centre = pulse_value(spec, 0.0);
    CHECK(centre.real() == doctest::Approx(2.0));
    CHECK(centre.imag() == doctest::Approx(0.0));
    // cos(π · 40 MHz · 12.5 ns) = cos(π/2)
    CHECK(std::abs(pulse_value(spec, 12.5e-9)) < 1e-9);
    CHECK(synth_two_tone(spec).size() == 2000);
}

TEST_CASE("two-tone is conjugate-symmetric about the window centre") {
    const auto wf = synth_two_tone(table_pulse(WaveformKind::TwoTone, 5e-9));
    const std::size_t n = wf.size();
    for (std::size_t k = 0; k < n; ++k) {
        const cdouble a = wf.samples[k];
        const cdouble b = std::conj(wf.samples[n - 1 - k]);
        CHECK(std::abs(a - b) < 1e-12);
    }
}

TEST_CASE("two-tone spectral occupancy") {
    const auto wf = synth_two_tone(table_pulse(WaveformKind::TwoTone, 5e-9));
    const double T = 10e-6;
    // A rect-windowed tone keeps ~2.5% of its energy beyond 2/T on the outer side.
    CHECK(energy_fraction_within(wf.samples, 200e6, 20e6 + 2 / T) >= 0.97);
    CHECK(energy_fraction_within(wf.samples, 200e6, 20e6 + 20 / T) >= 0.99);
}

TEST_CASE("LFM chirp values") {
    const auto spec = table_pulse(WaveformKind::LFM);
    const cdouble centre = pulse_value(spec, 0.0);
    CHECK(centre.real() == doctest::Approx(1.0));
    CHECK(centre.imag() == doctest::Approx(0.0).epsilon(1e-12));
    // Instantaneous frequency from the phase slope just inside the trailing edge.
    const double h = 1e-10;
    const double t = 5e-6 - 2 * h;
    const double dphi = std::arg(pulse_value(spec, t + h) / pulse_value(spec, t - h));
    CHECK(dphi / (2 * h) / (2 * oracle::pi) == doctest::Approx(20e6).epsilon(1e-4));
}

TEST_CASE("LFM autocorrelation mainlobe and sidelobes") {
    const auto wf = synth_lfm(table_pulse(WaveformKind::LFM));
    const auto mags = oracle::xcorr(wf.samples, wf.samples);
    const std::size_t peak = wf.size() - 1;
    const double half = mags[peak] / std::sqrt(2.0);
    std::size_t r = peak;
    while (mags[r + 1] >= half) ++r;
    const double right = static_cast<double>(r) + (mags[r] - half) / (mags[r] - mags[r + 1]);
    const double width_s = 2 * (right - static_cast<double>(peak)) / 200e6;
    CHECK(width_s == doctest::Approx(0.886 / 40e6).epsilon(0.1));

    const auto series = matched_filter(wf, wf);
    const auto metrics = sidelobe_metrics(series);
    CHECK(metrics.mainlobe_width_s == doctest::Approx(width_s).epsilon(1e-6));
    CHECK(metrics.peak_sidelobe_ratio_db == doctest::Approx(-13.2).epsilon(0.05));
}

TEST_CASE("time-reversed conjugate LFM is its matched filter") {
    const auto wf = synth_lfm(table_pulse(WaveformKind::LFM, 5e-9));
    const std::size_t n = wf.size();
    std::vector<cdouble> h(n);
    for (std::size_t k = 0; k < n; ++k) h[k] = std::conj(wf.samples[n - 1 - k]);
    std::size_t best = 0;
    double best_mag = -1;
    for (std::size_t out = 0; out < 2 * n - 1; ++out) {
        cdouble acc{};
        for (std::size_t k = 0; k < n; ++k) {
            if (out >= k && out - k < n) acc += wf.samples[k] * h[out - k];
        }
        if (std::abs(acc) > best_mag) {
            best_mag = std::abs(acc);
            best = out;
        }
    }
    CHECK(best == n - 1);  // zero lag
}

TEST_CASE("dual-LFM structure") {
    const auto spec = table_pulse(WaveformKind::DualLFM);
    // Each component is a unit phasor at the centre; they coincide there.
    CHECK(std::abs(pulse_value(spec, 0.0)) == doctest::Approx(2.0));
    for (double t : {-4e-6, -1.3e-6, 0.0, 2.2e-6, 4.9e-6}) {
        const cdouble lib = pulse_value(spec, t);
        const cdouble ref = oracle::pulse(oracle::Kind::DualLfm, 40e6, 10e-6, 0.0, t);
        CHECK(std::abs(lib - ref) < 1e-12);
    }

    const auto wf = synth_dual_lfm(table_pulse(WaveformKind::DualLFM, 5e-9));
    const auto spectrum = oracle::dft(wf.samples);
    double peak = 0;
    for (const auto& s : spectrum) peak = std::max(peak, std::norm(s));
    double f_lo = 1e12;
    double f_hi = -1e12;
    const auto n = static_cast<double>(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        if (std::norm(spectrum[k]) < peak * 0.01) continue;
        double f = static_cast<double>(k) / n * 200e6;
        if (f >= 100e6) f -= 200e6;
        f_lo = std::min(f_lo, f);
        f_hi = std::max(f_hi, f);
    }
    CHECK(f_hi - f_lo == doctest::Approx(40e6).epsilon(0.1));
}

TEST_CASE("sidelobe ordering across the three sync waveforms") {
    auto metrics = [](WaveformKind k) {
        const auto wf = synthesize_pulse(table_pulse(k, 5e-9));
        return sidelobe_metrics(matched_filter(wf, wf));
    };
    const auto tt = metrics(WaveformKind::TwoTone);
    const auto dual = metrics(WaveformKind::DualLFM);
    const auto lfm = metrics(WaveformKind::LFM);
    CHECK(tt.peak_sidelobe_ratio_db > dual.peak_sidelobe_ratio_db);
    CHECK(dual.peak_sidelobe_ratio_db > lfm.peak_sidelobe_ratio_db);
    CHECK(tt.mainlobe_width_s < dual.mainlobe_width_s);
    CHECK(dual.mainlobe_width_s < lfm.mainlobe_width_s);
}

TEST_CASE("amplitude bounds hold at every sample") {
    for (auto kind : {WaveformKind::TwoTone, WaveformKind::LFM, WaveformKind::DualLFM}) {
        auto spec = table_pulse(kind, 5e-9);
        spec.amplitude = 0.7;
        const double bound = kind == WaveformKind::LFM ? 0.7 : 1.4;
        const auto wf = synthesize_pulse(spec);
        for (const auto& s : wf.samples) CHECK(std::abs(s) <= bound + 1e-12);
    }
}

TEST_CASE("synthesis rejects bad specs") {
    auto spec = table_pulse(WaveformKind::LFM);
    spec.bandwidth_hz = 250e6;
    CHECK_THROWS_AS(synth_lfm(spec), SynthesisError);
    spec = table_pulse(WaveformKind::LFM);
    spec.rise_fall_s = 6e-6;
    CHECK_THROWS_AS(synth_lfm(spec), SynthesisError);
    CHECK_THROWS_AS(synth_two_tone(table_pulse(WaveformKind::LFM)), SynthesisError);
    CHECK_THROWS_AS(synthesize_pulse(table_pulse(WaveformKind::ASK)), SynthesisError);
}

TEST_CASE("ASK trains follow the transmit patterns") {
    auto spec = table_pulse(WaveformKind::ASK);
    spec.data_rate_hz = 1.5e6;
    const auto& patterns = table_ask_patterns();
    const auto wf = synth_ask_train(spec, {patterns[0], 1.5e6});
    const std::size_t per = pulse_samples(spec);
    REQUIRE(wf.size() == 15 * per);
    std::vector<std::size_t> on;
    for (std::size_t slot = 0; slot < 15; ++slot) {
        if (std::abs(wf.samples[slot * per + per / 2]) > 0.5) on.push_back(slot);
    }
    CHECK(on == std::vector<std::size_t>{1, 7, 11, 13});

    const auto silent = synth_ask_train(spec, {std::vector<std::uint8_t>(15, 0), 1.5e6});
    CHECK(silent.energy() == 0.0);
    CHECK_THROWS_AS(synth_ask_train(spec, {{}, 1.5e6}), SynthesisError);

    std::vector<std::size_t> common;
    for (std::size_t s = 0; s < 15; ++s) {
        if (patterns[0][s] && patterns[1][s] && patterns[2][s]) common.push_back(s);
    }
    CHECK(common == std::vector<std::size_t>{13});

    // The continuous form agrees with the samples at their midpoint times.
    for (std::size_t k = 0; k < wf.size(); k += 137) {
        const double t = (static_cast<double>(k) + 0.5) / 200e6;
        CHECK(std::abs(ask_train_value(spec, {patterns[0], 1.5e6}, t) - wf.samples[k]) < 1e-12);
    }
}

TEST_CASE("edge taper") {
    SampledWaveform flat{std::vector<cdouble>(2000, cdouble{1.0, 0.0}), 200e6, 0.0};
    const auto same = apply_edge_taper(flat, 0.0);
    CHECK(same.samples == flat.samples);

    const auto tapered = apply_edge_taper(flat, 5e-9);
    CHECK(std::abs(tapered.samples[0]) < 1.0);
    CHECK(std::abs(tapered.samples[1]) == doctest::Approx(1.0));  // 5 ns in
    CHECK(std::abs(tapered.samples[1999]) < 1.0);
    CHECK(std::abs(tapered.samples[1000]) == 1.0);
    CHECK(tapered.energy() < flat.energy());
    CHECK_THROWS_AS(apply_edge_taper(flat, 6e-6), SynthesisError);
}

TEST_CASE("waveform dump round-trips") {
    const auto dir = std::filesystem::temp_directory_path() / "dbf_test_dump";
    std::filesystem::create_directories(dir);
    const auto wf = synth_lfm(table_pulse(WaveformKind::LFM, 5e-9));
    const auto path = dir / "lfm.cf32";
    dump_waveform(wf, "lfm", path);
    std::ifstream in(path, std::ios::binary);
    std::vector<float> iq(wf.size() * 2);
    in.read(reinterpret_cast<char*>(iq.data()), static_cast<std::streamsize>(iq.size() * sizeof(float)));
    REQUIRE(in.gcount() == static_cast<std::streamsize>(iq.size() * sizeof(float)));
    CHECK(iq[2 * 700] == doctest::Approx(wf.samples[700].real()).epsilon(1e-6));
    CHECK(iq[2 * 700 + 1] == doctest::Approx(wf.samples[700].imag()).epsilon(1e-6));

    std::ifstream hdr(path.string() + ".json");
    const auto meta = nlohmann::json::parse(hdr);
    CHECK(meta["sample_rate_hz"] == 200e6);
    CHECK(meta["kind"] == "lfm");
    CHECK(meta["samples"] == 2000);
}

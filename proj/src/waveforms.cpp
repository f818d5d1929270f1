#include "dbf/waveforms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "dbf/errors.hpp"
#include "dbf/geometry.hpp"
#include "json.hpp"

namespace dbf {

std::string_view to_string(WaveformKind kind) {
    switch (kind) {
        case WaveformKind::TwoTone: return "two_tone";
        case WaveformKind::LFM: return "lfm";
        case WaveformKind::DualLFM: return "dual_lfm";
        case WaveformKind::ASK: return "ask";
        case WaveformKind::CW: return "cw";
    }
    return "unknown";
}

WaveformKind waveform_kind_from_string(std::string_view name) {
    for (auto k : {WaveformKind::TwoTone, WaveformKind::LFM, WaveformKind::DualLFM, WaveformKind::ASK,
                   WaveformKind::CW}) {
        if (to_string(k) == name) return k;
    }
    throw ParseError("unknown waveform kind '" + std::string(name) + "'");
}

void validate(const WaveformSpec& spec) {
    auto fail = [](const std::string& what) { throw SynthesisError("waveform spec: " + what); };
    if (!(spec.sample_rate_hz > 0.0) || !std::isfinite(spec.sample_rate_hz)) fail("sample_rate_hz must be > 0");
    if (!(spec.duration_s > 0.0) || !std::isfinite(spec.duration_s)) fail("duration_s must be > 0");
    if (!(spec.bandwidth_hz >= 0.0) || !(spec.bandwidth_hz < spec.sample_rate_hz))
        fail("bandwidth_hz must be in [0, sample_rate_hz)");
    if (!(spec.rise_fall_s >= 0.0) || spec.rise_fall_s > spec.duration_s / 2.0)
        fail("rise_fall_s must be in [0, duration_s/2]");
    if (!std::isfinite(spec.amplitude) || !std::isfinite(spec.initial_phase_rad)) fail("non-finite amplitude/phase");
    if (spec.data_rate_hz < 0.0) fail("data_rate_hz must be >= 0");
}

double SampledWaveform::energy() const {
    double e = 0.0;
    for (const auto& s : samples) e += std::norm(s);
    return e;
}

std::size_t pulse_samples(const WaveformSpec& spec) {
    return static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
}

double edge_ramp(double u, double rise_fall_s) {
    if (rise_fall_s <= 0.0 || u >= rise_fall_s) return 1.0;
    if (u <= 0.0) return 0.0;
    return 0.5 * (1.0 - std::cos(kPi * u / rise_fall_s));
}

namespace {

cdouble kernel(const WaveformSpec& spec, double t) {
    const double bw = spec.bandwidth_hz;
    const double T = spec.duration_s;
    switch (spec.kind) {
        case WaveformKind::TwoTone:
            // e^{-jπΔf t} + e^{+jπΔf t}
            return {2.0 * std::cos(kPi * bw * t), 0.0};
        case WaveformKind::LFM:
            return std::polar(1.0, kPi * (bw / T) * t * t);
        case WaveformKind::DualLFM: {
            // Two chirps of span Δf/2 centred at ∓Δf/4 sweeping together: at
            // every instant a tone pair Δf/2 apart, total occupancy Δf.
            const double sweep = bw / 2.0;
            return 2.0 * std::cos(kPi * sweep * t) * std::polar(1.0, kPi * (sweep / T) * t * t);
        }
        case WaveformKind::ASK:
        case WaveformKind::CW:
            return {1.0, 0.0};
    }
    return {};
}

SampledWaveform sample_pulse(const WaveformSpec& spec) {
    validate(spec);
    const std::size_t n = pulse_samples(spec);
    if (n == 0) throw SynthesisError("waveform spec: pulse shorter than one sample");
    SampledWaveform wf;
    wf.sample_rate_hz = spec.sample_rate_hz;
    wf.samples.resize(n);
    const double centre = (static_cast<double>(n) - 1.0) / 2.0;
    for (std::size_t k = 0; k < n; ++k) {
        wf.samples[k] = pulse_value(spec, (static_cast<double>(k) - centre) / spec.sample_rate_hz);
    }
    return wf;
}

void require_kind(const WaveformSpec& spec, WaveformKind kind) {
    if (spec.kind != kind) {
        throw SynthesisError("expected waveform kind " + std::string(to_string(kind)) + ", got " +
                             std::string(to_string(spec.kind)));
    }
}

}  // namespace

cdouble pulse_value(const WaveformSpec& spec, double t) {
    const double half = spec.duration_s / 2.0;
    if (t < -half || t >= half) return {};
    const double w = edge_ramp(t + half, spec.rise_fall_s) * edge_ramp(half - t, spec.rise_fall_s);
    return spec.amplitude * w * std::polar(1.0, spec.initial_phase_rad) * kernel(spec, t);
}

SampledWaveform synth_two_tone(const WaveformSpec& spec) {
    require_kind(spec, WaveformKind::TwoTone);
    return sample_pulse(spec);
}

SampledWaveform synth_lfm(const WaveformSpec& spec) {
    require_kind(spec, WaveformKind::LFM);
    return sample_pulse(spec);
}

SampledWaveform synth_dual_lfm(const WaveformSpec& spec) {
    require_kind(spec, WaveformKind::DualLFM);
    return sample_pulse(spec);
}

SampledWaveform synthesize_pulse(const WaveformSpec& spec) {
    switch (spec.kind) {
        case WaveformKind::TwoTone: return synth_two_tone(spec);
        case WaveformKind::LFM: return synth_lfm(spec);
        case WaveformKind::DualLFM: return synth_dual_lfm(spec);
        default:
            throw SynthesisError("no single-pulse synthesis for kind " + std::string(to_string(spec.kind)));
    }
}

cdouble ask_train_value(const WaveformSpec& spec, const BitPattern& pattern, double t) {
    const double slot = spec.duration_s;
    if (t < 0.0) return {};
    const auto idx = static_cast<std::size_t>(std::floor(t / slot));
    if (idx >= pattern.bits.size() || pattern.bits[idx] == 0) return {};
    std::size_t first = idx;
    while (first > 0 && pattern.bits[first - 1] != 0) --first;
    std::size_t last = idx;
    while (last + 1 < pattern.bits.size() && pattern.bits[last + 1] != 0) ++last;
    const double start = static_cast<double>(first) * slot;
    const double end = static_cast<double>(last + 1) * slot;
    const double w = edge_ramp(t - start, spec.rise_fall_s) * edge_ramp(end - t, spec.rise_fall_s);
    return spec.amplitude * w * std::polar(1.0, spec.initial_phase_rad);
}

SampledWaveform synth_ask_train(const WaveformSpec& spec, const BitPattern& pattern) {
    require_kind(spec, WaveformKind::ASK);
    validate(spec);
    if (pattern.bits.empty()) throw SynthesisError("ASK bit pattern is empty");
    const std::size_t per_slot = pulse_samples(spec);
    SampledWaveform wf;
    wf.sample_rate_hz = spec.sample_rate_hz;
    wf.samples.assign(per_slot * pattern.bits.size(), cdouble{});
    for (std::size_t b = 0; b < pattern.bits.size(); ++b) {
        if (pattern.bits[b] == 0) continue;
        for (std::size_t k = b * per_slot; k < (b + 1) * per_slot; ++k) {
            wf.samples[k] = spec.amplitude * std::polar(1.0, spec.initial_phase_rad);
        }
    }
    return apply_edge_taper(std::move(wf), spec.rise_fall_s);
}

SampledWaveform apply_edge_taper(SampledWaveform wf, double rise_fall_s) {
    if (rise_fall_s < 0.0) throw SynthesisError("taper length must be >= 0");
    if (rise_fall_s == 0.0) return wf;
    const double fs = wf.sample_rate_hz;
    auto& s = wf.samples;
    std::size_t k = 0;
    while (k < s.size()) {
        if (s[k] == cdouble{}) {
            ++k;
            continue;
        }
        std::size_t end = k;
        while (end < s.size() && s[end] != cdouble{}) ++end;
        const double run_s = static_cast<double>(end - k) / fs;
        if (rise_fall_s > run_s / 2.0) {
            throw SynthesisError("taper of " + std::to_string(rise_fall_s) + " s exceeds half the pulse length");
        }
        // Samples sit at the midpoints of their sampling intervals.
        for (std::size_t j = k; j < end; ++j) {
            const double from_start = (static_cast<double>(j - k) + 0.5) / fs;
            const double to_end = (static_cast<double>(end - j) - 0.5) / fs;
            s[j] *= edge_ramp(from_start, rise_fall_s) * edge_ramp(to_end, rise_fall_s);
        }
        k = end;
    }
    return wf;
}

void dump_waveform(const SampledWaveform& wf, std::string_view kind, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    static_assert(std::endian::native == std::endian::little, "I/Q dump assumes a little-endian host");
    std::vector<float> iq;
    iq.reserve(wf.samples.size() * 2);
    for (const auto& s : wf.samples) {
        iq.push_back(static_cast<float>(s.real()));
        iq.push_back(static_cast<float>(s.imag()));
    }
    out.write(reinterpret_cast<const char*>(iq.data()), static_cast<std::streamsize>(iq.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + path.string());

    nlohmann::json header = {{"sample_rate_hz", wf.sample_rate_hz},
                             {"epoch_s", wf.epoch_s},
                             {"kind", std::string(kind)},
                             {"samples", wf.samples.size()},
                             {"format", "cf32_le"}};
    auto sidecar = path;
    sidecar += ".json";
    std::ofstream hdr(sidecar);
    if (!hdr) throw IoError("cannot open " + sidecar.string() + " for writing");
    hdr << header.dump(2) << '\n';
    if (!hdr) throw IoError("failed writing " + sidecar.string());
}

}  // namespace dbf

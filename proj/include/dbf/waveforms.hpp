#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dbf {

using cdouble = std::complex<double>;

enum class WaveformKind { TwoTone, LFM, DualLFM, ASK, CW };

std::string_view to_string(WaveformKind kind);
WaveformKind waveform_kind_from_string(std::string_view name);  // throws ParseError

/// Parameters of one transmit pulse. All frequencies are baseband-equivalent
/// except `carrier_hz`, which is carried as metadata and applied analytically
/// by whoever needs carrier phase.
struct WaveformSpec {
    WaveformKind kind = WaveformKind::DualLFM;
    double carrier_hz = 0.0;
    double bandwidth_hz = 0.0;  ///< total tone separation / swept span
    double duration_s = 0.0;    ///< pulse width T
    double amplitude = 1.0;     ///< α
    double rise_fall_s = 0.0;
    double sample_rate_hz = 0.0;
    double initial_phase_rad = 0.0;
    double data_rate_hz = 0.0;  ///< ASK symbol rate, informational

    friend bool operator==(const WaveformSpec&, const WaveformSpec&) = default;
};

/// Throws SynthesisError when the WaveformSpec cannot be synthesized.
void validate(const WaveformSpec& spec);

/// Complex baseband samples. Sample k sits at `epoch_s + k / sample_rate_hz`
/// on the timebase of whoever produced or captured it.
struct SampledWaveform {
    std::vector<cdouble> samples;
    double sample_rate_hz = 0.0;
    double epoch_s = 0.0;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] double time_of(std::size_t k) const {
        return epoch_s + static_cast<double>(k) / sample_rate_hz;
    }
    [[nodiscard]] double energy() const;
};

struct BitPattern {
    std::vector<std::uint8_t> bits;
    double data_rate_hz = 0.0;
};

/// Number of samples in one synthesized pulse: round(T * fs).
std::size_t pulse_samples(const WaveformSpec& spec);

/// Continuous-time baseband pulse evaluated at pulse-centred time `t`
/// (the rect window spans [-T/2, T/2)). Includes the edge taper. Sampling
/// this at t_n = (n - (N-1)/2) / fs reproduces the synthesized pulse.
cdouble pulse_value(const WaveformSpec& spec, double t);

/// Raised-cosine ramp weight at distance `u` from a pulse edge.
double edge_ramp(double u, double rise_fall_s);

SampledWaveform synth_two_tone(const WaveformSpec& spec);
SampledWaveform synth_lfm(const WaveformSpec& spec);
SampledWaveform synth_dual_lfm(const WaveformSpec& spec);

/// Dispatches on spec.kind for the single-pulse kinds (TwoTone, LFM, DualLFM).
SampledWaveform synthesize_pulse(const WaveformSpec& spec);

/// One pulse per 1-bit in consecutive slots of length `duration_s`.
SampledWaveform synth_ask_train(const WaveformSpec& spec, const BitPattern& pattern);

/// Continuous-time value of an ASK train at time `t` after the train start.
cdouble ask_train_value(const WaveformSpec& spec, const BitPattern& pattern, double t);

/// Raised-cosine ramps on the edges of every pulse (contiguous non-zero run).
SampledWaveform apply_edge_taper(SampledWaveform wf, double rise_fall_s);

/// Writes interleaved little-endian float32 I/Q to `path` and a JSON sidecar
/// (`path` + ".json") holding rate, epoch, kind and sample count.
void dump_waveform(const SampledWaveform& wf, std::string_view kind, const std::filesystem::path& path);

}  // namespace dbf

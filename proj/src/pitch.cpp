#include "hadid/pitch.hpp"

#include <algorithm>
#include <cmath>

#include "hadid/dsp.hpp"
#include "hadid/error.hpp"

namespace hadid {

namespace {

constexpr size_t kWindowMs = 40;
constexpr size_t kHopMs = 10;

// Small preference for shorter lags so that a perfectly periodic signal
// resolves to its fundamental rather than an integer multiple of it.
constexpr double kOctaveCost = 0.01;

}  // namespace

double hz_to_semitones(double f_hi, double f_lo) {
    if (f_hi <= 0.0 || f_lo <= 0.0) raise(Errc::NonPositiveFrequency, "semitone ratio needs positive Hz");
    return 12.0 * std::log2(f_hi / f_lo);
}

PitchTrack estimate_pitch(const AudioBuffer& audio, double f0_floor_hz, double f0_ceil_hz) {
    PitchConfig cfg;
    cfg.f0_floor_hz = f0_floor_hz;
    cfg.f0_ceil_hz = f0_ceil_hz;
    return estimate_pitch(audio, cfg);
}

PitchTrack estimate_pitch(const AudioBuffer& audio, const PitchConfig& cfg) {
    const double sr = audio.sample_rate_hz;
    if (cfg.f0_floor_hz <= 0.0 || cfg.f0_ceil_hz <= cfg.f0_floor_hz || cfg.f0_ceil_hz > sr / 4.0)
        raise(Errc::InvalidConfig, "pitch band must satisfy 0 < floor < ceil <= sample_rate/4");
    if (cfg.f0_ceil_hz / cfg.f0_floor_hz < 1.1)
        raise(Errc::BandTooNarrow, "f0 ceil/floor ratio below 1.1");

    const size_t window = static_cast<size_t>(sr * kWindowMs / 1000.0);
    const size_t hop = static_cast<size_t>(sr * kHopMs / 1000.0);
    const size_t min_samples = std::max(window, static_cast<size_t>(std::ceil(2.0 * sr / cfg.f0_floor_hz)));
    if (audio.samples.size() < min_samples)
        raise(Errc::BufferTooShort, "buffer shorter than two periods of the f0 floor");

    const size_t lag_min = std::max<size_t>(2, static_cast<size_t>(std::floor(sr / cfg.f0_ceil_hz)));
    const size_t lag_max = std::min(window - 1, static_cast<size_t>(std::ceil(sr / cfg.f0_floor_hz)));

    const size_t frames = dsp::frame_count(audio.samples.size(), window, hop);

    PitchTrack track;
    track.hop_s = static_cast<double>(hop) / sr;
    track.f0_floor_hz = cfg.f0_floor_hz;
    track.f0_ceil_hz = cfg.f0_ceil_hz;
    track.frames.resize(frames);

    std::vector<double> rms(frames, 0.0);
    std::vector<double> x(window);
    std::vector<double> energy_prefix(window + 1);
    std::vector<double> corr(lag_max + 1, 0.0);

    // First pass: mean-removed RMS per frame for the relative energy gate.
    for (size_t f = 0; f < frames; ++f) {
        const double* s = audio.samples.data() + f * hop;
        double mean = 0.0;
        for (size_t i = 0; i < window; ++i) mean += s[i];
        mean /= static_cast<double>(window);
        double acc = 0.0;
        for (size_t i = 0; i < window; ++i) {
            double v = s[i] - mean;
            acc += v * v;
        }
        rms[f] = std::sqrt(acc / static_cast<double>(window));
    }
    double peak_rms = 0.0;
    for (double r : rms) peak_rms = std::max(peak_rms, r);
    const double rms_gate = peak_rms * std::pow(10.0, cfg.rms_gate_db / 20.0);

    for (size_t f = 0; f < frames; ++f) {
        PitchFrame& out = track.frames[f];
        out.time_s = (static_cast<double>(f * hop) + window / 2.0) / sr;

        if (rms[f] <= 0.0 || rms[f] < rms_gate) continue;

        const double* s = audio.samples.data() + f * hop;
        double mean = 0.0;
        for (size_t i = 0; i < window; ++i) mean += s[i];
        mean /= static_cast<double>(window);
        for (size_t i = 0; i < window; ++i) x[i] = s[i] - mean;

        energy_prefix[0] = 0.0;
        for (size_t i = 0; i < window; ++i) energy_prefix[i + 1] = energy_prefix[i] + x[i] * x[i];

        double best_score = -2.0;
        size_t best_lag = 0;
        double best_corr = 0.0;
        for (size_t lag = lag_min; lag <= lag_max; ++lag) {
            double num = 0.0;
            const size_t m = window - lag;
            for (size_t i = 0; i < m; ++i) num += x[i] * x[i + lag];
            double e0 = energy_prefix[m];                         // sum of x[0..m)
            double e1 = energy_prefix[window] - energy_prefix[lag];  // sum of x[lag..window)
            double denom = std::sqrt(e0 * e1);
            double r = denom > 0.0 ? num / denom : 0.0;
            corr[lag] = r;
            double score = r - kOctaveCost * std::log2(static_cast<double>(lag) / lag_min);
            if (score > best_score) {
                best_score = score;
                best_lag = lag;
                best_corr = r;
            }
        }

        if (best_lag == 0 || best_corr < cfg.voicing_threshold) continue;

        double refined = static_cast<double>(best_lag);
        if (best_lag > lag_min && best_lag < lag_max) {
            double rm = corr[best_lag - 1], r0 = corr[best_lag], rp = corr[best_lag + 1];
            double denom = rm - 2.0 * r0 + rp;
            if (std::abs(denom) > 1e-12) {
                double delta = 0.5 * (rm - rp) / denom;
                refined += std::clamp(delta, -0.5, 0.5);
            }
        }

        out.voiced = true;
        out.f0_hz = std::clamp(sr / refined, cfg.f0_floor_hz, cfg.f0_ceil_hz);
    }
    return track;
}

}  // namespace hadid

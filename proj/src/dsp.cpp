#include "hadid/dsp.hpp"

#include <algorithm>
#include <cmath>

namespace hadid::dsp {

size_t frame_count(size_t n, size_t window, size_t hop) {
    if (n < window) return 0;
    return (n - window) / hop + 1;
}

std::vector<double> frame_rms(std::span<const double> samples, size_t window, size_t hop) {
    size_t frames = frame_count(samples.size(), window, hop);
    std::vector<double> out(frames);
    for (size_t f = 0; f < frames; ++f) {
        const double* x = samples.data() + f * hop;
        double acc = 0.0;
        for (size_t i = 0; i < window; ++i) acc += x[i] * x[i];
        out[f] = std::sqrt(acc / static_cast<double>(window));
    }
    return out;
}

double rms_to_db(double rms) {
    if (rms <= 0.0) return kDbFloor;
    return std::max(kDbFloor, 20.0 * std::log10(rms));
}

Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz) {
    const double q = 1.0 / std::sqrt(2.0);
    double w0 = 2.0 * M_PI * cutoff_hz / sample_rate_hz;
    double cw = std::cos(w0), sw = std::sin(w0);
    double alpha = sw / (2.0 * q);
    double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

Biquad butterworth_highpass(double cutoff_hz, double sample_rate_hz) {
    const double q = 1.0 / std::sqrt(2.0);
    double w0 = 2.0 * M_PI * cutoff_hz / sample_rate_hz;
    double cw = std::cos(w0), sw = std::sin(w0);
    double alpha = sw / (2.0 * q);
    double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 + cw) / 2.0 / a0;
    s.b1 = -(1.0 + cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

std::vector<double> bandpass_filter(std::span<const double> samples, double low_hz,
                                    double high_hz, double sample_rate_hz) {
    Biquad hp = butterworth_highpass(low_hz, sample_rate_hz);
    Biquad lp = butterworth_lowpass(high_hz, sample_rate_hz);
    std::vector<double> out(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) out[i] = lp.process(hp.process(samples[i]));
    return out;
}

double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    rank = std::clamp(rank, 0.0, static_cast<double>(values.size() - 1));
    size_t lo = static_cast<size_t>(rank);
    double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

}  // namespace hadid::dsp

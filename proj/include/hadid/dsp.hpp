#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hadid::dsp {

inline constexpr double kDbFloor = -120.0;

// Number of full analysis windows for a buffer of n samples.
size_t frame_count(size_t n, size_t window, size_t hop);

// Per-frame RMS over full windows (window/hop in samples).
std::vector<double> frame_rms(std::span<const double> samples, size_t window, size_t hop);

// 20*log10(rms) clamped to kDbFloor; full scale (rms == 1) maps to 0 dB.
double rms_to_db(double rms);

// One biquad section, Direct Form II transposed.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
    double a1 = 0.0, a2 = 0.0;            // denominator (a0 normalized to 1)
    double z1 = 0.0, z2 = 0.0;

    double process(double x) {
        double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

// Bilinear-transform Butterworth sections (Q = 1/sqrt(2)).
Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz);
Biquad butterworth_highpass(double cutoff_hz, double sample_rate_hz);

// 4th-order band-pass: 2nd-order high-pass at low_hz into 2nd-order low-pass
// at high_hz.
std::vector<double> bandpass_filter(std::span<const double> samples, double low_hz,
                                    double high_hz, double sample_rate_hz);

// Percentile with linear interpolation between order statistics (the
// rank = q/100*(N-1) convention). values need not be sorted.
double percentile(std::vector<double> values, double q);

}  // namespace hadid::dsp

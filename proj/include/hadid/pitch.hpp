#pragma once

#include <vector>

#include "hadid/audio.hpp"

namespace hadid {

struct PitchFrame {
    double time_s = 0.0;   // window center
    double f0_hz = 0.0;    // valid only when voiced
    bool voiced = false;
};

struct PitchTrack {
    std::vector<PitchFrame> frames;
    double hop_s = 0.0;
    double f0_floor_hz = 0.0;
    double f0_ceil_hz = 0.0;
};

struct PitchConfig {
    double f0_floor_hz = 75.0;
    double f0_ceil_hz = 500.0;
    double voicing_threshold = 0.45;  // minimum normalized autocorrelation peak
    double rms_gate_db = -35.0;       // relative to the peak frame RMS
};

// Framewise F0 by normalized autocorrelation over 40 ms windows with a 10 ms
// hop; the winning lag is refined by parabolic interpolation. A frame is
// voiced when the correlation peak clears voicing_threshold and its RMS is
// within rms_gate_db of the loudest frame.
PitchTrack estimate_pitch(const AudioBuffer& audio, const PitchConfig& config = {});
PitchTrack estimate_pitch(const AudioBuffer& audio, double f0_floor_hz, double f0_ceil_hz);

// 12 * log2(f_hi / f_lo); throws NonPositiveFrequency.
double hz_to_semitones(double f_hi, double f_lo);

}  // namespace hadid

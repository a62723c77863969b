#pragma once

#include <vector>

#include "hadid/audio.hpp"
#include "hadid/pitch.hpp"

namespace hadid {

struct Nucleus {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct NucleusList {
    std::vector<Nucleus> nuclei;  // sorted, non-overlapping
    double utterance_duration_s = 0.0;
};

enum class SegmentKind { Vowel, Consonant };

struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    SegmentKind kind = SegmentKind::Vowel;
    // Scaling each endpoint before subtracting keeps millisecond-grid
    // boundaries on exact integers.
    double duration_ms() const { return end_s * 1000.0 - start_s * 1000.0; }
};

// Alternating V/C tiling derived from the nuclei. V segments are the nuclei
// themselves; C segments fill the gaps.
struct SegmentTrack {
    std::vector<Segment> segments;
    double utterance_duration_s = 0.0;
};

struct IntensityContour {
    std::vector<double> level_db;  // per frame, relative to full scale
    double hop_s = 0.0;
    double window_s = 0.0;
    double duration_s = 0.0;  // of the analyzed buffer
};

struct NucleusConfig {
    double band_low_hz = 300.0;
    double band_high_hz = 2500.0;
    double peak_delta_db = 3.0;      // frames within this of a local peak belong to it
    double min_nucleus_ms = 40.0;
    double merge_gap_ms = 60.0;      // peaks closer than this merge into one nucleus
    double edge_consonant_ms = 30.0; // edge gaps shorter than this are dropped
};

// 4th-order band-pass followed by framewise RMS (25 ms window, 10 ms hop) in
// dB relative to full scale, floor-clamped at -120 dB.
IntensityContour band_intensity(const AudioBuffer& audio, double low_hz, double high_hz);

// Syllable nuclei: voiced runs around intensity peaks, at most peak_delta_db
// below the peak, spanning at least min_nucleus_ms. Contour and pitch must
// share the hop and originate from the same buffer.
NucleusList detect_nuclei(const IntensityContour& intensity, const PitchTrack& pitch,
                          const NucleusConfig& config = {});

// Nuclei become V segments; gaps become C segments (edge gaps only when at
// least edge_consonant_ms long). Throws NoNuclei on an empty list.
SegmentTrack coarse_cv_segment(const NucleusList& nuclei, double edge_consonant_ms = 30.0);

}  // namespace hadid

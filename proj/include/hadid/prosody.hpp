#pragma once

#include <array>
#include <string_view>

#include "hadid/audio.hpp"
#include "hadid/pitch.hpp"
#include "hadid/segmentation.hpp"

namespace hadid {

// Canonical feature order; every table, CSV and model feature index uses it.
inline constexpr std::array<std::string_view, 14> kFeatureNames = {
    "pct_v",      "delta_c",      "delta_v",     "varco_c",      "varco_v",
    "rpvi_c",     "npvi_v",       "speech_rate", "pitch_range",  "pitch_top",
    "pitch_bottom", "pitch_median", "traj_intra",  "traj_inter",
};

constexpr size_t kFeatureCount = kFeatureNames.size();

int feature_index(std::string_view name);  // -1 when unknown

// The per-utterance prosodic description: eight rhythm values from the
// segment durations and six intonation values from the pitch inside nuclei.
struct FeatureVector {
    double pct_v = 0.0;        // % of duration covered by vowel segments
    double delta_v = 0.0;      // population std of vowel durations (ms)
    double delta_c = 0.0;      // population std of consonant durations (ms)
    double varco_v = 0.0;      // 100 * delta_v / mean vowel duration
    double varco_c = 0.0;      // 100 * delta_c / mean consonant duration
    double rpvi_c = 0.0;       // raw PVI of consonant durations (ms)
    double npvi_v = 0.0;       // normalized PVI of vowel durations (x100)
    double speech_rate = 0.0;  // nuclei per second
    double pitch_bottom = 0.0; // 2nd percentile of nucleus F0 (Hz)
    double pitch_median = 0.0; // 50th percentile (Hz)
    double pitch_top = 0.0;    // 98th percentile (Hz)
    double pitch_range = 0.0;  // semitones between top and bottom
    double traj_intra = 0.0;   // ST/s of movement inside nuclei
    double traj_inter = 0.0;   // ST/s of movement between nuclei

    std::array<double, kFeatureCount> values() const {
        return {pct_v,  delta_c, delta_v,     varco_c,     varco_v,      rpvi_c,       npvi_v,
                speech_rate, pitch_range, pitch_top, pitch_bottom, pitch_median, traj_intra, traj_inter};
    }
    double value(size_t feature_idx) const { return values()[feature_idx]; }
};

struct RhythmMetrics {
    double pct_v, delta_v, delta_c, varco_v, varco_c, rpvi_c, npvi_v, speech_rate;
};

struct IntonationMetrics {
    double bottom, median, top, range_st, traj_intra, traj_inter;
};

// Needs at least two V and two C segments; throws TooFewSegments otherwise.
RhythmMetrics rhythm_metrics(const SegmentTrack& track);

// Pools voiced F0 values inside nuclei. Throws NoVoicedNucleus when no
// nucleus contains a voiced frame.
IntonationMetrics intonation_metrics(const PitchTrack& pitch, const NucleusList& nuclei);

struct PipelineConfig {
    SilenceGate gate;
    PitchConfig pitch;
    NucleusConfig nucleus;
};

// trim -> pitch -> band intensity -> nuclei -> segments -> metrics. Failures
// of any stage surface as UnusableUtterance carrying the underlying reason.
FeatureVector extract_features(const AudioBuffer& audio, const PipelineConfig& config = {});

// Variant exposing the intermediate products (CLI dump options, tests).
struct ExtractionDetail {
    AudioBuffer trimmed;
    PitchTrack pitch;
    NucleusList nuclei;
    SegmentTrack segments;
    FeatureVector features;
};
ExtractionDetail extract_features_detailed(const AudioBuffer& audio,
                                           const PipelineConfig& config = {});

}  // namespace hadid

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hadid/audio.hpp"
#include "hadid/segmentation.hpp"

namespace hadid {

struct ManifestRow {
    std::string utterance_id;
    std::string wav_path;  // as written in the file
    std::string speaker_id;
    std::string dialect;
    std::optional<double> duration_s;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::filesystem::path base_dir;  // relative wav paths resolve against this

    std::filesystem::path resolve(const ManifestRow& row) const {
        std::filesystem::path p(row.wav_path);
        return p.is_absolute() ? p : base_dir / p;
    }
};

// Header utterance_id,wav_path,speaker_id,dialect[,duration_s]. When a label
// set is given, unknown dialect labels are rejected.
Manifest load_manifest(const std::filesystem::path& path,
                       const std::optional<std::set<std::string>>& label_set = {});
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Synthesis profile for one dialect. Durations are lognormal with the given
// mean/std; pitch follows base * 2^(x(t)/12) with a slow sinusoidal sweep of
// pitch_range_st peak-to-peak plus a linear drift.
struct DialectProfile {
    double vowel_mean_ms = 80.0;
    double vowel_std_ms = 15.0;
    double consonant_mean_ms = 100.0;
    double consonant_std_ms = 30.0;
    int syllables_min = 24;
    int syllables_max = 36;
    double base_pitch_hz = 200.0;
    double pitch_range_st = 8.0;
    double pitch_drift_st_per_s = 0.0;
    double pitch_mod_rate_hz = 0.6;
    double speech_rate_target = 6.0;  // informative; synthesis follows the durations
};

using ProfileSet = std::vector<std::pair<std::string, DialectProfile>>;

ProfileSet default_profiles();
ProfileSet load_profiles(const std::filesystem::path& path);
void write_profiles(const std::filesystem::path& path, const ProfileSet& profiles);

// Explicit utterance plan (what the ground-truth sidecars record).
struct PlannedSegment {
    double duration_ms = 0.0;
    bool vowel = false;
};

struct UtterancePlan {
    std::vector<PlannedSegment> segments;
    double base_pitch_hz = 200.0;
    double pitch_range_st = 0.0;
    double pitch_drift_st_per_s = 0.0;
    double pitch_mod_rate_hz = 0.6;
    double pitch_phase = 0.0;
    int sample_rate_hz = 16000;
    uint64_t noise_seed = 1;
};

// Vowels are harmonic sawtooth pulses following the pitch contour; consonants
// are high-band noise 12 dB down. Segment joins are ramped over 5 ms.
AudioBuffer render_utterance(const UtterancePlan& plan, const std::string& source_id);

// Pitch contour of the plan at a given time.
double plan_pitch_hz(const UtterancePlan& plan, double t_s);

// Ground-truth V/C tiling of the plan.
SegmentTrack plan_segments(const UtterancePlan& plan);

struct SynthConfig {
    int speakers_per_dialect = 8;
    int utterances_per_speaker = 10;
    uint64_t seed = 0;
    int sample_rate_hz = 16000;
    int jobs = 1;
};

// Writes wav/<id>.wav, truth/<id>.segments.csv, truth/<id>.pitch.csv and
// manifest.csv under out_dir, deterministically for a given seed.
Manifest synth_corpus(const ProfileSet& profiles, const SynthConfig& config,
                      const std::filesystem::path& out_dir);

}  // namespace hadid

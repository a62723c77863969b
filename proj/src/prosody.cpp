#include "hadid/prosody.hpp"

#include <algorithm>
#include <cmath>

#include "hadid/dsp.hpp"
#include "hadid/error.hpp"

namespace hadid {

namespace {

double population_std(const std::vector<double>& xs, double mean) {
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace

int feature_index(std::string_view name) {
    for (size_t i = 0; i < kFeatureNames.size(); ++i)
        if (kFeatureNames[i] == name) return static_cast<int>(i);
    return -1;
}

RhythmMetrics rhythm_metrics(const SegmentTrack& track) {
    std::vector<double> v_ms, c_ms;
    for (const Segment& s : track.segments)
        (s.kind == SegmentKind::Vowel ? v_ms : c_ms).push_back(s.duration_ms());

    if (v_ms.size() < 2)
        throw Error(Errc::TooFewSegments, "need at least 2 vowel segments, got " +
                                              std::to_string(v_ms.size()));
    if (c_ms.size() < 2)
        throw Error(Errc::TooFewSegments, "need at least 2 consonant segments, got " +
                                              std::to_string(c_ms.size()));

    const double duration_s = track.utterance_duration_s;
    double v_sum = 0.0, c_sum = 0.0;
    for (double v : v_ms) v_sum += v;
    for (double c : c_ms) c_sum += c;
    const double v_mean = v_sum / static_cast<double>(v_ms.size());
    const double c_mean = c_sum / static_cast<double>(c_ms.size());

    RhythmMetrics m{};
    m.pct_v = 100.0 * v_sum / (1000.0 * duration_s);
    m.delta_v = population_std(v_ms, v_mean);
    m.delta_c = population_std(c_ms, c_mean);
    m.varco_v = 100.0 * m.delta_v / v_mean;
    m.varco_c = 100.0 * m.delta_c / c_mean;

    double rpvi = 0.0;
    for (size_t k = 0; k + 1 < c_ms.size(); ++k) rpvi += std::abs(c_ms[k] - c_ms[k + 1]);
    m.rpvi_c = rpvi / static_cast<double>(c_ms.size() - 1);

    double npvi = 0.0;
    for (size_t k = 0; k + 1 < v_ms.size(); ++k)
        npvi += std::abs(v_ms[k] - v_ms[k + 1]) / ((v_ms[k] + v_ms[k + 1]) / 2.0);
    m.npvi_v = 100.0 * npvi / static_cast<double>(v_ms.size() - 1);

    m.speech_rate = static_cast<double>(v_ms.size()) / duration_s;
    return m;
}

IntonationMetrics intonation_metrics(const PitchTrack& pitch, const NucleusList& list) {
    // Voiced f0 values per nucleus, in time order.
    std::vector<std::vector<double>> per_nucleus;
    std::vector<double> pooled;
    for (const Nucleus& nu : list.nuclei) {
        std::vector<double> f0s;
        for (const PitchFrame& fr : pitch.frames) {
            if (!fr.voiced) continue;
            if (fr.time_s >= nu.start_s && fr.time_s < nu.end_s) f0s.push_back(fr.f0_hz);
        }
        if (!f0s.empty()) {
            pooled.insert(pooled.end(), f0s.begin(), f0s.end());
            per_nucleus.push_back(std::move(f0s));
        }
    }
    if (pooled.empty()) raise(Errc::NoVoicedNucleus, "no nucleus contains a voiced frame");

    IntonationMetrics m{};
    m.bottom = dsp::percentile(pooled, 2.0);
    m.median = dsp::percentile(pooled, 50.0);
    m.top = dsp::percentile(pooled, 98.0);
    m.range_st = hz_to_semitones(m.top, m.bottom);

    const double duration_s = list.utterance_duration_s;
    double intra = 0.0;
    for (const auto& f0s : per_nucleus)
        for (size_t k = 0; k + 1 < f0s.size(); ++k)
            intra += std::abs(hz_to_semitones(f0s[k + 1], f0s[k]));
    m.traj_intra = intra / duration_s;

    double inter = 0.0;
    for (size_t i = 0; i + 1 < per_nucleus.size(); ++i)
        inter += std::abs(hz_to_semitones(per_nucleus[i + 1].front(), per_nucleus[i].back()));
    m.traj_inter = inter / duration_s;
    return m;
}

ExtractionDetail extract_features_detailed(const AudioBuffer& audio, const PipelineConfig& cfg) {
    ExtractionDetail detail;
    try {
        detail.trimmed = trim_silence(audio, cfg.gate);
        detail.pitch = estimate_pitch(detail.trimmed, cfg.pitch);
        IntensityContour intensity =
            band_intensity(detail.trimmed, cfg.nucleus.band_low_hz, cfg.nucleus.band_high_hz);
        detail.nuclei = detect_nuclei(intensity, detail.pitch, cfg.nucleus);
        detail.segments = coarse_cv_segment(detail.nuclei, cfg.nucleus.edge_consonant_ms);

        RhythmMetrics rhythm = rhythm_metrics(detail.segments);
        IntonationMetrics intonation = intonation_metrics(detail.pitch, detail.nuclei);

        FeatureVector& f = detail.features;
        f.pct_v = rhythm.pct_v;
        f.delta_v = rhythm.delta_v;
        f.delta_c = rhythm.delta_c;
        f.varco_v = rhythm.varco_v;
        f.varco_c = rhythm.varco_c;
        f.rpvi_c = rhythm.rpvi_c;
        f.npvi_v = rhythm.npvi_v;
        f.speech_rate = rhythm.speech_rate;
        f.pitch_bottom = intonation.bottom;
        f.pitch_median = intonation.median;
        f.pitch_top = intonation.top;
        f.pitch_range = intonation.range_st;
        f.traj_intra = intonation.traj_intra;
        f.traj_inter = intonation.traj_inter;
    } catch (const Error& e) {
        switch (e.code()) {
            case Errc::EmptyAfterTrim:
            case Errc::BufferTooShort:
            case Errc::NoNuclei:
            case Errc::TooFewSegments:
            case Errc::NoVoicedNucleus:
                throw Error(Errc::UnusableUtterance, e.code(), audio.source_id);
            default:
                throw;
        }
    }
    return detail;
}

FeatureVector extract_features(const AudioBuffer& audio, const PipelineConfig& cfg) {
    return extract_features_detailed(audio, cfg).features;
}

}  // namespace hadid

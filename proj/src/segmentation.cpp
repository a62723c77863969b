#include "hadid/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "hadid/dsp.hpp"
#include "hadid/error.hpp"

namespace hadid {

namespace {

constexpr size_t kWindowMs = 25;
constexpr size_t kHopMs = 10;

}  // namespace

IntensityContour band_intensity(const AudioBuffer& audio, double low_hz, double high_hz) {
    const double nyquist = audio.sample_rate_hz / 2.0;
    if (low_hz < 0.0 || low_hz >= high_hz || high_hz > nyquist)
        raise(Errc::InvalidBand, "band must satisfy 0 <= low < high <= sample_rate/2");

    std::vector<double> filtered =
        dsp::bandpass_filter(audio.samples, low_hz, high_hz, audio.sample_rate_hz);

    const size_t window = std::max<size_t>(1, audio.sample_rate_hz * kWindowMs / 1000);
    const size_t hop = std::max<size_t>(1, audio.sample_rate_hz * kHopMs / 1000);

    IntensityContour contour;
    contour.hop_s = static_cast<double>(hop) / audio.sample_rate_hz;
    contour.window_s = static_cast<double>(window) / audio.sample_rate_hz;
    contour.duration_s = audio.duration_s();
    std::vector<double> rms = dsp::frame_rms(filtered, window, hop);
    contour.level_db.resize(rms.size());
    for (size_t f = 0; f < rms.size(); ++f) contour.level_db[f] = dsp::rms_to_db(rms[f]);
    return contour;
}

NucleusList detect_nuclei(const IntensityContour& intensity, const PitchTrack& pitch,
                          const NucleusConfig& cfg) {
    if (std::abs(intensity.hop_s - pitch.hop_s) > 1e-9)
        raise(Errc::InvalidConfig, "intensity and pitch tracks must share the hop");

    const size_t frames = std::min(intensity.level_db.size(), pitch.frames.size());
    const double hop = intensity.hop_s;

    NucleusList out;
    out.utterance_duration_s = intensity.duration_s;

    if (frames == 0) return out;

    // The two tracks share the hop but not the window length, so frame f of
    // one is centered later than frame f of the other. Evaluate voicing at
    // the pitch frame whose window center lies nearest the intensity frame's
    // center.
    const double first_pitch_center = pitch.frames.empty() ? 0.0 : pitch.frames[0].time_s;
    auto voiced = [&](size_t f) {
        double center = static_cast<double>(f) * hop + intensity.window_s / 2.0;
        long g = std::lround((center - first_pitch_center) / hop);
        g = std::clamp(g, 0L, static_cast<long>(pitch.frames.size()) - 1);
        return pitch.frames[static_cast<size_t>(g)].voiced;
    };
    const std::vector<double>& level = intensity.level_db;

    // Voiced local maxima of the intensity contour are candidate peaks.
    // Flat plateaus yield one candidate per frame; the merge pass below
    // collapses them into a single nucleus.
    std::vector<size_t> peaks;
    for (size_t f = 0; f < frames; ++f) {
        if (!voiced(f)) continue;
        bool left_ok = f == 0 || level[f] >= level[f - 1];
        bool right_ok = f + 1 >= frames || level[f] >= level[f + 1];
        if (left_ok && right_ok) peaks.push_back(f);
    }

    struct Run {
        size_t first, last;   // inclusive frame range
        size_t peak;
    };
    std::vector<Run> runs;
    for (size_t p : peaks) {
        double floor_db = level[p] - cfg.peak_delta_db;
        size_t first = p;
        while (first > 0 && voiced(first - 1) && level[first - 1] >= floor_db) --first;
        size_t last = p;
        while (last + 1 < frames && voiced(last + 1) && level[last + 1] >= floor_db) ++last;
        runs.push_back({first, last, p});
    }

    // Merge runs whose peaks are closer than merge_gap_ms, and overlapping runs.
    std::vector<Run> merged;
    for (const Run& r : runs) {
        if (!merged.empty()) {
            Run& prev = merged.back();
            double peak_gap_ms = 1000.0 * hop * static_cast<double>(r.peak - prev.peak);
            if (peak_gap_ms < cfg.merge_gap_ms || r.first <= prev.last + 1) {
                prev.last = std::max(prev.last, r.last);
                prev.first = std::min(prev.first, r.first);
                if (level[r.peak] > level[prev.peak]) prev.peak = r.peak;
                continue;
            }
        }
        merged.push_back(r);
    }

    // A frame's measurement refers to its window center; a run of frames
    // covers center(first) - hop/2 .. center(last) + hop/2.
    const double center0 = intensity.window_s / 2.0 - hop / 2.0;
    for (const Run& r : merged) {
        double start = std::max(0.0, static_cast<double>(r.first) * hop + center0);
        double end = static_cast<double>(r.last + 1) * hop + center0;
        end = std::min(end, out.utterance_duration_s);
        if (1000.0 * (end - start) + 1e-9 < cfg.min_nucleus_ms) continue;
        out.nuclei.push_back({start, end});
    }
    return out;
}

SegmentTrack coarse_cv_segment(const NucleusList& list, double edge_consonant_ms) {
    if (list.nuclei.empty()) raise(Errc::NoNuclei, "cannot segment an utterance with zero nuclei");

    const double edge_s = edge_consonant_ms / 1000.0;
    SegmentTrack track;
    track.utterance_duration_s = list.utterance_duration_s;

    // Touching nuclei collapse into one V segment so kinds stay alternating.
    std::vector<Nucleus> vowels;
    for (const Nucleus& nu : list.nuclei) {
        if (!vowels.empty() && nu.start_s <= vowels.back().end_s)
            vowels.back().end_s = std::max(vowels.back().end_s, nu.end_s);
        else
            vowels.push_back(nu);
    }

    if (vowels.front().start_s >= edge_s)
        track.segments.push_back({0.0, vowels.front().start_s, SegmentKind::Consonant});
    for (size_t i = 0; i < vowels.size(); ++i) {
        track.segments.push_back({vowels[i].start_s, vowels[i].end_s, SegmentKind::Vowel});
        if (i + 1 < vowels.size() && vowels[i + 1].start_s > vowels[i].end_s)
            track.segments.push_back({vowels[i].end_s, vowels[i + 1].start_s, SegmentKind::Consonant});
    }
    double tail = list.utterance_duration_s - vowels.back().end_s;
    if (tail >= edge_s)
        track.segments.push_back(
            {vowels.back().end_s, list.utterance_duration_s, SegmentKind::Consonant});
    return track;
}

}  // namespace hadid

#include "hadid/prosody.hpp"

#include <cmath>

#include "doctest.h"
#include "hadid/corpus.hpp"
#include "hadid/error.hpp"
#include "hadid/rng.hpp"
#include "test_support.hpp"

using namespace hadid;
using namespace testsupport;

namespace {

// Brute-force re-statement of the rhythm definitions, kept deliberately
// separate from the implementation (two-pass moments, explicit loops).
struct RhythmOracle {
    double pct_v, delta_v, delta_c, varco_v, varco_c, rpvi_c, npvi_v, speech_rate;
};

RhythmOracle rhythm_oracle(const std::vector<double>& v_ms, const std::vector<double>& c_ms,
                           double duration_s) {
    RhythmOracle o{};
    double v_sum = 0.0;
    for (double v : v_ms) v_sum += v;
    o.pct_v = 100.0 * v_sum / (1000.0 * duration_s);

    auto pop_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        return std::pair{std::sqrt(acc / static_cast<double>(xs.size())), mean};
    };
    auto [dv, mv] = pop_std(v_ms);
    auto [dc, mc] = pop_std(c_ms);
    o.delta_v = dv;
    o.delta_c = dc;
    o.varco_v = 100.0 * dv / mv;
    o.varco_c = 100.0 * dc / mc;

    double rpvi = 0.0;
    for (size_t k = 0; k + 1 < c_ms.size(); ++k) rpvi += std::fabs(c_ms[k] - c_ms[k + 1]);
    o.rpvi_c = rpvi / static_cast<double>(c_ms.size() - 1);

    double npvi = 0.0;
    for (size_t k = 0; k + 1 < v_ms.size(); ++k)
        npvi += std::fabs(v_ms[k] - v_ms[k + 1]) / (0.5 * (v_ms[k] + v_ms[k + 1]));
    o.npvi_v = 100.0 * npvi / static_cast<double>(v_ms.size() - 1);

    o.speech_rate = static_cast<double>(v_ms.size()) / duration_s;
    return o;
}

SegmentTrack track_from_durations(const std::vector<double>& v_ms, const std::vector<double>& c_ms,
                                  double duration_s) {
    // Interleave C V C V ... using as many of each as provided; any leftover
    // duration stays untiled, which rhythm metrics do not care about.
    // Boundaries accumulate in milliseconds so integer-ms examples stay exact.
    SegmentTrack track;
    track.utterance_duration_s = duration_s;
    double t_ms = 0.0;
    size_t vi = 0, ci = 0;
    while (vi < v_ms.size() || ci < c_ms.size()) {
        if (ci < c_ms.size()) {
            track.segments.push_back(
                {t_ms / 1000.0, (t_ms + c_ms[ci]) / 1000.0, SegmentKind::Consonant});
            t_ms += c_ms[ci++];
        }
        if (vi < v_ms.size()) {
            track.segments.push_back(
                {t_ms / 1000.0, (t_ms + v_ms[vi]) / 1000.0, SegmentKind::Vowel});
            t_ms += v_ms[vi++];
        }
    }
    return track;
}

}  // namespace

TEST_CASE("worked rhythm example") {
    SegmentTrack track = track_from_durations({100, 150, 50}, {80, 120}, 0.5);
    RhythmMetrics m = rhythm_metrics(track);
    CHECK(m.pct_v == 60.0);
    CHECK(m.delta_v == doctest::Approx(40.825).epsilon(1e-4));
    CHECK(m.delta_c == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(m.varco_v == doctest::Approx(40.825).epsilon(1e-4));
    CHECK(m.varco_c == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(m.rpvi_c == 40.0);
    CHECK(m.npvi_v == doctest::Approx(70.0).epsilon(1e-12));
    CHECK(m.speech_rate == 6.0);
}

TEST_CASE("zero-variability case") {
    SegmentTrack track = track_from_durations({90, 90, 90}, {110, 110}, 0.6);
    RhythmMetrics m = rhythm_metrics(track);
    CHECK(m.delta_v == 0.0);
    CHECK(m.delta_c == 0.0);
    CHECK(m.rpvi_c == 0.0);
    CHECK(m.npvi_v == 0.0);
}

TEST_CASE("rhythm metrics agree with the brute-force oracle on 1000 random lists") {
    RandomStream rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t nv = 2 + rng.bounded(12), nc = 2 + rng.bounded(12);
        std::vector<double> v_ms, c_ms;
        for (size_t i = 0; i < nv; ++i) v_ms.push_back(rng.uniform(20.0, 300.0));
        for (size_t i = 0; i < nc; ++i) c_ms.push_back(rng.uniform(20.0, 300.0));
        double duration_s = rng.uniform(1.0, 10.0);

        RhythmMetrics m = rhythm_metrics(track_from_durations(v_ms, c_ms, duration_s));
        RhythmOracle o = rhythm_oracle(v_ms, c_ms, duration_s);
        CHECK(std::abs(m.pct_v - o.pct_v) < 1e-9);
        CHECK(std::abs(m.delta_v - o.delta_v) < 1e-9);
        CHECK(std::abs(m.delta_c - o.delta_c) < 1e-9);
        CHECK(std::abs(m.varco_v - o.varco_v) < 1e-9);
        CHECK(std::abs(m.varco_c - o.varco_c) < 1e-9);
        CHECK(std::abs(m.rpvi_c - o.rpvi_c) < 1e-9);
        CHECK(std::abs(m.npvi_v - o.npvi_v) < 1e-9);
        CHECK(std::abs(m.speech_rate - o.speech_rate) < 1e-9);
    }
}

TEST_CASE("time-scaling behavior of the rhythm metrics") {
    RandomStream rng(5);
    std::vector<double> v_ms, c_ms;
    for (int i = 0; i < 6; ++i) v_ms.push_back(rng.uniform(40.0, 200.0));
    for (int i = 0; i < 7; ++i) c_ms.push_back(rng.uniform(40.0, 200.0));
    const double alpha = 1.7, duration_s = 2.3;

    RhythmMetrics base = rhythm_metrics(track_from_durations(v_ms, c_ms, duration_s));
    std::vector<double> v2 = v_ms, c2 = c_ms;
    for (double& v : v2) v *= alpha;
    for (double& c : c2) c *= alpha;
    RhythmMetrics scaled = rhythm_metrics(track_from_durations(v2, c2, duration_s * alpha));

    CHECK(scaled.delta_v == doctest::Approx(alpha * base.delta_v).epsilon(1e-9));
    CHECK(scaled.delta_c == doctest::Approx(alpha * base.delta_c).epsilon(1e-9));
    CHECK(scaled.rpvi_c == doctest::Approx(alpha * base.rpvi_c).epsilon(1e-9));
    CHECK(scaled.pct_v == doctest::Approx(base.pct_v).epsilon(1e-9));
    CHECK(scaled.varco_v == doctest::Approx(base.varco_v).epsilon(1e-9));
    CHECK(scaled.varco_c == doctest::Approx(base.varco_c).epsilon(1e-9));
    CHECK(scaled.npvi_v == doctest::Approx(base.npvi_v).epsilon(1e-9));
    CHECK(scaled.speech_rate == doctest::Approx(base.speech_rate / alpha).epsilon(1e-9));
}

TEST_CASE("too few segments is rejected with the offending kind") {
    SegmentTrack track = track_from_durations({100.0, 90.0}, {80.0}, 0.5);
    try {
        rhythm_metrics(track);
        FAIL("expected TooFewSegments");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TooFewSegments);
        CHECK(std::string(e.what()).find("consonant") != std::string::npos);
    }
}

namespace {

PitchTrack constant_track(const std::vector<std::pair<double, double>>& spans_hz, double hop_s,
                          double total_s) {
    // Voiced frames over (start .. start+0.2) at the given hz, unvoiced elsewhere.
    PitchTrack track;
    track.hop_s = hop_s;
    track.f0_floor_hz = 50.0;
    track.f0_ceil_hz = 600.0;
    for (double t = 0.0; t < total_s; t += hop_s) {
        PitchFrame frame;
        frame.time_s = t;
        for (auto [start, hz] : spans_hz) {
            if (t >= start && t < start + 0.2) {
                frame.voiced = true;
                frame.f0_hz = hz;
            }
        }
        track.frames.push_back(frame);
    }
    return track;
}

}  // namespace

TEST_CASE("flat single nucleus collapses the pitch statistics") {
    PitchTrack track = constant_track({{0.1, 200.0}}, 0.01, 1.0);
    NucleusList list;
    list.utterance_duration_s = 1.0;
    list.nuclei = {{0.1, 0.3}};

    IntonationMetrics m = intonation_metrics(track, list);
    CHECK(m.bottom == 200.0);
    CHECK(m.median == 200.0);
    CHECK(m.top == 200.0);
    CHECK(m.range_st == 0.0);
    CHECK(m.traj_intra == 0.0);
    CHECK(m.traj_inter == 0.0);
}

TEST_CASE("octave jump between two flat nuclei") {
    PitchTrack track = constant_track({{0.2, 100.0}, {1.0, 200.0}}, 0.01, 2.0);
    NucleusList list;
    list.utterance_duration_s = 2.0;
    list.nuclei = {{0.2, 0.4}, {1.0, 1.2}};

    IntonationMetrics m = intonation_metrics(track, list);
    CHECK(m.traj_inter == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(m.traj_intra == 0.0);
}

TEST_CASE("percentiles over 101 linearly spaced values") {
    PitchTrack track;
    track.hop_s = 0.01;
    for (int i = 0; i <= 100; ++i) {
        PitchFrame f;
        f.time_s = 0.005 + i * 0.01;
        f.voiced = true;
        f.f0_hz = 100.0 + 3.0 * i;  // 100..400
        track.frames.push_back(f);
    }
    NucleusList list;
    list.utterance_duration_s = 1.2;
    list.nuclei = {{0.0, 1.2}};

    IntonationMetrics m = intonation_metrics(track, list);
    CHECK(m.bottom == doctest::Approx(106.0).epsilon(1e-6));
    CHECK(m.top == doctest::Approx(394.0).epsilon(1e-6));
    CHECK(m.median == doctest::Approx(250.0).epsilon(1e-6));
}

TEST_CASE("unvoiced frames outside nuclei do not change the intonation metrics") {
    PitchTrack track = constant_track({{0.2, 150.0}, {0.8, 180.0}}, 0.01, 1.5);
    NucleusList list;
    list.utterance_duration_s = 1.5;
    list.nuclei = {{0.2, 0.4}, {0.8, 1.0}};
    IntonationMetrics base = intonation_metrics(track, list);

    PitchTrack longer = track;
    for (double t = 1.5; t < 2.5; t += 0.01) {
        PitchFrame f;
        f.time_s = t;
        longer.frames.push_back(f);
    }
    IntonationMetrics extended = intonation_metrics(longer, list);
    CHECK(base.bottom == extended.bottom);
    CHECK(base.top == extended.top);
    CHECK(base.traj_intra == extended.traj_intra);
    CHECK(base.traj_inter == extended.traj_inter);
}

TEST_CASE("no voiced nucleus is an error") {
    PitchTrack track = constant_track({}, 0.01, 1.0);
    NucleusList list;
    list.utterance_duration_s = 1.0;
    list.nuclei = {{0.2, 0.4}};
    try {
        intonation_metrics(track, list);
        FAIL("expected NoVoicedNucleus");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoVoicedNucleus);
    }
}

TEST_CASE("extract_features matches a planned utterance") {
    UtterancePlan plan;
    plan.sample_rate_hz = 16000;
    plan.base_pitch_hz = 180.0;
    plan.pitch_range_st = 0.0;  // flat contour
    plan.noise_seed = 99;
    // C 120 | V 150 | C 90 | V 100 | C 140 | V 200 | C 110  (ms)
    for (auto [dur, vowel] : std::initializer_list<std::pair<double, bool>>{
             {120, false}, {150, true}, {90, false}, {100, true}, {140, false}, {200, true}, {110, false}})
        plan.segments.push_back({dur, vowel});

    AudioBuffer audio = render_utterance(plan, "planned");
    FeatureVector f = extract_features(audio);

    SegmentTrack truth = plan_segments(plan);
    RhythmMetrics expect = rhythm_metrics(truth);

    CHECK(std::abs(f.pct_v - expect.pct_v) / expect.pct_v < 0.12);
    CHECK(std::abs(f.speech_rate - expect.speech_rate) / expect.speech_rate < 0.05);
    CHECK(std::abs(f.pitch_median - 180.0) < 2.0);
    CHECK(std::abs(f.pitch_range) < 0.5);
    CHECK(f.pitch_bottom <= f.pitch_median);
    CHECK(f.pitch_median <= f.pitch_top);
}

TEST_CASE("silence-only audio is unusable with the trim reason") {
    AudioBuffer zeros = make_silence(1.0, 16000);
    try {
        extract_features(zeros);
        FAIL("expected UnusableUtterance");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnusableUtterance);
        CHECK(e.reason() == Errc::EmptyAfterTrim);
    }
}

TEST_CASE("gain-scaled audio yields the same features") {
    UtterancePlan plan;
    plan.sample_rate_hz = 16000;
    plan.base_pitch_hz = 200.0;
    plan.pitch_range_st = 4.0;
    plan.noise_seed = 5;
    for (int s = 0; s < 6; ++s) {
        plan.segments.push_back({100.0 + 10.0 * s, false});
        plan.segments.push_back({80.0 + 12.0 * s, true});
    }
    plan.segments.push_back({120.0, false});

    AudioBuffer audio = render_utterance(plan, "gain");
    AudioBuffer scaled = audio;
    for (double& s : scaled.samples) s *= 0.3;

    FeatureVector a = extract_features(audio);
    FeatureVector b = extract_features(scaled);
    auto va = a.values(), vb = b.values();
    for (size_t i = 0; i < va.size(); ++i) {
        double denom = std::max(1.0, std::abs(va[i]));
        CHECK(std::abs(va[i] - vb[i]) / denom < 1e-6);
    }
}

TEST_CASE("pitch_range is consistent with top and bottom") {
    UtterancePlan plan;
    plan.sample_rate_hz = 16000;
    plan.base_pitch_hz = 210.0;
    plan.pitch_range_st = 6.0;
    plan.noise_seed = 17;
    for (int s = 0; s < 8; ++s) {
        plan.segments.push_back({95.0, false});
        plan.segments.push_back({85.0, true});
    }
    plan.segments.push_back({95.0, false});
    FeatureVector f = extract_features(render_utterance(plan, "range"));
    CHECK(f.pitch_range ==
          doctest::Approx(12.0 * std::log2(f.pitch_top / f.pitch_bottom)).epsilon(1e-9));
}

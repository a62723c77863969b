#include "hadid/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "hadid/dataset.hpp"
#include "hadid/dsp.hpp"
#include "hadid/error.hpp"
#include "hadid/rng.hpp"
#include "hadid/vendor_json.hpp"

namespace hadid {

namespace {

constexpr double kConsonantLevelDb = -12.0;  // relative to vowel level
constexpr double kVowelAmplitude = 0.5;
constexpr double kRampMs = 2.5;
constexpr double kNoiseBandLowHz = 3000.0;
constexpr double kNoiseBandHighHz = 7000.0;
constexpr double kMinVowelMs = 60.0;
constexpr double kMinConsonantMs = 45.0;
constexpr double kSpeakerPitchSpreadSt = 2.0;
constexpr double kSpeakerTempoSpread = 0.05;
constexpr double kSpeakerRangeSpread = 0.10;  // expressiveness scale on the pitch sweep

std::string slugify(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (c == ' ' || c == '-')
            out.push_back('-');
    }
    return out;
}

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    size_t workers = std::min(static_cast<size_t>(jobs), n);
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path,
                       const std::optional<std::set<std::string>>& label_set) {
    std::ifstream in(path);
    if (!in) raise(Errc::MissingFile, path.string());

    Manifest manifest;
    manifest.base_dir = path.parent_path();

    std::string line;
    if (!std::getline(in, line)) raise(Errc::CorruptHeader, "empty manifest: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);

    auto column = [&](const std::string& name) -> int {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    int col_id = column("utterance_id"), col_wav = column("wav_path"),
        col_spk = column("speaker_id"), col_dia = column("dialect"),
        col_dur = column("duration_s");
    for (auto [col, name] : {std::pair{col_id, "utterance_id"}, {col_wav, "wav_path"},
                             {col_spk, "speaker_id"}, {col_dia, "dialect"}})
        if (col < 0) raise(Errc::MissingColumn, std::string(name) + " in " + path.string());

    std::set<std::string> seen_ids;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() < header.size())
            raise(Errc::MissingColumn, "line " + std::to_string(line_no) + " too short");

        ManifestRow row;
        row.utterance_id = fields[col_id];
        row.wav_path = fields[col_wav];
        row.speaker_id = fields[col_spk];
        row.dialect = fields[col_dia];
        if (col_dur >= 0 && !fields[col_dur].empty()) row.duration_s = std::stod(fields[col_dur]);

        if (!seen_ids.insert(row.utterance_id).second)
            raise(Errc::DuplicateUtteranceId, row.utterance_id);
        if (label_set && !label_set->count(row.dialect)) raise(Errc::UnknownDialect, row.dialect);
        manifest.rows.push_back(std::move(row));
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path.string());
    out << "utterance_id,wav_path,speaker_id,dialect,duration_s\n";
    for (const ManifestRow& row : manifest.rows) {
        out << row.utterance_id << ',' << row.wav_path << ',' << row.speaker_id << ','
            << row.dialect << ',';
        if (row.duration_s) out << format_double(*row.duration_s);
        out << '\n';
    }
}

ProfileSet default_profiles() {
    // Five dialect profiles whose targets echo the qualitative ordering of
    // the Algerian material: Sulaymite has the largest vowel share and the
    // steadiest consonants; Pre-Hilali and Hilali have the most variable
    // consonants; Ma'qilian sweeps the widest pitch range.
    ProfileSet out;
    DialectProfile p;

    p = {};  // Pre-Hilali: low %V, variable consonants, high bright pitch
    p.vowel_mean_ms = 72;
    p.vowel_std_ms = 16;
    p.consonant_mean_ms = 113;
    p.consonant_std_ms = 55;
    p.syllables_min = 26;
    p.syllables_max = 38;
    p.base_pitch_hz = 240;
    p.pitch_range_st = 12;
    p.pitch_mod_rate_hz = 1.0;
    p.speech_rate_target = 5.4;
    out.push_back({"Pre-Hilali", p});

    p = {};  // Hilali: low %V, the most variable consonants
    p.vowel_mean_ms = 70;
    p.vowel_std_ms = 15;
    p.consonant_mean_ms = 105;
    p.consonant_std_ms = 62;
    p.syllables_min = 27;
    p.syllables_max = 39;
    p.base_pitch_hz = 198;
    p.pitch_range_st = 9;
    p.pitch_mod_rate_hz = 0.5;
    p.speech_rate_target = 5.7;
    out.push_back({"Hilali", p});

    p = {};  // Sulaymite: highest %V, steady consonants, narrow pitch
    p.vowel_mean_ms = 78;
    p.vowel_std_ms = 13;
    p.consonant_mean_ms = 91;
    p.consonant_std_ms = 12;
    p.syllables_min = 30;
    p.syllables_max = 42;
    p.base_pitch_hz = 215;
    p.pitch_range_st = 7.5;
    p.pitch_mod_rate_hz = 0.7;
    p.speech_rate_target = 5.9;
    out.push_back({"Sulaymite", p});

    p = {};  // Ma'qilian: widest pitch sweep, slowest tempo
    p.vowel_mean_ms = 76;
    p.vowel_std_ms = 17;
    p.consonant_mean_ms = 103;
    p.consonant_std_ms = 28;
    p.syllables_min = 25;
    p.syllables_max = 37;
    p.base_pitch_hz = 193;
    p.pitch_range_st = 16;
    p.pitch_mod_rate_hz = 0.6;
    p.speech_rate_target = 5.6;
    out.push_back({"Ma'qilian", p});

    p = {};  // Urban Completely Bedouin: deliberately close to Ma'qilian
    p.vowel_mean_ms = 74;
    p.vowel_std_ms = 15;
    p.consonant_mean_ms = 98;
    p.consonant_std_ms = 25;
    p.syllables_min = 27;
    p.syllables_max = 39;
    p.base_pitch_hz = 204;
    p.pitch_range_st = 13.5;
    p.pitch_mod_rate_hz = 0.6;
    p.speech_rate_target = 5.8;
    out.push_back({"Urban Completely Bedouin", p});

    return out;
}

ProfileSet load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::MissingFile, path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::CorruptHeader, "profile parse error: " + std::string(e.what()));
    }
    if (!j.contains("profiles") || !j["profiles"].is_array())
        raise(Errc::CorruptHeader, "profile file needs a 'profiles' array");

    ProfileSet out;
    for (const auto& entry : j["profiles"]) {
        DialectProfile p;
        std::string dialect = entry.at("dialect").get<std::string>();
        p.vowel_mean_ms = entry.at("vowel_mean_ms").get<double>();
        p.vowel_std_ms = entry.at("vowel_std_ms").get<double>();
        p.consonant_mean_ms = entry.at("consonant_mean_ms").get<double>();
        p.consonant_std_ms = entry.at("consonant_std_ms").get<double>();
        p.syllables_min = entry.at("syllables_min").get<int>();
        p.syllables_max = entry.at("syllables_max").get<int>();
        p.base_pitch_hz = entry.at("base_pitch_hz").get<double>();
        p.pitch_range_st = entry.at("pitch_range_st").get<double>();
        p.pitch_drift_st_per_s = entry.value("pitch_drift_st_per_s", 0.0);
        p.pitch_mod_rate_hz = entry.value("pitch_mod_rate_hz", 0.6);
        p.speech_rate_target = entry.value("speech_rate_target", 6.0);
        if (p.vowel_mean_ms <= 0 || p.vowel_std_ms <= 0 || p.consonant_mean_ms <= 0 ||
            p.consonant_std_ms <= 0 || p.pitch_range_st < 0 || p.base_pitch_hz <= 0 ||
            p.syllables_min < 1 || p.syllables_max < p.syllables_min)
            raise(Errc::InvalidConfig, "profile '" + dialect + "' has invalid fields");
        out.push_back({dialect, p});
    }
    if (out.empty()) raise(Errc::InvalidConfig, "profile file declares no profiles");
    return out;
}

void write_profiles(const std::filesystem::path& path, const ProfileSet& profiles) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [dialect, p] : profiles) {
        arr.push_back({
            {"dialect", dialect},
            {"vowel_mean_ms", p.vowel_mean_ms},
            {"vowel_std_ms", p.vowel_std_ms},
            {"consonant_mean_ms", p.consonant_mean_ms},
            {"consonant_std_ms", p.consonant_std_ms},
            {"syllables_min", p.syllables_min},
            {"syllables_max", p.syllables_max},
            {"base_pitch_hz", p.base_pitch_hz},
            {"pitch_range_st", p.pitch_range_st},
            {"pitch_drift_st_per_s", p.pitch_drift_st_per_s},
            {"pitch_mod_rate_hz", p.pitch_mod_rate_hz},
            {"speech_rate_target", p.speech_rate_target},
        });
    }
    nlohmann::json j;
    j["profiles"] = arr;
    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

double plan_pitch_hz(const UtterancePlan& plan, double t_s) {
    double sweep = 0.5 * plan.pitch_range_st *
                   std::sin(2.0 * M_PI * plan.pitch_mod_rate_hz * t_s + plan.pitch_phase);
    double st = sweep + plan.pitch_drift_st_per_s * t_s;
    return plan.base_pitch_hz * std::pow(2.0, st / 12.0);
}

SegmentTrack plan_segments(const UtterancePlan& plan) {
    SegmentTrack track;
    double t = 0.0;
    for (const PlannedSegment& seg : plan.segments) {
        double end = t + seg.duration_ms / 1000.0;
        track.segments.push_back(
            {t, end, seg.vowel ? SegmentKind::Vowel : SegmentKind::Consonant});
        t = end;
    }
    track.utterance_duration_s = t;
    return track;
}

AudioBuffer render_utterance(const UtterancePlan& plan, const std::string& source_id) {
    const int sr = plan.sample_rate_hz;
    double total_ms = 0.0;
    for (const PlannedSegment& s : plan.segments) total_ms += s.duration_ms;
    const size_t total_samples = static_cast<size_t>(std::llround(total_ms / 1000.0 * sr));

    AudioBuffer out;
    out.sample_rate_hz = sr;
    out.source_id = source_id;
    out.samples.assign(total_samples, 0.0);

    RandomStream noise_rng(plan.noise_seed);
    const double consonant_amp = kVowelAmplitude * std::pow(10.0, kConsonantLevelDb / 20.0);
    const size_t ramp_samples = static_cast<size_t>(kRampMs / 1000.0 * sr);
    const double harmonic_ceiling = std::min(2600.0, 0.45 * sr);

    // Noise is shaped once over the whole utterance and gated per segment, so
    // segment boundaries do not reset the filters.
    std::vector<double> white(total_samples);
    for (double& w : white) w = noise_rng.uniform(-1.0, 1.0);
    std::vector<double> noise =
        dsp::bandpass_filter(white, kNoiseBandLowHz, std::min(kNoiseBandHighHz, 0.45 * sr), sr);
    double noise_rms = 0.0;
    for (double v : noise) noise_rms += v * v;
    noise_rms = std::sqrt(noise_rms / std::max<size_t>(1, noise.size()));
    // Match the consonant RMS to the vowel RMS (sawtooth peak 1 -> rms 1/sqrt 3)
    // attenuated by kConsonantLevelDb.
    const double vowel_rms = kVowelAmplitude / std::sqrt(3.0);
    const double noise_gain = noise_rms > 0.0 ? vowel_rms * consonant_amp / (kVowelAmplitude * noise_rms) : 0.0;

    double phase = 0.0;
    size_t cursor = 0;
    for (const PlannedSegment& seg : plan.segments) {
        size_t n = static_cast<size_t>(std::llround(seg.duration_ms / 1000.0 * sr));
        n = std::min(n, total_samples - cursor);
        for (size_t i = 0; i < n; ++i) {
            size_t idx = cursor + i;
            double t = static_cast<double>(idx) / sr;
            double envelope = 1.0;
            if (ramp_samples > 0) {
                if (i < ramp_samples)
                    envelope *= 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) / ramp_samples);
                if (n - 1 - i < ramp_samples)
                    envelope *=
                        0.5 - 0.5 * std::cos(M_PI * static_cast<double>(n - 1 - i) / ramp_samples);
            }
            if (seg.vowel) {
                double f0 = plan_pitch_hz(plan, t);
                phase += 2.0 * M_PI * f0 / sr;
                if (phase > 2.0 * M_PI * 1e6) phase = std::fmod(phase, 2.0 * M_PI);
                int harmonics = std::max(1, static_cast<int>(harmonic_ceiling / f0));
                double v = 0.0;
                for (int h = 1; h <= harmonics; ++h) v += std::sin(h * phase) / h;
                out.samples[idx] = envelope * kVowelAmplitude * v * (2.0 / M_PI);
            } else {
                out.samples[idx] = envelope * noise_gain * noise[idx];
            }
        }
        cursor += n;
    }

    for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
    return out;
}

Manifest synth_corpus(const ProfileSet& profiles, const SynthConfig& cfg,
                      const std::filesystem::path& out_dir) {
    if (profiles.empty()) raise(Errc::InvalidConfig, "need at least one profile");
    if (cfg.speakers_per_dialect < 1 || cfg.utterances_per_speaker < 1)
        raise(Errc::InvalidConfig, "speaker and utterance counts must be >= 1");

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "wav", ec);
    std::filesystem::create_directories(out_dir / "truth", ec);
    if (!std::filesystem::is_directory(out_dir / "wav") ||
        !std::filesystem::is_directory(out_dir / "truth"))
        raise(Errc::IoError, "cannot create corpus directories under " + out_dir.string());

    struct Job {
        size_t dialect_idx, speaker_idx, utt_idx;
        std::string dialect, speaker_id, utterance_id;
    };
    std::vector<Job> jobs;
    for (size_t d = 0; d < profiles.size(); ++d) {
        std::string slug = slugify(profiles[d].first);
        for (int s = 0; s < cfg.speakers_per_dialect; ++s) {
            char spk[64], utt[96];
            std::snprintf(spk, sizeof(spk), "%s_s%02d", slug.c_str(), s + 1);
            for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
                std::snprintf(utt, sizeof(utt), "%s_u%02d", spk, u + 1);
                jobs.push_back({d, static_cast<size_t>(s), static_cast<size_t>(u),
                                profiles[d].first, spk, utt});
            }
        }
    }

    std::vector<double> durations(jobs.size(), 0.0);

    parallel_for(jobs.size(), cfg.jobs, [&](size_t ji) {
        const Job& job = jobs[ji];
        const DialectProfile& prof = profiles[job.dialect_idx].second;

        // Speaker identity: a pitch offset and a tempo scale, stable across
        // the speaker's utterances.
        RandomStream speaker_rng(RandomStream::derive(
            cfg.seed, {0x5EAFuLL, job.dialect_idx, job.speaker_idx}));
        double speaker_offset_st = speaker_rng.uniform(-kSpeakerPitchSpreadSt, kSpeakerPitchSpreadSt);
        double speaker_tempo = speaker_rng.uniform(1.0 - kSpeakerTempoSpread, 1.0 + kSpeakerTempoSpread);
        double speaker_range = speaker_rng.uniform(1.0 - kSpeakerRangeSpread, 1.0 + kSpeakerRangeSpread);

        RandomStream rng(RandomStream::derive(
            cfg.seed, {job.dialect_idx, job.speaker_idx, job.utt_idx}));

        UtterancePlan plan;
        plan.sample_rate_hz = cfg.sample_rate_hz;
        plan.base_pitch_hz = prof.base_pitch_hz * std::pow(2.0, speaker_offset_st / 12.0);
        plan.pitch_range_st = prof.pitch_range_st * speaker_range;
        plan.pitch_drift_st_per_s = prof.pitch_drift_st_per_s;
        plan.pitch_mod_rate_hz = prof.pitch_mod_rate_hz;
        plan.pitch_phase = rng.uniform(0.0, 2.0 * M_PI);
        plan.noise_seed = rng.next_u64();

        int syllables = rng.uniform_int(prof.syllables_min, prof.syllables_max);
        auto consonant = [&]() {
            double d = rng.lognormal(prof.consonant_mean_ms, prof.consonant_std_ms);
            return std::max(kMinConsonantMs, d * speaker_tempo);
        };
        auto vowel = [&]() {
            double d = rng.lognormal(prof.vowel_mean_ms, prof.vowel_std_ms);
            return std::max(kMinVowelMs, d * speaker_tempo);
        };
        // Edge consonants carry half weight so the utterance totals n vowels
        // and n consonant-durations and the vocalic proportion stays on the
        // profile target.
        plan.segments.push_back({std::max(kMinConsonantMs * 0.75, consonant() / 2.0), false});
        for (int s = 0; s < syllables; ++s) {
            plan.segments.push_back({vowel(), true});
            if (s + 1 < syllables)
                plan.segments.push_back({consonant(), false});
        }
        plan.segments.push_back({std::max(kMinConsonantMs * 0.75, consonant() / 2.0), false});

        AudioBuffer audio = render_utterance(plan, job.utterance_id);
        durations[ji] = audio.duration_s();
        write_wav(out_dir / "wav" / (job.utterance_id + ".wav"), audio);

        // Ground-truth sidecars.
        SegmentTrack truth = plan_segments(plan);
        {
            std::ofstream seg(out_dir / "truth" / (job.utterance_id + ".segments.csv"));
            if (!seg) raise(Errc::IoError, "cannot write segment sidecar for " + job.utterance_id);
            seg << "start_s,end_s,kind\n";
            for (const Segment& s : truth.segments)
                seg << format_double(s.start_s) << ',' << format_double(s.end_s) << ','
                    << (s.kind == SegmentKind::Vowel ? 'V' : 'C') << '\n';
        }
        {
            std::ofstream pit(out_dir / "truth" / (job.utterance_id + ".pitch.csv"));
            if (!pit) raise(Errc::IoError, "cannot write pitch sidecar for " + job.utterance_id);
            pit << "time_s,f0_hz\n";
            for (double t = 0.0; t < truth.utterance_duration_s; t += 0.01)
                pit << format_double(t) << ',' << format_double(plan_pitch_hz(plan, t)) << '\n';
        }
    });

    Manifest manifest;
    manifest.base_dir = out_dir;
    for (size_t ji = 0; ji < jobs.size(); ++ji) {
        const Job& job = jobs[ji];
        ManifestRow row;
        row.utterance_id = job.utterance_id;
        row.wav_path = "wav/" + job.utterance_id + ".wav";
        row.speaker_id = job.speaker_id;
        row.dialect = job.dialect;
        row.duration_s = durations[ji];
        manifest.rows.push_back(std::move(row));
    }
    write_manifest(out_dir / "manifest.csv", manifest);
    return manifest;
}

}  // namespace hadid

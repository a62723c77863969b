// Command-line front end: synth | extract | analyze | train | evaluate | classify.
// Exit codes: 0 success, 2 usage or data error, 3 unusable single input.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "hadid/config.hpp"
#include "hadid/corpus.hpp"
#include "hadid/dataset.hpp"
#include "hadid/error.hpp"
#include "hadid/evaluation.hpp"
#include "hadid/hierarchy.hpp"
#include "hadid/stats.hpp"
#include "hadid/vendor_json.hpp"

namespace fs = std::filesystem;
using namespace hadid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 2;
constexpr int kExitUnusableInput = 3;

int effective_jobs(int jobs) {
    if (jobs > 0) return jobs;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void run_parallel(size_t n, int jobs, const std::function<void(size_t)>& fn) {
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

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path.string());
    return out;
}

// ---------------------------------------------------------------- extract --

struct ExtractResult {
    FeatureTable table;
    std::vector<std::string> skipped;  // "utterance_id: reason"
};

ExtractResult extract_manifest(const Manifest& manifest, const PipelineConfig& pipeline, int jobs,
                               const fs::path& dump_segments, const fs::path& dump_pitch) {
    struct Slot {
        bool ok = false;
        FeatureRow row;
        std::string skip_reason;
    };
    std::vector<Slot> slots(manifest.rows.size());

    if (!dump_segments.empty()) fs::create_directories(dump_segments);
    if (!dump_pitch.empty()) fs::create_directories(dump_pitch);

    run_parallel(manifest.rows.size(), jobs, [&](size_t i) {
        const ManifestRow& mr = manifest.rows[i];
        Slot& slot = slots[i];
        try {
            AudioBuffer audio = load_wav(manifest.resolve(mr));
            audio.source_id = mr.utterance_id;
            ExtractionDetail detail = extract_features_detailed(audio, pipeline);
            slot.ok = true;
            slot.row = {mr.utterance_id, mr.speaker_id, mr.dialect, detail.features};

            if (!dump_segments.empty()) {
                auto out = open_out(dump_segments / (mr.utterance_id + ".segments.csv"));
                out << "start_s,end_s,kind\n";
                for (const Segment& s : detail.segments.segments)
                    out << format_double(s.start_s) << ',' << format_double(s.end_s) << ','
                        << (s.kind == SegmentKind::Vowel ? 'V' : 'C') << '\n';
            }
            if (!dump_pitch.empty()) {
                auto out = open_out(dump_pitch / (mr.utterance_id + ".pitch.csv"));
                out << "time_s,f0_hz\n";
                for (const PitchFrame& f : detail.pitch.frames) {
                    out << format_double(f.time_s) << ',';
                    if (f.voiced) out << format_double(f.f0_hz);
                    else out << "NA";
                    out << '\n';
                }
            }
        } catch (const Error& e) {
            if (e.code() == Errc::UnusableUtterance || e.code() == Errc::MissingFile ||
                e.code() == Errc::UnsupportedFormat || e.code() == Errc::CorruptHeader)
                slot.skip_reason = mr.utterance_id + ": " + e.what();
            else
                throw;
        }
    });

    ExtractResult result;
    for (Slot& slot : slots) {
        if (slot.ok)
            result.table.push_back(std::move(slot.row));
        else
            result.skipped.push_back(slot.skip_reason);
    }
    return result;
}

// ---------------------------------------------------------------- analyze --

void write_analyze_outputs(const FeatureTable& table, const fs::path& out_dir) {
    MeansTable means = dialect_means(table);
    if (means.dialects.size() < 2)
        raise(Errc::DegenerateInput, "analysis needs at least two dialects");

    fs::create_directories(out_dir);
    {
        auto out = open_out(out_dir / "means.csv");
        out << "feature";
        for (const std::string& d : means.dialects) out << ',' << d;
        out << '\n';
        for (size_t f = 0; f < kFeatureCount; ++f) {
            out << kFeatureNames[f];
            for (size_t d = 0; d < means.dialects.size(); ++d)
                out << ',' << format_double(means.means[f][d]);
            out << '\n';
        }
    }

    // Per-dialect value lists per feature.
    std::map<std::string, std::vector<std::array<double, kFeatureCount>>> by_dialect;
    for (const FeatureRow& row : table) by_dialect[row.dialect].push_back(row.features.values());

    {
        auto out = open_out(out_dir / "anova.csv");
        out << "feature,comparison,f,df_between,df_within,p,extreme_pair\n";
        for (size_t f = 0; f < kFeatureCount; ++f) {
            // The pair of dialects with the lowest and highest mean for this
            // feature is flagged; every pair is still reported.
            size_t lo = 0, hi = 0;
            for (size_t d = 1; d < means.dialects.size(); ++d) {
                if (means.means[f][d] < means.means[f][lo]) lo = d;
                if (means.means[f][d] > means.means[f][hi]) hi = d;
            }
            for (size_t a = 0; a < means.dialects.size(); ++a) {
                for (size_t b = a + 1; b < means.dialects.size(); ++b) {
                    size_t higher = means.means[f][a] >= means.means[f][b] ? a : b;
                    size_t lower = higher == a ? b : a;
                    std::vector<double> ga, gb;
                    for (const auto& vals : by_dialect[means.dialects[a]]) ga.push_back(vals[f]);
                    for (const auto& vals : by_dialect[means.dialects[b]]) gb.push_back(vals[f]);
                    out << kFeatureNames[f] << ',' << means.dialects[higher] << '>'
                        << means.dialects[lower] << ',';
                    try {
                        AnovaResult r = anova_oneway({ga, gb});
                        out << format_double(r.f_stat) << ',' << r.df_between << ','
                            << r.df_within << ',' << format_double(r.p_value);
                    } catch (const Error&) {
                        out << "NA,NA,NA,NA";
                    }
                    bool extreme = (a == lo && b == hi) || (a == hi && b == lo);
                    out << ',' << (extreme ? 1 : 0) << '\n';
                }
            }
        }
    }

    {
        auto out = open_out(out_dir / "scatter.csv");
        out << "dialect,pct_v,delta_c\n";
        int pct_idx = feature_index("pct_v"), dc_idx = feature_index("delta_c");
        for (size_t d = 0; d < means.dialects.size(); ++d)
            out << means.dialects[d] << ',' << format_double(means.means[pct_idx][d]) << ','
                << format_double(means.means[dc_idx][d]) << '\n';
    }
}

// --------------------------------------------------------------- evaluate --

std::string mode_name(EvalMode mode) {
    return mode == EvalMode::Flat ? "flat" : "hierarchical";
}

void write_eval_outputs(const EvalReport& report, const FeatureTable& table,
                        const fs::path& out_dir) {
    const std::string tag = mode_name(report.mode);
    fs::create_directories(out_dir);

    {
        auto out = open_out(out_dir / ("folds_" + tag + ".csv"));
        out << "fold,level1_precision,whole_system\n";
        for (size_t i = 0; i < report.folds.size(); ++i)
            out << (i + 1) << ',' << format_double(report.folds[i].level1_precision) << ','
                << format_double(report.folds[i].whole_system) << '\n';
        out << "average," << format_double(report.avg_level1) << ','
            << format_double(report.avg_whole) << '\n';
    }
    {
        auto out = open_out(out_dir / ("per_dialect_" + tag + ".csv"));
        out << "dialect,precision\n";
        for (const auto& [dialect, precision] : report.per_dialect_precision) {
            out << dialect << ',';
            if (precision) out << format_double(*precision);
            else out << "NA";
            out << '\n';
        }
    }
    {
        auto out = open_out(out_dir / ("confusion_" + tag + ".csv"));
        out << "true_dialect,predicted_dialect,count\n";
        for (const auto& [truth, row] : report.confusion)
            for (const auto& [pred, count] : row)
                out << truth << ',' << pred << ',' << count << '\n';
    }
    {
        auto out = open_out(out_dir / ("report_" + tag + ".txt"));
        out << "mode: " << tag << "\n";
        out << "k_folds: " << report.k << "\n";
        out << "seed: " << report.seed << "\n";
        out << "fold  level1  whole_system  n_test\n";
        for (size_t i = 0; i < report.folds.size(); ++i) {
            char line[128];
            std::snprintf(line, sizeof(line), "%4zu  %6.4f  %12.4f  %6d\n", i + 1,
                          report.folds[i].level1_precision, report.folds[i].whole_system,
                          report.folds[i].n_test);
            out << line;
        }
        char avg[128];
        std::snprintf(avg, sizeof(avg), " avg  %6.4f  %12.4f\n", report.avg_level1,
                      report.avg_whole);
        out << avg;

        // Speaker disjointness, fold by fold.
        FoldPlan plan = speaker_independent_folds(table, report.k, report.seed);
        std::set<SpeakerRef> all;
        for (const FeatureRow& row : table) all.insert({row.dialect, row.speaker_id});
        for (size_t i = 0; i < plan.folds.size(); ++i) {
            std::set<SpeakerRef> test(plan.folds[i].test_speakers.begin(),
                                      plan.folds[i].test_speakers.end());
            size_t train_count = all.size() - test.size();
            out << "fold " << (i + 1) << ": " << train_count << " train speakers, " << test.size()
                << " test speakers, overlap none\n";
        }
        for (const std::string& w : report.warnings) out << "warning: " << w << "\n";
    }
}

// ------------------------------------------------------------------- main --

struct CommonOptions {
    std::string config_path;
    ToolkitConfig cfg;
};

void finalize_config(CommonOptions& common, CLI::App* sub) {
    // The config file forms the base; flags already bound into cfg win, so
    // only fields the user did not pass on the command line are overwritten.
    if (common.config_path.empty()) return;
    ToolkitConfig from_file = load_toolkit_config(common.config_path);
    auto passed = [&](const std::string& name) {
        return sub->count(name) > 0;
    };

    if (!passed("--silence-db"))
        common.cfg.pipeline.gate.threshold_db = from_file.pipeline.gate.threshold_db;
    if (!passed("--min-silence-ms"))
        common.cfg.pipeline.gate.min_silence_ms = from_file.pipeline.gate.min_silence_ms;
    if (!passed("--f0-floor"))
        common.cfg.pipeline.pitch.f0_floor_hz = from_file.pipeline.pitch.f0_floor_hz;
    if (!passed("--f0-ceil"))
        common.cfg.pipeline.pitch.f0_ceil_hz = from_file.pipeline.pitch.f0_ceil_hz;
    if (!passed("--band-low"))
        common.cfg.pipeline.nucleus.band_low_hz = from_file.pipeline.nucleus.band_low_hz;
    if (!passed("--band-high"))
        common.cfg.pipeline.nucleus.band_high_hz = from_file.pipeline.nucleus.band_high_hz;

    bool has_train_flags = sub->get_option_no_throw("--hidden") != nullptr;
    if (has_train_flags) {
        if (!passed("--hidden")) common.cfg.lcpn.hidden_layers = from_file.lcpn.hidden_layers;
        if (!passed("--dropout")) common.cfg.lcpn.dropout_rate = from_file.lcpn.dropout_rate;
        if (!passed("--learning-rate"))
            common.cfg.lcpn.train.learning_rate = from_file.lcpn.train.learning_rate;
        if (!passed("--max-epochs"))
            common.cfg.lcpn.train.max_epochs = from_file.lcpn.train.max_epochs;
        if (!passed("--root-k")) common.cfg.lcpn.root_feature_k = from_file.lcpn.root_feature_k;
        if (!passed("--node-k"))
            common.cfg.lcpn.default_feature_k = from_file.lcpn.default_feature_k;
        if (!passed("--flat-k")) common.cfg.flat_feature_k = from_file.flat_feature_k;
    }

    // File-only settings always apply.
    common.cfg.pipeline.pitch.voicing_threshold = from_file.pipeline.pitch.voicing_threshold;
    common.cfg.pipeline.pitch.rms_gate_db = from_file.pipeline.pitch.rms_gate_db;
    common.cfg.pipeline.nucleus.peak_delta_db = from_file.pipeline.nucleus.peak_delta_db;
    common.cfg.pipeline.nucleus.min_nucleus_ms = from_file.pipeline.nucleus.min_nucleus_ms;
    common.cfg.pipeline.nucleus.merge_gap_ms = from_file.pipeline.nucleus.merge_gap_ms;
    common.cfg.pipeline.nucleus.edge_consonant_ms = from_file.pipeline.nucleus.edge_consonant_ms;
    common.cfg.lcpn.train.momentum = from_file.lcpn.train.momentum;
    common.cfg.lcpn.train.batch_size = from_file.lcpn.train.batch_size;
    common.cfg.lcpn.train.patience = from_file.lcpn.train.patience;
    common.cfg.lcpn.train.validation_fraction = from_file.lcpn.train.validation_fraction;
    common.cfg.k_folds = from_file.k_folds;
}

void add_pipeline_flags(CLI::App* sub, CommonOptions& common) {
    sub->add_option("--config", common.config_path, "JSON config file (flags win)");
    sub->add_option("--silence-db", common.cfg.pipeline.gate.threshold_db,
                    "silence gate relative threshold (dB < 0)");
    sub->add_option("--min-silence-ms", common.cfg.pipeline.gate.min_silence_ms,
                    "minimum silent run to cut (ms)");
    sub->add_option("--f0-floor", common.cfg.pipeline.pitch.f0_floor_hz, "pitch search floor (Hz)");
    sub->add_option("--f0-ceil", common.cfg.pipeline.pitch.f0_ceil_hz, "pitch search ceiling (Hz)");
    sub->add_option("--band-low", common.cfg.pipeline.nucleus.band_low_hz,
                    "intensity band low edge (Hz)");
    sub->add_option("--band-high", common.cfg.pipeline.nucleus.band_high_hz,
                    "intensity band high edge (Hz)");
}

void add_train_flags(CLI::App* sub, CommonOptions& common) {
    sub->add_option("--hidden", common.cfg.lcpn.hidden_layers, "hidden layer sizes");
    sub->add_option("--dropout", common.cfg.lcpn.dropout_rate, "hidden dropout rate [0,1)");
    sub->add_option("--learning-rate", common.cfg.lcpn.train.learning_rate, "SGD learning rate");
    sub->add_option("--max-epochs", common.cfg.lcpn.train.max_epochs, "epoch cap");
    sub->add_option("--root-k", common.cfg.lcpn.root_feature_k, "features kept at the root node");
    sub->add_option("--node-k", common.cfg.lcpn.default_feature_k,
                    "features kept at other internal nodes");
    sub->add_option("--flat-k", common.cfg.flat_feature_k, "features kept by the flat baseline");
}

nlohmann::json pipeline_to_json(const PipelineConfig& p) {
    return {
        {"silence",
         {{"threshold_db", p.gate.threshold_db}, {"min_silence_ms", p.gate.min_silence_ms}}},
        {"pitch",
         {{"f0_floor_hz", p.pitch.f0_floor_hz},
          {"f0_ceil_hz", p.pitch.f0_ceil_hz},
          {"voicing_threshold", p.pitch.voicing_threshold},
          {"rms_gate_db", p.pitch.rms_gate_db}}},
        {"nucleus",
         {{"band_low_hz", p.nucleus.band_low_hz},
          {"band_high_hz", p.nucleus.band_high_hz},
          {"peak_delta_db", p.nucleus.peak_delta_db},
          {"min_nucleus_ms", p.nucleus.min_nucleus_ms},
          {"merge_gap_ms", p.nucleus.merge_gap_ms},
          {"edge_consonant_ms", p.nucleus.edge_consonant_ms}}},
    };
}

PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    PipelineConfig p;
    if (j.contains("silence")) {
        p.gate.threshold_db = j["silence"].value("threshold_db", p.gate.threshold_db);
        p.gate.min_silence_ms = j["silence"].value("min_silence_ms", p.gate.min_silence_ms);
    }
    if (j.contains("pitch")) {
        p.pitch.f0_floor_hz = j["pitch"].value("f0_floor_hz", p.pitch.f0_floor_hz);
        p.pitch.f0_ceil_hz = j["pitch"].value("f0_ceil_hz", p.pitch.f0_ceil_hz);
        p.pitch.voicing_threshold =
            j["pitch"].value("voicing_threshold", p.pitch.voicing_threshold);
        p.pitch.rms_gate_db = j["pitch"].value("rms_gate_db", p.pitch.rms_gate_db);
    }
    if (j.contains("nucleus")) {
        p.nucleus.band_low_hz = j["nucleus"].value("band_low_hz", p.nucleus.band_low_hz);
        p.nucleus.band_high_hz = j["nucleus"].value("band_high_hz", p.nucleus.band_high_hz);
        p.nucleus.peak_delta_db = j["nucleus"].value("peak_delta_db", p.nucleus.peak_delta_db);
        p.nucleus.min_nucleus_ms = j["nucleus"].value("min_nucleus_ms", p.nucleus.min_nucleus_ms);
        p.nucleus.merge_gap_ms = j["nucleus"].value("merge_gap_ms", p.nucleus.merge_gap_ms);
        p.nucleus.edge_consonant_ms =
            j["nucleus"].value("edge_consonant_ms", p.nucleus.edge_consonant_ms);
    }
    return p;
}

DialectTree load_tree_or_default(const std::string& hierarchy_path, std::optional<int> depth) {
    if (hierarchy_path.empty()) {
        DialectTree tree = default_hierarchy();
        return depth ? tree.collapsed(*depth) : tree;
    }
    return load_hierarchy(hierarchy_path, depth);
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Prosody-based hierarchical dialect identification toolkit"};
    app.set_version_flag("--version", std::string("hadid ") + kToolkitVersion +
                                          " (model format " +
                                          std::to_string(kModelFormatVersion) + ")");
    app.require_subcommand(1);

    CommonOptions common;

    // ---- synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
    std::string synth_profiles, synth_out;
    uint64_t synth_seed = 0;
    int synth_speakers = 8, synth_utts = 10, synth_jobs = 0, synth_sr = 16000;
    synth->add_option("--profiles", synth_profiles,
                      "dialect profile JSON (bundled defaults if omitted)");
    synth->add_option("--out", synth_out, "output corpus directory")->required();
    synth->add_option("--seed", synth_seed, "generator seed")->required();
    synth->add_option("--speakers", synth_speakers, "speakers per dialect");
    synth->add_option("--utts", synth_utts, "utterances per speaker");
    synth->add_option("--sample-rate", synth_sr, "sample rate (Hz)");
    synth->add_option("--jobs", synth_jobs, "parallel workers (0 = all cores)");

    // ---- extract
    auto* extract = app.add_subcommand("extract", "Extract prosodic features from a corpus");
    std::string extract_manifest_path, extract_out, dump_segments, dump_pitch;
    int extract_jobs = 0;
    extract->add_option("--manifest", extract_manifest_path, "corpus manifest CSV")->required();
    extract->add_option("--out", extract_out, "output feature CSV")->required();
    extract->add_option("--dump-segments", dump_segments,
                        "directory for per-utterance segment CSVs");
    extract->add_option("--dump-pitch", dump_pitch, "directory for per-utterance pitch CSVs");
    extract->add_option("--jobs", extract_jobs, "parallel workers (0 = all cores)");
    add_pipeline_flags(extract, common);

    // ---- analyze
    auto* analyze = app.add_subcommand("analyze", "Per-dialect means, ANOVA table, scatter data");
    std::string analyze_features, analyze_out;
    analyze->add_option("--features", analyze_features, "feature CSV")->required();
    analyze->add_option("--out-dir", analyze_out, "output directory")->required();

    // ---- train
    auto* train_cmd = app.add_subcommand("train", "Train dialect models from features");
    std::string train_features, train_hierarchy, train_manifest, train_out;
    std::string train_mode = "hierarchical";
    uint64_t train_seed = 0;
    int train_depth_flag = 0;
    train_cmd->add_option("--features", train_features, "feature CSV")->required();
    train_cmd->add_option("--hierarchy", train_hierarchy,
                          "hierarchy JSON (bundled default if omitted)");
    train_cmd->add_option("--manifest", train_manifest, "corpus manifest (label cross-check)");
    train_cmd->add_option("--out", train_out, "model bundle directory")->required();
    train_cmd->add_option("--seed", train_seed, "training seed")->required();
    train_cmd->add_option("--mode", train_mode, "hierarchical | flat")
        ->check(CLI::IsMember({"hierarchical", "flat"}));
    train_cmd->add_option("--depth", train_depth_flag,
                          "collapse the hierarchy to this many decision levels");
    add_pipeline_flags(train_cmd, common);
    add_train_flags(train_cmd, common);

    // ---- evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Speaker-independent k-fold evaluation");
    std::string eval_features, eval_manifest, eval_hierarchy, eval_out;
    std::string eval_mode = "hierarchical";
    uint64_t eval_seed = 0;
    int eval_kfold = 5, eval_depth_flag = 0, eval_jobs = 0;
    evaluate->add_option("--features", eval_features, "feature CSV (skips extraction)");
    evaluate->add_option("--manifest", eval_manifest, "corpus manifest (features are extracted)");
    evaluate->add_option("--hierarchy", eval_hierarchy,
                         "hierarchy JSON (bundled default if omitted)");
    evaluate->add_option("--kfold", eval_kfold, "number of folds");
    evaluate->add_option("--seed", eval_seed, "fold and training seed")->required();
    evaluate->add_option("--mode", eval_mode, "hierarchical | flat | both")
        ->check(CLI::IsMember({"hierarchical", "flat", "both"}));
    evaluate->add_option("--depth", eval_depth_flag,
                         "collapse the hierarchy to this many decision levels");
    evaluate->add_option("--out-dir", eval_out, "output directory")->required();
    evaluate->add_option("--jobs", eval_jobs, "parallel workers (0 = all cores)");
    add_pipeline_flags(evaluate, common);
    add_train_flags(evaluate, common);

    // ---- classify
    auto* classify_cmd =
        app.add_subcommand("classify", "Classify one wav file with a trained model");
    std::string classify_model, classify_wav;
    classify_cmd->add_option("--model", classify_model, "model bundle directory")->required();
    classify_cmd->add_option("--wav", classify_wav, "input wav file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitDataError;  // usage errors share the data-error exit code
    }

    // ------------------------------------------------------------ synth ----
    if (*synth) {
        ProfileSet profiles =
            synth_profiles.empty() ? default_profiles() : load_profiles(synth_profiles);
        SynthConfig cfg;
        cfg.speakers_per_dialect = synth_speakers;
        cfg.utterances_per_speaker = synth_utts;
        cfg.seed = synth_seed;
        cfg.sample_rate_hz = synth_sr;
        cfg.jobs = effective_jobs(synth_jobs);
        Manifest manifest = synth_corpus(profiles, cfg, synth_out);
        std::cout << "wrote " << manifest.rows.size() << " utterances to " << synth_out << "\n";
        return kExitOk;
    }

    // ---------------------------------------------------------- extract ----
    if (*extract) {
        finalize_config(common, extract);
        validate(common.cfg);
        Manifest manifest = load_manifest(extract_manifest_path);
        int jobs = effective_jobs(extract->count("--jobs") ? extract_jobs : common.cfg.jobs);
        ExtractResult result =
            extract_manifest(manifest, common.cfg.pipeline, jobs,
                             dump_segments.empty() ? fs::path{} : fs::path(dump_segments),
                             dump_pitch.empty() ? fs::path{} : fs::path(dump_pitch));
        write_feature_csv(extract_out, result.table);
        for (const std::string& s : result.skipped) std::cerr << "skip " << s << "\n";
        std::cout << "extracted " << result.table.size() << " of " << manifest.rows.size()
                  << " utterances to " << extract_out << "\n";
        return kExitOk;
    }

    // ---------------------------------------------------------- analyze ----
    if (*analyze) {
        FeatureTable table = read_feature_csv(analyze_features);
        write_analyze_outputs(table, analyze_out);
        std::cout << "wrote means.csv, anova.csv, scatter.csv to " << analyze_out << "\n";
        return kExitOk;
    }

    // ------------------------------------------------------------ train ----
    if (*train_cmd) {
        finalize_config(common, train_cmd);
        validate(common.cfg);
        std::optional<int> depth;
        if (train_cmd->count("--depth")) depth = train_depth_flag;

        FeatureTable table = read_feature_csv(train_features);
        if (!train_manifest.empty()) {
            Manifest manifest = load_manifest(train_manifest);
            std::set<std::string> ids;
            for (const ManifestRow& row : manifest.rows) ids.insert(row.utterance_id);
            for (const FeatureRow& row : table)
                if (!ids.count(row.utterance_id))
                    raise(Errc::UnknownLabel,
                          "feature row '" + row.utterance_id + "' is not in the manifest");
        }

        DialectTree taxonomy = load_tree_or_default(train_hierarchy, depth);
        LcpnConfig lcpn = common.cfg.lcpn;
        lcpn.seed = train_seed;

        DialectTree run_tree = taxonomy;
        if (train_mode == "flat") {
            run_tree = flat_tree(taxonomy.leaf_labels(), taxonomy.node(taxonomy.root()).label);
            lcpn.root_feature_k = common.cfg.flat_feature_k;
            lcpn.default_feature_k = common.cfg.flat_feature_k;
        }

        HadidModel model = train_lcpn(run_tree, table, lcpn);
        nlohmann::json metadata;
        metadata["pipeline"] = pipeline_to_json(common.cfg.pipeline);
        save_model(model, train_out, train_mode, metadata);

        for (const auto& [node_id, nc] : model.nodes) {
            std::cout << "node '" << nc.node_label << "'";
            if (!nc.mlp) {
                std::cout << " skipped\n";
                continue;
            }
            std::cout << " features:";
            for (size_t i = 0; i < nc.feature_indices.size(); ++i)
                std::cout << ' ' << kFeatureNames[nc.feature_indices[i]];
            std::cout << "\n";
        }
        for (const std::string& w : model.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << "model written to " << train_out << "\n";
        return kExitOk;
    }

    // --------------------------------------------------------- evaluate ----
    if (*evaluate) {
        finalize_config(common, evaluate);
        validate(common.cfg);
        if (eval_features.empty() && eval_manifest.empty())
            raise(Errc::InvalidConfig, "evaluate needs --features or --manifest");

        int jobs = effective_jobs(evaluate->count("--jobs") ? eval_jobs : common.cfg.jobs);
        FeatureTable table;
        if (!eval_features.empty()) {
            table = read_feature_csv(eval_features);
        } else {
            Manifest manifest = load_manifest(eval_manifest);
            ExtractResult result = extract_manifest(manifest, common.cfg.pipeline, jobs, {}, {});
            for (const std::string& s : result.skipped) std::cerr << "skip " << s << "\n";
            table = std::move(result.table);
        }

        std::optional<int> depth;
        if (evaluate->count("--depth")) depth = eval_depth_flag;
        DialectTree taxonomy = load_tree_or_default(eval_hierarchy, depth);

        ExperimentConfig cfg;
        cfg.k_folds = eval_kfold;
        cfg.seed = eval_seed;
        cfg.lcpn = common.cfg.lcpn;
        cfg.lcpn.seed = eval_seed;
        cfg.flat_feature_k = common.cfg.flat_feature_k;
        cfg.jobs = jobs;

        std::vector<EvalReport> reports;
        if (eval_mode == "hierarchical" || eval_mode == "both")
            reports.push_back(run_experiment(table, taxonomy, EvalMode::Hierarchical, cfg));
        if (eval_mode == "flat" || eval_mode == "both")
            reports.push_back(run_experiment(table, taxonomy, EvalMode::Flat, cfg));

        for (const EvalReport& report : reports) {
            write_eval_outputs(report, table, eval_out);
            char line[128];
            std::snprintf(line, sizeof(line), "%s: level-1 %.4f, whole-system %.4f\n",
                          mode_name(report.mode).c_str(), report.avg_level1, report.avg_whole);
            std::cout << line;
            for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
        }

        if (reports.size() == 2) {
            auto out = open_out(fs::path(eval_out) / "comparison.csv");
            out << "system";
            for (int i = 1; i <= eval_kfold; ++i) out << ",fold_" << i;
            out << ",average\n";
            for (const EvalReport& report : reports) {
                out << mode_name(report.mode);
                for (const FoldMetrics& m : report.folds)
                    out << ',' << format_double(m.whole_system);
                out << ',' << format_double(report.avg_whole) << '\n';
            }
        }
        return kExitOk;
    }

    // --------------------------------------------------------- classify ----
    if (*classify_cmd) {
        HadidModel model = load_model(classify_model);

        // The bundle remembers the pipeline it was trained with.
        PipelineConfig pipeline;
        {
            std::ifstream in(fs::path(classify_model) / "manifest.json");
            nlohmann::json manifest;
            in >> manifest;
            if (manifest.contains("metadata") && manifest["metadata"].contains("pipeline"))
                pipeline = pipeline_from_json(manifest["metadata"]["pipeline"]);
        }

        AudioBuffer audio = load_wav(classify_wav);
        FeatureVector features = extract_features(audio, pipeline);
        Classification result = classify(model, features);

        std::cout << "path:";
        for (size_t i = 0; i < result.path.size(); ++i)
            std::cout << (i == 0 ? " " : " > ") << result.path[i];
        std::cout << "\n";
        for (const NodeDecision& d : result.decisions) {
            std::cout << "node '" << d.node_label << "':";
            if (d.forced) {
                std::cout << " pass-through -> " << d.chosen << "\n";
                continue;
            }
            for (const auto& [label, p] : d.probabilities) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f", p);
                std::cout << ' ' << label << '=' << buf;
            }
            std::cout << " -> " << d.chosen << "\n";
        }
        std::cout << "dialect: " << result.leaf << "\n";
        return kExitOk;
    }

    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Errc::UnusableUtterance ? kExitUnusableInput : kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
}

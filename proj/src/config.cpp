#include "hadid/config.hpp"

#include <fstream>

#include "hadid/error.hpp"
#include "hadid/vendor_json.hpp"

namespace hadid {

namespace {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ToolkitConfig load_toolkit_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::MissingFile, path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::CorruptHeader, "config parse error: " + std::string(e.what()));
    }

    ToolkitConfig cfg;
    if (j.contains("silence")) {
        const auto& s = j["silence"];
        maybe(s, "threshold_db", cfg.pipeline.gate.threshold_db);
        maybe(s, "min_silence_ms", cfg.pipeline.gate.min_silence_ms);
    }
    if (j.contains("pitch")) {
        const auto& p = j["pitch"];
        maybe(p, "f0_floor_hz", cfg.pipeline.pitch.f0_floor_hz);
        maybe(p, "f0_ceil_hz", cfg.pipeline.pitch.f0_ceil_hz);
        maybe(p, "voicing_threshold", cfg.pipeline.pitch.voicing_threshold);
        maybe(p, "rms_gate_db", cfg.pipeline.pitch.rms_gate_db);
    }
    if (j.contains("nucleus")) {
        const auto& n = j["nucleus"];
        maybe(n, "band_low_hz", cfg.pipeline.nucleus.band_low_hz);
        maybe(n, "band_high_hz", cfg.pipeline.nucleus.band_high_hz);
        maybe(n, "peak_delta_db", cfg.pipeline.nucleus.peak_delta_db);
        maybe(n, "min_nucleus_ms", cfg.pipeline.nucleus.min_nucleus_ms);
        maybe(n, "merge_gap_ms", cfg.pipeline.nucleus.merge_gap_ms);
        maybe(n, "edge_consonant_ms", cfg.pipeline.nucleus.edge_consonant_ms);
    }
    if (j.contains("network")) {
        const auto& n = j["network"];
        maybe(n, "hidden_layers", cfg.lcpn.hidden_layers);
        maybe(n, "dropout_rate", cfg.lcpn.dropout_rate);
        maybe(n, "learning_rate", cfg.lcpn.train.learning_rate);
        maybe(n, "momentum", cfg.lcpn.train.momentum);
        maybe(n, "batch_size", cfg.lcpn.train.batch_size);
        maybe(n, "max_epochs", cfg.lcpn.train.max_epochs);
        maybe(n, "patience", cfg.lcpn.train.patience);
        maybe(n, "validation_fraction", cfg.lcpn.train.validation_fraction);
    }
    if (j.contains("selection")) {
        const auto& s = j["selection"];
        maybe(s, "root_feature_k", cfg.lcpn.root_feature_k);
        maybe(s, "default_feature_k", cfg.lcpn.default_feature_k);
        maybe(s, "flat_feature_k", cfg.flat_feature_k);
    }
    maybe(j, "k_folds", cfg.k_folds);
    maybe(j, "jobs", cfg.jobs);
    return cfg;
}

void save_toolkit_config(const std::filesystem::path& path, const ToolkitConfig& cfg) {
    nlohmann::json j;
    j["silence"] = {{"threshold_db", cfg.pipeline.gate.threshold_db},
                    {"min_silence_ms", cfg.pipeline.gate.min_silence_ms}};
    j["pitch"] = {{"f0_floor_hz", cfg.pipeline.pitch.f0_floor_hz},
                  {"f0_ceil_hz", cfg.pipeline.pitch.f0_ceil_hz},
                  {"voicing_threshold", cfg.pipeline.pitch.voicing_threshold},
                  {"rms_gate_db", cfg.pipeline.pitch.rms_gate_db}};
    j["nucleus"] = {{"band_low_hz", cfg.pipeline.nucleus.band_low_hz},
                    {"band_high_hz", cfg.pipeline.nucleus.band_high_hz},
                    {"peak_delta_db", cfg.pipeline.nucleus.peak_delta_db},
                    {"min_nucleus_ms", cfg.pipeline.nucleus.min_nucleus_ms},
                    {"merge_gap_ms", cfg.pipeline.nucleus.merge_gap_ms},
                    {"edge_consonant_ms", cfg.pipeline.nucleus.edge_consonant_ms}};
    j["network"] = {{"hidden_layers", cfg.lcpn.hidden_layers},
                    {"dropout_rate", cfg.lcpn.dropout_rate},
                    {"learning_rate", cfg.lcpn.train.learning_rate},
                    {"momentum", cfg.lcpn.train.momentum},
                    {"batch_size", cfg.lcpn.train.batch_size},
                    {"max_epochs", cfg.lcpn.train.max_epochs},
                    {"patience", cfg.lcpn.train.patience},
                    {"validation_fraction", cfg.lcpn.train.validation_fraction}};
    j["selection"] = {{"root_feature_k", cfg.lcpn.root_feature_k},
                      {"default_feature_k", cfg.lcpn.default_feature_k},
                      {"flat_feature_k", cfg.flat_feature_k}};
    j["k_folds"] = cfg.k_folds;
    j["jobs"] = cfg.jobs;

    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void validate(const ToolkitConfig& cfg) {
    const auto& pl = cfg.pipeline;
    if (pl.gate.threshold_db >= 0.0) raise(Errc::InvalidConfig, "silence threshold must be < 0 dB");
    if (pl.gate.min_silence_ms <= 0.0) raise(Errc::InvalidConfig, "min_silence_ms must be > 0");
    if (pl.pitch.f0_floor_hz <= 0.0 || pl.pitch.f0_ceil_hz <= pl.pitch.f0_floor_hz)
        raise(Errc::InvalidConfig, "pitch band must satisfy 0 < floor < ceil");
    if (pl.pitch.f0_ceil_hz / pl.pitch.f0_floor_hz < 1.1)
        raise(Errc::InvalidConfig, "pitch band ratio must be >= 1.1");
    if (pl.nucleus.band_low_hz < 0.0 || pl.nucleus.band_high_hz <= pl.nucleus.band_low_hz)
        raise(Errc::InvalidConfig, "intensity band must satisfy 0 <= low < high");
    if (pl.nucleus.min_nucleus_ms <= 0.0 || pl.nucleus.merge_gap_ms < 0.0 ||
        pl.nucleus.edge_consonant_ms < 0.0 || pl.nucleus.peak_delta_db <= 0.0)
        raise(Errc::InvalidConfig, "nucleus thresholds must be positive");
    const auto& t = cfg.lcpn.train;
    if (t.learning_rate <= 0.0 || t.momentum < 0.0 || t.momentum >= 1.0 || t.batch_size < 1 ||
        t.max_epochs < 1 || t.patience < 1 || t.validation_fraction < 0.0 ||
        t.validation_fraction >= 1.0)
        raise(Errc::InvalidConfig, "invalid network training parameters");
    if (cfg.lcpn.hidden_layers.empty()) raise(Errc::InvalidConfig, "need at least one hidden layer");
    for (int h : cfg.lcpn.hidden_layers)
        if (h < 1) raise(Errc::InvalidConfig, "hidden layer sizes must be >= 1");
    if (cfg.lcpn.dropout_rate < 0.0 || cfg.lcpn.dropout_rate >= 1.0)
        raise(Errc::InvalidConfig, "dropout must be in [0, 1)");
    auto check_k = [](int k, const char* what) {
        if (k < 1 || static_cast<size_t>(k) > kFeatureCount)
            raise(Errc::InvalidConfig, std::string(what) + " must be in [1, 14]");
    };
    check_k(cfg.lcpn.root_feature_k, "root_feature_k");
    check_k(cfg.lcpn.default_feature_k, "default_feature_k");
    check_k(cfg.flat_feature_k, "flat_feature_k");
    if (cfg.k_folds < 2) raise(Errc::InvalidConfig, "k_folds must be >= 2");
    if (cfg.jobs < 0) raise(Errc::InvalidConfig, "jobs must be >= 0");
}

}  // namespace hadid

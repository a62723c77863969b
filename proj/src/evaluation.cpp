#include "hadid/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "hadid/error.hpp"
#include "hadid/rng.hpp"

namespace hadid {

namespace {

// Labels on the path from the leaf up to, but excluding, the root.
std::vector<std::string> ancestor_set(const DialectTree& tree, const std::string& leaf) {
    auto id = tree.find_label(leaf);
    if (!id || !tree.is_leaf(*id)) raise(Errc::PathNotInTree, leaf);
    std::vector<std::string> out;
    for (int node : tree.path_from_root(*id))
        if (node != tree.root()) out.push_back(tree.node(node).label);
    return out;
}

int top_branch(const DialectTree& tree, const std::string& leaf) {
    auto id = tree.find_label(leaf);
    if (!id) raise(Errc::PathNotInTree, leaf);
    std::vector<int> path = tree.path_from_root(*id);
    return path.size() > 1 ? path[1] : path[0];
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
    size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

double hierarchical_precision(const std::vector<std::string>& predicted_leaves,
                              const std::vector<std::string>& true_leaves,
                              const DialectTree& tree) {
    if (predicted_leaves.size() != true_leaves.size())
        raise(Errc::LengthMismatch, "prediction and truth lists differ in length");

    long long intersection = 0, predicted_total = 0;
    for (size_t i = 0; i < predicted_leaves.size(); ++i) {
        std::vector<std::string> pred = ancestor_set(tree, predicted_leaves[i]);
        std::vector<std::string> truth = ancestor_set(tree, true_leaves[i]);
        predicted_total += static_cast<long long>(pred.size());
        std::set<std::string> truth_set(truth.begin(), truth.end());
        for (const std::string& label : pred)
            if (truth_set.count(label)) ++intersection;
    }
    if (predicted_total == 0) return 0.0;
    return static_cast<double>(intersection) / static_cast<double>(predicted_total);
}

MicroPrecision micro_precision(const std::vector<std::string>& predicted,
                               const std::vector<std::string>& truth) {
    if (predicted.size() != truth.size())
        raise(Errc::LengthMismatch, "prediction and truth lists differ in length");

    MicroPrecision out;
    size_t correct = 0;
    std::map<std::string, std::pair<int, int>> counts;  // class -> (correct-as, predicted-as)
    std::set<std::string> classes(truth.begin(), truth.end());
    for (size_t i = 0; i < predicted.size(); ++i) {
        auto& c = counts[predicted[i]];
        ++c.second;
        if (predicted[i] == truth[i]) {
            ++c.first;
            ++correct;
        }
        classes.insert(predicted[i]);
    }
    out.micro = predicted.empty() ? 0.0
                                  : static_cast<double>(correct) / static_cast<double>(predicted.size());
    for (const std::string& cls : classes) {
        auto it = counts.find(cls);
        if (it == counts.end() || it->second.second == 0)
            out.per_class[cls] = std::nullopt;
        else
            out.per_class[cls] = static_cast<double>(it->second.first) / it->second.second;
    }
    return out;
}

FoldPlan speaker_independent_folds(
    const std::vector<std::pair<std::string, std::string>>& speaker_dialect, int k, uint64_t seed) {
    if (k < 2) raise(Errc::InvalidConfig, "k must be >= 2");

    // Distinct speakers per dialect, in first-seen order before shuffling.
    std::map<std::string, std::vector<std::string>> by_dialect;
    std::set<SpeakerRef> seen;
    for (const auto& [speaker, dialect] : speaker_dialect)
        if (seen.insert({dialect, speaker}).second) by_dialect[dialect].push_back(speaker);

    for (const auto& [dialect, speakers] : by_dialect)
        if (speakers.size() < 2)
            raise(Errc::TooFewSpeakers, "dialect '" + dialect + "' has " +
                                            std::to_string(speakers.size()) + " speaker(s)");

    FoldPlan plan;
    plan.k = k;
    plan.folds.resize(k);
    for (auto& [dialect, speakers] : by_dialect) {
        std::sort(speakers.begin(), speakers.end());
        RandomStream rng(RandomStream::derive(seed, {RandomStream::hash_string(dialect)}));
        rng.shuffle(speakers);
        for (size_t i = 0; i < speakers.size(); ++i)
            plan.folds[i % k].test_speakers.push_back({dialect, speakers[i]});

        if (speakers.size() < static_cast<size_t>(k)) {
            std::string folds_missing;
            for (size_t f = speakers.size(); f < static_cast<size_t>(k); ++f) {
                if (!folds_missing.empty()) folds_missing += ",";
                folds_missing += std::to_string(f + 1);
            }
            plan.warnings.push_back("dialect '" + dialect + "' has " +
                                    std::to_string(speakers.size()) + " speakers < k=" +
                                    std::to_string(k) + "; absent from test folds " + folds_missing);
        }
    }
    return plan;
}

FoldPlan speaker_independent_folds(const FeatureTable& table, int k, uint64_t seed) {
    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(table.size());
    for (const FeatureRow& row : table) pairs.push_back({row.speaker_id, row.dialect});
    return speaker_independent_folds(pairs, k, seed);
}

EvalReport run_experiment(const FeatureTable& table, const DialectTree& tree, EvalMode mode,
                          const ExperimentConfig& cfg) {
    if (table.empty()) raise(Errc::EmptyDataset, "empty feature table");

    FoldPlan plan = speaker_independent_folds(table, cfg.k_folds, cfg.seed);

    EvalReport report;
    report.mode = mode;
    report.k = cfg.k_folds;
    report.seed = cfg.seed;
    report.warnings = plan.warnings;
    report.folds.resize(cfg.k_folds);

    // The tree actually trained on: the taxonomy itself, or its leaves
    // flattened under a single decision for the flat baseline.
    DialectTree run_tree =
        mode == EvalMode::Flat ? flat_tree(tree.leaf_labels(), tree.node(tree.root()).label) : tree;

    struct FoldOutput {
        std::vector<std::string> predicted, truth;
        std::vector<std::string> model_warnings;
    };
    std::vector<FoldOutput> outputs(cfg.k_folds);

    run_parallel(static_cast<size_t>(cfg.k_folds), cfg.jobs, [&](size_t fold) {
        std::set<SpeakerRef> test_set(plan.folds[fold].test_speakers.begin(),
                                      plan.folds[fold].test_speakers.end());
        FeatureTable train_rows, test_rows;
        for (const FeatureRow& row : table)
            (test_set.count({row.dialect, row.speaker_id}) ? test_rows : train_rows).push_back(row);

        LcpnConfig fold_cfg = cfg.lcpn;
        fold_cfg.seed = RandomStream::derive(cfg.seed, {0xF01DuLL, fold});
        if (mode == EvalMode::Flat) {
            fold_cfg.root_feature_k = cfg.flat_feature_k;
            fold_cfg.default_feature_k = cfg.flat_feature_k;
        }

        HadidModel model;
        try {
            model = train_lcpn(run_tree, train_rows, fold_cfg);
            // The flat baseline is one real classifier over all leaves; a
            // pass-through root means the data held a single class.
            if (mode == EvalMode::Flat && !model.nodes.at(run_tree.root()).mlp)
                raise(Errc::SingleClassData, "flat training data covers a single dialect");
        } catch (const Error& e) {
            throw Error(e.code(), "fold " + std::to_string(fold + 1) + ": " + e.what());
        }
        outputs[fold].model_warnings = model.warnings;

        for (const FeatureRow& row : test_rows) {
            Classification c = classify(model, row.features);
            outputs[fold].predicted.push_back(c.leaf);
            outputs[fold].truth.push_back(row.dialect);
        }
    });

    std::vector<std::string> all_pred, all_truth;
    for (int fold = 0; fold < cfg.k_folds; ++fold) {
        const FoldOutput& out = outputs[fold];
        FoldMetrics& m = report.folds[fold];
        m.n_test = static_cast<int>(out.predicted.size());

        size_t level1_hits = 0;
        for (size_t i = 0; i < out.predicted.size(); ++i) {
            if (top_branch(tree, out.predicted[i]) == top_branch(tree, out.truth[i]))
                ++level1_hits;
        }
        m.level1_precision =
            out.predicted.empty() ? 0.0 : static_cast<double>(level1_hits) / out.predicted.size();
        m.whole_system = mode == EvalMode::Flat
                             ? micro_precision(out.predicted, out.truth).micro
                             : hierarchical_precision(out.predicted, out.truth, tree);

        for (const std::string& w : out.model_warnings)
            report.warnings.push_back("fold " + std::to_string(fold + 1) + ": " + w);
        all_pred.insert(all_pred.end(), out.predicted.begin(), out.predicted.end());
        all_truth.insert(all_truth.end(), out.truth.begin(), out.truth.end());
    }

    for (const FoldMetrics& m : report.folds) {
        report.avg_level1 += m.level1_precision;
        report.avg_whole += m.whole_system;
    }
    report.avg_level1 /= static_cast<double>(cfg.k_folds);
    report.avg_whole /= static_cast<double>(cfg.k_folds);

    report.per_dialect_precision = micro_precision(all_pred, all_truth).per_class;
    for (size_t i = 0; i < all_pred.size(); ++i) ++report.confusion[all_truth[i]][all_pred[i]];
    return report;
}

}  // namespace hadid

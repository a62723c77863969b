#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hadid/dataset.hpp"
#include "hadid/hierarchy.hpp"

namespace hadid {

// Hierarchical precision over ancestor-augmented class sets. For each
// example the set is its leaf plus all ancestors excluding the root; the
// result is sum |pred ∩ true| / sum |pred|. On a one-level tree this equals
// micro precision.
double hierarchical_precision(const std::vector<std::string>& predicted_leaves,
                              const std::vector<std::string>& true_leaves,
                              const DialectTree& tree);

struct MicroPrecision {
    double micro = 0.0;
    // correct-as-c / predicted-as-c; nullopt for classes never predicted.
    std::map<std::string, std::optional<double>> per_class;
};

MicroPrecision micro_precision(const std::vector<std::string>& predicted,
                               const std::vector<std::string>& truth);

// Speakers are identified per dialect; the same literal id under two
// dialects is treated as two people.
struct SpeakerRef {
    std::string dialect;
    std::string speaker_id;
    auto operator<=>(const SpeakerRef&) const = default;
};

struct FoldSplit {
    std::vector<SpeakerRef> test_speakers;  // train speakers are the complement
};

struct FoldPlan {
    int k = 0;
    std::vector<FoldSplit> folds;
    std::vector<std::string> warnings;  // dialects absent from some test folds
};

// Partitions speakers (never utterances) into k folds: per dialect, a seeded
// shuffle followed by round-robin assignment. Throws TooFewSpeakers when a
// dialect has fewer than two speakers overall.
FoldPlan speaker_independent_folds(const std::vector<std::pair<std::string, std::string>>& speaker_dialect,
                                   int k, uint64_t seed);
FoldPlan speaker_independent_folds(const FeatureTable& table, int k, uint64_t seed);

enum class EvalMode { Hierarchical, Flat };

struct FoldMetrics {
    double level1_precision = 0.0;
    double whole_system = 0.0;  // hP (hierarchical) or micro precision (flat)
    int n_test = 0;
};

struct EvalReport {
    EvalMode mode = EvalMode::Hierarchical;
    std::vector<FoldMetrics> folds;
    double avg_level1 = 0.0;
    double avg_whole = 0.0;
    std::map<std::string, std::optional<double>> per_dialect_precision;  // over all folds
    std::map<std::string, std::map<std::string, int>> confusion;         // true -> predicted -> n
    std::vector<std::string> warnings;
    int k = 0;
    uint64_t seed = 0;
};

struct ExperimentConfig {
    int k_folds = 5;
    uint64_t seed = 0;
    LcpnConfig lcpn;     // per-fold training configuration
    int flat_feature_k = 7;
    int jobs = 1;
};

// Speaker-independent k-fold experiment: per fold, trains (LCPN or a single
// all-leaves classifier) on the train speakers and scores the test speakers.
EvalReport run_experiment(const FeatureTable& table, const DialectTree& tree, EvalMode mode,
                          const ExperimentConfig& config);

}  // namespace hadid

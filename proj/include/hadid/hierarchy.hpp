#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hadid/dataset.hpp"
#include "hadid/neuralnet.hpp"
#include "hadid/stats.hpp"

namespace hadid {

struct TreeNode {
    int id = -1;
    std::string label;
    int parent = -1;               // -1 at the root
    std::vector<int> children;     // declaration order;  empty means leaf
    std::optional<int> feature_k;  // per-node feature-selection override
};

// Validated dialect taxonomy: single root, unique labels, every internal
// node with at least two children.
class DialectTree {
  public:
    static DialectTree from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    int root() const { return root_; }
    const TreeNode& node(int id) const { return nodes_.at(id); }
    size_t node_count() const { return nodes_.size(); }
    bool is_leaf(int id) const { return nodes_.at(id).children.empty(); }

    std::vector<int> internal_nodes() const;  // root first, breadth-first
    std::vector<std::string> leaf_labels() const;
    std::optional<int> find_label(const std::string& label) const;

    // Node ids from the root down to id, inclusive.
    std::vector<int> path_from_root(int id) const;
    // Longest downward edge count from the node.
    int height(int id) const;
    bool is_ancestor(int ancestor, int id) const;

    // Keeps the deepest `levels` levels of decision nodes: internal nodes of
    // height <= height(root) - levels become leaves. levels >= height(root)
    // is a no-op.
    DialectTree collapsed(int levels) const;

  private:
    void validate() const;

    std::vector<TreeNode> nodes_;
    int root_ = -1;
};

// Reads the hierarchy config (a JSON tree of {label, children, k}).
DialectTree load_hierarchy(const std::filesystem::path& path,
                           std::optional<int> depth_limit = {});
DialectTree default_hierarchy();
// A one-level tree over the given leaf labels (flat classification).
DialectTree flat_tree(const std::vector<std::string>& leaves, const std::string& root_label = "all");

struct LcpnConfig {
    TrainConfig train;
    std::vector<int> hidden_layers{64, 64};
    double dropout_rate = 0.25;
    int root_feature_k = 6;
    int default_feature_k = 7;
    uint64_t seed = 0;
};

// One trained local classifier per internal node, each with its own
// ANOVA-ranked feature subset.
struct NodeClassifier {
    std::string node_label;
    std::vector<int> feature_indices;        // canonical indices, rank order
    std::vector<double> feature_f_stats;     // aligned with feature_indices
    std::vector<std::string> class_labels;   // child labels, declaration order
    std::optional<Mlp> mlp;                  // absent when the node was skipped
    std::optional<int> forced_child;         // pass-through branch of a skipped node
};

struct HadidModel {
    DialectTree tree;
    std::map<int, NodeClassifier> nodes;  // keyed by internal node id
    uint64_t seed = 0;
    LcpnConfig config;
    std::vector<std::string> warnings;    // skipped nodes etc.
};

// Trains the local classifier of every internal node on the utterances whose
// leaf label descends from it, relabeled by child branch. Nodes whose data
// covers fewer than two branches are skipped with a warning and classify
// passes through them deterministically.
HadidModel train_lcpn(const DialectTree& tree, const FeatureTable& dataset, const LcpnConfig& config);

struct NodeDecision {
    std::string node_label;
    std::vector<std::pair<std::string, double>> probabilities;  // child label -> p
    std::string chosen;
    bool forced = false;  // skipped node, no probabilities recorded
};

struct Classification {
    std::string leaf;
    std::vector<std::string> path;  // root label .. leaf label
    std::vector<NodeDecision> decisions;
};

// Greedy top-down descent; ties break toward the first-declared child.
// start_node = -1 descends from the root.
Classification classify(const HadidModel& model, const FeatureVector& features,
                        int start_node = -1);

// Model bundle: directory with hierarchy.json, manifest.json and one
// node_<id>.json per trained classifier. metadata is stored verbatim in the
// manifest (the CLI uses it to remember the extraction pipeline settings).
void save_model(const HadidModel& model, const std::filesystem::path& dir,
                const std::string& mode_tag = "hierarchical",
                const nlohmann::json& metadata = {});
HadidModel load_model(const std::filesystem::path& dir);

}  // namespace hadid

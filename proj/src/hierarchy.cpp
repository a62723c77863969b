#include "hadid/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <set>

#include "hadid/error.hpp"

namespace hadid {

namespace {

void build_from_json(const nlohmann::json& j, int parent, std::vector<TreeNode>& nodes) {
    if (!j.contains("label") || !j["label"].is_string())
        raise(Errc::CorruptHeader, "hierarchy node without a label");
    TreeNode node;
    node.id = static_cast<int>(nodes.size());
    node.label = j["label"].get<std::string>();
    node.parent = parent;
    if (j.contains("k")) node.feature_k = j["k"].get<int>();
    nodes.push_back(node);
    int id = node.id;
    if (j.contains("children")) {
        for (const auto& child : j["children"]) {
            int child_id = static_cast<int>(nodes.size());
            nodes[id].children.push_back(child_id);
            build_from_json(child, id, nodes);
        }
    }
}

}  // namespace

DialectTree DialectTree::from_json(const nlohmann::json& j) {
    DialectTree tree;
    build_from_json(j, -1, tree.nodes_);
    tree.root_ = 0;
    tree.validate();
    return tree;
}

nlohmann::json DialectTree::to_json() const {
    // Recursive emission in declaration order.
    std::function<nlohmann::json(int)> emit = [&](int id) {
        const TreeNode& n = nodes_[id];
        nlohmann::json j;
        j["label"] = n.label;
        if (n.feature_k) j["k"] = *n.feature_k;
        if (!n.children.empty()) {
            nlohmann::json kids = nlohmann::json::array();
            for (int c : n.children) kids.push_back(emit(c));
            j["children"] = kids;
        }
        return j;
    };
    return emit(root_);
}

void DialectTree::validate() const {
    if (nodes_.empty()) raise(Errc::CorruptHeader, "empty hierarchy");

    std::set<std::string> labels;
    for (const TreeNode& n : nodes_) {
        if (!labels.insert(n.label).second) raise(Errc::DuplicateLabel, n.label);
        if (n.children.size() == 1) raise(Errc::UnaryNode, n.label);
    }

    // Reachability and cycle check from the root.
    std::vector<int> state(nodes_.size(), 0);
    std::deque<int> queue{root_};
    size_t seen = 0;
    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            raise(Errc::CorruptHeader, "child id out of range");
        if (state[id]) raise(Errc::CycleDetected, nodes_[id].label);
        state[id] = 1;
        ++seen;
        for (int c : nodes_[id].children) {
            if (nodes_[c].parent != id) raise(Errc::CycleDetected, nodes_[c].label);
            queue.push_back(c);
        }
    }
    if (seen != nodes_.size()) raise(Errc::CycleDetected, "disconnected hierarchy nodes");
}

std::vector<int> DialectTree::internal_nodes() const {
    std::vector<int> out;
    std::deque<int> queue{root_};
    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        if (!is_leaf(id)) {
            out.push_back(id);
            for (int c : nodes_[id].children) queue.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> DialectTree::leaf_labels() const {
    std::vector<std::string> out;
    for (const TreeNode& n : nodes_)
        if (n.children.empty()) out.push_back(n.label);
    return out;
}

std::optional<int> DialectTree::find_label(const std::string& label) const {
    for (const TreeNode& n : nodes_)
        if (n.label == label) return n.id;
    return std::nullopt;
}

std::vector<int> DialectTree::path_from_root(int id) const {
    std::vector<int> path;
    for (int cur = id; cur != -1; cur = nodes_.at(cur).parent) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
}

int DialectTree::height(int id) const {
    const TreeNode& n = nodes_.at(id);
    int h = 0;
    for (int c : n.children) h = std::max(h, 1 + height(c));
    return h;
}

bool DialectTree::is_ancestor(int ancestor, int id) const {
    for (int cur = id; cur != -1; cur = nodes_.at(cur).parent)
        if (cur == ancestor) return true;
    return false;
}

DialectTree DialectTree::collapsed(int levels) const {
    if (levels < 1) raise(Errc::InvalidConfig, "depth limit must be >= 1");
    const int cut = height(root_) - levels;  // internal nodes this low become leaves
    if (cut <= 0) return *this;

    DialectTree out;
    std::function<void(int, int)> copy = [&](int src, int parent) {
        TreeNode node;
        node.id = static_cast<int>(out.nodes_.size());
        node.label = nodes_[src].label;
        node.parent = parent;
        node.feature_k = nodes_[src].feature_k;
        out.nodes_.push_back(node);
        int id = node.id;
        if (height(src) > cut) {
            for (int c : nodes_[src].children) {
                out.nodes_[id].children.push_back(static_cast<int>(out.nodes_.size()));
                copy(c, id);
            }
        }
    };
    copy(root_, -1);
    out.root_ = 0;
    out.validate();
    return out;
}

DialectTree load_hierarchy(const std::filesystem::path& path, std::optional<int> depth_limit) {
    std::ifstream in(path);
    if (!in) raise(Errc::MissingFile, path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::CorruptHeader, "hierarchy parse error: " + std::string(e.what()));
    }
    DialectTree tree = DialectTree::from_json(j);
    if (depth_limit) return tree.collapsed(*depth_limit);
    return tree;
}

DialectTree default_hierarchy() {
    nlohmann::json j = {
        {"label", "Algerian Arabic"},
        {"k", 6},
        {"children",
         {
             {{"label", "Pre-Hilali"},
              {"children", {{{"label", "Village"}}, {{"label", "Urban"}}}}},
             {{"label", "Bedouin"},
              {"k", 7},
              {"children",
               {
                   {{"label", "Hilali"},
                    {"children",
                     {{{"label", "Saharan Nomadic"}},
                      {{"label", "Tellian Nomadic"}},
                      {{"label", "High plains of Constantine"}}}}},
                   {{"label", "Sulaymite"}},
                   {{"label", "Ma'qilian"}},
                   {{"label", "Urban Completely Bedouin"}},
               }}},
         }},
    };
    return DialectTree::from_json(j);
}

DialectTree flat_tree(const std::vector<std::string>& leaves, const std::string& root_label) {
    nlohmann::json j;
    j["label"] = root_label;
    nlohmann::json kids = nlohmann::json::array();
    for (const std::string& leaf : leaves) kids.push_back({{"label", leaf}});
    j["children"] = kids;
    return DialectTree::from_json(j);
}

HadidModel train_lcpn(const DialectTree& tree, const FeatureTable& dataset,
                      const LcpnConfig& cfg) {
    if (dataset.empty()) raise(Errc::EmptyDataset, "no feature rows to train on");

    // Leaf node per dataset row.
    std::vector<int> row_leaf(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        auto id = tree.find_label(dataset[i].dialect);
        if (!id || !tree.is_leaf(*id)) raise(Errc::UnknownLabel, dataset[i].dialect);
        row_leaf[i] = *id;
    }

    HadidModel model;
    model.tree = tree;
    model.seed = cfg.seed;
    model.config = cfg;

    for (int node_id : tree.internal_nodes()) {
        const TreeNode& node = tree.node(node_id);

        // Rows descending from this node, relabeled by child branch.
        std::vector<size_t> rows;
        std::vector<int> branch_of_row;
        for (size_t i = 0; i < dataset.size(); ++i) {
            if (!tree.is_ancestor(node_id, row_leaf[i])) continue;
            for (size_t b = 0; b < node.children.size(); ++b) {
                if (tree.is_ancestor(node.children[b], row_leaf[i])) {
                    rows.push_back(i);
                    branch_of_row.push_back(static_cast<int>(b));
                    break;
                }
            }
        }

        NodeClassifier nc;
        nc.node_label = node.label;
        for (int c : node.children) nc.class_labels.push_back(tree.node(c).label);

        std::set<int> branches(branch_of_row.begin(), branch_of_row.end());
        if (branches.size() < 2) {
            if (branches.size() == 1) {
                nc.forced_child = *branches.begin();
                model.warnings.push_back("node '" + node.label +
                                         "' skipped: training data covers a single branch ('" +
                                         nc.class_labels[*nc.forced_child] + "')");
            } else {
                model.warnings.push_back("node '" + node.label + "' skipped: no training data");
            }
            model.nodes.emplace(node_id, std::move(nc));
            continue;
        }

        std::vector<std::array<double, kFeatureCount>> feat_rows;
        std::vector<std::string> branch_labels;
        feat_rows.reserve(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
            feat_rows.push_back(dataset[rows[r]].features.values());
            branch_labels.push_back(nc.class_labels[branch_of_row[r]]);
        }

        int k = node.feature_k
                    ? *node.feature_k
                    : (node_id == tree.root() ? cfg.root_feature_k : cfg.default_feature_k);
        FeatureRanking ranking = rank_features(feat_rows, branch_labels, k);
        nc.feature_indices = ranking.order;
        nc.feature_f_stats = ranking.f_stats;

        std::vector<std::vector<double>> inputs;
        inputs.reserve(rows.size());
        for (const auto& full : feat_rows) {
            std::vector<double> x;
            x.reserve(nc.feature_indices.size());
            for (int fi : nc.feature_indices) x.push_back(full[fi]);
            inputs.push_back(std::move(x));
        }

        std::vector<int> layer_sizes;
        layer_sizes.push_back(static_cast<int>(nc.feature_indices.size()));
        for (int h : cfg.hidden_layers) layer_sizes.push_back(h);
        layer_sizes.push_back(static_cast<int>(node.children.size()));

        uint64_t node_seed = RandomStream::derive(cfg.seed, {static_cast<uint64_t>(node_id)});
        Mlp net = Mlp::init(layer_sizes, cfg.dropout_rate, node_seed);
        TrainResult trained = train(net, inputs, branch_of_row, cfg.train, node_seed);
        nc.mlp = std::move(trained.model);
        model.nodes.emplace(node_id, std::move(nc));
    }

    return model;
}

Classification classify(const HadidModel& model, const FeatureVector& features, int start_node) {
    if (model.nodes.empty()) raise(Errc::UntrainedModel, "model has no node classifiers");

    const DialectTree& tree = model.tree;
    int current = start_node == -1 ? tree.root() : start_node;

    Classification result;
    result.path.push_back(tree.node(current).label);

    auto full = features.values();
    for (double v : full)
        if (!std::isfinite(v)) raise(Errc::InvalidConfig, "feature vector must be finite");

    while (!tree.is_leaf(current)) {
        auto it = model.nodes.find(current);
        if (it == model.nodes.end())
            raise(Errc::UntrainedModel, "no classifier for node '" + tree.node(current).label + "'");
        const NodeClassifier& nc = it->second;
        const TreeNode& node = tree.node(current);

        NodeDecision decision;
        decision.node_label = node.label;

        int branch = 0;
        if (nc.mlp) {
            std::vector<double> x;
            x.reserve(nc.feature_indices.size());
            for (int fi : nc.feature_indices) x.push_back(full[fi]);
            std::vector<double> p = nc.mlp->forward(x, ForwardMode::Infer);
            for (size_t b = 0; b < p.size(); ++b)
                decision.probabilities.push_back({nc.class_labels[b], p[b]});
            branch = 0;
            for (size_t b = 1; b < p.size(); ++b)
                if (p[b] > p[branch]) branch = static_cast<int>(b);
        } else if (nc.forced_child) {
            branch = *nc.forced_child;
            decision.forced = true;
        } else {
            raise(Errc::UntrainedModel,
                  "node '" + node.label + "' has neither a classifier nor a forced branch");
        }

        decision.chosen = nc.class_labels[branch];
        result.decisions.push_back(std::move(decision));
        current = node.children[branch];
        result.path.push_back(tree.node(current).label);
    }
    result.leaf = tree.node(current).label;
    return result;
}

void save_model(const HadidModel& model, const std::filesystem::path& dir,
                const std::string& mode_tag, const nlohmann::json& metadata) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    auto write_json = [&](const std::filesystem::path& p, const nlohmann::json& j) {
        std::ofstream out(p);
        if (!out) raise(Errc::IoError, "cannot write " + p.string());
        out << j.dump(2) << '\n';
    };

    write_json(dir / "hierarchy.json", model.tree.to_json());

    nlohmann::json manifest;
    manifest["format"] = "hadid-model-bundle";
    manifest["version"] = kModelFormatVersion;
    manifest["mode"] = mode_tag;
    manifest["seed"] = model.seed;
    manifest["config"] = {
        {"hidden_layers", model.config.hidden_layers},
        {"dropout_rate", model.config.dropout_rate},
        {"root_feature_k", model.config.root_feature_k},
        {"default_feature_k", model.config.default_feature_k},
        {"learning_rate", model.config.train.learning_rate},
        {"momentum", model.config.train.momentum},
        {"batch_size", model.config.train.batch_size},
        {"max_epochs", model.config.train.max_epochs},
        {"patience", model.config.train.patience},
        {"validation_fraction", model.config.train.validation_fraction},
    };
    manifest["warnings"] = model.warnings;
    if (!metadata.is_null() && !metadata.empty()) manifest["metadata"] = metadata;

    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [node_id, nc] : model.nodes) {
        nlohmann::json entry;
        entry["node_id"] = node_id;
        entry["label"] = nc.node_label;
        entry["classes"] = nc.class_labels;
        nlohmann::json feats = nlohmann::json::array();
        for (size_t i = 0; i < nc.feature_indices.size(); ++i)
            feats.push_back({{"name", std::string(kFeatureNames[nc.feature_indices[i]])},
                             {"f_stat", nc.feature_f_stats[i]}});
        entry["features"] = feats;
        if (nc.mlp) {
            std::string file = "node_" + std::to_string(node_id) + ".json";
            entry["model_file"] = file;
            write_json(dir / file, nc.mlp->to_json());
        } else if (nc.forced_child) {
            entry["forced_child"] = *nc.forced_child;
        }
        nodes.push_back(entry);
    }
    manifest["nodes"] = nodes;
    write_json(dir / "manifest.json", manifest);
}

HadidModel load_model(const std::filesystem::path& dir) {
    auto read_json = [&](const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) raise(Errc::MissingFile, p.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::CorruptHeader, p.string() + ": " + e.what());
        }
        return j;
    };

    HadidModel model;
    model.tree = DialectTree::from_json(read_json(dir / "hierarchy.json"));

    nlohmann::json manifest = read_json(dir / "manifest.json");
    if (!manifest.contains("format") || manifest["format"] != "hadid-model-bundle")
        raise(Errc::CorruptHeader, "not a model bundle: " + dir.string());
    if (manifest["version"].get<int>() != kModelFormatVersion)
        raise(Errc::UnsupportedFormat, "model bundle version mismatch");
    model.seed = manifest.value("seed", 0ULL);
    if (manifest.contains("warnings"))
        model.warnings = manifest["warnings"].get<std::vector<std::string>>();

    for (const auto& entry : manifest.at("nodes")) {
        NodeClassifier nc;
        int node_id = entry.at("node_id").get<int>();
        nc.node_label = entry.at("label").get<std::string>();
        nc.class_labels = entry.at("classes").get<std::vector<std::string>>();
        for (const auto& f : entry.at("features")) {
            int idx = feature_index(f.at("name").get<std::string>());
            if (idx < 0) raise(Errc::CorruptHeader, "unknown feature in model manifest");
            nc.feature_indices.push_back(idx);
            nc.feature_f_stats.push_back(f.value("f_stat", 0.0));
        }
        if (entry.contains("model_file"))
            nc.mlp = Mlp::from_json(read_json(dir / entry["model_file"].get<std::string>()));
        else if (entry.contains("forced_child"))
            nc.forced_child = entry["forced_child"].get<int>();
        if (node_id < 0 || node_id >= static_cast<int>(model.tree.node_count()) ||
            model.tree.is_leaf(node_id) || model.tree.node(node_id).label != nc.node_label)
            raise(Errc::CorruptHeader, "model manifest does not match the hierarchy");
        model.nodes.emplace(node_id, std::move(nc));
    }
    return model;
}

}  // namespace hadid

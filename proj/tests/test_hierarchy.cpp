#include "hadid/hierarchy.hpp"

#include <fstream>
#include <set>

#include "doctest.h"
#include "hadid/error.hpp"
#include "hadid/rng.hpp"
#include "test_support.hpp"

using namespace hadid;
using namespace testsupport;

namespace {

// Five synthetic leaf profiles: feature clusters per dialect, separable by
// construction. Returns rows with speakers so the table also works for folds.
FeatureTable make_separable_table(int per_dialect, uint64_t seed, double spread = 0.6) {
    const std::vector<std::pair<std::string, std::array<double, 4>>> spec = {
        // dialect                        pct_v delta_c pitch_range traj_intra
        {"Pre-Hilali", {38.0, 80.0, 12.0, 14.0}},
        {"Hilali", {40.0, 95.0, 9.0, 5.0}},
        {"Sulaymite", {46.0, 20.0, 7.0, 9.0}},
        {"Ma'qilian", {43.0, 55.0, 16.0, 7.0}},
        {"Urban Completely Bedouin", {42.0, 40.0, 10.0, 11.0}},
    };
    RandomStream rng(seed);
    FeatureTable table;
    for (const auto& [dialect, centers] : spec) {
        for (int i = 0; i < per_dialect; ++i) {
            FeatureRow row;
            row.dialect = dialect;
            row.speaker_id = dialect + "_spk" + std::to_string(i % 4);
            row.utterance_id = dialect + "_u" + std::to_string(i);
            row.features.pct_v = centers[0] + rng.normal(0.0, spread);
            row.features.delta_c = centers[1] + rng.normal(0.0, 4.0 * spread);
            row.features.pitch_range = centers[2] + rng.normal(0.0, spread);
            row.features.traj_intra = centers[3] + rng.normal(0.0, spread);
            row.features.delta_v = 38.0 + rng.normal(0.0, 2.0);
            row.features.varco_v = 50.0 + rng.normal(0.0, 2.0);
            row.features.varco_c = 60.0 + rng.normal(0.0, 2.0);
            row.features.rpvi_c = row.features.delta_c + rng.normal(0.0, 2.0);
            row.features.npvi_v = 52.0 + rng.normal(0.0, 2.0);
            row.features.speech_rate = 6.0 + rng.normal(0.0, 0.2);
            row.features.pitch_bottom = 150.0 + rng.normal(0.0, 3.0);
            row.features.pitch_median = 210.0 + rng.normal(0.0, 3.0);
            row.features.pitch_top = 300.0 + rng.normal(0.0, 3.0);
            row.features.traj_inter = 10.0 + rng.normal(0.0, 0.5);
            table.push_back(row);
        }
    }
    return table;
}

LcpnConfig fast_config(uint64_t seed) {
    LcpnConfig cfg;
    cfg.hidden_layers = {16, 16};
    cfg.dropout_rate = 0.2;
    cfg.train.max_epochs = 60;
    cfg.train.patience = 15;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("default hierarchy with depth limit 2 matches the two-classifier setup") {
    DialectTree tree = default_hierarchy().collapsed(2);
    CHECK(tree.internal_nodes().size() == 2);
    std::vector<std::string> leaves = tree.leaf_labels();
    std::set<std::string> leaf_set(leaves.begin(), leaves.end());
    CHECK(leaf_set == std::set<std::string>{"Pre-Hilali", "Hilali", "Sulaymite", "Ma'qilian",
                                            "Urban Completely Bedouin"});
}

TEST_CASE("default hierarchy without a depth limit keeps the deep leaves") {
    DialectTree tree = default_hierarchy();
    std::vector<std::string> leaves = tree.leaf_labels();
    std::set<std::string> leaf_set(leaves.begin(), leaves.end());
    CHECK(leaf_set.count("Saharan Nomadic"));
    CHECK(leaf_set.count("Tellian Nomadic"));
    CHECK(leaf_set.count("High plains of Constantine"));
    CHECK(leaf_set.count("Village"));
    CHECK(leaf_set.count("Urban"));
}

TEST_CASE("hierarchy file round trip") {
    TempDir dir("hier");
    DialectTree tree = default_hierarchy();
    std::ofstream(dir.path() / "tree.json") << tree.to_json().dump(2);
    DialectTree loaded = load_hierarchy(dir.path() / "tree.json");
    CHECK(loaded.to_json() == tree.to_json());

    DialectTree limited = load_hierarchy(dir.path() / "tree.json", 2);
    CHECK(limited.internal_nodes().size() == 2);
}

TEST_CASE("invalid trees are rejected") {
    nlohmann::json unary = {{"label", "root"},
                            {"children", {{{"label", "only"}, {"children", {{{"label", "x"}}, {{"label", "y"}}}}}}}};
    try {
        DialectTree::from_json(unary);
        FAIL("expected UnaryNode");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnaryNode);
    }

    nlohmann::json duplicate = {{"label", "root"},
                                {"children", {{{"label", "a"}}, {{"label", "a"}}}}};
    try {
        DialectTree::from_json(duplicate);
        FAIL("expected DuplicateLabel");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DuplicateLabel);
    }
}

TEST_CASE("lcpn training on the depth-2 tree builds exactly two classifiers") {
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(24, 11);
    HadidModel model = train_lcpn(tree, table, fast_config(5));

    int trained = 0;
    for (const auto& [id, nc] : model.nodes)
        if (nc.mlp) ++trained;
    CHECK(trained == 2);

    const NodeClassifier& root_nc = model.nodes.at(tree.root());
    CHECK(root_nc.mlp->output_size() == 2);           // Pre-Hilali vs Bedouin
    CHECK(root_nc.feature_indices.size() == 6);       // root default k
    auto bedouin_id = tree.find_label("Bedouin");
    REQUIRE(bedouin_id.has_value());
    const NodeClassifier& bed_nc = model.nodes.at(*bedouin_id);
    CHECK(bed_nc.mlp->output_size() == 4);
    CHECK(bed_nc.feature_indices.size() == 7);        // Bedouin file override
}

TEST_CASE("single-branch data skips the root with a pass-through") {
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(20, 3);
    FeatureTable bedouin_only;
    for (const FeatureRow& row : table)
        if (row.dialect != "Pre-Hilali") bedouin_only.push_back(row);

    HadidModel model = train_lcpn(tree, bedouin_only, fast_config(7));
    const NodeClassifier& root_nc = model.nodes.at(tree.root());
    CHECK_FALSE(root_nc.mlp.has_value());
    REQUIRE(root_nc.forced_child.has_value());
    CHECK(root_nc.class_labels[*root_nc.forced_child] == "Bedouin");
    CHECK_FALSE(model.warnings.empty());

    int trained = 0;
    for (const auto& [id, nc] : model.nodes)
        if (nc.mlp) ++trained;
    CHECK(trained == 1);

    // Classification passes through the skipped root without probabilities.
    Classification c = classify(model, bedouin_only.front().features);
    CHECK(c.path.front() == "Algerian Arabic");
    CHECK(c.path[1] == "Bedouin");
    CHECK(c.decisions.front().forced);
    CHECK(c.decisions.front().probabilities.empty());
}

TEST_CASE("separable corpus trains accurate node classifiers") {
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(30, 17);
    HadidModel model = train_lcpn(tree, table, fast_config(23));

    size_t correct = 0;
    for (const FeatureRow& row : table) {
        Classification c = classify(model, row.features);
        if (c.leaf == row.dialect) ++correct;
    }
    CHECK(static_cast<double>(correct) / table.size() >= 0.95);
}

TEST_CASE("classification returns a valid path with probability records") {
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(24, 29);
    HadidModel model = train_lcpn(tree, table, fast_config(31));

    for (int i = 0; i < 10; ++i) {
        const FeatureRow& row = table[i * 7];
        Classification c = classify(model, row.features);

        // Path is root-to-leaf in the tree.
        CHECK(c.path.front() == "Algerian Arabic");
        auto leaf_id = tree.find_label(c.leaf);
        REQUIRE(leaf_id.has_value());
        std::vector<int> expect = tree.path_from_root(*leaf_id);
        REQUIRE(expect.size() == c.path.size());
        for (size_t n = 0; n < expect.size(); ++n)
            CHECK(tree.node(expect[n]).label == c.path[n]);

        for (const NodeDecision& d : c.decisions) {
            double sum = 0.0;
            for (auto& [label, p] : d.probabilities) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("exact probability ties resolve to the first-declared child") {
    DialectTree tree = flat_tree({"left", "right"});
    // A classifier with identical weights for both outputs: p = (0.5, 0.5).
    RandomStream noise(2);
    FeatureTable table;
    for (int i = 0; i < 8; ++i) {
        FeatureRow row;
        row.dialect = i % 2 ? "left" : "right";
        row.speaker_id = "s" + std::to_string(i % 4);
        row.utterance_id = "u" + std::to_string(i);
        row.features.pct_v = 40.0 + noise.normal(0.0, 1.0);
        row.features.delta_c = 50.0 + noise.normal(0.0, 1.0);
        row.features.delta_v = 30.0 + noise.normal(0.0, 1.0);
        row.features.varco_c = 60.0 + noise.normal(0.0, 1.0);
        row.features.varco_v = 50.0 + noise.normal(0.0, 1.0);
        row.features.rpvi_c = 55.0 + noise.normal(0.0, 1.0);
        row.features.npvi_v = 52.0 + noise.normal(0.0, 1.0);
        row.features.speech_rate = 6.0 + noise.normal(0.0, 0.1);
        row.features.pitch_range = 10.0 + noise.normal(0.0, 0.5);
        row.features.pitch_top = 300.0 + noise.normal(0.0, 2.0);
        row.features.pitch_bottom = 150.0 + noise.normal(0.0, 2.0);
        row.features.pitch_median = 210.0 + noise.normal(0.0, 2.0);
        row.features.traj_intra = 9.0 + noise.normal(0.0, 0.5);
        row.features.traj_inter = 10.0 + noise.normal(0.0, 0.5);
        table.push_back(row);
    }
    HadidModel model = train_lcpn(tree, table, fast_config(1));
    NodeClassifier& nc = model.nodes.at(tree.root());
    nlohmann::json j = nc.mlp->to_json();
    for (auto& layer : j["weights"])
        for (auto& w : layer) w = 0.0;
    for (auto& layer : j["biases"])
        for (auto& b : layer) b = 0.0;
    nc.mlp = Mlp::from_json(j);

    FeatureVector probe;
    Classification a = classify(model, probe);
    Classification b = classify(model, probe);
    CHECK(a.leaf == "left");
    CHECK(b.leaf == "left");
    CHECK(a.decisions[0].probabilities[0].second == doctest::Approx(0.5));
}

TEST_CASE("restricting classification to a subtree matches the full descent") {
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(24, 41);
    HadidModel model = train_lcpn(tree, table, fast_config(43));

    auto bedouin_id = tree.find_label("Bedouin");
    REQUIRE(bedouin_id.has_value());
    for (const FeatureRow& row : table) {
        Classification full = classify(model, row.features);
        if (full.path.size() < 2 || full.path[1] != "Bedouin") continue;
        Classification sub = classify(model, row.features, *bedouin_id);
        CHECK(sub.leaf == full.leaf);
        // The subtree path is the suffix of the full path.
        REQUIRE(sub.path.size() + 1 == full.path.size());
        for (size_t i = 0; i < sub.path.size(); ++i) CHECK(sub.path[i] == full.path[i + 1]);
    }
}

TEST_CASE("unknown labels and empty datasets are rejected") {
    DialectTree tree = default_hierarchy().collapsed(2);
    CHECK_THROWS_AS(train_lcpn(tree, {}, fast_config(1)), Error);

    FeatureTable bad = make_separable_table(4, 1);
    bad.front().dialect = "Martian";
    try {
        train_lcpn(tree, bad, fast_config(1));
        FAIL("expected UnknownLabel");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownLabel);
    }
}

TEST_CASE("model bundle round trip preserves classifications") {
    TempDir dir("bundle");
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(20, 53);
    HadidModel model = train_lcpn(tree, table, fast_config(59));
    save_model(model, dir.path() / "model");

    HadidModel loaded = load_model(dir.path() / "model");
    for (int i = 0; i < 20; ++i) {
        const FeatureRow& row = table[i * 4];
        Classification a = classify(model, row.features);
        Classification b = classify(loaded, row.features);
        CHECK(a.leaf == b.leaf);
        CHECK(a.path == b.path);
    }
}

TEST_CASE("corrupted bundle manifests are rejected") {
    TempDir dir("badbundle");
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(12, 61);
    HadidModel model = train_lcpn(tree, table, fast_config(67));
    save_model(model, dir.path() / "model");

    std::ofstream(dir.path() / "model" / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_model(dir.path() / "model"), Error);
}

TEST_CASE("training is deterministic for a fixed seed") {
    DialectTree tree = default_hierarchy().collapsed(2);
    FeatureTable table = make_separable_table(16, 71);
    HadidModel a = train_lcpn(tree, table, fast_config(73));
    HadidModel b = train_lcpn(tree, table, fast_config(73));
    for (const auto& [id, nc] : a.nodes) {
        const NodeClassifier& other = b.nodes.at(id);
        CHECK(nc.feature_indices == other.feature_indices);
        if (nc.mlp) CHECK(nc.mlp->to_json() == other.mlp->to_json());
    }
}

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hadid/prosody.hpp"

namespace hadid {

struct FeatureRow {
    std::string utterance_id;
    std::string speaker_id;
    std::string dialect;
    FeatureVector features;
};

using FeatureTable = std::vector<FeatureRow>;

// Header: utterance_id,speaker_id,dialect,<the 14 canonical feature names>.
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_feature_csv(const std::filesystem::path& path);

// Shared CSV plumbing (no quoting; fields must not contain ',' or newlines).
std::vector<std::string> split_csv_line(const std::string& line);
std::string format_double(double v);

}  // namespace hadid

#include "hadid/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hadid/error.hpp"

namespace hadid {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

static std::string feature_header() {
    std::string h = "utterance_id,speaker_id,dialect";
    for (const auto& name : kFeatureNames) {
        h += ',';
        h += name;
    }
    return h;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path.string());
    out << feature_header() << '\n';
    for (const FeatureRow& row : table) {
        out << row.utterance_id << ',' << row.speaker_id << ',' << row.dialect;
        for (double v : row.features.values()) out << ',' << format_double(v);
        out << '\n';
    }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::MissingFile, path.string());

    std::string line;
    if (!std::getline(in, line)) raise(Errc::CorruptHeader, "empty feature csv: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != feature_header())
        raise(Errc::MissingColumn, "feature csv header mismatch in " + path.string());

    FeatureTable table;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 3 + kFeatureCount)
            raise(Errc::MissingColumn,
                  "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields in " + path.string());
        FeatureRow row;
        row.utterance_id = fields[0];
        row.speaker_id = fields[1];
        row.dialect = fields[2];
        std::array<double, kFeatureCount> vals{};
        for (size_t i = 0; i < kFeatureCount; ++i) vals[i] = std::stod(fields[3 + i]);
        // values() order: pct_v, delta_c, delta_v, varco_c, varco_v, rpvi_c,
        // npvi_v, speech_rate, pitch_range, pitch_top, pitch_bottom,
        // pitch_median, traj_intra, traj_inter.
        row.features.pct_v = vals[0];
        row.features.delta_c = vals[1];
        row.features.delta_v = vals[2];
        row.features.varco_c = vals[3];
        row.features.varco_v = vals[4];
        row.features.rpvi_c = vals[5];
        row.features.npvi_v = vals[6];
        row.features.speech_rate = vals[7];
        row.features.pitch_range = vals[8];
        row.features.pitch_top = vals[9];
        row.features.pitch_bottom = vals[10];
        row.features.pitch_median = vals[11];
        row.features.traj_intra = vals[12];
        row.features.traj_inter = vals[13];
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace hadid

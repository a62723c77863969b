#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "hadid/audio.hpp"
#include "hadid/rng.hpp"

namespace testsupport {

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hadid_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline hadid::AudioBuffer make_tone(double freq_hz, double duration_s, int sr,
                                    double amplitude = 0.5) {
    hadid::AudioBuffer buf;
    buf.sample_rate_hz = sr;
    buf.source_id = "tone";
    size_t n = static_cast<size_t>(duration_s * sr);
    buf.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
        buf.samples[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * i / sr);
    return buf;
}

inline hadid::AudioBuffer make_noise(double duration_s, int sr, uint64_t seed,
                                     double amplitude = 0.5) {
    hadid::AudioBuffer buf;
    buf.sample_rate_hz = sr;
    buf.source_id = "noise";
    size_t n = static_cast<size_t>(duration_s * sr);
    buf.samples.resize(n);
    hadid::RandomStream rng(seed);
    for (size_t i = 0; i < n; ++i) buf.samples[i] = rng.uniform(-amplitude, amplitude);
    return buf;
}

inline hadid::AudioBuffer make_silence(double duration_s, int sr) {
    hadid::AudioBuffer buf;
    buf.sample_rate_hz = sr;
    buf.source_id = "silence";
    buf.samples.assign(static_cast<size_t>(duration_s * sr), 0.0);
    return buf;
}

inline hadid::AudioBuffer concat(const std::vector<hadid::AudioBuffer>& parts) {
    hadid::AudioBuffer out;
    out.sample_rate_hz = parts.front().sample_rate_hz;
    out.source_id = "concat";
    for (const auto& part : parts)
        out.samples.insert(out.samples.end(), part.samples.begin(), part.samples.end());
    return out;
}

}  // namespace testsupport

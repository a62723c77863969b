#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hadid {

// Mono PCM audio, samples normalized to [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate_hz = 0;
    std::string source_id;

    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

// Reads a 16-bit PCM RIFF/WAVE file (1 or 2 channels). Stereo is downmixed to
// mono by channel averaging; samples are scaled by 1/32768. Unknown chunks are
// skipped. Throws MissingFile / UnsupportedFormat / CorruptHeader.
AudioBuffer load_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono with the canonical 44-byte header. Samples are
// clamped to [-1, 1] and quantized by round(x * 32768) clipped to int16, so a
// write/read round trip moves each sample by at most 1/32768.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

struct SilenceGate {
    double threshold_db = -40.0;   // relative to the peak frame RMS, must be < 0
    double min_silence_ms = 200.0;
};

// Removes stretches of low-energy audio. Frames of 25 ms (10 ms hop) whose RMS
// falls below peak + threshold_db for at least min_silence_ms contiguously are
// cut out and the remainder concatenated. Returns the input unchanged when no
// run qualifies; throws EmptyAfterTrim when everything is silent.
AudioBuffer trim_silence(const AudioBuffer& audio, const SilenceGate& gate = {});

}  // namespace hadid

#include "hadid/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hadid/dsp.hpp"
#include "hadid/error.hpp"

namespace hadid {

namespace {

constexpr size_t kTrimWindowMs = 25;
constexpr size_t kTrimHopMs = 10;

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::MissingFile, path.string());

    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
        raise(Errc::CorruptHeader, "not a RIFF/WAVE file: " + path.string());

    size_t pos = 12;
    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    uint32_t data_size = 0;

    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = p + pos;
        uint32_t chunk_size = read_u32(chunk + 4);
        size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) {
            // Tolerate a truncated final chunk only for data; anything else is corrupt.
            if (std::memcmp(chunk, "data", 4) != 0)
                raise(Errc::CorruptHeader, "chunk overruns file: " + path.string());
            chunk_size = static_cast<uint32_t>(bytes.size() - body);
        }
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (chunk_size < 16) raise(Errc::CorruptHeader, "fmt chunk too small");
            format = read_u16(p + body);
            channels = read_u16(p + body + 2);
            sample_rate = read_u32(p + body + 4);
            bits = read_u16(p + body + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = p + body;
            data_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) raise(Errc::CorruptHeader, "missing fmt or data chunk");
    if (format != 1) raise(Errc::UnsupportedFormat, "only PCM wav is supported");
    if (bits != 16) raise(Errc::UnsupportedFormat, "only 16-bit samples are supported");
    if (channels != 1 && channels != 2) raise(Errc::UnsupportedFormat, "only mono or stereo supported");
    if (sample_rate == 0) raise(Errc::CorruptHeader, "zero sample rate");

    size_t frame_bytes = 2u * channels;
    size_t frames = data_size / frame_bytes;

    AudioBuffer out;
    out.sample_rate_hz = static_cast<int>(sample_rate);
    out.source_id = path.stem().string();
    out.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
        const unsigned char* fp = data + i * frame_bytes;
        auto sample = [&](size_t c) {
            return static_cast<int16_t>(read_u16(fp + 2 * c)) / 32768.0;
        };
        out.samples[i] = channels == 1 ? sample(0) : 0.5 * (sample(0) + sample(1));
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
    std::string out;
    uint32_t data_size = static_cast<uint32_t>(audio.samples.size() * 2);
    uint32_t sr = static_cast<uint32_t>(audio.sample_rate_hz);
    out.reserve(44 + data_size);
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, 1);   // PCM
    put_u16(out, 1);   // mono
    put_u32(out, sr);
    put_u32(out, sr * 2);  // byte rate
    put_u16(out, 2);       // block align
    put_u16(out, 16);      // bits per sample
    out += "data";
    put_u32(out, data_size);
    for (double x : audio.samples) {
        double clamped = std::clamp(x, -1.0, 1.0);
        long q = std::lround(clamped * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) raise(Errc::IoError, "cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) raise(Errc::IoError, "short write: " + path.string());
}

AudioBuffer trim_silence(const AudioBuffer& audio, const SilenceGate& gate) {
    if (gate.threshold_db >= 0.0) raise(Errc::InvalidConfig, "silence threshold must be < 0 dB");
    if (gate.min_silence_ms <= 0.0) raise(Errc::InvalidConfig, "min_silence_ms must be > 0");

    const size_t n = audio.samples.size();
    const size_t window = std::max<size_t>(1, audio.sample_rate_hz * kTrimWindowMs / 1000);
    const size_t hop = std::max<size_t>(1, audio.sample_rate_hz * kTrimHopMs / 1000);

    std::vector<double> rms;
    if (n >= window) {
        rms = dsp::frame_rms(audio.samples, window, hop);
    } else if (n > 0) {
        rms = dsp::frame_rms(audio.samples, n, n);  // single whole-buffer frame
    }
    if (rms.empty()) raise(Errc::EmptyAfterTrim, audio.source_id);

    double peak_rms = 0.0;
    for (double r : rms) peak_rms = std::max(peak_rms, r);
    if (peak_rms <= 0.0) raise(Errc::EmptyAfterTrim, audio.source_id);
    const double gate_rms = peak_rms * std::pow(10.0, gate.threshold_db / 20.0);

    const size_t frames = rms.size();
    std::vector<bool> silent(frames);
    for (size_t f = 0; f < frames; ++f) silent[f] = rms[f] < gate_rms;

    // Each frame owns its hop span; the last frame also owns the tail.
    auto span_begin = [&](size_t f) { return f * hop; };
    auto span_end = [&](size_t f) { return f + 1 == frames ? n : (f + 1) * hop; };

    std::vector<bool> keep(n, true);
    bool removed_any = false;
    bool kept_any_frame = false;
    size_t f = 0;
    while (f < frames) {
        if (!silent[f]) {
            kept_any_frame = true;
            ++f;
            continue;
        }
        size_t run_end = f;
        while (run_end + 1 < frames && silent[run_end + 1]) ++run_end;
        double run_ms = 1000.0 * static_cast<double>(span_end(run_end) - span_begin(f)) /
                        audio.sample_rate_hz;
        if (run_ms >= gate.min_silence_ms) {
            for (size_t i = span_begin(f); i < span_end(run_end); ++i) keep[i] = false;
            removed_any = true;
        } else {
            kept_any_frame = true;
        }
        f = run_end + 1;
    }

    if (!kept_any_frame) raise(Errc::EmptyAfterTrim, audio.source_id);
    if (!removed_any) return audio;

    AudioBuffer out;
    out.sample_rate_hz = audio.sample_rate_hz;
    out.source_id = audio.source_id;
    out.samples.reserve(n);
    for (size_t i = 0; i < n; ++i)
        if (keep[i]) out.samples.push_back(audio.samples[i]);
    if (out.samples.empty()) raise(Errc::EmptyAfterTrim, audio.source_id);
    return out;
}

}  // namespace hadid

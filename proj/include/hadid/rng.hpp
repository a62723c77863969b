#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace hadid {

// Deterministic random stream used everywhere randomness is needed.
// std::mt19937_64 has a fully specified output sequence, and the
// transformations below avoid the implementation-defined std::*_distribution
// classes, so a given seed reproduces the same values on every build.
class RandomStream {
  public:
    explicit RandomStream(uint64_t seed) : state_(splitmix(seed)) {}

    uint64_t next_u64() {
        // xorshift* step over splitmix-initialized state via mt19937_64 would
        // also work; splitmix64 itself is a fine generator for our purposes.
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Integer in [0, n).
    size_t bounded(size_t n) { return n == 0 ? 0 : static_cast<size_t>(next_u64() % n); }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(bounded(static_cast<size_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Mean/std parameterized lognormal: returned samples have the requested
    // arithmetic mean and standard deviation.
    double lognormal(double mean, double stddev) {
        double v = stddev * stddev;
        double sigma2 = std::log(1.0 + v / (mean * mean));
        double mu = std::log(mean) - 0.5 * sigma2;
        return std::exp(mu + std::sqrt(sigma2) * normal());
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = bounded(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    // Derive an independent child seed from a parent seed and a path of
    // indices (fold, node, utterance, ...). Parallel workers seeded this way
    // produce output independent of scheduling.
    static uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> path) {
        uint64_t h = splitmix(seed);
        for (uint64_t p : path) h = splitmix(h ^ (p + 0x9e3779b97f4a7c15ULL));
        return h;
    }

    // FNV-1a; a stable string hash so seeds derived from labels do not depend
    // on the standard library.
    static uint64_t hash_string(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

  private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hadid

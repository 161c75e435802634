#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace ktnas {

// Deterministic RNG wrapper around std::mt19937_64. The std:: distributions
// keep hidden per-distribution state that std::mt19937_64's stream operators
// do not capture, which would break checkpoint-resume reproducibility, so the
// few draws we need are derived directly from raw engine output.
class Rng {
public:
    Rng() : Rng(0) {}
    explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

    // Stable sub-stream derivation: hash the parent seed with a purpose tag so
    // that independent consumers (data shuffle, dropout, EA operators, ...)
    // never share a stream. splitmix64 finalizer over an FNV-1a tag hash.
    static uint64_t derive_seed(uint64_t master, const std::string& purpose) {
        uint64_t h = 1469598103934665603ull;
        for (unsigned char c : purpose) {
            h ^= c;
            h *= 1099511628211ull;
        }
        uint64_t z = master + 0x9e3779b97f4a7c15ull + h;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    Rng fork(const std::string& purpose) const {
        return Rng(derive_seed(seed_, purpose));
    }

    uint64_t seed() const { return seed_; }

    uint64_t bits() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(bits() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller without the cached spare, so engine state alone is the
    // full RNG state.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

    template <class Container>
    void shuffle(Container& c) {
        for (size_t i = c.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(c[i - 1], c[j]);
        }
    }

    std::string serialize() const {
        std::ostringstream os;
        os << seed_ << ' ' << engine_;
        return os.str();
    }

    void deserialize(const std::string& state) {
        std::istringstream is(state);
        is >> seed_ >> engine_;
    }

private:
    uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace ktnas

#ifndef ABP_RNG_HPP
#define ABP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace abp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded stream of uniform and Gaussian variates. Gaussian draws use
// Box-Muller on top of the engine so the byte stream is identical across
// platforms and standard libraries. Substreams derived with child() are
// independent of scheduling, which keeps multi-threaded runs reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)), engine_(key_) {}

    // Substream keyed by (this stream, a, b). Pure function of the seed,
    // not of how many draws were made.
    Rng child(std::uint64_t a, std::uint64_t b = 0) const {
        return Rng(splitmix64(key_ ^ splitmix64(a ^ 0x9e6c63d0876a9a47ULL)) ^ splitmix64(b));
    }

    std::uint64_t key() const { return key_; }

    // Uniform in (0, 1]; never returns 0 so log() is safe.
    double uniform() {
        const std::uint64_t bits = engine_() >> 11;  // 53 random bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection to avoid modulo bias.
        const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

  private:
    std::uint64_t key_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace abp

#endif

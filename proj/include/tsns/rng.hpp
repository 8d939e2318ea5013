#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tsns {

/// Mixes a seed with a tag so derived streams (e.g. the stationary start of an
/// OU trajectory) are decorrelated from the main increment stream but still a
/// pure function of the seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Standard-normal stream over mt19937_64 with an explicit Box-Muller, so the
/// sample sequence is fully determined by the seed (std::normal_distribution
/// is implementation-defined and would break bit-for-bit reproducibility
/// across toolchains).
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform_pos();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    // Uniform in (0,1]; strictly positive so log() is always finite.
    double uniform_pos() {
        const std::uint64_t bits = engine_() >> 11;  // top 53 bits
        return (static_cast<double>(bits) + 1.0) * 0x1p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tsns

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "tsns/errors.hpp"

namespace tsns {

using Mode = std::array<int, 3>;

/// Fourier lattice of the periodic box [0,L]^3, truncated to |j_i| <= N.
///
/// Storage is conjugate-pair reduced: only modes in the canonical half space
///   j3 > 0, or (j3 == 0 and j2 > 0), or (j3 == 0, j2 == 0, j1 > 0)
/// are stored; the coefficient at -j is implicitly conj(coeff(j)) and the
/// j = 0 mode is absent, which makes the reality and zero-mean invariants
/// structural.
///
/// The Stokes eigenvalue carries the physical scaling, mu(j) = (2pi/L)^2 |j|^2,
/// so lambda1 = min_{j != 0} mu(j) = 4 pi^2 / L^2 for every box size.
class Lattice {
  public:
    Lattice(double box_length, int truncation, double dealias_fraction = 2.0 / 3.0)
        : length_(box_length), trunc_(truncation), dealias_(dealias_fraction) {
        if (!(length_ > 0.0)) throw ConfigError("lattice: L must be positive");
        if (trunc_ < 1) throw ConfigError("lattice: N must be at least 1");
        if (!(dealias_ > 0.0) || dealias_ > 1.0)
            throw ConfigError("lattice: dealias_fraction must lie in (0,1]");

        const int w = 2 * trunc_ + 1;
        pair_index_.assign(static_cast<std::size_t>(w) * w * w, -1);
        modes_.reserve((static_cast<std::size_t>(w) * w * w - 1) / 2);
        // Deterministic order: j3, then j2, then j1, canonical half only.
        for (int j3 = -trunc_; j3 <= trunc_; ++j3)
            for (int j2 = -trunc_; j2 <= trunc_; ++j2)
                for (int j1 = -trunc_; j1 <= trunc_; ++j1) {
                    const Mode j{j1, j2, j3};
                    if (!is_canonical(j)) continue;
                    pair_index_[flat(j)] = static_cast<int>(modes_.size());
                    modes_.push_back(j);
                }
    }

    double length() const { return length_; }
    int truncation() const { return trunc_; }
    double dealias_fraction() const { return dealias_; }

    std::size_t mode_count() const { return modes_.size(); }
    const std::vector<Mode>& modes() const { return modes_; }
    const Mode& mode(std::size_t i) const { return modes_[i]; }

    /// 2pi/L, the fundamental wavenumber.
    double base_wavenumber() const { return 2.0 * 3.14159265358979323846 / length_; }

    /// Stokes eigenvalue mu(j) = (2pi/L)^2 |j|^2.
    double eigenvalue(const Mode& j) const {
        const double k0 = base_wavenumber();
        const double n2 = static_cast<double>(j[0]) * j[0] +
                          static_cast<double>(j[1]) * j[1] +
                          static_cast<double>(j[2]) * j[2];
        return k0 * k0 * n2;
    }
    double eigenvalue(std::size_t i) const { return eigenvalue(modes_[i]); }

    /// First Stokes eigenvalue, 4 pi^2 / L^2.
    double lambda1() const {
        const double k0 = base_wavenumber();
        return k0 * k0;
    }

    static bool is_canonical(const Mode& j) {
        if (j[2] != 0) return j[2] > 0;
        if (j[1] != 0) return j[1] > 0;
        return j[0] > 0;
    }

    bool in_range(const Mode& j) const {
        return std::abs(j[0]) <= trunc_ && std::abs(j[1]) <= trunc_ && std::abs(j[2]) <= trunc_;
    }

    /// Index of the stored representative of the pair {j, -j}; -1 when j = 0
    /// or j out of range.
    int pair_of(const Mode& j) const {
        if (!in_range(j)) return -1;
        if (j[0] == 0 && j[1] == 0 && j[2] == 0) return -1;
        return pair_index_[flat(is_canonical(j) ? j : negate(j))];
    }

    static Mode negate(const Mode& j) { return Mode{-j[0], -j[1], -j[2]}; }

    bool operator==(const Lattice& o) const {
        return length_ == o.length_ && trunc_ == o.trunc_ && dealias_ == o.dealias_;
    }
    bool operator!=(const Lattice& o) const { return !(*this == o); }

  private:
    std::size_t flat(const Mode& j) const {
        const int w = 2 * trunc_ + 1;
        return static_cast<std::size_t>(j[0] + trunc_) +
               static_cast<std::size_t>(w) * (static_cast<std::size_t>(j[1] + trunc_) +
                                              static_cast<std::size_t>(w) *
                                                  static_cast<std::size_t>(j[2] + trunc_));
    }

    double length_;
    int trunc_;
    double dealias_;
    std::vector<Mode> modes_;
    std::vector<int> pair_index_;
};

}  // namespace tsns

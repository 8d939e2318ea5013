#pragma once

#include <array>
#include <complex>
#include <memory>
#include <vector>

#include "tsns/errors.hpp"
#include "tsns/lattice.hpp"

namespace tsns {

using Complex = std::complex<double>;
using CoeffVec = std::array<Complex, 3>;

/// Truncated Fourier representation of a real, zero-mean 3D vector field.
///
/// Only the canonical half-space modes are stored (see Lattice); the value at
/// -j is conj(coeff(j)) by construction. Divergence-freeness, j . coeff(j) = 0,
/// is maintained by the Leray projection inside every operator that could
/// break it and is checked rather than structural.
class SpectralField {
  public:
    explicit SpectralField(std::shared_ptr<const Lattice> lattice)
        : lattice_(std::move(lattice)), coeffs_(lattice_->mode_count(), CoeffVec{}) {}

    const Lattice& lattice() const { return *lattice_; }
    const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }

    std::size_t size() const { return coeffs_.size(); }
    CoeffVec& operator[](std::size_t i) { return coeffs_[i]; }
    const CoeffVec& operator[](std::size_t i) const { return coeffs_[i]; }

    /// Coefficient at an arbitrary lattice mode, folding the conjugate pair.
    /// Returns zero for j = 0 and for modes outside the truncation.
    CoeffVec at(const Mode& j) const {
        const int p = lattice_->pair_of(j);
        if (p < 0) return CoeffVec{};
        if (Lattice::is_canonical(j)) return coeffs_[static_cast<std::size_t>(p)];
        const CoeffVec& c = coeffs_[static_cast<std::size_t>(p)];
        return CoeffVec{std::conj(c[0]), std::conj(c[1]), std::conj(c[2])};
    }

    /// Sets the pair value through either representative.
    void set(const Mode& j, const CoeffVec& value) {
        const int p = lattice_->pair_of(j);
        if (p < 0) throw RangeError("SpectralField::set: mode not representable");
        if (Lattice::is_canonical(j)) {
            coeffs_[static_cast<std::size_t>(p)] = value;
        } else {
            coeffs_[static_cast<std::size_t>(p)] =
                CoeffVec{std::conj(value[0]), std::conj(value[1]), std::conj(value[2])};
        }
    }

    void add(const Mode& j, const CoeffVec& value) {
        CoeffVec c = at(j);
        for (int d = 0; d < 3; ++d) c[d] += value[d];
        set(j, c);
    }

    SpectralField& operator+=(const SpectralField& o) {
        require_same_lattice(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            for (int d = 0; d < 3; ++d) coeffs_[i][d] += o.coeffs_[i][d];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        require_same_lattice(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            for (int d = 0; d < 3; ++d) coeffs_[i][d] -= o.coeffs_[i][d];
        return *this;
    }
    SpectralField& operator*=(double a) {
        for (auto& c : coeffs_)
            for (int d = 0; d < 3; ++d) c[d] *= a;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double a, SpectralField u) { return u *= a; }

    /// this += a * o
    void axpy(double a, const SpectralField& o) {
        require_same_lattice(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            for (int d = 0; d < 3; ++d) coeffs_[i][d] += a * o.coeffs_[i][d];
    }

    bool all_finite() const {
        for (const auto& c : coeffs_)
            for (int d = 0; d < 3; ++d)
                if (!std::isfinite(c[d].real()) || !std::isfinite(c[d].imag())) return false;
        return true;
    }

    void require_same_lattice(const SpectralField& o) const {
        if (*lattice_ != o.lattice())
            throw ConfigError("spectral fields live on different lattices");
    }

  private:
    std::shared_ptr<const Lattice> lattice_;
    std::vector<CoeffVec> coeffs_;
};

}  // namespace tsns

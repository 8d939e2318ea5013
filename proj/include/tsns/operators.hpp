#pragma once

#include <cmath>

#include "tsns/field.hpp"
#include "tsns/rng.hpp"

namespace tsns {

/// Helmholtz-Leray projection: per mode, c <- (I - j j^T / |j|^2) c.
/// Gradient components are annihilated; divergence-free fields pass through
/// unchanged. Total on the stored half space (the j = 0 mode is structural).
inline SpectralField leray_project(const SpectralField& raw) {
    SpectralField out = raw;
    const auto& lat = raw.lattice();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Mode& j = lat.mode(i);
        const double n2 = static_cast<double>(j[0]) * j[0] +
                          static_cast<double>(j[1]) * j[1] +
                          static_cast<double>(j[2]) * j[2];
        CoeffVec& c = out[i];
        const Complex jc = static_cast<double>(j[0]) * c[0] +
                           static_cast<double>(j[1]) * c[1] +
                           static_cast<double>(j[2]) * c[2];
        for (int d = 0; d < 3; ++d) c[d] -= (jc / n2) * static_cast<double>(j[d]);
    }
    return out;
}

/// A^s as a Fourier multiplier: c(j) <- mu(j)^s c(j). The multipliers form a
/// semigroup, so applying s1 then s2 equals applying s1 + s2.
inline SpectralField apply_fractional_power(const SpectralField& u, double s) {
    SpectralField out = u;
    const auto& lat = u.lattice();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = std::pow(lat.eigenvalue(i), s);
        for (int d = 0; d < 3; ++d) out[i][d] *= m;
    }
    return out;
}

/// ||A^{s/2} u|| = (sum_j mu(j)^s |u_j|^2)^{1/2} over the full mode set; the
/// factor 2 accounts for the unstored conjugates. At s = 0 this is the
/// physical L^2 norm divided by L^{3/2}.
inline double sobolev_norm(const SpectralField& u, double s) {
    const auto& lat = u.lattice();
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double m = (s == 0.0) ? 1.0 : std::pow(lat.eigenvalue(i), s);
        double a2 = 0.0;
        for (int d = 0; d < 3; ++d) a2 += std::norm(u[i][d]);
        acc += m * a2;
    }
    return std::sqrt(2.0 * acc);
}

inline double sobolev_norm_sq(const SpectralField& u, double s) {
    const double n = sobolev_norm(u, s);
    return n * n;
}

/// Spectral inner product of two real fields, (u, v) = sum_j u_j . conj(v_j),
/// consistent with sobolev_norm(., 0)^2.
inline double inner_product(const SpectralField& u, const SpectralField& v) {
    u.require_same_lattice(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        for (int d = 0; d < 3; ++d)
            acc += u[i][d].real() * v[i][d].real() + u[i][d].imag() * v[i][d].imag();
    return 2.0 * acc;
}

/// Largest |j . c(j)| / |c(j)| over modes with nonzero coefficient; measures
/// how far the field is from divergence-free (0 exactly for projected fields).
inline double divergence_defect(const SpectralField& u) {
    const auto& lat = u.lattice();
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Mode& j = lat.mode(i);
        const Complex jc = static_cast<double>(j[0]) * u[i][0] +
                           static_cast<double>(j[1]) * u[i][1] +
                           static_cast<double>(j[2]) * u[i][2];
        double a2 = 0.0;
        for (int d = 0; d < 3; ++d) a2 += std::norm(u[i][d]);
        if (a2 == 0.0) continue;
        const double nj = std::sqrt(static_cast<double>(j[0]) * j[0] +
                                    static_cast<double>(j[1]) * j[1] +
                                    static_cast<double>(j[2]) * j[2]);
        worst = std::max(worst, std::abs(jc) / (nj * std::sqrt(a2)));
    }
    return worst;
}

/// Seeded random divergence-free field with coefficient envelope
/// exp(-decay |j|), scaled to the requested H norm. Deterministic per seed.
inline SpectralField random_solenoidal_field(std::shared_ptr<const Lattice> lattice,
                                             std::uint64_t seed, double h_norm,
                                             double decay = 1.0) {
    SpectralField u(std::move(lattice));
    GaussianStream g(splitmix64(seed ^ 0x66'69'65'6c'64ULL));
    const auto& lat = u.lattice();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Mode& j = lat.mode(i);
        const double nj = std::sqrt(static_cast<double>(j[0]) * j[0] +
                                    static_cast<double>(j[1]) * j[1] +
                                    static_cast<double>(j[2]) * j[2]);
        const double env = std::exp(-decay * nj);
        for (int d = 0; d < 3; ++d) u[i][d] = env * Complex(g.next(), g.next());
    }
    u = leray_project(u);
    const double n = sobolev_norm(u, 0.0);
    if (n > 0.0 && h_norm > 0.0) u *= h_norm / n;
    if (h_norm == 0.0) u *= 0.0;
    return u;
}

}  // namespace tsns

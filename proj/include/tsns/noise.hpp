#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "tsns/errors.hpp"
#include "tsns/rng.hpp"

namespace tsns {

/// Seeded two-sided Wiener path on a uniform grid containing t = 0.
///
/// Increments over each cell are iid N(0, dt); values are anchored at
/// omega(0) = 0 and accumulated outward in both directions, so regenerating
/// from the same (seed, grid) is bit-for-bit reproducible.
struct WienerPath {
    std::uint64_t seed = 0;
    double t_min = 0.0;
    double t_max = 0.0;
    double dt = 0.0;
    std::size_t zero_index = 0;       // grid index of t = 0
    std::vector<double> increments;   // one per cell
    std::vector<double> values;       // one per grid point

    std::size_t grid_points() const { return values.size(); }
    double time_at(std::size_t i) const { return t_min + static_cast<double>(i) * dt; }

    /// Grid index of time t; RangeError when t is off the grid (no silent
    /// interpolation anywhere in this module).
    std::size_t index_of(double t) const {
        const double x = (t - t_min) / dt;
        const long long i = std::llround(x);
        if (std::abs(x - static_cast<double>(i)) > 1e-6)
            throw RangeError("time " + std::to_string(t) + " is not on the path grid");
        if (i < 0 || static_cast<std::size_t>(i) >= grid_points())
            throw RangeError("time " + std::to_string(t) + " outside the path window");
        return static_cast<std::size_t>(i);
    }

    double value_at(double t) const { return values[index_of(t)]; }
};

inline WienerPath sample_two_sided_wiener(std::uint64_t seed, double t_min, double t_max,
                                          double dt) {
    if (!(dt > 0.0)) throw ConfigError("wiener path: dt must be positive");
    if (!(t_min <= 0.0 && 0.0 <= t_max)) throw ConfigError("wiener path: need t_min <= 0 <= t_max");
    const double cells_f = (t_max - t_min) / dt;
    const long long cells = std::llround(cells_f);
    const double zero_f = -t_min / dt;
    const long long zero = std::llround(zero_f);
    if (cells < 1 || std::abs(cells_f - static_cast<double>(cells)) > 1e-6 ||
        std::abs(zero_f - static_cast<double>(zero)) > 1e-6)
        throw ConfigError("wiener path: grid must contain 0 and an integer number of cells");

    WienerPath p;
    p.seed = seed;
    p.t_min = t_min;
    p.t_max = t_max;
    p.dt = dt;
    p.zero_index = static_cast<std::size_t>(zero);

    GaussianStream g(splitmix64(seed ^ 0x77696e6572ULL));
    const double s = std::sqrt(dt);
    p.increments.resize(static_cast<std::size_t>(cells));
    for (auto& dw : p.increments) dw = s * g.next();

    p.values.assign(static_cast<std::size_t>(cells) + 1, 0.0);
    for (std::size_t i = p.zero_index; i + 1 < p.values.size(); ++i)
        p.values[i + 1] = p.values[i] + p.increments[i];
    for (std::size_t i = p.zero_index; i > 0; --i)
        p.values[i - 1] = p.values[i] - p.increments[i - 1];
    return p;
}

/// theta_s: t -> omega(t + s) - omega(s), re-anchored at zero. The increment
/// stream is carried over unchanged (relabelled cells), so shifting by s and
/// then by -s restores the original path exactly.
inline WienerPath shift_origin(const WienerPath& path, double s) {
    const double k_f = s / path.dt;
    const long long k = std::llround(k_f);
    if (std::abs(k_f - static_cast<double>(k)) > 1e-6)
        throw RangeError("shift_origin: s is not a multiple of the grid spacing");
    const long long zero = static_cast<long long>(path.zero_index) + k;
    if (zero < 0 || static_cast<std::size_t>(zero) >= path.grid_points())
        throw RangeError("shift_origin: shifted origin leaves the sampled window");

    WienerPath out;
    out.seed = path.seed;
    out.dt = path.dt;
    out.t_min = path.t_min - static_cast<double>(k) * path.dt;
    out.t_max = path.t_max - static_cast<double>(k) * path.dt;
    out.zero_index = static_cast<std::size_t>(zero);
    out.increments = path.increments;
    out.values.assign(path.grid_points(), 0.0);
    for (std::size_t i = out.zero_index; i + 1 < out.values.size(); ++i)
        out.values[i + 1] = out.values[i] + out.increments[i];
    for (std::size_t i = out.zero_index; i > 0; --i)
        out.values[i - 1] = out.values[i] - out.increments[i - 1];
    return out;
}

enum class OuInitPolicy { stationary_draw, explicit_value };

/// Exact samples of the Ornstein-Uhlenbeck process dz + z dt = domega along a
/// Wiener path.
///
/// One step is z_{n+1} = e^{-dt} z_n + xi_n with xi_n = rho dW_n / sqrt(dt),
/// rho = sqrt((1 - e^{-2 dt}) / 2): the conditional mean is exact and xi_n has
/// the exact one-step variance, so the stationary law N(0, 1/2) is invariant
/// under the update. By default z at the left end of the window is a
/// stationary draw derived from the path seed alone, which keeps the OU flow
/// commuting with shift_origin exactly on aligned grids.
struct OUTrajectory {
    WienerPath path;
    std::vector<double> z_values;
    OuInitPolicy init_policy = OuInitPolicy::stationary_draw;
    double init_value = 0.0;

    double z_at(double t) const { return z_values[path.index_of(t)]; }
    double time_at(std::size_t i) const { return path.time_at(i); }

    /// Weights of the discrete integral-equation form of the update:
    /// z_{n+1} - z_n + z_n dt w_drift - dW_n w_noise = 0 holds exactly, with
    /// w_drift = (1 - e^{-dt}) / dt and w_noise = rho / sqrt(dt).
    double drift_weight() const { return (1.0 - std::exp(-path.dt)) / path.dt; }
    double noise_weight() const {
        return std::sqrt((1.0 - std::exp(-2.0 * path.dt)) / 2.0) / std::sqrt(path.dt);
    }
};

inline OUTrajectory ou_trajectory_with_init(WienerPath path, double z_init,
                                            OuInitPolicy policy) {
    OUTrajectory ou;
    ou.init_policy = policy;
    ou.init_value = z_init;
    const double decay = std::exp(-path.dt);
    const double gain = std::sqrt((1.0 - std::exp(-2.0 * path.dt)) / 2.0) / std::sqrt(path.dt);
    ou.z_values.assign(path.grid_points(), 0.0);
    ou.z_values[0] = z_init;
    for (std::size_t i = 0; i + 1 < ou.z_values.size(); ++i)
        ou.z_values[i + 1] = decay * ou.z_values[i] + gain * path.increments[i];
    ou.path = std::move(path);
    return ou;
}

inline OUTrajectory ou_trajectory(const WienerPath& path) {
    GaussianStream g(splitmix64(path.seed ^ 0x6f752d696e6974ULL));
    const double z0 = std::sqrt(0.5) * g.next();
    return ou_trajectory_with_init(path, z0, OuInitPolicy::stationary_draw);
}

inline OUTrajectory ou_trajectory(const WienerPath& path, double z_init) {
    return ou_trajectory_with_init(path, z_init, OuInitPolicy::explicit_value);
}

/// Time average (1/T) int_0^T |z|^m ds by the trapezoidal rule. For long
/// windows this approaches the ergodic limit Gamma((1+m)/2) / sqrt(pi).
inline double ergodic_moment_average(const OUTrajectory& z, double m, double window_end) {
    if (!(window_end > 0.0)) throw RangeError("ergodic_moment_average: empty window");
    const std::size_t a = z.path.index_of(0.0);
    const std::size_t b = z.path.index_of(window_end);
    if (b <= a) throw RangeError("ergodic_moment_average: empty window");
    double acc = 0.5 * (std::pow(std::abs(z.z_values[a]), m) +
                        std::pow(std::abs(z.z_values[b]), m));
    for (std::size_t i = a + 1; i < b; ++i) acc += std::pow(std::abs(z.z_values[i]), m);
    return acc * z.path.dt / window_end;
}

/// Columnar text export (t, omega(t), z(t)); seed and dt as comment lines,
/// 17 significant digits so reloads are exact.
inline void export_path_text(const OUTrajectory& z, std::ostream& os) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "# seed = %llu\n",
                  static_cast<unsigned long long>(z.path.seed));
    os << buf;
    std::snprintf(buf, sizeof buf, "# dt = %.17g\n", z.path.dt);
    os << buf;
    os << "t omega z\n";
    for (std::size_t i = 0; i < z.path.grid_points(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", z.path.time_at(i),
                      z.path.values[i], z.z_values[i]);
        os << buf;
    }
}

}  // namespace tsns

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "tsns/integrator.hpp"

namespace tsns {

constexpr double kEntryAbsSlack = 1e-9;
constexpr double kEntryRelSlack = 1e-6;

/// Outcome of the noise-admissibility check: the sup-gradient of h against
/// the strict threshold sqrt(pi) nu lambda1^{5/4}, the splitting constants
/// alpha in (0,1] and beta > 0 solved from
///   grad / sqrt(pi) = (1 - alpha) nu lambda1^{5/4}
///   grad (1 + beta) / sqrt(pi) = nu (1 - alpha/2) lambda1^{5/4}
/// and the decay rate lambda = alpha nu lambda1^{5/4} / 4.
struct AdmissibilityReport {
    double grad_h_sup = 0.0;
    double threshold = 0.0;
    bool satisfied = false;
    double alpha_split = std::numeric_limits<double>::quiet_NaN();
    double beta_split = std::numeric_limits<double>::quiet_NaN();
    bool splits_defined = false;
    bool beta_defined = false;
    double lambda_rate = std::numeric_limits<double>::quiet_NaN();
};

inline AdmissibilityReport admissibility_from_gradient(double grad_h_sup, double nu,
                                                       double lambda1) {
    const double sqrt_pi = std::sqrt(3.14159265358979323846);
    const double lam54 = std::pow(lambda1, 1.25);
    AdmissibilityReport r;
    r.grad_h_sup = grad_h_sup;
    r.threshold = sqrt_pi * nu * lam54;
    r.satisfied = grad_h_sup < r.threshold;
    if (!r.satisfied) return r;
    r.splits_defined = true;
    r.alpha_split = 1.0 - grad_h_sup / (sqrt_pi * nu * lam54);
    if (grad_h_sup > 0.0) {
        r.beta_defined = true;
        r.beta_split = nu * (1.0 - r.alpha_split / 2.0) * lam54 * sqrt_pi / grad_h_sup - 1.0;
    }
    r.lambda_rate = r.alpha_split * nu * lam54 / 4.0;
    return r;
}

inline AdmissibilityReport verify_noise_admissibility(
    const SpectralField& h, double nu, int oversample = 4,
    GradientMatrixNorm norm = GradientMatrixNorm::spectral) {
    const double grad = sup_gradient_norm(h, oversample, norm);
    return admissibility_from_gradient(grad, nu, h.lattice().lambda1());
}

/// Terminal states of the deterministic system from random initial data after
/// a burn-in, used as finite proxies for points of the global attractor.
struct AttractorSampleOptions {
    std::uint64_t seed = 1;
    double init_norm = 1.0;
    double spectral_decay = 1.0;
};

inline std::vector<SpectralField> attractor_sample_deterministic(
    const SimParams& p, double burn_in, std::size_t count,
    const AttractorSampleOptions& opt = {}) {
    if (sobolev_norm(p.noise_profile, 0.0) != 0.0)
        throw ConfigError("attractor_sample_deterministic: requires h = 0");
    if (!(burn_in > 0.0)) throw ConfigError("attractor_sample_deterministic: burn_in must be positive");
    const std::size_t n = steps_for(burn_in, p.dt);
    std::vector<SpectralField> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SpectralField u0 = random_solenoidal_field(
            p.lattice, splitmix64(opt.seed + 0x1000 * i), opt.init_norm, opt.spectral_decay);
        out.push_back(integrate_deterministic(p, std::move(u0), n, RecordOptions{{}, 0, false})
                          .states.back());
    }
    return out;
}

/// min over samples of ||A^{s/2}(v - a)||, the one-sided H^s distance to a
/// finite sample cloud.
inline double set_distance(const SpectralField& v, const std::vector<SpectralField>& samples,
                           double s) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : samples) {
        SpectralField d = v;
        d -= a;
        best = std::min(best, sobolev_norm(d, s));
    }
    return best;
}

/// Co-integrates v (random system, pullback window [-t, 0]) and u
/// (deterministic system, same grid) and records the Sobolev norms of the
/// difference w = v - u. Defaults report ||A^{5/8}w|| and ||A^{5/4}w||
/// alongside ||w||.
inline NormSeries comparison_norms(const SimParams& p, const OUTrajectory& ou, double t,
                                   const SpectralField& v0, const SpectralField& u0,
                                   const std::vector<double>& s_values = {0.0, 1.25, 2.5}) {
    const std::size_t n = steps_for(t, p.dt);
    std::size_t idx = ou.path.index_of(-t);
    Stepper stepper(p);

    SimParams det(p.lattice, p.nu, p.dt);
    det.forcing = p.forcing;
    det.frac_exponent = p.frac_exponent;
    det.blowup_guard = p.blowup_guard;
    det.disable_nonlinear = p.disable_nonlinear;
    Stepper det_stepper(det);

    NormSeries series;
    series.s_values = s_values;
    series.norms.resize(s_values.size());
    series.reserve(n + 1);

    SpectralField v = v0;
    SpectralField u = u0;
    auto record = [&](double time) {
        SpectralField w = v;
        w -= u;
        series.times.push_back(time);
        for (std::size_t k = 0; k < s_values.size(); ++k)
            series.norms[k].push_back(sobolev_norm(w, s_values[k]));
        series.z.push_back(ou.z_values[idx]);
    };
    record(-t);
    for (std::size_t k = 0; k < n; ++k) {
        const double z0 = ou.z_values[idx];
        const double z1 = ou.z_values[idx + 1];
        v = stepper.step(v, z0, z1, k + 1);
        u = det_stepper.step(u, 0.0, 0.0, k + 1);
        ++idx;
        record(ou.path.time_at(idx));
    }
    return series;
}

/// Smallest tested horizon from which the squared-radius record stays at or
/// below the given radius (entry slack 1e-9 + 1e-6 * radius); 0 when absorbed
/// from the first horizon on, +inf when never.
inline double absorbing_entry_time(const std::vector<double>& horizons,
                                   const std::vector<double>& radii_sq, double radius) {
    const double slack = kEntryAbsSlack + kEntryRelSlack * radius;
    std::size_t entry = horizons.size();
    for (std::size_t i = horizons.size(); i-- > 0;) {
        if (radii_sq[i] <= radius + slack)
            entry = i;
        else
            break;
    }
    if (entry == horizons.size()) return std::numeric_limits<double>::infinity();
    if (entry == 0) return 0.0;
    return horizons[entry];
}

/// Pullback radii of an initial ensemble at increasing horizons, one noise
/// realization per report. The plateau per index s is the mean of the last
/// three radii, defined only when they vary by less than 10%; entry times are
/// evaluated at radius = factor * plateau.
struct AbsorbingReport {
    std::vector<double> horizons;
    std::vector<double> s_values;
    std::vector<std::vector<double>> radii;  // radii[s][horizon], squared norms
    std::vector<double> plateau;
    std::vector<std::uint8_t> plateau_defined;
    std::vector<double> entry_factors;
    std::vector<std::vector<double>> entry_times;  // entry_times[s][factor]
};

inline AbsorbingReport absorbing_report(const SimParams& p, const OUTrajectory& ou,
                                        const std::vector<double>& horizons,
                                        const std::vector<SpectralField>& ensemble,
                                        const std::vector<double>& s_values = {0.0, 1.25},
                                        const std::vector<double>& entry_factors = {1.1, 1.5,
                                                                                    2.0}) {
    if (ensemble.empty()) throw ConfigError("absorbing_report: empty initial ensemble");
    AbsorbingReport rep;
    rep.horizons = horizons;
    rep.s_values = s_values;
    rep.entry_factors = entry_factors;
    rep.radii.assign(s_values.size(), std::vector<double>(horizons.size(), 0.0));
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
        for (const auto& v0 : ensemble) {
            SpectralField v = pullback_solve(p, ou, horizons[hi], v0);
            for (std::size_t k = 0; k < s_values.size(); ++k)
                rep.radii[k][hi] =
                    std::max(rep.radii[k][hi], sobolev_norm_sq(v, s_values[k]));
        }
    }
    rep.plateau.assign(s_values.size(), std::numeric_limits<double>::quiet_NaN());
    rep.plateau_defined.assign(s_values.size(), 0);
    rep.entry_times.assign(s_values.size(),
                           std::vector<double>(entry_factors.size(),
                                               std::numeric_limits<double>::infinity()));
    for (std::size_t k = 0; k < s_values.size(); ++k) {
        if (horizons.size() < 3) continue;
        const auto& r = rep.radii[k];
        const std::size_t n = r.size();
        const double lo = std::min({r[n - 3], r[n - 2], r[n - 1]});
        const double hi = std::max({r[n - 3], r[n - 2], r[n - 1]});
        if (lo > 0.0 && hi / lo < 1.1) {
            rep.plateau[k] = (r[n - 3] + r[n - 2] + r[n - 1]) / 3.0;
            rep.plateau_defined[k] = 1;
            for (std::size_t f = 0; f < entry_factors.size(); ++f)
                rep.entry_times[k][f] =
                    absorbing_entry_time(horizons, r, entry_factors[f] * rep.plateau[k]);
        }
    }
    return rep;
}

/// Finite-perturbation response on a shared noise path: paired pullback runs
/// from v0 and v0 + delta * direction over the window [-T, 0], reporting
/// R_s(delta) = ||A^{s/2} vbar(0)|| / delta. The raw pairs are stored; the
/// verdict marks the linear-response regime (ratios within a factor 2 across
/// the ladder, per s).
struct LipschitzReport {
    std::vector<double> deltas;
    std::vector<double> s_values;
    std::vector<std::vector<double>> ratios;  // ratios[s][delta]
    double horizon = 0.0;
    std::vector<std::uint8_t> stable_per_s;
    bool stable = false;
};

inline LipschitzReport lipschitz_ratio(const SimParams& p, const OUTrajectory& ou, double T,
                                       const SpectralField& v0,
                                       const std::vector<std::pair<double, SpectralField>>&
                                           delta_dirs,
                                       const std::vector<double>& s_values = {0.0, 1.25, 2.5}) {
    if (delta_dirs.empty()) throw ConfigError("lipschitz_ratio: no perturbations given");
    LipschitzReport rep;
    rep.horizon = T;
    rep.s_values = s_values;
    rep.ratios.assign(s_values.size(), {});

    const SpectralField base = pullback_solve(p, ou, T, v0);
    for (const auto& [delta, dir] : delta_dirs) {
        if (!(delta > 1e-12))
            throw ConfigError("lipschitz_ratio: delta below the 1e-12 roundoff floor");
        const double dn = sobolev_norm(dir, 0.0);
        if (std::abs(dn - 1.0) > 1e-6)
            throw ConfigError("lipschitz_ratio: directions must have unit H norm");
        SpectralField v1 = v0;
        v1.axpy(delta, dir);
        SpectralField vbar = pullback_solve(p, ou, T, v1);
        vbar -= base;
        rep.deltas.push_back(delta);
        for (std::size_t k = 0; k < s_values.size(); ++k)
            rep.ratios[k].push_back(sobolev_norm(vbar, s_values[k]) / delta);
    }

    rep.stable_per_s.assign(s_values.size(), 0);
    bool all = true;
    for (std::size_t k = 0; k < s_values.size(); ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double r : rep.ratios[k]) {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const bool ok = lo > 0.0 && hi / lo < 2.0;
        rep.stable_per_s[k] = ok ? 1 : 0;
        all = all && ok;
    }
    rep.stable = all;
    return rep;
}

/// ||A^{s/2} DPhi[dir]|| of the discrete pullback flow map over [-T, 0],
/// computed by exact tangent propagation; the delta -> 0 limit of the
/// finite-difference ratios above.
inline double linearized_ratio(const SimParams& p, const OUTrajectory& ou, double T,
                               const SpectralField& v0, const SpectralField& dir,
                               double s_value) {
    const std::size_t n = steps_for(T, p.dt);
    std::size_t idx = ou.path.index_of(-T);
    Stepper stepper(p);
    SpectralField v = v0;
    SpectralField g = dir;
    for (std::size_t k = 0; k < n; ++k) {
        auto [vn, gn] = stepper.step_with_tangent(v, g, ou.z_values[idx], ou.z_values[idx + 1]);
        v = std::move(vn);
        g = std::move(gn);
        ++idx;
    }
    return sobolev_norm(g, s_value);
}

/// Truncated path functional
///   C int_{-T}^0 exp((8/alpha - 3) lambda s + 2 grad int_s^0 |z| dtau)
///                (1 + z(s)^4) ds
/// by the trapezoidal rule, with the generic constant C exposed as a
/// parameter. The reported tail bound is exp(-(8/alpha - 3) lambda T) times
/// the window maximum of the slowly varying factor.
struct ZetaParams {
    double alpha_split = 1.0;
    double lambda_rate = 0.25;
    double grad_h_sup = 0.0;
    double big_c = 1.0;
};

struct ZetaResult {
    double value = 0.0;
    double tail_bound = 0.0;
};

inline ZetaResult zeta_path_functional(const OUTrajectory& z, const ZetaParams& prm,
                                       double T_trunc) {
    if (!(prm.big_c > 0.0)) throw ConfigError("zeta_path_functional: C must be positive");
    if (!(prm.alpha_split > 0.0 && prm.alpha_split <= 1.0))
        throw ConfigError("zeta_path_functional: alpha must lie in (0,1]");
    const std::size_t left = z.path.index_of(-T_trunc);
    const std::size_t right = z.path.index_of(0.0);
    if (right <= left) throw RangeError("zeta_path_functional: insufficient window");

    const double rate = (8.0 / prm.alpha_split - 3.0) * prm.lambda_rate;
    const double dt = z.path.dt;

    // cumulative |z| integral from s up to 0, trapezoidal
    std::vector<double> tail_abs(right - left + 1, 0.0);
    for (std::size_t i = right; i-- > left;) {
        const double a = std::abs(z.z_values[i]);
        const double b = std::abs(z.z_values[i + 1]);
        tail_abs[i - left] = tail_abs[i - left + 1] + 0.5 * dt * (a + b);
    }

    double acc = 0.0;
    double sv_max = 0.0;
    double prev = 0.0;
    for (std::size_t i = left; i <= right; ++i) {
        const double s = z.path.time_at(i);
        const double zi = z.z_values[i];
        const double sv = std::exp(2.0 * prm.grad_h_sup * tail_abs[i - left]) *
                          (1.0 + zi * zi * zi * zi);
        sv_max = std::max(sv_max, sv);
        const double g = std::exp(rate * s) * sv;
        if (i > left) acc += 0.5 * dt * (prev + g);
        prev = g;
    }
    ZetaResult out;
    out.value = prm.big_c * acc;
    out.tail_bound = prm.big_c * std::exp(-rate * T_trunc) * sv_max;
    return out;
}

/// Box-counting dimension of a sample cloud after projecting onto the lowest
/// Stokes eigenmodes in the A^{s/2} metric (projection_rank real coordinates).
struct DimensionReport {
    std::size_t sample_count = 0;
    double s_value = 0.0;
    int projection_rank = 0;
    std::vector<double> scales;
    std::vector<std::size_t> counts;
    double slope = 0.0;
    double slope_stderr = 0.0;
    bool degenerate = false;
};

namespace detail {

inline std::vector<std::vector<double>> project_samples(
    const std::vector<SpectralField>& samples, double s, int rank) {
    const auto& lat = samples.front().lattice();
    std::vector<std::size_t> order(lat.mode_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lat.eigenvalue(a) < lat.eigenvalue(b);
    });
    std::vector<std::vector<double>> coords(samples.size());
    for (std::size_t n = 0; n < samples.size(); ++n) {
        auto& x = coords[n];
        x.reserve(rank);
        for (std::size_t oi = 0; oi < order.size() && static_cast<int>(x.size()) < rank; ++oi) {
            const std::size_t i = order[oi];
            const double wgt = std::sqrt(2.0) * std::pow(lat.eigenvalue(i), s / 2.0);
            for (int d = 0; d < 3 && static_cast<int>(x.size()) < rank; ++d) {
                x.push_back(wgt * samples[n][i][d].real());
                if (static_cast<int>(x.size()) < rank)
                    x.push_back(wgt * samples[n][i][d].imag());
            }
        }
    }
    return coords;
}

}  // namespace detail

inline DimensionReport box_counting_dimension(const std::vector<SpectralField>& samples,
                                              double s, const std::vector<double>& scales,
                                              int projection_rank = 24) {
    if (samples.size() < 2) throw ConfigError("box_counting_dimension: need at least 2 samples");
    for (std::size_t i = 1; i < scales.size(); ++i)
        if (!(scales[i] < scales[i - 1]))
            throw ConfigError("box_counting_dimension: scales must be strictly decreasing");
    if (scales.size() < 2) throw ConfigError("box_counting_dimension: need at least 2 scales");

    DimensionReport rep;
    rep.sample_count = samples.size();
    rep.s_value = s;
    rep.projection_rank = projection_rank;
    rep.scales = scales;

    const auto coords = detail::project_samples(samples, s, projection_rank);
    bool all_same = true;
    for (std::size_t n = 1; n < coords.size() && all_same; ++n) all_same = coords[n] == coords[0];
    if (all_same) {
        rep.counts.assign(scales.size(), 1);
        rep.degenerate = true;
        rep.slope = 0.0;
        return rep;
    }

    for (double eps : scales) {
        std::set<std::vector<long long>> boxes;
        for (const auto& x : coords) {
            std::vector<long long> key(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                key[i] = static_cast<long long>(std::floor(x[i] / eps));
            boxes.insert(std::move(key));
        }
        rep.counts.push_back(boxes.size());
    }

    // least squares of log N against -log eps
    const std::size_t n = scales.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -std::log(scales[i]);
        const double y = std::log(static_cast<double>(rep.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    rep.slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - rep.slope * sx) / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -std::log(scales[i]);
        const double y = std::log(static_cast<double>(rep.counts[i]));
        const double r = y - (rep.slope * x + intercept);
        ss_res += r * r;
    }
    if (n > 2) rep.slope_stderr = std::sqrt(ss_res / static_cast<double>(n - 2) / (sxx - sx * sx / n));
    return rep;
}

}  // namespace tsns

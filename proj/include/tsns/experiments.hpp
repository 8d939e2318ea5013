#pragma once

#include <json.hpp>

#include <atomic>
#include <exception>
#include <filesystem>
#include <sstream>
#include <thread>

#include "tsns/attractor.hpp"
#include "tsns/checkpoint.hpp"
#include "tsns/config.hpp"

namespace tsns {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRange = 3;
constexpr int kExitBlowUp = 4;
constexpr int kExitIo = 5;

namespace detail {

inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Fans independent cells out to a small worker pool; slots are preallocated
/// so the result layout does not depend on scheduling. The lowest-index
/// failure wins, deterministically.
template <typename Fn>
void parallel_cells(std::size_t count, Fn&& body) {
    const std::size_t workers =
        std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline std::shared_ptr<const Lattice> make_lattice(const RunConfig& cfg) {
    return std::make_shared<Lattice>(cfg.box_length, cfg.truncation, cfg.dealias_fraction);
}

inline SpectralField build_field(const FieldSpec& spec,
                                 const std::shared_ptr<const Lattice>& lat) {
    if (spec.kind == "none") return SpectralField(lat);
    if (spec.kind == "random_smooth")
        return random_solenoidal_field(lat, spec.seed, spec.amplitude, spec.decay);
    if (spec.kind == "file") return load_checkpoint(spec.file, lat);
    throw ConfigError("unknown field kind '" + spec.kind + "'");
}

inline SimParams make_sim_params(const RunConfig& cfg,
                                 const std::shared_ptr<const Lattice>& lat) {
    SimParams p(lat, cfg.nu, cfg.dt);
    p.forcing = leray_project(build_field(cfg.f, lat));
    p.noise_profile = leray_project(build_field(cfg.h, lat));
    p.frac_exponent = cfg.frac_exponent;
    p.blowup_guard = cfg.guard;
    return p;
}

inline Json params_json(const RunConfig& cfg) {
    Json j;
    j["kind"] = to_string(cfg.kind);
    j["seeds"] = cfg.seeds;
    j["nu"] = cfg.nu;
    j["L"] = cfg.box_length;
    j["N"] = cfg.truncation;
    j["dealias_fraction"] = cfg.dealias_fraction;
    j["dt"] = cfg.dt;
    j["T"] = cfg.horizon;
    j["frac_exponent"] = cfg.frac_exponent;
    j["scheme"] = "exponential_heun";
    j["guard"] = cfg.guard;
    j["C"] = cfg.c_param;
    j["sobolev_indices"] = cfg.sobolev_indices;
    auto field = [](const FieldSpec& s) {
        Json f;
        f["kind"] = s.kind;
        f["amplitude"] = s.amplitude;
        f["seed"] = s.seed;
        f["decay"] = s.decay;
        if (!s.file.empty()) f["file"] = s.file;
        return f;
    };
    j["h"] = field(cfg.h);
    j["f"] = field(cfg.f);
    j["v0"] = field(cfg.v0);
    return j;
}

/// Columnar text: t, ||v||, ||A^{5/8}v||, ||A^{5/4}v||, optional further
/// indices, then z when present. Column names derive from the Sobolev index;
/// run metadata goes to a JSON sidecar next to the series.
inline std::string encode_norm_series(const NormSeries& s) {
    std::string out = "t";
    for (double sv : s.s_values) {
        char col[32];
        std::snprintf(col, sizeof col, " H%g", sv);
        out += col;
    }
    if (!s.z.empty()) out += " z";
    out += "\n";
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        out += detail::g17(s.times[i]);
        for (const auto& col : s.norms) {
            out += ' ';
            out += detail::g17(col[i]);
        }
        if (!s.z.empty()) {
            out += ' ';
            out += detail::g17(s.z[i]);
        }
        out += '\n';
    }
    return out;
}

inline void write_norm_series(const std::filesystem::path& base, const NormSeries& s,
                              const Json& meta) {
    write_file_atomic(base, encode_norm_series(s));
    std::filesystem::path side = base;
    side += ".meta.json";
    write_file_atomic(side, meta.dump(2) + "\n");
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

namespace detail {

inline Json admissibility_json(const AdmissibilityReport& r) {
    Json j;
    j["grad_h_sup"] = r.grad_h_sup;
    j["threshold"] = r.threshold;
    j["satisfied"] = r.satisfied;
    j["alpha_split"] = r.splits_defined ? Json(r.alpha_split) : Json(nullptr);
    j["beta_split"] = r.beta_defined ? Json(r.beta_split) : Json(nullptr);
    j["lambda_rate"] = r.splits_defined ? Json(r.lambda_rate) : Json(nullptr);
    return j;
}

inline Json absorbing_json(const AbsorbingReport& r) {
    Json j;
    j["horizons"] = r.horizons;
    j["s_values"] = r.s_values;
    j["radii"] = r.radii;
    Json plats = Json::array();
    for (std::size_t k = 0; k < r.plateau.size(); ++k)
        plats.push_back(r.plateau_defined[k] ? Json(r.plateau[k]) : Json(nullptr));
    j["plateau"] = plats;
    j["entry_factors"] = r.entry_factors;
    j["entry_times"] = r.entry_times;
    return j;
}

inline Json lipschitz_json(const LipschitzReport& r) {
    Json j;
    j["deltas"] = r.deltas;
    j["s_values"] = r.s_values;
    j["ratios"] = r.ratios;
    j["horizon"] = r.horizon;
    Json per = Json::array();
    for (auto b : r.stable_per_s) per.push_back(static_cast<bool>(b));
    j["stable_per_s"] = per;
    j["verdict"] = r.stable ? "stable" : "unstable";
    return j;
}

inline Json dimension_json(const DimensionReport& r) {
    Json j;
    j["sample_count"] = r.sample_count;
    j["s_value"] = r.s_value;
    j["projection_rank"] = r.projection_rank;
    j["scales"] = r.scales;
    j["counts"] = r.counts;
    j["slope"] = r.slope;
    j["slope_stderr"] = r.slope_stderr;
    j["degenerate"] = r.degenerate;
    return j;
}

/// Forward integration of the conjugated system that keeps the partial norm
/// series when a step blows up, so failed runs still leave evidence on disk.
/// States are thinned at the configured cadence for checkpointing.
struct GuardedRun {
    NormSeries series;
    std::vector<double> state_times;
    std::vector<SpectralField> states;
    std::optional<SpectralField> final_state;
    std::optional<std::size_t> blowup_step;
    std::string message;
};

inline GuardedRun guarded_random_run(const SimParams& p, const OUTrajectory& ou,
                                     double start_time, std::size_t n_steps, SpectralField v,
                                     const std::vector<double>& s_values,
                                     std::size_t thin_states = 0) {
    GuardedRun run;
    run.series.s_values = s_values;
    run.series.norms.resize(s_values.size());
    Stepper stepper(p);
    std::size_t idx = ou.path.index_of(start_time);
    auto record = [&](double t, double z, std::size_t step) {
        run.series.times.push_back(t);
        for (std::size_t k = 0; k < s_values.size(); ++k)
            run.series.norms[k].push_back(sobolev_norm(v, s_values[k]));
        run.series.z.push_back(z);
        if (thin_states && step % thin_states == 0 && step < n_steps) {
            run.state_times.push_back(t);
            run.states.push_back(v);
        }
    };
    record(start_time, ou.z_values[idx], 0);
    for (std::size_t n = 0; n < n_steps; ++n) {
        try {
            v = stepper.step(v, ou.z_values[idx], ou.z_values[idx + 1], n + 1);
        } catch (const BlowUpError& e) {
            run.blowup_step = e.step_index;
            run.message = e.what();
            return run;
        }
        ++idx;
        record(ou.path.time_at(idx), ou.z_values[idx], n + 1);
    }
    run.final_state = std::move(v);
    return run;
}

inline void write_thinned_states(const std::filesystem::path& out, std::uint64_t seed,
                                 const GuardedRun& run) {
    if (run.states.empty()) return;
    const std::filesystem::path dir =
        out / ("states_seed" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < run.states.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "state_%06zu.tsns", i);
        save_checkpoint(run.states[i], dir / name);
    }
}

}  // namespace detail

/// Dispatches a validated config to the matching procedure and writes every
/// artifact under cfg.out. Returns a scriptable exit status: 0 ok, 2 config,
/// 3 range, 4 blow-up, 5 I/O.
inline int run_experiment(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path out(cfg.out);
    try {
        fs::create_directories(out);

        auto lat = make_lattice(cfg);
        Json meta = params_json(cfg);

        switch (cfg.kind) {
            case ExperimentKind::ou_check: {
                Json report;
                report["params"] = meta;
                Json per_seed = Json::array();
                const double moments[3] = {1.0, 2.0, 4.0};
                for (std::uint64_t seed : cfg.seeds) {
                    WienerPath path = sample_two_sided_wiener(seed, 0.0, cfg.horizon, cfg.dt);
                    OUTrajectory ou = ou_trajectory(path);
                    Json s;
                    s["seed"] = seed;
                    Json ms = Json::array();
                    for (double m : moments) {
                        const double avg = ergodic_moment_average(ou, m, cfg.horizon);
                        const double target =
                            std::tgamma((1.0 + m) / 2.0) / std::sqrt(3.14159265358979323846);
                        Json row;
                        row["m"] = m;
                        row["average"] = avg;
                        row["target"] = target;
                        row["rel_error"] = std::abs(avg - target) / target;
                        ms.push_back(row);
                    }
                    s["moments"] = ms;
                    per_seed.push_back(s);
                    if (cfg.export_path) {
                        std::ostringstream os;
                        export_path_text(ou, os);
                        write_file_atomic(out / ("path_seed" + std::to_string(seed) + ".txt"),
                                          os.str());
                    }
                }
                report["runs"] = per_seed;
                write_json(out / "report.json", report);
                return kExitOk;
            }

            case ExperimentKind::admissibility: {
                const SpectralField h = leray_project(build_field(cfg.h, lat));
                const auto rep =
                    verify_noise_admissibility(h, cfg.nu, cfg.oversample, cfg.matrix_norm);
                Json j;
                j["params"] = meta;
                j["admissibility"] = detail::admissibility_json(rep);
                write_json(out / "report.json", j);
                return kExitOk;
            }

            case ExperimentKind::simulate: {
                const SimParams p = make_sim_params(cfg, lat);
                bool blew_up = false;
                std::size_t blow_step = 0;
                std::string blow_msg;
                for (std::uint64_t seed : cfg.seeds) {
                    WienerPath path = sample_two_sided_wiener(seed, 0.0, cfg.horizon, cfg.dt);
                    OUTrajectory ou = ou_trajectory(path);
                    SpectralField v0 = leray_project(build_field(cfg.v0, lat));
                    auto run = detail::guarded_random_run(p, ou, 0.0, steps_for(cfg.horizon, cfg.dt),
                                                          std::move(v0), cfg.sobolev_indices,
                                                          cfg.thinning);
                    Json side = meta;
                    side["seed"] = seed;
                    write_norm_series(out / ("series_seed" + std::to_string(seed) + ".tsv"),
                                      run.series, side);
                    detail::write_thinned_states(out, seed, run);
                    if (run.final_state) {
                        save_checkpoint(*run.final_state,
                                        out / ("state_seed" + std::to_string(seed) + ".tsns"));
                    }
                    if (cfg.export_path) {
                        std::ostringstream os;
                        export_path_text(ou, os);
                        write_file_atomic(out / ("path_seed" + std::to_string(seed) + ".txt"),
                                          os.str());
                    }
                    if (run.blowup_step) {
                        blew_up = true;
                        blow_step = *run.blowup_step;
                        blow_msg = run.message;
                        break;
                    }
                }
                if (blew_up) throw BlowUpError(blow_msg, blow_step);
                return kExitOk;
            }

            case ExperimentKind::pullback: {
                const SimParams p = make_sim_params(cfg, lat);
                for (std::uint64_t seed : cfg.seeds) {
                    WienerPath path = sample_two_sided_wiener(seed, -cfg.horizon, 0.0, cfg.dt);
                    OUTrajectory ou = ou_trajectory(path);
                    SpectralField v0 = leray_project(build_field(cfg.v0, lat));
                    auto rec = integrate_random(p, ou, -cfg.horizon,
                                                steps_for(cfg.horizon, cfg.dt), std::move(v0),
                                                RecordOptions{cfg.sobolev_indices, cfg.thinning,
                                                              false});
                    Json side = meta;
                    side["seed"] = seed;
                    write_norm_series(out / ("series_seed" + std::to_string(seed) + ".tsv"),
                                      rec.series, side);
                    if (rec.states.size() > 1) {
                        const std::filesystem::path sdir =
                            out / ("states_seed" + std::to_string(seed));
                        fs::create_directories(sdir);
                        for (std::size_t i = 0; i + 1 < rec.states.size(); ++i) {
                            char name[48];
                            std::snprintf(name, sizeof name, "state_%06zu.tsns", i);
                            save_checkpoint(rec.states[i], sdir / name);
                        }
                    }
                    save_checkpoint(rec.states.back(),
                                    out / ("state_seed" + std::to_string(seed) + ".tsns"));
                }
                return kExitOk;
            }

            case ExperimentKind::absorbing: {
                const SimParams p = make_sim_params(cfg, lat);
                std::vector<double> horizons = cfg.horizons;
                if (horizons.empty()) {
                    const auto adm = verify_noise_admissibility(p.noise_profile, cfg.nu,
                                                                cfg.oversample, cfg.matrix_norm);
                    if (!adm.satisfied)
                        throw ConfigError(
                            "absorbing: horizons not given and h is not admissible, so the "
                            "default {5,10,20,40}/lambda is undefined");
                    for (double k : {5.0, 10.0, 20.0, 40.0}) {
                        const double t = k / adm.lambda_rate;
                        horizons.push_back(std::round(t / cfg.dt) * cfg.dt);
                    }
                }
                std::vector<SpectralField> ensemble;
                for (std::size_t i = 0; i < cfg.ensemble_count; ++i)
                    ensemble.push_back(random_solenoidal_field(
                        lat, splitmix64(0xabcdULL + 977 * i), cfg.ensemble_radius, 1.0));

                std::vector<AbsorbingReport> reports(cfg.seeds.size());
                detail::parallel_cells(cfg.seeds.size(), [&](std::size_t i) {
                    WienerPath path =
                        sample_two_sided_wiener(cfg.seeds[i], -horizons.back(), 0.0, cfg.dt);
                    OUTrajectory ou = ou_trajectory(path);
                    reports[i] =
                        absorbing_report(p, ou, horizons, ensemble, cfg.sobolev_indices);
                });
                Json j;
                j["params"] = meta;
                Json per = Json::array();
                for (std::size_t i = 0; i < reports.size(); ++i) {
                    Json s = detail::absorbing_json(reports[i]);
                    s["seed"] = cfg.seeds[i];
                    per.push_back(s);
                }
                j["runs"] = per;
                write_json(out / "report.json", j);
                return kExitOk;
            }

            case ExperimentKind::comparison: {
                const SimParams p = make_sim_params(cfg, lat);
                SimParams det(lat, cfg.nu, cfg.dt);
                det.forcing = p.forcing;
                det.frac_exponent = cfg.frac_exponent;
                det.blowup_guard = cfg.guard;
                const auto samples =
                    attractor_sample_deterministic(det, cfg.burn_in, cfg.ensemble_count);
                for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
                    WienerPath path =
                        sample_two_sided_wiener(cfg.seeds[i], -cfg.horizon, 0.0, cfg.dt);
                    OUTrajectory ou = ou_trajectory(path);
                    SpectralField v0 = leray_project(build_field(cfg.v0, lat));
                    NormSeries w = comparison_norms(p, ou, cfg.horizon, v0, samples.front(),
                                                    cfg.sobolev_indices);
                    Json side = meta;
                    side["seed"] = cfg.seeds[i];
                    write_norm_series(
                        out / ("w_series_seed" + std::to_string(cfg.seeds[i]) + ".tsv"), w,
                        side);
                }
                return kExitOk;
            }

            case ExperimentKind::lipschitz: {
                const SimParams p = make_sim_params(cfg, lat);
                std::vector<LipschitzReport> reports(cfg.seeds.size());
                detail::parallel_cells(cfg.seeds.size(), [&](std::size_t i) {
                    WienerPath path =
                        sample_two_sided_wiener(cfg.seeds[i], -cfg.horizon, 0.0, cfg.dt);
                    OUTrajectory ou = ou_trajectory(path);
                    SpectralField v0 = leray_project(build_field(cfg.v0, lat));
                    SpectralField dir = random_solenoidal_field(
                        lat, splitmix64(cfg.seeds[i] ^ 0xd1ULL), 1.0, 1.0);
                    std::vector<std::pair<double, SpectralField>> probes;
                    for (double d : cfg.deltas) probes.emplace_back(d, dir);
                    reports[i] =
                        lipschitz_ratio(p, ou, cfg.horizon, v0, probes, cfg.sobolev_indices);
                });
                Json j;
                j["params"] = meta;
                Json per = Json::array();
                for (std::size_t i = 0; i < reports.size(); ++i) {
                    Json s = detail::lipschitz_json(reports[i]);
                    s["seed"] = cfg.seeds[i];
                    per.push_back(s);
                }
                j["runs"] = per;
                write_json(out / "report.json", j);
                return kExitOk;
            }

            case ExperimentKind::dimension: {
                SimParams det(lat, cfg.nu, cfg.dt);
                det.forcing = leray_project(build_field(cfg.f, lat));
                det.frac_exponent = cfg.frac_exponent;
                det.blowup_guard = cfg.guard;
                const auto samples = attractor_sample_deterministic(
                    det, cfg.burn_in, cfg.dim_samples,
                    AttractorSampleOptions{cfg.seeds.front(), cfg.ensemble_radius, 1.0});
                std::vector<double> scales = cfg.scales;
                if (scales.empty()) {
                    const auto coords = detail::project_samples(samples, 0.0, cfg.proj_rank);
                    double spread = 0.0;
                    for (const auto& x : coords)
                        for (std::size_t q = 0; q < x.size(); ++q)
                            spread = std::max(spread, std::abs(x[q] - coords.front()[q]));
                    double eps = std::max(spread, 1e-12) / 2.0;
                    for (int k = 0; k < 5; ++k, eps /= 2.0) scales.push_back(eps);
                }
                const auto rep = box_counting_dimension(samples, 0.0, scales, cfg.proj_rank);
                Json j;
                j["params"] = meta;
                j["dimension"] = detail::dimension_json(rep);
                write_json(out / "report.json", j);
                return kExitOk;
            }
        }
        throw ConfigError("unhandled experiment kind");
    } catch (const ConfigError& e) {
        Json err{{"exit_code", kExitConfig}, {"error", "config"}, {"message", e.what()}};
        try { fs::create_directories(out); write_json(out / "error.json", err); } catch (...) {}
        return kExitConfig;
    } catch (const RangeError& e) {
        Json err{{"exit_code", kExitRange}, {"error", "range"}, {"message", e.what()}};
        try { write_json(out / "error.json", err); } catch (...) {}
        return kExitRange;
    } catch (const BlowUpError& e) {
        Json err{{"exit_code", kExitBlowUp}, {"error", "blow-up"}, {"message", e.what()},
                 {"step_index", e.step_index}};
        try { write_json(out / "error.json", err); } catch (...) {}
        return kExitBlowUp;
    } catch (const IoError& e) {
        Json err{{"exit_code", kExitIo}, {"error", "io"}, {"message", e.what()}};
        try { write_json(out / "error.json", err); } catch (...) {}
        return kExitIo;
    }
}

}  // namespace tsns

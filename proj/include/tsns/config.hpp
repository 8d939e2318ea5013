#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsns/errors.hpp"
#include "tsns/transform.hpp"

namespace tsns {

enum class ExperimentKind {
    simulate,
    pullback,
    absorbing,
    lipschitz,
    comparison,
    ou_check,
    dimension,
    admissibility
};

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::pullback: return "pullback";
        case ExperimentKind::absorbing: return "absorbing";
        case ExperimentKind::lipschitz: return "lipschitz";
        case ExperimentKind::comparison: return "comparison";
        case ExperimentKind::ou_check: return "ou-check";
        case ExperimentKind::dimension: return "dimension";
        case ExperimentKind::admissibility: return "admissibility";
    }
    return "?";
}

/// How a named field (forcing f, noise profile h, initial datum v0) is built.
struct FieldSpec {
    std::string kind = "none";  // none | random_smooth | file
    double amplitude = 0.0;     // H norm of the generated field
    std::uint64_t seed = 0;
    double decay = 1.0;         // spectral envelope exp(-decay |j|)
    std::string file;           // checkpoint path for kind = file
};

/// Fully validated experiment description. Flat key = value text with
/// optional [section] grouping lines; unknown keys are rejected and every
/// violation is reported, not only the first.
struct RunConfig {
    ExperimentKind kind = ExperimentKind::ou_check;
    std::vector<std::uint64_t> seeds{1};
    double nu = 1.0;
    double box_length = 2.0 * 3.14159265358979323846;
    int truncation = 8;
    double dealias_fraction = 2.0 / 3.0;
    double dt = 0.01;
    double horizon = 10.0;          // T
    std::vector<double> horizons;   // pullback horizons; empty = derived from lambda
    std::string out = "out";
    std::vector<double> sobolev_indices{0.0, 1.25, 2.5};
    double c_param = 1.0;
    std::size_t thinning = 100;
    double guard = 1e8;
    int oversample = 4;
    GradientMatrixNorm matrix_norm = GradientMatrixNorm::spectral;
    double frac_exponent = 1.25;
    std::size_t ensemble_count = 2;
    double ensemble_radius = 10.0;
    double burn_in = 20.0;
    std::vector<double> deltas{1e-3, 1e-4, 1e-5};
    std::vector<double> scales;     // dimension scales; empty = halving ladder
    int proj_rank = 24;
    std::size_t dim_samples = 64;
    bool export_path = false;
    FieldSpec h, f, v0;
};

struct ConfigParse {
    RunConfig config;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string joined() const {
        std::string s;
        for (const auto& v : violations) {
            if (!s.empty()) s += "; ";
            s += v;
        }
        return s;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline ConfigParse parse_config(const std::string& text) {
    ConfigParse res;
    RunConfig& c = res.config;
    auto fail = [&](const std::string& msg) { res.violations.push_back(msg); };

    auto parse_double = [&](const std::string& key, const std::string& v, double& out) {
        try {
            std::size_t used = 0;
            out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (...) {
            fail(key + ": '" + v + "' is not a number");
        }
    };
    auto parse_u64 = [&](const std::string& key, const std::string& v, std::uint64_t& out) {
        try {
            std::size_t used = 0;
            out = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (...) {
            fail(key + ": '" + v + "' is not a nonnegative integer");
        }
    };
    auto parse_int = [&](const std::string& key, const std::string& v, int& out) {
        try {
            std::size_t used = 0;
            out = std::stoi(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (...) {
            fail(key + ": '" + v + "' is not an integer");
        }
    };
    auto parse_double_list = [&](const std::string& key, const std::string& v,
                                 std::vector<double>& out) {
        out.clear();
        for (const auto& item : detail::split_list(v)) {
            double x = 0.0;
            parse_double(key, item, x);
            out.push_back(x);
        }
    };

    bool kind_set = false;
    std::map<std::string, std::function<void(const std::string&)>> handlers;
    handlers["kind"] = [&](const std::string& v) {
        kind_set = true;
        if (v == "simulate") c.kind = ExperimentKind::simulate;
        else if (v == "pullback") c.kind = ExperimentKind::pullback;
        else if (v == "absorbing") c.kind = ExperimentKind::absorbing;
        else if (v == "lipschitz") c.kind = ExperimentKind::lipschitz;
        else if (v == "comparison") c.kind = ExperimentKind::comparison;
        else if (v == "ou-check") c.kind = ExperimentKind::ou_check;
        else if (v == "dimension") c.kind = ExperimentKind::dimension;
        else if (v == "admissibility") c.kind = ExperimentKind::admissibility;
        else fail("kind: unknown experiment '" + v + "'");
    };
    handlers["seed"] = handlers["seeds"] = [&](const std::string& v) {
        c.seeds.clear();
        for (const auto& item : detail::split_list(v)) {
            std::uint64_t s = 0;
            parse_u64("seed", item, s);
            c.seeds.push_back(s);
        }
        if (c.seeds.empty()) fail("seed: empty list");
    };
    handlers["nu"] = [&](const std::string& v) { parse_double("nu", v, c.nu); };
    handlers["L"] = [&](const std::string& v) { parse_double("L", v, c.box_length); };
    handlers["N"] = [&](const std::string& v) { parse_int("N", v, c.truncation); };
    handlers["dealias_fraction"] = [&](const std::string& v) {
        parse_double("dealias_fraction", v, c.dealias_fraction);
    };
    handlers["dt"] = [&](const std::string& v) { parse_double("dt", v, c.dt); };
    handlers["T"] = [&](const std::string& v) { parse_double("T", v, c.horizon); };
    handlers["horizons"] = [&](const std::string& v) {
        parse_double_list("horizons", v, c.horizons);
    };
    handlers["out"] = [&](const std::string& v) { c.out = v; };
    handlers["sobolev_indices"] = [&](const std::string& v) {
        parse_double_list("sobolev_indices", v, c.sobolev_indices);
    };
    handlers["C"] = [&](const std::string& v) { parse_double("C", v, c.c_param); };
    handlers["thinning"] = [&](const std::string& v) {
        std::uint64_t t = 0;
        parse_u64("thinning", v, t);
        c.thinning = static_cast<std::size_t>(t);
    };
    handlers["guard"] = [&](const std::string& v) { parse_double("guard", v, c.guard); };
    handlers["oversample"] = [&](const std::string& v) { parse_int("oversample", v, c.oversample); };
    handlers["matrix_norm"] = [&](const std::string& v) {
        if (v == "spectral") c.matrix_norm = GradientMatrixNorm::spectral;
        else if (v == "frobenius") c.matrix_norm = GradientMatrixNorm::frobenius;
        else fail("matrix_norm: must be 'spectral' or 'frobenius'");
    };
    handlers["frac_exponent"] = [&](const std::string& v) {
        parse_double("frac_exponent", v, c.frac_exponent);
    };
    handlers["ensemble_count"] = [&](const std::string& v) {
        std::uint64_t t = 0;
        parse_u64("ensemble_count", v, t);
        c.ensemble_count = static_cast<std::size_t>(t);
    };
    handlers["ensemble_radius"] = [&](const std::string& v) {
        parse_double("ensemble_radius", v, c.ensemble_radius);
    };
    handlers["burn_in"] = [&](const std::string& v) { parse_double("burn_in", v, c.burn_in); };
    handlers["deltas"] = [&](const std::string& v) { parse_double_list("deltas", v, c.deltas); };
    handlers["scales"] = [&](const std::string& v) { parse_double_list("scales", v, c.scales); };
    handlers["proj_rank"] = [&](const std::string& v) { parse_int("proj_rank", v, c.proj_rank); };
    handlers["dim_samples"] = [&](const std::string& v) {
        std::uint64_t t = 0;
        parse_u64("dim_samples", v, t);
        c.dim_samples = static_cast<std::size_t>(t);
    };
    handlers["export_path"] = [&](const std::string& v) {
        if (v == "0" || v == "false") c.export_path = false;
        else if (v == "1" || v == "true") c.export_path = true;
        else fail("export_path: must be 0/1 or true/false");
    };
    for (auto [prefix, spec] : {std::pair<std::string, FieldSpec*>{"h", &c.h},
                                {"f", &c.f},
                                {"v0", &c.v0}}) {
        handlers[prefix + "_kind"] = [&, spec](const std::string& v) {
            if (v == "none" || v == "random_smooth" || v == "file") spec->kind = v;
            else fail("field kind must be none, random_smooth or file, got '" + v + "'");
        };
        handlers[prefix + "_amplitude"] = [&, spec, prefix](const std::string& v) {
            parse_double(prefix + "_amplitude", v, spec->amplitude);
        };
        handlers[prefix + "_seed"] = [&, spec, prefix](const std::string& v) {
            parse_u64(prefix + "_seed", v, spec->seed);
        };
        handlers[prefix + "_decay"] = [&, spec, prefix](const std::string& v) {
            parse_double(prefix + "_decay", v, spec->decay);
        };
        handlers[prefix + "_file"] = [&, spec](const std::string& v) { spec->file = v; };
    }

    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') continue;  // cosmetic section header
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            fail("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        auto it = handlers.find(key);
        if (it == handlers.end()) {
            fail("unknown key '" + key + "'");
            continue;
        }
        it->second(value);
    }

    if (!kind_set) fail("missing required key 'kind'");

    // Range checks mirror the preconditions of the dispatched operations.
    if (!(c.nu > 0.0)) fail("nu must be positive");
    if (!(c.box_length > 0.0)) fail("L must be positive");
    if (c.truncation < 1) fail("N must be at least 1");
    if (!(c.dealias_fraction > 0.0 && c.dealias_fraction <= 1.0))
        fail("dealias_fraction must lie in (0,1]");
    if (!(c.dt > 0.0)) fail("dt must be positive");
    if (!(c.horizon > 0.0)) fail("T must be positive");
    if (!(c.guard > 0.0)) fail("guard must be positive");
    if (c.oversample < 1) fail("oversample must be >= 1");
    if (!(c.c_param > 0.0)) fail("C must be positive");
    if (c.proj_rank < 1) fail("proj_rank must be >= 1");
    if (c.ensemble_count < 1) fail("ensemble_count must be >= 1");
    if (!(c.ensemble_radius > 0.0)) fail("ensemble_radius must be positive");
    if (!(c.burn_in > 0.0)) fail("burn_in must be positive");
    if (!(c.frac_exponent > 0.0)) fail("frac_exponent must be positive");
    for (double d : c.deltas)
        if (!(d > 1e-12)) fail("deltas must stay above the 1e-12 roundoff floor");
    for (double t : c.horizons)
        if (!(t > 0.0)) fail("horizons must be positive");
    for (std::size_t i = 1; i < c.horizons.size(); ++i)
        if (!(c.horizons[i] > c.horizons[i - 1])) fail("horizons must be strictly increasing");
    for (double s : c.sobolev_indices)
        if (s < 0.0 || !std::isfinite(s)) fail("sobolev_indices must be finite and nonnegative");
    for (std::size_t i = 1; i < c.scales.size(); ++i)
        if (!(c.scales[i] < c.scales[i - 1])) fail("scales must be strictly decreasing");
    for (const auto* spec : {&c.h, &c.f, &c.v0}) {
        if (spec->kind == "file") {
            if (spec->file.empty())
                fail("field kind 'file' requires a _file path");
            else if (!std::filesystem::exists(spec->file))
                fail("referenced file does not exist: " + spec->file);
        }
        if (spec->kind == "random_smooth" && !(spec->amplitude >= 0.0))
            fail("field amplitude must be nonnegative");
    }
    return res;
}

}  // namespace tsns

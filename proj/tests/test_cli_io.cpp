#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "tsns/experiments.hpp"

using namespace tsns;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

bool violation_mentions(const ConfigParse& r, const std::string& needle) {
    for (const auto& v : r.violations)
        if (v.find(needle) != std::string::npos) return true;
    return false;
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(TSNS_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("minimal config parses with documented defaults") {
    auto r = parse_config("kind = ou-check\nseed = 1\nT = 100\ndt = 0.01\n");
    REQUIRE(r.ok());
    CHECK(r.config.kind == ExperimentKind::ou_check);
    CHECK(r.config.nu == 1.0);
    CHECK(r.config.truncation == 8);
    CHECK(r.config.dealias_fraction == Catch::Approx(2.0 / 3.0));
    CHECK(r.config.horizon == 100.0);
    CHECK(r.config.c_param == 1.0);
    CHECK(r.config.thinning == 100);
    CHECK(r.config.sobolev_indices == std::vector<double>{0.0, 1.25, 2.5});
}

TEST_CASE("violations are collected, not first-error-only") {
    auto r = parse_config("kind = simulate\ndt = 0\nnu = -1\ndetla = 3\n");
    CHECK_FALSE(r.ok());
    CHECK(violation_mentions(r, "dt must be positive"));
    CHECK(violation_mentions(r, "nu must be positive"));
    CHECK(violation_mentions(r, "unknown key 'detla'"));
    CHECK(r.violations.size() >= 3);
}

TEST_CASE("missing required kind is reported") {
    auto r = parse_config("dt = 0.01\n");
    CHECK(violation_mentions(r, "missing required key 'kind'"));
}

TEST_CASE("lists, sections and comments parse") {
    auto r = parse_config(
        "# comment\n[run]\nkind = absorbing\nseeds = 1, 2, 3\nhorizons = 1.5, 3.0, 6.0\n"
        "sobolev_indices = 0, 1.25\n");
    REQUIRE(r.ok());
    CHECK(r.config.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(r.config.horizons == std::vector<double>{1.5, 3.0, 6.0});
}

TEST_CASE("referenced files must exist at parse time") {
    auto r = parse_config("kind = simulate\nh_kind = file\nh_file = /nonexistent/h.tsns\n");
    CHECK(violation_mentions(r, "referenced file does not exist"));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    auto l = std::make_shared<Lattice>(2.0 * 3.14159265358979323846, 3);
    SpectralField u = random_solenoidal_field(l, 5, 1.3, 0.9);
    const fs::path dir = fresh_dir("tsns_ckpt");
    save_checkpoint(u, dir / "u.tsns");
    SpectralField v = load_checkpoint(dir / "u.tsns");
    REQUIRE(v.size() == u.size());
    CHECK(v.lattice().length() == u.lattice().length());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (int d = 0; d < 3; ++d) {
            CHECK(v[i][d].real() == u[i][d].real());
            CHECK(v[i][d].imag() == u[i][d].imag());
        }
}

TEST_CASE("checkpoint failure paths are distinct") {
    auto l = std::make_shared<Lattice>(2.0 * 3.14159265358979323846, 2);
    SpectralField u = random_solenoidal_field(l, 6, 1.0, 1.0);
    const std::string good = encode_checkpoint(u);

    SECTION("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        CHECK_THROWS_WITH(decode_checkpoint(bad), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("version mismatch") {
        std::string bad = good;
        bad[4] = 9;
        CHECK_THROWS_WITH(decode_checkpoint(bad),
                          Catch::Matchers::ContainsSubstring("version mismatch"));
    }
    SECTION("truncated payload") {
        std::string bad = good.substr(0, good.size() - 11);
        CHECK_THROWS_WITH(decode_checkpoint(bad),
                          Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("zero-mean violation names the mode") {
        // header is 4 + 4 + 4 + 8 + 4 + 8 = 32 bytes; first record starts there
        std::string bad = good;
        for (int b = 0; b < 12; ++b) bad[32 + b] = 0;  // mode indices -> (0,0,0)
        CHECK_THROWS_WITH(decode_checkpoint(bad),
                          Catch::Matchers::ContainsSubstring("(0,0,0)"));
    }
    SECTION("duplicate mode") {
        std::string bad = good;
        const std::size_t rec = 12 + 48;  // one record: 3 i32 + 6 f64
        for (std::size_t b = 0; b < 12; ++b) bad[32 + rec + b] = bad[32 + b];
        CHECK_THROWS_WITH(decode_checkpoint(bad),
                          Catch::Matchers::ContainsSubstring("duplicate"));
    }
}

TEST_CASE("ou-check experiment writes the moment report") {
    const fs::path dir = fresh_dir("tsns_oucheck");
    auto r = parse_config("kind = ou-check\nseed = 8\nT = 500\ndt = 0.01\nout = " +
                          dir.string() + "\n");
    REQUIRE(r.ok());
    CHECK(run_experiment(r.config) == kExitOk);
    const Json rep = Json::parse(slurp(dir / "report.json"));
    REQUIRE(rep["runs"].size() == 1);
    const auto& ms = rep["runs"][0]["moments"];
    REQUIRE(ms.size() == 3);
    CHECK(ms[0]["m"] == 1.0);
    CHECK(ms[0]["target"] == Catch::Approx(0.5641895835477563));
    CHECK(ms[1]["target"] == Catch::Approx(0.5));
    CHECK(ms[2]["target"] == Catch::Approx(0.75));
    for (const auto& m : ms) CHECK(m["rel_error"].get<double>() < 0.2);
}

TEST_CASE("admissibility experiment reports the splitting constants") {
    const fs::path dir = fresh_dir("tsns_adm");
    auto r = parse_config(
        "kind = admissibility\nN = 4\nh_kind = random_smooth\nh_amplitude = 0.05\n"
        "h_seed = 3\nout = " + dir.string() + "\n");
    REQUIRE(r.ok());
    CHECK(run_experiment(r.config) == kExitOk);
    const Json rep = Json::parse(slurp(dir / "report.json"));
    CHECK(rep["admissibility"]["satisfied"].get<bool>());
    CHECK(rep["admissibility"]["alpha_split"].get<double>() > 0.0);
    CHECK(rep["admissibility"]["threshold"].get<double>() ==
          Catch::Approx(1.7724538509055159));
}

TEST_CASE("simulate blow-up exits 4 and preserves the partial series") {
    const fs::path dir = fresh_dir("tsns_blowup");
    auto r = parse_config(
        "kind = simulate\nseed = 1\nN = 4\nT = 50\ndt = 0.5\nnu = 0.001\nguard = 1000\n"
        "v0_kind = random_smooth\nv0_amplitude = 60\nv0_seed = 2\nv0_decay = 0.2\nout = " +
        dir.string() + "\n");
    REQUIRE(r.ok());
    CHECK(run_experiment(r.config) == kExitBlowUp);
    CHECK(fs::exists(dir / "series_seed1.tsv"));
    CHECK(fs::exists(dir / "error.json"));
    const Json err = Json::parse(slurp(dir / "error.json"));
    CHECK(err["exit_code"] == kExitBlowUp);
    CHECK(err["error"] == "blow-up");
    CHECK(err["step_index"].get<std::size_t>() >= 1);
    // the partial series has at least the initial record
    const std::string series = slurp(dir / "series_seed1.tsv");
    CHECK(series.find("t H0") == 0);
}

TEST_CASE("misaligned horizon exits 3 with a range error record") {
    const fs::path dir = fresh_dir("tsns_range");
    // the path window (last horizon) is grid-aligned, the first horizon is not:
    // the misalignment surfaces inside the pullback solve, never interpolated
    auto r = parse_config(
        "kind = absorbing\nN = 2\ndt = 0.01\nhorizons = 0.505, 2\nensemble_count = 1\n"
        "ensemble_radius = 1\nout = " + dir.string() + "\n");
    REQUIRE(r.ok());
    CHECK(run_experiment(r.config) == kExitRange);
    const Json err = Json::parse(slurp(dir / "error.json"));
    CHECK(err["error"] == "range");
    CHECK(err["exit_code"] == kExitRange);
}

TEST_CASE("simulate persists thinned intermediate states") {
    const fs::path dir = fresh_dir("tsns_thin");
    auto r = parse_config(
        "kind = simulate\nseed = 2\nN = 2\nT = 1\ndt = 0.01\nthinning = 25\n"
        "v0_kind = random_smooth\nv0_amplitude = 0.5\nv0_seed = 3\nout = " + dir.string() +
        "\n");
    REQUIRE(r.ok());
    CHECK(run_experiment(r.config) == kExitOk);
    // steps 0, 25, 50, 75 are kept; the terminal state lives at the top level
    for (int i = 0; i < 4; ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "state_%06d.tsns", i);
        CHECK(fs::exists(dir / "states_seed2" / name));
    }
    CHECK(fs::exists(dir / "state_seed2.tsns"));
}

TEST_CASE("identical configs reproduce byte-identical artifacts") {
    auto run_into = [](const fs::path& dir) {
        auto r = parse_config(
            "kind = simulate\nseed = 5\nN = 4\nT = 1\ndt = 0.02\n"
            "h_kind = random_smooth\nh_amplitude = 0.05\nh_seed = 7\n"
            "f_kind = random_smooth\nf_amplitude = 0.2\nf_seed = 8\n"
            "v0_kind = random_smooth\nv0_amplitude = 0.5\nv0_seed = 9\n"
            "export_path = 1\nout = " + dir.string() + "\n");
        REQUIRE(r.ok());
        REQUIRE(run_experiment(r.config) == kExitOk);
    };
    const fs::path d1 = fresh_dir("tsns_repro1");
    const fs::path d2 = fresh_dir("tsns_repro2");
    run_into(d1);
    run_into(d2);
    for (const char* name :
         {"series_seed5.tsv", "series_seed5.tsv.meta.json", "state_seed5.tsns",
          "path_seed5.txt"}) {
        INFO(name);
        CHECK(slurp(d1 / name) == slurp(d2 / name));
    }
}

TEST_CASE("pullback experiment writes series and terminal checkpoint") {
    const fs::path dir = fresh_dir("tsns_pullback");
    auto r = parse_config(
        "kind = pullback\nseed = 3\nN = 4\nT = 1\ndt = 0.02\n"
        "h_kind = random_smooth\nh_amplitude = 0.05\nh_seed = 7\n"
        "v0_kind = random_smooth\nv0_amplitude = 1\nv0_seed = 4\nout = " + dir.string() + "\n");
    REQUIRE(r.ok());
    CHECK(run_experiment(r.config) == kExitOk);
    CHECK(fs::exists(dir / "series_seed3.tsv"));
    CHECK(fs::exists(dir / "state_seed3.tsns"));
    SpectralField final_state = load_checkpoint(dir / "state_seed3.tsns");
    CHECK(divergence_defect(final_state) < 1e-12);
    // sidecar carries the replay metadata
    const Json meta = Json::parse(slurp(dir / "series_seed3.tsv.meta.json"));
    CHECK(meta["seed"] == 3);
    CHECK(meta["scheme"] == "exponential_heun");
    CHECK(meta["dt"] == 0.02);
}

TEST_CASE("cli end to end") {
    const fs::path dir = fresh_dir("tsns_cli");
    const fs::path cfg = dir / "run.cfg";
    spit(cfg, "seed = 8\nT = 200\ndt = 0.01\n");

    SECTION("dry run validates") {
        CHECK(run_cli("ou-check --config " + cfg.string() + " --dry-run") == 0);
    }
    SECTION("config violations exit 2") {
        spit(dir / "bad.cfg", "dt = 0\ndetla = 1\n");
        CHECK(run_cli("ou-check --config " + (dir / "bad.cfg").string()) == 2);
    }
    SECTION("subcommand runs and writes artifacts") {
        CHECK(run_cli("ou-check --config " + cfg.string() + " --out " +
                      (dir / "out").string()) == 0);
        CHECK(fs::exists(dir / "out" / "report.json"));
    }
    SECTION("flag overrides mirror config keys") {
        CHECK(run_cli("ou-check --config " + cfg.string() + " --set T=100 --seed 4 --out " +
                      (dir / "out2").string()) == 0);
        const Json rep = Json::parse(slurp(dir / "out2" / "report.json"));
        CHECK(rep["params"]["T"] == 100.0);
        CHECK(rep["runs"][0]["seed"] == 4);
    }
}

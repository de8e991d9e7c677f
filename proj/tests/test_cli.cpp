#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "axistar/spherical.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("vp_axistar_test_" + name);
    fs::remove_all(p);
    return p;
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "vp_axistar");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return axistar::cli::run(static_cast<int>(argv.size()), argv.data());
}

json load(const fs::path& p)
{
    std::ifstream in(p);
    REQUIRE(in);
    return json::parse(in);
}

std::vector<std::vector<double>> csv(const fs::path& p)
{
    std::ifstream in(p);
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text)
{
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

const json* find_check(const json& checks, const std::string& name)
{
    for (const auto& c : checks)
        if (c["name"] == name) return &c;
    return nullptr;
}

// shared small family: skewed psi, gamma in {0, 1, 2}
const fs::path& family_dir()
{
    static const fs::path dir = [] {
        fs::path d = scratch("family");
        REQUIRE(cli({"continue", "--gamma-max", "2", "--gamma-steps", "2", "--out", d.string()}) == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("cli: config validation")
{
    using axistar::cli::RunConfig;
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = [](auto mutate) {
        RunConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), axistar::cli::ConfigError);
    };
    bad([](RunConfig& c) { c.mu = 5; });
    bad([](RunConfig& c) { c.mu = -0.5; });
    bad([](RunConfig& c) { c.gamma_steps = 0; });
    bad([](RunConfig& c) { c.L = 7; });
    bad([](RunConfig& c) { c.newton_tol = 0; });
    bad([](RunConfig& c) { c.psi = "uniform"; });
    bad([](RunConfig& c) { c.L = 32; });

    RunConfig d;
    axistar::cli::apply_config_json(d, R"({"mu": 2, "psi": "even-gaussian", "gamma_steps": 3})");
    CHECK(d.mu == 2);
    CHECK(d.psi == "even-gaussian");
    CHECK(d.gamma_steps == 3);
    CHECK_THROWS_AS(axistar::cli::apply_config_json(d, R"({"mass": 1})"), axistar::cli::ConfigError);
    CHECK_THROWS_AS(axistar::cli::apply_config_json(d, R"({"mu": "one"})"), axistar::cli::ConfigError);
    CHECK_THROWS_AS(axistar::cli::apply_config_json(d, "{"), axistar::cli::ConfigError);

    // the resolved config round-trips
    RunConfig e;
    axistar::cli::apply_config_json(e, axistar::cli::config_to_json(d));
    CHECK(axistar::cli::config_to_json(e) == axistar::cli::config_to_json(d));
}

TEST_CASE("cli: solve-spherical")
{
    auto out = scratch("solve");
    REQUIRE(cli({"solve-spherical", "--out", out.string()}) == 0);
    auto m = load(out / "manifest.json");
    CHECK(m["schema"] == "vp-axistar/1");
    CHECK(m["status"] == "ok");
    const json* c = find_check(m["checks"], "U0(1)=E0");
    REQUIRE(c != nullptr);
    CHECK((*c)["pass"] == true);

    auto bad = scratch("solve_bad");
    CHECK(cli({"solve-spherical", "--mu", "5", "--out", bad.string()}) == 2);
    auto mb = load(bad / "manifest.json");
    CHECK(mb["status"] == "input-error");
    CHECK(mb["failing"].size() == 1);

    auto cfg = scratch("solve_cfg");
    write(cfg / "bad.json", R"({"gamma_steps": 0})");
    CHECK(cli({"continue", "--config", (cfg / "bad.json").string(), "--out", (cfg / "o").string()}) == 2);
    CHECK(cli({"solve-spherical", "--config", (cfg / "missing.json").string(), "--out", (cfg / "o").string()}) == 2);
    CHECK(cli({"no-such-command"}) == 2);
}

TEST_CASE("cli: base-state profiles agree under refinement")
{
    auto dir = scratch("refine");
    write(dir / "coarse.json", R"({"mu": 1, "nr": 128})");
    write(dir / "fine.json", R"({"mu": 1, "nr": 256})");
    REQUIRE(cli({"solve-spherical", "--config", (dir / "coarse.json").string(), "--out", (dir / "c").string()}) == 0);
    REQUIRE(cli({"solve-spherical", "--config", (dir / "fine.json").string(), "--out", (dir / "f").string()}) == 0);
    auto c = csv(dir / "c" / "base_state.csv");
    auto f = csv(dir / "f" / "base_state.csv");
    // interior nodes of the coarse grid are every other fine node
    double d = 0;
    int matched = 0;
    for (int i = 0; i <= 128; ++i) {
        REQUIRE(std::fabs(c[i][0] - f[2 * i][0]) <= 1e-14);
        for (int col = 1; col <= 3; ++col) d = std::max(d, std::fabs(c[i][col] - f[2 * i][col]));
        ++matched;
    }
    CHECK(matched == 129);
    CHECK(d <= 1e-6);
}

TEST_CASE("cli: continue exports a monotone family")
{
    const auto& dir = family_dir();
    auto m = load(dir / "manifest.json");
    CHECK(m["status"] == "ok");
    CHECK(m["truncated"] == false);
    CHECK(m["gamma_reached"] == 2.0);
    REQUIRE(m["steps"].size() == 3);
    double prev = -1;
    for (const auto& s : m["steps"]) {
        CHECK(s["x_norm"].get<double>() > prev);
        prev = s["x_norm"];
        CHECK(s["failing"].empty());
        CHECK(s["iterations"].get<int>() <= 8);
        CHECK(s["sector_condition"].size() == 5);
        CHECK(s["residual"].get<double>() <= 1e-10);
        CHECK(fs::exists(dir / s["dir"].get<std::string>() / "state.json"));
    }
    CHECK(m["steps"][0]["x_norm"] == 0.0);
    auto st = load(dir / "step_002" / "state.json");
    CHECK(st["current_all_zero"] == false);
    CHECK(st["quadrupole_over_monopole"].get<double>() >= 1e-8);
}

TEST_CASE("cli: gamma_max = 0 gives the base state; even psi gives no current")
{
    auto dir = scratch("static");
    REQUIRE(cli({"continue", "--gamma-max", "0", "--out", dir.string()}) == 0);
    auto m = load(dir / "manifest.json");
    REQUIRE(m["steps"].size() == 1);
    auto base = axistar::spherical::solve_base_state(1.0);
    double d = 0;
    for (const auto& row : csv(dir / "step_000" / "density.csv")) d = std::max(d, std::fabs(row[4] - base.rho0_at(row[2])));
    CHECK(d <= 1e-6);

    auto even = scratch("even");
    REQUIRE(cli({"continue", "--psi", "even-gaussian", "--gamma-max", "1", "--gamma-steps", "2", "--out",
                 even.string()}) == 0);
    auto me = load(even / "manifest.json");
    REQUIRE(me["steps"].size() == 3);
    for (const auto& s : me["steps"]) {
        CHECK(s["current_all_zero"] == true);
        for (const auto& row : csv(even / s["dir"].get<std::string>() / "current.csv")) CHECK(row[4] == 0.0);
    }
}

TEST_CASE("cli: diagnose")
{
    const auto& dir = family_dir();
    SUBCASE("exported states pass")
    {
        for (const char* step : {"step_000", "step_002"}) {
            auto out = scratch(std::string("diag_") + step);
            CHECK(cli({"diagnose", (dir / step).string(), "--out", out.string()}) == 0);
            auto m = load(out / "manifest.json");
            CHECK(m["status"] == "ok");
            bool l2 = false;
            for (const auto& s : m["sector_norms"])
                if (s["l"] == 2) {
                    l2 = true;
                    CHECK(s["norm_inf"].get<double>() <= 0.6);
                }
            CHECK(l2);
            CHECK(fs::exists(out / "poisson_residual.csv"));
            CHECK(fs::exists(out / "sector_norms.csv"));
        }
    }
    SUBCASE("one density sample off by 10% fails the Poisson check")
    {
        auto copy = scratch("corrupt");
        fs::copy(dir / "step_001", copy, fs::copy_options::recursive);
        std::ifstream in(copy / "density.csv");
        std::vector<std::string> lines;
        for (std::string l; std::getline(in, l);) lines.push_back(l);
        in.close();
        // row with r near 0.5
        std::size_t target = 0;
        for (std::size_t k = 1; k < lines.size() && !target; ++k) {
            std::stringstream ss(lines[k]);
            std::string i, j, r;
            std::getline(ss, i, ',');
            std::getline(ss, j, ',');
            std::getline(ss, r, ',');
            if (std::stod(r) > 0.5) target = k;
        }
        REQUIRE(target > 0);
        auto pos = lines[target].rfind(',');
        double v = std::stod(lines[target].substr(pos + 1));
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", 1.1 * v);
        lines[target] = lines[target].substr(0, pos + 1) + buf;
        std::ofstream outf(copy / "density.csv");
        for (const auto& l : lines) outf << l << '\n';
        outf.close();

        auto out = scratch("corrupt_diag");
        CHECK(cli({"diagnose", copy.string(), "--out", out.string()}) == 1);
        auto m = load(out / "manifest.json");
        CHECK(m["status"] == "failed");
        bool named = false;
        for (const auto& f : m["failing"]) named = named || f == "poisson residual";
        CHECK(named);
    }
    SUBCASE("missing or malformed state")
    {
        auto missing = scratch("missing_state");
        CHECK(cli({"diagnose", missing.string()}) == 2);
        CHECK_FALSE(fs::exists(missing));

        auto broken = scratch("broken_state");
        fs::copy(dir / "step_001", broken, fs::copy_options::recursive);
        write(broken / "deformation.csv", "l,k,r,zeta_l\n0,1,abc,0\n");
        CHECK(cli({"diagnose", broken.string()}) == 2);

        auto cfg = scratch("diag_cfg");
        write(cfg / "c.json", R"({"mu": 2})");
        CHECK(cli({"diagnose", (dir / "step_001").string(), "--config", (cfg / "c.json").string(), "--out",
                   (cfg / "o").string()}) == 2);
    }
}

TEST_CASE("cli: export-plots")
{
    const auto& dir = family_dir();
    auto p0 = scratch("plots0"), p2 = scratch("plots2");
    REQUIRE(cli({"export-plots", (dir / "step_000").string(), "--out", p0.string()}) == 0);
    REQUIRE(cli({"export-plots", (dir / "step_002").string(), "--out", p2.string()}) == 0);

    auto eq0 = csv(p0 / "cut_equatorial.csv"), po0 = csv(p0 / "cut_polar.csv");
    REQUIRE(eq0.size() == po0.size());
    double d0 = 0;
    for (std::size_t k = 0; k < eq0.size(); ++k) d0 = std::max(d0, std::fabs(eq0[k][1] - po0[k][1]));
    CHECK(d0 == 0.0);

    auto eq2 = csv(p2 / "cut_equatorial.csv"), po2 = csv(p2 / "cut_polar.csv");
    double d2 = 0;
    for (std::size_t k = 0; k < eq2.size(); ++k) d2 = std::max(d2, std::fabs(eq2[k][1] - po2[k][1]));
    CHECK(d2 > 1e-6);

    for (const auto& row : csv(p0 / "support_boundary.csv")) CHECK(std::fabs(row[1] - 1) <= 1e-6);
    auto b2 = csv(p2 / "support_boundary.csv");
    CHECK(std::fabs(b2.front()[1] - b2[90][1]) > 1e-6);

    auto rt = csv(p2 / "density_rtheta.csv");
    CHECK(rt.size() == csv(dir / "step_002" / "density.csv").size() * 2);
    CHECK(cli({"export-plots", scratch("no_state").string()}) == 2);
}

TEST_CASE("cli: identical config and seed give identical bytes")
{
    auto a = scratch("det_a"), b = scratch("det_b");
    REQUIRE(cli({"continue", "--gamma-max", "1", "--gamma-steps", "1", "--seed", "9", "--out", a.string()}) == 0);
    REQUIRE(cli({"continue", "--gamma-max", "1", "--gamma-steps", "1", "--seed", "9", "--out", b.string()}) == 0);
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), a);
        if (rel == "manifest.json") continue;  // embeds the output directory
        CHECK(slurp(e.path()) == slurp(b / rel));
        ++files;
    }
    CHECK(files >= 15);
}

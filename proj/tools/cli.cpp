#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "axistar/model.hpp"
#include "axistar/operator.hpp"
#include "axistar/spherical.hpp"

namespace axistar::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using geometry::Vec3;

namespace {

constexpr double kPi = 3.14159265358979323846;

// model-defining keys; a reloaded state cannot change them
const std::vector<std::string> kModelKeys = {"mu",   "psi",     "psi_params",  "psi_table",  "nr",
                                             "nr_c", "L",       "polar_nodes", "quad_outer", "quad_inner",
                                             "base_tol"};

json config_json(const RunConfig& c)
{
    json j;
    j["mu"] = c.mu;
    j["psi"] = c.psi;
    j["psi_params"] = c.psi_params;
    j["psi_table"] = c.psi_table;
    j["gamma_max"] = c.gamma_max;
    j["gamma_steps"] = c.gamma_steps;
    j["nr"] = c.nr;
    j["nr_c"] = c.nr_c;
    j["L"] = c.L;
    j["polar_nodes"] = c.polar_nodes;
    j["newton_tol"] = c.newton_tol;
    j["base_tol"] = c.base_tol;
    j["quad_outer"] = c.quad_outer;
    j["quad_inner"] = c.quad_inner;
    j["seed"] = c.seed;
    j["n_orbits"] = c.n_orbits;
    j["t_final"] = c.t_final;
    j["out"] = c.out;
    return j;
}

void apply_json(RunConfig& c, const json& j)
{
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        try {
            if (k == "mu") c.mu = v.get<double>();
            else if (k == "psi") c.psi = v.get<std::string>();
            else if (k == "psi_params") c.psi_params = v.get<std::vector<double>>();
            else if (k == "psi_table") c.psi_table = v.get<std::string>();
            else if (k == "gamma_max") c.gamma_max = v.get<double>();
            else if (k == "gamma_steps") c.gamma_steps = v.get<int>();
            else if (k == "nr") c.nr = v.get<int>();
            else if (k == "nr_c") c.nr_c = v.get<int>();
            else if (k == "L") c.L = v.get<int>();
            else if (k == "polar_nodes") c.polar_nodes = v.get<int>();
            else if (k == "newton_tol") c.newton_tol = v.get<double>();
            else if (k == "base_tol") c.base_tol = v.get<double>();
            else if (k == "quad_outer") c.quad_outer = v.get<int>();
            else if (k == "quad_inner") c.quad_inner = v.get<int>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "n_orbits") c.n_orbits = v.get<int>();
            else if (k == "t_final") c.t_final = v.get<double>();
            else if (k == "out") c.out = v.get<std::string>();
            else throw ConfigError("config: unknown key '" + k + "'");
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + k + "': " + e.what());
        }
    }
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path)
    {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }
    Csv& operator<<(double x)
    {
        sep();
        out_ << fmt(x);
        return *this;
    }
    Csv& operator<<(int x)
    {
        sep();
        out_ << x;
        return *this;
    }
    void end()
    {
        out_ << '\n';
        first_ = true;
    }

private:
    void sep()
    {
        if (!first_) out_ << ',';
        first_ = false;
    }
    std::ofstream out_;
    bool first_ = true;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("missing file " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty file " + path.string());
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size())
                throw ConfigError("corrupt value '" + cell + "' in " + path.string());
            row.push_back(v);
        }
        if (row.size() != t.header.size()) throw ConfigError("corrupt row in " + path.string());
        t.rows.push_back(std::move(row));
    }
    return t;
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("missing file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("corrupt file " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

json check_json(const std::string& name, double value, double limit, bool pass)
{
    json j;
    j["name"] = name;
    j["value"] = std::isfinite(value) ? json(value) : json(nullptr);
    j["limit"] = limit;
    j["pass"] = pass;
    return j;
}

json failing_of(const json& checks)
{
    json f = json::array();
    for (const auto& c : checks)
        if (!c["pass"].get<bool>()) f.push_back(c["name"]);
    return f;
}

// manifest for paths that never reach the numerics
int error_exit(const std::string& command, const std::string& out, int code, const std::string& what)
{
    json m;
    m["schema"] = kSchema;
    m["command"] = command;
    m["status"] = code == kConfigError ? "input-error" : "error";
    m["failing"] = json::array({what});
    std::error_code ec;
    if (!out.empty()) {
        fs::create_directories(out, ec);
        if (!ec) write_json(fs::path(out) / "manifest.json", m);
    }
    std::cerr << command << ": " << what << '\n';
    std::cout << m.dump() << '\n';
    return code;
}

int finish(const std::string& command, const fs::path& out, json m, int code)
{
    m["exit_code"] = code;
    write_json(out / "manifest.json", m);
    json brief;
    brief["schema"] = kSchema;
    brief["command"] = command;
    brief["status"] = m["status"];
    brief["failing"] = m["failing"];
    std::cout << brief.dump() << '\n';
    return code;
}

profiles::RotationProfile make_psi(const RunConfig& c)
{
    using profiles::RotationProfile;
    const auto& p = c.psi_params;
    switch (profiles::rotation_kind_from_string(c.psi)) {
    case profiles::RotationKind::EvenGaussian:
        if (p.size() > 1) throw ConfigError("even-gaussian takes one parameter (a)");
        return p.empty() ? RotationProfile::even_gaussian() : RotationProfile::even_gaussian(p[0]);
    case profiles::RotationKind::SkewedRational:
        if (p.size() > 2) throw ConfigError("skewed-rational takes at most two parameters (b, c)");
        if (p.empty()) return RotationProfile::skewed_rational();
        return p.size() == 1 ? RotationProfile::skewed_rational(p[0]) : RotationProfile::skewed_rational(p[0], p[1]);
    case profiles::RotationKind::CustomTable:
        if (c.psi_table.empty()) throw ConfigError("custom-table needs psi_table");
        return RotationProfile::custom_table_csv(c.psi_table);
    }
    throw ConfigError("unknown psi kind");
}

struct Setup {
    spherical::RadialState base;
    std::unique_ptr<op::OperatorContext> ctx;
};

// ConfigError for bad profile parameters; anything else from the base solve propagates
Setup make_setup(const RunConfig& c)
{
    profiles::RotationProfile psi = [&] {
        try {
            return make_psi(c);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    Setup s;
    s.base = spherical::solve_base_state(c.mu, {c.nr, c.base_tol});
    profiles::DensityIntegrals prof(profiles::PolytropeProfile(c.mu, s.base.e0), psi, {c.quad_outer, c.quad_inner});
    op::Discretization disc;
    disc.grid = geometry::GridSpec{c.L, c.nr_c, 3.0};
    disc.polar_nodes = c.polar_nodes;
    s.ctx = std::make_unique<op::OperatorContext>(s.base, prof, disc);
    return s;
}

json base_checks(const spherical::RadialState& s)
{
    auto rep = spherical::check_invariants(s);
    json c = json::array();
    c.push_back(check_json("U0(1)=E0", rep.boundary_error, 1e-8, rep.boundary_error <= 1e-8));
    c.push_back(check_json("U0' integral identity", rep.integral_identity, 1e-8, rep.integral_identity <= 1e-8));
    c.push_back(check_json("rho0 = h(0, U0)", rep.self_consistency, 1e-7, rep.self_consistency <= 1e-7));
    c.push_back(check_json("U0''(0) = 4 pi rho0(0)/3", rep.center_curvature, 1e-4, rep.center_curvature <= 1e-4));
    c.push_back(check_json("rho0 monotone", rep.rho_monotone ? 0 : 1, 0, rep.rho_monotone));
    c.push_back(check_json("U0 monotone", rep.u_monotone ? 0 : 1, 0, rep.u_monotone));
    return c;
}

json state_checks(const model::AxisymmetricState& st)
{
    json c = json::array();
    for (const auto& k : st.checks) c.push_back(check_json(k.name, k.value, k.limit, k.pass));
    return c;
}

void write_base_csv(const fs::path& path, const spherical::RadialState& s)
{
    Csv csv(path, {"r", "rho0", "u0", "u0_prime", "u0_second"});
    for (std::size_t i = 0; i < s.r.size(); ++i) {
        csv << s.r[i] << s.rho0[i] << s.u0[i] << s.u0_prime[i] << s.u0_second[i];
        csv.end();
    }
}

Vec3 meridional(double r, double c) { return {r * std::sqrt(std::max(0.0, 1 - c * c)), 0.0, r * c}; }

json orbit_json(const model::StationarityReport& rep)
{
    json o;
    o["dt"] = rep.dt;
    o["t_final"] = rep.t_final;
    o["orbits"] = rep.orbits.size();
    o["max_energy_drift"] = rep.max_energy;
    o["max_momentum_drift"] = rep.max_momentum;
    o["max_f_drift"] = rep.max_f;
    o["escaped"] = rep.escaped;
    return o;
}

void write_orbits(const fs::path& path, const model::StationarityReport& rep)
{
    Csv csv(path, {"orbit", "energy_drift", "momentum_drift", "f_drift", "escaped"});
    for (std::size_t n = 0; n < rep.orbits.size(); ++n) {
        const auto& o = rep.orbits[n];
        csv << static_cast<int>(n) << o.energy << o.momentum << o.f << (o.escaped ? 1 : 0);
        csv.end();
    }
}

constexpr double kCurrentZero = 1e-12;

// one exported state directory; returns the step summary for the manifest
json export_state(const fs::path& dir, const RunConfig& cfg, const model::AxisymmetricState& st,
                  const op::ContinuationStep& step)
{
    fs::create_directories(dir);
    const auto& rho = *st.density;
    const auto& P = rho.panels();
    const int H = rho.polar_count(), S = rho.sectors();

    {
        Csv csv(dir / "deformation.csv", {"l", "k", "r", "zeta_l"});
        const auto& f = st.deformation;
        for (int s = 0; s < f.sectors(); ++s)
            for (int k = 1; k <= f.nr(); ++k) {
                csv << 2 * s << k << f.knots()[k] << f.coeff(s, k);
                csv.end();
            }
    }
    {
        Csv csv(dir / "density.csv", {"i", "j", "r", "cos_theta", "rho"});
        for (int i = 0; i < rho.radial_count(); ++i)
            for (int j = 0; j < H; ++j) {
                csv << i << j << P.node(i) << rho.cos_node(j) << rho.value(i, j);
                csv.end();
            }
    }
    {
        Csv csv(dir / "density_moments.csv", {"l", "i", "r", "rho_l"});
        for (int s = 0; s < S; ++s)
            for (int i = 0; i < rho.radial_count(); ++i) {
                csv << 2 * s << i << P.node(i) << rho.moment(s, i);
                csv.end();
            }
    }
    {
        Csv csv(dir / "potential_moments.csv", {"l", "i", "r", "u_l"});
        for (int s = 0; s < S; ++s)
            for (int i = 0; i < rho.radial_count(); ++i) {
                double R = 0, dR = 0, d2R = 0;
                st.potential->radial(s, P.node(i), &R, &dR, &d2R);
                double v = -4 * kPi / (4 * s + 1) * R + (s == 0 ? st.constant_c : 0.0);
                csv << 2 * s << i << P.node(i) << v;
                csv.end();
            }
    }
    auto cf = model::velocity_moments(st);
    {
        Csv csv(dir / "current.csv", {"i", "j", "r", "cos_theta", "j_magnitude", "rho", "average_velocity"});
        for (int i = 0; i < rho.radial_count(); ++i)
            for (int j = 0; j < H; ++j) {
                int k = i * H + j;
                csv << i << j << cf.radii[i] << cf.cosines[j] << cf.magnitude[k] << cf.density[k]
                    << cf.average_velocity[k];
                csv.end();
            }
    }
    auto orbits = model::stationarity_check(st, cfg.n_orbits, cfg.t_final, 0.0, cfg.seed);
    write_orbits(dir / "orbits.csv", orbits);

    json checks = state_checks(st);
    json s;
    s["schema"] = kSchema;
    s["kind"] = "state";
    s["gamma"] = st.gamma;
    s["config"] = config_json(cfg);
    s["config"].erase("out");
    s["e0"] = st.e0;
    s["mass"] = st.mass;
    s["constant_c"] = st.constant_c;
    s["multipoles"] = st.multipoles;
    s["quadrupole_over_monopole"] = st.sphericity();
    s["boundary"]["cos_theta"] = st.boundary_cos;
    s["boundary"]["radius"] = st.boundary_radius;
    s["newton"]["iterations"] = step.newton.iterations;
    s["newton"]["residuals"] = step.newton.residuals;
    s["newton"]["sector_condition"] = step.newton.sector_condition;
    s["residual"] = step.residual;
    s["x_norm"] = step.x_norm;
    s["legendre_tail"] = step.tail;
    s["current_max"] = cf.max_magnitude();
    s["current_all_zero"] = cf.max_magnitude() <= kCurrentZero;
    s["orbits"] = orbit_json(orbits);
    s["checks"] = checks;
    s["flagged"] = st.flagged;
    write_json(dir / "state.json", s);

    json m;
    m["gamma"] = st.gamma;
    m["dir"] = dir.filename().string();
    m["iterations"] = step.newton.iterations;
    m["residuals"] = step.newton.residuals;
    m["residual"] = step.residual;
    m["x_norm"] = step.x_norm;
    m["legendre_tail"] = step.tail;
    m["sector_condition"] = step.newton.sector_condition;
    m["quadrupole_over_monopole"] = st.sphericity();
    m["current_all_zero"] = cf.max_magnitude() <= kCurrentZero;
    m["orbits"] = orbit_json(orbits);
    m["flagged"] = st.flagged;
    m["failing"] = failing_of(checks);
    return m;
}

struct Loaded {
    RunConfig cfg;
    Setup setup;
    json state_json;
    std::unique_ptr<model::AxisymmetricState> state;
};

// ConfigError for missing or malformed files
Loaded load_state(const fs::path& dir, const std::string& overrides)
{
    if (!fs::is_directory(dir)) throw ConfigError("missing state directory " + dir.string());
    Loaded L;
    L.state_json = read_json(dir / "state.json");
    if (L.state_json.value("schema", "") != kSchema) throw ConfigError("state.json: unknown schema");
    try {
        apply_json(L.cfg, L.state_json.at("config"));
        if (!overrides.empty()) {
            json ov = json::parse(overrides);
            for (const auto& k : kModelKeys)
                if (ov.contains(k) && ov[k] != config_json(L.cfg)[k])
                    throw ConfigError("config: '" + k + "' differs from the exported state");
            apply_json(L.cfg, ov);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("state.json: ") + e.what());
    }
    L.cfg.validate();
    double gamma = L.state_json.at("gamma").get<double>();
    L.setup = make_setup(L.cfg);
    const auto& ctx = *L.setup.ctx;

    auto def = read_csv(dir / "deformation.csv");
    if (static_cast<int>(def.rows.size()) != ctx.unknowns()) throw ConfigError("deformation.csv: wrong row count");
    std::vector<double> coeffs;
    for (const auto& r : def.rows) coeffs.push_back(r.at(3));
    geometry::DeformationField field(ctx.grid(), coeffs);

    auto den = read_csv(dir / "density.csv");
    if (static_cast<int>(den.rows.size()) != ctx.panels()->node_count() * ctx.half_count())
        throw ConfigError("density.csv: wrong row count");
    std::vector<double> values;
    for (const auto& r : den.rows) values.push_back(r.at(4));
    field::AxiField rho(ctx.panels(), ctx.polar(), values);
    L.state = std::make_unique<model::AxisymmetricState>(
        model::assemble_from_density(gamma, field, std::move(rho), ctx.base(), ctx.profiles()));
    return L;
}

}  // namespace

void RunConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (!(mu > -0.5 && mu < 3.5)) fail("mu must lie in (-1/2, 7/2)");
    try {
        profiles::rotation_kind_from_string(psi);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (!(gamma_max >= 0) || !std::isfinite(gamma_max)) fail("gamma_max must be finite and >= 0");
    if (gamma_steps < 1) fail("gamma_steps must be >= 1");
    if (nr < 16) fail("nr must be >= 16");
    if (nr_c < 8) fail("nr_c must be >= 8");
    if (L < 0 || L % 2) fail("L must be even and >= 0");
    if (polar_nodes < 4 || polar_nodes % 2) fail("polar_nodes must be even and >= 4");
    if (L > polar_nodes - 2) fail("L must not exceed polar_nodes - 2");
    if (!(newton_tol > 0) || !(base_tol > 0)) fail("tolerances must be > 0");
    if (quad_outer < 4 || quad_inner < 4) fail("quadrature orders must be >= 4");
    if (n_orbits < 0) fail("n_orbits must be >= 0");
    if (!(t_final > 0)) fail("t_final must be > 0");
    if (out.empty()) fail("out must be set");
}

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

void apply_config_json(RunConfig& cfg, const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    apply_json(cfg, j);
}

RunConfig load_config_file(const std::string& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_json(base, ss.str());
    return base;
}

int cmd_solve_spherical(const RunConfig& cfg)
{
    const std::string name = "solve-spherical";
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        return error_exit(name, cfg.out, kConfigError, e.what());
    }
    fs::path out(cfg.out);
    fs::create_directories(out);
    json m;
    m["schema"] = kSchema;
    m["command"] = name;
    m["config"] = config_json(cfg);
    spherical::RadialState s;
    try {
        s = spherical::solve_base_state(cfg.mu, {cfg.nr, cfg.base_tol});
    } catch (const std::exception& e) {
        m["status"] = "error";
        m["failing"] = json::array({std::string("base state: ") + e.what()});
        return finish(name, out, m, kFailure);
    }
    write_base_csv(out / "base_state.csv", s);
    json checks = base_checks(s);
    m["mu"] = s.mu;
    m["e0"] = s.e0;
    m["mass"] = s.mass;
    m["nr"] = s.nr;
    m["warnings"] = s.warnings;
    m["checks"] = checks;
    m["failing"] = failing_of(checks);
    bool ok = m["failing"].empty();
    m["status"] = ok ? "ok" : "failed";
    return finish(name, out, m, ok ? kOk : kFailure);
}

int cmd_continue(const RunConfig& cfg)
{
    const std::string name = "continue";
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        return error_exit(name, cfg.out, kConfigError, e.what());
    }
    fs::path out(cfg.out);
    fs::create_directories(out);
    json m;
    m["schema"] = kSchema;
    m["command"] = name;
    m["config"] = config_json(cfg);

    Setup setup;
    try {
        setup = make_setup(cfg);
    } catch (const ConfigError& e) {
        return error_exit(name, cfg.out, kConfigError, e.what());
    } catch (const std::exception& e) {
        m["status"] = "error";
        m["failing"] = json::array({std::string("setup: ") + e.what()});
        return finish(name, out, m, kFailure);
    }
    json bchecks = base_checks(setup.base);
    m["base_state"]["e0"] = setup.base.e0;
    m["base_state"]["mass"] = setup.base.mass;
    m["base_state"]["checks"] = bchecks;
    write_base_csv(out / "base_state.csv", setup.base);

    std::vector<double> gammas{0.0};
    if (cfg.gamma_max > 0)
        for (int k = 1; k <= cfg.gamma_steps; ++k) gammas.push_back(cfg.gamma_max * k / cfg.gamma_steps);
    op::NewtonOptions opt;
    opt.tol = cfg.newton_tol;
    auto run = op::continue_along(*setup.ctx, gammas, opt);

    json steps = json::array(), failing = failing_of(bchecks);
    try {
        for (std::size_t k = 0; k < run.steps.size(); ++k) {
            const auto& step = run.steps[k];
            auto st = model::assemble(*setup.ctx, step.gamma, step.field);
            char dir[32];
            std::snprintf(dir, sizeof dir, "step_%03zu", k);
            json sj = export_state(out / dir, cfg, st, step);
            for (const auto& f : sj["failing"]) failing.push_back(std::string(dir) + ": " + f.get<std::string>());
            steps.push_back(sj);
        }
    } catch (const std::exception& e) {
        m["steps"] = steps;
        m["status"] = "error";
        failing.push_back(std::string("assembly: ") + e.what());
        m["failing"] = failing;
        return finish(name, out, m, kFailure);
    }
    m["steps"] = steps;
    m["gamma_requested"] = cfg.gamma_max;
    m["gamma_reached"] = run.gamma_reached();
    m["truncated"] = run.truncated;
    m["stop_reason"] = run.stop_reason;
    m["failing"] = failing;
    bool ok = failing.empty() && !run.steps.empty();
    m["status"] = !ok ? "failed" : run.truncated ? "truncated" : "ok";
    return finish(name, out, m, ok ? kOk : kFailure);
}

int cmd_diagnose(const std::string& state_dir, const std::string& overrides, const std::string& out_arg)
{
    const std::string name = "diagnose";
    fs::path out = out_arg.empty() ? fs::path(state_dir) / "diagnose" : fs::path(out_arg);
    Loaded L;
    try {
        L = load_state(state_dir, overrides);
    } catch (const ConfigError& e) {
        return error_exit(name, fs::is_directory(state_dir) ? out.string() : "", kConfigError, e.what());
    } catch (const std::exception& e) {
        return error_exit(name, fs::is_directory(state_dir) ? out.string() : "", kFailure, e.what());
    }
    fs::create_directories(out);
    const auto& st = *L.state;
    const auto& ctx = *L.setup.ctx;
    json checks = state_checks(st);

    std::vector<std::array<double, 3>> map;
    auto pr = model::poisson_residual(st, model::kShell, &map);
    {
        Csv csv(out / "poisson_residual.csv", {"r", "cos_theta", "residual"});
        for (const auto& p : map) {
            csv << p[0] << p[1] << p[2];
            csv.end();
        }
    }

    auto sectors = op::sector_reports(ctx.base(), ctx.grid());
    {
        Csv csv(out / "sector_norms.csv", {"l", "norm_inf", "norm_2", "sigma_min", "bound"});
        for (const auto& s : sectors) {
            csv << s.l << s.norm_inf << s.norm_2 << s.sigma_min << s.bound;
            csv.end();
        }
    }
    for (const auto& s : sectors) {
        std::string l = std::to_string(s.l);
        if (s.l >= 2)
            checks.push_back(check_json("||K_" + l + "|| <= 3/(2l+1) + 0.02", s.norm_inf, s.bound + 0.02,
                                        s.norm_inf <= s.bound + 0.02));
        checks.push_back(check_json("sigma_min(id - K_" + l + ") > 1e-3", s.sigma_min, 1e-3, s.sigma_min > 1e-3));
    }

    auto orbits = model::stationarity_check(st, L.cfg.n_orbits, L.cfg.t_final, 0.0, L.cfg.seed);
    write_orbits(out / "orbits.csv", orbits);
    checks.push_back(check_json("orbit P drift", orbits.max_momentum, 1e-10, orbits.max_momentum <= 1e-10));
    checks.push_back(check_json("orbit f drift", orbits.max_f, 1e-6, orbits.max_f <= 1e-6));
    checks.push_back(check_json("orbits stay in the domain", orbits.escaped, 0, orbits.escaped == 0));

    auto cf = model::velocity_moments(st);
    if (st.profiles->rotation().is_even())
        checks.push_back(check_json("even psi: no current", cf.max_magnitude(), kCurrentZero,
                                    cf.max_magnitude() <= kCurrentZero));

    json m;
    m["schema"] = kSchema;
    m["command"] = name;
    m["state_dir"] = state_dir;
    m["gamma"] = st.gamma;
    m["config"] = config_json(L.cfg);
    m["poisson"]["max_residual"] = pr.max_residual;
    m["poisson"]["r"] = pr.r;
    m["poisson"]["cos_theta"] = pr.c;
    m["poisson"]["points"] = pr.points;
    json sn = json::array();
    for (const auto& s : sectors) {
        json j;
        j["l"] = s.l;
        j["norm_inf"] = s.norm_inf;
        j["norm_2"] = s.norm_2;
        j["sigma_min"] = s.sigma_min;
        j["bound"] = s.bound;
        sn.push_back(j);
    }
    m["sector_norms"] = sn;
    m["orbits"] = orbit_json(orbits);
    m["quadrupole_over_monopole"] = st.sphericity();
    m["current_max"] = cf.max_magnitude();
    m["checks"] = checks;
    m["failing"] = failing_of(checks);
    bool ok = m["failing"].empty();
    m["status"] = ok ? "ok" : "failed";
    return finish(name, out, m, ok ? kOk : kFailure);
}

int cmd_export_plots(const std::string& state_dir, const std::string& out_arg)
{
    const std::string name = "export-plots";
    fs::path out = out_arg.empty() ? fs::path(state_dir) / "plots" : fs::path(out_arg);
    Loaded L;
    try {
        L = load_state(state_dir, "");
    } catch (const ConfigError& e) {
        return error_exit(name, fs::is_directory(state_dir) ? out.string() : "", kConfigError, e.what());
    } catch (const std::exception& e) {
        return error_exit(name, fs::is_directory(state_dir) ? out.string() : "", kFailure, e.what());
    }
    fs::create_directories(out);
    const auto& st = *L.state;
    const auto& base = L.setup.base;
    const auto& rho = *st.density;
    const auto& P = rho.panels();
    const int H = rho.polar_count();

    {
        Csv dcsv(out / "density_rtheta.csv", {"r", "theta", "rho"});
        Csv ucsv(out / "potential_rtheta.csv", {"r", "theta", "U"});
        for (int i = 0; i < rho.radial_count(); ++i) {
            // theta ascending over the full meridian; lower half by reflection
            for (int j = H - 1; j >= 0; --j) {
                double c = rho.cos_node(j), th = std::acos(c);
                dcsv << P.node(i) << th << rho.value(i, j);
                dcsv.end();
                ucsv << P.node(i) << th << st.u(meridional(P.node(i), c));
                ucsv.end();
            }
            for (int j = 0; j < H; ++j) {
                double c = rho.cos_node(j), th = kPi - std::acos(c);
                dcsv << P.node(i) << th << rho.value(i, j);
                dcsv.end();
                ucsv << P.node(i) << th << st.u(meridional(P.node(i), -c));
                ucsv.end();
            }
        }
    }
    // rho(x) = h(gamma, r(x), U0(g^-1(x)))
    auto cut = [&](const fs::path& path, double c) {
        Csv csv(path, {"s", "rho", "U"});
        for (int k = 0; k <= 200; ++k) {
            double s = 0.01 * k;
            Vec3 x = meridional(s, c);
            double t = geometry::g_invert_radius(st.deformation, c, s);
            double r = std::hypot(x[0], x[1]);
            csv << s << st.profiles->h(st.gamma, r, base.u0_at(t)) << st.u(x);
            csv.end();
        }
    };
    cut(out / "cut_equatorial.csv", 0.0);
    cut(out / "cut_polar.csv", 1.0);
    {
        Csv csv(out / "support_boundary.csv", {"theta", "radius", "x1", "x3"});
        for (int k = 0; k <= 180; ++k) {
            double th = kPi * k / 180, c = std::cos(th);
            if (k == 90) c = 0;
            double sb = st.support_radius(c);
            csv << th << sb << sb * std::sin(th) << sb * c;
            csv.end();
        }
    }
    json m;
    m["schema"] = kSchema;
    m["command"] = name;
    m["state_dir"] = state_dir;
    m["gamma"] = st.gamma;
    m["files"] = {"density_rtheta.csv", "potential_rtheta.csv", "cut_equatorial.csv", "cut_polar.csv",
                  "support_boundary.csv"};
    m["status"] = "ok";
    m["failing"] = json::array();
    return finish(name, out, m, kOk);
}

int run(int argc, const char* const* argv)
{
    CLI::App app{"Axisymmetric steady states of the Vlasov-Poisson system by deformation of a spherical polytrope.\n"
                 "VP_AXISTAR_THREADS caps worker threads."};
    app.require_subcommand(1);

    std::string config_path, out, psi, state_dir;
    double mu = 0, gamma_max = 0, tol = 0;
    int gamma_steps = 0;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub, bool model_flags) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "seed for diagnostic sampling");
        if (model_flags) {
            sub->add_option("--mu", mu, "polytropic exponent");
            sub->add_option("--gamma-max", gamma_max, "largest gamma");
            sub->add_option("--gamma-steps", gamma_steps, "continuation steps");
            sub->add_option("--psi", psi, "even-gaussian | skewed-rational | custom-table");
            sub->add_option("--tol", tol, "Newton tolerance");
        }
    };
    auto* solve = app.add_subcommand("solve-spherical", "solve the spherical base state");
    common(solve, true);
    auto* cont = app.add_subcommand("continue", "continue the family in gamma and export every state");
    common(cont, true);
    auto* diag = app.add_subcommand("diagnose", "re-check an exported state");
    common(diag, false);
    diag->add_option("state_dir", state_dir, "exported state directory")->required();
    auto* plots = app.add_subcommand("export-plots", "write plot tables for an exported state");
    plots->add_option("--out", out, "output directory");
    plots->add_option("state_dir", state_dir, "exported state directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::string cmd = app.get_subcommands().empty() ? "vp_axistar" : app.get_subcommands()[0]->get_name();
        return error_exit(cmd, "", kConfigError, e.what());
    }

    auto given = [](CLI::App* sub, const char* flag) { return sub->count(flag) > 0; };

    if (*solve || *cont) {
        CLI::App* sub = *solve ? solve : cont;
        RunConfig cfg;
        try {
            if (given(sub, "--config")) cfg = load_config_file(config_path);
        } catch (const ConfigError& e) {
            return error_exit(sub->get_name(), given(sub, "--out") ? out : cfg.out, kConfigError, e.what());
        }
        if (given(sub, "--out")) cfg.out = out;
        if (given(sub, "--mu")) cfg.mu = mu;
        if (given(sub, "--gamma-max")) cfg.gamma_max = gamma_max;
        if (given(sub, "--gamma-steps")) cfg.gamma_steps = gamma_steps;
        if (given(sub, "--psi")) {
            if (psi != cfg.psi) cfg.psi_params.clear();
            cfg.psi = psi;
        }
        if (given(sub, "--tol")) cfg.newton_tol = tol;
        if (given(sub, "--seed")) cfg.seed = seed;
        return *solve ? cmd_solve_spherical(cfg) : cmd_continue(cfg);
    }
    if (*diag) {
        json ov = json::object();
        try {
            if (given(diag, "--config")) {
                std::ifstream in(config_path);
                if (!in) throw ConfigError("config: cannot open " + config_path);
                ov = json::parse(in);
                ov.erase("out");
            }
        } catch (const std::exception& e) {
            return error_exit("diagnose", out, kConfigError, e.what());
        }
        if (given(diag, "--seed")) ov["seed"] = seed;
        return cmd_diagnose(state_dir, ov.empty() ? "" : ov.dump(), given(diag, "--out") ? out : "");
    }
    return cmd_export_plots(state_dir, plots->count("--out") ? out : "");
}

}  // namespace axistar::cli

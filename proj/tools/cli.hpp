#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace axistar::cli {

inline constexpr const char* kSchema = "vp-axistar/1";

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double mu = 1.0;
    std::string psi = "skewed-rational";
    std::vector<double> psi_params;  // empty: the kind's defaults
    std::string psi_table;           // csv path for custom-table
    double gamma_max = 1.0;
    int gamma_steps = 4;
    int nr = 256;          // base-state radial nodes
    int nr_c = 64;         // deformation knots
    int L = 8;
    int polar_nodes = 32;
    double newton_tol = 1e-10;
    double base_tol = 1e-12;
    int quad_outer = 24, quad_inner = 24;
    std::uint64_t seed = 1;
    int n_orbits = 8;
    double t_final = 2.0;
    std::string out = "out";

    /// throws ConfigError
    void validate() const;
};

/// JSON text of the resolved config (keys in a fixed order)
std::string config_to_json(const RunConfig& cfg);
/// overlay the keys of a JSON object onto cfg; unknown keys are an error
void apply_config_json(RunConfig& cfg, const std::string& text);
RunConfig load_config_file(const std::string& path, RunConfig base = {});

int cmd_solve_spherical(const RunConfig& cfg);
int cmd_continue(const RunConfig& cfg);
/// overrides: JSON object applied on top of the state's embedded config (diagnostic keys only);
/// out empty: <state_dir>/diagnose
int cmd_diagnose(const std::string& state_dir, const std::string& overrides, const std::string& out);
/// out empty: <state_dir>/plots
int cmd_export_plots(const std::string& state_dir, const std::string& out);

/// full command line; returns the process exit code
int run(int argc, const char* const* argv);

}  // namespace axistar::cli

#ifndef CERTIFY_PIPELINE_HPP
#define CERTIFY_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "certify/cert.hpp"

namespace certify {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    std::string mode = "stability";  // stability|dissipativity|passivity|ofp|ifp|qsr|l2gain
    std::string approx = "auto";     // auto|exact|taylor|bernstein
    int order = 5;                   // taylor order k
    int mu = 6;                      // bernstein degree per variable
    std::string variant = "ellipsoid";  // box|ellipsoid (taylor error handling)
    int vdeg = 4;
    int sdeg = 2;
    int edeg = -1;                   // error multiplier degree, -1 = auto
    double lambda = 1e-6;
    double tol = 1e-7;
    int max_iter = 200;
    int gram_cap = 400;
    int con_cap = 20000;
    uint64_t seed = 42;
    int samples = 10000;
    int subdivisions = 1;            // remainder-bound subdivisions
    std::string berr = "empirical";  // bernstein error mode for runs: lipschitz|empirical
    std::string remainder = "per-beta";  // per-beta|uniform
    double radius = 0.0;             // > 0: replace the region by the 2-norm ball
    double rho = 0.0, nu = 0.0, gamma = 1.0;  // fixed indices / gain
    std::string qsr;                 // "q11,q12;.../s.../r..." matrices
    std::string out;                 // output path for certificates / files
    std::vector<double> radii;       // sweep radii
    bool bisection = false;          // force the bisection fallback in index mode
};

// scan flat key=value text (config files and embedded option lines)
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_config_file(RunConfig& cfg, const std::string& path);

struct RunResult {
    int exit_code = 3;
    std::string message;
    SdpStatus solver_status = SdpStatus::stalled;
    std::optional<Certificate> cert;
    std::string cert_json;   // certificate or diagnostic document
    double index = 0.0;      // for index runs
    double bracket = 0.0;    // bisection bracket width (0 when direct)
};

// Region substitution for radius runs: per-state box [-r, r] plus the
// 2-norm ball inequality |x|^2 <= r^2.
void apply_ball_region(SystemModel& model, double radius);

RunResult run_verify(const SystemModel& model, const RunConfig& cfg);
RunResult run_index(const SystemModel& model, const RunConfig& cfg);

struct SweepRow {
    double radius = 0.0;
    double index = 0.0;
    std::string status;  // "ok" | "infeasible" | "error"
    std::string cert_json;
};

std::vector<SweepRow> run_sweep(const SystemModel& model, const RunConfig& cfg);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct ExportResult {
    std::string sdpa_text;
    int num_con = 0;
    int num_free = 0;
    std::vector<int> block_sizes;
};

ExportResult run_export(const SystemModel& model, const RunConfig& cfg);

} // namespace certify

#endif

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "palab/bandit.hpp"

namespace palab {

struct InstanceSource {
    std::string file;  // empty selects the generator
    RandomInstanceParams params;
    bool gapped = true;
    GapRequirements gaps;
    std::uint64_t seed = 42;
};

struct OracleSizes {
    int revelation_instances = 200;
    int sector_cases = 500;
    int accuracy_instances = 20;
    int coverage_replications = 500;
    long coverage_T = 4096;
    int containment_instances = 50;
    int containment_points = 1000;
    double corrupt_vbar = 0.0;  // > 0 builds the containment polytope from noisy v_bar (negative control)
};

struct ExperimentConfig {
    InstanceSource instance;
    AgentModel agent{AgentKind::SlackAdversarial, {}};
    std::string algorithm = "known_T";  // known_T | doubling | classical_baseline | estimation_only
    std::vector<long> T_list{1024};
    int replications = 1;
    std::uint64_t base_seed = 1;
    int threads = 1;
    BanditConfig bandit;
    double estimation_n = 65536;  // n used for estimation-only budgets
    std::string out_dir = "palab_out";
    long trace_stride = 0;  // per-round CSV stride; 0 keeps about 512 rows per run
    std::vector<std::string> oracles;  // empty runs every oracle
    OracleSizes oracle_sizes;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);
ProblemInstance load_instance(const InstanceSource& src);

struct TracePoint {
    long t;
    double regret;
    std::uint64_t mech_hash;
    Phase phase;
};

struct ReplicationResult {
    long T = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string failure;
    double regret = 0.0;
    double realized_reward = 0.0;
    long stage1_rounds = 0;
    long n = 0;
    double angle_error = -1.0;  // D(alpha, alpha_hat) when estimation ran
    long rounds = 0;
    std::vector<TracePoint> trace;
};

struct RegretFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool valid = false;
};

// Least squares fit of log y against log x.
RegretFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentResult {
    std::vector<ReplicationResult> runs;  // sorted by (T, replication)
    nlohmann::json report;
};

ReplicationResult run_replication(const ExperimentConfig& config, const ProblemInstance& inst, long T, int rep);
ExperimentResult run_experiment(const ExperimentConfig& config);
// Writes per_round.csv, summary.csv, report.json and regret.svg into config.out_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);
// Rebuilds report.json fields and regret.svg from an existing summary.csv and per_round.csv.
nlohmann::json report_from_dir(const std::string& dir);

struct OracleOutcome {
    std::string name;
    bool passed = false;
    long checked = 0;
    long failures = 0;
    std::string detail;
};

std::vector<std::string> oracle_names();
std::vector<OracleOutcome> oracle_suite(const ExperimentConfig& config);
nlohmann::json oracle_report(const std::vector<OracleOutcome>& outcomes);

// Moves each type's angles by an l1 distance of at most radius.
RewardAngles perturb_angles(const RewardAngles& truth, double radius, Rng& rng);
// Number of violated weak IC constraints <vbar_s, Pi_s - Pi_t> >= -tol.
long ic_violations(const Mat& mech, const Mat& vbar, double tol);

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series,
                           bool log_x, bool log_y);

}  // namespace palab

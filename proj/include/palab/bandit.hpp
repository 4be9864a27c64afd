#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "palab/ellipsoid.hpp"
#include "palab/env.hpp"
#include "palab/estimator.hpp"
#include "palab/lp.hpp"

namespace palab {

struct RadiusParams {
    double lambda = 1.0;
    double delta = 0.1;
    double B = 1.0;
    double d_term = 1.0;  // dimension inside the sqrt(lambda d) B term
    double noise_scale = 4.0;
};

double ellipsoid_radius(double log_det_ratio, const RadiusParams& params);

// Sufficient statistics of ridge regression on vectorized mechanisms.
class RidgeAccumulator {
public:
    RidgeAccumulator(int dim, double lambda);
    void add(const Vec& x, double reward);
    ConfidenceEllipsoid ellipsoid(const RadiusParams& params) const;
    int samples() const { return samples_; }

private:
    Mat gram_;
    Vec xy_;
    double lambda_;
    int samples_ = 0;
};

ConfidenceEllipsoid ridge_update(const std::vector<std::pair<Mat, double>>& data, const RadiusParams& params);

// Largest n with (n + 2)(ceil(ln n)^2 + 1) + ceil(ln n)^6 <= T; 0 if none.
long split_horizon(long T);
long episode_length(long n);
long ceil_log(double n);

struct BanditConfig {
    double lambda = 1.0;
    double delta = 0.1;
    double margin = 1e-6;
    double noise_scale = 4.0;
    bool ambient_dim_radius = false;  // use d|Theta| instead of d in the sqrt(lambda d) B term
    std::optional<double> radius_override;
    std::optional<double> pess_radius;  // defaults to eps_target
    double eps_target = 0.0;            // 0 selects 1/n
    long T_sec = 0;                     // 0 selects the estimation-budget default
    double f_min_hint = 0.1;
    bool inject_true_angles = false;
    bool enforce_stage1_cap = true;
    std::uint64_t seed = 0;
    int doubling_first_k = 1;
    std::string tail_rule = "repeat_last";  // or "greedy": argmax of the ridge estimate over the vertices
};

struct BlockLog {
    long k = 0;
    long head = 0;
    double beta_norm = 0.0;
    double radius = 0.0;
    int vertex = -1;
    double optimistic_value = 0.0;
    double block_reward = 0.0;
    double log_det = 0.0;
    bool covered = false;
};

struct BanditResult {
    bool ok = true;
    std::string failure_stage;
    std::string failure_message;
    long T = 0;
    long n = 0;
    long ell = 0;
    long stage1_rounds = 0;
    long stage1_cap = 0;
    EstimatedAngles estimation;
    std::vector<BlockLog> blocks;
    bool covered_all = true;
    long optimism_violations = 0;
    bool log_det_monotone = true;
    double regret = 0.0;
    double realized_reward = 0.0;
    int episodes = 0;
    int failed_episodes = 0;  // doubling only; ok reflects the final episode
};

struct StageTwoPlan {
    long n = 0;
    long ell = 0;
    long end = 0;  // last round of the horizon
    std::vector<Mat> vertices;
    std::optional<Vec> beta_star;  // oracle coefficients in message coordinates, for diagnostics
};

// Delayed-feedback LinUCB over a fixed polytope: ell dummy rounds, n blocks of ell + 1 rounds, then tail.
void run_stage_two(Environment& env, const StageTwoPlan& plan, const BanditConfig& config, BanditResult& result);

BanditResult pess_opt_linucb(Environment& env, long T, const BanditConfig& config, std::ostream* trace = nullptr);
BanditResult doubling_pipeline(Environment& env, long total_rounds, const BanditConfig& config);
BanditResult classical_linucb(Environment& env, const PessimisticPolytope& polytope, long T,
                              const BanditConfig& config);

// beta*_{s,x} = f(theta_s) u(theta_s, x) with message s played by type align[s].
Vec beta_star(const RewardProfile& profile, const std::vector<int>& align);

}  // namespace palab

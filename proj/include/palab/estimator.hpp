#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "palab/env.hpp"
#include "palab/geometry.hpp"

namespace palab {

struct EstimationBudget {
    double n = 65536.0;
    long T_sec = 10000;
    long L_delay = 144;
    double eps_target = 1e-4;
    int grid_N = 24;
    double grid_guard = 1.0;  // offset of the first grid interval, in units of iota
    double pen_guard = 2.0;   // offset past the matched anchors, in units of iota
    double kappa = 16.0;      // accuracy ratio between consecutive coordinates
    double e_slack = 0.09;    // the tail weight e of the last-coordinate mechanism
    double sign_factor = 0.5;
    double r_d = 0.0;  // 0 selects default_rd(d)

    // Final sector width for coordinate i (1-based).
    double width(int i) const;
    // Binary-search depth for the last coordinate.
    int depth(int d) const;
};

// Paper-shaped defaults: T_sec = max(min(ceil(ln n)^4, 1e4), ceil(ln(1/fail)/f_min)), L = ceil(ln n)^2.
EstimationBudget make_budget(double n, double f_min, int d, double eps_target, double fail_prob = 0.01);

struct EstimatedAngles {
    RewardAngles angles;
    long rounds_used = 0;
    long tests = 0;
    bool ok = false;
    std::string failure_stage;
    std::string failure_message;
};

struct CoordinateContext {
    int i = 1;                     // coordinate being estimated, 1-based
    std::vector<Vec> tails;        // per label: estimates of coordinates i+1..d-2
    std::vector<int> matched;      // labels in M, in matching order
    std::vector<double> matched_angles;
};

struct TestCounts {
    std::vector<long> counts;  // reports per mechanism row
    long total() const;
};

class AngleEstimator {
public:
    AngleEstimator(Environment& env, EstimationBudget budget, Isometry iso, std::uint64_t seed,
                   std::ostream* trace = nullptr);

    int d() const { return d_; }
    int n_labels() const { return n_labels_; }
    long rounds_used() const { return rounds_; }
    long tests() const { return tests_; }
    const EstimationBudget& budget() const { return budget_; }

    // Deploys the mechanism whose rows are 1/d + r iso^{-1}(w_s) for T_sec rounds plus L dummy rounds.
    TestCounts deploy(const std::vector<Vec>& rows, const char* stage);

    bool sec_test(double alpha, double delta);
    std::vector<double> binary_search_last();

    bool con_sec_test(double alpha, double delta, int s, const CoordinateContext& ctx);
    double bin_search_interval(double u1, double u2, int s, const CoordinateContext& ctx, double eps);
    // Fills ctx.matched up to |Theta| - 2 labels.
    void grid_search(CoordinateContext& ctx);

    TestCounts modified_test(double alpha, double delta, int q, const CoordinateContext& ctx);
    // Appends the penultimate label and its estimate to ctx.matched.
    void estimate_penultimate(CoordinateContext& ctx);

    Vec estimate_prior(const CoordinateContext& ctx);
    // +1 when the remaining label lies below pi/2, -1 otherwise.
    int estimate_sign(const CoordinateContext& ctx, int last, const Vec& prior);
    double estimate_last(CoordinateContext& ctx);

    // Coordinate i for every label, given the tails.
    std::vector<double> grid_search_coordinate(int i, const std::vector<Vec>& tails);

    EstimatedAngles estimate_all();

private:
    Vec probe(int i, double beta, const Vec& tail) const;
    std::vector<Vec> anchors(const CoordinateContext& ctx) const;
    void log_test(const char* stage, double alpha, double delta, int label, const TestCounts& c);
    double bisect(double lo, double hi, double tol, const std::function<bool(double)>& pred);

    Environment& env_;
    EstimationBudget budget_;
    Isometry iso_;
    Rng rng_;
    std::ostream* trace_;
    int d_;
    int n_labels_;
    long rounds_ = 0;
    long tests_ = 0;
    Mat dummy_;
    // context of the test currently logged
    int cur_i_ = 0;
};

EstimatedAngles estimate_all(Environment& env, const EstimationBudget& budget, const Isometry& iso,
                             std::uint64_t seed, std::ostream* trace = nullptr);

// min over label permutations of the largest l1 distance; the last coordinate is periodic
double angle_set_distance(const RewardAngles& truth, const RewardAngles& estimate);
double coordinate_distance(const std::vector<double>& truth, const std::vector<double>& estimate, bool periodic);
// distance under a fixed alignment estimate[s] <-> truth[align[s]]
double matched_distance(const RewardAngles& truth, const RewardAngles& estimate, const std::vector<int>& align);
// the alignment attaining angle_set_distance
std::vector<int> best_alignment(const RewardAngles& truth, const RewardAngles& estimate);

}  // namespace palab

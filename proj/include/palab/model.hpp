#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "palab/geometry.hpp"

namespace palab {

using Rng = std::mt19937_64;

double uniform01(Rng& rng);
int sample_categorical(const double* p, int n, Rng& rng);

struct ProblemInstance {
    int n_types = 0;
    int d = 0;  // number of principal actions |X|
    int n_actions = 0;
    int n_outcomes = 0;
    Vec f;
    std::vector<double> U;  // indexed (theta, x, a, o)
    std::vector<double> V;
    std::vector<double> F;  // outcome distribution, indexed (theta, x, a, o)
    double gamma = 0.9;
    double B = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t iso_seed = 0;  // rotation the learner should draw

    std::size_t index(int theta, int x, int a, int o) const {
        return ((static_cast<std::size_t>(theta) * d + x) * n_actions + a) * n_outcomes + o;
    }
    double u_at(int theta, int x, int a, int o) const { return U[index(theta, x, a, o)]; }
    double v_at(int theta, int x, int a, int o) const { return V[index(theta, x, a, o)]; }
    const double* outcome_dist(int theta, int x, int a) const { return &F[index(theta, x, a, 0)]; }
    double f_min() const { return f.minCoeff(); }

    // Checks Assumption 3 and tensor shapes.
    void validate() const;
};

struct RewardProfile {
    Mat v;     // |Theta| x d, agent reward under best response
    Mat u;     // |Theta| x d, principal reward under best response
    Mat vbar;  // normalized agent reward vectors
    double C0 = 0.0;
    std::vector<int> best;  // best action, indexed theta * d + x
    double B = 1.0;
    double gamma = 0.9;
    Vec f;

    int n_types() const { return static_cast<int>(v.rows()); }
    int d() const { return static_cast<int>(v.cols()); }
};

double expected_agent_reward(const ProblemInstance& inst, int theta, int x, int a);
double expected_principal_reward(const ProblemInstance& inst, int theta, int x, int a);
int best_action(const ProblemInstance& inst, int theta, int x);
RewardProfile reward_profile(const ProblemInstance& inst);

using RewardAngles = std::vector<AngleVector>;

std::vector<std::string> angle_assumption_violations(const RewardAngles& angles, double tol = 1e-12);
RewardAngles reward_angles(const RewardProfile& profile, const Isometry& iso);
// Draws rotations from iso_seed, iso_seed + 1, ... until Assumption 4 holds.
Isometry find_isometry(const RewardProfile& profile, std::uint64_t iso_seed, int max_tries = 50);

struct GapProfile {
    Vec chi;
    Vec chi_tilde;
    Vec chi_bar;
    double delta_sin = 1.0;
};

GapProfile gap_profile(const RewardAngles& angles);

// Interior point of (LP*) following the proof of the revelation principle.
bool interior_point_feasible(const RewardProfile& profile, double eps);

int sample_type(const ProblemInstance& inst, Rng& rng);
int sample_outcome(const ProblemInstance& inst, int theta, int x, int a, Rng& rng);

struct RandomInstanceParams {
    int n_types = 2;
    int d = 3;
    int n_actions = 2;
    int n_outcomes = 2;
    double B = 1.0;
    double gamma = 0.9;
    int max_retries = 50;
};

ProblemInstance random_instance(const RandomInstanceParams& params, std::uint64_t seed);

// Minimum separations for instances whose reward angles are drawn directly.
struct GapRequirements {
    double min_chi = 0.3;
    double min_chi_tilde = 0.1;  // capped at 0.1 by definition
    double min_pole = 0.2;       // distance of inner angles from 0, pi/2 and pi
    double min_chi_bar = 0.3;
    double min_f = 0.0;          // 0 selects 0.5 / |Theta|
    int max_tries = 100000;
};

bool gaps_respected(const RewardAngles& angles, const GapRequirements& req);
RewardAngles sample_gapped_angles(int n_types, int d, const GapRequirements& req, Rng& rng);
ProblemInstance gapped_instance(const RandomInstanceParams& params, const GapRequirements& req,
                                std::uint64_t seed);
ProblemInstance instance_from_vbar(const Mat& vbar, const RandomInstanceParams& params,
                                   std::uint64_t seed, std::uint64_t iso_seed);

nlohmann::json instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const nlohmann::json& j);

}  // namespace palab

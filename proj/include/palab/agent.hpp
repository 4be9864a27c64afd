#pragma once

#include <map>

#include "palab/model.hpp"

namespace palab {

enum class AgentKind { ExactMyopic, SlackAdversarial, ScriptedDeviation };

struct AgentModel {
    AgentKind kind = AgentKind::ExactMyopic;
    // round -> scripted report, consulted by ScriptedDeviation only
    std::map<long, int> script;
};

AgentKind agent_kind_from_string(const std::string& name);
std::string to_string(AgentKind kind);

// Normalized-unit slack C0 * gamma^ell / (1 - gamma); an infinite delay gives 0.
double report_slack(const RewardProfile& profile, double ell);
// Unnormalized slack 2B * gamma^ell / (1 - gamma) used for action deviations.
double action_slack(const RewardProfile& profile, double ell);

int report_type(const AgentModel& model, const RewardProfile& profile, const Mat& mech, int theta,
                double slack, long round = 0);

int respond_action(const AgentModel& model, const ProblemInstance& inst, const RewardProfile& profile,
                   int theta, int x, double slack);

}  // namespace palab

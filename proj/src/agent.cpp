#include "palab/agent.hpp"

#include <cmath>
#include <limits>

#include "palab/errors.hpp"

namespace palab {

AgentKind agent_kind_from_string(const std::string& name) {
    if (name == "exact_myopic" || name == "myopic") return AgentKind::ExactMyopic;
    if (name == "slack_adversarial" || name == "adversarial") return AgentKind::SlackAdversarial;
    if (name == "scripted_deviation" || name == "scripted") return AgentKind::ScriptedDeviation;
    throw DomainError("unknown agent kind: " + name);
}

std::string to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::ExactMyopic: return "exact_myopic";
        case AgentKind::SlackAdversarial: return "slack_adversarial";
        case AgentKind::ScriptedDeviation: return "scripted_deviation";
    }
    return "unknown";
}

double report_slack(const RewardProfile& profile, double ell) {
    if (!std::isfinite(ell)) return 0.0;
    return profile.C0 * std::pow(profile.gamma, ell) / (1.0 - profile.gamma);
}

double action_slack(const RewardProfile& profile, double ell) {
    if (!std::isfinite(ell)) return 0.0;
    return 2.0 * profile.B * std::pow(profile.gamma, ell) / (1.0 - profile.gamma);
}

int report_type(const AgentModel& model, const RewardProfile& profile, const Mat& mech, int theta,
                double slack, long round) {
    const int S = static_cast<int>(mech.rows());
    Vec vals = mech * profile.vbar.row(theta).transpose();
    int best = 0;
    for (int s = 1; s < S; ++s)
        if (vals(s) > vals(best)) best = s;
    if (model.kind == AgentKind::ExactMyopic || slack <= 0.0) return best;
    const double floor = vals(best) - slack;
    if (model.kind == AgentKind::ScriptedDeviation) {
        auto it = model.script.find(round);
        if (it != model.script.end() && it->second >= 0 && it->second < S && vals(it->second) >= floor)
            return it->second;
        return best;
    }
    Vec gain = mech * profile.u.row(theta).transpose();
    int pick = best;
    for (int s = 0; s < S; ++s)
        if (vals(s) >= floor && gain(s) < gain(pick)) pick = s;
    return pick;
}

int respond_action(const AgentModel& model, const ProblemInstance& inst, const RewardProfile& profile,
                   int theta, int x, double slack) {
    const int best = profile.best[static_cast<std::size_t>(theta) * inst.d + x];
    if (model.kind != AgentKind::SlackAdversarial || slack <= 0.0 || inst.n_actions == 1) return best;
    const double floor = expected_agent_reward(inst, theta, x, best) - slack;
    int pick = best;
    double pick_u = expected_principal_reward(inst, theta, x, best);
    for (int a = 0; a < inst.n_actions; ++a) {
        if (expected_agent_reward(inst, theta, x, a) < floor) continue;
        double u = expected_principal_reward(inst, theta, x, a);
        if (u < pick_u) {
            pick = a;
            pick_u = u;
        }
    }
    return pick;
}

}  // namespace palab

#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "palab/agent.hpp"
#include "palab/model.hpp"

namespace palab {

enum class Phase : std::uint8_t { Estimation, Dummy, Planning, Tail };
std::string to_string(Phase phase);

// Release round of data the learner never reads.
inline constexpr long kNever = std::numeric_limits<long>::max();

std::uint64_t mechanism_hash(const Mat& mech);

struct RoundRecord {
    long t = 0;  // 1-based round index
    int report = 0;
    int x = 0;
    int outcome = 0;
    double reward = 0.0;
    long release = kNever;
    std::uint64_t mech_hash = 0;
    Phase phase = Phase::Dummy;
};

// Oracle side channel, never handed to a learner.
struct HiddenRecord {
    int theta = 0;
    int action = 0;
    double slack = 0.0;
    double value_deficit = 0.0;
};

struct RoundTrace {
    long t;
    double regret;
    std::uint64_t mech_hash;
    Phase phase;
};

struct EnvOptions {
    bool keep_transcript = false;  // store every record, including hidden fields
    bool keep_trace = false;       // per-round regret trace for CSV output
};

// Records with release <= t; the only transcript view a learner may use.
std::vector<RoundRecord> delay_guard(const std::vector<RoundRecord>& transcript, long t);

class Environment {
public:
    Environment(ProblemInstance inst, AgentModel agent, std::uint64_t seed, EnvOptions opts = {});

    // Deploys mech for one round. The record becomes readable at round release (>= t + 1).
    void run_round(const Mat& mech, Phase phase, long release);
    // Deploys mech for count consecutive rounds sharing one release round.
    void run_rounds(const Mat& mech, Phase phase, long count, long release);

    long now() const { return t_; }
    // Records released since the previous poll, in round order.
    std::vector<RoundRecord> poll();
    // Transcript access for learners; throws ProtocolError on unreleased rounds.
    const RoundRecord& read(long t) const;

    double regret() const { return regret_; }
    double u_star() const { return u_star_; }
    double realized_reward() const { return realized_; }
    double expected_reward() const { return expected_; }
    double max_report_deficit_excess() const { return max_excess_; }

    const ProblemInstance& instance() const { return inst_; }
    const RewardProfile& profile() const { return profile_; }
    const AgentModel& agent() const { return agent_; }
    const std::vector<RoundRecord>& oracle_transcript() const { return transcript_; }
    const std::vector<HiddenRecord>& oracle_hidden() const { return hidden_; }
    const std::vector<RoundTrace>& trace() const { return trace_; }
    // Expected principal reward of mech under the agent's response at the given slack.
    double expected_value(const Mat& mech, double report_slack, double act_slack) const;

private:
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    struct Response {
        std::vector<int> report;  // per type
        std::vector<int> action;  // per (type, x)
        std::vector<double> deficit;
        double expected = 0.0;
    };
    Response respond(const Mat& mech, double rs, double as, long round) const;
    const Response& cached(const RowMat& mech, std::uint64_t h, double rs, double as, long round);
    void step(const RowMat& mech, std::uint64_t h, Phase phase, long release);

    ProblemInstance inst_;
    RewardProfile profile_;
    AgentModel agent_;
    EnvOptions opts_;
    Rng rng_;
    long t_ = 0;
    double u_star_ = 0.0;
    double regret_ = 0.0;
    double realized_ = 0.0;
    double expected_ = 0.0;
    double max_excess_ = 0.0;

    struct Pending {
        long release;
        long t;
        RoundRecord rec;
        bool operator>(const Pending& o) const { return release != o.release ? release > o.release : t > o.t; }
    };
    std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>> pending_;
    std::vector<RoundRecord> transcript_;
    std::vector<HiddenRecord> hidden_;
    std::vector<RoundTrace> trace_;

    struct Key {
        std::uint64_t h;
        double rs;
        double as;
        bool operator==(const Key& o) const { return h == o.h && rs == o.rs && as == o.as; }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    std::unordered_map<Key, Response, KeyHash> cache_;
};

}  // namespace palab

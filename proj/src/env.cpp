#include "palab/env.hpp"

#include <cmath>
#include <cstring>

#include "palab/errors.hpp"
#include "palab/lp.hpp"

namespace palab {

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::Estimation: return "estimation";
        case Phase::Dummy: return "dummy";
        case Phase::Planning: return "planning";
        case Phase::Tail: return "tail";
    }
    return "unknown";
}

std::uint64_t mechanism_hash(const Mat& mech) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const unsigned char* c = static_cast<const unsigned char*>(p);
        for (std::size_t k = 0; k < n; ++k) {
            h ^= c[k];
            h *= 1099511628211ULL;
        }
    };
    const long r = mech.rows(), c = mech.cols();
    mix(&r, sizeof r);
    mix(&c, sizeof c);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < c; ++j) {
            double v = mech(i, j) == 0.0 ? 0.0 : mech(i, j);
            mix(&v, sizeof v);
        }
    return h;
}

std::vector<RoundRecord> delay_guard(const std::vector<RoundRecord>& transcript, long t) {
    std::vector<RoundRecord> out;
    for (const auto& r : transcript)
        if (r.release <= t) out.push_back(r);
    return out;
}

std::size_t Environment::KeyHash::operator()(const Key& k) const {
    std::uint64_t a, b;
    std::memcpy(&a, &k.rs, sizeof a);
    std::memcpy(&b, &k.as, sizeof b);
    return static_cast<std::size_t>(k.h ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
}

Environment::Environment(ProblemInstance inst, AgentModel agent, std::uint64_t seed, EnvOptions opts)
    : inst_(std::move(inst)), agent_(std::move(agent)), opts_(opts), rng_(seed) {
    inst_.validate();
    profile_ = reward_profile(inst_);
    LpSolution star = solve_lp_star(profile_.f, profile_.u, profile_.vbar, 0.0);
    if (star.status != LpStatus::Optimal) throw InfeasibleError("benchmark LP is not solvable");
    u_star_ = star.value;
}

Environment::Response Environment::respond(const Mat& mech, double rs, double as, long round) const {
    const int T = inst_.n_types, d = inst_.d;
    if (mech.rows() < 1 || mech.cols() != d) throw DimensionError("mechanism has the wrong shape");
    Response r;
    r.report.resize(T);
    r.deficit.resize(T);
    r.action.resize(static_cast<std::size_t>(T) * d);
    for (int th = 0; th < T; ++th) {
        int s = report_type(agent_, profile_, mech, th, rs, round);
        r.report[th] = s;
        Vec vals = mech * profile_.vbar.row(th).transpose();
        r.deficit[th] = vals.maxCoeff() - vals(s);
        double e = 0.0;
        for (int x = 0; x < d; ++x) {
            int a = respond_action(agent_, inst_, profile_, th, x, as);
            r.action[static_cast<std::size_t>(th) * d + x] = a;
            if (mech(s, x) != 0.0) e += mech(s, x) * expected_principal_reward(inst_, th, x, a);
        }
        r.expected += inst_.f(th) * e;
    }
    return r;
}

double Environment::expected_value(const Mat& mech, double rs, double as) const {
    return respond(mech, rs, as, t_ + 1).expected;
}

const Environment::Response& Environment::cached(const RowMat& mech, std::uint64_t h, double rs, double as,
                                                 long round) {
    if (agent_.kind == AgentKind::ScriptedDeviation && agent_.script.count(round)) {
        static thread_local Response scratch;
        scratch = respond(Mat(mech), rs, as, round);
        return scratch;
    }
    Key key{h, rs, as};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 4096) cache_.clear();
    return cache_.emplace(key, respond(Mat(mech), rs, as, round)).first->second;
}

void Environment::step(const RowMat& mech, std::uint64_t h, Phase phase, long release) {
    const long t = t_ + 1;
    if (release <= t) throw ProtocolError("release round must come after the round itself");
    double rs = 0.0, as = 0.0;
    if (agent_.kind != AgentKind::ExactMyopic && release != kNever) {
        const double ell = static_cast<double>(release - t - 1);
        rs = report_slack(profile_, ell);
        as = action_slack(profile_, ell);
        if (rs < 1e-300) rs = 0.0;
        if (as < 1e-300) as = 0.0;
    }
    const Response& resp = cached(mech, h, rs, as, t);
    const int th = sample_type(inst_, rng_);
    const int s = resp.report[th];
    const int x = sample_categorical(mech.row(s).data(), inst_.d, rng_);
    const int a = resp.action[static_cast<std::size_t>(th) * inst_.d + x];
    const int o = sample_outcome(inst_, th, x, a, rng_);
    const double u = inst_.u_at(th, x, a, o);
    max_excess_ = std::max(max_excess_, resp.deficit[th] - rs);
    regret_ += u_star_ - resp.expected;
    realized_ += u;
    expected_ += resp.expected;
    t_ = t;

    RoundRecord rec{t, s, x, o, u, release, h, phase};
    if (release != kNever) pending_.push(Pending{release, t, rec});
    if (opts_.keep_transcript) {
        transcript_.push_back(rec);
        hidden_.push_back(HiddenRecord{th, a, rs, resp.deficit[th]});
    }
    if (opts_.keep_trace) trace_.push_back(RoundTrace{t, regret_, h, phase});
}

void Environment::run_round(const Mat& mech, Phase phase, long release) {
    run_rounds(mech, phase, 1, release);
}

void Environment::run_rounds(const Mat& mech, Phase phase, long count, long release) {
    const RowMat rm = mech;
    const std::uint64_t h = mechanism_hash(mech);
    for (long k = 0; k < count; ++k) step(rm, h, phase, release);
}

std::vector<RoundRecord> Environment::poll() {
    std::vector<RoundRecord> out;
    while (!pending_.empty() && pending_.top().release <= t_ + 1) {
        out.push_back(pending_.top().rec);
        pending_.pop();
    }
    return out;
}

const RoundRecord& Environment::read(long t) const {
    if (!opts_.keep_transcript) throw ProtocolError("transcript storage is disabled");
    if (t < 1 || t > static_cast<long>(transcript_.size())) throw DomainError("round index out of range");
    const RoundRecord& r = transcript_[static_cast<std::size_t>(t - 1)];
    if (r.release > t_ + 1) throw ProtocolError("round data has not been released yet");
    return r;
}

}  // namespace palab

#include "palab/bandit.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "palab/errors.hpp"

namespace palab {

double ellipsoid_radius(double log_det_ratio, const RadiusParams& p) {
    if (p.lambda <= 0.0 || p.delta <= 0.0 || p.delta >= 1.0) throw DomainError("radius needs lambda > 0, delta in (0,1)");
    const double inner = std::max(0.0, log_det_ratio - 2.0 * std::log(p.delta));
    return p.noise_scale * p.B * std::sqrt(inner) + std::sqrt(p.lambda) * std::sqrt(p.d_term) * p.B;
}

RidgeAccumulator::RidgeAccumulator(int dim, double lambda) : gram_(Mat::Zero(dim, dim)), xy_(Vec::Zero(dim)), lambda_(lambda) {
    if (lambda <= 0.0) throw DomainError("ridge parameter must be positive");
}

void RidgeAccumulator::add(const Vec& x, double reward) {
    if (x.size() != xy_.size()) throw DimensionError("feature dimension mismatch");
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    xy_ += reward * x;
    ++samples_;
}

ConfidenceEllipsoid RidgeAccumulator::ellipsoid(const RadiusParams& params) const {
    const int n = static_cast<int>(xy_.size());
    ConfidenceEllipsoid e;
    e.omega = gram_ + lambda_ * Mat::Identity(n, n);
    Eigen::LDLT<Mat> ldlt(e.omega);
    e.beta_hat = ldlt.solve(xy_);
    const double log_det = ldlt.vectorD().array().log().sum() - n * std::log(lambda_);
    e.lambda = lambda_;
    e.delta = params.delta;
    RadiusParams p = params;
    p.lambda = lambda_;
    e.radius = ellipsoid_radius(log_det, p);
    return e;
}

ConfidenceEllipsoid ridge_update(const std::vector<std::pair<Mat, double>>& data, const RadiusParams& params) {
    if (data.empty()) throw DomainError("ridge_update needs the feature dimension; pass at least one sample");
    RidgeAccumulator acc(static_cast<int>(data.front().first.size()), params.lambda);
    for (const auto& [mech, r] : data) acc.add(vec_mech(mech), r);
    return acc.ellipsoid(params);
}

long ceil_log(double n) {
    return n <= 1.0 ? 0 : static_cast<long>(std::ceil(std::log(n)));
}

long episode_length(long n) {
    const long l = ceil_log(static_cast<double>(n));
    return (n + 2) * (l * l + 1) + l * l * l * l * l * l;
}

long split_horizon(long T) {
    long best = 0;
    // The length is monotone within each band of ceil(ln n), so scan bands.
    for (long band = 0; band < 30; ++band) {
        const long lo = band == 0 ? 1 : static_cast<long>(std::floor(std::exp(band - 1))) + 1;
        long hi = static_cast<long>(std::floor(std::exp(band)));
        if (hi < lo) continue;
        if (episode_length(lo) > T) continue;
        long a = lo, b = hi;
        while (a < b) {
            long mid = a + (b - a + 1) / 2;
            if (episode_length(mid) <= T)
                a = mid;
            else
                b = mid - 1;
        }
        best = std::max(best, a);
    }
    return best;
}

Vec beta_star(const RewardProfile& profile, const std::vector<int>& align) {
    const int T = profile.n_types(), d = profile.d();
    Mat b(T, d);
    for (int s = 0; s < T; ++s) b.row(s) = profile.f(align[s]) * profile.u.row(align[s]);
    return vec_mech(b);
}

namespace {

Mat uniform_mechanism(int T, int d) { return Mat::Constant(T, d, 1.0 / d); }

RadiusParams radius_params(const Environment& env, const BanditConfig& c) {
    RadiusParams p;
    p.lambda = c.lambda;
    p.delta = c.delta;
    p.B = env.instance().B;
    p.d_term = c.ambient_dim_radius ? env.instance().d * env.instance().n_types : env.instance().d;
    p.noise_scale = c.noise_scale;
    return p;
}

void fill_until(Environment& env, const Mat& mech, Phase phase, long end) {
    if (env.now() < end) env.run_rounds(mech, phase, end - env.now(), kNever);
}

}  // namespace

void run_stage_two(Environment& env, const StageTwoPlan& plan, const BanditConfig& config, BanditResult& result) {
    const int T = env.instance().n_types, d = env.instance().d;
    if (plan.vertices.empty()) throw InfeasibleError("planning polytope has no vertices");
    const RadiusParams rp = radius_params(env, config);
    RidgeAccumulator acc(T * d, config.lambda);
    std::vector<long> heads;
    std::vector<Mat> head_mech;

    Mat last = uniform_mechanism(T, d);
    const long dummy = std::min(plan.ell, plan.end - env.now());
    if (dummy > 0) env.run_rounds(last, Phase::Dummy, dummy, kNever);

    std::optional<double> opt_star;
    if (plan.beta_star) {
        opt_star = -std::numeric_limits<double>::infinity();
        for (const Mat& v : plan.vertices) opt_star = std::max(*opt_star, plan.beta_star->dot(vec_mech(v)));
    }
    double prev_log_det = 0.0;
    std::size_t next_head = 0;
    for (long k = 1; k <= plan.n && env.now() < plan.end; ++k) {
        const long head = env.now() + 1;
        for (const RoundRecord& rec : env.poll()) {
            if (rec.phase != Phase::Planning) continue;
            while (next_head < heads.size() && heads[next_head] != rec.t) ++next_head;
            if (next_head == heads.size()) throw ProtocolError("released record is not a block head");
            acc.add(vec_mech(head_mech[next_head]), rec.reward);
        }
        ConfidenceEllipsoid ell = acc.ellipsoid(rp);
        if (config.radius_override) ell.radius = *config.radius_override;
        PlanResult planned = solve_pess_opt(plan.vertices, ell);

        BlockLog log;
        log.k = k;
        log.head = head;
        log.beta_norm = ell.beta_hat.norm();
        log.radius = ell.radius;
        log.vertex = planned.vertex;
        log.optimistic_value = planned.value;
        log.log_det = Eigen::LDLT<Mat>(ell.omega).vectorD().array().log().sum();
        if (log.log_det < prev_log_det - 1e-9 && k > 1) result.log_det_monotone = false;
        prev_log_det = log.log_det;
        if (plan.beta_star) {
            log.covered = ell.contains(*plan.beta_star);
            if (!log.covered) result.covered_all = false;
            if (log.covered && planned.value < *opt_star - 1e-9) ++result.optimism_violations;
        }

        const double before = env.realized_reward();
        last = planned.mechanism;
        heads.push_back(head);
        head_mech.push_back(last);
        env.run_round(last, Phase::Planning, head + plan.ell + 1);
        const long rest = std::min(plan.ell, plan.end - env.now());
        if (rest > 0) env.run_rounds(last, Phase::Planning, rest, kNever);
        log.block_reward = env.realized_reward() - before;
        result.blocks.push_back(log);
    }
    if (config.tail_rule == "greedy" && env.now() < plan.end) {
        for (const RoundRecord& rec : env.poll()) {
            if (rec.phase != Phase::Planning) continue;
            while (next_head < heads.size() && heads[next_head] != rec.t) ++next_head;
            if (next_head == heads.size()) throw ProtocolError("released record is not a block head");
            acc.add(vec_mech(head_mech[next_head]), rec.reward);
        }
        ConfidenceEllipsoid ell = acc.ellipsoid(rp);
        ell.radius = 0.0;
        last = solve_pess_opt(plan.vertices, ell).mechanism;
    } else if (config.tail_rule != "greedy" && config.tail_rule != "repeat_last") {
        throw DomainError("unknown tail rule: " + config.tail_rule);
    }
    fill_until(env, last, Phase::Tail, plan.end);
}

namespace {

// Plans for horizon T but stops after run_rounds rounds (the doubling budget can cut an episode).
BanditResult known_horizon(Environment& env, long T, long run_rounds, const BanditConfig& config, std::ostream* trace) {
    BanditResult res;
    res.T = T;
    res.n = split_horizon(T);
    if (res.n < 1) throw DomainError("horizon too short for any planning block");
    res.ell = ceil_log(static_cast<double>(res.n)) * ceil_log(static_cast<double>(res.n));
    const long l = ceil_log(static_cast<double>(res.n));
    res.stage1_cap = l * l * l * l * l * l;
    const long start = env.now();
    const long end = start + std::min(T, run_rounds);
    const double regret0 = env.regret(), reward0 = env.realized_reward();
    const ProblemInstance& inst = env.instance();
    const int nt = inst.n_types, d = inst.d;
    const double eps = config.eps_target > 0.0 ? config.eps_target : 1.0 / static_cast<double>(res.n);
    Isometry iso = make_isometry(d, inst.iso_seed);

    StageTwoPlan plan;
    plan.n = res.n;
    plan.ell = res.ell;
    plan.end = end;
    std::vector<int> align(nt);
    std::iota(align.begin(), align.end(), 0);
    PessimisticPolytope poly;
    if (nt == 1) {
        poly = ic_polytope(Mat::Zero(1, d), 0.0, 0.0);
    } else {
        RewardAngles estimates;
        const RewardAngles truth = reward_angles(env.profile(), iso);
        if (config.inject_true_angles) {
            estimates = truth;
        } else {
            EstimationBudget budget = make_budget(static_cast<double>(res.n), config.f_min_hint, d, eps);
            if (config.T_sec > 0) budget.T_sec = config.T_sec;
            budget.L_delay = res.ell;
            res.estimation = estimate_all(env, budget, iso, config.seed, trace);
            res.stage1_rounds = env.now() - start;
            if (!res.estimation.ok) {
                res.ok = false;
                res.failure_stage = "estimation/" + res.estimation.failure_stage;
                res.failure_message = res.estimation.failure_message;
                res.regret = env.regret() - regret0;
                res.realized_reward = env.realized_reward() - reward0;
                return res;
            }
            if (config.enforce_stage1_cap && res.stage1_rounds > res.stage1_cap) {
                res.ok = false;
                res.failure_stage = "stage1_budget";
                res.failure_message = "estimation used " + std::to_string(res.stage1_rounds) + " rounds, cap " +
                                      std::to_string(res.stage1_cap);
            }
            estimates = res.estimation.angles;
            align = best_alignment(truth, estimates);
        }
        const double pr = config.pess_radius ? *config.pess_radius : eps;
        poly = pessimistic_polytope(estimates, pr, config.margin, iso);
    }
    plan.vertices = enumerate_vertices(poly);
    if (plan.vertices.empty()) {
        res.ok = false;
        res.failure_stage = "planning";
        res.failure_message = "pessimistic polytope is empty";
        res.regret = env.regret() - regret0;
        res.realized_reward = env.realized_reward() - reward0;
        return res;
    }
    plan.beta_star = beta_star(env.profile(), align);
    if (env.now() < end) run_stage_two(env, plan, config, res);
    if (trace) {
        for (const BlockLog& b : res.blocks) {
            nlohmann::json j{{"block", b.k},         {"head", b.head},     {"beta_norm", b.beta_norm},
                             {"radius", b.radius},   {"vertex", b.vertex}, {"optimistic_value", b.optimistic_value},
                             {"block_reward", b.block_reward}};
            (*trace) << j.dump() << '\n';
        }
    }
    res.regret = env.regret() - regret0;
    res.realized_reward = env.realized_reward() - reward0;
    return res;
}

}  // namespace

BanditResult pess_opt_linucb(Environment& env, long T, const BanditConfig& config, std::ostream* trace) {
    return known_horizon(env, T, T, config, trace);
}

BanditResult doubling_pipeline(Environment& env, long total_rounds, const BanditConfig& config) {
    BanditResult res;
    res.T = total_rounds;
    const long start = env.now();
    const double regret0 = env.regret(), reward0 = env.realized_reward();
    const Mat dummy = uniform_mechanism(env.instance().n_types, env.instance().d);
    for (int k = std::max(1, config.doubling_first_k); env.now() - start < total_rounds; ++k) {
        const long nk = 1L << k;
        const long Tk = episode_length(nk);
        const long remaining = total_rounds - (env.now() - start);
        BanditConfig ec = config;
        ec.seed = config.seed + static_cast<std::uint64_t>(k);
        // The episode is planned for Tk rounds; the caller's budget may cut it short.
        BanditResult ep = known_horizon(env, Tk, std::min(Tk, remaining), ec, nullptr);
        ++res.episodes;
        res.ok = ep.ok;
        if (ep.ok) {
            res.failure_stage.clear();
            res.failure_message.clear();
        } else {
            ++res.failed_episodes;
            res.failure_stage = "episode " + std::to_string(k) + ": " + ep.failure_stage;
            res.failure_message = ep.failure_message;
        }
        if (!ep.covered_all) res.covered_all = false;
        res.stage1_rounds += ep.stage1_rounds;
        const long lk = ceil_log(static_cast<double>(nk)) * ceil_log(static_cast<double>(nk));
        fill_until(env, dummy, Phase::Dummy, std::min(start + total_rounds, env.now() + lk));
    }
    res.regret = env.regret() - regret0;
    res.realized_reward = env.realized_reward() - reward0;
    return res;
}

BanditResult classical_linucb(Environment& env, const PessimisticPolytope& polytope, long T,
                              const BanditConfig& config) {
    BanditResult res;
    res.T = T;
    res.n = split_horizon(T);
    if (res.n < 1) throw DomainError("horizon too short for any planning block");
    res.ell = ceil_log(static_cast<double>(res.n)) * ceil_log(static_cast<double>(res.n));
    const double regret0 = env.regret(), reward0 = env.realized_reward();
    StageTwoPlan plan;
    plan.n = res.n;
    plan.ell = res.ell;
    plan.end = env.now() + T;
    plan.vertices = enumerate_vertices(polytope);
    std::vector<int> align(env.instance().n_types);
    std::iota(align.begin(), align.end(), 0);
    plan.beta_star = beta_star(env.profile(), align);
    run_stage_two(env, plan, config, res);
    res.regret = env.regret() - regret0;
    res.realized_reward = env.realized_reward() - reward0;
    return res;
}

}  // namespace palab

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "palab/harness.hpp"

using namespace palab;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

ExperimentConfig reference_config() { return load_config(std::string(PALAB_CONFIG_DIR) + "/reference.json"); }

Verdict from_oracle(const std::string& name, ExperimentConfig c) {
    c.oracles = {name};
    const OracleOutcome o = oracle_suite(c).at(0);
    return {o.passed, o.detail};
}

Vec random_interior(int k, Rng& rng) {
    Vec a(k);
    for (int i = 0; i + 1 < k; ++i) a(i) = kPi * uniform01(rng);
    a(k - 1) = 2 * kPi * uniform01(rng);
    return a;
}

Verdict geometry() {
    Rng rng(1);
    const int cases = 100000;
    long bad_norm = 0, bad_lip = 0, bad_iso = 0, bad_cos = 0, bad_cot = 0;
    for (int k = 0; k < cases; ++k) {
        const int m = 1 + static_cast<int>(rng() % 4);
        Vec a = random_interior(m, rng), b = random_interior(m, rng);
        Vec ra = spherical_embed(a), rb = spherical_embed(b);
        if (std::abs(ra.norm() - 1.0) > 1e-12) ++bad_norm;
        if ((ra - rb).norm() > (a - b).lpNorm<1>() + 1e-12) ++bad_lip;
    }
    std::normal_distribution<double> g;
    for (int d : {3, 4, 5, 6}) {
        const Isometry iso = make_isometry(d, 1000 + d);
        for (int k = 0; k < cases / 4; ++k) {
            Vec x(d), y(d);
            for (int i = 0; i < d; ++i) {
                x(i) = g(rng);
                y(i) = g(rng);
            }
            x.array() -= x.mean();
            y.array() -= y.mean();
            if (std::abs(iso.apply(x).dot(iso.apply(y)) - x.dot(y)) > 1e-10) ++bad_iso;
            if (std::abs(iso.apply(x / x.norm()).norm() - 1.0) > 1e-12) ++bad_iso;
        }
    }
    for (int k = 0; k <= cases; ++k) {
        const double x = -kPi + 2 * kPi * k / cases;
        if (std::cos(x) > 1 - x * x / 30) ++bad_cos;
    }
    for (int k = 1; k < cases; ++k) {
        const double x = kPi * k / cases;
        if (std::abs(std::cos(x) / std::sin(x)) < std::abs(x - kPi / 2)) ++bad_cot;
    }
    std::ostringstream os;
    os << "violations: norm " << bad_norm << ", lipschitz " << bad_lip << ", isometry " << bad_iso << ", cos "
       << bad_cos << ", cot " << bad_cot;
    return {bad_norm + bad_lip + bad_iso + bad_cos + bad_cot == 0, os.str()};
}

Verdict estimation() {
    long good = 0, runs = 0, failures = 0;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        RandomInstanceParams p;
        p.d = 3 + k % 3;
        p.n_types = 2 + (k / 3) % 3;
        const ProblemInstance inst = gapped_instance(p, GapRequirements{}, 5000 + k);
        Environment env(inst, AgentModel{AgentKind::ExactMyopic, {}}, 7000 + k);
        const Isometry iso = make_isometry(p.d, inst.iso_seed);
        EstimatedAngles e = estimate_all(env, make_budget(65536, inst.f_min(), p.d, 1e-4), iso, 9000 + k);
        ++runs;
        if (!e.ok) {
            ++failures;
            continue;
        }
        const double dist = angle_set_distance(reward_angles(env.profile(), iso), e.angles);
        worst = std::max(worst, dist);
        if (dist <= 1e-4) ++good;
    }
    std::vector<double> x, y;
    RandomInstanceParams p;
    p.d = 4;
    p.n_types = 3;
    const ProblemInstance inst = gapped_instance(p, GapRequirements{}, 77);
    bool sweep_ok = true;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        Environment env(inst, AgentModel{AgentKind::ExactMyopic, {}}, 78);
        EstimatedAngles e = estimate_all(env, make_budget(65536, inst.f_min(), 4, eps),
                                         make_isometry(4, inst.iso_seed), 79);
        sweep_ok = sweep_ok && e.ok;
        x.push_back(std::log(1.0 / eps));
        y.push_back(static_cast<double>(e.rounds_used));
    }
    const RegretFit fit = fit_loglog(x, y);
    std::ostringstream os;
    os << good << "/" << runs << " runs with D <= 1e-4 (" << failures << " estimation failures, worst D " << worst
       << "); rounds vs log(1/eps) slope " << fit.slope;
    return {good >= 95 && sweep_ok && fit.valid && fit.slope <= 1.5, os.str()};
}

Verdict regret_scaling() {
    ExperimentConfig c = load_config(std::string(PALAB_CONFIG_DIR) + "/regret_scaling.json");
    const ExperimentResult r = run_experiment(c);
    const auto& per = r.report.at("per_T");
    std::vector<double> T, R, ratio;
    long failures = 0;
    for (const auto& p : per) {
        T.push_back(p.at("T").get<double>());
        R.push_back(p.at("mean_regret").get<double>());
        ratio.push_back(p.at("regret_over_sqrtT_log3T").get<double>());
        failures += p.at("failures").get<long>();
    }
    bool increasing = true;
    for (std::size_t k = 1; k < R.size(); ++k) increasing = increasing && R[k] > R[k - 1];
    const bool sublinear = R.back() / T.back() < R.front() / T.front();
    const double slope = r.report.at("slope_fit").at("slope").get<double>();
    const std::size_t n = ratio.size();
    const bool ratio_ok = n >= 3 && ratio[n - 2] <= ratio[n - 3] && ratio[n - 1] <= ratio[n - 2];
    std::ostringstream os;
    os << "slope " << slope << ", increasing " << increasing << ", sublinear " << sublinear << ", top ratios "
       << ratio[n - 3] << " " << ratio[n - 2] << " " << ratio[n - 1] << ", failed runs " << failures;
    return {increasing && sublinear && slope >= 0.3 && slope <= 0.8 && ratio_ok, os.str()};
}

Verdict slack_contract() {
    RandomInstanceParams p;
    p.n_types = 3;
    p.d = 4;
    p.n_actions = 3;
    p.gamma = 0.5;
    const ProblemInstance inst = random_instance(p, 11);
    Environment env(inst, AgentModel{AgentKind::SlackAdversarial, {}}, 12, EnvOptions{true, false});
    Rng rng(13);
    std::exponential_distribution<double> ex(1.0);
    const long rounds = 100000;
    while (env.now() < rounds) {
        Mat m(3, 4);
        for (int r = 0; r < 3; ++r) {
            for (int x = 0; x < 4; ++x) m(r, x) = ex(rng);
            m.row(r) /= m.row(r).sum();
        }
        const long count = 1 + static_cast<long>(rng() % 50);
        env.run_rounds(m, Phase::Dummy, count, env.now() + count + 1 + static_cast<long>(rng() % 6));
    }
    long bad = 0, deviations = 0;
    for (const HiddenRecord& h : env.oracle_hidden()) {
        if (h.value_deficit > h.slack) ++bad;
        if (h.value_deficit > 0.0) ++deviations;
    }
    std::ostringstream os;
    os << bad << " violations over " << env.oracle_hidden().size() << " rounds (" << deviations
       << " non-myopic reports)";
    return {bad == 0 && static_cast<long>(env.oracle_hidden().size()) >= rounds, os.str()};
}

Verdict doubling() {
    ExperimentConfig c = reference_config();
    const long T = 1 << 14;
    double sum_known = 0.0, sum_doubling = 0.0, worst = 0.0;
    long failed = 0;
    const ProblemInstance inst = load_instance(c.instance);
    for (int rep = 0; rep < 20; ++rep) {
        ExperimentConfig k = c;
        k.algorithm = "known_T";
        k.base_seed = 3000;
        ExperimentConfig d = k;
        d.algorithm = "doubling";
        d.bandit.enforce_stage1_cap = false;
        const ReplicationResult rk = run_replication(k, inst, T, rep);
        const ReplicationResult rd = run_replication(d, inst, T, rep);
        if (!rk.ok || !rd.ok) ++failed;
        sum_known += rk.regret;
        sum_doubling += rd.regret;
        worst = std::max(worst, rd.regret / rk.regret);
    }
    const double ratio = sum_doubling / sum_known;
    std::ostringstream os;
    os << "mean doubling / known-T regret at T=2^14 over 20 paired seeds: " << ratio << " (worst pair " << worst
       << ", failed runs " << failed << ")";
    return {ratio <= 3.0 && failed == 0, os.str()};
}

Verdict lp_closeness() {
    long nonmono = 0, far = 0, checked = 0;
    double worst_gap = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RandomInstanceParams p;
        p.n_types = 2 + static_cast<int>(seed % 3);
        p.d = 3 + static_cast<int>(seed % 2);
        const RewardProfile prof = reward_profile(random_instance(p, 600 + seed));
        const double ustar = solve_lp_star(prof.f, prof.u, prof.vbar, 0.0).value;
        double prev = INFINITY;
        for (double m : {1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 5e-2, 1e-1}) {
            const LpSolution s = solve_lp_star(prof.f, prof.u, prof.vbar, m);
            if (s.status != LpStatus::Optimal) break;
            if (s.value > prev + 1e-15 * std::max(1.0, std::abs(prev))) ++nonmono;
            prev = s.value;
        }
        const double gap = std::abs(solve_lp_star(prof.f, prof.u, prof.vbar, 1e-9).value - ustar);
        worst_gap = std::max(worst_gap, gap);
        if (gap > 1e-6) ++far;
        ++checked;
    }
    std::ostringstream os;
    os << checked << " instances, monotonicity violations " << nonmono << ", limit gap above 1e-6 " << far
       << " (worst " << worst_gap << ")";
    return {nonmono == 0 && far == 0, os.str()};
}

Verdict run_criterion(int n) {
    switch (n) {
        case 1: return geometry();
        case 2: return from_oracle("revelation", reference_config());
        case 3: return from_oracle("sector", reference_config());
        case 4: return estimation();
        case 5: return regret_scaling();
        case 6: return from_oracle("coverage", reference_config());
        case 7: return from_oracle("containment", reference_config());
        case 8: return slack_contract();
        case 9: return doubling();
        case 10: return lp_closeness();
    }
    throw std::out_of_range("criterion must be in 1..10");
}

const double kLimits[] = {5, 60, 60, 600, 1800, 300, 600, 600, 600, 600};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> criteria;
    app.add_option("--criterion", criteria, "criterion number 1..10 (repeatable; all when omitted)");
    CLI11_PARSE(app, argc, argv);
    if (criteria.empty())
        for (int k = 1; k <= 10; ++k) criteria.push_back(k);
    bool all = true;
    for (int n : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run_criterion(n);
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = n >= 1 && n <= 10 && secs < kLimits[n - 1];
        const bool ok = v.passed && in_time;
        std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << " - " << v.detail << " [" << secs
                  << " s" << (in_time ? "" : ", over time limit") << "]" << std::endl;
        all = all && ok;
    }
    return all ? 0 : 1;
}

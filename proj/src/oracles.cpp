#include <algorithm>
#include <cmath>
#include <random>

#include "palab/errors.hpp"
#include "palab/harness.hpp"

namespace palab {

using nlohmann::json;

std::vector<std::string> oracle_names() { return {"revelation", "sector", "accuracy", "coverage", "containment"}; }

namespace {

ProblemInstance sweep_instance(const ExperimentConfig& c, int k) {
    if (k == 0) return load_instance(c.instance);
    InstanceSource src = c.instance;
    src.file.clear();
    src.seed = c.instance.seed + static_cast<std::uint64_t>(k);
    return load_instance(src);
}

OracleOutcome revelation_oracle(const ExperimentConfig& c) {
    OracleOutcome out;
    out.name = "revelation";
    Rng rng(c.base_seed ^ 0x5EED0001ULL);
    double worst = 0.0;
    long skipped = 0;
    std::uint64_t seed = c.base_seed * 1000003ULL;
    while (out.checked < c.oracle_sizes.revelation_instances) {
        RandomInstanceParams p;
        p.n_types = 1 + static_cast<int>(rng() % 3);
        p.d = 2 + static_cast<int>(rng() % 3);
        ProblemInstance inst;
        RewardProfile prof;
        try {
            inst = random_instance(p, ++seed);
            prof = reward_profile(inst);
        } catch (const std::exception&) {
            ++skipped;
            if (skipped > 10L * c.oracle_sizes.revelation_instances) break;
            continue;
        }
        LpSolution lp = solve_lp_star(prof.f, prof.u, prof.vbar, 0.0);
        const double opt = solve_opt_oracle(prof.f, prof.u, prof.v, prof.vbar);
        const double gap = lp.status == LpStatus::Optimal ? std::abs(lp.value - opt) : INFINITY;
        worst = std::max(worst, gap);
        if (!(gap <= 1e-7)) ++out.failures;
        ++out.checked;
    }
    out.passed = out.failures == 0 && out.checked == c.oracle_sizes.revelation_instances;
    out.detail = "max |LP* - OPT| = " + std::to_string(worst) + ", skipped degenerate draws " + std::to_string(skipped);
    return out;
}

OracleOutcome sector_oracle(const ExperimentConfig& c) {
    OracleOutcome out;
    out.name = "sector";
    const ProblemInstance inst = load_instance(c.instance);
    if (inst.n_types < 1 || inst.d < 3) {
        out.detail = "sector tests need d >= 3";
        return out;
    }
    const Isometry iso = make_isometry(inst.d, inst.iso_seed);
    const double margin = 0.02;
    long agree_adv = 0, checked_adv = 0;
    for (AgentKind kind : {AgentKind::ExactMyopic, AgentKind::SlackAdversarial}) {
        Environment env(inst, AgentModel{kind, {}}, c.base_seed + 17);
        const RewardAngles truth = reward_angles(env.profile(), iso);
        EstimationBudget b = make_budget(65536, inst.f_min(), inst.d, 1e-4);
        b.T_sec = 200;
        AngleEstimator est(env, b, iso, c.base_seed + 23);
        Rng rng(c.base_seed + 29);
        int done = 0;
        while (done < c.oracle_sizes.sector_cases) {
            const double alpha = 2 * kPi * uniform01(rng);
            const double delta = 0.1 + 1.9 * uniform01(rng);
            bool ok = true, inside = false;
            for (const auto& a : truth) {
                const double dist = arc(a(inst.d - 3), alpha);
                if (std::abs(dist - delta / 2) < margin) ok = false;
                if (dist < delta / 2) inside = true;
            }
            if (!ok) continue;
            ++done;
            const bool got = est.sec_test(alpha, delta);
            if (kind == AgentKind::ExactMyopic) {
                ++out.checked;
                if (got != inside) ++out.failures;
            } else {
                ++checked_adv;
                if (got == inside) ++agree_adv;
            }
        }
    }
    const double adv_rate = checked_adv ? static_cast<double>(agree_adv) / checked_adv : 0.0;
    out.passed = out.failures == 0 && adv_rate >= 0.99;
    out.detail = "myopic disagreements " + std::to_string(out.failures) + "/" + std::to_string(out.checked) +
                 ", slack-adversarial agreement " + std::to_string(agree_adv) + "/" + std::to_string(checked_adv);
    return out;
}

OracleOutcome accuracy_oracle(const ExperimentConfig& c) {
    OracleOutcome out;
    out.name = "accuracy";
    long est_fail = 0;
    double worst = 0.0;
    for (int k = 0; k < c.oracle_sizes.accuracy_instances; ++k) {
        const ProblemInstance inst = sweep_instance(c, k);
        if (inst.n_types < 2 || inst.d < 3) {
            out.detail = "estimation needs |Theta| >= 2 and d >= 3";
            return out;
        }
        Environment env(inst, AgentModel{AgentKind::ExactMyopic, {}}, c.base_seed + 101 + k);
        const Isometry iso = make_isometry(inst.d, inst.iso_seed);
        EstimationBudget b = make_budget(65536, inst.f_min(), inst.d, 1e-4);
        EstimatedAngles e = estimate_all(env, b, iso, c.base_seed + 211 + k);
        ++out.checked;
        if (!e.ok) {
            ++est_fail;
            ++out.failures;
            continue;
        }
        const double dist = angle_set_distance(reward_angles(env.profile(), iso), e.angles);
        worst = std::max(worst, dist);
        if (dist > 1e-4) ++out.failures;
    }
    out.passed = out.checked > 0 && out.failures <= 0.05 * out.checked;
    out.detail = "runs above 1e-4: " + std::to_string(out.failures) + "/" + std::to_string(out.checked) +
                 " (estimation failures " + std::to_string(est_fail) + "), worst D = " + std::to_string(worst);
    return out;
}

OracleOutcome coverage_oracle(const ExperimentConfig& c) {
    OracleOutcome out;
    out.name = "coverage";
    const ProblemInstance inst = load_instance(c.instance);
    long covered = 0;
    for (int r = 0; r < c.oracle_sizes.coverage_replications; ++r) {
        Environment env(inst, c.agent, c.base_seed + 5000 + r);
        BanditConfig bc = c.bandit;
        bc.inject_true_angles = true;
        bc.radius_override.reset();
        bc.seed = c.base_seed + 7000 + r;
        BanditResult res = pess_opt_linucb(env, c.oracle_sizes.coverage_T, bc);
        ++out.checked;
        if (res.covered_all)
            ++covered;
        else
            ++out.failures;
    }
    const double rate = out.checked ? static_cast<double>(covered) / out.checked : 0.0;
    out.passed = out.checked > 0 && rate >= 0.88;
    out.detail = "beta* inside every block ellipsoid in " + std::to_string(covered) + "/" + std::to_string(out.checked) +
                 " replications (delta = " + std::to_string(c.bandit.delta) + ")";
    return out;
}

}  // namespace

RewardAngles perturb_angles(const RewardAngles& truth, double radius, Rng& rng) {
    RewardAngles out = truth;
    for (auto& a : out) {
        const int k = static_cast<int>(a.size());
        Vec dir(k);
        double l1 = 0.0;
        for (int i = 0; i < k; ++i) {
            dir(i) = 2.0 * uniform01(rng) - 1.0;
            l1 += std::abs(dir(i));
        }
        if (l1 == 0.0) continue;
        const double scale = radius * uniform01(rng) / l1;
        for (int i = 0; i + 1 < k; ++i) a(i) = std::clamp(a(i) + scale * dir(i), 0.0, kPi);
        if (k > 0) a(k - 1) = wrap(a(k - 1) + scale * dir(k - 1), 2 * kPi);
    }
    return out;
}

long ic_violations(const Mat& mech, const Mat& vbar, double tol) {
    long bad = 0;
    for (int s = 0; s < mech.rows(); ++s)
        for (int t = 0; t < mech.rows(); ++t)
            if (s != t && vbar.row(s).dot(mech.row(s) - mech.row(t)) < -tol) ++bad;
    return bad;
}

namespace {

OracleOutcome containment_oracle(const ExperimentConfig& c) {
    OracleOutcome out;
    out.name = "containment";
    const double radius = c.bandit.pess_radius ? *c.bandit.pess_radius : 0.01;
    Rng rng(c.base_seed ^ 0xC0FFEEULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    long empty = 0, points = 0;
    for (int k = 0; k < c.oracle_sizes.containment_instances; ++k) {
        const ProblemInstance inst = sweep_instance(c, k);
        const RewardProfile prof = reward_profile(inst);
        const Isometry iso = make_isometry(inst.d, inst.iso_seed);
        PessimisticPolytope poly;
        if (c.oracle_sizes.corrupt_vbar > 0.0) {
            Mat vhat = prof.vbar;
            for (int s = 0; s < vhat.rows(); ++s) {
                Vec row = vhat.row(s).transpose();
                for (int x = 0; x < row.size(); ++x) row(x) += c.oracle_sizes.corrupt_vbar * gauss(rng);
                row.array() -= row.mean();
                vhat.row(s) = (row / row.norm()).transpose();
            }
            poly = ic_polytope(vhat, c.bandit.margin, radius);
        } else {
            const RewardAngles est = perturb_angles(reward_angles(prof, iso), radius, rng);
            poly = pessimistic_polytope(est, radius, c.bandit.margin, iso);
        }
        const std::vector<Mat> verts = enumerate_vertices(poly);
        if (verts.empty()) {
            ++empty;
            continue;
        }
        ++out.checked;
        std::exponential_distribution<double> expo(1.0);
        long bad = 0;
        for (int p = 0; p < c.oracle_sizes.containment_points; ++p) {
            Mat m = Mat::Zero(inst.n_types, inst.d);
            double total = 0.0;
            for (const Mat& v : verts) {
                const double w = expo(rng);
                m += w * v;
                total += w;
            }
            m /= total;
            ++points;
            if (ic_violations(m, prof.vbar, 1e-9) > 0) ++bad;
        }
        for (const Mat& v : verts) {
            ++points;
            if (ic_violations(v, prof.vbar, 1e-9) > 0) ++bad;
        }
        out.failures += bad;
    }
    out.passed = out.checked > 0 && out.failures == 0;
    out.detail = std::to_string(out.failures) + " IC violations over " + std::to_string(points) + " points in " +
                 std::to_string(out.checked) + " polytopes (" + std::to_string(empty) + " empty)";
    return out;
}

}  // namespace

std::vector<OracleOutcome> oracle_suite(const ExperimentConfig& config) {
    std::vector<std::string> wanted = config.oracles.empty() ? oracle_names() : config.oracles;
    std::vector<OracleOutcome> out;
    for (const auto& name : wanted) {
        try {
            if (name == "revelation")
                out.push_back(revelation_oracle(config));
            else if (name == "sector")
                out.push_back(sector_oracle(config));
            else if (name == "accuracy")
                out.push_back(accuracy_oracle(config));
            else if (name == "coverage")
                out.push_back(coverage_oracle(config));
            else if (name == "containment")
                out.push_back(containment_oracle(config));
            else
                throw DomainError("unknown oracle: " + name);
        } catch (const DomainError&) {
            throw;
        } catch (const std::exception& e) {
            out.push_back(OracleOutcome{name, false, 0, 1, std::string("error: ") + e.what()});
        }
    }
    return out;
}

json oracle_report(const std::vector<OracleOutcome>& outcomes) {
    json j = json::array();
    for (const auto& o : outcomes)
        j.push_back({{"name", o.name},
                     {"passed", o.passed},
                     {"checked", o.checked},
                     {"failures", o.failures},
                     {"detail", o.detail}});
    return j;
}

}  // namespace palab

#include "palab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "palab/errors.hpp"

namespace palab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_index(const ProblemInstance& inst, int theta, int x, int a) {
    if (theta < 0 || theta >= inst.n_types || x < 0 || x >= inst.d || a < 0 || a >= inst.n_actions)
        throw DomainError("index out of range");
}

Vec dirichlet_one(int n, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    Vec p(n);
    for (int k = 0; k < n; ++k) p(k) = expo(rng);
    return p / p.sum();
}

}  // namespace

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_categorical(const double* p, int n, Rng& rng) {
    double u = uniform01(rng);
    double acc = 0.0;
    int last = 0;
    for (int k = 0; k < n; ++k) {
        if (p[k] <= 0.0) continue;
        last = k;
        acc += p[k];
        if (u < acc) return k;
    }
    return last;
}

void ProblemInstance::validate() const {
    if (n_types < 1 || d < 2 || n_actions < 1 || n_outcomes < 1)
        throw DimensionError("instance dimensions must be positive and d >= 2");
    const std::size_t sz = static_cast<std::size_t>(n_types) * d * n_actions * n_outcomes;
    if (U.size() != sz || V.size() != sz || F.size() != sz || f.size() != n_types)
        throw DimensionError("instance tensor shapes do not match dimensions");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
    for (int t = 0; t < n_types; ++t)
        if (!(f(t) > 0.0)) throw AssumptionError("type distribution must be positive");
    if (std::abs(f.sum() - 1.0) > 1e-9) throw AssumptionError("type distribution must sum to one");
    for (std::size_t k = 0; k < sz; ++k) {
        if (!std::isfinite(U[k]) || !std::isfinite(V[k]) || std::abs(U[k]) > B + 1e-12 ||
            std::abs(V[k]) > B + 1e-12)
            throw AssumptionError("rewards must be bounded by B");
        if (F[k] < 0.0) throw AssumptionError("outcome probabilities must be nonnegative");
    }
    for (int t = 0; t < n_types; ++t)
        for (int x = 0; x < d; ++x)
            for (int a = 0; a < n_actions; ++a) {
                const double* p = outcome_dist(t, x, a);
                double s = 0.0;
                for (int o = 0; o < n_outcomes; ++o) s += p[o];
                if (std::abs(s - 1.0) > 1e-9) throw AssumptionError("outcome distribution must sum to one");
            }
    for (int t = 0; t < n_types; ++t)
        for (int x = 0; x < d; ++x) best_action(*this, t, x);
}

double expected_agent_reward(const ProblemInstance& inst, int theta, int x, int a) {
    check_index(inst, theta, x, a);
    const double* p = inst.outcome_dist(theta, x, a);
    double s = 0.0;
    for (int o = 0; o < inst.n_outcomes; ++o) s += inst.v_at(theta, x, a, o) * p[o];
    return s;
}

double expected_principal_reward(const ProblemInstance& inst, int theta, int x, int a) {
    check_index(inst, theta, x, a);
    const double* p = inst.outcome_dist(theta, x, a);
    double s = 0.0;
    for (int o = 0; o < inst.n_outcomes; ++o) s += inst.u_at(theta, x, a, o) * p[o];
    return s;
}

int best_action(const ProblemInstance& inst, int theta, int x) {
    int best = 0;
    double best_val = expected_agent_reward(inst, theta, x, 0);
    double second = -kInf;
    for (int a = 1; a < inst.n_actions; ++a) {
        double v = expected_agent_reward(inst, theta, x, a);
        if (v > best_val) {
            second = best_val;
            best_val = v;
            best = a;
        } else {
            second = std::max(second, v);
        }
    }
    if (best_val - second <= 1e-12) throw AssumptionError("best response is not unique");
    return best;
}

RewardProfile reward_profile(const ProblemInstance& inst) {
    RewardProfile p;
    const int T = inst.n_types, d = inst.d;
    p.v.resize(T, d);
    p.u.resize(T, d);
    p.vbar.resize(T, d);
    p.best.assign(static_cast<std::size_t>(T) * d, 0);
    p.B = inst.B;
    p.gamma = inst.gamma;
    p.f = inst.f;
    double min_norm = kInf;
    for (int t = 0; t < T; ++t) {
        for (int x = 0; x < d; ++x) {
            int a = best_action(inst, t, x);
            p.best[static_cast<std::size_t>(t) * d + x] = a;
            p.v(t, x) = expected_agent_reward(inst, t, x, a);
            p.u(t, x) = expected_principal_reward(inst, t, x, a);
        }
        Vec centered = p.v.row(t).transpose().array() - p.v.row(t).mean();
        double nrm = centered.norm();
        if (nrm <= 1e-12) throw AssumptionError("agent reward vector is parallel to the ones vector");
        min_norm = std::min(min_norm, nrm);
        p.vbar.row(t) = (centered / nrm).transpose();
    }
    for (int t = 0; t < T; ++t)
        for (int s = t + 1; s < T; ++s)
            if ((p.vbar.row(t) - p.vbar.row(s)).norm() <= 1e-12)
                throw AssumptionError("normalized agent reward vectors coincide");
    p.C0 = 2.0 * inst.B / min_norm;
    return p;
}

std::vector<std::string> angle_assumption_violations(const RewardAngles& angles, double tol) {
    std::vector<std::string> out;
    const int T = static_cast<int>(angles.size());
    if (T == 0) return out;
    const int k = static_cast<int>(angles[0].size());
    auto msg = [&](const std::string& what, int i, int a, int b) {
        std::ostringstream os;
        os << what << " (coordinate " << i + 1 << ", types " << a << "," << b << ")";
        out.push_back(os.str());
    };
    for (int t = 0; t < T; ++t)
        for (int i = 0; i + 1 < k; ++i) {
            double a = angles[t](i);
            if (std::abs(a) <= tol || std::abs(a - kPi / 2) <= tol || std::abs(a - kPi) <= tol)
                msg("inner angle at 0, pi/2 or pi", i, t, t);
        }
    for (int t = 0; t < T; ++t)
        for (int s = t + 1; s < T; ++s)
            for (int i = 0; i < k; ++i) {
                double a = angles[t](i), b = angles[s](i);
                if (i + 1 < k) {
                    if (std::abs(a - b) <= tol) msg("equal angles", i, t, s);
                    if (std::abs(std::abs(a - kPi / 2) - std::abs(b - kPi / 2)) <= tol)
                        msg("equal distances from pi/2", i, t, s);
                } else {
                    if (arc(a, b) <= tol) msg("equal angles", i, t, s);
                    if (arc(a, b + kPi) <= tol) msg("antipodal last angles", i, t, s);
                }
            }
    return out;
}

RewardAngles reward_angles(const RewardProfile& profile, const Isometry& iso) {
    if (profile.d() < 3) throw DimensionError("reward angles need d >= 3");
    if (iso.d() != profile.d()) throw DimensionError("isometry dimension mismatch");
    RewardAngles out;
    for (int t = 0; t < profile.n_types(); ++t) {
        Vec y = iso.apply(profile.vbar.row(t).transpose());
        y /= y.norm();
        out.push_back(inverse_embed(y));
    }
    return out;
}

Isometry find_isometry(const RewardProfile& profile, std::uint64_t iso_seed, int max_tries) {
    for (int k = 0; k < max_tries; ++k) {
        Isometry iso = make_isometry(profile.d(), iso_seed + static_cast<std::uint64_t>(k));
        if (angle_assumption_violations(reward_angles(profile, iso)).empty()) return iso;
    }
    throw AssumptionError("no rotation satisfies the angle assumption");
}

GapProfile gap_profile(const RewardAngles& angles) {
    if (angles.empty()) throw DomainError("empty angle set");
    const int T = static_cast<int>(angles.size());
    const int k = static_cast<int>(angles[0].size());
    GapProfile g;
    g.chi = Vec::Constant(k, kInf);
    g.chi_tilde = Vec::Constant(k, kInf);
    g.chi_bar = Vec::Constant(k, kInf);
    for (int i = 0; i + 1 < k; ++i) {
        double ct = 0.1;
        for (int t = 0; t < T; ++t) {
            double a = angles[t](i);
            ct = std::min({ct, std::abs(a), std::abs(a - kPi), std::abs(a - kPi / 2)});
        }
        g.chi_tilde(i) = ct;
    }
    for (int t = 0; t < T; ++t)
        for (int s = t + 1; s < T; ++s)
            for (int i = 0; i < k; ++i) {
                double a = angles[t](i), b = angles[s](i);
                if (i + 1 < k)
                    g.chi(i) = std::min(g.chi(i), std::abs(std::abs(a - kPi / 2) - std::abs(b - kPi / 2)));
                g.chi_bar(i) = std::min({g.chi_bar(i), arc(a, b), arc(a, b + kPi)});
            }
    g.delta_sin = kInf;
    for (int t = 0; t < T; ++t) {
        double p = 1.0;
        for (int i = 0; i + 1 < k; ++i) p *= std::sin(angles[t](i));
        g.delta_sin = std::min(g.delta_sin, p);
    }
    for (int i = 0; i < k; ++i)
        if (!(g.chi(i) > 0.0) || !(g.chi_tilde(i) > 0.0) || !(g.chi_bar(i) > 0.0))
            throw AssumptionError("degenerate angle gap");
    return g;
}

bool interior_point_feasible(const RewardProfile& profile, double eps) {
    const int T = profile.n_types(), d = profile.d();
    Mat pi = Mat::Constant(T, d, 1.0 / d) + eps * profile.vbar;
    if (pi.minCoeff() <= 0.0) return false;
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < T; ++s) {
            if (s == t) continue;
            double gap = profile.vbar.row(t).dot(pi.row(t) - pi.row(s));
            if (gap <= 1e-12) return false;
        }
    return true;
}

int sample_type(const ProblemInstance& inst, Rng& rng) {
    return sample_categorical(inst.f.data(), inst.n_types, rng);
}

int sample_outcome(const ProblemInstance& inst, int theta, int x, int a, Rng& rng) {
    return sample_categorical(inst.outcome_dist(theta, x, a), inst.n_outcomes, rng);
}

namespace {

ProblemInstance empty_instance(const RandomInstanceParams& p, std::uint64_t seed) {
    ProblemInstance inst;
    inst.n_types = p.n_types;
    inst.d = p.d;
    inst.n_actions = p.n_actions;
    inst.n_outcomes = p.n_outcomes;
    inst.B = p.B;
    inst.gamma = p.gamma;
    inst.seed = seed;
    inst.iso_seed = seed ^ 0x9e3779b97f4a7c15ULL;
    const std::size_t sz = static_cast<std::size_t>(p.n_types) * p.d * p.n_actions * p.n_outcomes;
    inst.U.assign(sz, 0.0);
    inst.V.assign(sz, 0.0);
    inst.F.assign(sz, 0.0);
    return inst;
}

void fill_outcomes_and_u(ProblemInstance& inst, Rng& rng) {
    for (int t = 0; t < inst.n_types; ++t)
        for (int x = 0; x < inst.d; ++x)
            for (int a = 0; a < inst.n_actions; ++a) {
                Vec p = dirichlet_one(inst.n_outcomes, rng);
                for (int o = 0; o < inst.n_outcomes; ++o) {
                    inst.F[inst.index(t, x, a, o)] = p(o);
                    inst.U[inst.index(t, x, a, o)] = inst.B * (2.0 * uniform01(rng) - 1.0);
                }
            }
}

Vec mixed_prior(int n, Rng& rng) {
    return 0.5 * Vec::Constant(n, 1.0 / n) + 0.5 * dirichlet_one(n, rng);
}

}  // namespace

ProblemInstance random_instance(const RandomInstanceParams& params, std::uint64_t seed) {
    Rng rng(seed);
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
        ProblemInstance inst = empty_instance(params, seed);
        inst.f = dirichlet_one(params.n_types, rng);
        fill_outcomes_and_u(inst, rng);
        for (double& v : inst.V) v = inst.B * (2.0 * uniform01(rng) - 1.0);
        try {
            inst.validate();
            RewardProfile prof = reward_profile(inst);
            if (params.d >= 3) {
                for (int t = 0; t < params.n_types; ++t)
                    for (int s = t + 1; s < params.n_types; ++s)
                        if ((prof.vbar.row(t) + prof.vbar.row(s)).norm() <= 1e-9)
                            throw AssumptionError("antipodal reward vectors");
                Isometry iso = find_isometry(prof, inst.iso_seed);
                inst.iso_seed = iso.seed;
            }
            return inst;
        } catch (const AssumptionError&) {
        }
    }
    throw AssumptionError("random instance generation exceeded the retry cap");
}

bool gaps_respected(const RewardAngles& angles, const GapRequirements& req) {
    if (!angle_assumption_violations(angles).empty()) return false;
    const int k = static_cast<int>(angles[0].size());
    for (const auto& a : angles)
        for (int i = 0; i + 1 < k; ++i) {
            double x = a(i);
            if (std::min({x, kPi - x, std::abs(x - kPi / 2)}) < req.min_pole) return false;
        }
    GapProfile g = gap_profile(angles);
    for (int i = 0; i < k; ++i) {
        if (g.chi(i) < req.min_chi || g.chi_bar(i) < req.min_chi_bar) return false;
        if (g.chi_tilde(i) < std::min(req.min_chi_tilde, 0.1)) return false;
    }
    return true;
}

RewardAngles sample_gapped_angles(int n_types, int d, const GapRequirements& req, Rng& rng) {
    if (d < 3) throw DimensionError("angles need d >= 3");
    const int k = d - 2;
    RewardAngles angles(n_types, Vec(k));
    const double lo = req.min_pole, hi = kPi / 2 - req.min_pole;
    if (hi <= lo) throw DomainError("pole margin leaves no room");
    // Coordinates are independent, so each one is drawn by its own rejection loop.
    for (int i = 0; i < k; ++i) {
        bool ok = false;
        for (int tries = 0; tries < req.max_tries && !ok; ++tries) {
            for (int t = 0; t < n_types; ++t) {
                if (i + 1 < k) {
                    double r = lo + (hi - lo) * uniform01(rng);
                    angles[t](i) = uniform01(rng) < 0.5 ? kPi / 2 - r : kPi / 2 + r;
                } else {
                    angles[t](i) = 2.0 * kPi * uniform01(rng);
                }
            }
            ok = true;
            for (int t = 0; t < n_types && ok; ++t)
                for (int s = t + 1; s < n_types && ok; ++s) {
                    double a = angles[t](i), b = angles[s](i);
                    if (i + 1 < k && std::abs(std::abs(a - kPi / 2) - std::abs(b - kPi / 2)) < req.min_chi)
                        ok = false;
                    if (std::min(arc(a, b), arc(a, b + kPi)) < req.min_chi_bar) ok = false;
                }
        }
        if (!ok) throw AssumptionError("could not sample gap-respecting angles");
    }
    if (!gaps_respected(angles, req)) throw AssumptionError("sampled angles violate the gap requirements");
    return angles;
}

ProblemInstance instance_from_vbar(const Mat& vbar, const RandomInstanceParams& params,
                                   std::uint64_t seed, std::uint64_t iso_seed) {
    if (vbar.rows() != params.n_types || vbar.cols() != params.d)
        throw DimensionError("vbar shape does not match parameters");
    Rng rng(seed ^ 0x5bd1e995ULL);
    ProblemInstance inst = empty_instance(params, seed);
    inst.iso_seed = iso_seed;
    inst.f = mixed_prior(params.n_types, rng);
    fill_outcomes_and_u(inst, rng);
    const double scale = 0.5 * params.B;
    for (int t = 0; t < params.n_types; ++t)
        for (int x = 0; x < params.d; ++x) {
            double top = scale * vbar(t, x);
            for (int a = 0; a < params.n_actions; ++a) {
                double val = a == 0 ? top : top - params.B * (0.1 + 0.4 * uniform01(rng));
                for (int o = 0; o < params.n_outcomes; ++o) inst.V[inst.index(t, x, a, o)] = val;
            }
        }
    inst.validate();
    return inst;
}

ProblemInstance gapped_instance(const RandomInstanceParams& params, const GapRequirements& req,
                                std::uint64_t seed) {
    Rng rng(seed);
    RewardAngles angles = sample_gapped_angles(params.n_types, params.d, req, rng);
    const std::uint64_t iso_seed = rng();
    Isometry iso = make_isometry(params.d, iso_seed);
    Mat vbar(params.n_types, params.d);
    for (int t = 0; t < params.n_types; ++t) vbar.row(t) = iso.inverse(spherical_embed(angles[t])).transpose();
    ProblemInstance inst = instance_from_vbar(vbar, params, seed, iso_seed);
    double fmin = req.min_f > 0.0 ? req.min_f : 0.5 / params.n_types;
    if (inst.f_min() < fmin - 1e-12) throw AssumptionError("type distribution below the requested minimum");
    return inst;
}

nlohmann::json instance_to_json(const ProblemInstance& inst) {
    nlohmann::json j;
    j["n_types"] = inst.n_types;
    j["d"] = inst.d;
    j["n_actions"] = inst.n_actions;
    j["n_outcomes"] = inst.n_outcomes;
    j["f"] = std::vector<double>(inst.f.data(), inst.f.data() + inst.f.size());
    j["U"] = inst.U;
    j["V"] = inst.V;
    j["F"] = inst.F;
    j["gamma"] = inst.gamma;
    j["B"] = inst.B;
    j["seed"] = inst.seed;
    j["iso_seed"] = inst.iso_seed;
    return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
    ProblemInstance inst;
    try {
        inst.n_types = j.at("n_types").get<int>();
        inst.d = j.at("d").get<int>();
        inst.n_actions = j.at("n_actions").get<int>();
        inst.n_outcomes = j.at("n_outcomes").get<int>();
        auto f = j.at("f").get<std::vector<double>>();
        inst.f = Eigen::Map<Vec>(f.data(), static_cast<Eigen::Index>(f.size()));
        inst.U = j.at("U").get<std::vector<double>>();
        inst.V = j.at("V").get<std::vector<double>>();
        inst.F = j.at("F").get<std::vector<double>>();
        inst.gamma = j.value("gamma", 0.9);
        inst.B = j.value("B", 1.0);
        inst.seed = j.value("seed", std::uint64_t{0});
        inst.iso_seed = j.value("iso_seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("malformed instance document: ") + e.what());
    }
    inst.validate();
    return inst;
}

}  // namespace palab

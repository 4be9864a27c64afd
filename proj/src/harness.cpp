#include "palab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "palab/errors.hpp"

namespace palab {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw DomainError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw DomainError("unknown key '" + it.key() + "' in " + where + " (allowed: " + list + ")");
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double regret_scale(double T) {
    const double l = std::log(T);
    return std::sqrt(T) * l * l * l;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, {"instance", "agent", "algorithm", "T", "replications", "base_seed", "threads", "bandit",
                   "estimation_n", "out_dir", "trace_stride", "oracles", "oracle_sizes"},
               "config");
    ExperimentConfig c;
    if (j.contains("instance")) {
        const json& ji = j.at("instance");
        check_keys(ji, {"file", "n_types", "d", "n_actions", "n_outcomes", "B", "gamma", "gapped", "seed", "gaps"},
                   "instance");
        read(ji, "file", c.instance.file);
        read(ji, "n_types", c.instance.params.n_types);
        read(ji, "d", c.instance.params.d);
        read(ji, "n_actions", c.instance.params.n_actions);
        read(ji, "n_outcomes", c.instance.params.n_outcomes);
        read(ji, "B", c.instance.params.B);
        read(ji, "gamma", c.instance.params.gamma);
        read(ji, "gapped", c.instance.gapped);
        read(ji, "seed", c.instance.seed);
        if (ji.contains("gaps")) {
            const json& jg = ji.at("gaps");
            check_keys(jg, {"min_chi", "min_chi_tilde", "min_pole", "min_chi_bar", "min_f"}, "instance.gaps");
            read(jg, "min_chi", c.instance.gaps.min_chi);
            read(jg, "min_chi_tilde", c.instance.gaps.min_chi_tilde);
            read(jg, "min_pole", c.instance.gaps.min_pole);
            read(jg, "min_chi_bar", c.instance.gaps.min_chi_bar);
            read(jg, "min_f", c.instance.gaps.min_f);
        }
    }
    if (j.contains("agent")) {
        const json& ja = j.at("agent");
        if (ja.is_string()) {
            c.agent.kind = agent_kind_from_string(ja.get<std::string>());
        } else {
            check_keys(ja, {"kind", "script"}, "agent");
            c.agent.kind = agent_kind_from_string(ja.at("kind").get<std::string>());
            if (ja.contains("script"))
                for (auto it = ja.at("script").begin(); it != ja.at("script").end(); ++it)
                    c.agent.script[std::stol(it.key())] = it.value().get<int>();
        }
    }
    read(j, "algorithm", c.algorithm);
    static const std::set<std::string> algos{"known_T", "doubling", "classical_baseline", "estimation_only"};
    if (!algos.count(c.algorithm))
        throw DomainError("algorithm must be one of known_T, doubling, classical_baseline, estimation_only");
    if (j.contains("T")) {
        c.T_list.clear();
        if (j.at("T").is_array())
            for (const auto& t : j.at("T")) c.T_list.push_back(t.get<long>());
        else
            c.T_list.push_back(j.at("T").get<long>());
    }
    for (long T : c.T_list)
        if (T < 1) throw DomainError("every horizon in T must be positive");
    read(j, "replications", c.replications);
    if (c.replications < 1) throw DomainError("replications must be at least 1");
    read(j, "base_seed", c.base_seed);
    read(j, "threads", c.threads);
    if (c.threads < 1) throw DomainError("threads must be at least 1");
    if (j.contains("bandit")) {
        const json& jb = j.at("bandit");
        check_keys(jb, {"lambda", "delta", "margin", "noise_scale", "ambient_dim_radius", "radius", "pess_radius",
                        "eps_target", "T_sec", "f_min_hint", "inject_true_angles", "enforce_stage1_cap", "tail_rule",
                        "doubling_first_k"},
                   "bandit");
        BanditConfig& b = c.bandit;
        read(jb, "lambda", b.lambda);
        read(jb, "delta", b.delta);
        read(jb, "margin", b.margin);
        read(jb, "noise_scale", b.noise_scale);
        read(jb, "ambient_dim_radius", b.ambient_dim_radius);
        if (jb.contains("radius") && !jb.at("radius").is_null()) b.radius_override = jb.at("radius").get<double>();
        if (jb.contains("pess_radius") && !jb.at("pess_radius").is_null())
            b.pess_radius = jb.at("pess_radius").get<double>();
        read(jb, "eps_target", b.eps_target);
        read(jb, "T_sec", b.T_sec);
        read(jb, "f_min_hint", b.f_min_hint);
        read(jb, "inject_true_angles", b.inject_true_angles);
        read(jb, "enforce_stage1_cap", b.enforce_stage1_cap);
        read(jb, "tail_rule", b.tail_rule);
        read(jb, "doubling_first_k", b.doubling_first_k);
        if (b.lambda <= 0.0) throw DomainError("bandit.lambda must be positive");
        if (b.delta <= 0.0 || b.delta >= 1.0) throw DomainError("bandit.delta must lie in (0, 1)");
        if (b.tail_rule != "repeat_last" && b.tail_rule != "greedy")
            throw DomainError("bandit.tail_rule must be repeat_last or greedy");
    }
    read(j, "estimation_n", c.estimation_n);
    read(j, "out_dir", c.out_dir);
    read(j, "trace_stride", c.trace_stride);
    if (j.contains("oracles")) {
        c.oracles = j.at("oracles").get<std::vector<std::string>>();
        const auto names = oracle_names();
        for (const auto& o : c.oracles)
            if (std::find(names.begin(), names.end(), o) == names.end()) throw DomainError("unknown oracle: " + o);
    }
    if (j.contains("oracle_sizes")) {
        const json& jo = j.at("oracle_sizes");
        check_keys(jo, {"revelation_instances", "sector_cases", "accuracy_instances", "coverage_replications",
                        "coverage_T", "containment_instances", "containment_points", "corrupt_vbar"},
                   "oracle_sizes");
        OracleSizes& o = c.oracle_sizes;
        read(jo, "revelation_instances", o.revelation_instances);
        read(jo, "sector_cases", o.sector_cases);
        read(jo, "accuracy_instances", o.accuracy_instances);
        read(jo, "coverage_replications", o.coverage_replications);
        read(jo, "coverage_T", o.coverage_T);
        read(jo, "containment_instances", o.containment_instances);
        read(jo, "containment_points", o.containment_points);
        read(jo, "corrupt_vbar", o.corrupt_vbar);
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    const auto& p = c.instance.params;
    const auto& g = c.instance.gaps;
    j["instance"] = {{"file", c.instance.file},
                     {"n_types", p.n_types},
                     {"d", p.d},
                     {"n_actions", p.n_actions},
                     {"n_outcomes", p.n_outcomes},
                     {"B", p.B},
                     {"gamma", p.gamma},
                     {"gapped", c.instance.gapped},
                     {"seed", c.instance.seed},
                     {"gaps",
                      {{"min_chi", g.min_chi},
                       {"min_chi_tilde", g.min_chi_tilde},
                       {"min_pole", g.min_pole},
                       {"min_chi_bar", g.min_chi_bar},
                       {"min_f", g.min_f}}}};
    json script = json::object();
    for (const auto& [t, s] : c.agent.script) script[std::to_string(t)] = s;
    j["agent"] = {{"kind", to_string(c.agent.kind)}, {"script", script}};
    j["algorithm"] = c.algorithm;
    j["T"] = c.T_list;
    j["replications"] = c.replications;
    j["base_seed"] = c.base_seed;
    j["threads"] = c.threads;
    const BanditConfig& b = c.bandit;
    j["bandit"] = {{"lambda", b.lambda},
                   {"delta", b.delta},
                   {"margin", b.margin},
                   {"noise_scale", b.noise_scale},
                   {"ambient_dim_radius", b.ambient_dim_radius},
                   {"eps_target", b.eps_target},
                   {"T_sec", b.T_sec},
                   {"f_min_hint", b.f_min_hint},
                   {"inject_true_angles", b.inject_true_angles},
                   {"enforce_stage1_cap", b.enforce_stage1_cap},
                   {"tail_rule", b.tail_rule},
                   {"doubling_first_k", b.doubling_first_k}};
    if (b.radius_override) j["bandit"]["radius"] = *b.radius_override;
    if (b.pess_radius) j["bandit"]["pess_radius"] = *b.pess_radius;
    j["estimation_n"] = c.estimation_n;
    j["out_dir"] = c.out_dir;
    j["trace_stride"] = c.trace_stride;
    j["oracles"] = c.oracles;
    const OracleSizes& o = c.oracle_sizes;
    j["oracle_sizes"] = {{"revelation_instances", o.revelation_instances},
                         {"sector_cases", o.sector_cases},
                         {"accuracy_instances", o.accuracy_instances},
                         {"coverage_replications", o.coverage_replications},
                         {"coverage_T", o.coverage_T},
                         {"containment_instances", o.containment_instances},
                         {"containment_points", o.containment_points},
                         {"corrupt_vbar", o.corrupt_vbar}};
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DomainError("config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

ProblemInstance load_instance(const InstanceSource& src) {
    if (!src.file.empty()) {
        std::ifstream in(src.file);
        if (!in) throw DomainError("cannot open instance file " + src.file);
        json j;
        in >> j;
        return instance_from_json(j);
    }
    if (src.gapped && src.params.n_types >= 2 && src.params.d >= 3)
        return gapped_instance(src.params, src.gaps, src.seed);
    return random_instance(src.params, src.seed);
}

RegretFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    RegretFit fit;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size() && k < y.size(); ++k)
        if (x[k] > 0.0 && y[k] > 0.0) {
            lx.push_back(std::log(x[k]));
            ly.push_back(std::log(y[k]));
        }
    const std::size_t n = lx.size();
    if (n < 2) return fit;
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx <= 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.valid = true;
    return fit;
}

ReplicationResult run_replication(const ExperimentConfig& config, const ProblemInstance& inst, long T, int rep) {
    ReplicationResult r;
    r.T = T;
    r.replication = rep;
    r.seed = config.base_seed + static_cast<std::uint64_t>(rep);
    Environment env(inst, config.agent, r.seed, EnvOptions{false, true});
    BanditConfig bc = config.bandit;
    bc.seed = r.seed * 0x9E3779B97F4A7C15ULL + 1;
    const Isometry iso = make_isometry(inst.d, inst.iso_seed);

    if (config.algorithm == "estimation_only") {
        if (inst.n_types < 2) throw DomainError("estimation_only needs at least two types");
        const double eps = bc.eps_target > 0.0 ? bc.eps_target : 1e-4;
        EstimationBudget budget = make_budget(config.estimation_n, inst.f_min(), inst.d, eps);
        if (bc.T_sec > 0) budget.T_sec = bc.T_sec;
        EstimatedAngles est = estimate_all(env, budget, iso, bc.seed, nullptr);
        r.ok = est.ok;
        if (!est.ok) r.failure = est.failure_stage + ": " + est.failure_message;
        r.stage1_rounds = est.rounds_used;
        if (est.ok) r.angle_error = angle_set_distance(reward_angles(env.profile(), iso), est.angles);
    } else {
        BanditResult res;
        if (config.algorithm == "known_T") {
            res = pess_opt_linucb(env, T, bc);
        } else if (config.algorithm == "doubling") {
            res = doubling_pipeline(env, T, bc);
        } else {
            PessimisticPolytope poly = ic_polytope(env.profile().vbar, bc.margin, 0.0);
            res = classical_linucb(env, poly, T, bc);
        }
        r.ok = res.ok;
        if (!res.ok) r.failure = res.failure_stage + ": " + res.failure_message;
        r.stage1_rounds = res.stage1_rounds;
        r.n = res.n;
        if (res.estimation.ok && !res.estimation.angles.empty())
            r.angle_error = angle_set_distance(reward_angles(env.profile(), iso), res.estimation.angles);
    }
    const auto& tr = env.trace();
    r.rounds = env.now();
    // Regret is reported at the horizon even if an unfinished estimation test ran past it.
    const long horizon = config.algorithm == "estimation_only" ? env.now() : std::min<long>(T, env.now());
    r.regret = horizon > 0 ? tr[horizon - 1].regret : 0.0;
    r.realized_reward = env.realized_reward();
    const long stride = config.trace_stride > 0 ? config.trace_stride : std::max<long>(1, horizon / 512);
    for (long t = stride; t <= horizon; t += stride) {
        const RoundTrace& p = tr[t - 1];
        r.trace.push_back({p.t, p.regret, p.mech_hash, p.phase});
    }
    if (horizon > 0 && (r.trace.empty() || r.trace.back().t != horizon)) {
        const RoundTrace& p = tr[horizon - 1];
        r.trace.push_back({p.t, p.regret, p.mech_hash, p.phase});
    }
    return r;
}

namespace {

struct TStats {
    long T = 0;
    int runs = 0;
    int failures = 0;
    double mean_regret = 0.0;
    double sd_regret = 0.0;
    double mean_stage1 = 0.0;
    double mean_angle_error = -1.0;
};

json summarize(const std::string& algorithm, const std::vector<ReplicationResult>& runs) {
    std::map<long, std::vector<const ReplicationResult*>> byT;
    for (const auto& r : runs) byT[r.T].push_back(&r);
    json per_T = json::array();
    std::vector<double> xs, ys;
    long failures = 0;
    for (const auto& [T, rs] : byT) {
        TStats s;
        s.T = T;
        s.runs = static_cast<int>(rs.size());
        std::vector<double> reg;
        double ae = 0.0;
        int ae_n = 0;
        for (const auto* r : rs) {
            if (!r->ok) {
                ++s.failures;
                continue;
            }
            reg.push_back(r->regret);
            s.mean_stage1 += r->stage1_rounds;
            if (r->angle_error >= 0.0) {
                ae += r->angle_error;
                ++ae_n;
            }
        }
        failures += s.failures;
        if (!reg.empty()) {
            for (double v : reg) s.mean_regret += v;
            s.mean_regret /= reg.size();
            for (double v : reg) s.sd_regret += (v - s.mean_regret) * (v - s.mean_regret);
            s.sd_regret = reg.size() > 1 ? std::sqrt(s.sd_regret / (reg.size() - 1)) : 0.0;
            s.mean_stage1 /= reg.size();
            xs.push_back(static_cast<double>(T));
            ys.push_back(s.mean_regret);
        }
        if (ae_n > 0) s.mean_angle_error = ae / ae_n;
        per_T.push_back({{"T", T},
                         {"runs", s.runs},
                         {"failures", s.failures},
                         {"failure_rate", static_cast<double>(s.failures) / s.runs},
                         {"mean_regret", s.mean_regret},
                         {"sd_regret", s.sd_regret},
                         {"regret_over_sqrtT_log3T", s.mean_regret / regret_scale(static_cast<double>(T))},
                         {"mean_stage1_rounds", s.mean_stage1},
                         {"mean_angle_error", s.mean_angle_error}});
    }
    json rep;
    rep["algorithm"] = algorithm;
    rep["per_T"] = per_T;
    rep["failures"] = failures;
    rep["failure_rate"] = runs.empty() ? 0.0 : static_cast<double>(failures) / runs.size();
    RegretFit fit = fit_loglog(xs, ys);
    rep["slope_fit"] = {{"valid", fit.valid}, {"slope", fit.slope}, {"intercept", fit.intercept},
                        {"points", xs.size()}};
    return rep;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const ProblemInstance inst = load_instance(config.instance);
    std::vector<std::pair<long, int>> jobs;
    for (long T : config.T_list)
        for (int r = 0; r < config.replications; ++r) jobs.emplace_back(T, r);
    ExperimentResult out;
    out.runs.resize(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            try {
                out.runs[k] = run_replication(config, inst, jobs[k].first, jobs[k].second);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const int nthreads = std::min<int>(config.threads, static_cast<int>(std::max<std::size_t>(1, jobs.size())));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t k = 0; k < jobs.size(); ++k)
        if (!errors[k].empty())
            throw DomainError("replication " + std::to_string(jobs[k].second) + " at T=" +
                              std::to_string(jobs[k].first) + " failed: " + errors[k]);
    std::stable_sort(out.runs.begin(), out.runs.end(), [](const auto& a, const auto& b) {
        return a.T != b.T ? a.T < b.T : a.replication < b.replication;
    });
    out.report = summarize(config.algorithm, out.runs);
    out.report["instance"] = {{"n_types", inst.n_types}, {"d", inst.d}, {"seed", inst.seed}, {"f_min", inst.f_min()}};
    if (!config.oracles.empty()) {
        const auto outcomes = oracle_suite(config);
        out.report["oracles"] = oracle_report(outcomes);
    }
    return out;
}

namespace {

std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> mean_curves(
    const std::map<long, std::map<long, std::pair<double, int>>>& acc) {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
    for (const auto& [T, pts] : acc) {
        std::vector<std::pair<double, double>> line;
        for (const auto& [t, sum] : pts) line.emplace_back(static_cast<double>(t), sum.first / sum.second);
        series.emplace_back("T=" + std::to_string(T), line);
    }
    return series;
}

void write_charts(const std::string& dir, const std::map<long, std::map<long, std::pair<double, int>>>& curves,
                  const json& report) {
    std::ofstream(dir + "/regret.svg") << svg_line_chart("Mean cumulative pseudo-regret", "round t",
                                                         "regret", mean_curves(curves), false, false);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : report.at("per_T"))
        if (p.at("mean_regret").get<double>() > 0.0)
            pts.emplace_back(p.at("T").get<double>(), p.at("mean_regret").get<double>());
    std::ofstream(dir + "/regret_vs_T.svg")
        << svg_line_chart("Mean pseudo-regret at the horizon", "T", "regret", {{"mean regret", pts}}, true, true);
}

}  // namespace

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const std::string dir = config.out_dir;
    std::ofstream per(dir + "/per_round.csv");
    per << "T,replication,t,regret,mechanism_hash,phase\n";
    std::map<long, std::map<long, std::pair<double, int>>> curves;
    for (const auto& r : result.runs) {
        for (const auto& p : r.trace) {
            per << r.T << ',' << r.replication << ',' << p.t << ',' << fmt(p.regret) << ',' << p.mech_hash << ','
                << to_string(p.phase) << '\n';
            if (r.ok) {
                auto& c = curves[r.T][p.t];
                c.first += p.regret;
                ++c.second;
            }
        }
    }
    std::ofstream sum(dir + "/summary.csv");
    sum << "T,replication,seed,ok,failure,regret,realized_reward,stage1_rounds,n,angle_error,rounds\n";
    for (const auto& r : result.runs)
        sum << r.T << ',' << r.replication << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << csv_safe(r.failure)
            << ',' << fmt(r.regret) << ',' << fmt(r.realized_reward) << ',' << r.stage1_rounds << ',' << r.n << ','
            << fmt(r.angle_error) << ',' << r.rounds << '\n';
    json rep = result.report;
    rep["config"] = config_to_json(config);
    std::ofstream(dir + "/report.json") << rep.dump(2) << '\n';
    write_charts(dir, curves, result.report);
}

json report_from_dir(const std::string& dir) {
    std::ifstream sum(dir + "/summary.csv");
    if (!sum) throw DomainError("no summary.csv in " + dir);
    std::string line;
    std::getline(sum, line);
    std::vector<ReplicationResult> runs;
    while (std::getline(sum, line)) {
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 11) throw DomainError("malformed summary.csv row: " + line);
        ReplicationResult r;
        r.T = std::stol(f[0]);
        r.replication = std::stoi(f[1]);
        r.seed = std::stoull(f[2]);
        r.ok = f[3] == "1";
        r.failure = f[4];
        r.regret = std::stod(f[5]);
        r.realized_reward = std::stod(f[6]);
        r.stage1_rounds = std::stol(f[7]);
        r.n = std::stol(f[8]);
        r.angle_error = std::stod(f[9]);
        r.rounds = std::stol(f[10]);
        runs.push_back(r);
    }
    std::string algorithm = "unknown";
    {
        std::ifstream rj(dir + "/report.json");
        if (rj) {
            json old;
            rj >> old;
            algorithm = old.value("algorithm", algorithm);
        }
    }
    json rep = summarize(algorithm, runs);
    std::set<std::pair<long, int>> ok_runs;
    for (const auto& r : runs)
        if (r.ok) ok_runs.insert({r.T, r.replication});
    std::map<long, std::map<long, std::pair<double, int>>> curves;
    std::ifstream per(dir + "/per_round.csv");
    if (per) {
        std::getline(per, line);
        while (std::getline(per, line)) {
            auto f = split(line, ',');
            if (f.size() != 6) continue;
            const long T = std::stol(f[0]);
            if (!ok_runs.count({T, std::stoi(f[1])})) continue;
            auto& c = curves[T][std::stol(f[2])];
            c.first += std::stod(f[3]);
            ++c.second;
        }
    }
    write_charts(dir, curves, rep);
    return rep;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series,
                           bool log_x, bool log_y) {
    const double W = 720, H = 440, L = 80, R = 150, Tm = 40, Bm = 60;
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.second) {
            if ((log_x && x <= 0) || (log_y && y <= 0)) continue;
            x0 = std::min(x0, tx(x));
            x1 = std::max(x1, tx(x));
            y0 = std::min(y0, ty(y));
            y1 = std::max(y1, ty(y));
        }
    if (x0 > x1) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    if (x1 - x0 < 1e-12) x1 = x0 + 1;
    if (y1 - y0 < 1e-12) y1 = y0 + 1;
    if (!log_y) y0 = std::min(y0, 0.0);
    auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - Bm - (ty(v) - y0) / (y1 - y0) * (H - Tm - Bm); };
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
                                   "#7f7f7f", "#bcbd22", "#17becf"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - Bm << "\" x2=\"" << W - R << "\" y2=\"" << H - Bm
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
        const double xs = L + (W - L - R) * k / 4, ys = H - Bm - (H - Tm - Bm) * k / 4;
        o << "<text x=\"" << xs << "\" y=\"" << H - Bm + 18 << "\" text-anchor=\"middle\">"
          << fmt(log_x ? std::pow(10.0, xv) : xv).substr(0, 8) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << ys + 4 << "\" text-anchor=\"end\">"
          << fmt(log_y ? std::pow(10.0, yv) : yv).substr(0, 8) << "</text>\n";
        o << "<line x1=\"" << L << "\" y1=\"" << ys << "\" x2=\"" << W - R << "\" y2=\"" << ys
          << "\" stroke=\"#ddd\"/>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << x_label
      << (log_x ? " (log)" : "") << "</text>\n";
    o << "<text x=\"18\" y=\"" << (Tm + H - Bm) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (Tm + H - Bm) / 2 << ")\">" << y_label << (log_y ? " (log)" : "") << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* col = colors[k % 10];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[k].second) {
            if ((log_x && x <= 0) || (log_y && y <= 0)) continue;
            o << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
        }
        o << "\"/>\n";
        o << "<text x=\"" << W - R + 10 << "\" y=\"" << Tm + 16 * (k + 1) << "\" fill=\"" << col << "\">"
          << series[k].first << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace palab

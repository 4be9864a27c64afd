#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "palab/harness.hpp"

using namespace palab;
using nlohmann::json;

namespace {

struct Overrides {
    std::string config;
    std::string out_dir;
    std::vector<long> T;
    int replications = 0;
    long base_seed = -1;
    int threads = 0;
    std::string algorithm;
    std::string agent;
    std::string instance_file;
    long T_sec = -1;
    double eps_target = -1;
    double margin = -1;
    double radius = -1;
    double lambda = -1;
    double delta = -1;
    std::vector<std::string> oracles;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "JSON experiment config");
    cmd->add_option("-o,--out", o.out_dir, "output directory");
    cmd->add_option("--T", o.T, "horizons (repeatable)");
    cmd->add_option("--replications", o.replications, "replications per horizon");
    cmd->add_option("--seed", o.base_seed, "base seed");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_option("--algorithm", o.algorithm, "known_T | doubling | classical_baseline | estimation_only");
    cmd->add_option("--agent", o.agent, "exact_myopic | slack_adversarial | scripted_deviation");
    cmd->add_option("--instance", o.instance_file, "instance JSON file");
    cmd->add_option("--T-sec", o.T_sec, "rounds per sector test");
    cmd->add_option("--eps", o.eps_target, "target angle accuracy");
    cmd->add_option("--margin", o.margin, "LP margin");
    cmd->add_option("--radius", o.radius, "fixed ellipsoid radius");
    cmd->add_option("--lambda", o.lambda, "ridge parameter");
    cmd->add_option("--delta", o.delta, "confidence parameter");
    cmd->add_option("--oracle", o.oracles, "oracle to run (repeatable)");
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (!o.out_dir.empty()) c.out_dir = o.out_dir;
    if (!o.T.empty()) c.T_list = o.T;
    if (o.replications > 0) c.replications = o.replications;
    if (o.base_seed >= 0) c.base_seed = static_cast<std::uint64_t>(o.base_seed);
    if (o.threads > 0) c.threads = o.threads;
    if (!o.algorithm.empty()) {
        json j = config_to_json(c);
        j["algorithm"] = o.algorithm;
        c.algorithm = config_from_json(j).algorithm;
    }
    if (!o.agent.empty()) c.agent.kind = agent_kind_from_string(o.agent);
    if (!o.instance_file.empty()) c.instance.file = o.instance_file;
    if (o.T_sec > 0) c.bandit.T_sec = o.T_sec;
    if (o.eps_target > 0) c.bandit.eps_target = o.eps_target;
    if (o.margin >= 0) c.bandit.margin = o.margin;
    if (o.radius >= 0) c.bandit.radius_override = o.radius;
    if (o.lambda > 0) c.bandit.lambda = o.lambda;
    if (o.delta > 0) c.bandit.delta = o.delta;
    if (!o.oracles.empty()) c.oracles = o.oracles;
    return c;
}

bool print_oracles(const std::vector<OracleOutcome>& outcomes) {
    bool all = true;
    for (const auto& r : outcomes) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        all = all && r.passed;
    }
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"principal-agent learning laboratory"};
    app.require_subcommand(1);

    Overrides run_o;
    auto* run = app.add_subcommand("run", "run replications and write CSV, JSON and SVG outputs");
    add_overrides(run, run_o);

    Overrides oracle_o;
    std::string oracle_json;
    auto* oracle = app.add_subcommand("oracle", "run the oracle suite; exit 0 only if all requested oracles pass");
    add_overrides(oracle, oracle_o);
    oracle->add_option("--json", oracle_json, "write the oracle report to this file");
    double corrupt = 0.0;
    oracle->add_option("--corrupt-vbar", corrupt, "noise level for the containment negative control");

    RandomInstanceParams gp;
    GapRequirements gaps;
    bool gapped = false;
    std::uint64_t gseed = 42;
    std::string gout;
    auto* gen = app.add_subcommand("gen-instance", "generate an instance JSON file");
    gen->add_option("--types", gp.n_types, "number of agent types");
    gen->add_option("--dim", gp.d, "number of principal actions");
    gen->add_option("--actions", gp.n_actions, "number of agent actions");
    gen->add_option("--outcomes", gp.n_outcomes, "number of outcomes");
    gen->add_option("--gamma", gp.gamma, "agent discount factor");
    gen->add_option("--B", gp.B, "reward bound");
    gen->add_option("--seed", gseed, "generator seed");
    gen->add_flag("--gapped", gapped, "draw reward angles that respect the angle gaps");
    gen->add_option("-o,--out", gout, "output file (stdout when omitted)");

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "rebuild the JSON summary and SVG charts from a run directory");
    rep->add_option("dir", report_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) {
            ExperimentConfig c = resolve(run_o);
            ExperimentResult res = run_experiment(c);
            write_outputs(c, res);
            std::cout << res.report.dump(2) << '\n';
            bool ok = true;
            if (res.report.contains("oracles"))
                for (const auto& o : res.report["oracles"]) ok = ok && o["passed"].get<bool>();
            return ok ? 0 : 1;
        }
        if (*oracle) {
            ExperimentConfig c = resolve(oracle_o);
            if (corrupt > 0) c.oracle_sizes.corrupt_vbar = corrupt;
            auto outcomes = oracle_suite(c);
            const bool ok = print_oracles(outcomes);
            if (!oracle_json.empty()) std::ofstream(oracle_json) << oracle_report(outcomes).dump(2) << '\n';
            return ok ? 0 : 1;
        }
        if (*gen) {
            InstanceSource src;
            src.params = gp;
            src.gapped = gapped;
            src.gaps = gaps;
            src.seed = gseed;
            const std::string text = instance_to_json(load_instance(src)).dump(2);
            if (gout.empty())
                std::cout << text << '\n';
            else
                std::ofstream(gout) << text << '\n';
            return 0;
        }
        if (*rep) {
            std::cout << report_from_dir(report_dir).dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

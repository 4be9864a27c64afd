#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "palab/errors.hpp"
#include "palab/harness.hpp"

using namespace palab;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(const std::string& dir) {
    ExperimentConfig c;
    c.instance.params.gamma = 0.5;
    c.T_list = {1024, 2048};
    c.replications = 2;
    c.bandit.T_sec = 20;
    c.bandit.noise_scale = 1.0;
    c.bandit.tail_rule = "greedy";
    c.out_dir = dir;
    return c;
}

}  // namespace

TEST_CASE("config parsing") {
    ExperimentConfig c = config_from_json(json::parse(R"({"T": [1024, 4096], "replications": 3,
        "algorithm": "doubling", "agent": "exact_myopic", "bandit": {"T_sec": 30}})"));
    CHECK(c.T_list == std::vector<long>{1024, 4096});
    CHECK(c.replications == 3);
    CHECK(c.algorithm == "doubling");
    CHECK(c.agent.kind == AgentKind::ExactMyopic);
    CHECK(c.bandit.T_sec == 30);
    ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK_THROWS(config_from_json(json::parse(R"({"replication": 3})")));
    CHECK_THROWS(config_from_json(json::parse(R"({"algorithm": "magic"})")));
}

TEST_CASE("log-log fit") {
    std::vector<double> x{10, 100, 1000, 10000}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 0.5));
    RegretFit f = fit_loglog(x, y);
    REQUIRE(f.valid);
    CHECK(f.slope == doctest::Approx(0.5));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
    CHECK_FALSE(fit_loglog({5}, {1}).valid);
}

TEST_CASE("experiment outputs are reproducible") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "palab_harness_test";
    fs::remove_all(base);
    ExperimentConfig a = small_config((base / "a").string());
    ExperimentConfig b = small_config((base / "b").string());
    b.threads = 3;
    ExperimentResult ra = run_experiment(a);
    write_outputs(a, ra);
    write_outputs(b, run_experiment(b));
    for (const char* f : {"per_round.csv", "summary.csv"})
        CHECK(slurp((base / "a" / f).string()) == slurp((base / "b" / f).string()));
    CHECK(slurp((base / "a/regret.svg").string()).find("<svg") != std::string::npos);
    CHECK(fs::exists(base / "a/regret_vs_T.svg"));

    json rep = json::parse(slurp((base / "a/report.json").string()));
    CHECK(rep["per_T"].size() == 2);
    CHECK(rep.contains("config"));

    std::map<long, std::pair<double, int>> sums;
    std::ifstream sum((base / "a/summary.csv").string());
    std::string line;
    std::getline(sum, line);
    CHECK(line == "T,replication,seed,ok,failure,regret,realized_reward,stage1_rounds,n,angle_error,rounds");
    while (std::getline(sum, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> f;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f[3] != "1") continue;
        auto& s = sums[std::stol(f[0])];
        s.first += std::stod(f[5]);
        ++s.second;
    }
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> pts;
    for (const auto& [T, s] : sums) pts.emplace_back(std::log(double(T)), std::log(s.first / s.second));
    for (auto& p : pts) {
        mx += p.first / pts.size();
        my += p.second / pts.size();
    }
    for (auto& p : pts) {
        sxx += (p.first - mx) * (p.first - mx);
        sxy += (p.first - mx) * (p.second - my);
    }
    CHECK(rep["slope_fit"]["slope"].get<double>() == doctest::Approx(sxy / sxx).epsilon(1e-6));

    json rebuilt = report_from_dir((base / "a").string());
    CHECK(rebuilt["slope_fit"]["slope"].get<double>() == doctest::Approx(sxy / sxx).epsilon(1e-6));
    fs::remove_all(base);
}

TEST_CASE("oracle helpers") {
    Rng rng(1);
    RewardAngles truth{(Vec(2) << 1.0, 2.0).finished(), (Vec(2) << 2.5, 5.0).finished()};
    for (int k = 0; k < 1000; ++k) {
        RewardAngles p = perturb_angles(truth, 0.01, rng);
        for (std::size_t s = 0; s < truth.size(); ++s)
            CHECK(std::abs(p[s](0) - truth[s](0)) + arc(p[s](1), truth[s](1)) <= 0.01 + 1e-12);
    }
    Mat vbar(2, 3);
    vbar << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0;
    Mat truthful(2, 3);
    truthful << 1, 0, 0, 0, 1, 0;
    CHECK(ic_violations(truthful, vbar, 1e-9) == 0);
    CHECK(ic_violations(truthful.colwise().reverse(), vbar, 1e-9) == 2);
}

TEST_CASE("oracle suite on small sizes") {
    ExperimentConfig c;
    c.instance.params.gamma = 0.5;
    c.bandit.T_sec = 20;
    c.bandit.noise_scale = 1.0;
    c.oracle_sizes.revelation_instances = 20;
    c.oracle_sizes.sector_cases = 50;
    c.oracle_sizes.accuracy_instances = 3;
    c.oracle_sizes.coverage_replications = 10;
    c.oracle_sizes.containment_instances = 5;
    c.oracle_sizes.containment_points = 100;
    c.oracles = {"revelation", "sector", "containment"};
    for (const auto& o : oracle_suite(c)) CHECK_MESSAGE(o.passed, o.name << ": " << o.detail);

    c.oracles = {"containment"};
    c.oracle_sizes.corrupt_vbar = 0.1;
    CHECK_FALSE(oracle_suite(c)[0].passed);

    c.oracles = {"nonsense"};
    CHECK_THROWS_AS(oracle_suite(c), DomainError);
}

TEST_CASE("single type experiments run no estimation") {
    ExperimentConfig c;
    c.instance.params.n_types = 1;
    c.T_list = {1024};
    c.bandit.T_sec = 20;
    ExperimentResult r = run_experiment(c);
    REQUIRE(r.runs.size() == 1);
    CHECK(r.runs[0].ok);
    CHECK(r.runs[0].stage1_rounds == 0);
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "palab/harness.hpp"

namespace py = pybind11;
using namespace palab;
using nlohmann::json;

namespace {

ExperimentConfig parse_config(const std::string& text) { return config_from_json(json::parse(text)); }

py::dict replication_dict(const ReplicationResult& r) {
    py::dict d;
    d["T"] = r.T;
    d["replication"] = r.replication;
    d["seed"] = r.seed;
    d["ok"] = r.ok;
    d["failure"] = r.failure;
    d["regret"] = r.regret;
    d["realized_reward"] = r.realized_reward;
    d["stage1_rounds"] = r.stage1_rounds;
    d["n"] = r.n;
    d["angle_error"] = r.angle_error;
    d["rounds"] = r.rounds;
    return d;
}

}  // namespace

PYBIND11_MODULE(_palab, m) {
    m.doc() = "principal-agent learning laboratory";

    m.def("wrap", &wrap, py::arg("alpha"), py::arg("m"));
    m.def("arc", &arc, py::arg("alpha"), py::arg("beta"));
    m.def("spherical_embed", [](const Vec& a) { return spherical_embed(a); }, py::arg("angles"));
    m.def("inverse_embed", [](const Vec& v) { return inverse_embed(v); }, py::arg("v"));
    m.def("default_rd", &default_rd, py::arg("d"));

    m.def("split_horizon", &split_horizon, py::arg("T"));
    m.def("episode_length", &episode_length, py::arg("n"));

    m.def(
        "solve_lp_star",
        [](const Vec& f, const Mat& u, const Mat& vbar, double margin) {
            LpSolution s = solve_lp_star(f, u, vbar, margin);
            return py::make_tuple(to_string(s.status), s.value, s.mechanism);
        },
        py::arg("f"), py::arg("u"), py::arg("vbar"), py::arg("margin") = 0.0);

    m.def(
        "generate_instance_json",
        [](int n_types, int d, int n_actions, int n_outcomes, double gamma, double B, std::uint64_t seed,
           bool gapped) {
            InstanceSource src;
            src.params.n_types = n_types;
            src.params.d = d;
            src.params.n_actions = n_actions;
            src.params.n_outcomes = n_outcomes;
            src.params.gamma = gamma;
            src.params.B = B;
            src.seed = seed;
            src.gapped = gapped;
            return instance_to_json(load_instance(src)).dump();
        },
        py::arg("n_types") = 2, py::arg("d") = 3, py::arg("n_actions") = 2, py::arg("n_outcomes") = 2,
        py::arg("gamma") = 0.9, py::arg("B") = 1.0, py::arg("seed") = 42, py::arg("gapped") = true);

    m.def(
        "reward_vectors",
        [](const std::string& instance_json) {
            RewardProfile p = reward_profile(instance_from_json(json::parse(instance_json)));
            return py::make_tuple(p.v, p.u, p.vbar, p.C0);
        },
        py::arg("instance_json"));

    m.def("normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)).dump(); },
          py::arg("config_json"));

    m.def(
        "run_experiment",
        [](const std::string& text, bool write) {
            const ExperimentConfig c = parse_config(text);
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c);
                if (write) write_outputs(c, r);
            }
            py::list runs;
            for (const auto& run : r.runs) runs.append(replication_dict(run));
            return py::make_tuple(r.report.dump(), runs);
        },
        py::arg("config_json"), py::arg("write_outputs") = false);

    m.def(
        "oracle_suite",
        [](const std::string& text) {
            const ExperimentConfig c = parse_config(text);
            std::vector<OracleOutcome> out;
            {
                py::gil_scoped_release release;
                out = oracle_suite(c);
            }
            return oracle_report(out).dump();
        },
        py::arg("config_json"));

    m.def("report_from_dir", [](const std::string& dir) { return report_from_dir(dir).dump(); }, py::arg("dir"));
}

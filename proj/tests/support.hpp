#pragma once

#include "palab/model.hpp"

namespace palab::test {

// Instance whose normalized agent rewards realize the given reward angles under make_isometry(d, iso_seed).
inline ProblemInstance instance_from_angles(const RewardAngles& angles, int d, std::uint64_t seed,
                                            std::uint64_t iso_seed = 99) {
    const Isometry iso = make_isometry(d, iso_seed);
    Mat vbar(static_cast<int>(angles.size()), d);
    for (std::size_t s = 0; s < angles.size(); ++s) vbar.row(s) = iso.inverse(spherical_embed(angles[s])).transpose();
    RandomInstanceParams p;
    p.n_types = static_cast<int>(angles.size());
    p.d = d;
    return instance_from_vbar(vbar, p, seed, iso_seed);
}

// Single-outcome instance with V(theta, x, a) = v[theta][x][a] and U = u[theta][x][a].
inline ProblemInstance tabular_instance(const std::vector<std::vector<std::vector<double>>>& v,
                                        const std::vector<std::vector<std::vector<double>>>& u, Vec f,
                                        double B = 4.0, double gamma = 0.5) {
    ProblemInstance inst;
    inst.n_types = static_cast<int>(v.size());
    inst.d = static_cast<int>(v[0].size());
    inst.n_actions = static_cast<int>(v[0][0].size());
    inst.n_outcomes = 1;
    inst.f = std::move(f);
    inst.B = B;
    inst.gamma = gamma;
    const std::size_t sz = static_cast<std::size_t>(inst.n_types) * inst.d * inst.n_actions;
    inst.U.assign(sz, 0.0);
    inst.V.assign(sz, 0.0);
    inst.F.assign(sz, 1.0);
    for (int t = 0; t < inst.n_types; ++t)
        for (int x = 0; x < inst.d; ++x)
            for (int a = 0; a < inst.n_actions; ++a) {
                inst.V[inst.index(t, x, a, 0)] = v[t][x][a];
                inst.U[inst.index(t, x, a, 0)] = u[t][x][a];
            }
    return inst;
}

inline AngleVector angles(std::initializer_list<double> a) {
    AngleVector v(static_cast<int>(a.size()));
    int k = 0;
    for (double x : a) v(k++) = x;
    return v;
}

}  // namespace palab::test

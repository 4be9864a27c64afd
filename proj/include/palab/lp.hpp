#pragma once

#include <vector>

#include <json.hpp>

#include "palab/ellipsoid.hpp"
#include "palab/model.hpp"

namespace palab {

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus status);

// maximize c'x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0
struct LinearProgram {
    Vec c;
    Mat A_ub;
    Vec b_ub;
    Mat A_eq;
    Vec b_eq;
};

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vec x;
};

LpResult solve_lp(const LinearProgram& lp);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Mat mechanism;
};

Vec vec_mech(const Mat& mech);
Mat unvec_mech(const Vec& x, int n_types, int d);

LpSolution solve_lp_star(const Vec& f, const Mat& u, const Mat& vbar, double margin);
double solve_opt_oracle(const Vec& f, const Mat& u, const Mat& v, const Mat& vbar);

struct PessimisticPolytope {
    int n_types = 0;
    int d = 0;
    Mat A;  // A vec(Pi) <= b, together with the row-simplex constraints
    Vec b;
    double margin = 0.0;
    double radius = 0.0;

    bool contains(const Mat& mech, double tol = 1e-9) const;
};

// Constraints <vhat_s, Pi_s - Pi_s'> >= margin + sqrt(2) * radius for s != s'.
PessimisticPolytope ic_polytope(const Mat& vhat, double margin, double radius);
PessimisticPolytope pessimistic_polytope(const RewardAngles& estimates, double radius, double margin,
                                         const Isometry& iso);
bool polytope_feasible(const PessimisticPolytope& poly);
LpSolution maximize_over(const PessimisticPolytope& poly, const Vec& objective);

std::vector<Mat> enumerate_vertices(const PessimisticPolytope& poly, int max_dim = 12);

struct PlanResult {
    Mat mechanism;
    double value = 0.0;
    int vertex = -1;
};

PlanResult solve_pess_opt(const std::vector<Mat>& vertices, const ConfidenceEllipsoid& ellipsoid);
PlanResult solve_pess_opt(const PessimisticPolytope& poly, const ConfidenceEllipsoid& ellipsoid);

nlohmann::json polytope_to_json(const PessimisticPolytope& poly);

}  // namespace palab

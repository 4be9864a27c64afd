#include "palab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "palab/errors.hpp"

namespace palab {

namespace {

constexpr double kPivotTol = 1e-10;

class Tableau {
public:
    // rows 0..m-1 are constraints, column n holds the right-hand side
    Mat t;
    std::vector<int> basis;
    int m = 0;
    int n = 0;

    void pivot(int r, int c) {
        t.row(r) /= t(r, c);
        for (int i = 0; i < t.rows(); ++i) {
            if (i == r) continue;
            double f = t(i, c);
            if (f != 0.0) t.row(i) -= f * t.row(r);
        }
        basis[r] = c;
    }

    // Maximizes cost'x over columns flagged allowed. Returns false when unbounded.
    bool optimize(const Vec& cost, const std::vector<char>& allowed) {
        for (;;) {
            int enter = -1;
            for (int j = 0; j < n && enter < 0; ++j) {
                if (!allowed[j]) continue;
                double rc = cost(j);
                for (int i = 0; i < m; ++i) rc -= cost(basis[i]) * t(i, j);
                if (rc > 1e-9) enter = j;
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (t(i, enter) <= kPivotTol) continue;
                double ratio = t(i, n) / t(i, enter);
                if (leave < 0 || ratio < best - 1e-12 ||
                    (ratio <= best + 1e-12 && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

LpResult solve_lp(const LinearProgram& lp) {
    const int nv = static_cast<int>(lp.c.size());
    const int mu = static_cast<int>(lp.A_ub.rows());
    const int me = static_cast<int>(lp.A_eq.rows());
    if ((mu > 0 && lp.A_ub.cols() != nv) || (me > 0 && lp.A_eq.cols() != nv) || lp.b_ub.size() != mu ||
        lp.b_eq.size() != me)
        throw DimensionError("linear program shapes are inconsistent");
    const int m = mu + me;
    // columns: original, one slack per inequality, one artificial per row
    const int n_slack = mu, n_art = m;
    const int n = nv + n_slack + n_art;
    Tableau tab;
    tab.m = m;
    tab.n = n;
    tab.t = Mat::Zero(m, n + 1);
    tab.basis.assign(m, -1);
    for (int i = 0; i < m; ++i) {
        const bool ub = i < mu;
        Vec row = ub ? Vec(lp.A_ub.row(i).transpose()) : Vec(lp.A_eq.row(i - mu).transpose());
        double rhs = ub ? lp.b_ub(i) : lp.b_eq(i - mu);
        double sign = rhs < 0.0 ? -1.0 : 1.0;
        tab.t.block(i, 0, 1, nv) = sign * row.transpose();
        if (ub) tab.t(i, nv + i) = sign;
        tab.t(i, n) = sign * rhs;
        if (ub && sign > 0.0) {
            tab.basis[i] = nv + i;
        } else {
            tab.t(i, nv + n_slack + i) = 1.0;
            tab.basis[i] = nv + n_slack + i;
        }
    }
    std::vector<char> allowed(n, 1);
    Vec phase1 = Vec::Zero(n);
    bool any_art = false;
    for (int i = 0; i < m; ++i)
        if (tab.basis[i] >= nv + n_slack) {
            phase1(tab.basis[i]) = -1.0;
            any_art = true;
        }
    for (int j = nv + n_slack; j < n; ++j)
        if (phase1(j) == 0.0) allowed[j] = 0;
    LpResult res;
    if (any_art) {
        tab.optimize(phase1, allowed);
        double infeas = 0.0;
        for (int i = 0; i < m; ++i)
            if (tab.basis[i] >= nv + n_slack) infeas += tab.t(i, n);
        if (infeas > 1e-8) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // drive zero-level artificials out of the basis; rows that cannot be pivoted are redundant
        std::vector<int> keep;
        for (int i = 0; i < m; ++i) {
            if (tab.basis[i] >= nv + n_slack) {
                int col = -1;
                for (int j = 0; j < nv + n_slack && col < 0; ++j)
                    if (std::abs(tab.t(i, j)) > 1e-9) col = j;
                if (col >= 0) {
                    tab.pivot(i, col);
                    keep.push_back(i);
                }
            } else {
                keep.push_back(i);
            }
        }
        if (static_cast<int>(keep.size()) < m) {
            Tableau reduced;
            reduced.m = static_cast<int>(keep.size());
            reduced.n = n;
            reduced.t.resize(reduced.m, n + 1);
            for (int k = 0; k < reduced.m; ++k) {
                reduced.t.row(k) = tab.t.row(keep[k]);
                reduced.basis.push_back(tab.basis[keep[k]]);
            }
            tab = std::move(reduced);
        }
    }
    for (int j = nv + n_slack; j < n; ++j) allowed[j] = 0;
    Vec cost = Vec::Zero(n);
    cost.head(nv) = lp.c;
    if (!tab.optimize(cost, allowed)) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    res.status = LpStatus::Optimal;
    res.x = Vec::Zero(nv);
    for (int i = 0; i < tab.m; ++i)
        if (tab.basis[i] < nv) res.x(tab.basis[i]) = std::max(0.0, tab.t(i, n));
    res.value = lp.c.dot(res.x);
    return res;
}

Vec vec_mech(const Mat& mech) {
    Vec x(mech.size());
    for (int s = 0; s < mech.rows(); ++s)
        for (int j = 0; j < mech.cols(); ++j) x(s * mech.cols() + j) = mech(s, j);
    return x;
}

Mat unvec_mech(const Vec& x, int n_types, int d) {
    if (x.size() != static_cast<Eigen::Index>(n_types) * d) throw DimensionError("vectorized mechanism size");
    Mat m(n_types, d);
    for (int s = 0; s < n_types; ++s)
        for (int j = 0; j < d; ++j) m(s, j) = x(s * d + j);
    return m;
}

namespace {

void add_simplex_rows(LinearProgram& lp, int T, int d) {
    lp.A_eq = Mat::Zero(T, T * d);
    lp.b_eq = Vec::Ones(T);
    for (int s = 0; s < T; ++s) lp.A_eq.block(s, s * d, 1, d).setOnes();
}

Vec type_objective(const Vec& f, const Mat& u) {
    const int T = static_cast<int>(u.rows()), d = static_cast<int>(u.cols());
    Vec c(T * d);
    for (int s = 0; s < T; ++s) c.segment(s * d, d) = f(s) * u.row(s).transpose();
    return c;
}

}  // namespace

LpSolution solve_lp_star(const Vec& f, const Mat& u, const Mat& vbar, double margin) {
    const int T = static_cast<int>(u.rows()), d = static_cast<int>(u.cols());
    if (vbar.rows() != T || vbar.cols() != d || f.size() != T) throw DimensionError("LP* input shapes");
    PessimisticPolytope poly = ic_polytope(vbar, margin, 0.0);
    return maximize_over(poly, type_objective(f, u));
}

double solve_opt_oracle(const Vec& f, const Mat& u, const Mat& v, const Mat& vbar) {
    (void)vbar;
    const int T = static_cast<int>(u.rows()), d = static_cast<int>(u.cols());
    long maps = 1;
    for (int k = 0; k < T; ++k) maps *= T;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> r(T);
    for (long code = 0; code < maps; ++code) {
        long c = code;
        for (int k = 0; k < T; ++k) {
            r[k] = static_cast<int>(c % T);
            c /= T;
        }
        LinearProgram lp;
        lp.c = Vec::Zero(T * d);
        for (int th = 0; th < T; ++th) lp.c.segment(r[th] * d, d) += f(th) * u.row(th).transpose();
        lp.A_ub = Mat::Zero(T * (T - 1), T * d);
        lp.b_ub = Vec::Zero(T * (T - 1));
        int row = 0;
        for (int th = 0; th < T; ++th)
            for (int s = 0; s < T; ++s) {
                if (s == r[th]) continue;
                lp.A_ub.block(row, s * d, 1, d) += v.row(th);
                lp.A_ub.block(row, r[th] * d, 1, d) -= v.row(th);
                ++row;
            }
        add_simplex_rows(lp, T, d);
        LpResult res = solve_lp(lp);
        if (res.status == LpStatus::Optimal) best = std::max(best, res.value);
    }
    return best;
}

bool PessimisticPolytope::contains(const Mat& mech, double tol) const {
    if (mech.rows() != n_types || mech.cols() != d) return false;
    if (mech.minCoeff() < -tol) return false;
    for (int s = 0; s < n_types; ++s)
        if (std::abs(mech.row(s).sum() - 1.0) > tol) return false;
    if (A.rows() == 0) return true;
    Vec slack = b - A * vec_mech(mech);
    return slack.minCoeff() >= -tol;
}

PessimisticPolytope ic_polytope(const Mat& vhat, double margin, double radius) {
    if (margin < 0.0 || radius < 0.0) throw DomainError("margin and radius must be nonnegative");
    const int T = static_cast<int>(vhat.rows()), d = static_cast<int>(vhat.cols());
    PessimisticPolytope p;
    p.n_types = T;
    p.d = d;
    p.margin = margin;
    p.radius = radius;
    p.A = Mat::Zero(T * (T - 1), T * d);
    p.b = Vec::Constant(T * (T - 1), -(margin + std::sqrt(2.0) * radius));
    int row = 0;
    for (int s = 0; s < T; ++s)
        for (int s2 = 0; s2 < T; ++s2) {
            if (s == s2) continue;
            p.A.block(row, s2 * d, 1, d) += vhat.row(s);
            p.A.block(row, s * d, 1, d) -= vhat.row(s);
            ++row;
        }
    return p;
}

PessimisticPolytope pessimistic_polytope(const RewardAngles& estimates, double radius, double margin,
                                         const Isometry& iso) {
    const int T = static_cast<int>(estimates.size());
    Mat vhat(T, iso.d());
    for (int s = 0; s < T; ++s) vhat.row(s) = iso.inverse(spherical_embed(estimates[s])).transpose();
    return ic_polytope(vhat, margin, radius);
}

LpSolution maximize_over(const PessimisticPolytope& poly, const Vec& objective) {
    LinearProgram lp;
    lp.c = objective;
    lp.A_ub = poly.A;
    lp.b_ub = poly.b;
    add_simplex_rows(lp, poly.n_types, poly.d);
    LpResult r = solve_lp(lp);
    LpSolution out;
    out.status = r.status;
    if (r.status == LpStatus::Optimal) {
        out.value = r.value;
        out.mechanism = unvec_mech(r.x, poly.n_types, poly.d);
    }
    return out;
}

bool polytope_feasible(const PessimisticPolytope& poly) {
    return maximize_over(poly, Vec::Zero(poly.n_types * poly.d)).status == LpStatus::Optimal;
}

std::vector<Mat> enumerate_vertices(const PessimisticPolytope& poly, int max_dim) {
    const int T = poly.n_types, d = poly.d, n = T * d;
    if (n > max_dim) throw CapacityError("vertex enumeration dimension exceeds the cap");
    const int mA = static_cast<int>(poly.A.rows());
    const int m_ineq = mA + n;
    const int need = n - T;
    // inequality k < mA is a row of A, otherwise it is x_{k - mA} >= 0
    Mat G(m_ineq, n);
    Vec h(m_ineq);
    if (mA > 0) {
        G.topRows(mA) = poly.A;
        h.head(mA) = poly.b;
    }
    G.bottomRows(n) = -Mat::Identity(n, n);
    h.tail(n).setZero();
    Mat E = Mat::Zero(T, n);
    for (int s = 0; s < T; ++s) E.block(s, s * d, 1, d).setOnes();

    std::vector<Vec> found;
    std::vector<int> idx(need);
    for (int k = 0; k < need; ++k) idx[k] = k;
    Mat M(n, n);
    Vec rhs(n);
    M.topRows(T) = E;
    rhs.head(T).setOnes();
    const bool none = need > m_ineq;
    while (!none) {
        for (int k = 0; k < need; ++k) {
            M.row(T + k) = G.row(idx[k]);
            rhs(T + k) = h(idx[k]);
        }
        Eigen::FullPivLU<Mat> lu(M);
        if (lu.rank() == n) {
            Vec x = lu.solve(rhs);
            if ((G * x - h).maxCoeff() <= 1e-9) {
                bool dup = false;
                for (const Vec& y : found)
                    if ((y - x).cwiseAbs().maxCoeff() <= 1e-9) {
                        dup = true;
                        break;
                    }
                if (!dup) found.push_back(x);
            }
        }
        int k = need - 1;
        while (k >= 0 && idx[k] == m_ineq - need + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < need; ++j) idx[j] = idx[j - 1] + 1;
    }
    std::vector<Mat> out;
    out.reserve(found.size());
    for (const Vec& x : found) {
        Mat m = unvec_mech(x, T, d);
        m = m.cwiseMax(0.0);
        out.push_back(m);
    }
    return out;
}

double ConfidenceEllipsoid::width(const Vec& x) const {
    if (radius == 0.0) return 0.0;
    Eigen::LDLT<Mat> ldlt(omega);
    return radius * std::sqrt(std::max(0.0, x.dot(ldlt.solve(x))));
}

bool ConfidenceEllipsoid::contains(const Vec& beta) const {
    Vec diff = beta - beta_hat;
    return std::sqrt(std::max(0.0, diff.dot(omega * diff))) <= radius;
}

PlanResult solve_pess_opt(const std::vector<Mat>& vertices, const ConfidenceEllipsoid& ellipsoid) {
    if (vertices.empty()) throw InfeasibleError("pessimistic polytope is empty");
    Eigen::LDLT<Mat> ldlt(ellipsoid.omega);
    PlanResult best;
    best.value = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < vertices.size(); ++k) {
        Vec x = vec_mech(vertices[k]);
        double val = ellipsoid.beta_hat.dot(x);
        if (ellipsoid.radius > 0.0) val += ellipsoid.radius * std::sqrt(std::max(0.0, x.dot(ldlt.solve(x))));
        if (val > best.value + 1e-12) {
            best.value = val;
            best.vertex = static_cast<int>(k);
            best.mechanism = vertices[k];
        }
    }
    return best;
}

PlanResult solve_pess_opt(const PessimisticPolytope& poly, const ConfidenceEllipsoid& ellipsoid) {
    return solve_pess_opt(enumerate_vertices(poly), ellipsoid);
}

nlohmann::json polytope_to_json(const PessimisticPolytope& poly) {
    nlohmann::json j;
    j["n_types"] = poly.n_types;
    j["d"] = poly.d;
    j["margin"] = poly.margin;
    j["radius"] = poly.radius;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < poly.A.rows(); ++i) {
        std::vector<double> r(poly.A.cols());
        for (int k = 0; k < poly.A.cols(); ++k) r[k] = poly.A(i, k);
        rows.push_back(r);
    }
    j["A"] = rows;
    j["b"] = std::vector<double>(poly.b.data(), poly.b.data() + poly.b.size());
    return j;
}

}  // namespace palab

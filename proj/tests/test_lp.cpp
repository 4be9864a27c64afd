#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "palab/errors.hpp"
#include "palab/lp.hpp"

using namespace palab;

namespace {

struct StarProblem {
    Vec f;
    Mat u, vbar;
};

StarProblem random_star(int T, int d, Rng& rng) {
    std::normal_distribution<double> g;
    StarProblem p;
    p.f = Vec::Zero(T);
    for (int t = 0; t < T; ++t) p.f(t) = 0.2 + std::abs(g(rng));
    p.f /= p.f.sum();
    p.u = Mat(T, d);
    p.vbar = Mat(T, d);
    for (int t = 0; t < T; ++t) {
        Vec v(d);
        for (int x = 0; x < d; ++x) {
            v(x) = g(rng);
            p.u(t, x) = g(rng);
        }
        v.array() -= v.mean();
        p.vbar.row(t) = (v / v.norm()).transpose();
    }
    return p;
}

// LP* written out directly in the standard form of solve_lp.
LinearProgram star_program(const StarProblem& p, double margin) {
    const int T = static_cast<int>(p.u.rows()), d = static_cast<int>(p.u.cols());
    LinearProgram lp;
    lp.c = Vec::Zero(T * d);
    for (int t = 0; t < T; ++t)
        for (int x = 0; x < d; ++x) lp.c(t * d + x) = p.f(t) * p.u(t, x);
    lp.A_ub = Mat::Zero(T * (T - 1), T * d);
    lp.b_ub = Vec::Constant(T * (T - 1), -margin);
    int r = 0;
    for (int t = 0; t < T; ++t)
        for (int t2 = 0; t2 < T; ++t2) {
            if (t == t2) continue;
            for (int x = 0; x < d; ++x) {
                lp.A_ub(r, t2 * d + x) += p.vbar(t, x);
                lp.A_ub(r, t * d + x) -= p.vbar(t, x);
            }
            ++r;
        }
    lp.A_eq = Mat::Zero(T, T * d);
    lp.b_eq = Vec::Ones(T);
    for (int t = 0; t < T; ++t) lp.A_eq.block(t, t * d, 1, d).setOnes();
    return lp;
}

// Every basic feasible point of {A x <= b, E x = 1, x >= 0}, found by trying all active sets.
std::vector<Vec> brute_vertices(const Mat& A, const Vec& b, const Mat& E, const Vec& e) {
    const int n = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows()) + n;
    Mat G(m, n);
    Vec h(m);
    G.topRows(A.rows()) = A;
    h.head(A.rows()) = b;
    G.bottomRows(n) = -Mat::Identity(n, n);
    h.tail(n).setZero();
    const int need = n - static_cast<int>(E.rows());
    std::vector<Vec> out;
    std::vector<int> pick(need);
    std::function<void(int, int)> rec = [&](int start, int k) {
        if (k == need) {
            Mat M(n, n);
            Vec rhs(n);
            M.topRows(E.rows()) = E;
            rhs.head(E.rows()) = e;
            for (int j = 0; j < need; ++j) {
                M.row(E.rows() + j) = G.row(pick[j]);
                rhs(E.rows() + j) = h(pick[j]);
            }
            Eigen::FullPivLU<Mat> lu(M);
            if (lu.rank() < n) return;
            Vec x = lu.solve(rhs);
            if ((G * x - h).maxCoeff() > 1e-9 || (E * x - e).cwiseAbs().maxCoeff() > 1e-9) return;
            for (const Vec& y : out)
                if ((y - x).cwiseAbs().maxCoeff() < 1e-9) return;
            out.push_back(x);
            return;
        }
        for (int i = start; i < m; ++i) {
            pick[k] = i;
            rec(i + 1, k + 1);
        }
    };
    rec(0, 0);
    return out;
}

Vec random_mech_point(const std::vector<Mat>& verts, Rng& rng) {
    std::exponential_distribution<double> ex(1.0);
    Mat m = Mat::Zero(verts[0].rows(), verts[0].cols());
    double total = 0.0;
    for (const Mat& v : verts) {
        const double w = ex(rng);
        m += w * v;
        total += w;
    }
    return vec_mech(m / total);
}

}  // namespace

TEST_CASE("generic LP solver") {
    LinearProgram lp;
    lp.c = Vec(2);
    lp.c << 3, 2;
    lp.A_ub = Mat(2, 2);
    lp.A_ub << 1, 1, 1, 3;
    lp.b_ub = Vec(2);
    lp.b_ub << 4, 6;
    LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(12.0));

    LinearProgram unb;
    unb.c = Vec::Ones(2);
    unb.A_ub = Mat(1, 2);
    unb.A_ub << 1, -1;
    unb.b_ub = Vec::Ones(1);
    CHECK(solve_lp(unb).status == LpStatus::Unbounded);

    LinearProgram inf;
    inf.c = Vec::Ones(1);
    inf.A_ub = Mat::Ones(1, 1);
    inf.b_ub = Vec::Constant(1, -1.0);
    CHECK(solve_lp(inf).status == LpStatus::Infeasible);
}

TEST_CASE("LP star examples") {
    Vec f = Vec::Ones(1);
    Mat u(1, 3);
    u << 1, 2, 3;
    Mat vbar(1, 3);
    vbar << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0), 0;
    LpSolution s = solve_lp_star(f, u, vbar, 0.0);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.value == doctest::Approx(3.0));
    CHECK(s.mechanism(0, 2) == doctest::Approx(1.0));

    Rng rng(1);
    StarProblem p = random_star(2, 3, rng);
    CHECK(solve_lp_star(p.f, p.u, p.vbar, 2.0).status == LpStatus::Infeasible);
}

TEST_CASE("LP star matches active set enumeration") {
    Rng rng(2);
    for (int k = 0; k < 30; ++k) {
        StarProblem p = random_star(2, 3, rng);
        LpSolution s = solve_lp_star(p.f, p.u, p.vbar, 0.0);
        REQUIRE(s.status == LpStatus::Optimal);
        LinearProgram lp = star_program(p, 0.0);
        double best = -INFINITY;
        for (const Vec& x : brute_vertices(lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq)) best = std::max(best, lp.c.dot(x));
        CHECK(s.value == doctest::Approx(best).epsilon(1e-8));
        CHECK(vec_mech(s.mechanism).dot(lp.c) == doctest::Approx(s.value).epsilon(1e-8));
    }
}

TEST_CASE("strong duality and margin monotonicity") {
    Rng rng(3);
    for (int k = 0; k < 30; ++k) {
        StarProblem p = random_star(3, 3, rng);
        LinearProgram primal = star_program(p, 0.0);
        LpResult pr = solve_lp(primal);
        REQUIRE(pr.status == LpStatus::Optimal);
        CHECK(pr.value == doctest::Approx(solve_lp_star(p.f, p.u, p.vbar, 0.0).value).epsilon(1e-9));

        const int mu = static_cast<int>(primal.A_ub.rows()), me = static_cast<int>(primal.A_eq.rows());
        const int n = static_cast<int>(primal.c.size());
        LinearProgram dual;
        dual.c = Vec(mu + 2 * me);
        dual.c << -primal.b_ub, -primal.b_eq, primal.b_eq;
        dual.A_ub = Mat(n, mu + 2 * me);
        dual.A_ub << -primal.A_ub.transpose(), -primal.A_eq.transpose(), primal.A_eq.transpose();
        dual.b_ub = -primal.c;
        LpResult dr = solve_lp(dual);
        REQUIRE(dr.status == LpStatus::Optimal);
        CHECK(std::abs(pr.value + dr.value) <= 1e-7);

        double prev = INFINITY;
        for (double m : {0.0, 1e-6, 1e-4, 1e-3, 1e-2, 0.05}) {
            LpSolution s = solve_lp_star(p.f, p.u, p.vbar, m);
            if (s.status != LpStatus::Optimal) break;
            CHECK(s.value <= prev + 1e-12);
            prev = s.value;
        }
    }
}

TEST_CASE("OPT oracle and the revelation principle") {
    Rng rng(4);
    Vec f1 = Vec::Ones(1);
    StarProblem one = random_star(1, 3, rng);
    CHECK(solve_opt_oracle(f1, one.u, one.vbar, one.vbar) ==
          doctest::Approx(solve_lp_star(f1, one.u, one.vbar, 0.0).value));
    for (int k = 0; k < 200; ++k) {
        const int T = 1 + k % 3, d = 2 + k % 3;
        StarProblem p = random_star(T, d, rng);
        Mat v = p.vbar * 2.0;
        for (int t = 0; t < T; ++t) v.row(t).array() += 0.3 * t;
        const double opt = solve_opt_oracle(p.f, p.u, v, p.vbar);
        const double star = solve_lp_star(p.f, p.u, p.vbar, 0.0).value;
        CHECK(std::abs(opt - star) <= 1e-7);
        CHECK(star <= opt + 1e-7);
    }
}

TEST_CASE("IC polytopes and vertex enumeration") {
    PessimisticPolytope simplex = ic_polytope(Mat::Zero(1, 4), 0.0, 0.0);
    std::vector<Mat> sv = enumerate_vertices(simplex);
    CHECK(sv.size() == 4);
    for (const Mat& v : sv) CHECK(v.maxCoeff() == doctest::Approx(1.0));

    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        StarProblem p = random_star(2, 3, rng);
        PessimisticPolytope poly = ic_polytope(p.vbar, 0.01, 0.0);
        std::vector<Mat> verts = enumerate_vertices(poly);
        LinearProgram lp = star_program(p, 0.01);
        std::vector<Vec> brute = brute_vertices(lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq);
        CHECK(verts.size() == brute.size());
        for (const Mat& v : verts) CHECK(poly.contains(v));
        std::normal_distribution<double> g;
        for (int j = 0; j < 20; ++j) {
            Vec c(6);
            for (int i = 0; i < 6; ++i) c(i) = g(rng);
            LpSolution s = maximize_over(poly, c);
            REQUIRE(s.status == LpStatus::Optimal);
            double best = -INFINITY;
            for (const Mat& v : verts) best = std::max(best, c.dot(vec_mech(v)));
            CHECK(s.value == doctest::Approx(best).epsilon(1e-8));
        }
    }

    Mat vbar(2, 3);
    vbar << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0;
    PessimisticPolytope empty = ic_polytope(vbar, 0.5, 1.0);
    CHECK_FALSE(polytope_feasible(empty));
    CHECK(enumerate_vertices(empty).empty());
    CHECK_THROWS_AS(enumerate_vertices(ic_polytope(Mat::Zero(4, 4), 0.0, 0.0)), CapacityError);
}

TEST_CASE("pessimistic polytope from angles") {
    Isometry iso = make_isometry(4, 6);
    RewardAngles est{(Vec(2) << 1.0, 0.5).finished(), (Vec(2) << 2.0, 3.0).finished()};
    Mat vhat(2, 4);
    for (int s = 0; s < 2; ++s) vhat.row(s) = iso.inverse(spherical_embed(est[s])).transpose();
    PessimisticPolytope a = pessimistic_polytope(est, 0.0, 0.0, iso);
    PessimisticPolytope b = ic_polytope(vhat, 0.0, 0.0);
    CHECK((a.A - b.A).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((a.b - b.b).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(7);
    StarProblem p = random_star(2, 4, rng);
    LpSolution s = solve_lp_star(p.f, p.u, p.vbar, 1e-4);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(ic_polytope(p.vbar, 1e-4, 0.0).contains(s.mechanism));
}

TEST_CASE("pessimistic optimistic planning") {
    Rng rng(8);
    std::normal_distribution<double> g;
    for (int k = 0; k < 10; ++k) {
        StarProblem p = random_star(2, 3, rng);
        PessimisticPolytope poly = ic_polytope(p.vbar, 0.0, 0.0);
        std::vector<Mat> verts = enumerate_vertices(poly);
        ConfidenceEllipsoid e;
        e.beta_hat = Vec(6);
        for (int i = 0; i < 6; ++i) e.beta_hat(i) = g(rng);
        e.omega = Mat::Identity(6, 6);
        e.radius = 0.0;
        PlanResult r = solve_pess_opt(verts, e);
        CHECK(r.value == doctest::Approx(maximize_over(poly, e.beta_hat).value).epsilon(1e-8));

        e.radius = 0.7;
        Mat L(6, 6);
        for (int i = 0; i < 36; ++i) L(i) = g(rng);
        e.omega = L * L.transpose() + Mat::Identity(6, 6);
        PlanResult opt = solve_pess_opt(verts, e);
        double grid_best = -INFINITY;
        for (int j = 0; j < 100000; ++j) {
            Vec x = random_mech_point(verts, rng);
            grid_best = std::max(grid_best, e.beta_hat.dot(x) + e.width(x));
        }
        for (const Mat& v : verts) {
            const Vec x = vec_mech(v);
            grid_best = std::max(grid_best, e.beta_hat.dot(x) + e.width(x));
        }
        CHECK(opt.value == doctest::Approx(grid_best).epsilon(1e-9));

        for (int j = 0; j < 50; ++j) {
            Vec dir(6);
            for (int i = 0; i < 6; ++i) dir(i) = g(rng);
            Vec beta = e.beta_hat + dir * (e.radius * 0.99 / std::sqrt(dir.dot(e.omega * dir)));
            REQUIRE(e.contains(beta));
            Vec x = random_mech_point(verts, rng);
            CHECK(opt.value >= beta.dot(x) - 1e-12);
        }
    }

    ConfidenceEllipsoid zero;
    zero.beta_hat = Vec::Zero(3);
    zero.omega = Mat::Identity(3, 3);
    zero.radius = 1.0;
    std::vector<Mat> pts{(Mat(1, 3) << 0.5, 0.5, 0.0).finished(), (Mat(1, 3) << 0.0, 0.0, 1.0).finished(),
                         (Mat(1, 3) << 1 / 3.0, 1 / 3.0, 1 / 3.0).finished()};
    CHECK(solve_pess_opt(pts, zero).vertex == 1);
    CHECK_THROWS_AS(solve_pess_opt(std::vector<Mat>{}, zero), InfeasibleError);
}

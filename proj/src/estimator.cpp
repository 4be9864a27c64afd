#include "palab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "palab/errors.hpp"

namespace palab {

namespace {

Vec concat(double head, const Vec& tail) {
    Vec v(tail.size() + 1);
    v(0) = head;
    v.tail(tail.size()) = tail;
    return v;
}

Vec unit(int k, int dim) {
    Vec e = Vec::Zero(dim);
    e(k) = 1.0;
    return e;
}

}  // namespace

double EstimationBudget::width(int i) const {
    return eps_target * std::pow(kappa, -(i - 1));
}

int EstimationBudget::depth(int d) const {
    return std::max(1, static_cast<int>(std::ceil(std::log2(kPi / width(d - 2)))));
}

EstimationBudget make_budget(double n, double f_min, int d, double eps_target, double fail_prob) {
    if (n < 2.0 || f_min <= 0.0 || eps_target <= 0.0) throw DomainError("invalid estimation budget inputs");
    EstimationBudget b;
    const double ln = std::ceil(std::log(n));
    b.n = n;
    b.T_sec = std::max(static_cast<long>(std::min(std::pow(ln, 4.0), 1e4)),
                       static_cast<long>(std::ceil(std::log(1.0 / fail_prob) / f_min)));
    b.L_delay = static_cast<long>(ln * ln);
    b.eps_target = eps_target;
    b.grid_N = std::max(static_cast<int>(ln), 24);
    b.e_slack = 1.0 / std::log(n);
    b.r_d = default_rd(d);
    return b;
}

long TestCounts::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0L);
}

AngleEstimator::AngleEstimator(Environment& env, EstimationBudget budget, Isometry iso, std::uint64_t seed,
                               std::ostream* trace)
    : env_(env), budget_(budget), iso_(std::move(iso)), rng_(seed), trace_(trace) {
    d_ = env_.instance().d;
    n_labels_ = env_.instance().n_types;
    if (d_ < 3) throw DimensionError("angle estimation needs d >= 3");
    if (iso_.d() != d_) throw DimensionError("isometry dimension mismatch");
    if (budget_.r_d <= 0.0) budget_.r_d = default_rd(d_);
    if (budget_.T_sec < 1 || budget_.L_delay < 0) throw DomainError("invalid test lengths");
    dummy_ = Mat::Constant(n_labels_, d_, 1.0 / d_);
}

TestCounts AngleEstimator::deploy(const std::vector<Vec>& rows, const char* stage) {
    (void)stage;
    double scale = 0.0;
    for (const Vec& w : rows) scale = std::max(scale, w.norm());
    const double r = scale > 0.0 ? budget_.r_d / scale : 0.0;
    const int S = std::max<int>(n_labels_, static_cast<int>(rows.size()));
    Mat mech(S, d_);
    for (int s = 0; s < S; ++s) {
        const Vec& w = rows[std::min<std::size_t>(s, rows.size() - 1)];
        mech.row(s) = mechanism_row(w, r, iso_).transpose();
    }
    const long release = env_.now() + budget_.T_sec + budget_.L_delay + 1;
    env_.run_rounds(mech, Phase::Estimation, budget_.T_sec, release);
    if (budget_.L_delay > 0) env_.run_rounds(dummy_, Phase::Dummy, budget_.L_delay, kNever);
    TestCounts c;
    c.counts.assign(S, 0);
    for (const RoundRecord& rec : env_.poll())
        if (rec.phase == Phase::Estimation) ++c.counts[rec.report];
    rounds_ += budget_.T_sec + budget_.L_delay;
    ++tests_;
    return c;
}

void AngleEstimator::log_test(const char* stage, double alpha, double delta, int label, const TestCounts& c) {
    if (!trace_) return;
    nlohmann::json j;
    j["stage"] = stage;
    j["coordinate"] = cur_i_;
    j["alpha"] = alpha;
    j["delta"] = delta;
    j["label"] = label;
    j["counts"] = c.counts;
    j["rounds"] = rounds_;
    (*trace_) << j.dump() << '\n';
}

Vec AngleEstimator::probe(int i, double beta, const Vec& tail) const {
    return xi(i, concat(beta, tail), d_ - 1);
}

std::vector<Vec> AngleEstimator::anchors(const CoordinateContext& ctx) const {
    std::vector<Vec> out;
    for (std::size_t k = 0; k < ctx.matched.size(); ++k)
        out.push_back(probe(ctx.i, ctx.matched_angles[k], ctx.tails[ctx.matched[k]]));
    return out;
}

double AngleEstimator::bisect(double lo, double hi, double tol, const std::function<bool(double)>& pred) {
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

bool AngleEstimator::sec_test(double alpha, double delta) {
    if (!(delta > 0.0 && delta <= kPi)) throw DomainError("sector width must lie in (0, pi]");
    const Vec empty;
    std::vector<Vec> rows{probe(d_ - 2, alpha - delta, empty), probe(d_ - 2, alpha, empty),
                          probe(d_ - 2, alpha + delta, empty)};
    TestCounts c = deploy(rows, "sec_test");
    cur_i_ = d_ - 2;
    log_test("sec_test", alpha, delta, -1, c);
    return c.counts[1] > 0;
}

std::vector<double> AngleEstimator::binary_search_last() {
    cur_i_ = d_ - 2;
    const int K = budget_.depth(d_);
    const double alpha0 = 2.0 * kPi * uniform01(rng_);
    if (n_labels_ == 2) {
        // Two messages only: rows at beta -/+ pi/2 split the circle at beta, and a type
        // reports the second row iff its angle lies in (beta, beta + pi).
        const Vec empty;
        auto half = [&](double beta) {
            std::vector<Vec> rows{probe(d_ - 2, beta - kPi / 2, empty), probe(d_ - 2, beta + kPi / 2, empty)};
            TestCounts c = deploy(rows, "half_test");
            log_test("half_test", beta, kPi / 2, -1, c);
            return c;
        };
        double start = 0.0;
        bool found = false;
        for (int level = 0; level <= K && !found; ++level) {
            const int pts = level == 0 ? 1 : 1 << (level - 1);
            for (int m = 0; m < pts && !found; ++m) {
                double beta = level == 0 ? alpha0 : alpha0 + (2 * m + 1) * kPi / (1 << level);
                TestCounts c = half(beta);
                if (c.counts[1] == 0) {
                    start = beta;
                    found = true;
                } else if (c.counts[0] == 0) {
                    start = beta + kPi;
                    found = true;
                }
            }
        }
        if (!found) throw EstimationFailure("binary_search_last", "no half circle holds both angles");
        const double tol = kPi / std::ldexp(1.0, K);
        auto some_second = [&](double beta) { return half(beta).counts[1] > 0; };
        const double right = bisect(start, start + kPi, tol, some_second);
        const double left = bisect(start - kPi, start, tol, [&](double beta) { return !some_second(beta); });
        return {wrap(right - kPi - tol / 2, 2 * kPi), wrap(left - tol / 2, 2 * kPi)};
    }
    std::vector<double> Q{alpha0, alpha0 + kPi};
    for (int k = 1; k <= K; ++k) {
        std::vector<double> next;
        const double half = kPi / std::ldexp(1.0, k);
        for (double q : Q)
            if (sec_test(q + half, 2.0 * half)) {
                next.push_back(q);
                next.push_back(q + half);
            }
        if (next.size() > static_cast<std::size_t>(4 * n_labels_))
            throw EstimationFailure("binary_search_last", "too many surviving sectors");
        Q = std::move(next);
    }
    std::vector<double> out;
    const double w = kPi / std::ldexp(1.0, K);
    for (double q : Q)
        if (sec_test(q + w / 2, w)) out.push_back(wrap(q, 2 * kPi));
    if (static_cast<int>(out.size()) != n_labels_)
        throw EstimationFailure("binary_search_last", "surviving sectors do not match the number of types");
    return out;
}

bool AngleEstimator::con_sec_test(double alpha, double delta, int s, const CoordinateContext& ctx) {
    if (static_cast<int>(ctx.matched.size()) > n_labels_ - 3)
        throw CapacityError("conditional sector test needs |M| <= |Theta| - 3");
    const Vec& tail = ctx.tails[s];
    std::vector<Vec> rows{probe(ctx.i, alpha - delta, tail), probe(ctx.i, alpha, tail),
                          probe(ctx.i, alpha + delta, tail)};
    for (Vec& a : anchors(ctx)) rows.push_back(std::move(a));
    while (static_cast<int>(rows.size()) < n_labels_) rows.push_back(rows[2]);
    TestCounts c = deploy(rows, "con_sec_test");
    cur_i_ = ctx.i;
    log_test("con_sec_test", alpha, delta, s, c);
    return c.counts[1] > 0;
}

double AngleEstimator::bin_search_interval(double u1, double u2, int s, const CoordinateContext& ctx, double eps) {
    double L = u2 - u1;
    while (L > eps) {
        if (con_sec_test(u1 + L / 4, L / 2, s, ctx))
            u2 = u1 + L / 2;
        else
            u1 = u1 + L / 2;
        L /= 2;
    }
    return 0.5 * (u1 + u2);
}

void AngleEstimator::grid_search(CoordinateContext& ctx) {
    const int N = budget_.grid_N;
    const double iota = kPi / (2.0 * N);
    const double u = budget_.grid_guard * iota + iota * uniform01(rng_);
    const int N0 = static_cast<int>(std::floor(N - budget_.grid_guard - 2.0));
    const double w = budget_.width(ctx.i);
    for (int j = 1; j <= N0 && static_cast<int>(ctx.matched.size()) < n_labels_ - 2; ++j) {
        int best_label = -1;
        double best_angle = 0.0, best_dist = 0.0;
        for (int s = 0; s < n_labels_; ++s) {
            if (std::find(ctx.matched.begin(), ctx.matched.end(), s) != ctx.matched.end()) continue;
            for (int side : {+1, -1}) {
                const double center = kPi / 2 + side * (u + (j - 0.5) * iota);
                if (!con_sec_test(center, iota, s, ctx)) continue;
                double est = bin_search_interval(center - iota / 2, center + iota / 2, s, ctx, w);
                double dist = std::abs(est - kPi / 2);
                // Several labels can fire on one interval; the type's own label gives the
                // estimate nearest pi/2.
                if (best_label < 0 || dist < best_dist) {
                    best_label = s;
                    best_angle = est;
                    best_dist = dist;
                }
            }
        }
        if (best_label >= 0) {
            ctx.matched.push_back(best_label);
            ctx.matched_angles.push_back(best_angle);
        }
    }
    if (static_cast<int>(ctx.matched.size()) < n_labels_ - 2)
        throw EstimationFailure("grid_search", "sweep ended before |Theta| - 2 labels were matched");
}

TestCounts AngleEstimator::modified_test(double alpha, double delta, int q, const CoordinateContext& ctx) {
    if (static_cast<int>(ctx.matched.size()) != n_labels_ - 2)
        throw CapacityError("modified test needs exactly |Theta| - 2 anchors");
    const Vec& tail = ctx.tails[q];
    std::vector<Vec> rows{probe(ctx.i, alpha - delta, tail), probe(ctx.i, alpha + delta, tail)};
    for (Vec& a : anchors(ctx)) rows.push_back(std::move(a));
    TestCounts c = deploy(rows, "modified_test");
    cur_i_ = ctx.i;
    log_test("modified_test", alpha, delta, q, c);
    return c;
}

void AngleEstimator::estimate_penultimate(CoordinateContext& ctx) {
    std::vector<int> open;
    for (int s = 0; s < n_labels_; ++s)
        if (std::find(ctx.matched.begin(), ctx.matched.end(), s) == ctx.matched.end()) open.push_back(s);
    if (open.size() != 2) throw CapacityError("penultimate step needs two unmatched labels");
    const double iota = kPi / (2.0 * budget_.grid_N);
    double far = 0.0;
    for (double a : ctx.matched_angles) far = std::max(far, std::abs(a - kPi / 2));
    const double base = ctx.matched.empty() ? budget_.grid_guard * iota : far + budget_.pen_guard * iota;
    const double u = base + iota * uniform01(rng_);
    const double w = budget_.width(ctx.i);

    // Counts beyond (c+) and towards (c-) pi/2 for a test at distance dist on one side.
    struct Pair {
        long plus, minus;
    };
    auto test = [&](double dist, int side, int q) {
        TestCounts c = modified_test(kPi / 2 + side * dist, iota, q, ctx);
        return side > 0 ? Pair{c.counts[1], c.counts[0]} : Pair{c.counts[0], c.counts[1]};
    };
    std::vector<long> cp(2), cb(2);
    for (int k = 0; k < 2; ++k) {
        cp[k] = test(u, +1, open[k]).plus;
        cb[k] = test(u, -1, open[k]).plus;
    }
    const bool any_p = cp[0] > 0 || cp[1] > 0;
    const bool any_b = cb[0] > 0 || cb[1] > 0;
    if (!any_p && !any_b) throw EstimationFailure("estimate_penultimate", "no probe reached the open types");

    struct Candidate {
        int side, k;
    };
    std::vector<Candidate> cand;
    std::function<bool(Pair)> fires;
    int first_step = 1;
    if (any_p && any_b) {
        for (int k = 0; k < 2; ++k) {
            if (cp[k] > 0) cand.push_back({+1, k});
            if (cb[k] > 0) cand.push_back({-1, k});
        }
        fires = [](Pair p) { return p.plus == 0 && p.minus > 0; };
    } else {
        const int side = any_p ? +1 : -1;
        cand = {{side, 0}, {side, 1}};
        fires = [](Pair p) { return p.minus > 0; };
        first_step = 0;
    }
    const int N1 = static_cast<int>(std::floor((kPi / 2 - u) / iota)) - 1;
    for (int step = first_step; step <= N1; ++step) {
        const double dist = u + step * iota;
        int best = -1;
        double best_dist = 0.0;
        for (std::size_t c = 0; c < cand.size(); ++c) {
            const int side = cand[c].side, q = open[cand[c].k];
            if (!fires(test(dist, side, q))) continue;
            double r = bisect(dist - iota, dist, w, [&](double x) { return fires(test(x, side, q)); });
            if (best < 0 || r < best_dist) {
                best = static_cast<int>(c);
                best_dist = r;
            }
        }
        if (best >= 0) {
            ctx.matched.push_back(open[cand[best].k]);
            ctx.matched_angles.push_back(kPi / 2 + cand[best].side * best_dist);
            return;
        }
    }
    throw EstimationFailure("estimate_penultimate", "sweep found no switching probe");
}

Vec AngleEstimator::estimate_prior(const CoordinateContext& ctx) {
    std::vector<Vec> rows;
    for (int s = 0; s < n_labels_; ++s) rows.push_back(xi(ctx.i + 1, ctx.tails[s], d_ - 1));
    TestCounts c = deploy(rows, "prior");
    cur_i_ = ctx.i;
    log_test("prior", 0.0, 0.0, -1, c);
    Vec p(n_labels_);
    const double tot = static_cast<double>(std::max(1L, c.total()));
    for (int s = 0; s < n_labels_; ++s) p(s) = static_cast<double>(c.counts[s]) / tot;
    return p;
}

int AngleEstimator::estimate_sign(const CoordinateContext& ctx, int last, const Vec& prior) {
    const Vec e = unit(ctx.i - 1, d_ - 1);
    std::vector<Vec> rows{e};
    for (int s = 1; s < n_labels_; ++s) rows.push_back(-e);
    TestCounts c = deploy(rows, "sign");
    cur_i_ = ctx.i;
    log_test("sign", 0.0, 0.0, last, c);
    const double rho = static_cast<double>(c.counts[0]) / static_cast<double>(std::max(1L, c.total()));
    double known = 0.0;
    for (std::size_t k = 0; k < ctx.matched.size(); ++k)
        if (ctx.matched_angles[k] < kPi / 2) known += prior(ctx.matched[k]);
    return rho - known > budget_.sign_factor * prior(last) ? +1 : -1;
}

double AngleEstimator::estimate_last(CoordinateContext& ctx) {
    int last = -1;
    for (int s = 0; s < n_labels_; ++s)
        if (std::find(ctx.matched.begin(), ctx.matched.end(), s) == ctx.matched.end()) last = s;
    if (last < 0 || static_cast<int>(ctx.matched.size()) != n_labels_ - 1)
        throw CapacityError("last-coordinate step needs exactly one unmatched label");
    const Vec prior = estimate_prior(ctx);
    const int x = estimate_sign(ctx, last, prior);

    const Vec tau_last = xi(ctx.i + 1, ctx.tails[last], d_ - 1);
    std::vector<double> cj(ctx.matched.size());
    double c = -1.0, c_min = 1.0;
    for (std::size_t k = 0; k < ctx.matched.size(); ++k) {
        cj[k] = xi(ctx.i + 1, ctx.tails[ctx.matched[k]], d_ - 1).dot(tau_last);
        c = std::max(c, cj[k]);
        c_min = std::min(c_min, cj[k]);
    }
    // e must keep c + e > 0 and 1 + e c_j > 0 for every other label.
    double e = budget_.e_slack + std::max(0.0, -c);
    if (c_min < 0.0 && 1.0 + e * c_min <= budget_.e_slack) e = 0.5 * (std::max(0.0, -c) + 1.0 / -c_min);
    const double ce = c + e;
    if (!(ce > 0.0) || (c_min < 0.0 && 1.0 + e * c_min <= 0.0))
        throw EstimationFailure("estimate_last", "no admissible tail weight");

    const Vec ei = unit(ctx.i - 1, d_ - 1);
    double hi = std::numeric_limits<double>::infinity();
    double far = 0.0;
    for (std::size_t k = 0; k < ctx.matched.size(); ++k) {
        const double a = ctx.matched_angles[k];
        far = std::max(far, std::abs(a - kPi / 2));
        if (x * std::cos(a) > 0.0) hi = std::min(hi, 0.999 * std::abs(std::tan(a)) * (1.0 + e * cj[k]));
    }
    hi = std::min(hi, 1.5 * ce / std::tan(std::max(far, 1e-3)));

    auto fires = [&](double delta) {
        std::vector<Vec> rows;
        for (int m : ctx.matched) rows.push_back(xi(ctx.i + 1, ctx.tails[m], d_ - 1));
        rows.push_back(x * delta * ei - e * tau_last);
        TestCounts cnt = deploy(rows, "last");
        cur_i_ = ctx.i;
        log_test("last", delta, e, last, cnt);
        return cnt.counts.back() > 0;
    };
    if (!fires(hi)) throw EstimationFailure("estimate_last", "upper bracket does not reach the last type");
    const double delta = bisect(0.0, hi, budget_.width(ctx.i) * ce, fires);
    const double t = std::atan(delta / ce);
    const double est = x > 0 ? t : kPi - t;
    ctx.matched.push_back(last);
    ctx.matched_angles.push_back(est);
    return est;
}

std::vector<double> AngleEstimator::grid_search_coordinate(int i, const std::vector<Vec>& tails) {
    if (i < 1 || i > d_ - 3) throw DomainError("grid search covers coordinates 1..d-3");
    CoordinateContext ctx;
    ctx.i = i;
    ctx.tails = tails;
    cur_i_ = i;
    if (n_labels_ >= 3) grid_search(ctx);
    estimate_penultimate(ctx);
    estimate_last(ctx);
    std::vector<double> out(n_labels_);
    for (std::size_t k = 0; k < ctx.matched.size(); ++k)
        out[ctx.matched[k]] = std::clamp(ctx.matched_angles[k], 0.0, kPi);
    return out;
}

EstimatedAngles AngleEstimator::estimate_all() {
    if (n_labels_ < 2) throw DomainError("estimation needs at least two types");
    EstimatedAngles res;
    const long start = rounds_;
    const long start_tests = tests_;
    try {
        std::vector<double> sectors = binary_search_last();
        const double w = kPi / std::ldexp(1.0, budget_.depth(d_));
        res.angles.assign(n_labels_, Vec::Zero(d_ - 2));
        for (int s = 0; s < n_labels_; ++s) res.angles[s](d_ - 3) = wrap(sectors[s] + w / 2, 2 * kPi);
        for (int i = d_ - 3; i >= 1; --i) {
            std::vector<Vec> tails(n_labels_);
            for (int s = 0; s < n_labels_; ++s) tails[s] = res.angles[s].segment(i, d_ - 2 - i);
            std::vector<double> coord = grid_search_coordinate(i, tails);
            for (int s = 0; s < n_labels_; ++s) res.angles[s](i - 1) = coord[s];
        }
        res.ok = true;
    } catch (const EstimationFailure& e) {
        res.ok = false;
        res.failure_stage = e.stage;
        res.failure_message = e.what();
    }
    res.rounds_used = rounds_ - start;
    res.tests = tests_ - start_tests;
    return res;
}

EstimatedAngles estimate_all(Environment& env, const EstimationBudget& budget, const Isometry& iso,
                             std::uint64_t seed, std::ostream* trace) {
    AngleEstimator est(env, budget, iso, seed, trace);
    return est.estimate_all();
}

namespace {

double vector_distance(const Vec& a, const Vec& b) {
    const int k = static_cast<int>(a.size());
    double s = 0.0;
    for (int i = 0; i + 1 < k; ++i) s += std::abs(a(i) - b(i));
    if (k > 0) s += arc(a(k - 1), b(k - 1));
    return s;
}

}  // namespace

std::vector<int> best_alignment(const RewardAngles& truth, const RewardAngles& estimate) {
    if (truth.size() != estimate.size()) throw DimensionError("angle sets differ in cardinality");
    std::vector<int> perm(truth.size()), best;
    std::iota(perm.begin(), perm.end(), 0);
    double best_val = std::numeric_limits<double>::infinity();
    do {
        double v = matched_distance(truth, estimate, perm);
        if (v < best_val) {
            best_val = v;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double matched_distance(const RewardAngles& truth, const RewardAngles& estimate, const std::vector<int>& align) {
    if (truth.size() != estimate.size() || align.size() != estimate.size())
        throw DimensionError("angle sets differ in cardinality");
    double worst = 0.0;
    for (std::size_t s = 0; s < estimate.size(); ++s) {
        if (estimate[s].size() != truth[align[s]].size()) throw DimensionError("angle vector length mismatch");
        worst = std::max(worst, vector_distance(truth[align[s]], estimate[s]));
    }
    return worst;
}

double angle_set_distance(const RewardAngles& truth, const RewardAngles& estimate) {
    if (truth.empty()) return 0.0;
    return matched_distance(truth, estimate, best_alignment(truth, estimate));
}

double coordinate_distance(const std::vector<double>& truth, const std::vector<double>& estimate, bool periodic) {
    if (truth.size() != estimate.size()) throw DimensionError("angle sets differ in cardinality");
    std::vector<int> perm(truth.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = truth.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (std::size_t s = 0; s < perm.size(); ++s) {
            double dlt = periodic ? arc(truth[perm[s]], estimate[s]) : std::abs(truth[perm[s]] - estimate[s]);
            worst = std::max(worst, dlt);
        }
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace palab

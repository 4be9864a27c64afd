#include "palab/geometry.hpp"

#include <cmath>
#include <random>
#include <string>

#include "palab/errors.hpp"

namespace palab {

double wrap(double alpha, double m) {
    if (!std::isfinite(alpha) || !std::isfinite(m)) throw DomainError("wrap: non-finite input");
    if (m <= 0.0) throw DomainError("wrap: modulus must be positive");
    double r = std::fmod(alpha, m);
    if (r < 0.0) r += m;
    if (r >= m) r = 0.0;
    return r;
}

double arc(double alpha, double beta) {
    const double two_pi = 2.0 * kPi;
    return std::min(wrap(beta - alpha, two_pi), wrap(alpha - beta, two_pi));
}

Vec spherical_embed(const AngleVector& angles) {
    const auto k = angles.size();
    if (k < 1) throw DimensionError("spherical_embed: need at least one angle");
    Vec out(k + 1);
    double prod = 1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        out(i) = prod * std::cos(angles(i));
        prod *= std::sin(angles(i));
    }
    out(k) = prod;
    return out;
}

Vec xi(int i, const Vec& tail, int dim) {
    const int k = dim - 1;  // number of angles, d - 2
    if (i < 1 || i > k) throw DimensionError("xi: index out of range");
    if (tail.size() != k - i + 1) throw DimensionError("xi: tail length must be d-1-i");
    AngleVector full = AngleVector::Constant(k, kPi / 2.0);
    full.tail(tail.size()) = tail;
    Vec out = spherical_embed(full);
    // The padded coordinates are exact zeros in real arithmetic.
    out.head(i - 1).setZero();
    return out;
}

AngleVector inverse_embed(const Vec& v) {
    const auto n = v.size();
    if (n < 2) throw DimensionError("inverse_embed: need dimension >= 2");
    if (std::abs(v.norm() - 1.0) > 1e-9) throw DomainError("inverse_embed: input is not a unit vector");
    AngleVector a(n - 1);
    // Suffix norms computed from the back to stay accurate near poles.
    Vec suffix(n + 1);
    suffix(n) = 0.0;
    for (Eigen::Index i = n - 1; i >= 0; --i) suffix(i) = std::hypot(suffix(i + 1), v(i));
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        const double r = suffix(i);
        if (r == 0.0) {
            a(i) = 0.0;
            continue;
        }
        a(i) = std::atan2(suffix(i + 1), v(i));
    }
    a(n - 2) = wrap(std::atan2(v(n - 1), v(n - 2)), 2.0 * kPi);
    return a;
}

namespace {

Mat householder_base(int d) {
    // Reflection sending e_d to 1/sqrt(d); its first d-1 columns span the hyperplane.
    Vec target = Vec::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    Vec ed = Vec::Zero(d);
    ed(d - 1) = 1.0;
    Vec w = ed - target;
    Mat h = Mat::Identity(d, d);
    const double wn = w.squaredNorm();
    if (wn > 0.0) h -= 2.0 * w * w.transpose() / wn;
    return h.leftCols(d - 1).transpose();
}

Mat random_rotation(int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat a(k, k);
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < k; ++r) a(r, c) = g(rng);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(k, k);
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

}  // namespace

Isometry make_isometry(int d, std::uint64_t seed) {
    if (d < 2) throw DomainError("make_isometry: d must be at least 2");
    Isometry iso;
    iso.seed = seed;
    iso.matrix = random_rotation(d - 1, seed) * householder_base(d);
    return iso;
}

Isometry isometry_from_matrix(const Mat& m, std::uint64_t seed) {
    if (m.rows() + 1 != m.cols()) throw DimensionError("isometry: matrix must be (d-1) x d");
    const int d = static_cast<int>(m.cols());
    if ((m * Vec::Ones(d)).cwiseAbs().maxCoeff() > 1e-12)
        throw DomainError("isometry: rows must be orthogonal to the ones vector");
    if ((m * m.transpose() - Mat::Identity(d - 1, d - 1)).cwiseAbs().maxCoeff() > 1e-12)
        throw DomainError("isometry: rows must be orthonormal");
    return Isometry{m, seed};
}

double default_rd(int d) { return 0.9 / std::sqrt(static_cast<double>(d) * (d - 1)); }

Vec mechanism_row(const Vec& w, double r_d, const Isometry& iso) {
    const int d = iso.d();
    Vec row = Vec::Constant(d, 1.0 / d) + r_d * iso.inverse(w);
    if (row.minCoeff() < 0.0) throw DomainError("mechanism row leaves the simplex (r_d too large)");
    return row;
}

Vec x_of_angle(double alpha, double r_d, const Isometry& iso) {
    const int d = iso.d();
    if (d < 3) throw DimensionError("x_of_angle: needs d >= 3");
    Vec w = Vec::Zero(d - 1);
    w(d - 3) = std::cos(alpha);
    w(d - 2) = std::sin(alpha);
    return mechanism_row(w, r_d, iso);
}

}  // namespace palab

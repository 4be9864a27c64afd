#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace palab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// Spherical coordinates of a unit vector in R^{d-1}: d-2 angles, the first
// d-3 in [0, pi] and the last one in [0, 2 pi).
using AngleVector = Vec;

double wrap(double alpha, double m);
double arc(double alpha, double beta);

Vec spherical_embed(const AngleVector& angles);
// rho(pi/2, ..., pi/2, tail) with i-1 leading right angles; i is 1-based.
Vec xi(int i, const Vec& tail, int dim);
AngleVector inverse_embed(const Vec& v);

// Linear isometry between the zero-sum hyperplane of R^d and R^{d-1}.
struct Isometry {
    Mat matrix;  // (d-1) x d, orthonormal rows orthogonal to the ones vector
    std::uint64_t seed = 0;

    int d() const { return static_cast<int>(matrix.cols()); }
    Vec apply(const Vec& x) const { return matrix * x; }
    Vec inverse(const Vec& y) const { return matrix.transpose() * y; }
};

Isometry make_isometry(int d, std::uint64_t seed);
Isometry isometry_from_matrix(const Mat& m, std::uint64_t seed);

double default_rd(int d);

// 1/d + r_d * iso^{-1}(w) for a vector w in R^{d-1}; checked against the simplex.
Vec mechanism_row(const Vec& w, double r_d, const Isometry& iso);
Vec x_of_angle(double alpha, double r_d, const Isometry& iso);

}  // namespace palab

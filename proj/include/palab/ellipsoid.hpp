#pragma once

#include "palab/geometry.hpp"

namespace palab {

struct ConfidenceEllipsoid {
    Vec beta_hat;
    Mat omega;
    double radius = 0.0;
    double lambda = 1.0;
    double delta = 0.1;

    // radius * sqrt(x' omega^{-1} x), the width of the set along x
    double width(const Vec& x) const;
    bool contains(const Vec& beta) const;
};

}  // namespace palab

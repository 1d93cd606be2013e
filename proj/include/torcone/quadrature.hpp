#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "error.hpp"

namespace torcone {

struct TriangleQuadPoint {
    double xi, eta, weight;
};

// Radon 7-point rule on the reference triangle, exact to degree 5; weights sum to 1/2.
inline const std::array<TriangleQuadPoint, 7>& triangle_rule() {
    static const std::array<TriangleQuadPoint, 7> rule = [] {
        const double s = std::sqrt(15.0);
        const double a1 = (6.0 - s) / 21.0, b1 = (9.0 + 2.0 * s) / 21.0;
        const double a2 = (6.0 + s) / 21.0, b2 = (9.0 - 2.0 * s) / 21.0;
        const double w1 = (155.0 - s) / 2400.0, w2 = (155.0 + s) / 2400.0;
        return std::array<TriangleQuadPoint, 7>{{
            {1.0 / 3.0, 1.0 / 3.0, 9.0 / 80.0},
            {a1, a1, w1}, {b1, a1, w1}, {a1, b1, w1},
            {a2, a2, w2}, {b2, a2, w2}, {a2, b2, w2},
        }};
    }();
    return rule;
}

struct LineQuadPoint {
    double t, weight;  // t in [0,1], weights sum to 1
};

inline const std::array<LineQuadPoint, 4>& gauss4() {
    static const std::array<LineQuadPoint, 4> rule = [] {
        const double p1 = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double p2 = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double w1 = (18.0 + std::sqrt(30.0)) / 36.0;
        const double w2 = (18.0 - std::sqrt(30.0)) / 36.0;
        return std::array<LineQuadPoint, 4>{{
            {0.5 * (1.0 - p2), 0.5 * w2}, {0.5 * (1.0 - p1), 0.5 * w1},
            {0.5 * (1.0 + p1), 0.5 * w1}, {0.5 * (1.0 + p2), 0.5 * w2},
        }};
    }();
    return rule;
}

// Adaptive Gauss-Kronrod on [a,b]; throws when the error estimate misses both rel_tol and abs_tol.
template <class F>
double integrate(F&& f, double a, double b, const std::string& what, double rel_tol = 1e-10, double abs_tol = 0.0) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0, l1 = 0.0;
    double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, rel_tol, &err, &l1);
    // the adaptive stopping rule is relative only; integrands at noise level would recurse to full depth
    if (std::isfinite(v) && err <= std::max(rel_tol * l1, abs_tol)) return v;
    v = gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol, &err, &l1);
    if (!std::isfinite(v) || err > std::max(rel_tol * l1, abs_tol) + 1e-300)
        throw QuadratureError(what, "adaptive quadrature did not reach tolerance (error estimate " +
                                        std::to_string(err) + ", |f|_1 " + std::to_string(l1) + ")");
    return v;
}

}  // namespace torcone

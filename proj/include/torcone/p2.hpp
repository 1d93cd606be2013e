#pragma once

#include <array>
#include <cmath>

#include "vec2.hpp"

// Quadratic Lagrange triangle. Local nodes: vertices 0,1,2 then midpoints of edges (0,1), (1,2), (2,0).
namespace torcone::p2 {

inline void shape(Vec2 r, std::array<double, 6>& N, std::array<Vec2, 6>& dN) {
    const double x = r.x, y = r.y, l0 = 1.0 - x - y;
    N = {l0 * (2.0 * l0 - 1.0), x * (2.0 * x - 1.0), y * (2.0 * y - 1.0), 4.0 * l0 * x, 4.0 * x * y, 4.0 * y * l0};
    const double g0 = 1.0 - 4.0 * l0;
    dN = {Vec2{g0, g0},
          Vec2{4.0 * x - 1.0, 0.0},
          Vec2{0.0, 4.0 * y - 1.0},
          Vec2{4.0 * (l0 - x), -4.0 * x},
          Vec2{4.0 * y, 4.0 * x},
          Vec2{-4.0 * y, 4.0 * (l0 - y)}};
}

// second derivatives in reference coordinates (constant)
inline const std::array<Mat2, 6>& ref_hessians() {
    static const std::array<Mat2, 6> h = {Mat2{4, 4, 4, 4}, Mat2{4, 0, 0, 0}, Mat2{0, 0, 0, 4},
                                          Mat2{-8, -4, -4, 0}, Mat2{0, 4, 4, 0}, Mat2{0, -4, -4, -8}};
    return h;
}

struct Point {
    Vec2 x;
    double detJ = 0.0;
    std::array<double, 6> N{};
    std::array<Vec2, 6> grad{};
    std::array<Mat2, 6> hess{};
};

inline Vec2 map(const std::array<Vec2, 6>& X, Vec2 r) {
    std::array<double, 6> N;
    std::array<Vec2, 6> dN;
    shape(r, N, dN);
    Vec2 x;
    for (int i = 0; i < 6; ++i) x += N[i] * X[i];
    return x;
}

// J = dx/dr, columns are derivatives with respect to the reference coordinates.
inline Mat2 jacobian(const std::array<Vec2, 6>& X, const std::array<Vec2, 6>& dN) {
    Mat2 J;
    for (int i = 0; i < 6; ++i) {
        J.a += X[i].x * dN[i].x;
        J.b += X[i].x * dN[i].y;
        J.c += X[i].y * dN[i].x;
        J.d += X[i].y * dN[i].y;
    }
    return J;
}

inline Point evaluate(const std::array<Vec2, 6>& X, bool curved, Vec2 r, bool with_hessian) {
    Point p;
    std::array<Vec2, 6> dN;
    shape(r, p.N, dN);
    for (int i = 0; i < 6; ++i) p.x += p.N[i] * X[i];
    const Mat2 J = jacobian(X, dN);
    p.detJ = J.det();
    const Mat2 Jinv = J.inverse();
    const Mat2 JinvT = Jinv.transpose();
    for (int i = 0; i < 6; ++i) p.grad[i] = JinvT * dN[i];
    if (!with_hessian) return p;
    const auto& H = ref_hessians();
    Mat2 hx, hy;  // reference Hessians of the map components
    if (curved) {
        for (int i = 0; i < 6; ++i) {
            hx += X[i].x * H[i];
            hy += X[i].y * H[i];
        }
    }
    for (int i = 0; i < 6; ++i) {
        Mat2 h = H[i];
        if (curved) h -= p.grad[i].x * hx + p.grad[i].y * hy;
        p.hess[i] = JinvT * h * Jinv;
    }
    return p;
}

// Newton inversion of the element map; returns false if it fails to converge.
inline bool inverse_map(const std::array<Vec2, 6>& X, bool curved, Vec2 x, Vec2& r) {
    const Mat2 A{X[1].x - X[0].x, X[2].x - X[0].x, X[1].y - X[0].y, X[2].y - X[0].y};
    r = A.inverse() * (x - X[0]);
    if (!curved) return true;
    for (int it = 0; it < 30; ++it) {
        std::array<double, 6> N;
        std::array<Vec2, 6> dN;
        shape(r, N, dN);
        Vec2 f = -x;
        for (int i = 0; i < 6; ++i) f += N[i] * X[i];
        const Mat2 J = jacobian(X, dN);
        const Vec2 step = J.inverse() * f;
        r -= step;
        if (norm(step) <= 1e-13) return true;
    }
    return false;
}

}  // namespace torcone::p2

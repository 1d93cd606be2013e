#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"
#include "vec2.hpp"

namespace torcone {

enum class Wall { A, B };  // A: ray theta = 0, B: ray theta = opening

class SectorCone {
public:
    explicit SectorCone(double opening) : opening_(opening) {
        if (!(opening > 0.0) || opening > 2.0 * pi * (1.0 + 1e-14))
            throw PreconditionError("SectorCone", "opening must lie in (0, 2*pi], got " + std::to_string(opening));
        if (std::abs(opening_ - 2.0 * pi) < 1e-12) opening_ = 2.0 * pi;
    }
    double opening() const { return opening_; }
    bool full_plane() const { return opening_ == 2.0 * pi; }
    bool convex() const { return opening_ <= pi + 1e-12 || full_plane(); }
    bool half_plane() const { return std::abs(opening_ - pi) <= 1e-12; }

    Vec2 ray_direction(Wall w) const {
        if (w == Wall::A) return {1.0, 0.0};
        if (half_plane()) return {-1.0, 0.0};
        if (std::abs(opening_ - 0.5 * pi) <= 1e-15) return {0.0, 1.0};
        return polar(1.0, opening_);
    }
    // outward unit normal of the cone wall
    Vec2 wall_normal(Wall w) const {
        if (w == Wall::A) return {0.0, -1.0};
        const Vec2 e = ray_direction(Wall::B);
        return {-e.y, e.x};
    }
    bool contains_angle(double theta, double tol = 1e-12) const {
        return full_plane() || (theta >= -tol && theta <= opening_ + tol);
    }

private:
    double opening_;
};

inline int normal_span_dim(const SectorCone& cone) {
    if (cone.full_plane()) return 0;
    if (cone.half_plane()) return 1;
    return 2;
}

struct RadialSample {
    double rho, drho, d2rho;
};

struct CosineMode {
    int m;
    double a;
};

class PolarDomain {
public:
    using RadialFn = std::function<RadialSample(double)>;

    static PolarDomain cosine_series(SectorCone cone, double base_radius, double amplitude,
                                     std::vector<CosineMode> modes) {
        if (!(base_radius > 0.0)) throw PreconditionError("PolarDomain", "base_radius must be positive");
        if (!(amplitude >= 0.0)) throw PreconditionError("PolarDomain", "amplitude must be non-negative");
        for (const auto& md : modes) {
            if (md.m < 0) throw PreconditionError("PolarDomain", "cosine mode index must be non-negative");
            if (cone.full_plane() && md.m % 2 != 0 && md.a != 0.0)
                throw PreconditionError("PolarDomain", "odd cosine modes are not periodic on the full plane (m = " +
                                                           std::to_string(md.m) + ")");
        }
        PolarDomain d(cone);
        d.base_radius_ = base_radius;
        d.amplitude_ = amplitude;
        d.modes_ = std::move(modes);
        d.orthogonal_ = true;
        const double w = cone.opening();
        d.fn_ = [R0 = base_radius, eps = amplitude, w, modes = d.modes_](double t) {
            double f = 0.0, df = 0.0, d2f = 0.0;
            for (const auto& md : modes) {
                const double k = md.m * pi / w;
                f += md.a * std::cos(k * t);
                df -= md.a * k * std::sin(k * t);
                d2f -= md.a * k * k * std::cos(k * t);
            }
            return RadialSample{R0 * (1.0 + eps * f), R0 * eps * df, R0 * eps * d2f};
        };
        d.validate();
        return d;
    }

    static PolarDomain sector(SectorCone cone, double base_radius) {
        return cosine_series(cone, base_radius, 0.0, {});
    }

    // Arbitrary smooth radial function; the endpoint derivative decides orthogonality.
    static PolarDomain from_function(SectorCone cone, RadialFn fn, double reference_radius) {
        PolarDomain d(cone);
        d.base_radius_ = reference_radius;
        d.amplitude_ = 0.0;
        d.fn_ = std::move(fn);
        d.raw_ = true;
        const double w = cone.opening();
        const auto a = d.fn_(0.0), b = d.fn_(w);
        d.orthogonal_ = cone.full_plane() ? true : (std::abs(a.drho) <= 1e-12 * a.rho && std::abs(b.drho) <= 1e-12 * b.rho);
        d.validate();
        return d;
    }

    const SectorCone& cone() const { return cone_; }
    double opening() const { return cone_.opening(); }
    double base_radius() const { return base_radius_; }
    double amplitude() const { return amplitude_; }
    const std::vector<CosineMode>& modes() const { return modes_; }
    bool raw() const { return raw_; }
    bool orthogonal() const { return orthogonal_; }

    RadialSample radius(double theta) const { return fn_(theta); }
    double rho(double theta) const { return fn_(theta).rho; }
    Vec2 point(double theta) const { return polar(rho(theta), theta); }
    // dX/dtheta
    Vec2 tangent(double theta) const {
        const auto r = fn_(theta);
        const Vec2 er = polar(1.0, theta), et{-er.y, er.x};
        return r.drho * er + r.rho * et;
    }
    double speed(double theta) const {
        const auto r = fn_(theta);
        return std::hypot(r.rho, r.drho);
    }
    Vec2 normal(double theta) const {
        const Vec2 t = tangent(theta);
        return (1.0 / norm(t)) * Vec2{t.y, -t.x};
    }

private:
    explicit PolarDomain(SectorCone cone) : cone_(cone) {}

    void validate() const {
        const int n = 4096;
        const double w = cone_.opening();
        for (int i = 0; i <= n; ++i) {
            const double t = w * i / n;
            const auto r = fn_(t);
            if (!(r.rho > 0.0) || !std::isfinite(r.drho) || !std::isfinite(r.d2rho))
                throw PreconditionError("PolarDomain", "radial function must be positive and finite (theta = " +
                                                           std::to_string(t) + ")");
        }
    }

    SectorCone cone_;
    double base_radius_ = 1.0;
    double amplitude_ = 0.0;
    std::vector<CosineMode> modes_;
    RadialFn fn_;
    bool raw_ = false;
    bool orthogonal_ = true;
};

inline double curvature(const PolarDomain& d, double theta) {
    const auto r = d.radius(theta);
    const double s2 = r.rho * r.rho + r.drho * r.drho;
    return (r.rho * r.rho + 2.0 * r.drho * r.drho - r.rho * r.d2rho) / (s2 * std::sqrt(s2));
}

inline double corner_conormal_sum(const PolarDomain& d, Vec2 z) {
    if (d.cone().full_plane()) return 0.0;
    const double w = d.opening();
    const Vec2 t0 = d.tangent(0.0), t1 = d.tangent(w);
    const Vec2 n0 = (-1.0 / norm(t0)) * t0;
    const Vec2 n1 = (1.0 / norm(t1)) * t1;
    return dot(d.point(0.0) - z, n0) + dot(d.point(w) - z, n1);
}

struct Measures {
    double area = 0.0;
    double gamma0_length = 0.0;
    double diameter = 0.0;
};

inline Measures measures(const PolarDomain& d) {
    const double w = d.opening();
    Measures m;
    m.area = 0.5 * integrate([&](double t) { const double r = d.rho(t); return r * r; }, 0.0, w, "measures/area");
    m.gamma0_length = integrate([&](double t) { return d.speed(t); }, 0.0, w, "measures/gamma0_length");
    const int n = 1000;
    std::vector<Vec2> pts;
    pts.reserve(n + 1);
    const int den = d.cone().full_plane() ? n : n - 1;
    for (int i = 0; i < n; ++i) pts.push_back(d.point(w * i / den));
    if (!d.cone().full_plane()) pts.push_back({0.0, 0.0});
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, norm2(pts[i] - pts[j]));
    m.diameter = std::sqrt(best);
    return m;
}

inline double reference_radius(double area, double gamma0_length, int N = 2) {
    if (!(area > 0.0) || !(gamma0_length > 0.0))
        throw PreconditionError("reference_radius", "area and gamma0_length must be positive");
    return N * area / gamma0_length;
}

struct SphereRadii {
    double r_interior = 0.0;
    double r_exterior = 0.0;
    bool interior_failed = false;  // condition fails for every r above the floor
    bool exterior_failed = false;
    bool exterior_capped = false;  // condition still holds at the cap
    double resolution = 0.0;       // bisection bracket width plus sampling spacing bound
    int samples = 0;
};

namespace detail {

inline double polar_angle(Vec2 p) {
    double a = std::atan2(p.y, p.x);
    if (a < 0.0) a += 2.0 * pi;
    return a;
}

struct BoundarySamples {
    std::vector<double> theta;
    std::vector<Vec2> x, nu;
    std::vector<double> H;
};

inline BoundarySamples sample_boundary(const PolarDomain& d, int n) {
    BoundarySamples s;
    const double w = d.opening();
    const bool closed = d.cone().full_plane();
    const int den = closed ? n : n - 1;
    for (int i = 0; i < n; ++i) {
        const double t = w * i / den;
        s.theta.push_back(t);
        s.x.push_back(d.point(t));
        s.nu.push_back(d.normal(t));
        s.H.push_back(curvature(d, t));
    }
    return s;
}

// Is the point inside the closure of the cone-restricted domain?
inline bool in_closed_domain(const PolarDomain& d, Vec2 c, double tol) {
    const double r = norm(c);
    if (r <= tol) return true;
    double a = polar_angle(c);
    if (!d.cone().full_plane()) {
        if (a > d.opening() + 1e-12) {
            if (a > 2.0 * pi - 1e-12) a = 0.0;
            else return false;
        }
    }
    return r <= d.rho(std::min(a, d.opening())) + tol;
}

inline bool in_cone_outside_domain(const PolarDomain& d, Vec2 c, double tol) {
    const double r = norm(c);
    if (r <= tol) return false;
    double a = polar_angle(c);
    if (!d.cone().full_plane()) {
        if (a > d.opening() + 1e-12) {
            if (a > 2.0 * pi - 1e-12) a = 0.0;
            else return false;
        }
    }
    return r > d.rho(std::min(a, d.opening())) - tol;
}

inline bool touching_ok(const PolarDomain& d, const BoundarySamples& s, double r, bool interior, double tol) {
    const std::size_t n = s.x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double local = interior ? s.H[i] : -s.H[i];
        if (r * local > 1.0 + 1e-12) return false;
        const Vec2 c = interior ? s.x[i] - r * s.nu[i] : s.x[i] + r * s.nu[i];
        if (interior ? !in_closed_domain(d, c, tol) : !in_cone_outside_domain(d, c, tol)) return false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (norm(s.x[j] - c) < r - tol) return false;
        }
    }
    return true;
}

}  // namespace detail

inline SphereRadii relative_sphere_radii(const PolarDomain& d, int samples = 720) {
    if (samples < 16) throw PreconditionError("relative_sphere_radii", "at least 16 boundary samples required");
    const double R0 = d.base_radius();
    const double floor = 1e-6 * R0, cap = 10.0 * R0;
    const double tol = 1e-9 * R0;
    const auto s = detail::sample_boundary(d, samples);
    SphereRadii out;
    out.samples = samples;
    double max_gap = 0.0;
    for (std::size_t i = 1; i < s.x.size(); ++i) max_gap = std::max(max_gap, norm(s.x[i] - s.x[i - 1]));

    auto solve = [&](bool interior, bool& failed, bool& capped) {
        if (detail::touching_ok(d, s, cap, interior, tol)) {
            capped = true;
            return cap;
        }
        if (!detail::touching_ok(d, s, floor, interior, tol)) {
            failed = true;
            return 0.0;
        }
        double lo = floor, hi = cap;
        while (hi - lo > 1e-9 * R0) {
            const double mid = 0.5 * (lo + hi);
            (detail::touching_ok(d, s, mid, interior, tol) ? lo : hi) = mid;
        }
        return lo;
    };
    bool dummy = false;
    out.r_interior = solve(true, out.interior_failed, dummy);
    out.r_exterior = solve(false, out.exterior_failed, out.exterior_capped);
    out.resolution = 1e-9 * R0 + max_gap;
    return out;
}

struct CurvatureScan {
    double min_H = 0.0;
    double max_H = 0.0;
    std::vector<std::pair<double, double>> nonpositive_ranges;  // theta intervals where H <= 0
    bool mean_convex() const { return nonpositive_ranges.empty(); }
};

inline CurvatureScan curvature_scan(const PolarDomain& d, int n = 4000) {
    CurvatureScan sc;
    sc.min_H = std::numeric_limits<double>::infinity();
    sc.max_H = -sc.min_H;
    const double w = d.opening();
    bool open = false;
    double start = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = w * i / n;
        const double H = curvature(d, t);
        sc.min_H = std::min(sc.min_H, H);
        sc.max_H = std::max(sc.max_H, H);
        if (H <= 0.0 && !open) { open = true; start = t; }
        if (H > 0.0 && open) { open = false; sc.nonpositive_ranges.emplace_back(start, t); }
    }
    if (open) sc.nonpositive_ranges.emplace_back(start, w);
    return sc;
}

struct GeometryReport {
    double area = 0.0;
    double gamma0_length = 0.0;
    double diameter = 0.0;
    double r_interior = 0.0;
    double r_exterior = 0.0;
    double reference_radius = 0.0;
    int k = 0;
    SphereRadii radii;
};

inline GeometryReport analyze(const PolarDomain& d) {
    GeometryReport g;
    const auto m = measures(d);
    g.area = m.area;
    g.gamma0_length = m.gamma0_length;
    g.diameter = m.diameter;
    g.reference_radius = reference_radius(m.area, m.gamma0_length);
    g.radii = relative_sphere_radii(d);
    g.r_interior = g.radii.r_interior;
    g.r_exterior = g.radii.r_exterior;
    g.k = normal_span_dim(d.cone());
    return g;
}

}  // namespace torcone

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "fem.hpp"
#include "geometry.hpp"

namespace torcone {

// z per the normal-span rule: the first k coordinates vanish, the rest are means of x - grad u.
// For k = 1 the wall normal spans the y axis (walls on the x axis).
inline Vec2 center_z(const FemSolution& u, int k) {
    if (k >= 2) return {0.0, 0.0};
    double vol = 0.0;
    Vec2 acc;
    for_each_volume_point(u, false, [&](const VolumePoint& p) {
        vol += p.weight;
        acc += p.weight * (p.x - p.u.gradient);
    });
    acc = (1.0 / vol) * acc;
    if (k == 1) acc.y = 0.0;
    return acc;
}

inline Vec2 alternative_center_z(const FemSolution& u) { return center_z(u, 0); }

struct DeficitIntegrals {
    double plain = 0.0;
    double weighted = 0.0;
    double fan_plain = 0.0;     // part of `plain` from triangles touching the cone vertex
    double fan_weighted = 0.0;
};

inline DeficitIntegrals deficit_integrals(const FemSolution& u) {
    DeficitIntegrals d;
    const auto& fan = u.mesh().fan;
    for_each_volume_point(u, true, [&](const VolumePoint& p) {
        const double c = p.weight * cs_deficit(p.u.hessian);
        const double cw = c * (-p.u.value);
        d.plain += c;
        d.weighted += cw;
        if (fan[p.triangle]) {
            d.fan_plain += c;
            d.fan_weighted += cw;
        }
    });
    return d;
}

struct Gamma1Fluxes {
    double flux = 0.0;           // int_{Gamma1} <D2u grad u, nu>
    double flux_weighted = 0.0;  // int_{Gamma1} u <D2u grad u, nu>
};

inline Gamma1Fluxes gamma1_fluxes(const FemSolution& u) {
    Gamma1Fluxes g;
    for (const auto& s : sample_gamma1(u)) {
        const double f = dot(s.u.hessian * s.u.gradient, s.nu);
        g.flux += s.weight * f;
        g.flux_weighted += s.weight * s.u.value * f;
    }
    return g;
}

struct BoundaryProfile {
    double m_lower = 0.0;  // min u_nu over Gamma0
    double unu_max = 0.0;
    double unu_minus_R_L2 = 0.0;
    double volume_flux = 0.0;  // int_{Gamma0} u_nu
};

inline BoundaryProfile boundary_profile(const FemSolution& u, double R) {
    BoundaryProfile b;
    b.m_lower = std::numeric_limits<double>::infinity();
    b.unu_max = -b.m_lower;
    double l2 = 0.0;
    for (const auto& s : sample_gamma0(u)) {
        const double un = dot(s.u.gradient, s.nu);
        b.m_lower = std::min(b.m_lower, un);
        b.unu_max = std::max(b.unu_max, un);
        l2 += s.weight * (un - R) * (un - R);
        b.volume_flux += s.weight * un;
    }
    b.unu_minus_R_L2 = std::sqrt(l2);
    return b;
}

inline BoundaryProfile boundary_profile(const FemSolution& u) {
    const auto m = measures(u.mesh().domain());
    return boundary_profile(u, reference_radius(m.area, m.gamma0_length));
}

// h = |x - z|^2 / 2 - u
struct HFields {
    double mean = 0.0;         // over the domain
    double mean_gamma0 = 0.0;  // of |x - z|^2 / 2 over Gamma0
    double grad_L2 = 0.0;
    double hess_L2 = 0.0;
    std::vector<std::pair<double, double>> gamma0;  // (theta, h) at boundary samples
};

inline HFields h_fields(const FemSolution& u, Vec2 z) {
    HFields h;
    double vol = 0.0, g2 = 0.0, h2 = 0.0;
    for_each_volume_point(u, true, [&](const VolumePoint& p) {
        const Vec2 r = p.x - z;
        vol += p.weight;
        h.mean += p.weight * (0.5 * norm2(r) - p.u.value);
        g2 += p.weight * norm2(r - p.u.gradient);
        h2 += p.weight * frobenius2(Mat2{1.0, 0.0, 0.0, 1.0} - p.u.hessian);
    });
    h.mean /= vol;
    h.grad_L2 = std::sqrt(g2);
    h.hess_L2 = std::sqrt(h2);
    double len = 0.0;
    for (const auto& s : sample_gamma0(u)) {
        const double q = 0.5 * norm2(s.x - z);
        len += s.weight;
        h.mean_gamma0 += s.weight * q;
        h.gamma0.emplace_back(s.theta, q - s.u.value);
    }
    h.mean_gamma0 /= len;
    return h;
}

struct RadialExtent {
    double rho_i = 0.0;  // min |x - z| over the closure of Gamma0
    double rho_e = 0.0;
};

// Dense sampling followed by Brent refinement around the extreme samples.
inline RadialExtent radial_extent(const PolarDomain& d, Vec2 z, int samples = 2000) {
    const double w = d.opening();
    auto dist = [&](double t) { return norm(d.point(t) - z); };
    std::vector<double> v(samples + 1);
    for (int i = 0; i <= samples; ++i) v[i] = dist(w * i / samples);
    auto refine = [&](int i, double sign) {
        const double lo = w * std::max(0, i - 1) / samples, hi = w * std::min(samples, i + 1) / samples;
        const auto r = boost::math::tools::brent_find_minima([&](double t) { return sign * dist(t); }, lo, hi, 52);
        return sign * r.second;
    };
    const auto imin = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
    const auto imax = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    RadialExtent e;
    e.rho_i = std::min(refine(imin, 1.0), v[imin]);
    e.rho_e = std::max(refine(imax, -1.0), v[imax]);
    return e;
}

struct Pseudodistances {
    double sbt = 0.0;       // || |x - z| - R ||_{L2(Gamma0)}
    double hk = 0.0;        // || (|x - z|^2 - rho^2) / 2 ||_{L2(Gamma0)}, rho from the domain mean of h
    double hk_alt = 0.0;    // same with rho from the Gamma0 mean of |x - z|^2 / 2
    double rho = 0.0;
    double rho_alt = 0.0;
    double rho_i = 0.0;
    double rho_e = 0.0;
};

inline Pseudodistances pseudodistances(const PolarDomain& d, Vec2 z, const HFields& h, double R) {
    Pseudodistances p;
    p.rho = std::sqrt(2.0 * h.mean);
    p.rho_alt = std::sqrt(2.0 * h.mean_gamma0);
    const double w = d.opening();
    auto l2 = [&](auto&& f, const char* what) {
        return std::sqrt(integrate([&](double t) { const double v = f(d.point(t)); return v * v * d.speed(t); },
                                   0.0, w, what, 1e-9, 1e-20));
    };
    p.sbt = l2([&](Vec2 x) { return norm(x - z) - R; }, "pseudodistances/sbt");
    p.hk = l2([&](Vec2 x) { return 0.5 * (norm2(x - z) - p.rho * p.rho); }, "pseudodistances/hk");
    p.hk_alt = l2([&](Vec2 x) { return 0.5 * (norm2(x - z) - p.rho_alt * p.rho_alt); }, "pseudodistances/hk_alt");
    const auto e = radial_extent(d, z);
    p.rho_i = e.rho_i;
    p.rho_e = e.rho_e;
    return p;
}

inline Pseudodistances pseudodistances(const FemSolution& u, Vec2 z) {
    const auto& d = u.mesh().domain();
    const auto m = measures(d);
    return pseudodistances(d, z, h_fields(u, z), reference_radius(m.area, m.gamma0_length));
}

// Distance from x to the boundary of the cone-cut domain (Gamma0 and the wall segments).
inline double boundary_distance(const PolarDomain& d, Vec2 x, int samples = 2000) {
    const double w = d.opening();
    double best = std::numeric_limits<double>::infinity();
    int ib = 0;
    for (int i = 0; i <= samples; ++i) {
        const double v = norm(d.point(w * i / samples) - x);
        if (v < best) { best = v; ib = i; }
    }
    const double lo = w * std::max(0, ib - 1) / samples, hi = w * std::min(samples, ib + 1) / samples;
    best = std::min(best, boost::math::tools::brent_find_minima([&](double t) { return norm(d.point(t) - x); }, lo, hi, 52).second);
    if (!d.cone().full_plane()) {
        for (Wall wall : {Wall::A, Wall::B}) {
            const Vec2 e = d.cone().ray_direction(wall);
            const double len = d.rho(wall == Wall::A ? 0.0 : w);
            const double s = std::clamp(dot(x, e), 0.0, len);
            best = std::min(best, norm(x - s * e));
        }
    }
    return best;
}

struct DistanceBoundCheck {
    double worst_margin = 0.0;  // min over points of -u - dist^2 / 2
    Vec2 worst_point;
    int points = 0;
};

// Compares -u with dist(x, boundary)^2 / 2 at random interior points (fixed seed).
inline DistanceBoundCheck distance_bound_check(const FemSolution& u, int n = 50, unsigned seed = 7) {
    const auto& d = u.mesh().domain();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    DistanceBoundCheck c;
    c.worst_margin = std::numeric_limits<double>::infinity();
    while (c.points < n) {
        const double t = d.opening() * U(rng), s = std::sqrt(U(rng));
        if (s < 1e-3 || s > 0.999) continue;
        const Vec2 x = polar(s * d.rho(t), t);
        const double dist = boundary_distance(d, x);
        const double m = -u.eval(x).value - 0.5 * dist * dist;
        if (m < c.worst_margin) { c.worst_margin = m; c.worst_point = x; }
        ++c.points;
    }
    return c;
}

struct TorsionReport {
    double area = 0.0;
    double gamma0_length = 0.0;
    double R = 0.0;
    Vec2 z;
    double m_lower = 0.0;
    double unu_max = 0.0;
    double grad_max = 0.0;  // max |grad u| over quadrature and boundary samples
    double max_neg_u = 0.0;
    double deficit_plain = 0.0;
    double deficit_weighted = 0.0;
    double fan_deficit_plain = 0.0;
    double fan_deficit_weighted = 0.0;
    double gamma1_flux = 0.0;
    double gamma1_flux_weighted = 0.0;
    double unu_minus_R_L2 = 0.0;
    double volume_flux = 0.0;
    double h_mean = 0.0;
    double grad_h_L2 = 0.0;
    double hess_h_L2 = 0.0;
    Pseudodistances pd;
    double rho_i = 0.0;
    double rho_e = 0.0;
    double u_L2 = 0.0;
};

inline TorsionReport torsion_report(const FemSolution& u, Vec2 z) {
    const auto& d = u.mesh().domain();
    TorsionReport r;
    const auto m = measures(d);
    r.area = m.area;
    r.gamma0_length = m.gamma0_length;
    r.R = reference_radius(m.area, m.gamma0_length);
    r.z = z;
    const auto bp = boundary_profile(u, r.R);
    r.m_lower = bp.m_lower;
    r.unu_max = bp.unu_max;
    r.unu_minus_R_L2 = bp.unu_minus_R_L2;
    r.volume_flux = bp.volume_flux;
    for (double c : u.coefficients()) r.max_neg_u = std::max(r.max_neg_u, -c);
    double u2 = 0.0;
    for_each_volume_point(u, false, [&](const VolumePoint& p) {
        r.grad_max = std::max(r.grad_max, norm(p.u.gradient));
        u2 += p.weight * p.u.value * p.u.value;
    });
    for (const auto& s : sample_gamma0(u)) r.grad_max = std::max(r.grad_max, norm(s.u.gradient));
    r.u_L2 = std::sqrt(u2);
    const auto di = deficit_integrals(u);
    r.deficit_plain = di.plain;
    r.deficit_weighted = di.weighted;
    r.fan_deficit_plain = di.fan_plain;
    r.fan_deficit_weighted = di.fan_weighted;
    const auto g = gamma1_fluxes(u);
    r.gamma1_flux = g.flux;
    r.gamma1_flux_weighted = g.flux_weighted;
    const auto h = h_fields(u, z);
    r.h_mean = h.mean;
    r.grad_h_L2 = h.grad_L2;
    r.hess_h_L2 = h.hess_L2;
    r.pd = pseudodistances(d, z, h, r.R);
    r.rho_i = r.pd.rho_i;
    r.rho_e = r.pd.rho_e;
    return r;
}

}  // namespace torcone

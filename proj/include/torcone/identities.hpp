#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "quantities.hpp"

namespace torcone {

struct Term {
    std::string name;
    double value = 0.0;
    bool nonnegative = false;  // sign proven for convex cones
};

struct IdentityReport {
    std::string name;
    std::vector<Term> lhs_terms;
    std::vector<Term> rhs_terms;
    // RHS integrand expanded into monomials; sums to the RHS. Sets the magnitude of what cancels.
    std::vector<Term> rhs_expanded;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;        // |sum LHS - sum RHS|
    double scale = 0.0;           // sum |LHS terms| + sum |RHS terms|
    double relative_residual = 0.0;
    double gross_scale = 0.0;     // sum |LHS terms| + sum |expanded RHS terms|
    double gross_relative_residual = 0.0;

    double term(const std::string& n) const {
        for (const auto* v : {&lhs_terms, &rhs_terms, &rhs_expanded})
            for (const auto& t : *v)
                if (t.name == n) return t.value;
        throw PreconditionError("IdentityReport::term", "no term named " + n + " in " + name);
    }
    // Most negative sign-definite LHS term; zero if none is negative.
    double worst_sign_violation() const {
        double w = 0.0;
        for (const auto& t : lhs_terms)
            if (t.nonnegative) w = std::min(w, t.value);
        return w;
    }
};

namespace detail {

inline void finish(IdentityReport& r) {
    r.lhs = r.rhs = r.scale = r.gross_scale = 0.0;
    for (const auto& t : r.lhs_terms) { r.lhs += t.value; r.scale += std::abs(t.value); }
    r.gross_scale = r.scale;
    for (const auto& t : r.rhs_terms) { r.rhs += t.value; r.scale += std::abs(t.value); }
    for (const auto& t : r.rhs_expanded) r.gross_scale += std::abs(t.value);
    if (r.rhs_expanded.empty()) r.gross_scale = r.scale;
    r.residual = std::abs(r.lhs - r.rhs);
    r.relative_residual = r.scale > 0.0 ? r.residual / r.scale : 0.0;
    r.gross_relative_residual = r.gross_scale > 0.0 ? r.residual / r.gross_scale : 0.0;
}

// Gamma0 integrals shared by the identities.
struct Gamma0Moments {
    double unu = 0.0, unu2 = 0.0, unu3 = 0.0;
    double qnu = 0.0, unu2_qnu = 0.0;
    double H_unu2 = 0.0, H_qnu = 0.0;
    double unu_minus_R2 = 0.0;
    double hk_defect = 0.0;  // int (1 - H u_nu)^2 / H
};

inline Gamma0Moments gamma0_moments(const std::vector<BoundarySample>& samples, Vec2 z, double R, bool with_hk) {
    Gamma0Moments g;
    for (const auto& s : samples) {
        const double un = dot(s.u.gradient, s.nu);
        const double qn = dot(s.x - z, s.nu);
        const double w = s.weight;
        g.unu += w * un;
        g.unu2 += w * un * un;
        g.unu3 += w * un * un * un;
        g.qnu += w * qn;
        g.unu2_qnu += w * un * un * qn;
        g.H_unu2 += w * s.H * un * un;
        g.H_qnu += w * s.H * qn;
        g.unu_minus_R2 += w * (un - R) * (un - R);
        if (with_hk) g.hk_defect += w * (1.0 - s.H * un) * (1.0 - s.H * un) / s.H;
    }
    return g;
}

}  // namespace detail

// Worst |<x - z, nu>| over the Gamma1 samples; throws if above tol.
inline void check_gamma1_orthogonality(const FemSolution& u, Vec2 z, double tol, const std::string& where) {
    double worst = 0.0;
    Vec2 at;
    for (const auto& s : sample_gamma1(u)) {
        const double v = std::abs(dot(s.x - z, s.nu));
        if (v > worst) { worst = v; at = s.x; }
    }
    if (worst > tol) {
        std::ostringstream os;
        os << "z = (" << z.x << ", " << z.y << ") violates <x - z, nu> = 0 on Gamma1: |<x - z, nu>| = " << worst
           << " at (" << at.x << ", " << at.y << ")";
        throw PreconditionError(where, os.str());
    }
}

inline IdentityReport serrin_identity(const FemSolution& u, Vec2 z) {
    check_gamma1_orthogonality(u, z, 1e-10, "serrin_identity");
    const auto& d = u.mesh().domain();
    const auto m = measures(d);
    const double R = reference_radius(m.area, m.gamma0_length);
    const auto g = detail::gamma0_moments(sample_gamma0(u), z, R, false);
    const auto di = deficit_integrals(u);
    const auto fl = gamma1_fluxes(u);
    double rhs = 0.0;
    for (const auto& s : sample_gamma0(u)) {
        const double un = dot(s.u.gradient, s.nu);
        rhs += s.weight * 0.5 * (un * un - R * R) * (un - dot(s.x - z, s.nu));
    }
    IdentityReport r;
    r.name = "serrin";
    r.lhs_terms = {{"weighted_deficit", di.weighted, true}, {"gamma1_flux_weighted", fl.flux_weighted, true}};
    r.rhs_terms = {{"boundary_term", rhs, false}};
    r.rhs_expanded = {{"half_unu3", 0.5 * g.unu3},
                      {"minus_half_unu2_qnu", -0.5 * g.unu2_qnu},
                      {"minus_half_R2_unu", -0.5 * R * R * g.unu},
                      {"half_R2_qnu", 0.5 * R * R * g.qnu}};
    detail::finish(r);
    return r;
}

struct SbtReports {
    IdentityReport sbt;     // deficit form with (1/R - H)
    IdentityReport sbt_v2;  // H0 form with the corner term
    double H0 = 0.0;
};

inline SbtReports sbt_identity(const FemSolution& u, Vec2 z) {
    constexpr int N = kDim;
    const auto& d = u.mesh().domain();
    const auto m = measures(d);
    const double R = reference_radius(m.area, m.gamma0_length);
    const auto g = detail::gamma0_moments(sample_gamma0(u), z, R, false);
    const auto di = deficit_integrals(u);
    const auto fl = gamma1_fluxes(u);
    const double corner = corner_conormal_sum(d, z);
    SbtReports out;
    out.H0 = 1.0 / R - corner / ((N - 1) * N * m.area);

    IdentityReport& a = out.sbt;
    a.name = "sbt";
    a.lhs_terms = {{"deficit", di.plain / (N - 1), true},
                   {"minus_gamma1_flux", -fl.flux / (N - 1), true},
                   {"unu_minus_R_sq", g.unu_minus_R2 / R, true}};
    a.rhs_terms = {{"curvature_term", g.unu2 / R - g.H_unu2, false}};
    a.rhs_expanded = {{"unu2_over_R", g.unu2 / R}, {"minus_H_unu2", -g.H_unu2}};
    detail::finish(a);

    IdentityReport& b = out.sbt_v2;
    b.name = "sbt_v2";
    const double H0 = out.H0;
    b.lhs_terms = {{"deficit", di.plain / (N - 1), true},
                   {"minus_gamma1_flux", -fl.flux / (N - 1), true},
                   {"corner_term", -g.unu2 / (N * m.area) * corner / (N - 1), false},
                   {"unu_minus_R_sq", g.unu_minus_R2 / R, true}};
    // int (H0 - H)(u_nu^2 - R^2) and R int (H0 - H)(R - q_nu)
    const double len = m.gamma0_length;
    double intH = 0.0;
    for (const auto& s : sample_gamma0(u)) intH += s.weight * s.H;
    const double t1 = H0 * g.unu2 - g.H_unu2 - R * R * (H0 * len - intH);
    const double t2 = R * (R * (H0 * len - intH) - (H0 * g.qnu - g.H_qnu));
    b.rhs_terms = {{"H0_unu2_term", t1, false}, {"H0_qnu_term", t2, false}};
    b.rhs_expanded = {{"H0_unu2", H0 * g.unu2},
                      {"minus_H_unu2", -g.H_unu2},
                      {"minus_R_H0_qnu", -R * H0 * g.qnu},
                      {"R_H_qnu", R * g.H_qnu}};
    detail::finish(b);
    return out;
}

// int_{Gamma0} dS / H - N |domain| on the exact curve.
inline double hk_deficit(const PolarDomain& d) {
    const auto sc = curvature_scan(d);
    if (!sc.mean_convex()) {
        std::ostringstream os;
        os << "Gamma0 is not mean-convex; H <= 0 for theta in";
        for (const auto& [a, b] : sc.nonpositive_ranges) os << " [" << a << ", " << b << "]";
        throw MeanConvexityError("hk_identity", os.str());
    }
    const double inv = integrate([&](double t) { return d.speed(t) / curvature(d, t); }, 0.0, d.opening(),
                                 "hk_deficit/inverse_curvature", 1e-12);
    return inv - kDim * measures(d).area;
}

inline IdentityReport hk_identity(const FemSolution& u) {
    constexpr int N = kDim;
    const auto& d = u.mesh().domain();
    const double deficit = hk_deficit(d);  // checks mean convexity first
    const auto m = measures(d);
    const double R = reference_radius(m.area, m.gamma0_length);
    const auto g = detail::gamma0_moments(sample_gamma0(u), {0.0, 0.0}, R, true);
    const auto di = deficit_integrals(u);
    const auto fl = gamma1_fluxes(u);
    IdentityReport r;
    r.name = "hk";
    r.lhs_terms = {{"deficit", di.plain / (N - 1), true},
                   {"minus_gamma1_flux", -fl.flux / (N - 1), true},
                   {"hk_defect", g.hk_defect, true}};
    r.rhs_terms = {{"inverse_curvature", deficit + N * m.area, false}, {"minus_N_area", -N * m.area, false}};
    detail::finish(r);
    return r;
}

struct RigidityResult {
    bool is_rigid = false;
    Vec2 fitted_z;
    double fitted_R = 0.0;
    double deficit_plain = 0.0;
};

// Least-squares fit of grad u = x - z; R is the mean distance from z of the Dirichlet nodes.
inline RigidityResult rigidity_detector(const FemSolution& u, double tol) {
    RigidityResult r;
    const auto& mesh = u.mesh();
    r.deficit_plain = deficit_integrals(u).plain;
    r.is_rigid = r.deficit_plain <= tol * measures(mesh.domain()).area;
    r.fitted_z = alternative_center_z(u);
    double acc = 0.0;
    for (int i : u.dirichlet_nodes()) acc += norm(mesh.p2_node(i) - r.fitted_z);
    r.fitted_R = acc / static_cast<double>(u.dirichlet_nodes().size());
    return r;
}

// u_nunu + (N - 1) H u_nu at n points spread over Gamma0; equals N for the torsion function.
inline std::vector<double> reilly_values(const FemSolution& u, int n = 20) {
    const auto samples = sample_gamma0(u);
    std::vector<double> out;
    if (samples.empty()) return out;
    for (int i = 0; i < n; ++i) {
        const auto& s = samples[(samples.size() - 1) * i / std::max(1, n - 1)];
        const double unn = dot(s.u.hessian * s.nu, s.nu);
        out.push_back(unn + (kDim - 1) * s.H * dot(s.u.gradient, s.nu));
    }
    return out;
}

}  // namespace torcone

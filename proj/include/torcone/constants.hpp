#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "error.hpp"

namespace torcone {

struct HopfBound {
    double m_lower = 0.0;
    bool available = false;  // false when the interior radius degenerates
};

inline HopfBound hopf_bound(double r_interior) {
    if (!(r_interior > 0.0)) return {0.0, false};
    return {r_interior, true};
}

inline double gradient_bound(int N, double r_exterior, double diameter) {
    if (N < 2 || !(r_exterior > 0.0) || diameter < 0.0)
        throw PreconditionError("gradient_bound", "need N >= 2, r_exterior > 0, diameter >= 0");
    const double g = 1.0 + diameter / r_exterior;
    if (N == 2) return 6.0 * r_exterior * std::pow(g, 4);
    return 1.5 * N * r_exterior * std::pow(g, N);
}

struct AnnulusValue {
    double w = 0.0;
    double dw = 0.0;  // radial derivative
};

// Torsion function of the annulus r_in < |y - x0| < r_out (Laplacian N, zero on both circles).
inline AnnulusValue annulus_torsion(int N, double r_in, double r_out, double radius) {
    if (N < 2 || !(r_in > 0.0) || !(r_out > r_in))
        throw PreconditionError("annulus_torsion", "need N >= 2 and 0 < r_in < r_out");
    if (radius < r_in || radius > r_out)
        throw PreconditionError("annulus_torsion", "radius " + std::to_string(radius) + " outside [" +
                                                       std::to_string(r_in) + ", " + std::to_string(r_out) + "]");
    const double k = r_in / r_out, R2 = r_out * r_out, s = radius / r_in;
    AnnulusValue v;
    if (N == 2) {
        const double c = 0.5 * R2 * (1.0 - k * k) / std::log(k);
        v.w = 0.5 * radius * radius + c * std::log(s) - 0.5 * r_in * r_in;
        v.dw = radius + c / radius;
    } else {
        const double c = 0.5 * R2 / (1.0 - std::pow(k, N - 2));
        v.w = 0.5 * radius * radius + c * ((1.0 - k * k) * std::pow(s, 2 - N) + std::pow(k, N) - 1.0);
        v.dw = radius + c * (1.0 - k * k) * (2 - N) * std::pow(s, 1 - N) / r_in;
    }
    return v;
}

// Radius of the critical circle of the annulus torsion function with inner radius r_in.
inline double annulus_critical_radius(int N, double r_in, double r_out) {
    const double k = r_in / r_out, R2 = r_out * r_out;
    if (N == 2) return std::sqrt(0.5 * R2 * (1.0 - k * k) / std::log(1.0 / k));
    return std::pow(0.5 * (N - 2) * std::pow(r_in, N - 2) * R2 * (1.0 - k * k) / (1.0 - std::pow(k, N - 2)), 1.0 / N);
}

struct MaxUBounds {
    double bound_ii = 0.0;  // d^2 / 2
    double bound_i = 0.0;   // annulus construction
    double outer_radius = 0.0;
    double critical_radius = 0.0;
};

inline MaxUBounds max_u_bounds(int N, double diameter) {
    if (N < 2 || !(diameter > 0.0)) throw PreconditionError("max_u_bounds", "need N >= 2 and a positive diameter");
    MaxUBounds b;
    b.bound_ii = 0.5 * diameter * diameter;
    b.outer_radius = N == 2 ? 2.0 * std::pow(1.0 + diameter, 2) : std::sqrt(3.0) * std::pow(1.0 + diameter, 0.5 * N);
    b.critical_radius = annulus_critical_radius(N, 1.0, b.outer_radius);
    b.bound_i = -annulus_torsion(N, 1.0, b.outer_radius, b.critical_radius).w;
    return b;
}

// Lambda_2(k) for N = 2.
inline double lambda_combiner(int k, double mu2_inv, std::optional<double> eta2_inv, int N = 2) {
    if (k < 0 || k > N) throw PreconditionError("lambda_combiner", "k must lie in [0, N]");
    if (k == 0) return mu2_inv;
    if (!eta2_inv) throw PreconditionError("lambda_combiner", "eta2_inv is required for k >= 1");
    if (k == N) return *eta2_inv;
    return std::max(mu2_inv, *eta2_inv);
}

struct HkConstants {
    std::optional<double> general;  // sqrt(N-1) lambda2^2 (1 + Lambda^2)
    std::optional<double> with_m;   // sqrt(N-1)/m (N Lambda^2 + 2 max(-u))
    std::optional<double> smaller() const {
        if (general && with_m) return std::min(*general, *with_m);
        return general ? general : with_m;
    }
};

inline HkConstants hk_stability_constant(int N, std::optional<double> lambda2, double Lambda2k,
                                         std::optional<double> m_lower, std::optional<double> max_neg_u) {
    HkConstants c;
    const double s = std::sqrt(static_cast<double>(N - 1));
    if (lambda2) c.general = s * (*lambda2) * (*lambda2) * (1.0 + Lambda2k * Lambda2k);
    if (m_lower && *m_lower > 0.0 && max_neg_u)
        c.with_m = s / (*m_lower) * (N * Lambda2k * Lambda2k + 2.0 * (*max_neg_u));
    return c;
}

// Trace-type constant of the gradient estimate: lambda2 sqrt(1 + Lambda^2).
inline double trace_gradient_constant(double lambda2, double Lambda2k) {
    return lambda2 * std::sqrt(1.0 + Lambda2k * Lambda2k);
}

// Its lower-bound variant: (N Lambda^2 + 2 max(-u)) / m.
inline double trace_gradient_constant_m(int N, double Lambda2k, double m_lower, double max_neg_u) {
    if (!(m_lower > 0.0)) throw PreconditionError("trace_gradient_constant_m", "m_lower must be positive");
    return (N * Lambda2k * Lambda2k + 2.0 * max_neg_u) / m_lower;
}

struct SbtConstant {
    double C_bar = 0.0;
    double C_hat = 0.0;
};

// C_bar = max{N-1, |u_nu|_inf}^2 (C + 3), C_hat = max{C, 1} C_bar
inline SbtConstant sbt_stability_constant(int N, double trace_C, double unu_max) {
    if (!(trace_C > 0.0) || !(unu_max >= 0.0))
        throw PreconditionError("sbt_stability_constant", "need trace_C > 0 and unu_max >= 0");
    SbtConstant c;
    const double a = std::max(static_cast<double>(N - 1), unu_max);
    c.C_bar = a * a * (trace_C + 3.0);
    c.C_hat = std::max(trace_C, 1.0) * c.C_bar;
    return c;
}

// Poincare constant for functions with zero trace on a boundary portion (p = 2).
inline double zero_trace_bound(double mu2_inv, double lambda2, double area, double gamma_measure) {
    if (mu2_inv < 0.0 || !(lambda2 > 0.0) || !(area > 0.0) || !(gamma_measure > 0.0))
        throw PreconditionError("zero_trace_bound", "inputs must be positive");
    return mu2_inv + std::sqrt(area / gamma_measure) * lambda2 * std::sqrt(1.0 + mu2_inv * mu2_inv);
}

struct ConstantsReport {
    HopfBound hopf;
    double grad_bound = 0.0;
    MaxUBounds max_u;
    double lambda2 = 0.0;
    double mu2_inv = 0.0;
    std::optional<double> eta2_inv;
    double Lambda2k = 0.0;
    HkConstants C_hk;
    SbtConstant C_sbt;                 // trace-constant variant
    std::optional<SbtConstant> C_sbt_m;  // lower-bound variant
    double zero_trace = 0.0;
    std::optional<double> C_sbt_smaller() const {
        if (C_sbt_m) return std::min(C_sbt.C_hat, C_sbt_m->C_hat);
        return C_sbt.C_hat;
    }
};

struct ConstantInputs {
    int N = 2;
    int k = 0;
    double r_interior = 0.0;
    double r_exterior = 0.0;
    double diameter = 0.0;
    double area = 0.0;
    double gamma0_length = 0.0;
    double lambda2 = 0.0;
    double mu2_inv = 0.0;
    std::optional<double> eta2_inv;
    double unu_max = 0.0;
    std::optional<double> max_neg_u;  // measured; falls back to the d^2/2 bound
};

inline ConstantsReport assemble_constants(const ConstantInputs& in) {
    ConstantsReport r;
    r.hopf = hopf_bound(in.r_interior);
    r.grad_bound = in.r_exterior > 0.0 ? gradient_bound(in.N, in.r_exterior, in.diameter) : 0.0;
    r.max_u = max_u_bounds(in.N, in.diameter);
    r.lambda2 = in.lambda2;
    r.mu2_inv = in.mu2_inv;
    r.eta2_inv = in.eta2_inv;
    r.Lambda2k = lambda_combiner(in.k, in.mu2_inv, in.eta2_inv, in.N);
    const double neg_u = in.max_neg_u.value_or(r.max_u.bound_ii);
    std::optional<double> m;
    if (r.hopf.available) m = r.hopf.m_lower;
    r.C_hk = hk_stability_constant(in.N, in.lambda2, r.Lambda2k, m, neg_u);
    r.C_sbt = sbt_stability_constant(in.N, trace_gradient_constant(in.lambda2, r.Lambda2k), in.unu_max);
    if (m) r.C_sbt_m = sbt_stability_constant(in.N, trace_gradient_constant_m(in.N, r.Lambda2k, *m, neg_u), in.unu_max);
    r.zero_trace = zero_trace_bound(in.mu2_inv, in.lambda2, in.area, in.gamma0_length);
    return r;
}

}  // namespace torcone

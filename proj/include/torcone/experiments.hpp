#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "constants.hpp"
#include "eigen.hpp"
#include "identities.hpp"
#include "quantities.hpp"

namespace torcone {

// ---- log-log fits ----

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

inline FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw PreconditionError("fit_loglog", "xs and ys differ in length");
    if (xs.size() < 3) throw PreconditionError("fit_loglog", "need at least 3 points");
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw PreconditionError("fit_loglog", "non-positive data at index " + std::to_string(i));
        sx += std::log(xs[i]);
        sy += std::log(ys[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = std::log(xs[i]) - mx, dy = std::log(ys[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw PreconditionError("fit_loglog", "xs are all equal");
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    f.points = static_cast<int>(xs.size());
    return f;
}

// ---- small worker pool; results land at their input index ----

template <class F>
void parallel_for(int n, int threads, F&& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---- convergence against the exact solution on an unperturbed sector ----

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    int nodes = 0;
    double l2_error = 0.0;
    double h1_error = 0.0;  // gradient L2 error
    double l2_rate = std::numeric_limits<double>::quiet_NaN();
    double h1_rate = std::numeric_limits<double>::quiet_NaN();
    int cg_iterations = 0;
};

// Base mesh of size h0 followed by `refinements` uniform red refinements.
inline std::vector<ConvergenceRow> convergence_study(const SectorCone& cone, double R0, double h0, int refinements) {
    const auto dom = PolarDomain::sector(cone, R0);
    std::vector<ConvergenceRow> rows;
    auto mesh = std::make_shared<const TriMesh>(generate_for_size(dom, h0));
    for (int level = 0; level <= refinements; ++level) {
        if (level > 0) mesh = std::make_shared<const TriMesh>(refine(*mesh));
        const auto u = solve_torsion(mesh);
        double l2 = 0.0, h1 = 0.0;
        for_each_volume_point(u, false, [&](const VolumePoint& p) {
            const double ex = 0.5 * (norm2(p.x) - R0 * R0);
            l2 += p.weight * (p.u.value - ex) * (p.u.value - ex);
            h1 += p.weight * norm2(p.u.gradient - p.x);
        });
        ConvergenceRow r;
        r.level = level;
        r.h = mesh_size(*mesh);
        r.nodes = mesh->num_p2_nodes();
        r.l2_error = std::sqrt(l2);
        r.h1_error = std::sqrt(h1);
        r.cg_iterations = u.solver_stats().iterations;
        if (!rows.empty()) {
            const auto& p = rows.back();
            const double lh = std::log(p.h / r.h);
            r.l2_rate = std::log(p.l2_error / r.l2_error) / lh;
            r.h1_rate = std::log(p.h1_error / r.h1_error) / lh;
        }
        rows.push_back(r);
    }
    return rows;
}

// ---- stability sweep ----

enum class ZPolicy { paper, alternative };

inline const char* z_policy_name(ZPolicy p) { return p == ZPolicy::paper ? "paper" : "alternative"; }

struct SweepOptions {
    SectorCone cone{0.5 * pi};
    double R0 = 1.0;
    std::vector<CosineMode> modes{{2, 1.0}};
    std::vector<double> eps;
    double h = 0.02;             // torsion solve
    double constants_h = 0.05;   // eigenvalue constants
    ZPolicy z_policy = ZPolicy::paper;
    int threads = 1;
};

struct SweepRecord {
    double epsilon = 0.0;
    double h = 0.0;
    bool mean_convex = true;
    bool h_separated = true;  // h^2 <= 0.1 eps
    Vec2 z;
    double H0 = 0.0;
    double deviation_sbt = 0.0;  // ||H0 - H||_{L2(Gamma0)}
    double deviation_hk = std::numeric_limits<double>::quiet_NaN();
    double pd_sbt = 0.0;
    double pd_hk = 0.0;
    double pd_hk_alt = 0.0;
    double rho_i = 0.0;
    double rho_e = 0.0;
    double rho_gap = 0.0;
    TorsionReport torsion;
    ConstantsReport constants;
    double C_sbt = 0.0;  // smaller available variant
    double C_hk = 0.0;
    bool sbt_inequality = false;
    bool hk_inequality = false;
    double serrin_relative_residual = 0.0;
    double sbt_relative_residual = 0.0;
    double hk_relative_residual = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::optional<FitResult> fit_sbt;         // pd_sbt vs deviation_sbt
    std::optional<FitResult> fit_hk;          // pd_hk vs deviation_hk
    std::optional<FitResult> fit_gap_sbt;     // rho_gap vs deviation_sbt
    std::optional<FitResult> fit_gap_hk;      // rho_gap vs deviation_hk^{1/2}
    bool inequalities_hold = true;
};

inline double sbt_deviation(const PolarDomain& d, double H0) {
    return std::sqrt(integrate([&](double t) { const double v = H0 - curvature(d, t); return v * v * d.speed(t); },
                               0.0, d.opening(), "sbt_deviation", 1e-10, 1e-20));
}

// Eigen-constants on a mesh of size constants_h, combined with the geometry and solve measurements.
inline ConstantsReport domain_constants(const PolarDomain& dom, const GeometryReport& geo, int k, double constants_h,
                                        double unu_max, std::optional<double> max_neg_u) {
    const TriMesh cm = generate_for_size(dom, constants_h);
    const auto sys = assemble(cm);
    ConstantInputs in;
    in.N = kDim;
    in.k = k;
    in.r_interior = geo.r_interior;
    in.r_exterior = geo.r_exterior;
    in.diameter = geo.diameter;
    in.area = geo.area;
    in.gamma0_length = geo.gamma0_length;
    in.lambda2 = trace_constant(sys).value;
    in.mu2_inv = 1.0 / neumann_poincare(cm, sys).value;
    if (k >= 1) in.eta2_inv = 1.0 / vector_poincare(cm, sys, k).value;
    in.unu_max = unu_max;
    in.max_neg_u = max_neg_u;
    return assemble_constants(in);
}

inline SweepRecord sweep_record(const SweepOptions& opt, double eps) {
    SweepRecord r;
    r.epsilon = eps;
    const auto dom = PolarDomain::cosine_series(opt.cone, opt.R0, eps, opt.modes);
    const int k = normal_span_dim(opt.cone);
    const auto geo = analyze(dom);
    r.mean_convex = curvature_scan(dom).mean_convex();

    auto mesh = std::make_shared<const TriMesh>(generate_for_size(dom, opt.h));
    r.h = mesh_size(*mesh);
    r.h_separated = eps <= 0.0 || r.h * r.h <= 0.1 * eps;
    const auto u = solve_torsion(mesh);
    const Vec2 z_paper = center_z(u, k);
    r.z = opt.z_policy == ZPolicy::paper ? z_paper : alternative_center_z(u);

    r.torsion = torsion_report(u, r.z);
    r.H0 = 1.0 / geo.reference_radius - corner_conormal_sum(dom, z_paper) / ((kDim - 1) * kDim * geo.area);
    r.deviation_sbt = sbt_deviation(dom, r.H0);
    r.pd_sbt = r.torsion.pd.sbt;
    r.pd_hk = r.torsion.pd.hk;
    r.pd_hk_alt = r.torsion.pd.hk_alt;
    r.rho_i = r.torsion.rho_i;
    r.rho_e = r.torsion.rho_e;
    r.rho_gap = r.rho_e - r.rho_i;

    r.serrin_relative_residual = serrin_identity(u, z_paper).relative_residual;
    r.sbt_relative_residual = sbt_identity(u, z_paper).sbt.relative_residual;
    if (r.mean_convex) {
        r.deviation_hk = hk_deficit(dom);
        r.hk_relative_residual = hk_identity(u).relative_residual;
    }

    // the alternative z needs only mu2
    r.constants = domain_constants(dom, geo, opt.z_policy == ZPolicy::paper ? k : 0, opt.constants_h,
                                   r.torsion.unu_max, r.torsion.max_neg_u);
    r.C_sbt = r.constants.C_sbt_smaller().value();
    r.C_hk = r.constants.C_hk.smaller().value();

    // absolute slack at the sign-tolerance level covers solver noise in the rigid case
    const double slack = 1e-8 * opt.R0 * opt.R0;
    r.sbt_inequality = r.pd_sbt <= r.C_sbt * r.deviation_sbt + slack;
    r.hk_inequality = !r.mean_convex || r.pd_hk <= r.C_hk * std::sqrt(std::max(r.deviation_hk, 0.0)) + slack;
    return r;
}

inline SweepResult stability_sweep(const SweepOptions& opt) {
    if (!std::is_sorted(opt.eps.begin(), opt.eps.end()))
        throw PreconditionError("stability_sweep", "epsilon list must be sorted ascending");
    SweepResult res;
    res.records.resize(opt.eps.size());
    parallel_for(static_cast<int>(opt.eps.size()), opt.threads,
                 [&](int i) { res.records[i] = sweep_record(opt, opt.eps[i]); });

    std::vector<double> ds, ps, gs, dh, ph, gh;
    for (const auto& r : res.records) {
        res.inequalities_hold = res.inequalities_hold && r.sbt_inequality && r.hk_inequality;
        if (!(r.epsilon > 0.0)) continue;
        ds.push_back(r.deviation_sbt);
        ps.push_back(r.pd_sbt);
        gs.push_back(r.rho_gap);
        if (r.mean_convex && r.deviation_hk > 0.0) {
            dh.push_back(r.deviation_hk);
            ph.push_back(r.pd_hk);
            gh.push_back(r.rho_gap);
        }
    }
    if (ds.size() >= 3) {
        res.fit_sbt = fit_loglog(ds, ps);
        res.fit_gap_sbt = fit_loglog(ds, gs);
    }
    if (dh.size() >= 3) {
        res.fit_hk = fit_loglog(dh, ph);
        std::vector<double> sq(dh.size());
        for (std::size_t i = 0; i < dh.size(); ++i) sq[i] = std::sqrt(dh[i]);
        res.fit_gap_hk = fit_loglog(sq, gh);
    }
    return res;
}

}  // namespace torcone

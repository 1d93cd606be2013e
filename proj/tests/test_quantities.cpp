#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "torcone/constants.hpp"
#include "torcone/quantities.hpp"

using namespace torcone;

namespace {

// f = cos(2 pi theta / w) on the wedges, cos(2 theta) on the disk
PolarDomain family(double w, double eps) {
    const int m = w == 2 * pi ? 4 : 2;
    return PolarDomain::cosine_series(SectorCone(w), 1.0, eps, {{m, 1.0}});
}

const FemSolution& solve(double w, double eps, double h) {
    static std::map<std::tuple<double, double, double>, std::unique_ptr<FemSolution>> cache;
    auto& slot = cache[{w, eps, h}];
    if (!slot) slot = std::make_unique<FemSolution>(solve_torsion(std::make_shared<const TriMesh>(generate_for_size(family(w, eps), h))));
    return *slot;
}

int k_of(double w) { return normal_span_dim(SectorCone(w)); }

template <class F>
double simpson(F f, double a, double b, int n = 4000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

const double kOpenings[] = {0.5 * pi, pi, 2 * pi};

}  // namespace

TEST(CenterZ, ExactSectors) {
    for (double w : kOpenings) {
        const Vec2 z = center_z(solve(w, 0.0, 0.05), k_of(w));
        EXPECT_NEAR(z.x, 0.0, 1e-6) << "w = " << w;
        EXPECT_NEAR(z.y, 0.0, 1e-6) << "w = " << w;
        const Vec2 za = alternative_center_z(solve(w, 0.0, 0.05));
        EXPECT_NEAR(norm(za), 0.0, 1e-6) << "w = " << w;
    }
    EXPECT_EQ(center_z(solve(pi, 0.05, 0.05), 1).y, 0.0);
    EXPECT_EQ(norm(center_z(solve(0.5 * pi, 0.05, 0.05), 2)), 0.0);
}

TEST(CenterZ, AlternativeCenterIsFirstOrderInEpsilon) {
    // |z| / eps = c0 + c1 eps + O(eps^2): successive differences halve with eps
    std::vector<double> q;
    for (double eps : {0.01, 0.02, 0.04}) {
        const Vec2 z = alternative_center_z(solve(0.5 * pi, eps, 0.05));
        EXPECT_NEAR(z.x, z.y, 1e-8);  // mirror symmetry about the diagonal
        EXPECT_LT(norm(z), eps);
        q.push_back(norm(z) / eps);
    }
    EXPECT_GT(q[0], 0.1);
    EXPECT_NEAR((q[0] - q[1]) / (q[1] - q[2]), 0.5, 0.05);
}

TEST(Deficits, VanishOnExactSectors) {
    for (double w : kOpenings) {
        const auto& u = solve(w, 0.0, 0.05);
        const double area = measures(u.mesh().domain()).area;
        const auto d = deficit_integrals(u);
        EXPECT_LE(d.plain, 1e-3 * area);
        EXPECT_LE(d.weighted, 1e-3 * area);
        EXPECT_GE(d.plain, -1e-10);
        EXPECT_GE(d.weighted, -1e-10);
        EXPECT_LE(d.fan_plain, d.plain + 1e-15);
    }
}

TEST(Deficits, NonNegativeAndQuadraticInEpsilon) {
    double prev = 0.0;
    for (double eps : {0.02, 0.04}) {
        const auto d = deficit_integrals(solve(pi, eps, 0.025));
        EXPECT_GE(d.plain, -1e-10);
        EXPECT_GE(d.weighted, -1e-10);
        if (prev > 0.0) {
            EXPECT_NEAR(std::log2(d.plain / prev), 2.0, 0.2);
        }
        prev = d.plain;
    }
}

TEST(Gamma1Fluxes, EmptyWallsGiveZero) {
    const auto g = gamma1_fluxes(solve(2 * pi, 0.05, 0.05));
    EXPECT_EQ(g.flux, 0.0);
    EXPECT_EQ(g.flux_weighted, 0.0);
}

TEST(Gamma1Fluxes, ExactSectorsAreFlat) {
    for (double w : {0.5 * pi, pi}) {
        const auto g = gamma1_fluxes(solve(w, 0.0, 0.05));
        EXPECT_NEAR(g.flux, 0.0, 1e-4);
        EXPECT_NEAR(g.flux_weighted, 0.0, 1e-4);
    }
}

// On flat walls the exact flux vanishes; the discrete value is an O(h) consistency error of
// either sign, so only its size and decay are checked here.
TEST(Gamma1Fluxes, FlatWallFluxDecaysUnderRefinement) {
    auto m = std::make_shared<const TriMesh>(generate_for_size(family(pi, 0.05), 0.1));
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
        if (level) m = std::make_shared<const TriMesh>(refine(*m));
        const auto g = gamma1_fluxes(solve_torsion(m));
        const double size = std::abs(g.flux) + std::abs(g.flux_weighted);
        EXPECT_LT(size, 1e-2);
        if (level) {
            EXPECT_LT(size, 0.75 * prev) << "level " << level;
        }
        prev = size;
    }
}

TEST(BoundaryProfile, ExactSectorHasConstantFlux) {
    for (double w : kOpenings) {
        const auto& u = solve(w, 0.0, 0.05);
        const auto b = boundary_profile(u);
        EXPECT_NEAR(b.m_lower, 1.0, 1e-3);
        EXPECT_NEAR(b.unu_max, 1.0, 1e-3);
        EXPECT_NEAR(b.unu_minus_R_L2, 0.0, 1e-3);
        EXPECT_NEAR(b.volume_flux, 2.0 * measures(u.mesh().domain()).area, 1e-3);
    }
}

TEST(BoundaryProfile, PerturbedDomainsStraddleR) {
    for (double w : kOpenings) {
        const auto& u = solve(w, 0.05, 0.05);
        const auto m = measures(u.mesh().domain());
        const double R = reference_radius(m.area, m.gamma0_length);
        const auto b = boundary_profile(u, R);
        EXPECT_LT(b.m_lower, R);
        EXPECT_GT(b.unu_max, R);
        EXPECT_NEAR(b.volume_flux / (2.0 * m.area), 1.0, 1e-3);
    }
}

TEST(HFields, ConstantOnExactSectors) {
    for (double w : kOpenings) {
        const auto h = h_fields(solve(w, 0.0, 0.05), {0.0, 0.0});
        EXPECT_NEAR(h.mean, 0.5, 1e-4);
        EXPECT_NEAR(h.mean_gamma0, 0.5, 1e-12);
        EXPECT_NEAR(h.grad_L2, 0.0, 1e-3);
        EXPECT_NEAR(h.hess_L2, 0.0, 2e-2);
        // u at exact-curve points differs from 0 by the isoparametric boundary error
        for (const auto& [t, v] : h.gamma0) EXPECT_NEAR(v, 0.5, 1e-6);
    }
}

TEST(HFields, HessianNormMatchesDeficitAndScalesLinearly) {
    double prev = 0.0;
    for (double eps : {0.02, 0.04}) {
        const auto& u = solve(pi, eps, 0.025);
        const auto h = h_fields(u, center_z(u, 1));
        const double def = deficit_integrals(u).plain;
        EXPECT_NEAR(h.hess_L2 * h.hess_L2 / def, 1.0, 2e-2);
        if (prev > 0.0) {
            EXPECT_NEAR(std::log2(h.hess_L2 / prev), 1.0, 0.1);
        }
        prev = h.hess_L2;
    }
}

TEST(Pseudodistances, VanishOnExactSectors) {
    for (double w : kOpenings) {
        const auto p = pseudodistances(solve(w, 0.0, 0.05), {0.0, 0.0});
        EXPECT_NEAR(p.sbt, 0.0, 1e-9);
        EXPECT_NEAR(p.hk_alt, 0.0, 1e-9);
        EXPECT_NEAR(p.hk, 0.0, 1e-4);
        EXPECT_NEAR(p.rho_i, 1.0, 1e-12);
        EXPECT_NEAR(p.rho_e, 1.0, 1e-12);
    }
}

TEST(Pseudodistances, AlternativeRhoMinimizesTheHkDistance) {
    const auto& u = solve(0.5 * pi, 0.05, 0.05);
    const Vec2 z{0.0, 0.0};
    const auto p = pseudodistances(u, z);
    const auto& d = u.mesh().domain();
    auto hk_at = [&](double rho2) {
        return std::sqrt(simpson([&](double t) {
            const double v = 0.5 * (norm2(d.point(t) - z) - rho2);
            return v * v * d.speed(t);
        }, 0.0, d.opening()));
    };
    const double r2 = p.rho_alt * p.rho_alt;
    EXPECT_NEAR(hk_at(r2), p.hk_alt, 1e-9);
    EXPECT_NEAR(hk_at(p.rho * p.rho), p.hk, 1e-9);
    EXPECT_LE(p.hk_alt, p.hk + 1e-15);
    for (double dr : {-1e-3, 1e-3, -1e-2, 1e-2}) EXPECT_GT(hk_at(r2 + dr), p.hk_alt);
}

TEST(Pseudodistances, RadialExtentAgainstDenseSampling) {
    const auto d = family(0.5 * pi, 0.05);
    const Vec2 z{0.01, 0.02};
    const auto e = radial_extent(d, z);
    double lo = 1e9, hi = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double r = norm(d.point(d.opening() * i / 200000) - z);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    EXPECT_NEAR(e.rho_i, lo, 1e-9);
    EXPECT_NEAR(e.rho_e, hi, 1e-9);
    EXPECT_LE(e.rho_i, lo);
    EXPECT_GE(e.rho_e, hi);
}

TEST(BoundaryDistance, SectorCases) {
    const auto d = PolarDomain::sector(SectorCone(0.5 * pi), 1.0);
    EXPECT_NEAR(boundary_distance(d, {0.3, 0.4}), 0.3, 1e-12);
    EXPECT_NEAR(boundary_distance(d, {0.5, 0.6}), 1.0 - std::hypot(0.5, 0.6), 1e-9);
    const auto disk = PolarDomain::sector(SectorCone(2 * pi), 1.0);
    EXPECT_NEAR(boundary_distance(disk, {0.1, -0.2}), 1.0 - std::hypot(0.1, 0.2), 1e-9);
}

// Pointwise bounds on every test domain
TEST(TorsionReport, PointwiseBoundsHold) {
    for (double w : kOpenings)
        for (double eps : {0.0, 0.02, 0.05}) {
            const auto& u = solve(w, eps, 0.05);
            const auto& d = u.mesh().domain();
            const auto g = analyze(d);
            const auto r = torsion_report(u, center_z(u, k_of(w)));
            const double h = mesh_size(u.mesh());
            SCOPED_TRACE("w = " + std::to_string(w) + " eps = " + std::to_string(eps));
            EXPECT_LE(r.max_neg_u, 0.5 * g.diameter * g.diameter);
            EXPECT_GE(r.m_lower, 0.95 * g.r_interior);
            EXPECT_LE(r.unu_max, gradient_bound(2, g.r_exterior, g.diameter));
            EXPECT_LE(r.grad_max, gradient_bound(2, g.r_exterior, g.diameter));
            EXPECT_GE(distance_bound_check(u).worst_margin, -2.0 * h * h);
            EXPECT_LE(r.rho_i, r.R + h);
            EXPECT_GE(r.rho_e, r.R - h);
            EXPECT_GE(r.deficit_plain, -1e-8 * r.u_L2);
            EXPECT_GE(r.deficit_weighted, -1e-8 * r.u_L2);
        }
}

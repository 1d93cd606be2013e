#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "torcone/eigen.hpp"

using namespace torcone;

namespace {

PolarDomain sector(double w, double R0 = 1.0) { return PolarDomain::sector(SectorCone(w), R0); }

// J_n'(x) = (J_{n-1} - J_{n+1}) / 2
double bessel_jp(int n, double x) {
    return 0.5 * (std::cyl_bessel_j(n - 1, x) - std::cyl_bessel_j(n + 1, x));
}

double bisect(double (*f)(int, double), int n, double a, double b) {
    double fa = f(n, a);
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b), fm = f(n, m);
        if ((fm < 0) == (fa < 0)) { a = m; fa = fm; } else b = m;
    }
    return 0.5 * (a + b);
}

// first positive zero of J_n'
double bessel_jp_root(int n, double a, double b) { return bisect(&bessel_jp, n, a, b); }

// Radial profile of -Lap v + v = 0 in the unit disk, integrated by RK4 from the series start near 0.
// The maximizing trace field is radial, so lambda2^2 = v(1) / v'(1).
double radial_trace_oracle(int steps = 20000) {
    double r = 1e-4, v = 1.0 + r * r / 4.0, dv = r / 2.0;
    const double h = (1.0 - r) / steps;
    auto f = [](double r, double v, double dv) { return v - dv / r; };
    for (int i = 0; i < steps; ++i) {
        const double k1v = dv, k1d = f(r, v, dv);
        const double k2v = dv + 0.5 * h * k1d, k2d = f(r + 0.5 * h, v + 0.5 * h * k1v, dv + 0.5 * h * k1d);
        const double k3v = dv + 0.5 * h * k2d, k3d = f(r + 0.5 * h, v + 0.5 * h * k2v, dv + 0.5 * h * k2d);
        const double k4v = dv + h * k3d, k4d = f(r + h, v + h * k3v, dv + h * k3d);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        dv += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
        r += h;
    }
    return v / dv;
}

double quad_form(const SparseMatrix& A, const Vector& x) {
    Vector y;
    A.multiply(x, y);
    return dot(x, y);
}

}  // namespace

TEST(Oracles, BesselAndRadialOdeAgree) {
    EXPECT_NEAR(std::pow(bessel_jp_root(1, 1.0, 2.5), 2), 3.3900, 1e-4);
    EXPECT_NEAR(radial_trace_oracle(), std::cyl_bessel_i(0, 1.0) / std::cyl_bessel_i(1, 1.0), 1e-9);
    EXPECT_NEAR(radial_trace_oracle(), 2.24019, 1e-5);
}

TEST(NeumannPoincare, UnitDiskMatchesBesselRoot) {
    const double oracle = std::pow(bessel_jp_root(1, 1.0, 2.5), 2);
    const auto r = neumann_poincare(generate_for_size(sector(2 * pi), 0.1));
    EXPECT_NEAR(r.eigenvalue / oracle, 1.0, 1e-3);
    EXPECT_NEAR(r.value, std::sqrt(r.eigenvalue), 1e-15);
    EXPECT_LE(r.residual, 1e-8);
}

TEST(NeumannPoincare, QuarterDiskExactAndMonotone) {
    // Neumann modes of the quarter disk are J_{2n}(k r) cos(2 n theta); the lowest nonzero one has n = 1
    const double oracle = std::pow(bessel_jp_root(2, 2.0, 4.0), 2);
    TriMesh m = generate_for_size(sector(0.5 * pi), 0.2);
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
        if (level) m = refine(m);
        const double lam = neumann_poincare(m).eigenvalue;
        if (level) {
            EXPECT_LT(lam, prev + 1e-9 * prev);
        }
        EXPECT_GT(lam, oracle * (1.0 - 1e-9));
        prev = lam;
    }
    EXPECT_NEAR(prev / oracle, 1.0, 1e-4);
}

TEST(NeumannPoincare, ScalingMultipliesTheInverseConstant) {
    const double t = 2.0;
    const auto a = neumann_poincare(generate(sector(pi), 8, 20));
    const auto b = neumann_poincare(generate(sector(pi, t), 8, 20));
    EXPECT_NEAR((1.0 / b.value) / (1.0 / a.value), t, 1e-7 * t);
}

TEST(VectorPoincare, HalfDiskEqualsScalarZeroTraceProblem) {
    const TriMesh m = generate_for_size(sector(pi), 0.1);
    const auto sys = assemble(m);
    const auto v = vector_poincare(m, sys, 1);
    const auto s = zero_trace_poincare(m, sys);
    EXPECT_NEAR(v.value / s.value, 1.0, 1e-6);
    // zero trace on the diameter: J_1(k r) sin(theta) with J_1'(k) = 0
    EXPECT_NEAR(s.eigenvalue / std::pow(bessel_jp_root(1, 1.0, 2.5), 2), 1.0, 1e-3);
}

TEST(VectorPoincare, QuarterDiskConstraintAndMonotonicity) {
    TriMesh m = generate_for_size(sector(0.5 * pi), 0.2);
    double prev = 0.0;
    for (int level = 0; level < 2; ++level) {
        if (level) m = refine(m);
        const auto r = vector_poincare(m, 2);
        EXPECT_GT(r.value, 0.0);
        EXPECT_LE(r.residual, 1e-8);
        if (level) {
            EXPECT_LT(r.eigenvalue, prev);
        }
        prev = r.eigenvalue;
        double vmax = 0.0;
        for (double x : r.vector) vmax = std::max(vmax, std::abs(x));
        const SectorCone& c = m.domain().cone();
        for (const auto& [i, mask] : gamma1_nodes(m)) {
            const Vec2 v{r.vector[2 * i], r.vector[2 * i + 1]};
            if (mask & 1) {
                EXPECT_LE(std::abs(dot(v, c.wall_normal(Wall::A))), 1e-10 * vmax);
            }
            if (mask & 2) {
                EXPECT_LE(std::abs(dot(v, c.wall_normal(Wall::B))), 1e-10 * vmax);
            }
        }
    }
}

TEST(VectorPoincare, Preconditions) {
    const TriMesh q = generate_for_size(sector(0.5 * pi), 0.3);
    EXPECT_THROW(vector_poincare(q, 0), PreconditionError);
    EXPECT_THROW(vector_poincare(q, 1), PreconditionError);
    EXPECT_THROW(vector_poincare(generate_for_size(sector(2 * pi), 0.3), 1), PreconditionError);
}

TEST(TraceConstant, UnitDiskMatchesRadialOde) {
    const double oracle = std::sqrt(radial_trace_oracle());
    const auto r = trace_constant(generate_for_size(sector(2 * pi), 0.1));
    EXPECT_NEAR(r.value / oracle, 1.0, 1e-3);
    EXPECT_LE(r.residual, 1e-8);
}

TEST(TraceConstant, ScaledDomainAgreesWithReweightedProblem) {
    // v(x) = w(x / t): |v|^2_{t Gamma} = t |w|^2_Gamma, |grad v|^2 = |grad w|^2, |v|^2 = t^2 |w|^2
    const double t = 1.7;
    const TriMesh a = generate(sector(0.5 * pi), 8, 16);
    const TriMesh b = generate(sector(0.5 * pi, t), 8, 16);
    const double scaled = trace_constant(b).value;
    const double reweighted = std::sqrt(t) * trace_eigenpair(assemble(a), t * t).value;
    EXPECT_NEAR(scaled / reweighted, 1.0, 1e-7);
}

TEST(TraceConstant, DominatesRandomRayleighQuotients) {
    const TriMesh m = generate_for_size(PolarDomain::cosine_series(SectorCone(pi), 1.0, 0.05, {{2, 1.0}}), 0.15);
    const auto sys = assemble(m);
    const double lam2 = trace_constant(sys).eigenvalue;
    const SparseMatrix KM = SparseMatrix::combine(1.0, sys.stiffness, 1.0, sys.mass);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int i = 0; i < 20; ++i) {
        Vector v(m.num_p2_nodes());
        for (auto& x : v) x = g(rng);
        EXPECT_LE(quad_form(sys.gamma0_mass, v) / quad_form(KM, v), lam2 * (1 + 1e-12));
    }
}

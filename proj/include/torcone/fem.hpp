#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "mesh.hpp"
#include "p2.hpp"
#include "quadrature.hpp"
#include "sparse.hpp"

namespace torcone {

struct FemSystem {
    SparseMatrix stiffness;     // K
    SparseMatrix mass;          // M
    SparseMatrix gamma0_mass;   // B0
    Vector load;                // right-hand side of the weak form with Delta u = N
};

inline constexpr int kDim = 2;

inline SparseMatrix p2_pattern(const TriMesh& m) {
    std::vector<std::vector<int>> pat(m.num_p2_nodes());
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto d = m.p2_dofs(t);
        for (int i : d)
            for (int j : d) pat[i].push_back(j);
    }
    return SparseMatrix::from_pattern(m.num_p2_nodes(), m.num_p2_nodes(), std::move(pat));
}

inline FemSystem assemble(const TriMesh& m) {
    FemSystem s;
    s.stiffness = p2_pattern(m);
    s.mass = s.stiffness;
    s.gamma0_mass = s.stiffness;
    s.load.assign(m.num_p2_nodes(), 0.0);
    const auto& rule = triangle_rule();
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto X = m.p2_coords(t);
        const auto d = m.p2_dofs(t);
        double k[6][6] = {}, mm[6][6] = {};
        for (const auto& q : rule) {
            const auto p = p2::evaluate(X, m.curved[t], {q.xi, q.eta}, false);
            const double w = q.weight * std::abs(p.detJ);
            for (int i = 0; i < 6; ++i) {
                s.load[d[i]] -= kDim * w * p.N[i];
                for (int j = 0; j < 6; ++j) {
                    k[i][j] += w * dot(p.grad[i], p.grad[j]);
                    mm[i][j] += w * p.N[i] * p.N[j];
                }
            }
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                s.stiffness.add(d[i], d[j], k[i][j]);
                s.mass.add(d[i], d[j], mm[i][j]);
            }
    }
    static const std::array<Vec2, 3> ref_vertex = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    for (const auto& be : m.boundary_edges) {
        if (be.label != EdgeLabel::Gamma0) continue;
        const auto X = m.p2_coords(be.triangle);
        const auto d = m.p2_dofs(be.triangle);
        const int e = be.local;
        const std::array<int, 3> loc = {e, (e + 1) % 3, 3 + e};
        const Vec2 r0 = ref_vertex[e], dr = ref_vertex[(e + 1) % 3] - r0;
        for (const auto& q : gauss4()) {
            std::array<double, 6> N;
            std::array<Vec2, 6> dN;
            p2::shape(r0 + q.t * dr, N, dN);
            const Mat2 J = p2::jacobian(X, dN);
            const double w = q.weight * norm(J * dr);
            for (int i : loc)
                for (int j : loc) s.gamma0_mass.add(d[i], d[j], w * N[i] * N[j]);
        }
    }
    return s;
}

// P2 nodes carrying u = 0: Gamma0 vertices and Gamma0 edge midpoints.
inline std::vector<int> gamma0_nodes(const TriMesh& m) {
    std::vector<char> on(m.num_p2_nodes(), 0);
    for (const auto& be : m.boundary_edges) {
        if (be.label != EdgeLabel::Gamma0) continue;
        on[be.v0] = on[be.v1] = 1;
        on[m.num_vertices() + be.edge] = 1;
    }
    std::vector<int> out;
    for (int i = 0; i < m.num_p2_nodes(); ++i)
        if (on[i]) out.push_back(i);
    return out;
}

// P2 nodes on a cone wall, with the wall(s) each one lies on (bit 1: A, bit 2: B).
inline std::vector<std::pair<int, int>> gamma1_nodes(const TriMesh& m) {
    std::vector<int> mask(m.num_p2_nodes(), 0);
    for (const auto& be : m.boundary_edges) {
        if (be.label == EdgeLabel::Gamma0) continue;
        const int bit = be.label == EdgeLabel::Gamma1A ? 1 : 2;
        mask[be.v0] |= bit;
        mask[be.v1] |= bit;
        mask[m.num_vertices() + be.edge] |= bit;
    }
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < m.num_p2_nodes(); ++i)
        if (mask[i]) out.emplace_back(i, mask[i]);
    return out;
}

inline std::vector<int> complement(int n, const std::vector<int>& removed) {
    std::vector<char> drop(n, 0);
    for (int i : removed) drop[i] = 1;
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (!drop[i]) keep.push_back(i);
    return keep;
}

struct FieldValue {
    double value = 0.0;
    Vec2 gradient;
    Mat2 hessian;
    int triangle = -1;
};

class FemSolution {
public:
    FemSolution(std::shared_ptr<const TriMesh> mesh, Vector coeffs, std::vector<int> dirichlet, CgStats stats)
        : mesh_(std::move(mesh)), coeffs_(std::move(coeffs)), dirichlet_(std::move(dirichlet)), stats_(stats) {
        build_buckets();
    }

    const TriMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
    const Vector& coefficients() const { return coeffs_; }
    const std::vector<int>& dirichlet_nodes() const { return dirichlet_; }
    const CgStats& solver_stats() const { return stats_; }

    FieldValue eval_local(int t, Vec2 ref, bool with_hessian = true) const {
        const auto p = p2::evaluate(mesh_->p2_coords(t), mesh_->curved[t], ref, with_hessian);
        const auto d = mesh_->p2_dofs(t);
        FieldValue f;
        f.triangle = t;
        for (int i = 0; i < 6; ++i) {
            const double c = coeffs_[d[i]];
            f.value += c * p.N[i];
            f.gradient += c * p.grad[i];
            if (with_hessian) f.hessian += c * p.hess[i];
        }
        return f;
    }

    // Finds the triangle containing p and its reference coordinates.
    int locate(Vec2 p, Vec2& ref) const {
        const double tol = 1e-10;
        auto inside = [&](int t, Vec2& r) {
            if (!p2::inverse_map(mesh_->p2_coords(t), mesh_->curved[t], p, r)) return false;
            return r.x >= -tol && r.y >= -tol && r.x + r.y <= 1.0 + tol;
        };
        const int cx = cell_of(p.x, bx0_, bdx_, nbx_), cy = cell_of(p.y, by0_, bdy_, nby_);
        if (cx >= 0 && cy >= 0)
            for (int t : buckets_[cy * nbx_ + cx])
                if (inside(t, ref)) return t;
        return -1;
    }

    FieldValue eval(Vec2 p) const {
        Vec2 ref;
        const int t = locate(p, ref);
        if (t < 0)
            throw LocationError("eval", "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the mesh");
        return eval_local(t, ref);
    }

private:
    static int cell_of(double v, double v0, double dv, int n) {
        const int c = static_cast<int>(std::floor((v - v0) / dv));
        return (c < 0 || c >= n) ? -1 : c;
    }

    void build_buckets() {
        const TriMesh& m = *mesh_;
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const auto& v : m.vertices) { x0 = std::min(x0, v.x); x1 = std::max(x1, v.x); y0 = std::min(y0, v.y); y1 = std::max(y1, v.y); }
        for (const auto& v : m.edge_nodes) { x0 = std::min(x0, v.x); x1 = std::max(x1, v.x); y0 = std::min(y0, v.y); y1 = std::max(y1, v.y); }
        const double pad = 1e-9 * std::max(x1 - x0, y1 - y0);
        x0 -= pad; x1 += pad; y0 -= pad; y1 += pad;
        const int n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.num_triangles()) / 2.0)));
        nbx_ = nby_ = n;
        bx0_ = x0; by0_ = y0;
        bdx_ = (x1 - x0) / n; bdy_ = (y1 - y0) / n;
        buckets_.assign(static_cast<std::size_t>(n) * n, {});
        for (int t = 0; t < m.num_triangles(); ++t) {
            const auto X = m.p2_coords(t);
            double a0 = 1e300, a1 = -1e300, b0 = 1e300, b1 = -1e300;
            for (const auto& v : X) { a0 = std::min(a0, v.x); a1 = std::max(a1, v.x); b0 = std::min(b0, v.y); b1 = std::max(b1, v.y); }
            // quadratic edges bulge at most a quarter of the midpoint offset beyond the node hull
            const double bulge = m.curved[t] ? 0.25 * (a1 - a0 + b1 - b0) : 0.0;
            const int i0 = std::clamp(static_cast<int>(std::floor((a0 - bulge - bx0_) / bdx_)), 0, n - 1);
            const int i1 = std::clamp(static_cast<int>(std::floor((a1 + bulge - bx0_) / bdx_)), 0, n - 1);
            const int j0 = std::clamp(static_cast<int>(std::floor((b0 - bulge - by0_) / bdy_)), 0, n - 1);
            const int j1 = std::clamp(static_cast<int>(std::floor((b1 + bulge - by0_) / bdy_)), 0, n - 1);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) buckets_[j * n + i].push_back(t);
        }
    }

    std::shared_ptr<const TriMesh> mesh_;
    Vector coeffs_;
    std::vector<int> dirichlet_;
    CgStats stats_;
    int nbx_ = 1, nby_ = 1;
    double bx0_ = 0, by0_ = 0, bdx_ = 1, bdy_ = 1;
    std::vector<std::vector<int>> buckets_;
};

inline FemSolution solve_torsion(const std::shared_ptr<const TriMesh>& mesh, const FemSystem& sys,
                                 double rel_tol = 1e-10) {
    const int n = mesh->num_p2_nodes();
    auto dir = gamma0_nodes(*mesh);
    const auto freeset = complement(n, dir);
    const SparseMatrix A = sys.stiffness.submatrix(freeset);
    Vector b(freeset.size()), x(freeset.size(), 0.0);
    for (std::size_t i = 0; i < freeset.size(); ++i) b[i] = sys.load[freeset[i]];
    const CgStats st = conjugate_gradient(A, b, x, rel_tol, "fem::solve_torsion");
    Vector u(n, 0.0);
    for (std::size_t i = 0; i < freeset.size(); ++i) u[freeset[i]] = x[i];
    return FemSolution(mesh, std::move(u), std::move(dir), st);
}

inline FemSolution solve_torsion(const std::shared_ptr<const TriMesh>& mesh) {
    return solve_torsion(mesh, assemble(*mesh));
}

// Volume quadrature over all elements with the field evaluated at each point.
struct VolumePoint {
    int triangle;
    Vec2 x;
    double weight;
    FieldValue u;
};

template <class F>
void for_each_volume_point(const FemSolution& u, bool with_hessian, F&& f) {
    const TriMesh& m = u.mesh();
    const auto& rule = triangle_rule();
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto X = m.p2_coords(t);
        const auto d = m.p2_dofs(t);
        for (const auto& q : rule) {
            const auto p = p2::evaluate(X, m.curved[t], {q.xi, q.eta}, with_hessian);
            VolumePoint vp{t, p.x, q.weight * std::abs(p.detJ), {}};
            vp.u.triangle = t;
            for (int i = 0; i < 6; ++i) {
                const double c = u.coefficients()[d[i]];
                vp.u.value += c * p.N[i];
                vp.u.gradient += c * p.grad[i];
                if (with_hessian) vp.u.hessian += c * p.hess[i];
            }
            f(vp);
        }
    }
}

struct BoundarySample {
    double theta = 0.0;  // curve parameter (Gamma0 only)
    Vec2 x, nu;
    double H = 0.0;      // curvature (Gamma0 only)
    double weight = 0.0; // arclength quadrature weight
    EdgeLabel label = EdgeLabel::Gamma0;
    FieldValue u;
};

// Gauss points on the exact curve, with the field of the owning boundary element sampled there.
inline std::vector<BoundarySample> sample_gamma0(const FemSolution& u) {
    const TriMesh& m = u.mesh();
    const PolarDomain& dom = m.domain();
    std::vector<BoundarySample> out;
    for (const auto& be : m.boundary_edges) {
        if (be.label != EdgeLabel::Gamma0) continue;
        const auto [lo, hi] = m.gamma0_theta_range(be);
        const auto X = m.p2_coords(be.triangle);
        for (const auto& q : gauss4()) {
            BoundarySample s;
            s.theta = lo + q.t * (hi - lo);
            s.x = dom.point(s.theta);
            s.nu = dom.normal(s.theta);
            s.H = curvature(dom, s.theta);
            s.weight = q.weight * (hi - lo) * dom.speed(s.theta);
            Vec2 ref;
            if (!p2::inverse_map(X, m.curved[be.triangle], s.x, ref))
                throw LocationError("sample_gamma0", "inverse element map failed at theta = " + std::to_string(s.theta));
            s.u = u.eval_local(be.triangle, ref);
            out.push_back(s);
        }
    }
    return out;
}

inline std::vector<BoundarySample> sample_gamma1(const FemSolution& u) {
    const TriMesh& m = u.mesh();
    const SectorCone& cone = m.domain().cone();
    std::vector<BoundarySample> out;
    static const std::array<Vec2, 3> ref_vertex = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    for (const auto& be : m.boundary_edges) {
        if (be.label == EdgeLabel::Gamma0) continue;
        const Wall w = be.label == EdgeLabel::Gamma1A ? Wall::A : Wall::B;
        const Vec2 a = m.vertices[be.v0], b = m.vertices[be.v1];
        const Vec2 r0 = ref_vertex[be.local], dr = ref_vertex[(be.local + 1) % 3] - r0;
        for (const auto& q : gauss4()) {
            BoundarySample s;
            s.label = be.label;
            s.x = a + q.t * (b - a);
            s.nu = cone.wall_normal(w);
            s.weight = q.weight * norm(b - a);
            s.u = u.eval_local(be.triangle, r0 + q.t * dr);
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace torcone

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "fem.hpp"
#include "geometry.hpp"
#include "mesh.hpp"
#include "sparse.hpp"

namespace torcone {

struct EigenResult {
    double value = 0.0;       // mu2, eta2 or lambda2 (square root of the eigenvalue)
    double eigenvalue = 0.0;  // generalized eigenvalue
    Vector vector;            // eigenvector (for vector problems: interleaved nodal components)
    int iterations = 0;
    double residual = 0.0;    // |A x - lambda B x| / (lambda |B x|)
};

struct EigenOptions {
    double tol = 1e-9;
    int max_iter = 500;
    double inner_tol = 1e-12;
    int block = 4;  // subspace size; resolves clustered eigenvalues
};

namespace detail {

inline Vector start_vector(int n, unsigned seed) {
    std::mt19937_64 rng(20240611 + seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    Vector x(n);
    for (double& v : x) v = dist(rng);
    return x;
}

using Dense = std::vector<std::vector<double>>;

// Cyclic Jacobi for a small symmetric matrix; returns eigenvalues, columns of V are eigenvectors.
inline std::vector<double> jacobi_eigen(Dense a, Dense& v) {
    const std::size_t n = a.size();
    v.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a[i][i] * a[i][i];
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        }
        if (off <= 1e-32 * diag) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = a[i][i];
    return w;
}

// Rayleigh-Ritz on span(Y) for A x = lambda B x: replaces Y by B-orthonormal Ritz vectors,
// sorted by ascending Ritz value.
inline std::vector<double> rayleigh_ritz(const SparseMatrix& A, const SparseMatrix& B, std::vector<Vector>& Y) {
    const std::size_t p = Y.size();
    std::vector<Vector> AY(p), BY(p);
    for (std::size_t i = 0; i < p; ++i) { AY[i] = A * Y[i]; BY[i] = B * Y[i]; }
    Dense a(p, std::vector<double>(p)), b(p, std::vector<double>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            a[i][j] = 0.5 * (dot(Y[i], AY[j]) + dot(Y[j], AY[i]));
            b[i][j] = 0.5 * (dot(Y[i], BY[j]) + dot(Y[j], BY[i]));
        }
    // b = L L^T, C = L^-1 a L^-T
    Dense L(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = b[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
            if (i == j) {
                if (!(s > 0.0)) throw SolverError("rayleigh_ritz", "subspace lost rank", {});
                L[i][i] = std::sqrt(s);
            } else {
                L[i][j] = s / L[j][j];
            }
        }
    auto solve_lower = [&](std::vector<double> x) {
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t k = 0; k < i; ++k) x[i] -= L[i][k] * x[k];
            x[i] /= L[i][i];
        }
        return x;
    };
    Dense T(p, std::vector<double>(p));  // T = L^-1 a, column by column
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> col(p);
        for (std::size_t i = 0; i < p; ++i) col[i] = a[i][j];
        col = solve_lower(col);
        for (std::size_t i = 0; i < p; ++i) T[i][j] = col[i];
    }
    Dense C(p, std::vector<double>(p));
    for (std::size_t i = 0; i < p; ++i) {
        auto row = solve_lower(T[i]);  // (L^-1 (L^-1 a)^T)^T, a symmetric
        for (std::size_t j = 0; j < p; ++j) C[i][j] = row[j];
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) C[i][j] = C[j][i] = 0.5 * (C[i][j] + C[j][i]);
    Dense W;
    const auto w = jacobi_eigen(C, W);
    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return w[x] < w[y]; });
    // coefficients G = L^-T W
    std::vector<Vector> out(p, Vector(Y[0].size(), 0.0));
    std::vector<double> vals(p);
    for (std::size_t c = 0; c < p; ++c) {
        const std::size_t j = order[c];
        std::vector<double> g(p);
        for (std::size_t i = 0; i < p; ++i) g[i] = W[i][j];
        for (std::size_t i = p; i-- > 0;) {
            for (std::size_t k = i + 1; k < p; ++k) g[i] -= L[k][i] * g[k];
            g[i] /= L[i][i];
        }
        for (std::size_t i = 0; i < p; ++i) axpy(g[i], Y[i], out[c]);
        vals[c] = w[j];
    }
    Y = std::move(out);
    return vals;
}

enum class Extreme { smallest, largest };

// Block iteration with Rayleigh-Ritz. smallest: Y = A^-1 B X (inverse iteration);
// largest: Y = B^-1 A X (power iteration). `kernel` is deflated B-orthogonally.
inline EigenResult subspace_iteration(const SparseMatrix& A, const SparseMatrix& B, const Vector* kernel,
                                      Extreme which, const std::string& where, double tol, int max_iter,
                                      double inner_tol, int block) {
    const int n = A.rows();
    if (n == 0) throw PreconditionError(where, "empty eigenproblem");
    const std::size_t p = static_cast<std::size_t>(std::min(block, n));
    Vector c, Bc;
    double cBc = 1.0;
    if (kernel) {
        c = *kernel;
        Bc = B * c;
        cBc = dot(c, Bc);
    }
    auto deflate = [&](Vector& x) {
        if (!kernel) return;
        axpy(-dot(Bc, x) / cBc, c, x);
    };
    std::vector<Vector> X(p);
    for (std::size_t i = 0; i < p; ++i) {
        X[i] = start_vector(n, static_cast<unsigned>(i));
        if (i == 0 && which == Extreme::largest) X[i].assign(n, 1.0);
        deflate(X[i]);
    }
    rayleigh_ritz(A, B, X);
    const SparseMatrix& S = which == Extreme::smallest ? A : B;
    const SparseMatrix& T = which == Extreme::smallest ? B : A;
    EigenResult r;
    std::vector<Vector> Y(p);
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < p; ++i) {
            Vector b = T * X[i];
            // range(A) is the Euclidean complement of its kernel; drop rounding drift along it
            if (kernel && which == Extreme::smallest) axpy(-dot(c, b) / dot(c, c), c, b);
            Y[i] = X[i];
            conjugate_gradient(S, b, Y[i], inner_tol, where + "/inner solve");
            deflate(Y[i]);
        }
        const auto vals = rayleigh_ritz(A, B, Y);
        X = Y;
        const std::size_t pick = which == Extreme::smallest ? 0 : p - 1;
        const Vector& x = X[pick];
        const double lam = vals[pick];
        Vector res = A * x;
        const Vector Bx = B * x;
        axpy(-lam, Bx, res);
        r.iterations = it;
        r.eigenvalue = lam;
        r.residual = norm(res) / (std::abs(lam) * norm(Bx));
        if (r.residual <= tol) {
            r.value = std::sqrt(lam);
            r.vector = x;
            return r;
        }
    }
    throw SolverError(where, "eigen iteration did not converge (residual " + std::to_string(r.residual) + ")",
                      {r.residual});
}

}  // namespace detail

// Smallest eigenpair of A x = lambda B x (A symmetric PSD, B SPD); `kernel` spans the null space of A.
inline EigenResult smallest_eigenpair(const SparseMatrix& A, const SparseMatrix& B, const Vector* kernel,
                                      const std::string& where, const EigenOptions& opt = {}) {
    return detail::subspace_iteration(A, B, kernel, detail::Extreme::smallest, where, opt.tol, opt.max_iter,
                                      opt.inner_tol, opt.block);
}

// Largest eigenpair of A x = lambda B x (A PSD, B SPD).
inline EigenResult largest_eigenpair(const SparseMatrix& A, const SparseMatrix& B, const std::string& where,
                                     const EigenOptions& opt = {}) {
    return detail::subspace_iteration(A, B, nullptr, detail::Extreme::largest, where, opt.tol, opt.max_iter,
                                      opt.inner_tol, opt.block);
}

inline EigenResult neumann_poincare(const TriMesh& m, const FemSystem& sys, const EigenOptions& opt = {}) {
    const Vector ones(m.num_p2_nodes(), 1.0);
    return smallest_eigenpair(sys.stiffness, sys.mass, &ones, "fem::neumann_poincare", opt);
}

// Scalar problem with zero trace on the cone walls.
inline EigenResult zero_trace_poincare(const TriMesh& m, const FemSystem& sys, const EigenOptions& opt = {}) {
    std::vector<int> walls;
    for (const auto& [i, mask] : gamma1_nodes(m)) walls.push_back(i);
    if (walls.empty()) throw PreconditionError("fem::zero_trace_poincare", "Gamma1 is empty");
    const auto keep = complement(m.num_p2_nodes(), walls);
    auto r = smallest_eigenpair(sys.stiffness.submatrix(keep), sys.mass.submatrix(keep), nullptr,
                                "fem::zero_trace_poincare", opt);
    Vector full(m.num_p2_nodes(), 0.0);
    for (std::size_t i = 0; i < keep.size(); ++i) full[keep[i]] = r.vector[i];
    r.vector = std::move(full);
    return r;
}

// Per-node admissible directions for fields valued in the normal span with <v, nu> = 0 on Gamma1.
struct VectorDofMap {
    std::vector<std::vector<std::pair<int, Vec2>>> node_dofs;  // (reduced dof, direction) per P2 node
    int size = 0;
};

inline VectorDofMap vector_dof_map(const TriMesh& m, int k) {
    const SectorCone& cone = m.domain().cone();
    std::vector<int> mask(m.num_p2_nodes(), 0);
    for (const auto& [i, bits] : gamma1_nodes(m)) mask[i] = bits;
    VectorDofMap map;
    map.node_dofs.resize(m.num_p2_nodes());
    for (int i = 0; i < m.num_p2_nodes(); ++i) {
        std::vector<Vec2> normals;
        if (mask[i] & 1) normals.push_back(cone.wall_normal(Wall::A));
        if (mask[i] & 2) normals.push_back(cone.wall_normal(Wall::B));
        std::vector<Vec2> allowed;
        if (k == 1) {
            if (normals.empty()) allowed.push_back(cone.wall_normal(Wall::A));
        } else {
            if (normals.empty()) {
                allowed = {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
            } else {
                bool independent = false;
                for (std::size_t a = 1; a < normals.size(); ++a)
                    independent = independent || std::abs(cross(normals[0], normals[a])) > 1e-12;
                if (!independent) allowed.push_back({-normals[0].y, normals[0].x});
            }
        }
        for (const auto& d : allowed) map.node_dofs[i].emplace_back(map.size++, d);
    }
    return map;
}

inline SparseMatrix vector_operator(const SparseMatrix& S, const VectorDofMap& map) {
    const auto& rp = S.row_offsets();
    const auto& ci = S.column_indices();
    const auto& vals = S.values();
    std::vector<std::vector<int>> pat(map.size);
    for (int i = 0; i < S.rows(); ++i)
        for (const auto& [a, da] : map.node_dofs[i])
            for (int k = rp[i]; k < rp[i + 1]; ++k)
                for (const auto& [b, db] : map.node_dofs[ci[k]]) pat[a].push_back(b);
    SparseMatrix A = SparseMatrix::from_pattern(map.size, map.size, std::move(pat));
    for (int i = 0; i < S.rows(); ++i)
        for (const auto& [a, da] : map.node_dofs[i])
            for (int k = rp[i]; k < rp[i + 1]; ++k)
                for (const auto& [b, db] : map.node_dofs[ci[k]]) A.add(a, b, vals[k] * dot(da, db));
    return A;
}

inline EigenResult vector_poincare(const TriMesh& m, const FemSystem& sys, int k, const EigenOptions& opt = {}) {
    const SectorCone& cone = m.domain().cone();
    if (k <= 0) throw PreconditionError("fem::vector_poincare", "k = 0 has no vector problem; use neumann_poincare");
    if (cone.full_plane()) throw PreconditionError("fem::vector_poincare", "Gamma1 is empty");
    if (k != normal_span_dim(cone))
        throw PreconditionError("fem::vector_poincare", "k does not match the cone's normal span dimension");
    const auto map = vector_dof_map(m, k);
    const SparseMatrix A = vector_operator(sys.stiffness, map);
    const SparseMatrix B = vector_operator(sys.mass, map);
    auto r = smallest_eigenpair(A, B, nullptr, "fem::vector_poincare", opt);
    Vector full(2 * m.num_p2_nodes(), 0.0);
    for (int i = 0; i < m.num_p2_nodes(); ++i)
        for (const auto& [a, d] : map.node_dofs[i]) {
            full[2 * i] += r.vector[a] * d.x;
            full[2 * i + 1] += r.vector[a] * d.y;
        }
    r.vector = std::move(full);
    return r;
}

// lambda2^2 = max over v of |v|^2_{Gamma0} / (|grad v|^2 + mass_weight |v|^2).
inline EigenResult trace_eigenpair(const FemSystem& sys, double mass_weight, const EigenOptions& opt = {}) {
    const SparseMatrix KM = SparseMatrix::combine(1.0, sys.stiffness, mass_weight, sys.mass);
    return largest_eigenpair(sys.gamma0_mass, KM, "fem::trace_constant", opt);
}

inline EigenResult trace_constant(const FemSystem& sys, const EigenOptions& opt = {}) {
    return trace_eigenpair(sys, 1.0, opt);
}

inline EigenResult neumann_poincare(const TriMesh& m, const EigenOptions& opt = {}) {
    return neumann_poincare(m, assemble(m), opt);
}
inline EigenResult vector_poincare(const TriMesh& m, int k, const EigenOptions& opt = {}) {
    return vector_poincare(m, assemble(m), k, opt);
}
inline EigenResult trace_constant(const TriMesh& m, const EigenOptions& opt = {}) {
    return trace_constant(assemble(m), opt);
}

}  // namespace torcone

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "vec2.hpp"

namespace torcone {

enum class EdgeLabel : std::uint8_t { Gamma0, Gamma1A, Gamma1B };

inline const char* label_name(EdgeLabel l) {
    switch (l) {
        case EdgeLabel::Gamma0: return "Gamma0";
        case EdgeLabel::Gamma1A: return "Gamma1A";
        case EdgeLabel::Gamma1B: return "Gamma1B";
    }
    return "?";
}

struct BoundaryEdge {
    int v0 = -1, v1 = -1;  // oriented as in the owning triangle
    EdgeLabel label = EdgeLabel::Gamma0;
    int triangle = -1;
    int local = -1;  // local edge index: edge e joins local vertices e and (e+1)%3
    int edge = -1;   // global edge id
};

struct MeshOptions {
    // place the P2 midpoint node of each Gamma0 edge on the exact curve (quadratic boundary edges)
    bool curved_gamma0 = true;
};

namespace vflag {
inline constexpr std::uint8_t gamma0 = 1, wall_a = 2, wall_b = 4, apex = 8;
}

class TriMesh {
public:
    TriMesh(PolarDomain domain, MeshOptions opts) : domain_(std::move(domain)), opts_(opts) {}

    const PolarDomain& domain() const { return domain_; }
    const MeshOptions& options() const { return opts_; }

    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    // {corner on theta = 0, corner on theta = opening, cone vertex}; corners are -1 for the full plane
    std::array<int, 3> corner_vertices{-1, -1, -1};
    std::vector<double> vertex_theta;  // curve parameter of Gamma0 vertices, NaN elsewhere
    std::vector<std::uint8_t> vertex_flags;

    // derived by finalize()
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> triangle_edges;
    std::vector<std::array<int, 3>> neighbors;  // across local edge e, -1 on the boundary
    std::vector<Vec2> edge_nodes;               // P2 node position of each edge
    std::vector<std::uint8_t> curved;           // triangle has a non-affine isoparametric map
    std::vector<std::uint8_t> fan;              // triangle touches the cone vertex

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_p2_nodes() const { return num_vertices() + num_edges(); }

    std::array<int, 6> p2_dofs(int t) const {
        const auto& v = triangles[t];
        const auto& e = triangle_edges[t];
        const int nv = num_vertices();
        return {v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]};
    }
    std::array<Vec2, 6> p2_coords(int t) const {
        const auto& v = triangles[t];
        const auto& e = triangle_edges[t];
        return {vertices[v[0]], vertices[v[1]], vertices[v[2]], edge_nodes[e[0]], edge_nodes[e[1]], edge_nodes[e[2]]};
    }
    Vec2 p2_node(int i) const { return i < num_vertices() ? vertices[i] : edge_nodes[i - num_vertices()]; }

    double triangle_area(int t) const {
        const auto& v = triangles[t];
        return 0.5 * cross(vertices[v[1]] - vertices[v[0]], vertices[v[2]] - vertices[v[0]]);
    }

    // Theta range of a Gamma0 edge, unwrapped so that hi > lo.
    std::pair<double, double> gamma0_theta_range(const BoundaryEdge& be) const {
        double a = vertex_theta[be.v0], b = vertex_theta[be.v1];
        if (domain_.cone().full_plane()) {
            if (b - a > pi) a += 2.0 * pi;
            if (a - b > pi) b += 2.0 * pi;
        }
        return {a, b};
    }

    void finalize();

private:
    PolarDomain domain_;
    MeshOptions opts_;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline double min_angle_deg(Vec2 a, Vec2 b, Vec2 c) {
    auto ang = [](Vec2 p, Vec2 q, Vec2 r) {
        const Vec2 u = q - p, v = r - p;
        return std::atan2(std::abs(cross(u, v)), dot(u, v));
    };
    return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)}) * 180.0 / pi;
}

}  // namespace detail

inline void TriMesh::finalize() {
    const int nt = num_triangles();
    edges.clear();
    triangle_edges.assign(nt, {-1, -1, -1});
    neighbors.assign(nt, {-1, -1, -1});
    std::unordered_map<std::uint64_t, int> ids;
    ids.reserve(3 * nt);
    std::vector<std::array<int, 2>> owners;  // (triangle*3+local) of the first and second owner
    for (int t = 0; t < nt; ++t) {
        for (int e = 0; e < 3; ++e) {
            const int a = triangles[t][e], b = triangles[t][(e + 1) % 3];
            auto [it, fresh] = ids.try_emplace(detail::edge_key(a, b), static_cast<int>(edges.size()));
            if (fresh) {
                edges.push_back({std::min(a, b), std::max(a, b)});
                owners.push_back({t * 3 + e, -1});
            } else {
                auto& ow = owners[it->second];
                if (ow[1] != -1) throw MeshQualityError("mesh", "edge shared by more than two triangles");
                ow[1] = t * 3 + e;
                const int t0 = ow[0] / 3, e0 = ow[0] % 3;
                neighbors[t0][e0] = t;
                neighbors[t][e] = t0;
            }
            triangle_edges[t][e] = it->second;
        }
    }
    for (auto& be : boundary_edges) {
        auto it = ids.find(detail::edge_key(be.v0, be.v1));
        if (it == ids.end()) throw MeshQualityError("mesh", "labelled boundary edge not found in triangulation");
        const auto& ow = owners[it->second];
        if (ow[1] != -1) throw MeshQualityError("mesh", "labelled boundary edge is interior");
        be.edge = it->second;
        be.triangle = ow[0] / 3;
        be.local = ow[0] % 3;
        be.v0 = triangles[be.triangle][be.local];
        be.v1 = triangles[be.triangle][(be.local + 1) % 3];
    }
    std::size_t open_edges = 0;
    for (const auto& ow : owners) open_edges += ow[1] == -1;
    if (open_edges != boundary_edges.size())
        throw MeshQualityError("mesh", "boundary edges without a label: " + std::to_string(open_edges - boundary_edges.size()));

    edge_nodes.resize(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
        edge_nodes[e] = 0.5 * (vertices[edges[e][0]] + vertices[edges[e][1]]);
    curved.assign(nt, 0);
    if (opts_.curved_gamma0) {
        for (const auto& be : boundary_edges) {
            if (be.label != EdgeLabel::Gamma0) continue;
            const auto [lo, hi] = gamma0_theta_range(be);
            edge_nodes[be.edge] = domain_.point(0.5 * (lo + hi));
            curved[be.triangle] = 1;
        }
    }
    fan.assign(nt, 0);
    const int apex = corner_vertices[2];
    for (int t = 0; t < nt; ++t) {
        const auto& v = triangles[t];
        fan[t] = apex >= 0 && (v[0] == apex || v[1] == apex || v[2] == apex);
        const double area = triangle_area(t);
        const double ang = detail::min_angle_deg(vertices[v[0]], vertices[v[1]], vertices[v[2]]);
        if (!(area > 0.0) || ang < 15.0)
            throw MeshQualityError("mesh", "degenerate triangle " + std::to_string(t) + " (vertices " +
                                               std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " +
                                               std::to_string(v[2]) + "): area " + std::to_string(area) +
                                               ", min angle " + std::to_string(ang) + " deg");
    }
}

// Mapped polar grid: ring i sits at s = i/(n_radial-1) and carries about n_angular*s segments,
// consecutive rings are stitched by a zipper strip, and the innermost ring forms a fan at the vertex.
inline TriMesh generate(const PolarDomain& domain, int n_radial, int n_angular, MeshOptions opts = {}) {
    if (n_radial < 2) throw PreconditionError("mesh::generate", "n_radial must be >= 2");
    if (n_angular < 4) throw PreconditionError("mesh::generate", "n_angular must be >= 4");
    const SectorCone& cone = domain.cone();
    const double w = cone.opening();
    const bool closed = cone.full_plane();
    TriMesh m(domain, opts);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto add_vertex = [&](Vec2 p, double theta, std::uint8_t flags) {
        m.vertices.push_back(p);
        m.vertex_theta.push_back(theta);
        m.vertex_flags.push_back(flags);
        return static_cast<int>(m.vertices.size()) - 1;
    };
    add_vertex({0.0, 0.0}, nan, vflag::apex | (closed ? 0 : (vflag::wall_a | vflag::wall_b)));
    m.corner_vertices[2] = 0;

    const int rings = n_radial - 1;
    const int c_min = std::max(1, static_cast<int>(std::ceil(w / (2.0 * pi / 3.0) - 1e-12)));
    std::vector<std::vector<int>> ring(rings + 1);
    std::vector<int> count(rings + 1, 0);
    for (int i = 1; i <= rings; ++i) {
        const double s = static_cast<double>(i) / rings;
        int c = i == rings ? n_angular : static_cast<int>(std::ceil(n_angular * s - 1e-9));
        c = std::clamp(c, c_min, n_angular);
        count[i] = c;
        const bool outer = i == rings;
        const int nodes = closed ? c : c + 1;
        for (int j = 0; j < nodes; ++j) {
            const double theta = w * j / c;
            std::uint8_t flags = outer ? vflag::gamma0 : 0;
            Vec2 dir = polar(1.0, theta);
            if (!closed && j == 0) { flags |= vflag::wall_a; dir = cone.ray_direction(Wall::A); }
            if (!closed && j == c) { flags |= vflag::wall_b; dir = cone.ray_direction(Wall::B); }
            ring[i].push_back(add_vertex(s * domain.rho(theta) * dir, outer ? theta : nan, flags));
        }
    }
    auto node = [&](int i, int j) { return ring[i][closed ? j % count[i] : j]; };
    auto add_tri = [&](int a, int b, int c) {
        const double s = cross(m.vertices[b] - m.vertices[a], m.vertices[c] - m.vertices[a]);
        if (s < 0.0) std::swap(b, c);
        m.triangles.push_back({a, b, c});
    };
    for (int j = 0; j < count[1]; ++j) add_tri(0, node(1, j), node(1, j + 1));
    for (int i = 2; i <= rings; ++i) {
        const int ci = count[i - 1], co = count[i];
        int a = 0, b = 0;
        while (a < ci || b < co) {
            bool advance_outer;
            if (a == ci) advance_outer = true;
            else if (b == co) advance_outer = false;
            else advance_outer = static_cast<double>(b + 1) / co <= static_cast<double>(a + 1) / ci + 1e-12;
            if (advance_outer) {
                add_tri(node(i - 1, a), node(i, b), node(i, b + 1));
                ++b;
            } else {
                add_tri(node(i - 1, a), node(i, b), node(i - 1, a + 1));
                ++a;
            }
        }
    }
    for (int j = 0; j < count[rings]; ++j)
        m.boundary_edges.push_back({node(rings, j), node(rings, j + 1), EdgeLabel::Gamma0});
    if (!closed) {
        m.corner_vertices[0] = ring[rings].front();
        m.corner_vertices[1] = ring[rings].back();
        int prev_a = 0, prev_b = 0;
        for (int i = 1; i <= rings; ++i) {
            m.boundary_edges.push_back({prev_a, ring[i].front(), EdgeLabel::Gamma1A});
            m.boundary_edges.push_back({prev_b, ring[i].back(), EdgeLabel::Gamma1B});
            prev_a = ring[i].front();
            prev_b = ring[i].back();
        }
    }
    m.finalize();
    return m;
}

// Picks n_radial and n_angular so that the nominal spacing is about h/1.5 (max circumdiameter near h).
inline TriMesh generate_for_size(const PolarDomain& domain, double h, MeshOptions opts = {}) {
    if (!(h > 0.0)) throw PreconditionError("mesh::generate_for_size", "h must be positive");
    double rmax = 0.0;
    for (int i = 0; i <= 512; ++i) rmax = std::max(rmax, domain.rho(domain.opening() * i / 512));
    const double spacing = h / 1.5;
    const int nr = std::max(2, static_cast<int>(std::ceil(rmax / spacing))) + 1;
    const int na = std::max(4, static_cast<int>(std::ceil(domain.opening() * rmax / spacing)));
    return generate(domain, nr, na, opts);
}

inline TriMesh refine(const TriMesh& src) {
    TriMesh m(src.domain(), src.options());
    m.vertices = src.vertices;
    m.vertex_theta = src.vertex_theta;
    m.vertex_flags = src.vertex_flags;
    m.corner_vertices = src.corner_vertices;
    const int nv = src.num_vertices();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> mid(src.num_edges(), -1);
    std::vector<std::uint8_t> edge_label(src.num_edges(), 255);
    for (const auto& be : src.boundary_edges) edge_label[be.edge] = static_cast<std::uint8_t>(be.label);
    for (int e = 0; e < src.num_edges(); ++e) {
        const int a = src.edges[e][0], b = src.edges[e][1];
        Vec2 p = 0.5 * (src.vertices[a] + src.vertices[b]);
        double theta = nan;
        std::uint8_t flags = 0;
        if (edge_label[e] == static_cast<std::uint8_t>(EdgeLabel::Gamma0)) {
            double ta = src.vertex_theta[a], tb = src.vertex_theta[b];
            if (src.domain().cone().full_plane() && std::abs(ta - tb) > pi) (ta < tb ? ta : tb) += 2.0 * pi;
            theta = 0.5 * (ta + tb);
            if (theta >= 2.0 * pi) theta -= 2.0 * pi;
            p = src.domain().point(theta);
            flags = vflag::gamma0;
        } else if (edge_label[e] == static_cast<std::uint8_t>(EdgeLabel::Gamma1A)) {
            flags = vflag::wall_a;
            p = dot(p, src.domain().cone().ray_direction(Wall::A)) * src.domain().cone().ray_direction(Wall::A);
        } else if (edge_label[e] == static_cast<std::uint8_t>(EdgeLabel::Gamma1B)) {
            flags = vflag::wall_b;
            p = dot(p, src.domain().cone().ray_direction(Wall::B)) * src.domain().cone().ray_direction(Wall::B);
        }
        mid[e] = nv + e;
        m.vertices.push_back(p);
        m.vertex_theta.push_back(theta);
        m.vertex_flags.push_back(flags);
    }
    m.triangles.reserve(4 * src.num_triangles());
    for (int t = 0; t < src.num_triangles(); ++t) {
        const auto& v = src.triangles[t];
        const auto& e = src.triangle_edges[t];
        const int m01 = mid[e[0]], m12 = mid[e[1]], m20 = mid[e[2]];
        m.triangles.push_back({v[0], m01, m20});
        m.triangles.push_back({m01, v[1], m12});
        m.triangles.push_back({m20, m12, v[2]});
        m.triangles.push_back({m01, m12, m20});
    }
    for (const auto& be : src.boundary_edges) {
        const int c = mid[be.edge];
        m.boundary_edges.push_back({be.v0, c, be.label});
        m.boundary_edges.push_back({c, be.v1, be.label});
    }
    m.finalize();
    return m;
}

inline double mesh_size(const TriMesh& m) {
    double h = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto& v = m.triangles[t];
        const Vec2 a = m.vertices[v[0]], b = m.vertices[v[1]], c = m.vertices[v[2]];
        const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
        h = std::max(h, la * lb * lc / (2.0 * m.triangle_area(t)));
    }
    return h;
}

inline int euler_characteristic(const TriMesh& m) {
    return m.num_vertices() - m.num_edges() + m.num_triangles();
}

inline void write_mesh_text(std::ostream& os, const TriMesh& m) {
    os.precision(17);
    os << "vertices " << m.num_vertices() << "\n";
    for (int i = 0; i < m.num_vertices(); ++i) os << i << " " << m.vertices[i].x << " " << m.vertices[i].y << "\n";
    os << "triangles " << m.num_triangles() << "\n";
    for (int t = 0; t < m.num_triangles(); ++t)
        os << t << " " << m.triangles[t][0] << " " << m.triangles[t][1] << " " << m.triangles[t][2] << "\n";
    os << "edges " << m.boundary_edges.size() << "\n";
    for (const auto& be : m.boundary_edges) os << be.v0 << " " << be.v1 << " " << label_name(be.label) << "\n";
}

}  // namespace torcone

#pragma once

#include "kacanov/orlicz.hpp"
#include "kacanov/sparse.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace kacanov {

/// Conforming triangulation with piecewise linear elements in mind:
/// vertices, positively oriented triangles, and per-vertex boundary flags
/// derived from edges owned by exactly one triangle.
struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<bool> boundary;
};

using NodalField = Vector;      // one coefficient per vertex
using ElementWeights = Vector;  // one weight per triangle

inline double triangle_area(const TriMesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

namespace detail {

inline void flag_boundary_from_edges(TriMesh& mesh) {
    std::map<std::pair<std::size_t, std::size_t>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            std::size_t i = tri[e], j = tri[(e + 1) % 3];
            if (i > j) std::swap(i, j);
            ++edge_count[{i, j}];
        }
    mesh.boundary.assign(mesh.vertices.size(), false);
    for (const auto& [edge, count] : edge_count) {
        if (count > 2)
            throw std::logic_error("TriMesh: edge shared by more than two triangles");
        if (count == 1) {
            mesh.boundary[edge.first] = true;
            mesh.boundary[edge.second] = true;
        }
    }
}

} // namespace detail

/// Uniform criss-cross triangulation of the unit square: (n+1)^2 vertices,
/// 2 n^2 triangles, cell diagonals alternating by parity.
inline TriMesh unit_square_mesh(int n) {
    if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be >= 1");
    TriMesh mesh;
    const auto vid = [n](int i, int j) { return static_cast<std::size_t>(j) * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.vertices.push_back(
                {static_cast<double>(i) / n, static_cast<double>(j) / n});
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t v00 = vid(i, j), v10 = vid(i + 1, j);
            const std::size_t v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                mesh.triangles.push_back({v00, v10, v11});
                mesh.triangles.push_back({v00, v11, v01});
            } else {
                mesh.triangles.push_back({v00, v10, v01});
                mesh.triangles.push_back({v10, v11, v01});
            }
        }
    detail::flag_boundary_from_edges(mesh);
    return mesh;
}

/// Triangulation of [-1,1]^2 minus the closed quadrant [0,1] x [-1,0].
/// n must be even so the reentrant corner lands on a grid vertex.
inline TriMesh l_shape_mesh(int n) {
    if (n < 1) throw std::invalid_argument("l_shape_mesh: n must be >= 1");
    if (n % 2 != 0) throw std::invalid_argument("l_shape_mesh: n must be even");
    const int half = n / 2;
    TriMesh mesh;
    std::vector<std::size_t> vid((n + 1) * (n + 1), static_cast<std::size_t>(-1));
    const auto grid = [n](int i, int j) { return static_cast<std::size_t>(j) * (n + 1) + i; };
    const auto vertex = [&](int i, int j) {
        std::size_t& id = vid[grid(i, j)];
        if (id == static_cast<std::size_t>(-1)) {
            id = mesh.vertices.size();
            // single division keeps the corners and the reentrant vertex exact
            mesh.vertices.push_back({(2.0 * i - n) / n, (2.0 * j - n) / n});
        }
        return id;
    };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const bool removed = i >= half && j < half; // cell inside [0,1] x [-1,0]
            if (removed) continue;
            const std::size_t v00 = vertex(i, j), v10 = vertex(i + 1, j);
            const std::size_t v01 = vertex(i, j + 1), v11 = vertex(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                mesh.triangles.push_back({v00, v10, v11});
                mesh.triangles.push_back({v00, v11, v01});
            } else {
                mesh.triangles.push_back({v00, v10, v01});
                mesh.triangles.push_back({v10, v11, v01});
            }
        }
    detail::flag_boundary_from_edges(mesh);
    return mesh;
}

/// Constant gradient of the P1 interpolant on triangle t.
inline Vec2 element_gradient(const TriMesh& mesh, const NodalField& field, std::size_t t) {
    if (t >= mesh.triangles.size())
        throw std::out_of_range("element_gradient: triangle index out of range");
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    const double va = field[tri[0]], vb = field[tri[1]], vc = field[tri[2]];
    const double two_area = 2.0 * triangle_area(mesh, t);
    return {(va * (b[1] - c[1]) + vb * (c[1] - a[1]) + vc * (a[1] - b[1])) / two_area,
            (va * (c[0] - b[0]) + vb * (a[0] - c[0]) + vc * (b[0] - a[0])) / two_area};
}

/// Per-element linearization weight: |grad v| projected onto the interval.
inline ElementWeights compute_weights(const TriMesh& mesh, const NodalField& field,
                                      const RelaxInterval& eps) {
    ElementWeights w(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        w[t] = truncate(norm(element_gradient(mesh, field, t)), eps);
    return w;
}

/// Weighted P1 stiffness matrix A_ij = sum_T w_T^{p-2} |T| grad(phi_i).grad(phi_j).
/// With apply_dirichlet, boundary rows and columns are eliminated
/// symmetrically and replaced by a unit diagonal.
inline SymSparseMatrix assemble_weighted_stiffness(const TriMesh& mesh, const ElementWeights& w,
                                                   const Exponent& p, bool apply_dirichlet = true) {
    if (w.size() != mesh.triangles.size())
        throw std::invalid_argument("assemble_weighted_stiffness: one weight per triangle required");
    const std::size_t n = mesh.vertices.size();
    std::vector<SymSparseMatrix::Entry> entries;
    entries.reserve(9 * mesh.triangles.size() + n);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!(w[t] > 0.0))
            throw std::invalid_argument("assemble_weighted_stiffness: weights must be positive");
        const auto& tri = mesh.triangles[t];
        const Vec2& a = mesh.vertices[tri[0]];
        const Vec2& b = mesh.vertices[tri[1]];
        const Vec2& c = mesh.vertices[tri[2]];
        const double area = triangle_area(mesh, t);
        const double two_area = 2.0 * area;
        const Vec2 grad[3] = {{(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area},
                              {(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area},
                              {(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area}};
        const double coef = std::pow(w[t], p.value() - 2.0) * area;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (apply_dirichlet && (mesh.boundary[tri[i]] || mesh.boundary[tri[j]]))
                    continue;
                entries.push_back({tri[i], tri[j], coef * dot(grad[i], grad[j])});
            }
    }
    if (apply_dirichlet)
        for (std::size_t i = 0; i < n; ++i)
            if (mesh.boundary[i]) entries.push_back({i, i, 1.0});
    return SymSparseMatrix(n, std::move(entries));
}

/// Right-hand side f, either as an integrable density g with
/// <f, xi> = int g xi dx, or in divergence form <f, xi> = int F . grad(xi) dx
/// for fields F whose divergence need not be integrable.
struct LoadSpec {
    using Density = std::function<double(double, double)>;
    using DivergenceField = std::function<Vec2(double, double)>;

    static LoadSpec density(Density g) { return LoadSpec(std::move(g)); }
    static LoadSpec divergence_form(DivergenceField F) { return LoadSpec(std::move(F)); }

    std::variant<Density, DivergenceField> term;

private:
    explicit LoadSpec(Density g) : term(std::move(g)) {}
    explicit LoadSpec(DivergenceField F) : term(std::move(F)) {}
};

/// Load vector over all basis functions (boundary included); one-point
/// barycenter quadrature, exact for element-constant integrands.
inline Vector assemble_load(const TriMesh& mesh, const LoadSpec& load) {
    Vector rhs(mesh.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec2& a = mesh.vertices[tri[0]];
        const Vec2& b = mesh.vertices[tri[1]];
        const Vec2& c = mesh.vertices[tri[2]];
        const double area = triangle_area(mesh, t);
        const double xc = (a[0] + b[0] + c[0]) / 3.0;
        const double yc = (a[1] + b[1] + c[1]) / 3.0;
        if (std::holds_alternative<LoadSpec::Density>(load.term)) {
            const double g = std::get<LoadSpec::Density>(load.term)(xc, yc);
            if (!std::isfinite(g))
                throw std::domain_error("assemble_load: density not finite at quadrature point");
            for (int i = 0; i < 3; ++i) rhs[tri[i]] += g * area / 3.0;
        } else {
            const Vec2 F = std::get<LoadSpec::DivergenceField>(load.term)(xc, yc);
            if (!std::isfinite(F[0]) || !std::isfinite(F[1]))
                throw std::domain_error("assemble_load: field not finite at quadrature point");
            const double two_area = 2.0 * area;
            const Vec2 grad[3] = {{(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area},
                                  {(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area},
                                  {(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area}};
            for (int i = 0; i < 3; ++i) rhs[tri[i]] += area * dot(F, grad[i]);
        }
    }
    return rhs;
}

inline double load_pairing(const Vector& load, const NodalField& field) {
    return dot(load, field);
}

/// Unrelaxed energy (1/p) int |grad v|^p dx - <f, v>.
inline double energy_J(const TriMesh& mesh, const NodalField& field, const Exponent& p,
                       const Vector& load) {
    CompensatedSum e;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        e.add(triangle_area(mesh, t) *
              std::pow(norm(element_gradient(mesh, field, t)), p.value()) / p.value());
    return e.value() - load_pairing(load, field);
}

/// Relaxed energy int kappa_eps(|grad v|) dx - <f, v>.
inline double energy_Jeps(const TriMesh& mesh, const NodalField& field, const RelaxInterval& eps,
                          const Exponent& p, const Vector& load) {
    CompensatedSum e;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        e.add(triangle_area(mesh, t) * kappa(norm(element_gradient(mesh, field, t)), eps, p));
    return e.value() - load_pairing(load, field);
}

/// Two-variable energy with frozen weights a = w:
/// int (1/2) w^{p-2} |grad v|^2 + (1/p - 1/2) w^p dx - <f, v>.
inline double energy_Jva(const TriMesh& mesh, const NodalField& field, const ElementWeights& w,
                         const Exponent& p, const Vector& load) {
    if (w.size() != mesh.triangles.size())
        throw std::invalid_argument("energy_Jva: one weight per triangle required");
    const double pp = p.value();
    CompensatedSum e;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!(w[t] > 0.0)) throw std::invalid_argument("energy_Jva: weights must be positive");
        const double g = norm(element_gradient(mesh, field, t));
        e.add(triangle_area(mesh, t) *
              (0.5 * std::pow(w[t], pp - 2.0) * g * g + (1.0 / pp - 0.5) * std::pow(w[t], pp)));
    }
    return e.value() - load_pairing(load, field);
}

/// int (A_eps(grad v) - A_eps(grad w)) . grad(v - w) dx; one of the two
/// equivalent distance measures sandwiching relaxed energy gaps.
inline double a_form_difference(const TriMesh& mesh, const NodalField& v, const NodalField& w,
                                const RelaxInterval& eps, const Exponent& p) {
    CompensatedSum s;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 gv = element_gradient(mesh, v, t);
        const Vec2 gw = element_gradient(mesh, w, t);
        const Vec2 Av = flux_A(gv, eps, p);
        const Vec2 Aw = flux_A(gw, eps, p);
        const Vec2 dA = {Av[0] - Aw[0], Av[1] - Aw[1]};
        const Vec2 dg = {gv[0] - gw[0], gv[1] - gw[1]};
        s.add(triangle_area(mesh, t) * dot(dA, dg));
    }
    return s.value();
}

/// int |V_eps(grad v) - V_eps(grad w)|^2 dx.
inline double v_distance_squared(const TriMesh& mesh, const NodalField& v, const NodalField& w,
                                 const RelaxInterval& eps, const Exponent& p) {
    CompensatedSum s;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 Vv = flux_V(element_gradient(mesh, v, t), eps, p);
        const Vec2 Vw = flux_V(element_gradient(mesh, w, t), eps, p);
        const Vec2 d = {Vv[0] - Vw[0], Vv[1] - Vw[1]};
        s.add(triangle_area(mesh, t) * dot(d, d));
    }
    return s.value();
}

/// Plain-text mesh export: "nodes <N> triangles <M>", N vertex lines
/// "x y boundary_flag", M triangle lines "i j k" (zero-based).
inline void export_mesh(const TriMesh& mesh, std::ostream& os) {
    os << "nodes " << mesh.vertices.size() << " triangles " << mesh.triangles.size() << "\n";
    char buf[80];
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %d", mesh.vertices[i][0],
                      mesh.vertices[i][1], mesh.boundary[i] ? 1 : 0);
        os << buf << "\n";
    }
    for (const auto& tri : mesh.triangles)
        os << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
}

} // namespace kacanov

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "phasetr/cg.hpp"
#include "phasetr/sparse.hpp"

namespace phasetr {

using NodalField = std::vector<double>;
using ControlField = std::vector<double>;  // nodal coefficients, values in [0,1]

// Structured triangulation of a rectangle with CG1 (piecewise linear) nodal
// basis. Each grid square is split along its lower-left-to-upper-right
// diagonal into two triangles. Nodes are ordered row-major, y-major then x.
struct MeshCG1 {
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    int nx = 1, ny = 1;
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<double> tri_area;  // one per triangle, positive
    std::vector<int> boundary_nodes;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    double area() const { return (x_max - x_min) * (y_max - y_min); }
    double hx() const { return (x_max - x_min) / nx; }
    double hy() const { return (y_max - y_min) / ny; }
    int node_index(int i, int j) const { return j * (nx + 1) + i; }

    bool on_boundary(int node) const {
        const int i = node % (nx + 1), j = node / (nx + 1);
        return i == 0 || i == nx || j == 0 || j == ny;
    }
};

inline MeshCG1 build_mesh(double x_min, double x_max, double y_min, double y_max, int nx,
                          int ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_mesh: nx, ny must be >= 1");
    if (!(x_max > x_min) || !(y_max > y_min))
        throw std::invalid_argument("build_mesh: invalid bounds");
    MeshCG1 m;
    m.x_min = x_min;
    m.x_max = x_max;
    m.y_min = y_min;
    m.y_max = y_max;
    m.nx = nx;
    m.ny = ny;
    m.nodes.reserve((nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.push_back({x_min + i * (x_max - x_min) / nx, y_min + j * (y_max - y_min) / ny});
    m.triangles.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = m.node_index(i, j), v10 = m.node_index(i + 1, j);
            const int v01 = m.node_index(i, j + 1), v11 = m.node_index(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }
    m.tri_area.reserve(m.triangles.size());
    for (const auto& t : m.triangles) {
        const auto& p0 = m.nodes[t[0]];
        const auto& p1 = m.nodes[t[1]];
        const auto& p2 = m.nodes[t[2]];
        const double a2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        if (!(a2 > 0.0)) throw std::logic_error("build_mesh: non-positive triangle area");
        m.tri_area.push_back(0.5 * a2);
    }
    for (int n = 0; n < m.n_nodes(); ++n)
        if (m.on_boundary(n)) m.boundary_nodes.push_back(n);
    return m;
}

namespace detail {

inline std::vector<std::pair<int, int>> fem_pattern(const MeshCG1& mesh) {
    std::vector<std::pair<int, int>> pat;
    pat.reserve(mesh.n_triangles() * 9);
    for (const auto& t : mesh.triangles)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) pat.emplace_back(t[a], t[b]);
    return pat;
}

// Constant gradients of the three barycentric basis functions on a triangle:
// grad lambda_k = (b_k, c_k) / (2 A).
inline void basis_gradients(const MeshCG1& mesh, int tri, double grads[3][2]) {
    const auto& t = mesh.triangles[tri];
    const auto& p0 = mesh.nodes[t[0]];
    const auto& p1 = mesh.nodes[t[1]];
    const auto& p2 = mesh.nodes[t[2]];
    const double inv2A = 1.0 / (2.0 * mesh.tri_area[tri]);
    grads[0][0] = (p1[1] - p2[1]) * inv2A;
    grads[0][1] = (p2[0] - p1[0]) * inv2A;
    grads[1][0] = (p2[1] - p0[1]) * inv2A;
    grads[1][1] = (p0[0] - p2[0]) * inv2A;
    grads[2][0] = (p0[1] - p1[1]) * inv2A;
    grads[2][1] = (p1[0] - p0[0]) * inv2A;
}

}  // namespace detail

// Consistent CG1 mass matrix; symmetric positive definite, sum of all
// entries equals |Omega|.
inline SparseMatrix assemble_mass(const MeshCG1& mesh) {
    CsrAccumulator acc(mesh.n_nodes(), mesh.n_nodes(), detail::fem_pattern(mesh));
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const auto& t = mesh.triangles[tri];
        const double s = mesh.tri_area[tri] / 12.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) acc.add(t[a], t[b], (a == b ? 2.0 : 1.0) * s);
    }
    return acc.take();
}

// Stiffness matrix with a per-triangle scalar coefficient. Pure Neumann
// operator: every row sums to zero, constants lie in the kernel.
inline SparseMatrix assemble_stiffness(const MeshCG1& mesh, const std::vector<double>& coeff) {
    if (static_cast<int>(coeff.size()) != mesh.n_triangles())
        throw std::invalid_argument("assemble_stiffness: need one coefficient per triangle");
    for (double c : coeff)
        if (!std::isfinite(c)) throw std::invalid_argument("assemble_stiffness: non-finite coefficient");
    CsrAccumulator acc(mesh.n_nodes(), mesh.n_nodes(), detail::fem_pattern(mesh));
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const auto& t = mesh.triangles[tri];
        double g[3][2];
        detail::basis_gradients(mesh, tri, g);
        const double s = coeff[tri] * mesh.tri_area[tri];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                acc.add(t[a], t[b], s * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
    }
    return acc.take();
}

inline SparseMatrix assemble_stiffness_unit(const MeshCG1& mesh) {
    return assemble_stiffness(mesh, std::vector<double>(mesh.n_triangles(), 1.0));
}

// Row sums of the mass matrix: positive diagonal weights with sum |Omega|.
inline std::vector<double> lumped_mass(const MeshCG1& mesh) {
    std::vector<double> d(mesh.n_nodes(), 0.0);
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const double third = mesh.tri_area[tri] / 3.0;
        for (int a = 0; a < 3; ++a) d[mesh.triangles[tri][a]] += third;
    }
    return d;
}

// Per-triangle average of a nodal field (used to evaluate coefficients such
// as a(w) from nodal control values).
inline std::vector<double> triangle_average(const MeshCG1& mesh, const NodalField& nodal) {
    if (static_cast<int>(nodal.size()) != mesh.n_nodes())
        throw std::invalid_argument("triangle_average: field size mismatch");
    std::vector<double> out(mesh.n_triangles());
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const auto& t = mesh.triangles[tri];
        out[tri] = (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0;
    }
    return out;
}

struct FieldNorms {
    double l1 = 0, l2_sq = 0, h1_semi_sq = 0;
};

// Discrete norms with lumped weights for L1/L2 (the nodal-reflection trick:
// the interpolant of |w| has nodal values |w_i|) and the unit-coefficient
// stiffness energy for the H1 seminorm.
inline FieldNorms norms(const NodalField& field, const SparseMatrix& stiffness_unit,
                        const std::vector<double>& lumped) {
    if (field.size() != lumped.size()) throw std::invalid_argument("norms: field size mismatch");
    FieldNorms out;
    for (std::size_t i = 0; i < field.size(); ++i) {
        out.l1 += lumped[i] * std::abs(field[i]);
        out.l2_sq += lumped[i] * field[i] * field[i];
    }
    out.h1_semi_sq = stiffness_unit.quadratic(field);
    return out;
}

inline FieldNorms norms(const NodalField& field, const MeshCG1& mesh) {
    return norms(field, assemble_stiffness_unit(mesh), lumped_mass(mesh));
}

// Nodal interpolation of a callable.
inline NodalField interpolate(const MeshCG1& mesh, const std::function<double(double, double)>& f) {
    NodalField v(mesh.n_nodes());
    for (int n = 0; n < mesh.n_nodes(); ++n) v[n] = f(mesh.nodes[n][0], mesh.nodes[n][1]);
    return v;
}

// L2 projection onto the CG1 space using the consistent mass matrix. The
// load is integrated with mid-edge quadrature (exact for quadratics).
inline NodalField l2_project(const MeshCG1& mesh, const std::function<double(double, double)>& f,
                             const SolverOptions& opts = {1e-12, 10000}) {
    NodalField load(mesh.n_nodes(), 0.0);
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const auto& t = mesh.triangles[tri];
        const auto& p0 = mesh.nodes[t[0]];
        const auto& p1 = mesh.nodes[t[1]];
        const auto& p2 = mesh.nodes[t[2]];
        const double mx[3] = {0.5 * (p0[0] + p1[0]), 0.5 * (p1[0] + p2[0]), 0.5 * (p2[0] + p0[0])};
        const double my[3] = {0.5 * (p0[1] + p1[1]), 0.5 * (p1[1] + p2[1]), 0.5 * (p2[1] + p0[1])};
        const double fv[3] = {f(mx[0], my[0]), f(mx[1], my[1]), f(mx[2], my[2])};
        const double w = mesh.tri_area[tri] / 3.0;
        // basis value at mid-edge points: 1/2 on the two incident edges, 0 opposite
        load[t[0]] += w * 0.5 * (fv[0] + fv[2]);
        load[t[1]] += w * 0.5 * (fv[0] + fv[1]);
        load[t[2]] += w * 0.5 * (fv[1] + fv[2]);
    }
    const SparseMatrix M = assemble_mass(mesh);
    return cg_solve(M, load, NodalField(mesh.n_nodes(), 0.0), opts);
}

// Mesh plus the operators every module reuses: consistent mass, unit
// stiffness, lumped weights. Immutable after construction, safe to share.
struct Discretization {
    MeshCG1 mesh;
    SparseMatrix mass;
    SparseMatrix stiffness_unit;
    std::vector<double> lumped;

    static Discretization make(MeshCG1 m) {
        Discretization d;
        d.mass = assemble_mass(m);
        d.stiffness_unit = assemble_stiffness_unit(m);
        d.lumped = lumped_mass(m);
        d.mesh = std::move(m);
        return d;
    }

    int n_nodes() const { return mesh.n_nodes(); }
};

}  // namespace phasetr

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "phasetr/cg.hpp"
#include "phasetr/mesh.hpp"

namespace phasetr {

enum class ControlOperator { identity, mollifier };

// Source-control problem -nu Lap(u) = B w + f with homogeneous Dirichlet data.
struct EllipticConfig {
    double nu = 1.0;
    ControlOperator op = ControlOperator::identity;
    double mollifier_radius = 0.1;
    NodalField f;  // fixed nodal source; empty means zero

    void validate() const {
        if (!(nu > 0.0)) throw std::invalid_argument("EllipticConfig: nu must be > 0");
        if (op == ControlOperator::mollifier && !(mollifier_radius > 0.0))
            throw std::invalid_argument("EllipticConfig: mollifier radius must be > 0");
    }
};

// B w: identity, or a normalized discrete Gaussian convolution of the nodal
// values (kernel truncated at five radii). Maps constants to constants.
inline NodalField apply_control_op(const Discretization& disc, const EllipticConfig& cfg,
                                   const NodalField& w) {
    if (cfg.op == ControlOperator::identity) return w;
    const MeshCG1& mesh = disc.mesh;
    const int n = mesh.n_nodes();
    const double rho = cfg.mollifier_radius;
    const double cut2 = 25.0 * rho * rho;
    NodalField out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0, wsum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double dx = mesh.nodes[i][0] - mesh.nodes[j][0];
            const double dy = mesh.nodes[i][1] - mesh.nodes[j][1];
            const double r2 = dx * dx + dy * dy;
            if (r2 > cut2) continue;
            const double k = std::exp(-r2 / (2.0 * rho * rho)) * disc.lumped[j];
            acc += k * w[j];
            wsum += k;
        }
        out[i] = acc / wsum;
    }
    return out;
}

// Euclidean transpose of the matrix realized by apply_control_op.
inline NodalField apply_control_op_transpose(const Discretization& disc, const EllipticConfig& cfg,
                                             const NodalField& v) {
    if (cfg.op == ControlOperator::identity) return v;
    const MeshCG1& mesh = disc.mesh;
    const int n = mesh.n_nodes();
    const double rho = cfg.mollifier_radius;
    const double cut2 = 25.0 * rho * rho;
    std::vector<double> inv_norm(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double wsum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double dx = mesh.nodes[i][0] - mesh.nodes[j][0];
            const double dy = mesh.nodes[i][1] - mesh.nodes[j][1];
            const double r2 = dx * dx + dy * dy;
            if (r2 > cut2) continue;
            wsum += std::exp(-r2 / (2.0 * rho * rho)) * disc.lumped[j];
        }
        inv_norm[i] = 1.0 / wsum;
    }
    NodalField out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double vi = v[i] * inv_norm[i];
        for (int j = 0; j < n; ++j) {
            const double dx = mesh.nodes[i][0] - mesh.nodes[j][0];
            const double dy = mesh.nodes[i][1] - mesh.nodes[j][1];
            const double r2 = dx * dx + dy * dy;
            if (r2 > cut2) continue;
            out[j] += std::exp(-r2 / (2.0 * rho * rho)) * disc.lumped[j] * vi;
        }
    }
    return out;
}

// nu K_1 with symmetric elimination of the Dirichlet rows and columns
// (identity on the boundary block); stays SPD for CG.
inline SparseMatrix elliptic_operator(const Discretization& disc, double nu) {
    const MeshCG1& mesh = disc.mesh;
    SparseMatrix A = disc.stiffness_unit;
    for (double& v : A.values) v *= nu;
    std::vector<char> bd(mesh.n_nodes(), 0);
    for (int b : mesh.boundary_nodes) bd[b] = 1;
    for (int r = 0; r < A.n_rows; ++r) {
        for (int k = A.row_offsets[r]; k < A.row_offsets[r + 1]; ++k) {
            const int c = A.col_indices[k];
            if (bd[r] || bd[c]) A.values[k] = (r == c) ? 1.0 : 0.0;
        }
    }
    return A;
}

namespace detail {
inline void zero_boundary(const MeshCG1& mesh, NodalField& v) {
    for (int b : mesh.boundary_nodes) v[b] = 0.0;
}
}  // namespace detail

// Solves the state problem; the returned field vanishes exactly on the
// boundary nodes.
inline NodalField solve_elliptic(const Discretization& disc, const ControlField& w,
                                 const EllipticConfig& cfg, const SolverOptions& opts = {}) {
    cfg.validate();
    if (static_cast<int>(w.size()) != disc.n_nodes())
        throw std::invalid_argument("solve_elliptic: control size mismatch");
    NodalField source = apply_control_op(disc, cfg, w);
    if (!cfg.f.empty()) {
        if (cfg.f.size() != source.size())
            throw std::invalid_argument("solve_elliptic: f size mismatch");
        for (std::size_t i = 0; i < source.size(); ++i) source[i] += cfg.f[i];
    }
    NodalField rhs = disc.mass.multiply(source);
    detail::zero_boundary(disc.mesh, rhs);
    const SparseMatrix A = elliptic_operator(disc, cfg.nu);
    NodalField u = cg_solve(A, rhs, NodalField(disc.n_nodes(), 0.0), opts);
    detail::zero_boundary(disc.mesh, u);
    return u;
}

// Adjoint solve against an assembled dual load (already mass-weighted);
// same operator, zero Dirichlet data.
inline NodalField solve_elliptic_adjoint(const Discretization& disc, const NodalField& load,
                                         const EllipticConfig& cfg, const SolverOptions& opts = {}) {
    cfg.validate();
    if (static_cast<int>(load.size()) != disc.n_nodes())
        throw std::invalid_argument("solve_elliptic_adjoint: load size mismatch");
    NodalField rhs = load;
    detail::zero_boundary(disc.mesh, rhs);
    const SparseMatrix A = elliptic_operator(disc, cfg.nu);
    NodalField p = cg_solve(A, rhs, NodalField(disc.n_nodes(), 0.0), opts);
    detail::zero_boundary(disc.mesh, p);
    return p;
}

// Tracking misfit 1/2 || mask (u - u_d) ||_{L2}^2 with the consistent mass.
inline double elliptic_tracking(const Discretization& disc, const NodalField& u,
                                const NodalField& u_d, const NodalField& mask) {
    NodalField rho(disc.n_nodes());
    for (int i = 0; i < disc.n_nodes(); ++i) rho[i] = mask[i] * (u[i] - u_d[i]);
    return 0.5 * disc.mass.quadratic(rho);
}

// Reduced gradient of the tracking misfit as a Riesz representative in the
// lumped L2 metric: one adjoint solve, then B^T applied to the dual state.
inline NodalField elliptic_reduced_gradient(const Discretization& disc, const EllipticConfig& cfg,
                                            const NodalField& u, const NodalField& u_d,
                                            const NodalField& mask,
                                            const SolverOptions& opts = {}) {
    const int n = disc.n_nodes();
    NodalField rho(n);
    for (int i = 0; i < n; ++i) rho[i] = mask[i] * (u[i] - u_d[i]);
    NodalField load = disc.mass.multiply(rho);
    for (int i = 0; i < n; ++i) load[i] *= mask[i];
    const NodalField p = solve_elliptic_adjoint(disc, load, cfg, opts);
    NodalField g = apply_control_op_transpose(disc, cfg, disc.mass.multiply(p));
    for (int i = 0; i < n; ++i) g[i] /= disc.lumped[i];
    return g;
}

}  // namespace phasetr

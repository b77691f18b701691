#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "phasetr/mesh.hpp"
#include "phasetr/wave.hpp"

namespace phasetr {

struct GLParams {
    double epsilon = 1.0;
    double gamma = 1.0;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("GLParams: epsilon must be > 0");
        if (!(gamma > 0.0)) throw std::invalid_argument("GLParams: gamma must be > 0");
    }
};

namespace detail {
inline void check_box(const NodalField& w) {
    for (double v : w)
        if (v < -1e-12 || v > 1.0 + 1e-12)
            throw std::invalid_argument("ginzburg-landau: control leaves [0,1]; projection bug upstream");
}
}  // namespace detail

// Ginzburg-Landau energy (eps/2) w' K_1 w + (1/eps) sum d_i w_i (1 - w_i)
// with the double well integrated by lumped nodal quadrature.
inline double gl_energy(const NodalField& w, double eps, const SparseMatrix& stiffness_unit,
                        const std::vector<double>& lumped) {
    detail::check_box(w);
    double well = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = std::clamp(w[i], 0.0, 1.0);
        well += lumped[i] * v * (1.0 - v);
    }
    // the stiffness quadratic form is PSD; clamp roundoff so E >= 0 holds exactly
    return 0.5 * eps * std::max(0.0, stiffness_unit.quadratic(w)) + well / eps;
}

inline double gl_energy(const NodalField& w, double eps, const Discretization& disc) {
    return gl_energy(w, eps, disc.stiffness_unit, disc.lumped);
}

// Assembled derivative of gl_energy: eps K_1 w + (1/eps) d (1 - 2w). The
// directional derivative along xi is the plain dot product with xi.
inline NodalField gl_gradient(const NodalField& w, double eps, const SparseMatrix& stiffness_unit,
                              const std::vector<double>& lumped) {
    detail::check_box(w);
    NodalField g = stiffness_unit.multiply(w);
    for (std::size_t i = 0; i < w.size(); ++i)
        g[i] = eps * g[i] + lumped[i] * (1.0 - 2.0 * w[i]) / eps;
    return g;
}

inline NodalField gl_gradient(const NodalField& w, double eps, const Discretization& disc) {
    return gl_gradient(w, eps, disc.stiffness_unit, disc.lumped);
}

// Tracking misfit 1/2 int_0^T || mask (u - u_d) ||_{L2}^2 dt with the exact
// quadrature for the piecewise-linear-in-time trajectory.
inline double tracking_objective(const StateTrajectory& traj, const NodalField& u_d,
                                 const NodalField& focal_mask, const Discretization& disc) {
    const int n = disc.n_nodes();
    const int n_steps = traj.n_steps();
    if (n_steps < 1) throw std::invalid_argument("tracking_objective: empty trajectory");
    auto masked = [&](int k) {
        NodalField rho(n);
        for (int i = 0; i < n; ++i) {
            const double m = focal_mask.empty() ? 1.0 : focal_mask[i];
            rho[i] = m * (traj.frames[k][i] - (u_d.empty() ? 0.0 : u_d[i]));
        }
        return rho;
    };
    double j = 0.0;
    NodalField rho_prev = masked(0);
    NodalField m_prev = disc.mass.multiply(rho_prev);
    for (int k = 1; k <= n_steps; ++k) {
        NodalField rho = masked(k);
        NodalField m_cur = disc.mass.multiply(rho);
        j += (traj.tau / 6.0) * (dot(rho_prev, m_prev) + dot(rho_prev, m_cur) + dot(rho, m_cur));
        rho_prev = std::move(rho);
        m_prev = std::move(m_cur);
    }
    return j;
}

// Masked residual trajectory rho^k = mask (u^k - u_d), the adjoint data.
inline StateTrajectory tracking_residual(const StateTrajectory& traj, const NodalField& u_d,
                                         const NodalField& focal_mask) {
    StateTrajectory rho;
    rho.tau = traj.tau;
    rho.frames.reserve(traj.frames.size());
    for (const auto& frame : traj.frames) {
        NodalField r(frame.size());
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const double m = focal_mask.empty() ? 1.0 : focal_mask[i];
            r[i] = m * (frame[i] - (u_d.empty() ? 0.0 : u_d[i]));
        }
        rho.frames.push_back(std::move(r));
    }
    return rho;
}

// Riesz representative (lumped metric) of the reduced derivative
// j'(w) xi = -c^2 int_0^T int_Omega xi grad(u) . grad(p). The accumulation
// uses the scheme-consistent sigma-weighted frame combination, so the result
// is the exact derivative of the discrete objective; per-triangle densities
// are scattered to the vertices by area thirds.
inline NodalField reduced_gradient_wave(const Discretization& disc, const ControlField& w,
                                        const WaveConfig& cfg, const StateTrajectory& forward,
                                        const StateTrajectory& adjoint) {
    (void)w;
    const MeshCG1& mesh = disc.mesh;
    const int n_steps = forward.n_steps();
    if (adjoint.n_steps() != n_steps)
        throw std::invalid_argument("reduced_gradient_wave: trajectory shape mismatch");
    const double tau = forward.tau;
    const double sigma = cfg.sigma;

    const int n_tri = mesh.n_triangles();
    std::vector<double> grads(n_tri * 6);
    for (int tri = 0; tri < n_tri; ++tri) {
        double g[3][2];
        detail::basis_gradients(mesh, tri, g);
        for (int a = 0; a < 3; ++a) {
            grads[tri * 6 + 2 * a] = g[a][0];
            grads[tri * 6 + 2 * a + 1] = g[a][1];
        }
    }

    std::vector<double> density(n_tri, 0.0);  // sum_k grad(z_k) . grad(p^{k-1})
    for (int k = 1; k <= n_steps; ++k) {
        const NodalField& p = adjoint.frames[k - 1];
        const NodalField& uk = forward.frames[k];
        const NodalField& uk1 = forward.frames[k - 1];
        const NodalField* uk2 = k >= 2 ? &forward.frames[k - 2] : nullptr;
        const double w_cur = sigma;
        const double w_prev = k >= 2 ? 1.0 - 2.0 * sigma : 0.5 - sigma;
        for (int tri = 0; tri < n_tri; ++tri) {
            const auto& t = mesh.triangles[tri];
            double zx = 0.0, zy = 0.0, px = 0.0, py = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double gx = grads[tri * 6 + 2 * a], gy = grads[tri * 6 + 2 * a + 1];
                double zv = w_cur * uk[t[a]] + w_prev * uk1[t[a]];
                if (uk2) zv += sigma * (*uk2)[t[a]];
                zx += zv * gx;
                zy += zv * gy;
                px += p[t[a]] * gx;
                py += p[t[a]] * gy;
            }
            density[tri] += zx * px + zy * py;
        }
    }

    NodalField g(disc.n_nodes(), 0.0);
    for (int tri = 0; tri < n_tri; ++tri) {
        const double s = -tau * cfg.c_sq * mesh.tri_area[tri] / 3.0 * density[tri];
        for (int a = 0; a < 3; ++a) g[mesh.triangles[tri][a]] += s;
    }
    for (int i = 0; i < disc.n_nodes(); ++i) g[i] /= disc.lumped[i];
    return g;
}

struct InterfaceDiagnostics {
    double nonbinary_fraction = 0.0;  // lumped measure of nodes with w in [0.1, 0.9], over |Omega|
    double tv_binarized = 0.0;        // perimeter of the thresholded phase along triangle edges
};

// A triangle belongs to the thresholded phase when all three vertices exceed
// 0.5; the reported perimeter is the total length of interior edges whose
// two triangles disagree.
inline InterfaceDiagnostics interface_diagnostics(const NodalField& w, const Discretization& disc) {
    const MeshCG1& mesh = disc.mesh;
    InterfaceDiagnostics out;
    double band = 0.0;
    for (int i = 0; i < mesh.n_nodes(); ++i)
        if (w[i] >= 0.1 && w[i] <= 0.9) band += disc.lumped[i];
    out.nonbinary_fraction = band / mesh.area();

    std::vector<char> phase(mesh.n_triangles());
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const auto& t = mesh.triangles[tri];
        phase[tri] = (w[t[0]] > 0.5 && w[t[1]] > 0.5 && w[t[2]] > 0.5) ? 1 : 0;
    }
    std::map<std::pair<int, int>, std::pair<int, int>> edges;  // edge -> (tri, count)
    for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
        const auto& t = mesh.triangles[tri];
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = edges.try_emplace({a, b}, tri, 1);
            if (!inserted) {
                if (phase[it->second.first] != phase[tri]) {
                    const auto& pa = mesh.nodes[a];
                    const auto& pb = mesh.nodes[b];
                    out.tv_binarized += std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
                }
                ++it->second.second;
            }
        }
    }
    return out;
}

struct ObjectiveEval {
    double j_value = 0.0;
    double gl_energy = 0.0;
    double total = 0.0;  // j + gamma * gl_energy
    NodalField gradient;
};

}  // namespace phasetr

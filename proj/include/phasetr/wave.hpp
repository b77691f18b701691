#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "phasetr/cg.hpp"
#include "phasetr/mesh.hpp"

namespace phasetr {

// Ricker wavelet source, isotropic Gaussian bump in space.
struct SourceSpec {
    double amplitude = 1.0;
    double center_x = 0.0;
    double center_y = 0.0;
    double spatial_width = 0.1;
    double frequency = 1.0;  // central frequency f0
    double delay = 1.0;      // t0

    void validate() const {
        if (!(spatial_width > 0.0)) throw std::invalid_argument("SourceSpec: spatial_width must be > 0");
        if (!(frequency > 0.0)) throw std::invalid_argument("SourceSpec: frequency must be > 0");
        if (!std::isfinite(amplitude)) throw std::invalid_argument("SourceSpec: amplitude must be finite");
    }
};

inline double ricker(double t, const SourceSpec& spec) {
    const double a = M_PI * M_PI * spec.frequency * spec.frequency * (t - spec.delay) * (t - spec.delay);
    return spec.amplitude * (1.0 - 2.0 * a) * std::exp(-a);
}

inline NodalField source_profile(const MeshCG1& mesh, const SourceSpec& spec) {
    NodalField g(mesh.n_nodes());
    const double s2 = 2.0 * spec.spatial_width * spec.spatial_width;
    for (int n = 0; n < mesh.n_nodes(); ++n) {
        const double dx = mesh.nodes[n][0] - spec.center_x;
        const double dy = mesh.nodes[n][1] - spec.center_y;
        g[n] = std::exp(-(dx * dx + dy * dy) / s2);
    }
    return g;
}

// Strongly damped wave equation u_tt - div(a(w) grad u) - b Lap(u_t) = f
// with a(w) = c^2 (1 + w), homogeneous Neumann data.
struct WaveConfig {
    double c_sq = 20.0;
    double b = 1.25e-2;     // sound diffusivity
    double sigma = 0.25;    // time-stepping stabilization
    double t_final = 5.0;
    int n_steps = 256;
    SourceSpec source;
    NodalField u0, u1;  // initial nodal fields; empty means zero

    double tau() const { return t_final / n_steps; }

    void validate() const {
        if (!(c_sq > 0.0)) throw std::invalid_argument("WaveConfig: c_sq must be > 0");
        if (!(b > 0.0)) throw std::invalid_argument("WaveConfig: b must be > 0");
        if (!(sigma > 0.0)) throw std::invalid_argument("WaveConfig: sigma must be > 0");
        if (!(t_final > 0.0)) throw std::invalid_argument("WaveConfig: t_final must be > 0");
        if (n_steps < 2) throw std::invalid_argument("WaveConfig: n_steps must be >= 2");
        source.validate();
    }
};

struct StateTrajectory {
    std::vector<NodalField> frames;  // n_steps + 1 nodal fields
    double tau = 0.0;

    int n_steps() const { return static_cast<int>(frames.size()) - 1; }
};

// Step matrices of the piecewise-linear-in-time scheme written as
//   A u^k = B u^{k-1} + C u^{k-2} + load_k,           k >= 2,
//   A u^1 = F u^0 + tau M u_1 + load_1,
// with A = M + tau^2 sigma K_a + (b tau / 2) K_1,
//      B = 2 M - tau^2 (1 - 2 sigma) K_a,
//      C = -M - tau^2 sigma K_a + (b tau / 2) K_1,
//      F = M - tau^2 (1/2 - sigma) K_a + (b tau / 2) K_1.
// The adjoint scheme marches the same recursion in reverse time.
struct WaveOperators {
    SparseMatrix A, B, C, F;
    double tau = 0.0;

    static WaveOperators make(const Discretization& disc, const ControlField& w,
                              const WaveConfig& cfg) {
        cfg.validate();
        if (static_cast<int>(w.size()) != disc.n_nodes())
            throw std::invalid_argument("WaveOperators: control size mismatch");
        std::vector<double> coeff = triangle_average(disc.mesh, w);
        for (double& c : coeff) {
            c = cfg.c_sq * (1.0 + c);
            if (!(c > 0.0)) throw std::invalid_argument("WaveOperators: a(w) must stay positive");
        }
        const SparseMatrix Ka = assemble_stiffness(disc.mesh, coeff);
        const SparseMatrix& M = disc.mass;
        const SparseMatrix& K1 = disc.stiffness_unit;
        const double tau = cfg.tau();
        const double t2s = tau * tau * cfg.sigma;
        const double bt2 = 0.5 * cfg.b * tau;

        WaveOperators ops;
        ops.tau = tau;
        ops.A = M;
        ops.B = M;
        ops.C = M;
        ops.F = M;
        for (std::size_t k = 0; k < M.values.size(); ++k) {
            const double m = M.values[k], ka = Ka.values[k], k1 = K1.values[k];
            ops.A.values[k] = m + t2s * ka + bt2 * k1;
            ops.B.values[k] = 2.0 * m - tau * tau * (1.0 - 2.0 * cfg.sigma) * ka;
            ops.C.values[k] = -m - t2s * ka + bt2 * k1;
            ops.F.values[k] = m - tau * tau * (0.5 - cfg.sigma) * ka + bt2 * k1;
        }
        return ops;
    }
};

namespace detail {

// Shared two-level implicit march. loads[k-1] is the additive right-hand
// side of the step that produces frame k (k = 1..n_steps).
inline StateTrajectory march(const WaveOperators& ops, const SparseMatrix& mass,
                             const NodalField& u0, const NodalField& u1,
                             const std::vector<NodalField>& loads, const SolverOptions& opts) {
    const int n = ops.A.n_rows;
    const int n_steps = static_cast<int>(loads.size());
    StateTrajectory traj;
    traj.tau = ops.tau;
    traj.frames.reserve(n_steps + 1);
    traj.frames.push_back(u0.empty() ? NodalField(n, 0.0) : u0);

    auto guard = [](const NodalField& f) {
        for (double v : f) {
            if (!std::isfinite(v) || std::abs(v) > 1e12)
                throw std::runtime_error("wave march: frame norm exceeds blowup guard");
        }
    };
    guard(traj.frames[0]);

    // first step
    NodalField rhs = ops.F.multiply(traj.frames[0]);
    if (!u1.empty()) {
        const NodalField mu1 = mass.multiply(u1);
        axpy(ops.tau, mu1, rhs);
    }
    axpy(1.0, loads[0], rhs);
    traj.frames.push_back(cg_solve(ops.A, rhs, traj.frames[0], opts));
    guard(traj.frames[1]);

    for (int k = 2; k <= n_steps; ++k) {
        rhs = ops.B.multiply(traj.frames[k - 1]);
        const NodalField second = ops.C.multiply(traj.frames[k - 2]);
        axpy(1.0, second, rhs);
        axpy(1.0, loads[k - 1], rhs);
        traj.frames.push_back(cg_solve(ops.A, rhs, traj.frames[k - 1], opts));
        guard(traj.frames.back());
    }
    return traj;
}

// Time factors int r(t) e_{k-1}(t) dt for the source term, two-point Gauss
// quadrature per subinterval (exact to O(tau^4) for smooth r).
inline std::vector<double> hat_time_factors(const WaveConfig& cfg) {
    const double tau = cfg.tau();
    const int n_steps = cfg.n_steps;
    auto integrate = [&](double t_lo, int hat_index, bool rising) {
        // e(t) = (t - t_lo)/tau when rising, 1 - (t - t_lo)/tau when falling
        const double gp = 0.5 / std::sqrt(3.0);
        double sum = 0.0;
        for (double xi : {0.5 - gp, 0.5 + gp}) {
            const double t = t_lo + xi * tau;
            const double e = rising ? xi : 1.0 - xi;
            sum += 0.5 * tau * ricker(t, cfg.source) * e;
        }
        (void)hat_index;
        return sum;
    };
    std::vector<double> phi(n_steps, 0.0);
    // load_1 pairs with e_0 (falling only), load_k with e_{k-1}
    phi[0] = integrate(0.0, 0, false);
    for (int k = 2; k <= n_steps; ++k) {
        const int i = k - 1;
        phi[k - 1] = integrate((i - 1) * tau, i, true) + integrate(i * tau, i, false);
    }
    return phi;
}

}  // namespace detail

// Forward solve driven by the Ricker source of the configuration.
inline StateTrajectory solve_forward(const Discretization& disc, const ControlField& w,
                                     const WaveConfig& cfg, const SolverOptions& opts = {}) {
    const WaveOperators ops = WaveOperators::make(disc, w, cfg);
    const NodalField g = source_profile(disc.mesh, cfg.source);
    const NodalField mg = disc.mass.multiply(g);
    const std::vector<double> phi = detail::hat_time_factors(cfg);
    std::vector<NodalField> loads(cfg.n_steps);
    for (int k = 0; k < cfg.n_steps; ++k) {
        loads[k] = mg;
        for (double& v : loads[k]) v *= ops.tau * phi[k];
    }
    return detail::march(ops, disc.mass, cfg.u0, cfg.u1, loads, opts);
}

// Forward solve with caller-provided step loads (used by tests and by the
// adjoint, which is the same recursion in reverse time).
inline StateTrajectory solve_forward_loads(const Discretization& disc, const ControlField& w,
                                           const WaveConfig& cfg,
                                           const std::vector<NodalField>& loads,
                                           const SolverOptions& opts = {}) {
    if (static_cast<int>(loads.size()) != cfg.n_steps)
        throw std::invalid_argument("solve_forward_loads: need one load per step");
    const WaveOperators ops = WaveOperators::make(disc, w, cfg);
    return detail::march(ops, disc.mass, cfg.u0, cfg.u1, loads, opts);
}

// Dual loads tau * (int rho_nu e_k dt, phi) for k = 1..n_steps, with the
// focal mask applied on both sides of the mass weighting.
inline std::vector<NodalField> adjoint_loads(const Discretization& disc,
                                             const std::vector<NodalField>& rho, double tau,
                                             const NodalField& mask) {
    const int n_steps = static_cast<int>(rho.size()) - 1;
    const int n = disc.n_nodes();
    std::vector<NodalField> loads(n_steps);
    NodalField stencil(n);
    for (int k = 1; k <= n_steps; ++k) {
        if (k < n_steps) {
            for (int i = 0; i < n; ++i)
                stencil[i] = rho[k - 1][i] / 6.0 + 2.0 * rho[k][i] / 3.0 + rho[k + 1][i] / 6.0;
        } else {
            for (int i = 0; i < n; ++i) stencil[i] = rho[k - 1][i] / 6.0 + rho[k][i] / 3.0;
        }
        NodalField load = disc.mass.multiply(stencil);
        for (int i = 0; i < n; ++i) load[i] *= tau * tau * (mask.empty() ? 1.0 : mask[i]);
        loads[k - 1] = std::move(load);
    }
    return loads;
}

// Adjoint solve: marches backward from (p, p_t)|_{t=T} = (0, 0) with the
// damping sign flipped, which coincides with the forward recursion run in
// reverse time. `residual` holds the (already masked) tracking residual
// frames; `mask` restricts the dual load to the focal region.
inline StateTrajectory solve_adjoint(const Discretization& disc, const ControlField& w,
                                     const WaveConfig& cfg, const StateTrajectory& residual,
                                     const NodalField& mask = {}, const SolverOptions& opts = {}) {
    if (residual.n_steps() != cfg.n_steps)
        throw std::invalid_argument("solve_adjoint: residual shape mismatch");
    const WaveOperators ops = WaveOperators::make(disc, w, cfg);
    std::vector<NodalField> loads = adjoint_loads(disc, residual.frames, ops.tau, mask);
    std::reverse(loads.begin(), loads.end());
    const StateTrajectory reversed =
        detail::march(ops, disc.mass, NodalField(disc.n_nodes(), 0.0),
                      NodalField(), loads, opts);
    StateTrajectory adj;
    adj.tau = ops.tau;
    adj.frames.assign(reversed.frames.rbegin(), reversed.frames.rend());
    return adj;
}

}  // namespace phasetr

#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <string>

#include "phasetr/config.hpp"
#include "phasetr/elliptic.hpp"
#include "phasetr/field_io.hpp"
#include "phasetr/homotopy.hpp"
#include "phasetr/objective.hpp"
#include "phasetr/subproblem.hpp"
#include "phasetr/wave.hpp"

namespace phasetr {

inline NodalField focal_mask_field(const MeshCG1& mesh, const RunConfig::Objective& obj) {
    NodalField m(mesh.n_nodes(), 1.0);
    if (obj.focal_type == FocalKind::disk) {
        for (int i = 0; i < mesh.n_nodes(); ++i) {
            const double dx = mesh.nodes[i][0] - obj.focal_center_x;
            const double dy = mesh.nodes[i][1] - obj.focal_center_y;
            m[i] = (dx * dx + dy * dy <= obj.focal_radius * obj.focal_radius) ? 1.0 : 0.0;
        }
    }
    return m;
}

// Acoustic pressure tracking problem: j(w) is the focal misfit of the
// damped wave solve, the gradient comes from one adjoint solve.
class WaveProblem : public ProblemContext {
public:
    WaveProblem(const RunConfig& cfg)
        : disc_(Discretization::make(build_mesh(cfg.mesh.x_min, cfg.mesh.x_max, cfg.mesh.y_min,
                                                cfg.mesh.y_max, cfg.mesh.nx, cfg.mesh.ny))) {
        wcfg_.c_sq = cfg.physics.c_sq;
        wcfg_.b = cfg.physics.b;
        wcfg_.sigma = cfg.physics.sigma;
        wcfg_.t_final = cfg.time.t_final;
        wcfg_.n_steps = cfg.time.n_steps;
        wcfg_.source.amplitude = cfg.source.amplitude;
        wcfg_.source.center_x = cfg.source.center_x;
        wcfg_.source.center_y = cfg.source.center_y;
        wcfg_.source.spatial_width = cfg.source.spatial_width;
        wcfg_.source.frequency = cfg.source.frequency;
        wcfg_.source.delay = cfg.source.delay;
        solver_.tol = cfg.solver.tol;
        solver_.max_iter = cfg.solver.max_iter;
        mask_ = focal_mask_field(disc_.mesh, cfg.objective);
        u_d_.assign(disc_.n_nodes(), 0.0);
        if (cfg.objective.target_type == TargetKind::gaussian) {
            const auto& o = cfg.objective;
            for (int i = 0; i < disc_.n_nodes(); ++i) {
                const double dx = disc_.mesh.nodes[i][0] - o.target_center_x;
                const double dy = disc_.mesh.nodes[i][1] - o.target_center_y;
                u_d_[i] = o.target_amplitude *
                          std::exp(-(dx * dx + dy * dy) / (2.0 * o.target_width * o.target_width));
            }
        } else if (cfg.objective.target_type == TargetKind::binary_disk) {
            throw ConfigError("validation: objective.target_type binary_disk applies to elliptic");
        }
    }

    const Discretization& discretization() const override { return disc_; }
    const WaveConfig& wave_config() const { return wcfg_; }
    const NodalField& target() const { return u_d_; }
    const NodalField& mask() const { return mask_; }
    const SolverOptions& solver() const { return solver_; }

    double objective(const ControlField& w) const override {
        const StateTrajectory u = solve_forward(disc_, w, wcfg_, solver_);
        return tracking_objective(u, u_d_, mask_, disc_);
    }

    std::pair<double, NodalField> objective_and_gradient(const ControlField& w) const override {
        const StateTrajectory u = solve_forward(disc_, w, wcfg_, solver_);
        const double j = tracking_objective(u, u_d_, mask_, disc_);
        const StateTrajectory rho = tracking_residual(u, u_d_, mask_);
        const StateTrajectory p = solve_adjoint(disc_, w, wcfg_, rho, mask_, solver_);
        return {j, reduced_gradient_wave(disc_, w, wcfg_, u, p)};
    }

private:
    Discretization disc_;
    WaveConfig wcfg_;
    SolverOptions solver_;
    NodalField u_d_, mask_;
};

// Elliptic source-control problem; the primary correctness testbed.
class EllipticProblem : public ProblemContext {
public:
    EllipticProblem(const RunConfig& cfg)
        : disc_(Discretization::make(build_mesh(cfg.mesh.x_min, cfg.mesh.x_max, cfg.mesh.y_min,
                                                cfg.mesh.y_max, cfg.mesh.nx, cfg.mesh.ny))) {
        ecfg_.nu = cfg.physics.nu;
        ecfg_.op = cfg.physics.control_op == "mollifier" ? ControlOperator::mollifier
                                                         : ControlOperator::identity;
        ecfg_.mollifier_radius = cfg.physics.mollifier_radius;
        solver_.tol = cfg.solver.tol;
        solver_.max_iter = cfg.solver.max_iter;
        mask_ = focal_mask_field(disc_.mesh, cfg.objective);
        u_d_.assign(disc_.n_nodes(), 0.0);
        const auto& o = cfg.objective;
        if (o.target_type == TargetKind::gaussian) {
            for (int i = 0; i < disc_.n_nodes(); ++i) {
                const double dx = disc_.mesh.nodes[i][0] - o.target_center_x;
                const double dy = disc_.mesh.nodes[i][1] - o.target_center_y;
                u_d_[i] = o.target_amplitude *
                          std::exp(-(dx * dx + dy * dy) / (2.0 * o.target_width * o.target_width));
            }
        } else if (o.target_type == TargetKind::binary_disk) {
            // recovery target: the state produced by a binary disk control
            ControlField w_star(disc_.n_nodes(), 0.0);
            for (int i = 0; i < disc_.n_nodes(); ++i) {
                const double dx = disc_.mesh.nodes[i][0] - o.target_center_x;
                const double dy = disc_.mesh.nodes[i][1] - o.target_center_y;
                w_star[i] = (dx * dx + dy * dy <= o.target_radius * o.target_radius) ? 1.0 : 0.0;
            }
            u_d_ = solve_elliptic(disc_, w_star, ecfg_, solver_);
            for (double& v : u_d_) v *= o.target_amplitude;
        }
    }

    const Discretization& discretization() const override { return disc_; }
    const EllipticConfig& elliptic_config() const { return ecfg_; }
    const NodalField& target() const { return u_d_; }
    const NodalField& mask() const { return mask_; }

    double objective(const ControlField& w) const override {
        const NodalField u = solve_elliptic(disc_, w, ecfg_, solver_);
        return elliptic_tracking(disc_, u, u_d_, mask_);
    }

    std::pair<double, NodalField> objective_and_gradient(const ControlField& w) const override {
        const NodalField u = solve_elliptic(disc_, w, ecfg_, solver_);
        const double j = elliptic_tracking(disc_, u, u_d_, mask_);
        return {j, elliptic_reduced_gradient(disc_, ecfg_, u, u_d_, mask_, solver_)};
    }

private:
    Discretization disc_;
    EllipticConfig ecfg_;
    SolverOptions solver_;
    NodalField u_d_, mask_;
};

inline std::unique_ptr<ProblemContext> build_problem(const RunConfig& cfg) {
    if (cfg.problem == ProblemKind::wave) return std::make_unique<WaveProblem>(cfg);
    return std::make_unique<EllipticProblem>(cfg);
}

inline HomotopyParams homotopy_params_from(const RunConfig& cfg) {
    HomotopyParams p;
    p.delta0 = cfg.algorithm.delta0;
    p.eps0 = cfg.algorithm.eps0;
    p.r = cfg.algorithm.r;
    p.rho = cfg.algorithm.rho;
    p.kappa0 = cfg.algorithm.kappa0;
    p.delta_floor0 = cfg.algorithm.delta_floor0;
    p.gamma = cfg.objective.gamma;
    p.max_iter = cfg.algorithm.max_iter;
    p.max_seconds = cfg.solver.max_seconds;
    p.convex_only = cfg.algorithm.mode == AlgorithmMode::convex_only;
    p.n_starts = cfg.solver.n_starts;
    p.subproblem_tol = cfg.solver.subproblem_tol;
    p.subproblem_max_iter = cfg.solver.subproblem_max_iter;
    p.seed = cfg.seed;
    return p;
}

// Iteration log with the IterationRecord columns in declared order. The
// wall_time column is written as 0 unless wall-clock output was requested,
// keeping the file byte-identical across reruns of the same config + seed.
inline void write_iterations_csv(const std::string& path,
                                 const std::vector<IterationRecord>& records, bool wall_times) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "n,eps,delta,cvxflag,accepted,j_value,gl_energy,total,ared,pred,ratio,"
           "nonbinary_fraction,wall_time\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%.12g,%.12g,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      r.n, r.eps, r.delta, r.cvxflag, r.accepted ? 1 : 0, r.j_value, r.gl_energy,
                      r.total, r.ared, r.pred, r.ratio, r.nonbinary_fraction,
                      wall_times ? r.wall_time : 0.0);
        out << buf;
    }
}

inline void write_summary(const std::string& path, const RunResult& result, double seconds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    int accepted = 0;
    for (const auto& r : result.records) accepted += r.accepted ? 1 : 0;
    out << "iterations: " << result.records.size() << "\n";
    out << "accepted:   " << accepted << "\n";
    const char* reason = result.stop == StopReason::no_progress ? "no_progress"
                         : result.stop == StopReason::max_iterations ? "max_iterations"
                                                                     : "wall_time";
    out << "stop:       " << reason << "\n";
    out << "runtime_s:  " << seconds << "\n\n";
    out << "phase table (eps, accepted, pred_initial, pred_final, nonbinary_last_accept):\n";
    char buf[256];
    for (std::size_t k = 0; k < result.phases.size(); ++k) {
        const PhaseRecord& ph = result.phases[k];
        // nonbinary fraction of the last accepted iterate in this phase
        double nb = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : result.records)
            if (r.eps == ph.eps && r.accepted) nb = r.nonbinary_fraction;
        std::snprintf(buf, sizeof(buf), "%.6e  %4d  %.6e  %.6e  %.6e\n", ph.eps, ph.accepted,
                      ph.pred_initial, ph.pred_final, nb);
        out << buf;
    }
}

inline std::filesystem::path experiment_output_dir(const RunConfig& cfg) {
    const char* env = std::getenv("PHASETR_OUTPUT_DIR");
    return std::filesystem::path(env && *env ? env : cfg.output.dir);
}

// Runs the configured experiment; writes iterations.csv, summary.txt and the
// accepted-iterate field dumps into the output directory. Returns 0 on
// success, 2 on a runtime failure.
inline int run_experiment(const RunConfig& cfg, std::ostream& log = std::cout) {
    const auto dir = experiment_output_dir(cfg);
    std::filesystem::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::unique_ptr<ProblemContext> problem = build_problem(cfg);
        const HomotopyParams params = homotopy_params_from(cfg);
        const MeshCG1& mesh = problem->discretization().mesh;
        ControlField w0(problem->discretization().n_nodes(), cfg.algorithm.w0_value);

        HomotopyDriver driver(*problem, params, std::move(w0));
        if (cfg.output.dump_every_accept) {
            driver.set_accept_callback([&](int n, const ControlField& w) {
                write_field((dir / ("w_accept_" + std::to_string(n) + ".field")).string(), mesh, w);
            });
        }
        const RunResult result = driver.run();
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        write_iterations_csv((dir / "iterations.csv").string(), result.records,
                             cfg.output.wall_times);
        write_summary((dir / "summary.txt").string(), result, seconds);
        write_field((dir / "w_final.field").string(), mesh, result.w);
        log << "run finished: " << result.records.size() << " iterations, "
            << result.phases.size() << " epsilon phases, outputs in " << dir.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ofstream post((dir / "postmortem.txt").string());
        post << "error: " << e.what() << "\nelapsed_s: " << seconds << "\n";
        log << "error: " << e.what() << "\n";
        return 2;
    }
}

// Adjoint-vs-central-differences check on the configured problem; prints one
// line per direction and returns the maximum relative error.
inline double check_gradient(const RunConfig& cfg, std::ostream& log = std::cout,
                             int n_directions = 5) {
    RunConfig tight = cfg;
    tight.solver.tol = std::min(cfg.solver.tol, 1e-12);
    const std::unique_ptr<ProblemContext> problem = build_problem(tight);
    const int n = problem->discretization().n_nodes();
    const double h = cfg.problem == ProblemKind::elliptic ? 1e-5 : 1e-4;

    ControlField w(n, 0.0);
    std::mt19937_64 rng(cfg.seed * 7919ULL + 13);
    std::uniform_real_distribution<double> mid(0.3, 0.7), dir(-1.0, 1.0);
    for (double& v : w) v = mid(rng);

    const auto [j0, grad] = problem->objective_and_gradient(w);
    (void)j0;
    const auto& lumped = problem->discretization().lumped;

    double max_rel = 0.0;
    for (int k = 0; k < n_directions; ++k) {
        ControlField xi(n);
        for (double& v : xi) v = dir(rng);
        ControlField wp = w, wm = w;
        axpy(h, xi, wp);
        axpy(-h, xi, wm);
        const double fd = (problem->objective(wp) - problem->objective(wm)) / (2.0 * h);
        double directional = 0.0;
        for (int i = 0; i < n; ++i) directional += lumped[i] * grad[i] * xi[i];
        const double rel = std::abs(directional - fd) / std::max(std::abs(fd), 1e-300);
        max_rel = std::max(max_rel, rel);
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "direction %d: adjoint %.12e  central-fd %.12e  rel %.3e\n", k, directional,
                      fd, rel);
        log << buf;
    }
    log << "max relative error: " << max_rel << "\n";
    return max_rel;
}

}  // namespace phasetr

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "phasetr/objective.hpp"
#include "phasetr/subproblem.hpp"

namespace phasetr {

struct HomotopyParams {
    double delta0 = 1.5;         // reset trust-region radius
    double eps0 = 1.0;           // initial interface parameter
    double r = 5.0;              // epsilon division factor, must exceed 4
    double rho = 1e-4;           // sufficient-decrease threshold
    double kappa0 = 1e-8;        // initial ared floor factor
    double delta_floor0 = 1.14e-5;
    double gamma = 1.0;          // regularization weight
    int max_iter = 1000;
    double max_seconds = std::numeric_limits<double>::infinity();
    bool convex_only = true;     // solve the convex subproblem in both flag states
    int n_starts = 4;
    double subproblem_tol = 1e-9;
    int subproblem_max_iter = 5000;
    double pred_tol = 1e-14;     // pred at or below this counts as rejection
    std::uint64_t seed = 0;

    void validate() const {
        if (!(delta0 > 0.0)) throw std::invalid_argument("homotopy: requires delta0 > 0");
        if (!(eps0 > 0.0)) throw std::invalid_argument("homotopy: requires eps0 > 0");
        if (!(r > 4.0)) throw std::invalid_argument("homotopy: requires r > 4");
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("homotopy: requires rho in (0,1)");
        if (!(kappa0 > 0.0 && kappa0 < rho))
            throw std::invalid_argument("homotopy: requires rho > kappa0 > 0");
        if (!(delta_floor0 > 0.0 && delta_floor0 < delta0))
            throw std::invalid_argument("homotopy: requires delta_floor0 in (0, delta0)");
        if (!(gamma > 0.0)) throw std::invalid_argument("homotopy: requires gamma > 0");
        if (max_iter < 1) throw std::invalid_argument("homotopy: requires max_iter >= 1");
        if (n_starts < 1) throw std::invalid_argument("homotopy: requires n_starts >= 1");
    }
};

// Reduced problem seen by the driver: objective j(w) and its Riesz
// representative in the lumped L2 metric.
class ProblemContext {
public:
    virtual ~ProblemContext() = default;
    virtual const Discretization& discretization() const = 0;
    virtual double objective(const ControlField& w) const = 0;
    virtual std::pair<double, NodalField> objective_and_gradient(const ControlField& w) const = 0;
};

struct IterationRecord {
    int n = 0;
    double eps = 0.0;
    double delta = 0.0;
    int cvxflag = 1;
    bool accepted = false;
    double j_value = 0.0;
    double gl_energy = 0.0;
    double total = 0.0;
    double ared = 0.0;
    double pred = 0.0;
    double ratio = 0.0;  // ared/pred when pred > pred_tol, else 0
    double nonbinary_fraction = 0.0;
    double wall_time = 0.0;  // seconds spent in this iteration
};

struct PhaseRecord {
    double eps = 0.0;
    int accepted = 0;
    double pred_initial = 0.0;  // convex pred at the reset radius, phase start
    double pred_final = 0.0;    // same surrogate at the last iterate of the phase
};

enum class StopReason { no_progress, max_iterations, wall_time };

struct RunResult {
    ControlField w;
    std::vector<IterationRecord> records;
    std::vector<PhaseRecord> phases;
    StopReason stop = StopReason::no_progress;
};

struct TrustRegionState {
    int n = 0;
    ControlField w;
    double delta = 0.0;
    double delta_floor = 0.0;
    double eps = 0.0;
    double kappa = 0.0;
    int cvxflag = 1;
    NodalField grad_cache;
    double j_cache = 0.0;
    bool grad_valid = false;
    int reductions = 0;  // k in eps = eps0 r^{-k}
};

// Actual reduction j(w) + gamma E_eps(w) - j(v) - gamma E_eps(v), each term
// from a fresh objective evaluation.
inline double ared(const ProblemContext& problem, double gamma, const ControlField& w,
                   const ControlField& v, double eps) {
    const Discretization& disc = problem.discretization();
    return problem.objective(w) + gamma * gl_energy(w, eps, disc) -
           (problem.objective(v) + gamma * gl_energy(v, eps, disc));
}

// pred of the convex subproblem at the reset radius Delta^0; the paper's
// first-order instationarity surrogate.
inline double instationarity_surrogate(const ProblemContext& problem, const HomotopyParams& params,
                                       const ControlField& w, const NodalField& grad, double eps,
                                       double lambda_max = 0.0) {
    const Discretization& disc = problem.discretization();
    SubproblemSpec spec;
    spec.stiffness = &disc.stiffness_unit;
    spec.weights = &disc.lumped;
    spec.w_bar = w;
    spec.g = grad;
    spec.delta = params.delta0;
    spec.gl = {eps, params.gamma};
    spec.variant = SubproblemVariant::convex;
    spec.lambda_max = lambda_max;
    return 0.0 - solve_convex(spec, params.subproblem_tol, params.subproblem_max_iter).objective_value;
}

// Homotopy trust-region driver. One step() call performs a single
// subproblem solve, the acceptance test, and the radius/floor/epsilon
// cascade; run() iterates until the no-progress rule or a cap fires.
class HomotopyDriver {
public:
    using AcceptCallback = std::function<void(int, const ControlField&)>;

    HomotopyDriver(const ProblemContext& problem, const HomotopyParams& params, ControlField w0)
        : problem_(problem), params_(params) {
        params_.validate();
        const Discretization& disc = problem.discretization();
        if (static_cast<int>(w0.size()) != disc.n_nodes())
            throw std::invalid_argument("homotopy: initial control size mismatch");
        for (double v : w0)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("homotopy: initial control must lie in [0,1]");
        state_.w = std::move(w0);
        state_.delta = params_.delta0;
        state_.delta_floor = params_.delta_floor0;
        state_.eps = params_.eps0;
        state_.kappa = params_.kappa0;
        lambda_max_ = lambda_max_weighted(disc.stiffness_unit, disc.lumped);
    }

    const TrustRegionState& state() const { return state_; }
    const std::vector<PhaseRecord>& phases() const { return phases_; }
    bool stopped() const { return stopped_; }
    StopReason stop_reason() const { return stop_reason_; }
    void set_accept_callback(AcceptCallback cb) { on_accept_ = std::move(cb); }

    // Overrides the state for targeted tests of the update cascade.
    void force_state(double delta, double delta_floor, double eps, double kappa, int cvxflag) {
        state_.delta = delta;
        state_.delta_floor = delta_floor;
        state_.eps = eps;
        state_.kappa = kappa;
        state_.cvxflag = cvxflag;
    }

    IterationRecord step() {
        const auto t_start = std::chrono::steady_clock::now();
        const Discretization& disc = problem_.discretization();
        ensure_gradient();
        if (phases_.empty()) open_phase();

        SubproblemSpec spec;
        spec.stiffness = &disc.stiffness_unit;
        spec.weights = &disc.lumped;
        spec.w_bar = state_.w;
        spec.g = state_.grad_cache;
        spec.delta = state_.delta;
        spec.gl = {state_.eps, params_.gamma};
        spec.lambda_max = lambda_max_;

        SubproblemResult sub;
        const bool nonconvex_solve = state_.cvxflag == 0 && !params_.convex_only;
        if (nonconvex_solve) {
            spec.variant = SubproblemVariant::nonconvex;
            sub = solve_nonconvex(spec, params_.subproblem_tol, params_.n_starts,
                                  params_.seed + static_cast<std::uint64_t>(state_.n),
                                  params_.subproblem_max_iter);
        } else {
            spec.variant = SubproblemVariant::convex;
            sub = solve_convex(spec, params_.subproblem_tol, params_.subproblem_max_iter);
        }
        const double pred = 0.0 - sub.objective_value;

        const double j_cand = problem_.objective(sub.w_star);
        const double e_cur = gl_energy(state_.w, state_.eps, disc);
        const double e_cand = gl_energy(sub.w_star, state_.eps, disc);
        const double total_cur = state_.j_cache + params_.gamma * e_cur;
        const double total_cand = j_cand + params_.gamma * e_cand;
        const double ared_val = total_cur - total_cand;

        const bool accepted = pred > params_.pred_tol && ared_val >= params_.rho * pred &&
                              ared_val > state_.kappa * state_.delta_floor;

        IterationRecord rec;
        rec.n = state_.n;
        rec.eps = state_.eps;
        rec.delta = state_.delta;
        rec.cvxflag = state_.cvxflag;
        rec.accepted = accepted;
        rec.ared = ared_val;
        rec.pred = pred;
        rec.ratio = pred > params_.pred_tol ? ared_val / pred : 0.0;

        if (accepted) {
            state_.w = sub.w_star;
            state_.j_cache = j_cand;
            state_.grad_valid = false;
            state_.delta = std::min(params_.delta0, 2.0 * state_.delta);
            state_.cvxflag = 1;
            ++phases_.back().accepted;
            rec.j_value = j_cand;
            rec.gl_energy = e_cand;
            rec.total = total_cand;
            if (on_accept_) on_accept_(state_.n, state_.w);
        } else {
            state_.delta *= 0.5;
            rec.j_value = state_.j_cache;
            rec.gl_energy = e_cur;
            rec.total = total_cur;
        }

        if (state_.delta < state_.delta_floor && state_.cvxflag == 1) {
            state_.cvxflag = 0;
            state_.delta = params_.delta0;
        } else if (state_.delta < state_.delta_floor) {
            // epsilon reduction: close the phase, couple the schedules
            ensure_gradient();
            phases_.back().pred_final = instationarity_surrogate(
                problem_, params_, state_.w, state_.grad_cache, state_.eps, lambda_max_);
            const bool no_progress = phases_.back().accepted == 0;
            state_.cvxflag = 1;
            state_.delta = params_.delta0;
            state_.delta_floor *= 0.5;
            state_.kappa *= 0.5;
            state_.eps /= params_.r;
            ++state_.reductions;
            if (no_progress) {
                stopped_ = true;
                stop_reason_ = StopReason::no_progress;
            } else {
                open_phase();
            }
        }

        rec.nonbinary_fraction = interface_diagnostics(state_.w, disc).nonbinary_fraction;
        ++state_.n;
        rec.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return rec;
    }

    RunResult run() {
        RunResult result;
        const auto t0 = std::chrono::steady_clock::now();
        while (!stopped_) {
            if (state_.n >= params_.max_iter) {
                stopped_ = true;
                stop_reason_ = StopReason::max_iterations;
                break;
            }
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (elapsed > params_.max_seconds) {
                stopped_ = true;
                stop_reason_ = StopReason::wall_time;
                break;
            }
            result.records.push_back(step());
        }
        if (!phases_.empty() && phases_.back().pred_final == 0.0 &&
            stop_reason_ != StopReason::no_progress) {
            ensure_gradient();
            phases_.back().pred_final = instationarity_surrogate(
                problem_, params_, state_.w, state_.grad_cache, state_.eps, lambda_max_);
        }
        result.w = state_.w;
        result.phases = phases_;
        result.stop = stop_reason_;
        return result;
    }

private:
    void ensure_gradient() {
        if (!state_.grad_valid) {
            auto [j, g] = problem_.objective_and_gradient(state_.w);
            state_.j_cache = j;
            state_.grad_cache = std::move(g);
            state_.grad_valid = true;
        }
    }

    void open_phase() {
        ensure_gradient();
        PhaseRecord phase;
        phase.eps = state_.eps;
        phase.pred_initial = instationarity_surrogate(problem_, params_, state_.w,
                                                      state_.grad_cache, state_.eps, lambda_max_);
        phases_.push_back(phase);
    }

    const ProblemContext& problem_;
    HomotopyParams params_;
    TrustRegionState state_;
    std::vector<PhaseRecord> phases_;
    bool stopped_ = false;
    StopReason stop_reason_ = StopReason::no_progress;
    double lambda_max_ = 0.0;
    AcceptCallback on_accept_;
};

inline RunResult run_homotopy(const ProblemContext& problem, const HomotopyParams& params,
                              ControlField w0,
                              HomotopyDriver::AcceptCallback on_accept = nullptr) {
    HomotopyDriver driver(problem, params, std::move(w0));
    if (on_accept) driver.set_accept_callback(std::move(on_accept));
    return driver.run();
}

}  // namespace phasetr

// Acceptance suite: one criterion per invocation argument (1..8), all by
// default. Prints one PASS/FAIL line per criterion; exits nonzero when any
// criterion fails. Tolerances and runtime limits are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "phasetr/config.hpp"
#include "phasetr/experiment.hpp"
#include "phasetr/homotopy.hpp"
#include "phasetr/objective.hpp"
#include "phasetr/subproblem.hpp"

using namespace phasetr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string config_dir() { return std::string(PHASETR_SOURCE_DIR) + "/configs/"; }

// ---------------------------------------------------------------- C1/C2

Outcome criterion_gradient_elliptic() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg;
    cfg.problem = ProblemKind::elliptic;
    cfg.mesh = {0, 1, 0, 1, 8, 8};
    cfg.physics.nu = 0.1;
    cfg.objective.gamma = 1e-6;
    cfg.objective.focal_type = FocalKind::all;
    cfg.objective.target_type = TargetKind::binary_disk;
    cfg.objective.target_amplitude = 1.0;
    cfg.objective.target_center_x = 0.45;
    cfg.objective.target_center_y = 0.55;
    cfg.objective.target_radius = 0.25;
    std::ostringstream sink;
    const double rel = check_gradient(cfg, sink, 5);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = rel <= 1e-6 && secs < 5.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max rel err %.3e (tol 1e-6), %.2f s (limit 5 s)", rel, secs);
    o.detail = buf;
    return o;
}

Outcome criterion_gradient_wave() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg;
    cfg.problem = ProblemKind::wave;
    cfg.mesh = {-1, 1, -1, 2, 16, 16};
    cfg.time = {5.0, 32};
    cfg.physics.c_sq = 20.0;
    cfg.physics.b = 1.25e-2;
    cfg.physics.sigma = 0.25;
    cfg.source = {300.0, 0.0, -0.5, 0.1, 1.0, 1.0};
    cfg.objective.gamma = 7.5e-6;
    cfg.objective.focal_type = FocalKind::disk;
    cfg.objective.focal_center_x = 0.0;
    cfg.objective.focal_center_y = 1.25;
    cfg.objective.focal_radius = 0.3;
    cfg.objective.target_type = TargetKind::gaussian;
    cfg.objective.target_amplitude = 0.6;
    cfg.objective.target_center_x = 0.0;
    cfg.objective.target_center_y = 1.25;
    cfg.objective.target_width = 0.15;
    std::ostringstream sink;
    const double rel = check_gradient(cfg, sink, 5);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = rel <= 1e-3 && secs < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max rel err %.3e (tol 1e-3), %.2f s (limit 60 s)", rel, secs);
    o.detail = buf;
    return o;
}

// ------------------------------------------------------------------- C3

double optimal_profile(double s) {
    const double half_width = M_PI / (2.0 * std::sqrt(2.0));
    if (s <= -half_width) return 0.0;
    if (s >= half_width) return 1.0;
    return 0.5 * (1.0 + std::sin(std::sqrt(2.0) * s));
}

Outcome criterion_modica_mortola() {
    const auto t0 = std::chrono::steady_clock::now();
    // C0 by quadrature of int_0^1 sqrt(2 s (1-s)) ds (composite Simpson)
    double c0 = 0.0;
    {
        const int n = 200000;
        const double h = 1.0 / n;
        auto f = [](double s) { return std::sqrt(std::max(0.0, 2.0 * s * (1.0 - s))); };
        c0 = f(0.0) + f(1.0);
        for (int k = 1; k < n; ++k) c0 += (k % 2 ? 4.0 : 2.0) * f(k * h);
        c0 *= h / 3.0;
    }
    // strip (0,1) x (0,2): straight vertical interface of length L = 2
    const Discretization disc = Discretization::make(build_mesh(0, 1, 0, 2, 400, 4));
    const double L = 2.0;
    double errs[3] = {0, 0, 0};
    const double eps_list[3] = {0.2, 0.1, 0.05};
    for (int k = 0; k < 3; ++k) {
        const double eps = eps_list[k];
        const NodalField w = interpolate(
            disc.mesh, [&](double x, double) { return optimal_profile((x - 0.5) / eps); });
        errs[k] = std::abs(gl_energy(w, eps, disc) - c0 * L) / (c0 * L);
    }
    const double secs = seconds_since(t0);
    Outcome o;
    const bool monotone = errs[0] <= errs[1] && errs[1] <= errs[2];
    o.pass = errs[2] <= 0.05 && monotone && std::abs(c0 - 0.5554) < 1e-4 && secs < 30.0;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "C0 %.6f, rel errs %.2e/%.2e/%.2e for eps 0.2/0.1/0.05 "
                  "(tol 5%% at 0.05, decreasing in eps), %.2f s (limit 30 s)",
                  c0, errs[0], errs[1], errs[2], secs);
    o.detail = buf;
    return o;
}

// ------------------------------------------------------------------- C4

NodalField oracle_project(const NodalField& c, const NodalField& wb, double delta,
                          const std::vector<double>& d) {
    auto pt = [&](double lam, NodalField& out) {
        for (std::size_t i = 0; i < c.size(); ++i)
            out[i] = std::clamp((c[i] + lam * wb[i]) / (1.0 + lam), 0.0, 1.0);
    };
    auto ball = [&](const NodalField& w) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += d[i] * (w[i] - wb[i]) * (w[i] - wb[i]);
        return s;
    };
    NodalField w(c.size());
    pt(0.0, w);
    if (ball(w) <= delta) return w;
    double lo = 0.0, hi = 1.0;
    NodalField t(c.size());
    while (true) {
        pt(hi, t);
        if (ball(t) <= delta) break;
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        pt(mid, t);
        (ball(t) > delta ? lo : hi) = mid;
    }
    pt(hi, w);
    return w;
}

double convex_model_value(const SubproblemSpec& s, const NodalField& w) {
    const auto& d = *s.weights;
    const double ge = s.gl.gamma / s.gl.epsilon;
    double lin = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        lin += d[i] * (s.g[i] + ge * (1.0 - 2.0 * s.w_bar[i])) * (w[i] - s.w_bar[i]);
    return lin + 0.5 * s.gl.gamma * s.gl.epsilon *
                     (s.stiffness->quadratic(w) - s.stiffness->quadratic(s.w_bar));
}

double nonconvex_model_value(const SubproblemSpec& s, const NodalField& w) {
    const auto& d = *s.weights;
    double lin = 0.0, well = 0.0, well_bar = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        lin += d[i] * s.g[i] * (w[i] - s.w_bar[i]);
        well += d[i] * w[i] * (1.0 - w[i]);
        well_bar += d[i] * s.w_bar[i] * (1.0 - s.w_bar[i]);
    }
    return lin + s.gl.gamma *
                     (0.5 * s.gl.epsilon *
                          (s.stiffness->quadratic(w) - s.stiffness->quadratic(s.w_bar)) +
                      (well - well_bar) / s.gl.epsilon);
}

Outcome criterion_subproblem_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(987654321);
    std::uniform_real_distribution<double> u01(0.0, 1.0), un(-1.0, 1.0), ud(0.5, 2.0);

    // 50 random convex instances with n <= 20 nodes against a long-run
    // projected-gradient reference
    const std::pair<int, int> shapes[] = {{1, 1}, {2, 2}, {3, 2}, {3, 3}, {4, 3}};
    double worst_convex = 0.0;
    bool all_nonpositive = true;
    for (int trial = 0; trial < 50; ++trial) {
        const auto [nx, ny] = shapes[trial % 5];
        const Discretization disc = Discretization::make(build_mesh(0, 1, 0, 1, nx, ny));
        SubproblemSpec spec;
        spec.stiffness = &disc.stiffness_unit;
        spec.weights = &disc.lumped;
        spec.w_bar.resize(disc.n_nodes());
        spec.g.resize(disc.n_nodes());
        for (double& v : spec.w_bar) v = u01(rng);
        for (double& v : spec.g) v = un(rng);
        spec.delta = 0.02 + 0.4 * u01(rng);
        spec.gl = {0.05 + u01(rng), 0.1 + u01(rng)};
        const SubproblemResult res = solve_convex(spec, 1e-11, 50000);
        all_nonpositive = all_nonpositive && res.objective_value <= 0.0;

        // reference: plain projected gradient, 200k iterations
        const double L =
            std::max(spec.gl.gamma * spec.gl.epsilon *
                         lambda_max_weighted(*spec.stiffness, *spec.weights),
                     1e-12);
        const double step = 1.0 / (1.05 * L);
        NodalField w = spec.w_bar, cand(w.size());
        const double ge = spec.gl.gamma / spec.gl.epsilon;
        double window_value = convex_model_value(spec, w);
        for (int it = 0; it < 200000; ++it) {
            const NodalField Kw = spec.stiffness->multiply(w);
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double grad = spec.g[i] + ge * (1.0 - 2.0 * spec.w_bar[i]) +
                                    spec.gl.gamma * spec.gl.epsilon * Kw[i] / disc.lumped[i];
                cand[i] = w[i] - step * grad;
            }
            w = oracle_project(cand, spec.w_bar, spec.delta, disc.lumped);
            if (it % 1000 == 999) {  // stagnation exit, far below the 1e-6 comparison
                const double v = convex_model_value(spec, w);
                if (std::abs(v - window_value) <= 1e-15 * (1.0 + std::abs(v))) break;
                window_value = v;
            }
        }
        worst_convex = std::max(worst_convex,
                                std::abs(res.objective_value - convex_model_value(spec, w)));
    }

    // 20 random 2-node nonconvex instances against exhaustive grid search
    double worst_nonconvex = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> d{ud(rng), ud(rng)};
        CsrAccumulator acc(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
        const double k = 0.5 + u01(rng);
        acc.add(0, 0, k);
        acc.add(1, 1, k);
        acc.add(0, 1, -k);
        acc.add(1, 0, -k);
        const SparseMatrix K = acc.take();
        SubproblemSpec spec;
        spec.variant = SubproblemVariant::nonconvex;
        spec.stiffness = &K;
        spec.weights = &d;
        spec.w_bar = {u01(rng), u01(rng)};
        spec.g = {un(rng), un(rng)};
        double reach = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double far = std::max(spec.w_bar[i], 1.0 - spec.w_bar[i]);
            reach += d[i] * far * far;
        }
        spec.delta = reach * (1.2 + u01(rng));
        spec.gl = {0.05 + 0.1 * u01(rng), 0.5 + u01(rng)};

        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a <= 1000; ++a) {
            for (int b = 0; b <= 1000; ++b) {
                const NodalField w{a / 1000.0, b / 1000.0};
                if (weighted_ball_sq(w, spec.w_bar, d) > spec.delta) continue;
                best = std::min(best, nonconvex_model_value(spec, w));
            }
        }
        const SubproblemResult res = solve_nonconvex(spec, 1e-12, 12, trial);
        all_nonpositive = all_nonpositive && res.objective_value <= 0.0;
        worst_nonconvex = std::max(worst_nonconvex, std::abs(res.objective_value - best));
    }

    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst_convex <= 1e-6 && worst_nonconvex <= 1e-4 && all_nonpositive && secs < 30.0;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "convex worst dev %.2e (tol 1e-6), nonconvex worst dev %.2e (tol 1e-4), "
                  "objectives nonpositive %s, %.2f s (limit 30 s)",
                  worst_convex, worst_nonconvex, all_nonpositive ? "yes" : "NO", secs);
    o.detail = buf;
    return o;
}

// ------------------------------------------------------------------- C5

class QuadraticProblem : public ProblemContext {
public:
    QuadraticProblem(int nx, double target)
        : disc_(Discretization::make(build_mesh(0, 1, 0, 1, nx, nx))), target_(target) {}
    const Discretization& discretization() const override { return disc_; }
    double objective(const ControlField& w) const override {
        double s = 0.0;
        for (int i = 0; i < disc_.n_nodes(); ++i)
            s += 0.5 * disc_.lumped[i] * (w[i] - target_) * (w[i] - target_);
        return s;
    }
    std::pair<double, NodalField> objective_and_gradient(const ControlField& w) const override {
        NodalField g(disc_.n_nodes());
        for (int i = 0; i < disc_.n_nodes(); ++i) g[i] = w[i] - target_;
        return {objective(w), g};
    }

private:
    Discretization disc_;
    double target_;
};

Outcome criterion_algorithm_invariants() {
    const auto t0 = std::chrono::steady_clock::now();
    const QuadraticProblem prob(8, 0.3);
    HomotopyParams p;
    p.delta0 = 1.5;
    p.eps0 = 1.0;
    p.r = 5.0;
    p.rho = 1e-4;
    p.kappa0 = 1e-8;
    p.delta_floor0 = 1e-3;
    p.gamma = 1e-3;
    p.max_iter = 5000;  // effectively disabled; termination comes from the rule
    p.subproblem_tol = 1e-10;
    const RunResult res =
        run_homotopy(prob, p, ControlField(prob.discretization().n_nodes(), 0.5));

    bool monotone = true;
    for (std::size_t i = 1; i < res.records.size(); ++i)
        if (res.records[i].eps == res.records[i - 1].eps &&
            res.records[i].total > res.records[i - 1].total * (1.0 + 1e-12) + 1e-15)
            monotone = false;

    bool phases_end = res.stop == StopReason::no_progress;
    {
        std::map<double, int> phase_len;
        for (const auto& rec : res.records) ++phase_len[rec.eps];
        for (const auto& [eps, len] : phase_len) phases_end = phases_end && len <= 500;
    }

    bool coupling = true;
    {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < res.phases.size(); ++k) {
            const double floor_k = p.delta_floor0 * std::pow(0.5, static_cast<double>(k));
            const double c = res.phases[k].eps / (floor_k * floor_k);
            coupling = coupling && c < prev;
            prev = c;
        }
    }

    bool flags = true;
    for (const auto& rec : res.records) {
        const double k = std::round(std::log(p.eps0 / rec.eps) / std::log(p.r));
        const double kappa = p.kappa0 * std::pow(0.5, k);
        const double floor = p.delta_floor0 * std::pow(0.5, k);
        const bool should = rec.pred > p.pred_tol && rec.ared >= p.rho * rec.pred &&
                            rec.ared > kappa * floor;
        flags = flags && (rec.accepted == should);
    }

    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = monotone && phases_end && coupling && flags && secs < 20.0;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "monotone-in-phase %s, phases-terminate %s, schedule-coupling %s, "
                  "acceptance-flags %s, %zu iterations, %.2f s (limit 20 s)",
                  monotone ? "yes" : "NO", phases_end ? "yes" : "NO", coupling ? "yes" : "NO",
                  flags ? "yes" : "NO", res.records.size(), secs);
    o.detail = buf;
    return o;
}

// ------------------------------------------------------------------- C6

Outcome criterion_scaled_wave_experiment() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = load_config(config_dir() + "desk_wave.cfg");
    const std::unique_ptr<ProblemContext> problem = build_problem(cfg);
    const HomotopyParams params = homotopy_params_from(cfg);
    const RunResult res = run_homotopy(
        *problem, params, ControlField(problem->discretization().n_nodes(), cfg.algorithm.w0_value));
    const double secs = seconds_since(t0);

    const bool enough_phases = res.phases.size() >= 3 && secs < 900.0;

    // nonbinary fraction of the last accepted iterate per phase, phases with accepts
    std::vector<double> nb;
    for (const auto& ph : res.phases) {
        if (ph.accepted == 0) continue;
        double last = -1.0;
        for (const auto& rec : res.records)
            if (rec.eps == ph.eps && rec.accepted) last = rec.nonbinary_fraction;
        nb.push_back(last);
    }
    bool decreasing = nb.size() >= 2;
    for (std::size_t i = 1; i < nb.size(); ++i) decreasing = decreasing && nb[i] < nb[i - 1];

    const double initial = res.phases.front().pred_initial;
    const double final_surr = res.phases.back().pred_final;
    const bool surrogate_drop = final_surr < 0.1 * initial;

    Outcome o;
    o.pass = enough_phases && decreasing && surrogate_drop;
    std::ostringstream ss;
    ss << res.phases.size() << " phases in " << static_cast<int>(secs) << " s (limit 900 s), "
       << "nonbinary per phase:";
    for (double v : nb) ss << " " << v;
    ss << (decreasing ? " (strictly decreasing)" : " (NOT decreasing)");
    char buf[120];
    std::snprintf(buf, sizeof(buf), ", surrogate %.3e -> %.3e (need < 0.1x)", initial, final_surr);
    ss << buf;
    o.detail = ss.str();
    return o;
}

// ------------------------------------------------------------------- C7

Outcome criterion_energy_stability() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = load_config(config_dir() + "desk_wave.cfg");
    const Discretization disc = Discretization::make(
        build_mesh(cfg.mesh.x_min, cfg.mesh.x_max, cfg.mesh.y_min, cfg.mesh.y_max, 32, 32));
    WaveConfig wcfg;
    wcfg.c_sq = cfg.physics.c_sq;
    wcfg.b = cfg.physics.b;
    wcfg.sigma = cfg.physics.sigma;
    wcfg.t_final = cfg.time.t_final;
    wcfg.n_steps = 128;
    wcfg.source = {cfg.source.amplitude, cfg.source.center_x, cfg.source.center_y,
                   cfg.source.spatial_width, cfg.source.frequency, cfg.source.delay};

    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool finite = true;
    for (int s = 0; s < 10; ++s) {
        ControlField w(disc.n_nodes());
        for (double& v : w) v = u01(rng);
        const StateTrajectory u = solve_forward(disc, w, wcfg, SolverOptions{1e-10, 10000});
        std::vector<double> coeff = triangle_average(disc.mesh, w);
        for (double& c : coeff) c = wcfg.c_sq * (1.0 + c);
        const SparseMatrix Ka = assemble_stiffness(disc.mesh, coeff);
        double emax = 0.0;
        for (int k = 0; k < wcfg.n_steps; ++k) {
            NodalField vel(disc.n_nodes());
            for (int i = 0; i < disc.n_nodes(); ++i)
                vel[i] = (u.frames[k + 1][i] - u.frames[k][i]) / wcfg.tau();
            emax = std::max(emax, disc.mass.quadratic(vel) + Ka.quadratic(u.frames[k]));
        }
        finite = finite && std::isfinite(emax);
        lo = std::min(lo, emax);
        hi = std::max(hi, emax);
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = finite && hi <= 2.0 * lo && secs < 600.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "max energy across 10 controls in [%.4g, %.4g], ratio %.3f (limit 2), "
                  "%.1f s (limit 600 s)",
                  lo, hi, hi / lo, secs);
    o.detail = buf;
    return o;
}

// ------------------------------------------------------------------- C8

Outcome criterion_determinism() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = load_config(config_dir() + "desk_elliptic.cfg");
    const fs::path base = fs::path(PHASETR_BINARY_DIR) / "acceptance_runs";
    auto run_into = [&](const std::string& name) {
        const fs::path dir = base / name;
        fs::remove_all(dir);
        RunConfig c = cfg;
        c.output.dir = dir.string();
        std::ostringstream sink;
        if (run_experiment(c, sink) != 0) throw std::runtime_error("experiment failed");
        std::ifstream in(dir / "iterations.csv", std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = run_into("determinism_a");
    const std::string b = run_into("determinism_b");
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = !a.empty() && a == b;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "iterations.csv byte-identical across reruns: %s (%zu bytes), %.1f s",
                  o.pass ? "yes" : "NO", a.size(), secs);
    o.detail = buf;
    return o;
}

const char* kDescriptions[8] = {
    "elliptic gradient check",          "wave gradient check",
    "Modica-Mortola consistency",       "subproblem oracle equivalence",
    "algorithm invariants (toy run)",   "scaled wave experiment",
    "energy stability",                 "determinism"};

Outcome run_criterion(int k) {
    switch (k) {
        case 1: return criterion_gradient_elliptic();
        case 2: return criterion_gradient_wave();
        case 3: return criterion_modica_mortola();
        case 4: return criterion_subproblem_oracles();
        case 5: return criterion_algorithm_invariants();
        case 6: return criterion_scaled_wave_experiment();
        case 7: return criterion_energy_stability();
        case 8: return criterion_determinism();
        default: return {false, "unknown criterion"};
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

    bool all_pass = true;
    for (int k : which) {
        Outcome o;
        try {
            o = run_criterion(k);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        all_pass = all_pass && o.pass;
        std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", k,
                    kDescriptions[k - 1], o.detail.c_str());
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}

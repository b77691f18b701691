#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <stdexcept>
#include <vector>

#include "phasetr/objective.hpp"
#include "phasetr/sparse.hpp"

namespace phasetr {

enum class SubproblemVariant { convex, nonconvex };

// Trust-region subproblem around w_bar with gradient g (Riesz representative
// in the lumped metric), ball radius^2 delta in the weighted L2 norm.
struct SubproblemSpec {
    const SparseMatrix* stiffness = nullptr;      // unit-coefficient stiffness
    const std::vector<double>* weights = nullptr; // lumped mass diagonal
    NodalField w_bar;
    NodalField g;
    double delta = 0.0;
    GLParams gl;
    SubproblemVariant variant = SubproblemVariant::convex;
    double lambda_max = 0.0;  // cached lambda_max(D^{-1} K_1); recomputed when <= 0

    void validate() const {
        if (!stiffness || !weights) throw std::invalid_argument("SubproblemSpec: missing operators");
        if (!(delta > 0.0)) throw std::invalid_argument("SubproblemSpec: delta must be > 0");
        if (w_bar.size() != weights->size() || g.size() != weights->size())
            throw std::invalid_argument("SubproblemSpec: field size mismatch");
        gl.validate();
    }
};

struct SubproblemResult {
    NodalField w_star;
    double objective_value = 0.0;  // <= 0 always (w_bar is feasible with value 0)
    int iterations = 0;
    bool converged = false;
};

// Largest eigenvalue of D^{-1} K in the D-weighted metric, by power
// iteration with a fixed deterministic start (constants are in the kernel
// of K, so the start must not be constant).
inline double lambda_max_weighted(const SparseMatrix& K, const std::vector<double>& d,
                                  int iterations = 200) {
    const int n = K.n_rows;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = std::sin(1.7 * i + 0.3);
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        K.multiply(x, y);
        for (int i = 0; i < n; ++i) y[i] /= d[i];
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += d[i] * x[i] * y[i];
            den += d[i] * x[i] * x[i];
        }
        const double next = num / den;
        const bool settled = it > 10 && std::abs(next - lambda) <= 1e-12 * std::abs(next);
        lambda = next;
        double nrm = 0.0;
        for (int i = 0; i < n; ++i) nrm += d[i] * y[i] * y[i];
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) return 0.0;
        for (int i = 0; i < n; ++i) x[i] = y[i] / nrm;
        if (settled) break;
    }
    return lambda;
}

inline double weighted_ball_sq(const NodalField& w, const NodalField& w_bar,
                               const std::vector<double>& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double dv = w[i] - w_bar[i];
        s += d[i] * dv * dv;
    }
    return s;
}

// Exact weighted-L2 projection onto { w in [0,1]^n : sum d_i (w_i-wbar_i)^2
// <= delta }. For a ball multiplier lambda >= 0 the box-constrained inner
// problem has the closed-form solution clip((c + lambda wbar) / (1+lambda));
// the multiplier is found by bisection.
inline NodalField project_box_ball(const NodalField& candidate, const NodalField& w_bar,
                                   double delta, const std::vector<double>& weights) {
    if (!(delta > 0.0)) throw std::invalid_argument("project_box_ball: delta must be > 0");
    if (candidate.size() != w_bar.size() || candidate.size() != weights.size())
        throw std::invalid_argument("project_box_ball: size mismatch");
    const std::size_t n = candidate.size();

    auto point = [&](double lambda, NodalField& out) {
        const double inv = 1.0 / (1.0 + lambda);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = std::clamp((candidate[i] + lambda * w_bar[i]) * inv, 0.0, 1.0);
    };
    NodalField w(n);
    point(0.0, w);
    double excess = weighted_ball_sq(w, w_bar, weights) - delta;
    if (excess <= delta * 1e-14) return w;

    double lo = 0.0, hi = 1.0;
    NodalField trial(n);
    int grow = 0;
    for (; grow < 200; ++grow) {
        point(hi, trial);
        if (weighted_ball_sq(trial, w_bar, weights) <= delta) break;
        lo = hi;
        hi *= 4.0;
    }
    if (grow == 200)
        throw std::runtime_error("project_box_ball: bisection bracket did not close");
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        point(mid, trial);
        if (weighted_ball_sq(trial, w_bar, weights) > delta)
            lo = mid;
        else
            hi = mid;
    }
    point(hi, w);  // feasible endpoint of the final bracket
    if (weighted_ball_sq(w, w_bar, weights) > delta * (1.0 + 1e-10))
        throw std::runtime_error("project_box_ball: bisection did not converge in 200 steps");
    return w;
}

namespace detail {

struct ConvexModel {
    // phi(w) = sum d_i lin_i (w_i - wbar_i) + (gamma eps / 2)(w'Kw - wbar'Kwbar)
    const SubproblemSpec& spec;
    NodalField lin;          // g + (gamma/eps)(1 - 2 wbar)
    double quad_scale;       // gamma * eps
    double base_quad;        // wbar' K wbar

    explicit ConvexModel(const SubproblemSpec& s) : spec(s) {
        const double ge = s.gl.gamma / s.gl.epsilon;
        lin.resize(s.w_bar.size());
        for (std::size_t i = 0; i < lin.size(); ++i)
            lin[i] = s.g[i] + ge * (1.0 - 2.0 * s.w_bar[i]);
        quad_scale = s.gl.gamma * s.gl.epsilon;
        base_quad = s.stiffness->quadratic(s.w_bar);
    }

    double value(const NodalField& w, const NodalField& Kw) const {
        const auto& d = *spec.weights;
        double linear = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            linear += d[i] * lin[i] * (w[i] - spec.w_bar[i]);
            quad += w[i] * Kw[i];
        }
        return linear + 0.5 * quad_scale * (quad - base_quad);
    }

    // gradient in the lumped metric: lin + gamma eps D^{-1} K w
    void gradient(const NodalField& w, const NodalField& Kw, NodalField& out) const {
        const auto& d = *spec.weights;
        out.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            out[i] = lin[i] + quad_scale * Kw[i] / d[i];
    }
};

struct NonconvexModel {
    // psi(w) = sum d_i g_i (w_i - wbar_i) + gamma E_eps(w) - gamma E_eps(wbar)
    const SubproblemSpec& spec;
    double base_energy;

    explicit NonconvexModel(const SubproblemSpec& s)
        : spec(s), base_energy(gl_energy(s.w_bar, s.gl.epsilon, *s.stiffness, *s.weights)) {}

    double value(const NodalField& w, const NodalField& Kw) const {
        const auto& d = *spec.weights;
        const double eps = spec.gl.epsilon;
        double linear = 0.0, quad = 0.0, well = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            linear += d[i] * spec.g[i] * (w[i] - spec.w_bar[i]);
            quad += w[i] * Kw[i];
            const double v = std::clamp(w[i], 0.0, 1.0);
            well += d[i] * v * (1.0 - v);
        }
        return linear + spec.gl.gamma * (0.5 * eps * quad + well / eps - base_energy);
    }

    void gradient(const NodalField& w, const NodalField& Kw, NodalField& out) const {
        const auto& d = *spec.weights;
        const double eps = spec.gl.epsilon;
        out.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            out[i] = spec.g[i] +
                     spec.gl.gamma * (eps * Kw[i] / d[i] + (1.0 - 2.0 * w[i]) / eps);
    }
};

inline double weighted_norm(const NodalField& a, const NodalField& b,
                            const std::vector<double>& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dv = a[i] - b[i];
        s += d[i] * dv * dv;
    }
    return std::sqrt(s);
}

}  // namespace detail

// Convex subproblem solver: accelerated projected gradient (restart on
// objective increase keeps the accepted sequence monotone) with fixed step
// 1/L, L = gamma eps lambda_max(D^{-1} K_1). Stops on the unit-step
// projected-gradient norm or on relative objective stagnation. The returned
// objective never exceeds zero: w_bar is feasible with value zero and is the
// fallback.
inline SubproblemResult solve_convex(const SubproblemSpec& spec, double tol, int max_iter = 5000) {
    spec.validate();
    if (spec.variant != SubproblemVariant::convex)
        throw std::invalid_argument("solve_convex: spec.variant must be convex");
    const auto& d = *spec.weights;
    const SparseMatrix& K = *spec.stiffness;
    const detail::ConvexModel model(spec);

    const double lam = spec.lambda_max > 0.0 ? spec.lambda_max : lambda_max_weighted(K, d);
    const double L = std::max(model.quad_scale * lam * 1.01, 1e-30);
    const double step = std::min(1.0 / L, 1e12);

    NodalField x = spec.w_bar;
    NodalField Kx = K.multiply(x);
    double fx = model.value(x, Kx);  // zero up to roundoff
    NodalField y = x, Ky = Kx, grad(x.size()), cand(x.size());
    double t_momentum = 1.0;
    int iter = 0;
    bool converged = false;

    for (; iter < max_iter; ++iter) {
        model.gradient(y, Ky, grad);
        for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = y[i] - step * grad[i];
        NodalField xn = project_box_ball(cand, spec.w_bar, spec.delta, d);
        NodalField Kxn = K.multiply(xn);
        double fxn = model.value(xn, Kxn);

        if (fxn > fx) {
            // restart: plain projected-gradient step from the best point
            model.gradient(x, Kx, grad);
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = x[i] - step * grad[i];
            xn = project_box_ball(cand, spec.w_bar, spec.delta, d);
            Kxn = K.multiply(xn);
            fxn = model.value(xn, Kxn);
            t_momentum = 1.0;
            if (fxn > fx) {  // no progress at all; stationary up to roundoff
                converged = true;
                break;
            }
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        const double beta = (t_momentum - 1.0) / t_next;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = xn[i] + beta * (xn[i] - x[i]);
        Ky = K.multiply(y);
        t_momentum = t_next;

        const double change = std::abs(fx - fxn);
        x.swap(xn);
        Kx.swap(Kxn);
        fx = fxn;

        model.gradient(x, Kx, grad);
        for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = x[i] - grad[i];
        const NodalField px = project_box_ball(cand, spec.w_bar, spec.delta, d);
        if (detail::weighted_norm(x, px, d) <= tol || change <= tol * tol * (1.0 + std::abs(fx))) {
            converged = true;
            ++iter;
            break;
        }
    }

    SubproblemResult res;
    if (fx > 0.0) {  // fallback preserves the nonpositive optimal value
        res.w_star = spec.w_bar;
        res.objective_value = 0.0;
    } else {
        res.w_star = std::move(x);
        res.objective_value = fx;
    }
    res.iterations = iter;
    res.converged = converged;
    return res;
}

// Heuristic solver for the nonconvex subproblem: monotone projected-gradient
// descents with step halving, run from w_bar, the convex-subproblem
// solution, the binarized w_bar, and seeded random feasible draws; the best
// result wins, ties broken by start index.
inline SubproblemResult solve_nonconvex(const SubproblemSpec& spec, double tol, int n_starts,
                                        std::uint64_t seed = 0, int max_iter = 2000) {
    spec.validate();
    const auto& d = *spec.weights;
    const SparseMatrix& K = *spec.stiffness;
    const detail::NonconvexModel model(spec);
    const double lam = spec.lambda_max > 0.0 ? spec.lambda_max : lambda_max_weighted(K, d);
    const double L0 = spec.gl.gamma * (spec.gl.epsilon * lam + 2.0 / spec.gl.epsilon);
    const double step0 = std::min(1.0 / std::max(L0, 1e-30), 1e12);

    std::vector<NodalField> starts;
    starts.push_back(spec.w_bar);
    {
        SubproblemSpec cvx = spec;
        cvx.variant = SubproblemVariant::convex;
        cvx.lambda_max = lam;
        starts.push_back(solve_convex(cvx, tol, max_iter).w_star);
    }
    {
        NodalField bin(spec.w_bar.size());
        for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = spec.w_bar[i] > 0.5 ? 1.0 : 0.0;
        starts.push_back(project_box_ball(bin, spec.w_bar, spec.delta, d));
    }
    for (int s = 3; s < n_starts; ++s) {
        std::mt19937_64 rng(seed * 1000003ULL + s);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        NodalField draw(spec.w_bar.size());
        for (double& v : draw) v = u(rng);
        starts.push_back(project_box_ball(draw, spec.w_bar, spec.delta, d));
    }
    if (static_cast<int>(starts.size()) > std::max(n_starts, 1))
        starts.resize(std::max(n_starts, 1));

    struct StartResult {
        NodalField w;
        double value;
        int iterations;
        bool converged;
    };

    auto descend = [&](NodalField x) {
        NodalField Kx = K.multiply(x);
        double fx = model.value(x, Kx);
        NodalField grad(x.size()), cand(x.size());
        int iter = 0;
        bool converged = false;
        for (; iter < max_iter; ++iter) {
            model.gradient(x, Kx, grad);
            double step = step0;
            bool moved = false;
            for (int half = 0; half < 60; ++half) {
                for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = x[i] - step * grad[i];
                NodalField xn = project_box_ball(cand, spec.w_bar, spec.delta, d);
                NodalField Kxn = K.multiply(xn);
                const double fxn = model.value(xn, Kxn);
                const double dist = detail::weighted_norm(xn, x, d);
                if (fxn <= fx - 1e-4 * dist * dist / std::max(step, 1e-300)) {
                    x.swap(xn);
                    Kx.swap(Kxn);
                    fx = fxn;
                    moved = dist > 0.0;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) {
                converged = true;
                break;
            }
            model.gradient(x, Kx, grad);
            for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = x[i] - grad[i];
            const NodalField px = project_box_ball(cand, spec.w_bar, spec.delta, d);
            if (detail::weighted_norm(x, px, d) <= tol) {
                converged = true;
                ++iter;
                break;
            }
        }
        return StartResult{std::move(x), fx, iter, converged};
    };

    std::vector<std::future<StartResult>> futures;
    futures.reserve(starts.size());
    for (auto& s : starts)
        futures.push_back(std::async(std::launch::async, descend, std::move(s)));

    SubproblemResult res;
    res.objective_value = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < futures.size(); ++s) {
        StartResult sr = futures[s].get();
        res.iterations += sr.iterations;
        if (sr.value < res.objective_value) {
            res.objective_value = sr.value;
            res.w_star = std::move(sr.w);
            res.converged = sr.converged;
        }
    }
    if (res.objective_value > 0.0) {
        res.w_star = spec.w_bar;
        res.objective_value = 0.0;
    }
    return res;
}

}  // namespace phasetr

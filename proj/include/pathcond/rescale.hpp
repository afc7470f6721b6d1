#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pathcond/netgraph.hpp"
#include "pathcond/nncore.hpp"
#include "pathcond/pathdiag.hpp"

namespace pathcond {

struct PathCondConfig {
    double tol = 1e-8;       // sweep-wise max coordinate update threshold
    int max_sweeps = 50;
    int recompute_every = 10; // refresh v = Bu and E from scratch
    bool track_objective_per_update = false;

    void validate() const {
        if (tol <= 0 || max_sweeps <= 0 || recompute_every <= 0)
            throw std::invalid_argument("PathCondConfig: non-positive field");
    }
};

struct RescalingSolution {
    std::vector<double> u; // per hidden neuron, length H
    std::vector<double> d; // per parameter scale applied to theta, length p
    std::vector<double> objective_trace;        // F per sweep
    std::vector<double> objective_trace_updates; // F per coordinate update (optional)
    int sweeps = 0;
    bool converged = false;
    std::vector<int> skipped_neurons; // entire in- or out-set had g = 0
};

namespace detail {

// Active-parameter mask: dead paths (g_i = 0) are excluded from every sum
// and from the cardinalities entering the closed-form update.
struct ActiveSets {
    std::vector<std::vector<int>> in_sets, out_sets;
    std::vector<char> neuron_ok;
    int p_eff = 0;
};

inline ActiveSets filter_active(const NeuronIncidence& inc, const std::vector<double>& g) {
    ActiveSets a;
    const int H = inc.num_hidden();
    a.in_sets.resize(H);
    a.out_sets.resize(H);
    a.neuron_ok.assign(H, 1);
    for (double gi : g)
        if (gi > 0.0) ++a.p_eff;
    for (int h = 0; h < H; ++h) {
        for (int i : inc.in_sets[h])
            if (g[i] > 0.0) a.in_sets[h].push_back(i);
        for (int i : inc.out_sets[h])
            if (g[i] > 0.0) a.out_sets[h].push_back(i);
        if (a.in_sets[h].empty() || a.out_sets[h].empty()) a.neuron_ok[h] = 0;
    }
    return a;
}

// Unique positive root of b2 X^2 + b1 X + b0 with b2 > 0, b0 < 0, computed
// the cancellation-free way.
inline double positive_quadratic_root(double b2, double b1, double b0) {
    const double disc = b1 * b1 - 4.0 * b2 * b0;
    const double sq = std::sqrt(disc);
    if (b1 <= 0.0) return (-b1 + sq) / (2.0 * b2);
    return -2.0 * b0 / (b1 + sq);
}

} // namespace detail

// F(u) = p log(sum_i e^{(Bu)_i} g_i) - sum_i (Bu)_i, restricted to the
// active (g_i > 0) parameters. Convex and coercive whenever g > 0.
inline double objective_F(const std::vector<double>& u, const std::vector<double>& g,
                          const NeuronIncidence& inc) {
    const auto v = inc.apply_B(u);
    double sum_g = 0.0;
    for (double gi : g) sum_g += gi;
    if (sum_g <= 0.0) throw std::invalid_argument("objective_F: g is identically zero");

    // log-sum-exp with max shift
    double m = -std::numeric_limits<double>::infinity();
    int p_eff = 0;
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i] > 0.0) {
            ++p_eff;
            m = std::max(m, v[i] + std::log(g[i]));
        }
    double s = 0.0, lin = 0.0;
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i] > 0.0) {
            s += std::exp(v[i] + std::log(g[i]) - m);
            lin += v[i];
        }
    return p_eff * (std::log(s) + m) - lin;
}

// Gradient of F: (grad F)_h = p (S_out - S_in) / E + (|in_h| - |out_h|).
inline std::vector<double> objective_F_gradient(const std::vector<double>& u,
                                                const std::vector<double>& g,
                                                const NeuronIncidence& inc) {
    const auto v = inc.apply_B(u);
    const auto act = detail::filter_active(inc, g);
    double m = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i] > 0.0) m = std::max(m, v[i]);
    double E = 0.0;
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i] > 0.0) E += std::exp(v[i] - m) * g[i];

    std::vector<double> grad(inc.num_hidden(), 0.0);
    for (int h = 0; h < inc.num_hidden(); ++h) {
        if (!act.neuron_ok[h]) continue;
        double s_out = 0.0, s_in = 0.0;
        for (int i : act.out_sets[h]) s_out += std::exp(v[i] - m) * g[i];
        for (int i : act.in_sets[h]) s_in += std::exp(v[i] - m) * g[i];
        grad[h] = act.p_eff * (s_out - s_in) / E +
                  (static_cast<double>(act.in_sets[h].size()) -
                   static_cast<double>(act.out_sets[h].size()));
    }
    return grad;
}

// Coordinate-descent minimization of F with incremental maintenance of the
// dual vector v = Bu and the global sum E = sum_i e^{v_i} g_i. Each neuron
// update costs O(|in_h| + |out_h|); one sweep costs O(p). Exponent sums are
// kept relative to a running shift so that unbalanced inputs (|v| large)
// do not overflow.
inline RescalingSolution pathcond_solve(const NeuronIncidence& inc, const std::vector<double>& g,
                                        const PathCondConfig& cfg = {}) {
    cfg.validate();
    const int H = inc.num_hidden();
    const int p = inc.num_params();
    if (static_cast<int>(g.size()) != p)
        throw std::invalid_argument("pathcond_solve: g length mismatch");

    const auto act = detail::filter_active(inc, g);
    if (act.p_eff == 0) throw std::invalid_argument("pathcond_solve: g is identically zero");
    const double p_eff = static_cast<double>(act.p_eff);

    RescalingSolution sol;
    sol.u.assign(H, 0.0);
    for (int h = 0; h < H; ++h)
        if (!act.neuron_ok[h]) sol.skipped_neurons.push_back(h);

    std::vector<double> v(p, 0.0);
    double shift = 0.0; // E and the per-neuron sums carry a factor e^{-shift}
    double E = 0.0;
    auto recompute = [&] {
        double vmax = 0.0;
        for (int i = 0; i < p; ++i)
            if (g[i] > 0.0) vmax = std::max(vmax, v[i]);
        shift = (vmax > 30.0) ? vmax : 0.0;
        E = 0.0;
        for (int i = 0; i < p; ++i)
            if (g[i] > 0.0) E += std::exp(v[i] - shift) * g[i];
    };
    recompute();

    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        if (sweep > 0 && sweep % cfg.recompute_every == 0) {
            // rebuild v = Bu exactly to bound incremental drift
            std::fill(v.begin(), v.end(), 0.0);
            for (int h = 0; h < H; ++h) {
                for (int i : act.out_sets[h]) v[i] += sol.u[h];
                for (int i : act.in_sets[h]) v[i] -= sol.u[h];
            }
            recompute();
        }
        double max_delta = 0.0;
        for (int h = 0; h < H; ++h) {
            if (!act.neuron_ok[h]) continue;
            const double uh = sol.u[h];
            double s_out = 0.0, s_in = 0.0;
            for (int i : act.out_sets[h]) s_out += std::exp(v[i] - shift) * g[i];
            for (int i : act.in_sets[h]) s_in += std::exp(v[i] - shift) * g[i];
            const double D = E - s_out - s_in;
            const double A = static_cast<double>(act.in_sets[h].size()) -
                             static_cast<double>(act.out_sets[h].size());
            const double B = std::exp(-uh) * s_out; // shared e^{-shift} factor cancels in the root
            const double C = std::exp(uh) * s_in;

            const double r = detail::positive_quadratic_root(B * (A + p_eff), A * D, C * (A - p_eff));
            double delta = std::log(r) - uh;
            // ulp-level noise from the root formula; keeps balanced inputs
            // exactly fixed
            if (std::abs(delta) < 1e-15) delta = 0.0;
            if (delta != 0.0) {
                double new_out = 0.0, new_in = 0.0;
                for (int i : act.out_sets[h]) {
                    v[i] += delta;
                    new_out += std::exp(v[i] - shift) * g[i];
                }
                for (int i : act.in_sets[h]) {
                    v[i] -= delta;
                    new_in += std::exp(v[i] - shift) * g[i];
                }
                E = D + new_out + new_in;
                sol.u[h] = uh + delta;
            }
            max_delta = std::max(max_delta, std::abs(delta));
            if (cfg.track_objective_per_update)
                sol.objective_trace_updates.push_back(objective_F(sol.u, g, inc));
        }
        sol.objective_trace.push_back(objective_F(sol.u, g, inc));
        sol.sweeps = sweep + 1;
        if (max_delta < cfg.tol) {
            sol.converged = true;
            break;
        }
    }

    // Applied scales: D = diag(exp(-Bu/2)), i.e. the inverse square root of
    // the minimizer D' = diag(exp(Bu)) of the rewritten objective. Recompute
    // v exactly from u so d is an exact group element.
    sol.d.assign(p, 1.0);
    std::vector<double> v_exact(p, 0.0);
    for (int h = 0; h < H; ++h) {
        for (int i : inc.out_sets[h]) v_exact[i] += sol.u[h];
        for (int i : inc.in_sets[h]) v_exact[i] -= sol.u[h];
    }
    for (int i = 0; i < p; ++i) sol.d[i] = std::exp(-0.5 * v_exact[i]);
    return sol;
}

// Full PathCond teleport: compute g = diag(G) in O(p), minimize F, apply the
// resulting rescaling. The output is function- and path-lifting-preserving.
inline std::pair<ParamVector, RescalingSolution>
pathcond(const NetworkGraph& net, const ParamVector& theta, const PathCondConfig& cfg = {}) {
    const auto inc = incidence(net);
    const auto g = diag_g_fast(net, theta);
    auto sol = pathcond_solve(inc, g.g, cfg);
    std::vector<double> scaled(net.p);
    for (int i = 0; i < net.p; ++i) scaled[i] = sol.d[i] * theta[i];
    return {ParamVector(std::move(scaled)), std::move(sol)};
}

// Composes per-neuron rescalings: incoming weights and bias of hidden neuron
// h scale by lambda_h, outgoing weights by 1/lambda_h.
inline ParamVector apply_neuron_rescaling(const NetworkGraph& net, const ParamVector& theta,
                                          const std::vector<double>& lambda) {
    const auto inc = incidence(net);
    if (static_cast<int>(lambda.size()) != inc.num_hidden())
        throw std::invalid_argument("apply_neuron_rescaling: lambda length mismatch");
    std::vector<double> out(theta.values);
    for (int h = 0; h < inc.num_hidden(); ++h) {
        if (lambda[h] <= 0)
            throw std::invalid_argument("apply_neuron_rescaling: non-positive lambda");
        for (int i : inc.in_sets[h]) out[i] *= lambda[h];
        for (int i : inc.out_sets[h]) out[i] /= lambda[h];
    }
    return ParamVector(std::move(out));
}

// ENorm baseline: per cycle, each hidden neuron is set to the coordinate
// minimizer of the summed squared layer norms,
// lambda_h = (||outgoing||_2 / ||incoming + bias||_2)^{1/2}.
inline ParamVector enorm(const NetworkGraph& net, const ParamVector& theta, int cycles = 1) {
    if (cycles <= 0) throw std::invalid_argument("enorm: non-positive cycle count");
    const auto inc = incidence(net);
    std::vector<double> w(theta.values);
    for (int c = 0; c < cycles; ++c) {
        for (int h = 0; h < inc.num_hidden(); ++h) {
            double in2 = 0.0, out2 = 0.0;
            for (int i : inc.in_sets[h]) in2 += w[i] * w[i];
            for (int i : inc.out_sets[h]) out2 += w[i] * w[i];
            if (in2 == 0.0 || out2 == 0.0) continue; // degenerate neuron, skip
            const double lam = std::sqrt(std::sqrt(out2 / in2));
            for (int i : inc.in_sets[h]) w[i] *= lam;
            for (int i : inc.out_sets[h]) w[i] /= lam;
        }
    }
    return ParamVector(std::move(w));
}

} // namespace pathcond

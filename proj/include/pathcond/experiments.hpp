#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathcond/netgraph.hpp"
#include "pathcond/nncore.hpp"
#include "pathcond/pathoracle.hpp"
#include "pathcond/rescale.hpp"

// Experiment runners behind the CLI: the one-neuron gradient-descent study
// and the desk-scale training comparison (baseline / PathCond-at-init /
// ENorm-per-step).

namespace pathcond {

struct ToyStep {
    double loss = 0.0;
    std::array<double, 3> theta{};  // (u, v, w)
    std::array<double, 2> phi{};    // (uv, uw)
};

struct ToyTrajectories {
    std::vector<ToyStep> raw;       // GD from theta0
    std::vector<ToyStep> rescaled;  // GD from pathcond(theta0)
    std::vector<std::array<double, 2>> ideal; // Euler on zdot = -grad l(z)
    double raw_phi_distance = 0.0;      // time-averaged distance to ideal
    double rescaled_phi_distance = 0.0;
    double balance_drift = 0.0;         // max |(v^2+w^2-u^2) - initial|
};

namespace detail {

// f(x) = u relu(v x + w); teacher y = relu(x)
inline double toy_loss_and_grad(const std::array<double, 3>& t, const std::vector<double>& xs,
                                const std::vector<double>& ys, std::array<double, 3>& grad) {
    const auto [u, v, w] = t;
    double loss = 0.0;
    grad = {0.0, 0.0, 0.0};
    for (size_t i = 0; i < xs.size(); ++i) {
        const double pre = v * xs[i] + w;
        const double act = pre > 0.0 ? pre : 0.0;
        const double diff = u * act - ys[i];
        loss += diff * diff;
        grad[0] += 2.0 * diff * act;
        if (pre > 0.0) {
            grad[1] += 2.0 * diff * u * xs[i];
            grad[2] += 2.0 * diff * u;
        }
    }
    const double inv = 1.0 / xs.size();
    loss *= inv;
    for (auto& g : grad) g *= inv;
    return loss;
}

// lifted loss l(z) = mean (relu(z1 x + z2) - y)^2, valid on the u > 0 sheet
inline void toy_lifted_grad(const std::array<double, 2>& z, const std::vector<double>& xs,
                            const std::vector<double>& ys, std::array<double, 2>& grad) {
    grad = {0.0, 0.0};
    for (size_t i = 0; i < xs.size(); ++i) {
        const double pre = z[0] * xs[i] + z[1];
        if (pre <= 0.0) continue;
        const double diff = pre - ys[i];
        grad[0] += 2.0 * diff * xs[i];
        grad[1] += 2.0 * diff;
    }
    for (auto& g : grad) g /= xs.size();
}

inline std::vector<ToyStep> toy_gd(std::array<double, 3> t, const std::vector<double>& xs,
                                   const std::vector<double>& ys, double lr, int steps) {
    std::vector<ToyStep> traj;
    traj.reserve(steps + 1);
    std::array<double, 3> grad{};
    for (int s = 0; s <= steps; ++s) {
        ToyStep rec;
        rec.loss = toy_loss_and_grad(t, xs, ys, grad);
        rec.theta = t;
        rec.phi = {t[0] * t[1], t[0] * t[2]};
        traj.push_back(rec);
        for (int j = 0; j < 3; ++j) t[j] -= lr * grad[j];
    }
    return traj;
}

} // namespace detail

// Section-2 style study on f(x) = u relu(v x + w) with teacher y = relu(x),
// x ~ N(0,1). Compares GD from theta0, GD from the PathCond teleport of
// theta0, and explicit Euler on the idealized lifted flow from Phi(theta0).
inline ToyTrajectories toy_flow(std::array<double, 3> theta0, double lr, int steps,
                                uint64_t seed, int samples = 256) {
    if (theta0[0] == 0.0)
        throw std::invalid_argument("toy_flow: u = 0 gives a degenerate path diagonal");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> xs(samples), ys(samples);
    for (int i = 0; i < samples; ++i) {
        xs[i] = N(rng);
        ys[i] = xs[i] > 0.0 ? xs[i] : 0.0;
    }

    auto net = build_lfcn({1, 1, 1}, true);
    // canonical layout is (v, w, u)
    ParamVector t0(std::vector<double>{theta0[1], theta0[2], theta0[0]});
    auto [t1, sol] = pathcond(net, t0);
    (void)sol;
    const std::array<double, 3> theta0_rescaled{t1[2], t1[0], t1[1]};

    ToyTrajectories out;
    out.raw = detail::toy_gd(theta0, xs, ys, lr, steps);
    out.rescaled = detail::toy_gd(theta0_rescaled, xs, ys, lr, steps);

    std::array<double, 2> z{theta0[0] * theta0[1], theta0[0] * theta0[2]}, zg{};
    out.ideal.reserve(steps + 1);
    for (int s = 0; s <= steps; ++s) {
        out.ideal.push_back(z);
        detail::toy_lifted_grad(z, xs, ys, zg);
        z[0] -= lr * zg[0];
        z[1] -= lr * zg[1];
    }

    auto mean_dist = [&](const std::vector<ToyStep>& traj) {
        double acc = 0.0;
        for (size_t s = 0; s < traj.size(); ++s)
            acc += std::hypot(traj[s].phi[0] - out.ideal[s][0], traj[s].phi[1] - out.ideal[s][1]);
        return acc / traj.size();
    };
    out.raw_phi_distance = mean_dist(out.raw);
    out.rescaled_phi_distance = mean_dist(out.rescaled);

    auto balance = [](const ToyStep& s) {
        return s.theta[1] * s.theta[1] + s.theta[2] * s.theta[2] - s.theta[0] * s.theta[0];
    };
    const double b0 = balance(out.raw.front());
    for (const auto& s : out.raw)
        out.balance_drift = std::max(out.balance_drift, std::abs(balance(s) - b0));
    return out;
}

enum class Method { baseline, pathcond_init, enorm_per_step };

inline std::string method_name(Method m) {
    switch (m) {
    case Method::baseline: return "baseline";
    case Method::pathcond_init: return "pathcond";
    case Method::enorm_per_step: return "enorm";
    }
    return "?";
}

struct CompareRun {
    Method method = Method::baseline;
    std::vector<EpochRecord> trajectory;
    double initial_loss = 0.0;
    int epochs_to_target = -1; // first epoch with loss <= target, -1 if never
    double log_rescale_inf = 0.0;
};

// Runs each method from the identical theta0 and identical batch order.
// Target for epochs_to_target is loss <= target_fraction * initial loss.
inline std::vector<CompareRun> train_compare(const NetworkGraph& net, const Dataset& ds,
                                             const std::vector<Method>& methods,
                                             const ParamVector& theta0, const TrainConfig& cfg,
                                             double target_fraction = 0.1) {
    std::vector<CompareRun> runs;
    for (Method m : methods) {
        CompareRun run;
        run.method = m;
        ParamVector theta = theta0;
        if (m == Method::pathcond_init) {
            auto [t, sol] = pathcond(net, theta);
            theta = std::move(t);
            for (double di : sol.d)
                run.log_rescale_inf = std::max(run.log_rescale_inf, std::abs(std::log(di)));
        }
        TrainHooks hooks;
        if (m == Method::enorm_per_step)
            hooks.after_step = [&net](ParamVector& th, int, long) { th = enorm(net, th, 1); };
        run.initial_loss = full_loss(net, theta, ds, cfg.loss);
        run.trajectory = sgd_run(net, theta, ds, cfg, hooks);
        const double target = target_fraction * run.initial_loss;
        for (const auto& rec : run.trajectory)
            if (rec.train_loss <= target) {
                run.epochs_to_target = rec.epoch;
                break;
            }
        runs.push_back(std::move(run));
    }
    return runs;
}

} // namespace pathcond

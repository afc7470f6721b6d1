#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathcond/netgraph.hpp"

namespace pathcond {

struct ParamVector {
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(std::vector<double> v) : values(std::move(v)) {
        for (double x : values)
            if (!std::isfinite(x)) throw std::invalid_argument("ParamVector: non-finite entry");
    }
    static ParamVector zeros(int p) { return ParamVector(std::vector<double>(p, 0.0)); }

    double& operator[](size_t i) { return values[i]; }
    double operator[](size_t i) const { return values[i]; }
    size_t size() const { return values.size(); }
};

enum class InitScheme { kaiming_uniform, gaussian_scaled };

struct InitConfig {
    InitScheme scheme = InitScheme::kaiming_uniform;
    double a = 1.0;       // gaussian_scaled: per-layer variance a / n_k
    uint64_t seed = 0;
    bool random_biases = false; // draw biases N(0, sigma_k^2) instead of zero
};

enum class LossKind { mse, cross_entropy };

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 10;
    LossKind loss = LossKind::mse;
    uint64_t seed = 0;

    void validate() const {
        if (learning_rate < 0) throw std::invalid_argument("TrainConfig: negative learning rate");
        if (batch_size <= 0 || epochs <= 0) throw std::invalid_argument("TrainConfig: non-positive size");
    }
};

struct Activations {
    std::vector<double> pre;  // per neuron (inputs hold the input value)
    std::vector<double> post;
};

// Forward pass: hidden neurons apply ReLU, outputs apply identity.
// Neuron ids are topologically ordered, so one ascending sweep suffices.
inline std::vector<double> forward(const NetworkGraph& net, const ParamVector& theta,
                                   const std::vector<double>& x, Activations* acts = nullptr) {
    const int n = net.num_neurons();
    std::vector<double> pre(n, 0.0), post(n, 0.0);
    int xi = 0;
    for (int v = 0; v < n; ++v) {
        if (net.roles[v] == NeuronRole::input) {
            if (xi >= static_cast<int>(x.size()))
                throw std::invalid_argument("forward: input dimension mismatch");
            pre[v] = post[v] = x[xi++];
            continue;
        }
        double s = net.has_bias(v) ? theta[net.bias_param[v]] : 0.0;
        for (int e : net.in_edges[v]) s += theta[net.edge_param[e]] * post[net.edges[e].src];
        pre[v] = s;
        post[v] = (net.roles[v] == NeuronRole::hidden) ? (s > 0.0 ? s : 0.0) : s;
    }
    if (xi != static_cast<int>(x.size()))
        throw std::invalid_argument("forward: input dimension mismatch");

    std::vector<double> out;
    for (int v = 0; v < n; ++v)
        if (net.roles[v] == NeuronRole::output) out.push_back(post[v]);
    if (acts) {
        acts->pre = std::move(pre);
        acts->post = std::move(post);
    }
    return out;
}

namespace detail {

inline double sample_loss_and_output_grad(const std::vector<double>& yhat,
                                          const std::vector<double>& y, LossKind kind,
                                          std::vector<double>& dout) {
    const size_t k = yhat.size();
    if (y.size() != k) throw std::invalid_argument("loss: target dimension mismatch");
    dout.assign(k, 0.0);
    if (kind == LossKind::mse) {
        double loss = 0.0;
        for (size_t j = 0; j < k; ++j) {
            const double d = yhat[j] - y[j];
            loss += d * d;
            dout[j] = 2.0 * d;
        }
        return loss;
    }
    // softmax cross-entropy, targets are class weights (typically one-hot)
    if (k < 2) throw std::invalid_argument("cross_entropy: fewer than 2 outputs");
    double m = yhat[0];
    for (double v : yhat) m = std::max(m, v);
    double z = 0.0;
    for (double v : yhat) z += std::exp(v - m);
    const double logz = std::log(z) + m;
    double loss = 0.0, ysum = 0.0;
    for (size_t j = 0; j < k; ++j) {
        loss += y[j] * (logz - yhat[j]);
        ysum += y[j];
    }
    for (size_t j = 0; j < k; ++j) dout[j] = ysum * std::exp(yhat[j] - logz) - y[j];
    return loss;
}

} // namespace detail

// Mean loss over the batch and its exact reverse-mode gradient
// (subgradient convention ReLU'(0) = 0).
inline std::pair<double, ParamVector>
loss_and_grad(const NetworkGraph& net, const ParamVector& theta,
              const std::vector<std::pair<std::vector<double>, std::vector<double>>>& batch,
              LossKind kind) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    const int n = net.num_neurons();
    std::vector<double> grad(net.p, 0.0);
    double total = 0.0;
    std::vector<double> dout, dpost(n);
    Activations acts;

    for (const auto& [x, y] : batch) {
        const auto yhat = forward(net, theta, x, &acts);
        total += detail::sample_loss_and_output_grad(yhat, y, kind, dout);

        std::fill(dpost.begin(), dpost.end(), 0.0);
        int oj = 0;
        for (int v = 0; v < n; ++v)
            if (net.roles[v] == NeuronRole::output) dpost[v] = dout[oj++];

        for (int v = n - 1; v >= 0; --v) {
            if (net.roles[v] == NeuronRole::input) continue;
            double dpre = dpost[v];
            if (net.roles[v] == NeuronRole::hidden && acts.pre[v] <= 0.0) dpre = 0.0;
            if (dpre == 0.0) continue;
            if (net.has_bias(v)) grad[net.bias_param[v]] += dpre;
            for (int e : net.in_edges[v]) {
                const int src = net.edges[e].src;
                grad[net.edge_param[e]] += dpre * acts.post[src];
                dpost[src] += dpre * theta[net.edge_param[e]];
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& gi : grad) gi *= inv;
    return {total * inv, ParamVector(std::move(grad))};
}

// Deterministic initialization in canonical parameter order. Weight draws are
// per layer; biases default to zero (random_biases draws them with the layer
// variance, used by the regime Monte Carlo).
inline ParamVector init(const NetworkGraph& net, const InitConfig& cfg) {
    if (!net.lfcn) throw std::invalid_argument("init: requires an LFCN-built graph");
    if (cfg.scheme == InitScheme::gaussian_scaled && cfg.a <= 0)
        throw std::invalid_argument("init: a must be positive");

    const auto& widths = net.lfcn->widths;
    const int L = static_cast<int>(widths.size()) - 1;
    std::mt19937_64 rng(cfg.seed);
    std::vector<double> theta(net.p, 0.0);

    int idx = 0;
    for (int k = 0; k < L; ++k) {
        const int fan_in = widths[k];
        const double sigma2 = cfg.a / fan_in;
        if (cfg.scheme == InitScheme::kaiming_uniform) {
            const double bound = std::sqrt(6.0 / fan_in);
            std::uniform_real_distribution<double> U(-bound, bound);
            for (int j = 0; j < widths[k] * widths[k + 1]; ++j) theta[idx++] = U(rng);
        } else {
            std::normal_distribution<double> N(0.0, std::sqrt(sigma2));
            for (int j = 0; j < widths[k] * widths[k + 1]; ++j) theta[idx++] = N(rng);
        }
        if (net.lfcn->with_bias && k < L - 1) {
            if (cfg.random_biases) {
                const double bsigma = (cfg.scheme == InitScheme::kaiming_uniform)
                                          ? std::sqrt(2.0 / fan_in)
                                          : std::sqrt(sigma2);
                std::normal_distribution<double> N(0.0, bsigma);
                for (int j = 0; j < widths[k + 1]; ++j) theta[idx++] = N(rng);
            } else {
                idx += widths[k + 1];
            }
        }
    }
    return ParamVector(std::move(theta));
}

struct Dataset {
    std::vector<std::vector<double>> X;
    std::vector<std::vector<double>> Y;
    bool classification = false;

    size_t size() const { return X.size(); }
};

// Frozen random teacher LFCN, Gaussian inputs.
inline Dataset make_teacher_student(const std::vector<int>& teacher_widths, int n, uint64_t seed) {
    auto teacher = build_lfcn(teacher_widths, true);
    InitConfig ic;
    ic.scheme = InitScheme::gaussian_scaled;
    ic.a = 2.0;
    ic.seed = seed;
    auto theta = init(teacher, ic);
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> N(0.0, 1.0);
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(teacher_widths.front());
        for (auto& v : x) v = N(rng);
        ds.Y.push_back(forward(teacher, theta, x));
        ds.X.push_back(std::move(x));
    }
    return ds;
}

inline Dataset make_gaussian_blobs(int n, int dim, int classes, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<std::vector<double>> centers(classes, std::vector<double>(dim));
    for (auto& c : centers)
        for (auto& v : c) v = 3.0 * N(rng);
    Dataset ds;
    ds.classification = true;
    for (int i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng() % classes);
        std::vector<double> x(dim), y(classes, 0.0);
        for (int j = 0; j < dim; ++j) x[j] = centers[c][j] + N(rng);
        y[c] = 1.0;
        ds.X.push_back(std::move(x));
        ds.Y.push_back(std::move(y));
    }
    return ds;
}

struct EpochRecord {
    int epoch = 0;
    long step = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
};

struct TrainHooks {
    // after_step runs after each SGD update (step index is global).
    std::function<void(ParamVector&, int epoch, long step)> after_step;
    std::function<void(ParamVector&, int epoch)> after_epoch;
};

inline double full_loss(const NetworkGraph& net, const ParamVector& theta, const Dataset& ds,
                        LossKind kind, double* acc = nullptr) {
    double total = 0.0;
    long correct = 0;
    std::vector<double> dout;
    for (size_t i = 0; i < ds.size(); ++i) {
        const auto yhat = forward(net, theta, ds.X[i]);
        total += detail::sample_loss_and_output_grad(yhat, ds.Y[i], kind, dout);
        if (ds.classification) {
            const auto am = [](const std::vector<double>& v) {
                return std::max_element(v.begin(), v.end()) - v.begin();
            };
            if (am(yhat) == am(ds.Y[i])) ++correct;
        }
    }
    if (acc) *acc = ds.classification ? static_cast<double>(correct) / ds.size() : 0.0;
    return total / static_cast<double>(ds.size());
}

// Plain SGD. Shuffle order is derived from the seed, so identical seeds give
// bitwise-identical trajectories in a single-threaded run.
inline std::vector<EpochRecord> sgd_run(const NetworkGraph& net, ParamVector& theta,
                                        const Dataset& ds, const TrainConfig& cfg,
                                        const TrainHooks& hooks = {}) {
    cfg.validate();
    if (ds.size() == 0) throw std::invalid_argument("sgd_run: empty dataset");
    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> order(ds.size());
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<EpochRecord> traj;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t b = 0; b < ds.size(); b += cfg.batch_size) {
            std::vector<std::pair<std::vector<double>, std::vector<double>>> batch;
            for (size_t i = b; i < std::min(ds.size(), b + cfg.batch_size); ++i)
                batch.emplace_back(ds.X[order[i]], ds.Y[order[i]]);
            auto [loss, grad] = loss_and_grad(net, theta, batch, cfg.loss);
            (void)loss;
            for (int i = 0; i < net.p; ++i) theta[i] -= cfg.learning_rate * grad[i];
            ++step;
            if (hooks.after_step) hooks.after_step(theta, epoch, step);
        }
        if (hooks.after_epoch) hooks.after_epoch(theta, epoch);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.step = step;
        rec.train_loss = full_loss(net, theta, ds, cfg.loss, &rec.train_acc);
        traj.push_back(rec);
    }
    return traj;
}

} // namespace pathcond

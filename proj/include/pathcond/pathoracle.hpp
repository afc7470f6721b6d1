#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pathcond/netgraph.hpp"
#include "pathcond/nncore.hpp"

// Brute-force path-enumeration oracles. Everything here is exponential in
// the network size and meant for tiny test nets only; the production path
// (pathdiag, rescale) never calls into this header.

namespace pathcond {

struct Path {
    std::vector<int> neurons; // v0 -> ... -> vd, vd an output neuron
    bool bias_rooted = false;
    std::vector<int> params;  // bias of v0 (if bias_rooted) then traversed edges
};

struct PathLifting {
    std::vector<double> values; // one entry per enumerated path
};

constexpr long kDefaultPathCap = 1'000'000;

// Number of paths ending at an output neuron, via a single forward pass with
// all parameters equal to one, identity activations, and unit inputs. Biases
// enter as additive ones, which injects exactly one rooted path per biased
// neuron. Works at any size; returns a double since counts grow fast.
inline double path_count_fast(const NetworkGraph& net) {
    const int n = net.num_neurons();
    std::vector<double> c(n, 0.0);
    double total = 0.0;
    for (int v = 0; v < n; ++v) {
        if (net.roles[v] == NeuronRole::input) {
            c[v] = 1.0;
            continue;
        }
        double s = net.has_bias(v) ? 1.0 : 0.0;
        for (int e : net.in_edges[v]) s += c[net.edges[e].src];
        c[v] = s;
        if (net.roles[v] == NeuronRole::output) total += s;
    }
    return total;
}

// All paths from an input or biased neuron to an output neuron, in
// lexicographic neuron-id order. Throws if the count exceeds the cap.
inline std::vector<Path> enumerate_paths(const NetworkGraph& net, long cap = kDefaultPathCap) {
    if (path_count_fast(net) > static_cast<double>(cap))
        throw std::runtime_error("enumerate_paths: path cap exceeded");

    std::vector<Path> paths;
    std::vector<int> neurons, params;

    auto dfs = [&](auto&& self, int v) -> void {
        if (net.roles[v] == NeuronRole::output) {
            Path p;
            p.neurons = neurons;
            p.params = params;
            p.bias_rooted = net.has_bias(neurons.front());
            if (p.bias_rooted) p.params.insert(p.params.begin(), net.bias_param[neurons.front()]);
            paths.push_back(std::move(p));
            return;
        }
        // out_edges are in construction order; sort targets by id for a
        // deterministic lexicographic enumeration.
        std::vector<int> es = net.out_edges[v];
        std::sort(es.begin(), es.end(),
                  [&](int a, int b) { return net.edges[a].dst < net.edges[b].dst; });
        for (int e : es) {
            neurons.push_back(net.edges[e].dst);
            params.push_back(net.edge_param[e]);
            self(self, net.edges[e].dst);
            neurons.pop_back();
            params.pop_back();
        }
    };

    for (int v = 0; v < net.num_neurons(); ++v) {
        const bool roots = net.roles[v] == NeuronRole::input || net.has_bias(v);
        if (!roots) continue;
        neurons.assign(1, v);
        params.clear();
        dfs(dfs, v);
    }
    return paths;
}

// Phi_p(theta) = product of the path's parameters (empty product = 1).
inline PathLifting phi(const NetworkGraph& net, const ParamVector& theta,
                       long cap = kDefaultPathCap) {
    PathLifting out;
    for (const auto& p : enumerate_paths(net, cap)) {
        double prod = 1.0;
        for (int i : p.params) prod *= theta[i];
        out.values.push_back(prod);
    }
    return out;
}

// Dense Jacobian of the path-lifting: entry (path, i) is the leave-one-out
// product over the path when i lies on it, 0 otherwise.
inline Eigen::MatrixXd phi_jacobian(const NetworkGraph& net, const ParamVector& theta,
                                    long cap = kDefaultPathCap) {
    const auto paths = enumerate_paths(net, cap);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<long>(paths.size()), net.p);
    for (size_t r = 0; r < paths.size(); ++r) {
        const auto& prm = paths[r].params;
        for (size_t k = 0; k < prm.size(); ++k) {
            double prod = 1.0;
            for (size_t j = 0; j < prm.size(); ++j)
                if (j != k) prod *= theta[prm[j]];
            J(static_cast<long>(r), prm[k]) = prod;
        }
    }
    return J;
}

inline Eigen::MatrixXd gram(const NetworkGraph& net, const ParamVector& theta,
                            long cap = kDefaultPathCap) {
    const auto J = phi_jacobian(net, theta, cap);
    return J.transpose() * J;
}

inline Eigen::MatrixXd path_kernel(const NetworkGraph& net, const ParamVector& theta,
                                   long q_cap = 2000) {
    const auto J = phi_jacobian(net, theta, q_cap);
    return J * J.transpose();
}

// Bregman logdet divergence to the identity restricted to nonzero
// eigenvalues: tr(alpha G) - sum_{lambda>0} log(alpha lambda) - rank.
// Eigenvalues below 1e-10 * lambda_max count as zero.
inline double divergence_logdet_plus(const Eigen::MatrixXd& G, double alpha) {
    if (alpha <= 0) throw std::invalid_argument("divergence_logdet_plus: alpha must be positive");
    if (!G.isApprox(G.transpose(), 1e-9))
        throw std::invalid_argument("divergence_logdet_plus: non-symmetric input");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const auto& ev = es.eigenvalues();
    const double lmax = ev.size() ? ev.maxCoeff() : 0.0;
    const double cut = 1e-10 * lmax;
    double d = alpha * G.trace();
    for (long i = 0; i < ev.size(); ++i) {
        if (ev(i) > cut) d -= std::log(alpha * ev(i)) + 1.0;
    }
    return d;
}

inline int rank_plus(const Eigen::MatrixXd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const auto& ev = es.eigenvalues();
    const double cut = 1e-10 * (ev.size() ? ev.maxCoeff() : 0.0);
    int r = 0;
    for (long i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) ++r;
    return r;
}

// min over alpha > 0, attained at alpha* = rank / tr(G).
inline double min_divergence_logdet_plus(const Eigen::MatrixXd& G) {
    const int r = rank_plus(G);
    if (r == 0) return 0.0;
    const double alpha = r / G.trace();
    return divergence_logdet_plus(G, alpha);
}

// Membership in the rescaling group: d > 0 belongs iff its path-lifting is
// the all-ones vector.
inline bool group_membership_check(const NetworkGraph& net, const std::vector<double>& d,
                                   double tol = 1e-10) {
    for (double v : d)
        if (v <= 0) throw std::invalid_argument("group_membership_check: non-positive entry");
    const auto lifted = phi(net, ParamVector(std::vector<double>(d)));
    for (double v : lifted.values)
        if (std::abs(v - 1.0) > tol) return false;
    return true;
}

// Reconstructs each output as a sum over active paths and returns the max
// absolute difference against forward(). A path is active iff every hidden
// neuron on it has strictly positive pre-activation (ties count inactive,
// matching ReLU'(0) = 0).
inline double output_factorization_check(const NetworkGraph& net, const ParamVector& theta,
                                         const std::vector<double>& x,
                                         long cap = kDefaultPathCap) {
    Activations acts;
    const auto out = forward(net, theta, x, &acts);

    std::vector<int> input_pos(net.num_neurons(), -1);
    int xi = 0;
    for (int v = 0; v < net.num_neurons(); ++v)
        if (net.roles[v] == NeuronRole::input) input_pos[v] = xi++;
    std::vector<int> output_pos(net.num_neurons(), -1);
    int oi = 0;
    for (int v = 0; v < net.num_neurons(); ++v)
        if (net.roles[v] == NeuronRole::output) output_pos[v] = oi++;

    std::vector<double> recon(out.size(), 0.0);
    for (const auto& p : enumerate_paths(net, cap)) {
        bool active = true;
        for (int v : p.neurons)
            if (net.roles[v] == NeuronRole::hidden && acts.pre[v] <= 0.0) {
                active = false;
                break;
            }
        if (!active) continue;
        double prod = 1.0;
        for (int i : p.params) prod *= theta[i];
        const double source = p.bias_rooted ? 1.0 : x[input_pos[p.neurons.front()]];
        recon[output_pos[p.neurons.back()]] += prod * source;
    }

    double resid = 0.0;
    for (size_t j = 0; j < out.size(); ++j) resid = std::max(resid, std::abs(out[j] - recon[j]));
    return resid;
}

} // namespace pathcond

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pathcond/netgraph.hpp"
#include "pathcond/nncore.hpp"

namespace pathcond {

struct PathDiagonal {
    std::vector<double> g; // length p, canonical layout
};

// g = diag(G) in O(p), via the squared-parameter identity: with
// omega = theta^2 entrywise, the linearized network (identity activations,
// unit inputs, biases as parameters) computes S(omega) = sum_p Phi_p(omega),
// and g = dS/domega. The reverse pass is written directly on the graph:
// alpha(v) accumulates path-sums from inputs/biases into v, beta(v)
// path-sums from v to the outputs, so g_edge(s->t) = alpha(s) * beta(t) and
// g_bias(v) = beta(v). No division by theta anywhere, so zero parameters
// are handled natively.
inline PathDiagonal diag_g_fast(const NetworkGraph& net, const ParamVector& theta) {
    const int n = net.num_neurons();
    std::vector<double> omega(net.p);
    for (int i = 0; i < net.p; ++i) omega[i] = theta[i] * theta[i];

    std::vector<double> alpha(n, 0.0), beta(n, 0.0);
    for (int v = 0; v < n; ++v) {
        if (net.roles[v] == NeuronRole::input) {
            alpha[v] = 1.0;
            continue;
        }
        double s = net.has_bias(v) ? omega[net.bias_param[v]] : 0.0;
        for (int e : net.in_edges[v]) s += omega[net.edge_param[e]] * alpha[net.edges[e].src];
        alpha[v] = s;
    }
    for (int v = n - 1; v >= 0; --v) {
        if (net.roles[v] == NeuronRole::output) {
            beta[v] = 1.0;
            continue;
        }
        double s = 0.0;
        for (int e : net.out_edges[v]) s += omega[net.edge_param[e]] * beta[net.edges[e].dst];
        beta[v] = s;
    }

    PathDiagonal out;
    out.g.assign(net.p, 0.0);
    for (size_t e = 0; e < net.edges.size(); ++e)
        out.g[net.edge_param[e]] = alpha[net.edges[e].src] * beta[net.edges[e].dst];
    for (int v = 0; v < n; ++v)
        if (net.has_bias(v)) out.g[net.bias_param[v]] = beta[v];
    return out;
}

// diag(G_{D theta}) = D^{-2} diag(G_theta) for any rescaling-group element D.
inline PathDiagonal diag_invariance_transform(const PathDiagonal& g, const std::vector<double>& d) {
    if (d.size() != g.g.size())
        throw std::invalid_argument("diag_invariance_transform: size mismatch");
    PathDiagonal out;
    out.g.resize(g.g.size());
    for (size_t i = 0; i < d.size(); ++i) {
        if (d[i] <= 0) throw std::invalid_argument("diag_invariance_transform: non-positive scale");
        out.g[i] = g.g[i] / (d[i] * d[i]);
    }
    return out;
}

} // namespace pathcond

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathcond {

enum class NeuronRole : uint8_t { input, hidden, output };

struct Edge {
    int src = -1;
    int dst = -1;
};

// Spec of a layered fully-connected network, kept alongside the graph when
// the graph was built from one (init schemes and regime formulas need it).
struct LfcnSpec {
    std::vector<int> widths;
    bool with_bias = false;
};

// DAG ReLU network structure with a canonical flat parameter layout.
//
// Neuron ids are contiguous 0..|V|-1 and topologically ordered: every edge
// goes from a lower id to a higher id. Parameters are indexed by a bijection
// onto 0..p-1; for LFCNs the layout is, per layer k = 0..L-1: edge weights
// destination-major then source order, followed by that layer's destination
// biases (hidden destinations only -- the output layer carries no bias).
// This layout is versioned as "layout-v1" in serialized parameter files.
class NetworkGraph {
public:
    std::vector<NeuronRole> roles;
    std::vector<Edge> edges;
    std::vector<int> edge_param;             // per edge, index into 0..p-1
    std::vector<int> bias_param;             // per neuron, -1 if no bias
    std::vector<std::vector<int>> in_edges;  // per neuron, incoming edge ids
    std::vector<std::vector<int>> out_edges; // per neuron, outgoing edge ids
    int p = 0;
    int H = 0;
    std::optional<LfcnSpec> lfcn;

    int num_neurons() const { return static_cast<int>(roles.size()); }
    int num_inputs() const { return count_role(NeuronRole::input); }
    int num_outputs() const { return count_role(NeuronRole::output); }
    bool has_bias(int v) const { return bias_param[v] >= 0; }

    void rebuild_adjacency() {
        in_edges.assign(roles.size(), {});
        out_edges.assign(roles.size(), {});
        for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
            out_edges[edges[e].src].push_back(e);
            in_edges[edges[e].dst].push_back(e);
        }
    }

private:
    int count_role(NeuronRole r) const {
        return static_cast<int>(std::count(roles.begin(), roles.end(), r));
    }
};

// Per-hidden-neuron parameter index sets. Column h of the (never
// materialized) matrix B has +1 on out_sets[h], -1 on in_sets[h].
struct NeuronIncidence {
    std::vector<int> hidden_ids;           // neuron id per hidden index
    std::vector<std::vector<int>> in_sets; // incoming edge params + bias
    std::vector<std::vector<int>> out_sets;

    int num_hidden() const { return static_cast<int>(hidden_ids.size()); }
    int num_params() const { return p_; }
    void set_num_params(int p) { p_ = p; }

    // v = B u, computed densely (test/diagnostic use; the solver maintains
    // v incrementally instead).
    std::vector<double> apply_B(const std::vector<double>& u) const {
        std::vector<double> v(p_, 0.0);
        for (int h = 0; h < num_hidden(); ++h) {
            for (int i : out_sets[h]) v[i] += u[h];
            for (int i : in_sets[h]) v[i] -= u[h];
        }
        return v;
    }

private:
    int p_ = 0;
};

// Builds a layered fully-connected ReLU network. Hidden layers carry biases
// when with_bias is set; input and output neurons never do.
inline NetworkGraph build_lfcn(const std::vector<int>& widths, bool with_bias) {
    if (widths.size() < 2) throw std::invalid_argument("build_lfcn: need at least two layers");
    for (int w : widths)
        if (w < 1) throw std::invalid_argument("build_lfcn: zero width");

    const int L = static_cast<int>(widths.size()) - 1;
    NetworkGraph net;
    net.lfcn = LfcnSpec{widths, with_bias};

    std::vector<int> layer_start(L + 2, 0);
    for (int k = 0; k <= L; ++k) layer_start[k + 1] = layer_start[k] + widths[k];
    const int n_total = layer_start[L + 1];

    net.roles.resize(n_total);
    net.bias_param.assign(n_total, -1);
    for (int k = 0; k <= L; ++k) {
        NeuronRole r = (k == 0) ? NeuronRole::input
                                : (k == L ? NeuronRole::output : NeuronRole::hidden);
        for (int j = 0; j < widths[k]; ++j) net.roles[layer_start[k] + j] = r;
    }

    int next = 0;
    for (int k = 0; k < L; ++k) {
        for (int dj = 0; dj < widths[k + 1]; ++dj) {
            const int dst = layer_start[k + 1] + dj;
            for (int sj = 0; sj < widths[k]; ++sj) {
                const int src = layer_start[k] + sj;
                net.edges.push_back({src, dst});
                net.edge_param.push_back(next++);
            }
        }
        if (with_bias && k < L - 1) {
            for (int dj = 0; dj < widths[k + 1]; ++dj)
                net.bias_param[layer_start[k + 1] + dj] = next++;
        }
    }
    net.p = next;
    net.H = 0;
    for (auto r : net.roles)
        if (r == NeuronRole::hidden) ++net.H;
    net.rebuild_adjacency();
    return net;
}

// General-DAG constructor for hand-built graphs (tests, ad-hoc topologies).
// Edge parameters are indexed in edge order, then biases in neuron order.
inline NetworkGraph build_dag(std::vector<NeuronRole> roles, std::vector<Edge> edges,
                              const std::vector<int>& biased_neurons = {}) {
    NetworkGraph net;
    net.roles = std::move(roles);
    net.edges = std::move(edges);
    net.bias_param.assign(net.roles.size(), -1);
    int next = 0;
    net.edge_param.resize(net.edges.size());
    for (size_t e = 0; e < net.edges.size(); ++e) net.edge_param[e] = next++;
    for (int v : biased_neurons) net.bias_param[v] = next++;
    net.p = next;
    net.H = 0;
    for (auto r : net.roles)
        if (r == NeuronRole::hidden) ++net.H;
    net.rebuild_adjacency();
    return net;
}

inline NeuronIncidence incidence(const NetworkGraph& net) {
    NeuronIncidence inc;
    inc.set_num_params(net.p);
    for (int v = 0; v < net.num_neurons(); ++v) {
        if (net.roles[v] != NeuronRole::hidden) continue;
        inc.hidden_ids.push_back(v);
        std::vector<int> in_set, out_set;
        for (int e : net.in_edges[v]) in_set.push_back(net.edge_param[e]);
        if (net.has_bias(v)) in_set.push_back(net.bias_param[v]);
        for (int e : net.out_edges[v]) out_set.push_back(net.edge_param[e]);
        inc.in_sets.push_back(std::move(in_set));
        inc.out_sets.push_back(std::move(out_set));
    }
    return inc;
}

// Checks all structural invariants; returns human-readable violations
// (empty iff the graph is valid).
inline std::vector<std::string> validate_graph(const NetworkGraph& net) {
    std::vector<std::string> out;
    const int n = net.num_neurons();

    for (const auto& e : net.edges) {
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
            out.push_back("edge references nonexistent neuron");
            return out;
        }
        if (e.src >= e.dst)
            out.push_back("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                          " violates topological id order (possible cycle)");
    }

    for (int v = 0; v < n; ++v) {
        const bool has_in = !net.in_edges[v].empty();
        const bool has_out = !net.out_edges[v].empty();
        switch (net.roles[v]) {
        case NeuronRole::input:
            if (has_in) out.push_back("input neuron " + std::to_string(v) + " has antecedents");
            if (net.has_bias(v)) out.push_back("input neuron " + std::to_string(v) + " carries a bias");
            break;
        case NeuronRole::output:
            if (has_out) out.push_back("output neuron " + std::to_string(v) + " has successors");
            if (net.has_bias(v)) out.push_back("output neuron " + std::to_string(v) + " carries a bias");
            break;
        case NeuronRole::hidden:
            if (!has_in) out.push_back("hidden neuron " + std::to_string(v) + " lacks incoming edges");
            if (!has_out) out.push_back("hidden neuron " + std::to_string(v) + " lacks outgoing edges");
            break;
        }
    }

    std::vector<char> seen(net.p, 0);
    int count = 0;
    auto mark = [&](int idx) {
        if (idx < 0 || idx >= net.p || seen[idx]) {
            out.push_back("param_index is not a bijection onto 0..p-1");
            return false;
        }
        seen[idx] = 1;
        ++count;
        return true;
    };
    for (int idx : net.edge_param)
        if (!mark(idx)) return out;
    for (int v = 0; v < n; ++v)
        if (net.has_bias(v) && !mark(net.bias_param[v])) return out;
    if (count != net.p) out.push_back("parameter count mismatch");

    int hidden = 0;
    for (auto r : net.roles)
        if (r == NeuronRole::hidden) ++hidden;
    if (hidden != net.H) out.push_back("hidden neuron count mismatch");

    return out;
}

} // namespace pathcond

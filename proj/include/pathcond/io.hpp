#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathcond/netgraph.hpp"
#include "pathcond/nncore.hpp"

namespace pathcond {

inline constexpr const char* kLayoutVersion = "layout-v1";

struct GraphSpec {
    std::vector<int> widths;
    bool with_bias = false;
};

inline nlohmann::json to_json(const GraphSpec& s) {
    return {{"widths", s.widths}, {"with_bias", s.with_bias}};
}

inline GraphSpec graph_spec_from_json(const nlohmann::json& j) {
    GraphSpec s;
    s.widths = j.at("widths").get<std::vector<int>>();
    s.with_bias = j.at("with_bias").get<bool>();
    return s;
}

inline GraphSpec load_graph_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph spec: " + path);
    nlohmann::json j;
    in >> j;
    return graph_spec_from_json(j);
}

inline NetworkGraph build_from_spec(const GraphSpec& s) { return build_lfcn(s.widths, s.with_bias); }

// --- parameter vectors ----------------------------------------------------
// Two formats share the canonical layout: a JSON array of doubles, or raw
// little-endian IEEE-754 binary next to a JSON sidecar naming the graph spec
// and the layout version.

inline void save_params_json(const std::string& path, const ParamVector& theta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write params: " + path);
    out << std::setprecision(17) << nlohmann::json(theta.values) << "\n";
}

inline ParamVector load_params_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open params: " + path);
    nlohmann::json j;
    in >> j;
    return ParamVector(j.get<std::vector<double>>());
}

inline void save_params_binary(const std::string& path, const ParamVector& theta,
                               const GraphSpec& spec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write params: " + path);
    static_assert(sizeof(double) == 8);
    for (double v : theta.values) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unsigned char buf[8];
        for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(bits >> (8 * b));
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
    nlohmann::json sidecar = {{"layout", kLayoutVersion},
                              {"count", theta.values.size()},
                              {"graph", to_json(spec)}};
    std::ofstream sc(path + ".json");
    sc << sidecar.dump(2) << "\n";
}

inline ParamVector load_params_binary(const std::string& path) {
    std::ifstream sc(path + ".json");
    if (!sc) throw std::runtime_error("missing params sidecar: " + path + ".json");
    nlohmann::json sidecar;
    sc >> sidecar;
    if (sidecar.at("layout").get<std::string>() != kLayoutVersion)
        throw std::runtime_error("unsupported parameter layout version");
    const size_t count = sidecar.at("count").get<size_t>();

    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open params: " + path);
    std::vector<double> values(count);
    for (size_t i = 0; i < count; ++i) {
        unsigned char buf[8];
        if (!in.read(reinterpret_cast<char*>(buf), 8))
            throw std::runtime_error("truncated params file: " + path);
        uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(buf[b]) << (8 * b);
        std::memcpy(&values[i], &bits, 8);
    }
    return ParamVector(std::move(values));
}

// Auto-detect: ".json" suffix selects the JSON array format.
inline ParamVector load_params(const std::string& path) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
        return load_params_json(path);
    return load_params_binary(path);
}

// --- datasets ---------------------------------------------------------------
// CSV with columns x_0..x_{d-1}, y_0..y_{k-1}.

inline void save_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    out << std::setprecision(17);
    const size_t d = ds.X.empty() ? 0 : ds.X[0].size();
    const size_t k = ds.Y.empty() ? 0 : ds.Y[0].size();
    for (size_t j = 0; j < d; ++j) out << "x_" << j << ",";
    for (size_t j = 0; j < k; ++j) out << "y_" << j << (j + 1 < k ? "," : "\n");
    for (size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.X[i]) out << v << ",";
        for (size_t j = 0; j < k; ++j) out << ds.Y[i][j] << (j + 1 < k ? "," : "\n");
    }
}

inline Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
    size_t d = 0, k = 0;
    {
        std::stringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col.rfind("x_", 0) == 0) ++d;
            else if (col.rfind("y_", 0) == 0) ++k;
            else throw std::runtime_error("bad dataset header column: " + col);
        }
    }
    Dataset ds;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> x, y;
        for (size_t j = 0; j < d + k; ++j) {
            if (!std::getline(ls, cell, ',')) throw std::runtime_error("short dataset row");
            (j < d ? x : y).push_back(std::stod(cell));
        }
        ds.X.push_back(std::move(x));
        ds.Y.push_back(std::move(y));
    }
    return ds;
}

// --- run manifest -----------------------------------------------------------

inline void write_manifest(const std::string& path, const nlohmann::json& config) {
    nlohmann::json m = {{"tool", "pathcond"},
                        {"version", "0.1.0"},
                        {"layout", kLayoutVersion},
                        {"config", config}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << m.dump(2) << "\n";
}

} // namespace pathcond

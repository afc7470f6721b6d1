// Command-line entry point: experiment runners and utilities over LFCN
// graph specs and canonical parameter files. All runs write a manifest JSON
// next to their outputs. Exit codes: 0 success, 1 config error, 2 numerical
// failure.

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathcond/experiments.hpp"
#include "pathcond/io.hpp"
#include "pathcond/netgraph.hpp"
#include "pathcond/nncore.hpp"
#include "pathcond/pathdiag.hpp"
#include "pathcond/pathoracle.hpp"
#include "pathcond/regimes.hpp"
#include "pathcond/rescale.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pathcond;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(17);
    return out;
}

int cmd_pathcount(const std::string& net_path) {
    const auto net = build_from_spec(load_graph_spec(net_path));
    std::cout << std::setprecision(17) << path_count_fast(net) << "\n";
    return 0;
}

int cmd_diag(const std::string& net_path, const std::string& params_path) {
    const auto spec = load_graph_spec(net_path);
    const auto net = build_from_spec(spec);
    const auto theta = load_params(params_path);
    if (static_cast<int>(theta.size()) != net.p)
        throw std::runtime_error("parameter count does not match graph");
    const auto g = diag_g_fast(net, theta);

    double gmin = g.g[0], gmax = g.g[0];
    for (double v : g.g) {
        gmin = std::min(gmin, v);
        gmax = std::max(gmax, v);
    }
    json per_layer = json::array();
    const auto& widths = spec.widths;
    int idx = 0;
    for (size_t k = 0; k + 1 < widths.size(); ++k) {
        double sum = 0.0;
        int cnt = widths[k] * widths[k + 1];
        for (int j = 0; j < cnt; ++j) sum += g.g[idx++];
        if (spec.with_bias && k + 2 < widths.size()) {
            for (int j = 0; j < widths[k + 1]; ++j) sum += g.g[idx++];
            cnt += widths[k + 1];
        }
        per_layer.push_back(sum / cnt);
    }
    json out = {{"min", gmin},
                {"max", gmax},
                {"spread", gmin > 0 ? gmax / gmin : std::numeric_limits<double>::infinity()},
                {"per_layer_means", per_layer}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_rescale(const std::string& net_path, const std::string& params_path,
                const std::string& method, double tol, int max_sweeps,
                const std::string& out_path, const std::string& report_path) {
    const auto spec = load_graph_spec(net_path);
    const auto net = build_from_spec(spec);
    const auto theta = load_params(params_path);
    if (static_cast<int>(theta.size()) != net.p)
        throw std::runtime_error("parameter count does not match graph");

    json report = {{"method", method}};
    ParamVector theta_out;
    if (method == "pathcond") {
        PathCondConfig cfg;
        cfg.tol = tol;
        cfg.max_sweeps = max_sweeps;
        auto [t, sol] = pathcond::pathcond(net, theta, cfg);
        theta_out = std::move(t);
        double umax = 0.0, logd = 0.0;
        for (double uh : sol.u) umax = std::max(umax, std::abs(uh));
        for (double di : sol.d) logd = std::max(logd, std::abs(std::log(di)));
        report["u_inf_norm"] = umax;
        report["log_rescale_inf"] = logd;
        report["sweeps"] = sol.sweeps;
        report["converged"] = sol.converged;
        report["objective_trace"] = sol.objective_trace;
        report["skipped_neurons"] = sol.skipped_neurons;
    } else if (method == "enorm") {
        theta_out = enorm(net, theta, 1);
        double logd = 0.0;
        for (int i = 0; i < net.p; ++i)
            if (theta[i] != 0.0)
                logd = std::max(logd, std::abs(std::log(std::abs(theta_out[i] / theta[i]))));
        report["log_rescale_inf"] = logd;
    } else {
        throw CLI::ValidationError("--method must be pathcond or enorm");
    }

    if (out_path.size() >= 5 && out_path.compare(out_path.size() - 5, 5, ".json") == 0)
        save_params_json(out_path, theta_out);
    else
        save_params_binary(out_path, theta_out, spec);
    if (!report_path.empty()) open_out(report_path) << report.dump(2) << "\n";
    write_manifest(out_path + ".manifest.json",
                   {{"command", "rescale"}, {"net", net_path}, {"params", params_path},
                    {"method", method}, {"tol", tol}, {"max_sweeps", max_sweeps}});
    return 0;
}

int cmd_toy(double lr, int steps, uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    // strongly unbalanced (small u, large v), large-v with negative bias,
    // mildly unbalanced -- all with the gradient-suppressing imbalance that
    // rescaling at init repairs
    const std::vector<std::array<double, 3>> inits = {
        {0.05, 3.0, 1.0}, {0.3, 2.0, -1.0}, {0.8, 1.2, 0.4}};

    auto csv = open_out(out_dir + "/toy_trajectories.csv");
    csv << "init,run,step,loss,u,v,w,phi1,phi2,ideal1,ideal2\n";
    json summary = json::array();
    for (size_t i = 0; i < inits.size(); ++i) {
        const auto traj = toy_flow(inits[i], lr, steps, seed);
        for (size_t s = 0; s < traj.raw.size(); ++s) {
            for (const auto& [run, name] :
                 {std::pair{&traj.raw, "raw"}, std::pair{&traj.rescaled, "rescaled"}}) {
                const auto& r = (*run)[s];
                csv << i << "," << name << "," << s << "," << r.loss << "," << r.theta[0] << ","
                    << r.theta[1] << "," << r.theta[2] << "," << r.phi[0] << "," << r.phi[1] << ","
                    << traj.ideal[s][0] << "," << traj.ideal[s][1] << "\n";
            }
        }
        summary.push_back({{"init", inits[i]},
                           {"raw_phi_distance", traj.raw_phi_distance},
                           {"rescaled_phi_distance", traj.rescaled_phi_distance},
                           {"raw_final_loss", traj.raw.back().loss},
                           {"rescaled_final_loss", traj.rescaled.back().loss},
                           {"balance_drift", traj.balance_drift}});
    }
    open_out(out_dir + "/report.json") << summary.dump(2) << "\n";
    write_manifest(out_dir + "/manifest.json",
                   {{"command", "toy"}, {"lr", lr}, {"steps", steps}, {"seed", seed}});
    return 0;
}

int cmd_train(const std::string& net_path, const std::string& dataset_path,
              const std::vector<std::string>& methods, double lr, int batch, int epochs,
              uint64_t seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto net = build_from_spec(load_graph_spec(net_path));
    const auto ds = load_dataset_csv(dataset_path);
    if (ds.size() == 0) throw std::runtime_error("empty dataset");

    std::vector<Method> ms;
    for (const auto& m : methods) {
        if (m == "baseline") ms.push_back(Method::baseline);
        else if (m == "pathcond") ms.push_back(Method::pathcond_init);
        else if (m == "enorm") ms.push_back(Method::enorm_per_step);
        else throw CLI::ValidationError("unknown method: " + m);
    }

    InitConfig ic;
    ic.seed = seed;
    const auto theta0 = init(net, ic);
    TrainConfig tc;
    tc.learning_rate = lr;
    tc.batch_size = batch;
    tc.epochs = epochs;
    tc.seed = seed;
    tc.loss = ds.classification ? LossKind::cross_entropy : LossKind::mse;

    const auto runs = train_compare(net, ds, ms, theta0, tc);

    auto csv = open_out(out_dir + "/metrics.csv");
    csv << "method,epoch,step,train_loss,train_acc\n";
    json summary = json::array();
    for (const auto& run : runs) {
        for (const auto& rec : run.trajectory)
            csv << method_name(run.method) << "," << rec.epoch << "," << rec.step << ","
                << rec.train_loss << "," << rec.train_acc << "\n";
        summary.push_back({{"method", method_name(run.method)},
                           {"initial_loss", run.initial_loss},
                           {"final_loss", run.trajectory.back().train_loss},
                           {"epochs_to_target", run.epochs_to_target},
                           {"log_rescale_inf", run.log_rescale_inf}});
    }
    open_out(out_dir + "/summary.json") << summary.dump(2) << "\n";
    write_manifest(out_dir + "/manifest.json",
                   {{"command", "train"}, {"net", net_path}, {"dataset", dataset_path},
                    {"methods", methods}, {"lr", lr}, {"batch_size", batch},
                    {"epochs", epochs}, {"seed", seed}});
    return 0;
}

int cmd_regimes(int depth, int mean_width, int count, const std::vector<double>& a_values,
                uint64_t seed, int in_dim, int out_dim, const std::string& out_path) {
    std::vector<std::vector<int>> archs;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> logalpha(std::log(0.1), std::log(100.0));
    for (int i = 0; i < count; ++i) {
        const double alpha = std::exp(logalpha(rng));
        auto hidden = dirichlet_widths(depth, mean_width, alpha, seed + 1000 + i);
        std::vector<int> widths;
        widths.push_back(in_dim);
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(out_dim);
        archs.push_back(std::move(widths));
    }
    const auto rows = regime_report(archs, a_values, seed);
    auto csv = open_out(out_path);
    csv << "arch_id,width_ratio,a,log_rescale_inf,expected_spread\n";
    for (const auto& r : rows)
        csv << r.arch_id << "," << r.width_ratio << "," << r.a << "," << r.log_rescale_inf << ","
            << r.expected_spread << "\n";
    write_manifest(out_path + ".manifest.json",
                   {{"command", "regimes"}, {"depth", depth}, {"mean_width", mean_width},
                    {"count", count}, {"a_values", a_values}, {"seed", seed}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PathCond: path-conditioned rescaling for DAG ReLU networks"};
    app.require_subcommand(1);

    std::string net_path, params_path, out_path, report_path, out_dir = "out", dataset_path;
    std::string method = "pathcond";
    std::vector<std::string> methods = {"baseline", "pathcond", "enorm"};
    double tol = 1e-8, lr = 1e-3;
    int max_sweeps = 50, steps = 10000, batch = 32, epochs = 10;
    int depth = 8, mean_width = 32, count = 20, in_dim = 16, out_dim = 4;
    std::vector<double> a_values = {0.01, 1.0, 100.0};
    uint64_t seed = 0;

    auto* pc = app.add_subcommand("pathcount", "count paths via a ones-forward pass");
    pc->add_option("--net", net_path, "graph spec JSON")->required();

    auto* dg = app.add_subcommand("diag", "print diag(G) summary statistics as JSON");
    dg->add_option("--net", net_path)->required();
    dg->add_option("--params", params_path)->required();

    auto* rs = app.add_subcommand("rescale", "rescale parameters (pathcond or enorm)");
    rs->add_option("--net", net_path)->required();
    rs->add_option("--params", params_path)->required();
    rs->add_option("--method", method, "pathcond|enorm");
    rs->add_option("--tol", tol);
    rs->add_option("--max-sweeps", max_sweeps);
    rs->add_option("--out", out_path)->required();
    rs->add_option("--report", report_path);

    auto* ty = app.add_subcommand("toy", "one-neuron gradient-descent study");
    ty->add_option("--lr", lr);
    ty->add_option("--steps", steps);
    ty->add_option("--seed", seed);
    ty->add_option("--out-dir", out_dir);

    auto* tr = app.add_subcommand("train", "training comparison across methods");
    tr->add_option("--net", net_path)->required();
    tr->add_option("--dataset", dataset_path, "CSV with x_*/y_* columns")->required();
    tr->add_option("--methods", methods)->delimiter(',');
    tr->add_option("--lr", lr);
    tr->add_option("--batch-size", batch);
    tr->add_option("--epochs", epochs);
    tr->add_option("--seed", seed);
    tr->add_option("--out-dir", out_dir);

    auto* rg = app.add_subcommand("regimes", "Dirichlet-width regime analysis CSV");
    rg->add_option("--depth", depth);
    rg->add_option("--mean-width", mean_width);
    rg->add_option("--count", count);
    rg->add_option("--a-values", a_values)->delimiter(',');
    rg->add_option("--in-dim", in_dim);
    rg->add_option("--out-dim", out_dim);
    rg->add_option("--seed", seed);
    rg->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
        if (*pc) return cmd_pathcount(net_path);
        if (*dg) return cmd_diag(net_path, params_path);
        if (*rs) return cmd_rescale(net_path, params_path, method, tol, max_sweeps, out_path,
                                    report_path);
        if (*ty) return cmd_toy(lr, steps, seed, out_dir);
        if (*tr) return cmd_train(net_path, dataset_path, methods, lr, batch, epochs, seed, out_dir);
        if (*rg) return cmd_regimes(depth, mean_width, count, a_values, seed, in_dim, out_dim,
                                    out_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

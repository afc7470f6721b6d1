// Acceptance suite: end-to-end checks of the PathCond implementation against
// independent oracles (exhaustive path enumeration, dense eigendecompositions,
// a generic Newton minimizer) and the qualitative experiment-level claims.
// Each numbered check prints one PASS/FAIL line; the exit code is the number
// of failures.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "pathcond/experiments.hpp"
#include "pathcond/pathdiag.hpp"
#include "pathcond/pathoracle.hpp"
#include "pathcond/regimes.hpp"
#include "pathcond/rescale.hpp"
#include "testutil.hpp"

using namespace pathcond;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %-34s %s\n", ok ? "PASS" : "FAIL", number, name, detail.c_str());
    if (!ok) ++g_failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

NetworkGraph random_oracle_net(std::mt19937_64& rng, bool with_bias, int min_width = 1) {
    std::uniform_int_distribution<int> depth_d(2, 4), width_d(min_width, 6);
    const int L = depth_d(rng);
    std::vector<int> widths(L + 1);
    for (auto& w : widths) w = width_d(rng);
    return build_lfcn(widths, with_bias);
}

ParamVector gaussian_params(const NetworkGraph& net, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> t(net.p);
    for (auto& v : t) {
        do v = N(rng);
        while (v == 0.0);
    }
    return ParamVector(std::move(t));
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> idx(v.size());
        for (size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<int>(i);
        std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (size_t i = 0; i < v.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= ra.size();
    mb /= rb.size();
    double num = 0.0, da = 0.0, db = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

const PathCondConfig kTight = [] {
    PathCondConfig c;
    c.tol = 1e-14;
    c.max_sweeps = 500;
    return c;
}();

// 1. diag_g_fast vs the enumeration gram diagonal on >= 30 random nets.
void check_diag_oracle() {
    const double t0 = now_seconds();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int t = 0; t < 32; ++t) {
        auto net = random_oracle_net(rng, t % 2 == 0);
        auto theta = gaussian_params(net, rng);
        auto g = diag_g_fast(net, theta);
        auto G = gram(net, theta);
        for (int i = 0; i < net.p; ++i)
            worst = std::max(worst, testutil::rel_diff(g.g[i], G(i, i)));
    }
    const double el = now_seconds() - t0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max rel err %.2e on 32 nets, %.1fs", worst, el);
    report(1, "fast diagonal vs oracle", worst <= 1e-10 && el < 10.0, buf);
}

// 2. function and path-lifting invariance of every rescaling transform.
void check_invariance() {
    std::mt19937_64 rng(211);
    std::normal_distribution<double> N(0.0, 1.0);
    double worst_f = 0.0, worst_phi = 0.0;
    for (int t = 0; t < 20; ++t) {
        auto net = random_oracle_net(rng, t % 2 == 0);
        if (net.H == 0) continue;
        auto theta = gaussian_params(net, rng);

        std::vector<ParamVector> outputs;
        outputs.push_back(pathcond::pathcond(net, theta, kTight).first);
        outputs.push_back(enorm(net, theta, 3));
        outputs.push_back(apply_neuron_rescaling(net, theta, testutil::random_lambda(net.H, rng)));

        const auto phi0 = phi(net, theta).values;
        double phi_inf = 0.0;
        for (double v : phi0) phi_inf = std::max(phi_inf, std::abs(v));

        for (const auto& theta2 : outputs) {
            for (int s = 0; s < 100; ++s) {
                std::vector<double> x(net.num_inputs());
                for (auto& v : x) v = N(rng);
                const auto y1 = forward(net, theta, x);
                const auto y2 = forward(net, theta2, x);
                for (size_t j = 0; j < y1.size(); ++j)
                    worst_f = std::max(worst_f,
                                       std::abs(y2[j] - y1[j]) / (1.0 + std::abs(y1[j])));
            }
            const auto phi2 = phi(net, theta2).values;
            for (size_t i = 0; i < phi0.size(); ++i)
                worst_phi =
                    std::max(worst_phi, std::abs(phi2[i] - phi0[i]) / (1.0 + phi_inf));
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |df| %.2e, max |dPhi| %.2e", worst_f, worst_phi);
    report(2, "function & lifting invariance", worst_f <= 1e-9 && worst_phi <= 1e-10, buf);
}

// 3. solver: monotone objective, vanishing gradient, agreement with a dense
//    Newton reference, and the hand-computed single-neuron values.
void check_solver() {
    std::mt19937_64 rng(307);
    bool monotone = true, grad_ok = true, newton_ok = true;
    double worst_grad = 0.0, worst_du = 0.0;
    int newton_nets = 0;
    while (newton_nets < 20) {
        auto net = random_oracle_net(rng, newton_nets % 2 == 0);
        if (net.H == 0) continue;
        ++newton_nets;
        auto theta = gaussian_params(net, rng);
        auto inc = incidence(net);
        auto g = diag_g_fast(net, theta);

        auto cfg = kTight;
        cfg.track_objective_per_update = true;
        auto sol = pathcond_solve(inc, g.g, cfg);
        const auto& tr = sol.objective_trace_updates;
        for (size_t s = 1; s < tr.size(); ++s)
            monotone &= tr[s] <= tr[s - 1] + 1e-12 * std::max(1.0, std::abs(tr[s - 1]));

        for (double gh : objective_F_gradient(sol.u, g.g, inc))
            worst_grad = std::max(worst_grad, std::abs(gh));

        const auto u_ref = testutil::newton_minimize_F(inc, g.g);
        for (int h = 0; h < inc.num_hidden(); ++h)
            worst_du = std::max(worst_du, std::abs(sol.u[h] - u_ref[h]));
    }
    grad_ok = worst_grad <= 1e-6;
    newton_ok = worst_du <= 1e-5;

    // single-hidden-neuron net, theta = (v, w, u) = (3, 1, 2): the balanced
    // point is u_h = log(sqrt(0.4)) and the rescaled diagonal is sqrt(40)
    auto toy = build_lfcn({1, 1, 1}, true);
    ParamVector toy_theta(std::vector<double>{3.0, 1.0, 2.0});
    auto [toy_theta2, toy_sol] = pathcond::pathcond(toy, toy_theta, kTight);
    const bool toy_u_ok = std::abs(toy_sol.u[0] - 0.5 * std::log(0.4)) <= 1e-10;
    auto toy_g2 = diag_g_fast(toy, toy_theta2);
    bool toy_g_ok = true;
    for (double gi : toy_g2.g) toy_g_ok &= std::abs(gi - std::sqrt(40.0)) <= 1e-6;

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "monotone %d, |grad| %.2e, |du vs newton| %.2e, toy %d/%d", (int)monotone,
                  worst_grad, worst_du, (int)toy_u_ok, (int)toy_g_ok);
    report(3, "coordinate solver correctness",
           monotone && grad_ok && newton_ok && toy_u_ok && toy_g_ok, buf);
}

// 4. the exact logdet divergence (eigen oracle) does not increase under the
//    applied rescaling; also pins down the direction of the applied scale.
void check_divergence_decrease() {
    std::mt19937_64 rng(401);
    int ok = 0;
    double worst_incr = -1e300;
    for (int t = 0; t < 20; ++t) {
        auto net = random_oracle_net(rng, t % 2 == 0, /*min_width=*/2);
        auto theta = gaussian_params(net, rng);
        auto [theta2, sol] = pathcond::pathcond(net, theta, kTight);
        (void)sol;
        const double d0 = min_divergence_logdet_plus(gram(net, theta));
        const double d1 = min_divergence_logdet_plus(gram(net, theta2));
        worst_incr = std::max(worst_incr, d1 - d0);
        if (d1 <= d0 + 1e-9) ++ok;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d/20 nets decreased, worst change %+.2e", ok, worst_incr);
    report(4, "oracle divergence decrease", ok == 20, buf);
}

// 5. a uniform diagonal is a fixed point: u = 0 and theta returned unchanged.
void check_fixed_point() {
    auto net = build_lfcn({3, 4, 4, 2}, false);
    auto inc = incidence(net);
    bool ok = true;
    for (double alpha : {1.0, 0.37, 250.0}) {
        auto sol = pathcond_solve(inc, std::vector<double>(net.p, alpha), kTight);
        for (double uh : sol.u) ok &= std::abs(uh) <= 1e-12;
        for (double di : sol.d) ok &= di == 1.0;
    }
    // equal-magnitude parameters on a constant-width net give a uniform
    // diagonal; the teleport must return theta bitwise
    auto net2 = build_lfcn({3, 3, 3}, false);
    std::mt19937_64 rng(503);
    std::vector<double> t(net2.p);
    for (auto& v : t) v = (rng() & 1 ? 1.3 : -1.3);
    ParamVector theta{std::vector<double>(t)};
    auto [theta2, sol2] = pathcond::pathcond(net2, theta, kTight);
    (void)sol2;
    for (int i = 0; i < net2.p; ++i) ok &= theta2[i] == theta[i];
    report(5, "uniform diagonal fixed point", ok, ok ? "u = 0, theta bitwise unchanged" : "drift");
}

// 6. Monte Carlo means vs the closed-form expected diagonal, and the exact
//    constant-width value 1 + k/n.
void check_regime_formulas() {
    const std::vector<std::vector<int>> archs = {{4, 4, 4, 4}, {4, 8, 4}, {8, 2, 8}};
    const std::vector<double> a_values = {0.01, 1.0, 100.0};
    int classes = 0, within = 0;
    uint64_t seed = 601;
    for (const auto& widths : archs) {
        for (double a : a_values) {
            auto spec = RegimeSpec::from_a(widths, a, true);
            auto ed = expected_diag(spec);
            auto mc = monte_carlo_diag(spec, 100000, seed++);
            for (int k = 0; k < spec.depth(); ++k) {
                ++classes;
                if (std::abs(mc.edge_mean[k] - ed.edge[k]) <= 3.0 * mc.edge_stderr[k]) ++within;
                if (ed.has_bias[k]) {
                    ++classes;
                    if (std::abs(mc.bias_mean[k] - ed.bias[k]) <= 3.0 * mc.bias_stderr[k])
                        ++within;
                }
            }
        }
    }
    bool exact_ok = true;
    for (int n : {2, 8, 32}) {
        auto ed = expected_diag(RegimeSpec::from_a(std::vector<int>(7, n), 1.0, true));
        for (int k = 0; k < 6; ++k)
            exact_ok &= std::abs(ed.edge[k] - (1.0 + static_cast<double>(k) / n)) <= 1e-12;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d/%d classes within 3 se, 1+k/n exact %d", within, classes,
                  (int)exact_ok);
    report(6, "expected diagonal formulas",
           within >= static_cast<int>(std::ceil(0.95 * classes)) && exact_ok, buf);
}

// 7. wider/narrower architectures need larger corrections: rank correlation
//    between hidden width ratio and the applied rescaling magnitude.
void check_regime_correlation() {
    const double t0 = now_seconds();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> logalpha(std::log(0.1), std::log(100.0));
    std::vector<double> ratio, logd;
    for (int i = 0; i < 20; ++i) {
        auto hidden = dirichlet_widths(8, 32, std::exp(logalpha(rng)), 1000 + i);
        std::vector<int> widths = {16};
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(4);
        auto row = regime_row("arch" + std::to_string(i), widths, 0.01, 77 + i);
        ratio.push_back(row.width_ratio);
        logd.push_back(row.log_rescale_inf);
    }
    const double rho = spearman(ratio, logd);
    const double el = now_seconds() - t0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "spearman %.3f over 20 nets, %.1fs", rho, el);
    report(7, "width-imbalance correlation", rho > 0.5 && el < 120.0, buf);
}

// 8. fast path counting equals enumeration exactly, and the layered closed
//    form on fully-connected nets.
void check_path_counting() {
    std::mt19937_64 rng(809);
    bool ok = true;
    for (int t = 0; t < 30; ++t) {
        auto net = random_oracle_net(rng, t % 2 == 0);
        ok &= path_count_fast(net) == static_cast<double>(enumerate_paths(net).size());
    }
    for (const auto& widths :
         {std::vector<int>{5, 10, 7, 3}, {2, 3, 1}, {16, 32, 8, 32, 1}, {6, 6, 6, 6, 6}}) {
        for (bool with_bias : {false, true}) {
            auto net = build_lfcn(widths, with_bias);
            const int L = static_cast<int>(widths.size()) - 1;
            double expect = 1.0;
            for (int w : widths) expect *= w;
            if (with_bias)
                for (int k = 1; k <= L - 1; ++k) {
                    double term = 1.0;
                    for (int i = k; i <= L; ++i) term *= widths[i];
                    expect += term;
                }
            ok &= path_count_fast(net) == expect;
        }
    }
    report(8, "path counting exactness", ok, ok ? "enumeration + closed form exact" : "mismatch");
}

// 9. single-neuron dynamics: the teleported start trains at least as well at
//    step 5000 and tracks the idealized lifted flow strictly closer.
void check_toy_dynamics() {
    const double t0 = now_seconds();
    const std::vector<std::array<double, 3>> inits = {
        {0.05, 3.0, 1.0}, {0.3, 2.0, -1.0}, {0.8, 1.2, 0.4}};
    bool ok = true;
    std::string detail;
    for (const auto& theta0 : inits) {
        const auto tr = toy_flow(theta0, 1e-3, 5000, 1);
        const bool loss_ok = tr.rescaled.back().loss <= tr.raw.back().loss;
        const bool dist_ok = tr.rescaled_phi_distance < tr.raw_phi_distance;
        ok &= loss_ok && dist_ok;
        char buf[64];
        std::snprintf(buf, sizeof buf, " [%.2g:%d%d]", theta0[0], (int)loss_ok, (int)dist_ok);
        detail += buf;
    }
    const double el = now_seconds() - t0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "loss/distance per init:%s, %.1fs", detail.c_str(), el);
    report(9, "toy teleport dynamics", ok && el < 60.0, buf);
}

// 10. near-linear scaling in p and convergence within 10 sweeps at Kaiming
//     initialization.
void check_complexity() {
    std::vector<double> logp, logt;
    bool sweeps_ok = true;
    for (int w : {18, 58, 183, 577}) { // p ~ 1e3, 1e4, 1e5, 1e6
        auto net = build_lfcn({w, w, w, w}, false);
        InitConfig ic;
        ic.seed = 12;
        auto theta = init(net, ic);

        PathCondConfig fixed_work;
        fixed_work.tol = 1e-30;
        fixed_work.max_sweeps = 10;
        const int reps = std::max(4, 400000 / net.p);
        double best = 1e300;
        for (int r = 0; r < reps; ++r) {
            const double t0 = now_seconds();
            auto out = pathcond::pathcond(net, theta, fixed_work);
            (void)out;
            if (r > 0) best = std::min(best, now_seconds() - t0); // skip cold-cache rep
        }
        logp.push_back(std::log(static_cast<double>(net.p)));
        logt.push_back(std::log(best));

        PathCondConfig budget;
        budget.tol = 1e-6;
        budget.max_sweeps = 10;
        auto [t2, sol] = pathcond::pathcond(net, theta, budget);
        (void)t2;
        sweeps_ok &= sol.converged;
    }
    const double n = static_cast<double>(logp.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (size_t i = 0; i < logp.size(); ++i) {
        sx += logp[i];
        sy += logt[i];
        sxy += logp[i] * logt[i];
        sxx += logp[i] * logp[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    char buf[128];
    std::snprintf(buf, sizeof buf, "log-log slope %.3f, <=10-sweep convergence %d", slope,
                  (int)sweeps_ok);
    report(10, "linear-time scaling", slope >= 0.8 && slope <= 1.3 && sweeps_ok, buf);
}

// 11. teacher-student training on a bottlenecked net with a small-variance
//     init: teleport-at-init reaches a tenth of the starting loss no later
//     than the raw init (median of 3 seeds).
void check_train_compare() {
    auto net = build_lfcn({16, 32, 8, 32, 1}, true);
    auto ds = make_teacher_student({16, 8, 1}, 512, 99);
    std::vector<int> base_ett, pc_ett;
    for (uint64_t seed : {1, 2, 3}) {
        InitConfig ic;
        ic.scheme = InitScheme::gaussian_scaled;
        ic.a = 0.05;
        ic.seed = seed;
        auto theta0 = init(net, ic);
        TrainConfig tc;
        tc.learning_rate = 0.01;
        tc.batch_size = 32;
        tc.epochs = 60;
        tc.seed = seed;
        auto runs = train_compare(net, ds, {Method::baseline, Method::pathcond_init}, theta0, tc);
        auto ett = [&](const CompareRun& r) {
            return r.epochs_to_target < 0 ? tc.epochs + 1 : r.epochs_to_target;
        };
        base_ett.push_back(ett(runs[0]));
        pc_ett.push_back(ett(runs[1]));
    }
    auto median = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const int mb = median(base_ett), mp = median(pc_ett);
    char buf[128];
    std::snprintf(buf, sizeof buf, "median epochs to 0.1 L0: teleport %d vs raw %d", mp, mb);
    report(11, "training comparison", mp <= mb, buf);
}

} // namespace

int main() {
    check_diag_oracle();
    check_invariance();
    check_solver();
    check_divergence_decrease();
    check_fixed_point();
    check_regime_formulas();
    check_regime_correlation();
    check_path_counting();
    check_toy_dynamics();
    check_complexity();
    check_train_compare();
    std::printf("%d of 11 checks failed\n", g_failures);
    return g_failures;
}

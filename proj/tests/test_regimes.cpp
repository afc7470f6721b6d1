#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pathcond/regimes.hpp"
#include "testutil.hpp"

using namespace pathcond;

TEST_CASE("expected diagonal on the biased [1,1,1] net, by hand") {
    // g = (u^2, u^2, v^2 + w^2) with independent zero-mean draws:
    // E[g_v] = E[g_w] = sigma_1^2, E[g_u] = sigma_0^2 + sigma_b^2 = 2 sigma_0^2
    RegimeSpec spec;
    spec.widths = {1, 1, 1};
    spec.sigma2 = {0.3, 0.7};
    spec.with_bias = true;
    auto ed = expected_diag(spec);
    REQUIRE(ed.edge.size() == 2);
    CHECK(ed.edge[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(ed.edge[1] == doctest::Approx(0.6).epsilon(1e-14));
    REQUIRE(ed.has_bias[0]);
    CHECK(ed.bias[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK_FALSE(ed.has_bias[1]);
}

TEST_CASE("constant width, a = 1, with bias: expected edge diagonal is 1 + k/n") {
    for (int n : {2, 4, 16}) {
        for (int L : {2, 4, 6}) {
            auto spec = RegimeSpec::from_a(std::vector<int>(L + 1, n), 1.0, true);
            auto ed = expected_diag(spec);
            for (int k = 0; k < L; ++k)
                CHECK(std::abs(ed.edge[k] - (1.0 + static_cast<double>(k) / n)) < 1e-12);
        }
    }
}

TEST_CASE("without bias the expected edge diagonal is flat in constant width") {
    auto spec = RegimeSpec::from_a({8, 8, 8, 8}, 1.0, false);
    auto ed = expected_diag(spec);
    for (double e : ed.edge) CHECK(std::abs(e - 1.0) < 1e-12);
}

TEST_CASE("monte carlo agrees with the closed form on a small biased net") {
    auto spec = RegimeSpec::from_a({3, 4, 2}, 1.3, true);
    auto ed = expected_diag(spec);
    auto mc = monte_carlo_diag(spec, 20000, 5);
    for (int k = 0; k < spec.depth(); ++k) {
        CHECK(std::abs(mc.edge_mean[k] - ed.edge[k]) < 4.0 * mc.edge_stderr[k]);
        if (ed.has_bias[k])
            CHECK(std::abs(mc.bias_mean[k] - ed.bias[k]) < 4.0 * mc.bias_stderr[k]);
    }
    CHECK_THROWS_AS(monte_carlo_diag(spec, 10, 5), std::invalid_argument);
}

TEST_CASE("dirichlet widths: budget, floor, determinism") {
    for (uint64_t seed : {1, 2, 3, 4, 5}) {
        for (double alpha : {0.2, 1.0, 10.0}) {
            auto w = dirichlet_widths(8, 32, alpha, seed);
            REQUIRE(w.size() == 8);
            CHECK(std::accumulate(w.begin(), w.end(), 0) == 8 * 32);
            for (int x : w) CHECK(x >= 1);
            CHECK(w == dirichlet_widths(8, 32, alpha, seed));
        }
    }
    // small alpha concentrates mass, large alpha evens it out
    auto spread = [](const std::vector<int>& w) {
        return *std::max_element(w.begin(), w.end()) -
               *std::min_element(w.begin(), w.end());
    };
    int sharp = 0, flat = 0;
    for (uint64_t s = 0; s < 20; ++s) {
        sharp += spread(dirichlet_widths(8, 32, 0.1, s));
        flat += spread(dirichlet_widths(8, 32, 50.0, s));
    }
    CHECK(sharp > flat);
}

TEST_CASE("regime rows carry the rescaling magnitude and expected spread") {
    auto rows = regime_report({{4, 8, 2, 4}, {4, 4, 4, 4}}, {0.01, 1.0}, 11);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].arch_id == "arch0");
    CHECK(rows[0].width_ratio == doctest::Approx(4.0));
    CHECK(rows[2].width_ratio == doctest::Approx(1.0));
    for (const auto& r : rows) {
        CHECK(r.log_rescale_inf >= 0.0);
        CHECK(r.expected_spread >= 1.0);
        CHECK(r.sweeps >= 1);
    }
    // uneven widths at small a need a much larger correction than even ones
    CHECK(rows[0].log_rescale_inf > rows[2].log_rescale_inf);
}

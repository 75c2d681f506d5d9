#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "support/oracles.hpp"
#include "vcdp/bootstrap.hpp"
#include "vcdp/error.hpp"
#include "vcdp/parallel.hpp"
#include "vcdp/simulator.hpp"

using namespace vcdp;

namespace {

Multipliers constant_multipliers(int n, double v) { return {Eigen::MatrixXd::Constant(n, 4, v)}; }

Panel noisy_panel() {
    const auto truth = oracle::constant_truth(5, 1, 2, 1, 40);
    return oracle::generated_panel(truth, 30, 41, false, 0.4);
}

BaseModel small_base() {
    SynthConfig cfg;
    cfg.pool_days = 60;
    return synth_base(cfg, 31);
}

bool same_result(const TestResult& a, const TestResult& b) {
    return a.estimate == b.estimate && a.boot_stats == b.boot_stats && a.critical_value == b.critical_value &&
           a.p_value == b.p_value && a.reject == b.reject;
}

}  // namespace

TEST_CASE("pseudo panel identities") {
    const Panel panel = simulate(small_base(), 20, 2.0, 6);
    const ModelFit fit = fit_model(panel);
    const int n = panel.schema.n, m = panel.schema.m, q = panel.schema.q;

    SUBCASE("zero multipliers give the fitted values") {
        const Panel p0 = make_pseudo_panel(panel, fit, constant_multipliers(n, 0.0));
        for (Group g : kGroups) {
            const int gi = index_of(g);
            for (int d = 0; d < n; ++d) {
                for (int t = 0; t < m; ++t) CHECK(p0.group(g).y(d, t) == fit.fitted_y[gi](d, t));
                for (int t = 0; t + 1 < m; ++t)
                    for (int nu = 0; nu < q; ++nu) CHECK(p0.group(g).s(d, t + 1)[nu] == fit.fitted_s[gi](d, t * q + nu));
                for (int nu = 0; nu < q; ++nu) CHECK(p0.group(g).s(d, 0)[nu] == panel.group(g).s(d, 0)[nu]);
            }
        }
        CHECK(p0.f == panel.f);
    }
    SUBCASE("unit multipliers give the observed panel") {
        const Panel p1 = make_pseudo_panel(panel, fit, constant_multipliers(n, 1.0));
        CHECK(p1 == panel);
    }
    SUBCASE("negative unit multipliers reflect through the fit") {
        const Panel pm = make_pseudo_panel(panel, fit, constant_multipliers(n, -1.0));
        for (Group g : kGroups) {
            const int gi = index_of(g);
            for (int d = 0; d < n; ++d)
                for (int t = 0; t < m; ++t)
                    CHECK(std::abs(pm.group(g).y(d, t) - (2.0 * fit.fitted_y[gi](d, t) - panel.group(g).y(d, t))) <
                          1e-12);
        }
    }
    SUBCASE("one multiplier per day, equation and group") {
        Multipliers xi = constant_multipliers(n, 0.0);
        xi.xi(3, Multipliers::column(false, Group::kTreated)) = 2.0;
        xi.xi(5, Multipliers::column(true, Group::kControl)) = -1.5;
        const Responses r = pseudo_responses(fit, xi);
        for (int t = 0; t < m; ++t) {
            CHECK(r.y[1](3, t) == fit.fitted_y[1](3, t) + 2.0 * fit.eps[1](3, t));
            CHECK(r.y[0](3, t) == fit.fitted_y[0](3, t));
        }
        for (int c = 0; c < (m - 1) * q; ++c) {
            CHECK(r.s_next[0](5, c) == fit.fitted_s[0](5, c) - 1.5 * fit.state_resid[0](5, c));
            CHECK(r.s_next[1](5, c) == fit.fitted_s[1](5, c));
        }
    }
    SUBCASE("dimension mismatch") {
        bool threw = false;
        try {
            make_pseudo_panel(panel, fit, constant_multipliers(n + 1, 1.0));
        } catch (const Error& e) {
            threw = e.code() == ErrorCode::kDimensionMismatch;
        }
        CHECK(threw);
    }
}

TEST_CASE("multiplier draws") {
    const auto a = draw_multipliers(20, 5, 7);
    const auto b = draw_multipliers(20, 5, 7);
    CHECK(a.xi == b.xi);
    CHECK(a.xi != draw_multipliers(20, 5, 8).xi);
    CHECK(a.xi != draw_multipliers(20, 6, 7).xi);
    const auto single = draw_multipliers(20, 5, 7, true);
    for (int d = 0; d < 20; ++d)
        for (int c = 1; c < 4; ++c) CHECK(single.xi(d, c) == single.xi(d, 0));
}

TEST_CASE("noiseless data gives degenerate bootstrap draws") {
    const auto truth = oracle::constant_truth(5, 1, 2, 1, 3);
    BootstrapConfig cfg;
    cfg.replicates = 50;
    cfg.seed = 1;
    SUBCASE("with an effect the p-value rule gives 1/(B+1)") {
        const TestResult r = bootstrap_test(oracle::generated_panel(truth, 25, 8), cfg);
        for (double tb : r.boot_stats) CHECK(std::abs(tb) < 1e-9 * std::max(1.0, std::abs(r.estimate)));
        REQUIRE(std::abs(r.estimate) > 1e-6);
        CHECK(r.p_value == (r.estimate > 0.0 ? 1.0 / 51.0 : 1.0));
        CHECK(r.reject == (r.estimate > 0.0));
    }
    SUBCASE("A/A panel") {
        Panel aa = oracle::generated_panel(truth, 25, 8, true);
        aa.group(Group::kTreated) = aa.group(Group::kControl);
        const TestResult r = bootstrap_test(aa, cfg);
        CHECK(r.estimate == 0.0);
        for (double tb : r.boot_stats) CHECK(tb == 0.0);
        CHECK(r.p_value == 1.0);
        CHECK_FALSE(r.reject);
    }
}

TEST_CASE("result invariants and determinism") {
    const Panel panel = simulate(small_base(), 14, 3.0, 5);
    BootstrapConfig cfg;
    cfg.replicates = 120;
    cfg.seed = 77;
    const TestResult r = bootstrap_test(panel, cfg);
    CHECK(r.replicates == 120);
    CHECK(r.boot_stats.size() == 120u);
    CHECK(r.reject == (r.estimate > r.critical_value));
    const auto exceed = std::count_if(r.boot_stats.begin(), r.boot_stats.end(), [&](double t) { return t >= r.estimate; });
    CHECK(r.p_value == static_cast<double>(1 + exceed) / 121.0);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value <= 1.0);
    CHECK(r.critical_value == empirical_quantile(r.boot_stats, 0.95));
    REQUIRE(r.decomposition.has_value());
    CHECK(r.decomposition->gate == r.estimate);

    CHECK(same_result(r, bootstrap_test(panel, cfg)));
    for (int workers : {2, 3, 8}) {
        BootstrapConfig par = cfg;
        par.workers = workers;
        CHECK(same_result(r, bootstrap_test(panel, par)));
    }
    BootstrapConfig other = cfg;
    other.seed = 78;
    CHECK(bootstrap_test(panel, other).boot_stats != r.boot_stats);
}

TEST_CASE("p-value is non-increasing in the statistic") {
    TestResult r;
    r.boot_stats = {-2.0, -1.0, -0.5, 0.0, 0.1, 0.2, 0.9, 1.5, 3.0, 4.0};
    double last = 2.0;
    for (double t = -3.0; t <= 5.0; t += 0.05) {
        r.estimate = t;
        finalize_test(r);
        CHECK(r.p_value <= last);
        last = r.p_value;
    }
    r.estimate = 1.5;
    finalize_test(r);
    CHECK(r.p_value == 4.0 / 11.0);
    CHECK(r.critical_value == 4.0);
}

TEST_CASE("several functionals share replicates") {
    const Panel panel = simulate(small_base(), 14, 2.0, 9);
    BootstrapConfig cfg;
    cfg.replicates = 40;
    cfg.seed = 3;
    const Functional both[] = {Functional::kNaiveTau, Functional::kGate};
    const auto results = bootstrap_functionals(panel, cfg, both);
    REQUIRE(results.size() == 2);
    CHECK(results[0].statistic == Functional::kNaiveTau);
    CHECK(same_result(results[1], bootstrap_test(panel, cfg)));
}

TEST_CASE("config validation") {
    const Panel panel = noisy_panel();
    auto code = [&](BootstrapConfig c) {
        try {
            bootstrap_test(panel, c);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::kIo;
    };
    BootstrapConfig c;
    c.replicates = 0;
    CHECK(code(c) == ErrorCode::kInvalidConfig);
    c.replicates = 10;
    c.alpha = 1.0;
    CHECK(code(c) == ErrorCode::kInvalidConfig);
}

TEST_CASE("combining cities") {
    const BaseModel base = small_base();
    BootstrapConfig cfg;
    cfg.replicates = 30;
    cfg.seed = 4;
    std::vector<TestResult> cities;
    for (int r = 0; r < 3; ++r) cities.push_back(bootstrap_test(simulate(base, 14, 1.0, 100 + r), cfg));
    const std::vector<std::int64_t> sizes{100, 200, 300};
    const TestResult all = combine_cities(cities, sizes);
    CHECK(all.estimate == doctest::Approx((100 * cities[0].estimate + 200 * cities[1].estimate +
                                           300 * cities[2].estimate) / 600.0).epsilon(1e-13));
    for (int b = 0; b < 30; ++b)
        CHECK(all.boot_stats[b] == doctest::Approx((100 * cities[0].boot_stats[b] + 200 * cities[1].boot_stats[b] +
                                                     300 * cities[2].boot_stats[b]) / 600.0).epsilon(1e-13));
    CHECK(all.reject == (all.estimate > all.critical_value));
    CHECK_FALSE(all.decomposition.has_value());
}

TEST_CASE("parallel_for reports the lowest failing index") {
    for (int workers : {1, 4}) {
        std::vector<int> out(100, 0);
        try {
            parallel_for(100, workers, [&](std::size_t i) {
                if (i == 37 || i == 81) throw std::runtime_error(std::to_string(i));
                out[i] = 1;
            });
            FAIL("expected a failure");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "37");
        }
    }
}

TEST_CASE("worker resolution") {
    CHECK(resolve_workers(3) == 3);
    setenv("VCDP_WORKERS", "5", 1);
    CHECK(resolve_workers(0) == 5);
    CHECK(resolve_workers(2) == 2);
    unsetenv("VCDP_WORKERS");
    CHECK(resolve_workers(0) == 1);
}

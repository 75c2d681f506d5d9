#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "vcdp/baselines.hpp"
#include "vcdp/error.hpp"
#include "vcdp/simulator.hpp"

using namespace vcdp;

namespace {

// Panel with m = 1 interval-sums chosen directly: day totals equal y.
Panel totals_panel(const std::vector<double>& c1, const std::vector<double>& c0) {
    PanelSchema s;
    s.p = 0;
    s.q = 1;
    s.p_h = 0;
    s.n = static_cast<int>(c1.size());
    s.m = 2;
    s.shared_supply = false;
    Panel panel = Panel::zeros(s);
    std::fill(panel.f.begin(), panel.f.end(), 0.5);
    for (int d = 0; d < s.n; ++d) {
        panel.group(Group::kTreated).y(d, 0) = c1[d];
        panel.group(Group::kControl).y(d, 0) = c0[d];
    }
    return panel;
}

double detail(const BaselineResult& r, const std::string& key) {
    for (const auto& [k, v] : r.details)
        if (k == key) return v;
    FAIL("missing detail " << key);
    return 0.0;
}

}  // namespace

TEST_CASE("Welch t-test against the textbook formula") {
    const Panel panel = totals_panel({5, 6, 7}, {1, 2, 3});
    const auto r = t_test(panel);
    const auto [t, df] = oracle::welch({5, 6, 7}, {1, 2, 3});
    CHECK(detail(r, "t") == doctest::Approx(4.0 * std::sqrt(1.5)).epsilon(1e-12));
    CHECK(detail(r, "t") == doctest::Approx(t).epsilon(1e-12));
    CHECK(detail(r, "df") == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(detail(r, "df") == doctest::Approx(df).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(oracle::t4_upper_tail(t)).epsilon(1e-9));
    CHECK(r.estimate == 4.0);
}

TEST_CASE("t-test edge cases") {
    SUBCASE("identical arrays") {
        const auto r = t_test(totals_panel({3, 8, 1, 4}, {3, 8, 1, 4}));
        CHECK(detail(r, "t") == 0.0);
        CHECK(r.p_value == 0.5);
    }
    SUBCASE("separated groups") {
        const auto r = t_test(totals_panel({1000.001, 1000.002, 1000.0, 1000.003}, {0.001, 0.0, 0.002, 0.003}));
        CHECK(r.p_value < 1e-6);
        CHECK(r.p_value > 0.0);
    }
    SUBCASE("shift invariance") {
        const std::vector<double> a{4.1, 5.3, 2.2, 6.6, 3.0}, b{3.3, 1.9, 4.4, 2.8, 3.9};
        std::vector<double> a2 = a, b2 = b;
        for (auto& v : a2) v += 250.0;
        for (auto& v : b2) v += 250.0;
        const auto r1 = t_test(totals_panel(a, b)), r2 = t_test(totals_panel(a2, b2));
        CHECK(r1.p_value == doctest::Approx(r2.p_value).epsilon(1e-10));
        CHECK(r1.estimate == doctest::Approx(r2.estimate).epsilon(1e-10));
    }
    SUBCASE("one day is not enough") {
        bool threw = false;
        try {
            welch_one_sided(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0});
        } catch (const Error& e) {
            threw = e.code() == ErrorCode::kInsufficientDays;
        }
        CHECK(threw);
    }
}

TEST_CASE("difference in differences") {
    SUBCASE("2x2 cell means") {
        const Panel pre = totals_panel({11, 13}, {9, 11});
        const Panel post = totals_panel({14, 16}, {10, 12});
        const auto r = did(pre, post);
        CHECK(r.estimate == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(detail(r, "pre_c1") == 12.0);
        CHECK(detail(r, "post_c0") == 11.0);
    }
    SUBCASE("no change") {
        const Panel pre = totals_panel({4, 6, 5}, {3, 2, 7});
        CHECK(did(pre, pre).estimate == 0.0);
    }
    SUBCASE("constant added to treated post only") {
        const Panel pre = totals_panel({4, 6, 5}, {3, 2, 7});
        const Panel post = totals_panel({4 + 2.5, 6 + 2.5, 5 + 2.5}, {3, 2, 7});
        CHECK(did(pre, post).estimate == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("group level shifts in both periods cancel") {
        const std::vector<double> p1{4, 6, 5, 7}, p0{3, 2, 7, 1}, q1{8, 6, 9, 7}, q0{3, 5, 4, 6};
        const auto r1 = did(totals_panel(p1, p0), totals_panel(q1, q0));
        auto shift = [](std::vector<double> v, double c) {
            for (auto& x : v) x += c;
            return v;
        };
        const auto r2 = did(totals_panel(shift(p1, 40), shift(p0, -7)), totals_panel(shift(q1, 40), shift(q0, -7)));
        CHECK(r1.estimate == doctest::Approx(r2.estimate).epsilon(1e-12));
        CHECK(r1.p_value == doctest::Approx(r2.p_value).epsilon(1e-10));
    }
    SUBCASE("p-value is the Welch test of post against pre daily contrasts") {
        const std::vector<double> p1{4, 6, 5, 7}, p0{3, 2, 7, 1}, q1{8, 6, 9, 7}, q0{3, 5, 4, 6};
        const auto r = did(totals_panel(p1, p0), totals_panel(q1, q0));
        std::vector<double> post, pre;
        for (int d = 0; d < 4; ++d) {
            post.push_back(q1[d] - q0[d]);
            pre.push_back(p1[d] - p0[d]);
        }
        const auto w = welch_one_sided(post, pre);
        CHECK(r.p_value == w.p_value);
        CHECK(detail(r, "t") == doctest::Approx(oracle::welch(post, pre).first).epsilon(1e-12));
    }
    SUBCASE("missing pre period") {
        bool threw = false;
        try {
            did(Panel{}, totals_panel({1, 2}, {1, 2}));
        } catch (const Error& e) {
            threw = e.code() == ErrorCode::kMissingPrePeriod;
        }
        CHECK(threw);
    }
}

TEST_CASE("DE on a noiseless symmetric panel") {
    auto truth = oracle::constant_truth(5, 1, 2, 1, 17);
    truth.c1 = truth.c0;
    Panel panel = oracle::generated_panel(truth, 25, 3);
    panel.group(Group::kTreated) = panel.group(Group::kControl);
    BootstrapConfig cfg;
    cfg.replicates = 40;
    cfg.seed = 2;
    const auto r = de_test(panel, cfg);
    CHECK(r.estimate == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("DE shares the bootstrap code path") {
    SynthConfig sc;
    sc.pool_days = 60;
    const Panel panel = simulate(synth_base(sc, 5), 14, 3.0, 11);
    BootstrapConfig cfg;
    cfg.replicates = 60;
    cfg.seed = 9;
    const auto de = de_test(panel, cfg);
    const Functional tau[] = {Functional::kNaiveTau};
    const auto direct = bootstrap_functionals(panel, cfg, tau).front();
    CHECK(de.estimate == direct.estimate);
    CHECK(de.p_value == direct.p_value);
    CHECK(de.method == Method::kDe);
    const auto naive = naive_tau(fit_model(panel, cfg.fit).smoothed, group_means(panel));
    CHECK(de.estimate == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("DE tracks GATE under the coincidence condition") {
    auto truth = oracle::constant_truth(5, 2, 2, 1, 61);
    truth.c1.state = truth.c0.state;
    for (auto* c : {&truth.c0, &truth.c1})
        for (int t = 0; t < 4; ++t) c->set_gamma1(t, Eigen::VectorXd::Zero(2));
    truth.c1.outcome.col(0).array() += 0.5;
    BootstrapConfig cfg;
    cfg.replicates = 1;
    const Functional both[] = {Functional::kGate, Functional::kNaiveTau};
    std::vector<double> diff;
    for (int rep = 0; rep < 200; ++rep) {
        const Panel panel = oracle::generated_panel(truth, 40, 500 + rep, false, 0.2);
        const auto r = bootstrap_functionals(panel, cfg, both);
        diff.push_back(r[1].estimate - r[0].estimate);
    }
    double mean = 0.0, sq = 0.0;
    for (double d : diff) mean += d / diff.size();
    for (double d : diff) sq += (d - mean) * (d - mean);
    const double se = std::sqrt(sq / (diff.size() - 1) / diff.size());
    CHECK(std::abs(mean) < 3 * se);
}

TEST_CASE("weighted daily totals") {
    const Panel a = totals_panel({1, 2}, {0, 0}), b = totals_panel({5, 10}, {0, 0});
    const Panel both[] = {a, b};
    Panel a3 = a, b3 = b;
    a3.schema.n0 = a3.schema.n1 = 1;
    b3.schema.n0 = b3.schema.n1 = 3;
    const Panel sized[] = {a3, b3};
    const auto eq = weighted_daily_totals(both, Group::kTreated);
    CHECK(eq == std::vector<double>{3.0, 6.0});
    const auto w = weighted_daily_totals(sized, Group::kTreated);
    CHECK(w[0] == doctest::Approx(0.25 * 1 + 0.75 * 5).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.25 * 2 + 0.75 * 10).epsilon(1e-15));
}

TEST_CASE("method names") {
    for (Method m : {Method::kVcdp, Method::kTTest, Method::kDid, Method::kDe}) CHECK(parse_method(method_name(m)) == m);
    bool threw = false;
    try {
        parse_method("anova");
    } catch (const Error& e) {
        threw = e.code() == ErrorCode::kInvalidConfig;
    }
    CHECK(threw);
}

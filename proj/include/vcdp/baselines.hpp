#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcdp/bootstrap.hpp"
#include "vcdp/panel.hpp"

namespace vcdp {

enum class Method { kVcdp, kTTest, kDid, kDe };

const char* method_name(Method method);  // "vcdp", "ttest", "did", "de"
Method parse_method(const std::string& name);

struct BaselineResult {
    Method method = Method::kTTest;
    double estimate = 0.0;
    double p_value = 1.0;
    std::vector<std::pair<std::string, double>> details;
};

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 0.5;  // one-sided, H1: mean(a) > mean(b)
    double diff = 0.0;
};

/// One-sided Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
WelchResult welch_one_sided(std::span<const double> a, std::span<const double> b);

/// Day totals sum_t Y_{d,C}(t).
std::vector<double> daily_totals(const Panel& panel, Group g);

BaselineResult t_test(const Panel& panel);
BaselineResult t_test_totals(std::span<const double> treated, std::span<const double> control);

/// Difference in differences of day-total means. The p-value compares the
/// experiment-period daily treated-minus-control differences with the
/// pre-period ones (one-sided Welch), so both periods' noise is accounted for.
BaselineResult did(const Panel& pre, const Panel& experiment);
BaselineResult did_totals(std::span<const double> pre_c1, std::span<const double> pre_c0,
                          std::span<const double> post_c1, std::span<const double> post_c0);

/// Day totals of several cities on the same days, weighted by N_r / sum N.
std::vector<double> weighted_daily_totals(std::span<const Panel> panels, Group g);

/// Naive tau with the multiplier bootstrap.
BaselineResult de_test(const Panel& panel, const BootstrapConfig& config);

BaselineResult from_test(Method method, const TestResult& result);

}  // namespace vcdp

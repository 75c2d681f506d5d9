#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vcdp/estimator.hpp"
#include "vcdp/gate.hpp"
#include "vcdp/panel.hpp"

namespace vcdp {

/// One multiplier per (day, equation, group). Columns: Y/C0, Y/C1, S/C0, S/C1.
struct Multipliers {
    Eigen::MatrixXd xi;  // n x 4

    static int column(bool state_equation, Group g) { return (state_equation ? 2 : 0) + index_of(g); }
    double y(int d, Group g) const { return xi(d, column(false, g)); }
    double s(int d, Group g) const { return xi(d, column(true, g)); }
};

/// Standard normal multipliers for bootstrap replicate `replicate`, drawn from
/// stream (seed, replicate). With single_per_day one draw is shared by all four
/// columns of a day.
Multipliers draw_multipliers(int n, std::uint64_t seed, std::uint64_t replicate, bool single_per_day = false);

/// Pseudo responses fitted + xi * residual. The initial state is not perturbed.
Responses pseudo_responses(const ModelFit& fit, const Multipliers& xi);

/// The same pseudo data as a Panel (X, X~, f and S(1) copied from the input).
Panel make_pseudo_panel(const Panel& panel, const ModelFit& fit, const Multipliers& xi);

enum class Functional { kGate, kNaiveTau };

const char* functional_name(Functional f);

struct BootstrapConfig {
    int replicates = 200;
    double alpha = 0.05;
    FitOptions fit;
    std::uint64_t seed = 0;
    ExposurePolicy policy = ExposurePolicy::kExperimentalExposure;
    bool single_multiplier = false;
    // Re-estimate with pseudo states as regressors instead of the original design.
    bool pseudo_state_regressors = false;
    int workers = 1;

    void validate() const;
};

struct TestResult {
    Functional statistic = Functional::kGate;
    double estimate = 0.0;  // T
    std::vector<double> boot_stats;  // T^b = estimate^b - estimate
    double critical_value = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool reject = false;
    int replicates = 0;
    std::uint64_t seed = 0;
    double bandwidth = 0.0;
    ExposurePolicy policy = ExposurePolicy::kExperimentalExposure;
    bool f_identified = true;
    bool single_multiplier = false;
    bool pseudo_state_regressors = false;
    std::optional<GateResult> decomposition;  // set for the GATE statistic
};

/// Critical value, p-value and decision from a statistic and its bootstrap draws.
void finalize_test(TestResult& result);

/// Fits once, then evaluates every requested functional on the same
/// bootstrap replicates. Results come back in the order requested.
std::vector<TestResult> bootstrap_functionals(const Panel& panel, const BootstrapConfig& config,
                                              std::span<const Functional> functionals);

TestResult bootstrap_test(const Panel& panel, const BootstrapConfig& config);

/// Size-weighted combination of per-city tests run with the same B: the
/// estimate and each T^b are combined across cities by replicate index.
TestResult combine_cities(std::span<const TestResult> cities, std::span<const std::int64_t> sizes);

}  // namespace vcdp

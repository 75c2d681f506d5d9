#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vcdp/estimator.hpp"
#include "vcdp/panel.hpp"

namespace vcdp {

/// All-subject plug-in means: each day's value is N-weighted across groups,
/// then averaged over days.
struct PluginMeans {
    Eigen::MatrixXd xbar;   // m x p
    Eigen::MatrixXd xtbar;  // m x p_h
    Eigen::VectorXd s1bar;  // q, state at t = 1
};

PluginMeans plugin_means(const Panel& panel);

struct PluginInputs {
    CoefficientPaths coeffs;
    PluginMeans means;
};

/// How to treat fits without exposure variation (gamma1 not identified).
/// kExperimentalExposure reuses each group's combined intercept for its
/// full-rollout counterfactual; kStrict refuses.
enum class ExposurePolicy { kExperimentalExposure, kStrict };

const char* policy_name(ExposurePolicy policy);
ExposurePolicy parse_policy(const std::string& name);

/// M(0) = s1bar, M(t+1) = gamma0(t) + a gamma1(t) + phi0(t) xtbar(t) + phi1(t) M(t).
std::vector<Eigen::VectorXd> state_mean_path(const GroupCoefficients& coef, double exposure,
                                             const Eigen::VectorXd& s1bar, const Eigen::MatrixXd& xtbar);

struct GateResult {
    double gate = 0.0;
    double direct = 0.0;
    double covariate = 0.0;
    double interference = 0.0;
    Eigen::VectorXd per_t;
};

GateResult gate_closed_form(const PluginInputs& inputs, ExposurePolicy policy = ExposurePolicy::kExperimentalExposure);

/// Per-group empirical means over days of X (m x p) and S (m x q).
struct GroupMeans {
    std::array<Eigen::MatrixXd, 2> x;
    std::array<Eigen::MatrixXd, 2> s;
};

GroupMeans group_means(const Panel& panel);

double naive_tau(const CoefficientPaths& coeffs, const GroupMeans& means);

/// sum_r N_r gate_r / sum_r N_r.
double aggregate_cities(std::span<const double> gates, std::span<const std::int64_t> sizes);

}  // namespace vcdp

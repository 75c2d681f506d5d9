#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vcdp/baselines.hpp"
#include "vcdp/bootstrap.hpp"
#include "vcdp/estimator.hpp"
#include "vcdp/panel.hpp"
#include "vcdp/random.hpp"

namespace vcdp {

enum class CovariateRole {
    kPerGroup,  // drawn independently for each group
    kShared,    // one draw used by both groups
    kCalendar,  // deterministic: calendar row (day mod L)
};

const char* role_name(CovariateRole role);
CovariateRole parse_role(const std::string& name);

struct CovariateSpec {
    std::string name;
    CovariateRole role = CovariateRole::kPerGroup;
    Eigen::VectorXd lo, hi;    // per interval, uniform bounds
    Eigen::MatrixXd calendar;  // L x m, calendar role only

    double population_mean(int t) const;
    double value(RandomStream& rng, int day, int t) const;
};

/// How eta enters the treated group's covariate effect on the state.
/// kExcess: Phi0,C1 = (1 + eta) Phi0~, so eta = 0 means no effect.
/// kLiteral: Phi0,C1 = eta Phi0~, so eta = 1 means no effect.
enum class EffectMode { kExcess, kLiteral };

const char* effect_mode_name(EffectMode mode);
EffectMode parse_effect_mode(const std::string& name);

/// Maximum absolute row sum allowed for every Phi1(t).
inline constexpr double kStabilityBound = 0.9;

struct BaseModel {
    PanelSchema schema;  // p, q, p_h, m, N0, N1; n is the residual pool size
    GroupCoefficients truth;
    std::vector<CovariateSpec> x_specs;   // p entries
    std::vector<CovariateSpec> xt_specs;  // p_h entries
    // Joint day trajectories of residuals, zero mean per column.
    std::array<Eigen::MatrixXd, 2> pool_eps;    // K x m
    std::array<Eigen::MatrixXd, 2> pool_state;  // K x (m-1)q, column t*q+nu
    std::array<Eigen::MatrixXd, 2> pool_s1;     // K1 x q, initial states
    EffectMode effect_mode = EffectMode::kExcess;

    /// Throws InvalidConfig or UnstableDynamics.
    void validate() const;

    double null_eta() const { return effect_mode == EffectMode::kExcess ? 0.0 : 1.0; }
    GroupCoefficients coefficients_for(Group g, double eta) const;
    CoefficientPaths paths_for(double eta) const;
    /// Population plug-in means: uniform midpoints, calendar averages and the
    /// N-weighted mean initial state.
    PluginMeans population_means() const;
};

/// Throws UnstableDynamics when some Phi1(t) has a row sum above the bound.
void check_stability(const GroupCoefficients& coef);

struct SimulateOptions {
    // Both groups use the control group's covariate, initial-state and
    // residual draws.
    bool symmetric_draws = false;
};

Panel simulate(const BaseModel& base, int n, double eta, std::uint64_t seed, const SimulateOptions& options = {});

double true_gate(const BaseModel& base, double eta);

struct FitBaseOptions {
    std::vector<CovariateRole> x_roles;   // empty: all per-group
    std::vector<CovariateRole> xt_roles;  // empty: all shared
    FitOptions fit;
    EffectMode effect_mode = EffectMode::kExcess;
};

/// Pooled fit of an A/A panel: one coefficient path for both groups,
/// per-group residual pools and per-interval covariate ranges.
BaseModel fit_base(const Panel& panel, const FitBaseOptions& options = {});

struct SynthConfig {
    int m = 24;
    int pool_days = 200;
    std::int64_t n0 = 5000;
    std::int64_t n1 = 5000;
    double outcome_sd = 2.0;      // outcome residual sd
    double outcome_ar = 0.3;      // AR(1) coefficient of outcome residuals over t
    double day_sd = 1.0;          // day-level outcome shock shared by all intervals
    double state_sd = 0.6;        // state residual sd
    double state_day_sd = 0.0;    // day-level state shock shared by all transitions
    double initial_sd = 3.0;      // initial-state spread
    double noise_scale = 1.0;     // multiplies every noise source
    double unit_gate = 1.5;       // GATE added per unit of eta (excess convention)
    double path_variation = 1.0;  // 0 gives coefficient paths constant in t
    int holiday_period = 14;
    EffectMode effect_mode = EffectMode::kExcess;

    void validate() const;
};

/// Synthetic base model: demand/supply state (q = 2), outcome covariates
/// subsidy (per group) and gap (shared), state covariates temperature and
/// precipitation (shared) and a holiday indicator (calendar).
BaseModel synth_base(const SynthConfig& config, std::uint64_t seed);

struct ScenarioConfig {
    int n = 14;
    std::vector<double> etas{0.0, 3.0, 6.0, 9.0, 12.0};
    int reps = 500;
    BootstrapConfig boot;  // seed and workers are ignored; see below
    std::vector<Method> methods{Method::kVcdp, Method::kTTest, Method::kDid, Method::kDe};
    std::uint64_t seed = 0;
    int keep_boot = 1;  // replicates per eta whose T^b are kept
    int workers = 1;

    void validate() const;
};

struct MethodRuns {
    Method method = Method::kVcdp;
    std::vector<double> p_values;
    std::vector<double> estimates;
    std::vector<std::uint8_t> rejects;
    double rejection_rate() const;
};

struct EtaRuns {
    double eta = 0.0;
    double true_gate = 0.0;
    std::vector<MethodRuns> methods;
    std::vector<std::vector<double>> boot_samples;  // VCDP T^b of the first keep_boot reps
};

struct ReplicationReport {
    ScenarioConfig config;
    int m = 0;
    double bandwidth = 0.0;
    std::vector<EtaRuns> etas;
};

/// Seed of replicate `rep` at eta index `eta_index`; sub-stream 1 simulates
/// the experiment, 2 the pre-period and 3 drives the bootstrap.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t eta_index, std::size_t rep);

ReplicationReport replicate(const BaseModel& base, const ScenarioConfig& config);

}  // namespace vcdp

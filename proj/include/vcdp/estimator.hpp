#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vcdp/numerics.hpp"
#include "vcdp/panel.hpp"

namespace vcdp {

/// Time-varying coefficients of one group.
///
/// outcome: m x (1+p+q), row t = [alpha0 | alpha1 | alpha2].
/// state:   (m-1) x q(2+p_h+q); row t holds, for each state coordinate nu,
///          the block [gamma0_nu, gamma1_nu, phi0 row nu (p_h), phi1 row nu (q)].
///
/// When f_identified is false the state intercept gamma0 already contains
/// the exposure term (combined-intercept mode), gamma1 is zero and
/// combined_exposure records the constant f it was fitted at.
struct GroupCoefficients {
    int m = 0, p = 0, q = 0, p_h = 0;
    Eigen::MatrixXd outcome;
    Eigen::MatrixXd state;
    bool f_identified = true;
    double combined_exposure = 0.0;

    GroupCoefficients() = default;
    GroupCoefficients(int m, int p, int q, int p_h);

    int state_width() const { return 2 + p_h + q; }

    double& alpha0(int t) { return outcome(t, 0); }
    double alpha0(int t) const { return outcome(t, 0); }
    auto alpha1(int t) { return outcome.row(t).segment(1, p).transpose(); }
    auto alpha1(int t) const { return outcome.row(t).segment(1, p).transpose(); }
    auto alpha2(int t) { return outcome.row(t).segment(1 + p, q).transpose(); }
    auto alpha2(int t) const { return outcome.row(t).segment(1 + p, q).transpose(); }

    /// Writable view of the coefficients of state coordinate nu at t.
    auto state_block(int t, int nu) { return state.row(t).segment(nu * state_width(), state_width()); }
    auto state_block(int t, int nu) const { return state.row(t).segment(nu * state_width(), state_width()); }

    Eigen::VectorXd gamma0(int t) const;
    Eigen::VectorXd gamma1(int t) const;
    Eigen::MatrixXd phi0(int t) const;  // q x p_h
    Eigen::MatrixXd phi1(int t) const;  // q x q
    void set_gamma0(int t, const Eigen::VectorXd& v);
    void set_gamma1(int t, const Eigen::VectorXd& v);
    void set_phi0(int t, const Eigen::MatrixXd& v);
    void set_phi1(int t, const Eigen::MatrixXd& v);

    bool operator==(const GroupCoefficients& o) const {
        return m == o.m && p == o.p && q == o.q && p_h == o.p_h && outcome == o.outcome && state == o.state &&
               f_identified == o.f_identified && combined_exposure == o.combined_exposure;
    }
};

struct CoefficientPaths {
    std::array<GroupCoefficients, 2> groups;

    CoefficientPaths() = default;
    CoefficientPaths(int m, int p, int q, int p_h);

    GroupCoefficients& group(Group g) { return groups[index_of(g)]; }
    const GroupCoefficients& group(Group g) const { return groups[index_of(g)]; }
    int m() const { return groups[0].m; }
    int p() const { return groups[0].p; }
    int q() const { return groups[0].q; }
    int p_h() const { return groups[0].p_h; }

    bool operator==(const CoefficientPaths&) const = default;
};

/// Regression responses of a panel: Y per interval and S(t+1) per transition.
struct Responses {
    std::array<Eigen::MatrixXd, 2> y;       // n x m
    std::array<Eigen::MatrixXd, 2> s_next;  // n x (m-1)q, column t*q+nu = S_d(t+1)[nu]
};

Responses responses_of(const Panel& panel);

/// Default bandwidth min(0.1, n^-0.3).
double default_bandwidth(int n);

/// Pointwise OLS with the designs of one panel factorized once. fit() accepts
/// any responses on the same days, which is how the bootstrap re-estimates
/// pseudo data against the original regressors.
class PointwiseFitter {
public:
    explicit PointwiseFitter(const Panel& panel);

    CoefficientPaths fit(const Responses& responses) const;
    bool f_identified() const { return f_identified_; }
    const PanelSchema& schema() const { return schema_; }

private:
    PanelSchema schema_;
    bool f_identified_ = true;
    double combined_exposure_ = 0.0;
    std::array<std::vector<LeastSquares>, 2> outcome_;  // per t
    std::array<std::vector<LeastSquares>, 2> state_;    // per t < m-1
};

/// True when the treated fraction varies across days at every transition.
bool exposure_identified(const Panel& panel);

CoefficientPaths fit_pointwise(const Panel& panel);

/// Kernel-weighted average of each coefficient path over t: outcome paths
/// over all m intervals, state paths over the first m-1 (weights renormalized).
CoefficientPaths smooth(const CoefficientPaths& raw, double h, KernelType kernel = KernelType::kGaussian);

struct ModelFit {
    CoefficientPaths raw;
    CoefficientPaths smoothed;
    double bandwidth = 0.0;
    KernelType kernel = KernelType::kGaussian;
    // Residuals and fitted values; Y == fitted_y + eps and
    // S(t+1) == fitted_s + state_resid hold exactly (see exact_split).
    std::array<Eigen::MatrixXd, 2> eps;          // n x m
    std::array<Eigen::MatrixXd, 2> state_resid;  // n x (m-1)q, same layout as Responses::s_next
    std::array<Eigen::MatrixXd, 2> fitted_y;
    std::array<Eigen::MatrixXd, 2> fitted_s;
};

/// Residuals below this fraction of the largest observed magnitude in their
/// (interval, group, equation) column are rounding noise and are set to 0.
inline constexpr double kResidualSnap = 1e-10;

ModelFit extract_fit(const Panel& panel, const CoefficientPaths& smoothed);

struct FitOptions {
    double bandwidth = 0.0;  // <= 0 selects default_bandwidth(n)
    KernelType kernel = KernelType::kGaussian;
};

double resolve_bandwidth(const FitOptions& options, int n);

/// fit_pointwise, smooth and extract_fit in one call.
ModelFit fit_model(const Panel& panel, const FitOptions& options = {});

/// Adjusts a residual by at most a few ulps so that
/// (observed - residual) + residual == observed in floating point. When
/// |residual| is much larger than |observed| no such pair may exist and the
/// identity then holds to rounding. Returns {fitted, residual}.
std::pair<double, double> exact_split(double observed, double residual);

}  // namespace vcdp

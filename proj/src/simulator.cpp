#include "vcdp/simulator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "vcdp/error.hpp"
#include "vcdp/gate.hpp"
#include "vcdp/parallel.hpp"

namespace vcdp {

const char* role_name(CovariateRole role) {
    switch (role) {
        case CovariateRole::kPerGroup: return "per-group";
        case CovariateRole::kShared: return "shared";
        case CovariateRole::kCalendar: return "calendar";
    }
    return "unknown";
}

CovariateRole parse_role(const std::string& name) {
    for (auto r : {CovariateRole::kPerGroup, CovariateRole::kShared, CovariateRole::kCalendar})
        if (name == role_name(r)) return r;
    throw Error(ErrorCode::kInvalidConfig, "unknown covariate role '" + name + "'");
}

const char* effect_mode_name(EffectMode mode) { return mode == EffectMode::kExcess ? "excess" : "literal"; }

EffectMode parse_effect_mode(const std::string& name) {
    if (name == "excess") return EffectMode::kExcess;
    if (name == "literal") return EffectMode::kLiteral;
    throw Error(ErrorCode::kInvalidConfig, "unknown effect mode '" + name + "'");
}

double CovariateSpec::population_mean(int t) const {
    if (role == CovariateRole::kCalendar) return calendar.col(t).mean();
    return 0.5 * (lo(t) + hi(t));
}

double CovariateSpec::value(RandomStream& rng, int day, int t) const {
    if (role == CovariateRole::kCalendar) return calendar(day % calendar.rows(), t);
    return rng.uniform(lo(t), hi(t));
}

void check_stability(const GroupCoefficients& coef) {
    for (int t = 0; t + 1 < coef.m; ++t) {
        const double norm = coef.phi1(t).cwiseAbs().rowwise().sum().maxCoeff();
        if (norm > kStabilityBound + 1e-12) {
            std::ostringstream os;
            os << "Phi1 at t=" << t + 1 << " has max row sum " << norm << " > " << kStabilityBound;
            throw Error(ErrorCode::kUnstableDynamics, os.str());
        }
    }
}

namespace {

void check_specs(const std::vector<CovariateSpec>& specs, int count, int m, const char* what) {
    if (static_cast<int>(specs.size()) != count) {
        throw Error(ErrorCode::kInvalidConfig, std::string("wrong number of ") + what + " specs");
    }
    for (const auto& s : specs) {
        if (s.role == CovariateRole::kCalendar) {
            if (s.calendar.rows() < 1 || s.calendar.cols() != m || !s.calendar.allFinite()) {
                throw Error(ErrorCode::kInvalidConfig, "calendar covariate '" + s.name + "' needs an L x m calendar");
            }
            continue;
        }
        if (s.lo.size() != m || s.hi.size() != m || !s.lo.allFinite() || !s.hi.allFinite()) {
            throw Error(ErrorCode::kInvalidConfig, "covariate '" + s.name + "' needs m finite bounds");
        }
        if ((s.lo.array() > s.hi.array()).any()) {
            throw Error(ErrorCode::kInvalidConfig, "covariate '" + s.name + "' has lo > hi");
        }
    }
}

}  // namespace

void BaseModel::validate() const {
    const auto& s = schema;
    if (s.p < 0 || s.p_h < 0 || s.q < 1 || s.m < 2 || s.n0 < 1 || s.n1 < 1) {
        throw Error(ErrorCode::kInvalidConfig, "base model has an invalid schema");
    }
    if (truth.m != s.m || truth.p != s.p || truth.q != s.q || truth.p_h != s.p_h || !truth.outcome.allFinite() ||
        !truth.state.allFinite()) {
        throw Error(ErrorCode::kInvalidConfig, "base model coefficients do not match its schema");
    }
    check_specs(x_specs, s.p, s.m, "outcome covariate");
    check_specs(xt_specs, s.p_h, s.m, "state covariate");
    for (int g = 0; g < 2; ++g) {
        if (pool_eps[g].rows() < 1 || pool_eps[g].rows() != pool_state[g].rows() || pool_s1[g].rows() < 1) {
            throw Error(ErrorCode::kInvalidConfig, "base model residual pools are empty or misaligned");
        }
        if (pool_eps[g].cols() != s.m || pool_state[g].cols() != (s.m - 1) * s.q || pool_s1[g].cols() != s.q) {
            throw Error(ErrorCode::kInvalidConfig, "base model residual pools have wrong widths");
        }
        if (pool_eps[0].rows() != pool_eps[g].rows() || pool_s1[0].rows() != pool_s1[g].rows()) {
            throw Error(ErrorCode::kInvalidConfig, "residual pools of the two groups differ in size");
        }
        if (!pool_eps[g].allFinite() || !pool_state[g].allFinite() || !pool_s1[g].allFinite()) {
            throw Error(ErrorCode::kNonFiniteValue, "base model residual pools contain non-finite values");
        }
    }
    check_stability(truth);
}

GroupCoefficients BaseModel::coefficients_for(Group g, double eta) const {
    GroupCoefficients c = truth;
    c.f_identified = true;
    c.combined_exposure = 0.0;
    if (g == Group::kTreated) {
        const double scale = effect_mode == EffectMode::kExcess ? 1.0 + eta : eta;
        for (int t = 0; t + 1 < c.m; ++t) c.set_phi0(t, scale * truth.phi0(t));
    }
    return c;
}

CoefficientPaths BaseModel::paths_for(double eta) const {
    CoefficientPaths paths;
    paths.groups = {coefficients_for(Group::kControl, eta), coefficients_for(Group::kTreated, eta)};
    return paths;
}

PluginMeans BaseModel::population_means() const {
    const auto& s = schema;
    PluginMeans mm;
    mm.xbar.resize(s.m, s.p);
    mm.xtbar.resize(s.m, s.p_h);
    for (int t = 0; t < s.m; ++t) {
        for (int j = 0; j < s.p; ++j) mm.xbar(t, j) = x_specs[j].population_mean(t);
        for (int j = 0; j < s.p_h; ++j) mm.xtbar(t, j) = xt_specs[j].population_mean(t);
    }
    mm.s1bar = s.weight_of(Group::kControl) * pool_s1[0].colwise().mean().transpose() +
               s.weight_of(Group::kTreated) * pool_s1[1].colwise().mean().transpose();
    return mm;
}

Panel simulate(const BaseModel& base, int n, double eta, std::uint64_t seed, const SimulateOptions& options) {
    base.validate();
    PanelSchema schema = base.schema;
    schema.n = n;
    // Supply evolves separately per group once the treated dynamics differ.
    schema.shared_supply = false;
    Panel panel = Panel::zeros(schema, "sim", "experiment");
    const int m = schema.m, p = schema.p, q = schema.q, p_h = schema.p_h;
    const std::array<GroupCoefficients, 2> coef{base.coefficients_for(Group::kControl, eta),
                                                base.coefficients_for(Group::kTreated, eta)};
    const double share = schema.treated_share();
    std::fill(panel.f.begin(), panel.f.end(), share);

    const auto pool_days = static_cast<std::uint64_t>(base.pool_eps[0].rows());
    const auto init_days = static_cast<std::uint64_t>(base.pool_s1[0].rows());
    Eigen::VectorXd state(q), next(q);
    for (int d = 0; d < n; ++d) {
        RandomStream rng(seed, static_cast<std::uint64_t>(d));
        const auto k = static_cast<Eigen::Index>(rng.index(pool_days));
        const auto j = static_cast<Eigen::Index>(rng.index(init_days));
        // Covariates first, so both groups see the same sequence of draws.
        for (int t = 0; t < m; ++t) {
            auto draw = [&](const std::vector<CovariateSpec>& specs, auto&& slot) {
                for (std::size_t c = 0; c < specs.size(); ++c) {
                    const auto& spec = specs[c];
                    const double v0 = spec.value(rng, d, t);
                    double v1 = v0;
                    if (spec.role == CovariateRole::kPerGroup) {
                        const double own = spec.value(rng, d, t);
                        if (!options.symmetric_draws) v1 = own;
                    }
                    slot(Group::kControl, c) = v0;
                    slot(Group::kTreated, c) = v1;
                }
            };
            draw(base.x_specs, [&](Group g, std::size_t c) -> double& { return panel.group(g).x(d, t)[c]; });
            draw(base.xt_specs, [&](Group g, std::size_t c) -> double& { return panel.group(g).xt(d, t)[c]; });
        }
        for (Group g : kGroups) {
            const int gi = index_of(g);
            const int src = options.symmetric_draws ? 0 : gi;
            const auto& cg = coef[gi];
            auto& series = panel.group(g);
            state = base.pool_s1[src].row(j).transpose();
            for (int t = 0; t < m; ++t) {
                auto s_now = series.s(d, t);
                for (int nu = 0; nu < q; ++nu) s_now[nu] = state(nu);
                const auto x = series.x(d, t);
                double y = cg.alpha0(t) + base.pool_eps[src](k, t);
                for (int c = 0; c < p; ++c) y += cg.outcome(t, 1 + c) * x[c];
                for (int c = 0; c < q; ++c) y += cg.outcome(t, 1 + p + c) * state(c);
                series.y(d, t) = y;
                if (t + 1 == m) break;
                const auto xt = series.xt(d, t);
                for (int nu = 0; nu < q; ++nu) {
                    const auto b = cg.state_block(t, nu);
                    double v = b(0) + base.pool_state[src](k, t * q + nu);
                    for (int c = 0; c < p_h; ++c) v += b(2 + c) * xt[c];
                    for (int c = 0; c < q; ++c) v += b(2 + p_h + c) * state(c);
                    next(nu) = v;
                }
                state = next;
            }
        }
    }
    return panel;
}

double true_gate(const BaseModel& base, double eta) {
    base.validate();
    return gate_closed_form({base.paths_for(eta), base.population_means()}).gate;
}

namespace {

CovariateSpec range_spec(const Panel& panel, int j, bool state_cov, CovariateRole role, const std::string& name) {
    const auto& s = panel.schema;
    CovariateSpec spec;
    spec.name = name;
    spec.role = role;
    auto value = [&](Group g, int d, int t) {
        return state_cov ? panel.group(g).xt(d, t)[j] : panel.group(g).x(d, t)[j];
    };
    if (role == CovariateRole::kCalendar) {
        spec.calendar.resize(s.n, s.m);
        for (int d = 0; d < s.n; ++d)
            for (int t = 0; t < s.m; ++t) spec.calendar(d, t) = value(Group::kControl, d, t);
        return spec;
    }
    spec.lo.resize(s.m);
    spec.hi.resize(s.m);
    for (int t = 0; t < s.m; ++t) {
        double lo = value(Group::kControl, 0, t), hi = lo;
        for (Group g : kGroups) {
            for (int d = 0; d < s.n; ++d) {
                lo = std::min(lo, value(g, d, t));
                hi = std::max(hi, value(g, d, t));
            }
        }
        spec.lo(t) = lo;
        spec.hi(t) = hi;
    }
    return spec;
}

void center_columns(Eigen::MatrixXd& pool) { pool.rowwise() -= pool.colwise().mean(); }

// Shifts each group's initial-state pool onto the N-weighted common mean, so
// that the groups start balanced as under randomization.
void balance_initial_pools(BaseModel& base) {
    const Eigen::RowVectorXd common = base.population_means().s1bar.transpose();
    for (auto& pool : base.pool_s1) pool.rowwise() += common - pool.colwise().mean();
}

}  // namespace

BaseModel fit_base(const Panel& panel, const FitBaseOptions& options) {
    validate_panel(panel);
    const auto& s = panel.schema;
    if (!options.x_roles.empty() && static_cast<int>(options.x_roles.size()) != s.p) {
        throw Error(ErrorCode::kInvalidConfig, "fit_base: one role per outcome covariate required");
    }
    if (!options.xt_roles.empty() && static_cast<int>(options.xt_roles.size()) != s.p_h) {
        throw Error(ErrorCode::kInvalidConfig, "fit_base: one role per state covariate required");
    }
    const int rows = 2 * s.n;
    if (rows <= 1 + s.p + s.q || rows <= 1 + s.p_h + s.q) {
        throw Error(ErrorCode::kInsufficientDays, "fit_base: too few days for the pooled fit");
    }
    // Pooled raw fit: both groups' days stacked.
    CoefficientPaths raw(s.m, s.p, s.q, s.p_h);
    auto& pooled = raw.groups[0];
    for (int t = 0; t < s.m; ++t) {
        Eigen::MatrixXd z(rows, 1 + s.p + s.q);
        Eigen::VectorXd y(rows);
        for (Group g : kGroups) {
            const auto& series = panel.group(g);
            for (int d = 0; d < s.n; ++d) {
                const int r = index_of(g) * s.n + d;
                z(r, 0) = 1.0;
                for (int j = 0; j < s.p; ++j) z(r, 1 + j) = series.x(d, t)[j];
                for (int j = 0; j < s.q; ++j) z(r, 1 + s.p + j) = series.s(d, t)[j];
                y(r) = series.y(d, t);
            }
        }
        pooled.outcome.row(t) = ols_fit(z, y).coefficients.transpose();
    }
    for (int t = 0; t + 1 < s.m; ++t) {
        Eigen::MatrixXd z(rows, 1 + s.p_h + s.q);
        Eigen::MatrixXd y(rows, s.q);
        for (Group g : kGroups) {
            const auto& series = panel.group(g);
            for (int d = 0; d < s.n; ++d) {
                const int r = index_of(g) * s.n + d;
                z(r, 0) = 1.0;
                for (int j = 0; j < s.p_h; ++j) z(r, 1 + j) = series.xt(d, t)[j];
                for (int j = 0; j < s.q; ++j) z(r, 1 + s.p_h + j) = series.s(d, t)[j];
                for (int nu = 0; nu < s.q; ++nu) y(r, nu) = series.s(d, t + 1)[nu];
            }
        }
        const Eigen::MatrixXd theta = LeastSquares(z).solve_map() * y;
        for (int nu = 0; nu < s.q; ++nu) {
            auto b = pooled.state_block(t, nu);
            b(0) = theta(0, nu);
            b(1) = 0.0;
            b.tail(s.p_h + s.q) = theta.col(nu).tail(s.p_h + s.q).transpose();
        }
    }
    raw.groups[1] = raw.groups[0];
    const double h = resolve_bandwidth(options.fit, s.n);
    const CoefficientPaths smoothed = smooth(raw, h, options.fit.kernel);

    BaseModel base;
    base.schema = s;
    base.schema.shared_supply = false;
    base.truth = smoothed.groups[0];
    base.effect_mode = options.effect_mode;
    check_stability(base.truth);

    // Residuals of each group against the pooled smoothed path.
    CoefficientPaths shared;
    shared.groups = {base.truth, base.truth};
    const ModelFit fit = extract_fit(panel, shared);
    for (int g = 0; g < 2; ++g) {
        base.pool_eps[g] = fit.eps[g];
        base.pool_state[g] = fit.state_resid[g];
        center_columns(base.pool_eps[g]);
        center_columns(base.pool_state[g]);
        base.pool_s1[g].resize(s.n, s.q);
        for (int d = 0; d < s.n; ++d)
            for (int nu = 0; nu < s.q; ++nu) base.pool_s1[g](d, nu) = panel.groups[g].s(d, 0)[nu];
    }
    for (int j = 0; j < s.p; ++j) {
        const auto role = options.x_roles.empty() ? CovariateRole::kPerGroup : options.x_roles[j];
        base.x_specs.push_back(range_spec(panel, j, false, role, "x_" + std::to_string(j + 1)));
    }
    for (int j = 0; j < s.p_h; ++j) {
        const auto role = options.xt_roles.empty() ? CovariateRole::kShared : options.xt_roles[j];
        base.xt_specs.push_back(range_spec(panel, j, true, role, "xt_" + std::to_string(j + 1)));
    }
    // Needs the covariate specs for the population means.
    balance_initial_pools(base);
    base.validate();
    return base;
}

void SynthConfig::validate() const {
    if (m < 2 || pool_days < 1 || n0 < 1 || n1 < 1 || holiday_period < 1) {
        throw Error(ErrorCode::kInvalidConfig, "synth config: m >= 2, pool_days >= 1, sizes >= 1 required");
    }
    for (double v : {outcome_sd, day_sd, state_sd, state_day_sd, initial_sd, noise_scale, unit_gate, path_variation}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kInvalidConfig, "synth config: scales must be >= 0");
    }
    if (!(std::abs(outcome_ar) < 1.0)) throw Error(ErrorCode::kInvalidConfig, "synth config: |outcome_ar| must be < 1");
}

BaseModel synth_base(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    constexpr int p = 2, q = 2, p_h = 3;
    const int m = cfg.m;
    const double pv = cfg.path_variation;
    RandomStream coef_rng(seed, 0);
    RandomStream noise_rng(seed, 1);
    auto jitter = [&](double scale) { return scale * (2.0 * coef_rng.uniform() - 1.0); };

    BaseModel base;
    base.schema.p = p;
    base.schema.q = q;
    base.schema.p_h = p_h;
    base.schema.m = m;
    base.schema.n = cfg.pool_days;
    base.schema.n0 = cfg.n0;
    base.schema.n1 = cfg.n1;
    base.schema.shared_supply = false;
    base.effect_mode = cfg.effect_mode;
    base.truth = GroupCoefficients(m, p, q, p_h);
    auto& c = base.truth;

    // Diurnal shape shared by the coefficient paths.
    const double phase = 2.0 * std::numbers::pi * coef_rng.uniform();
    auto diurnal = [&](int t) { return std::sin(2.0 * std::numbers::pi * t / m + phase); };
    auto trend = [&](int t) { return static_cast<double>(t) / (m - 1) - 0.5; };

    const double a0_amp = 5.0 + jitter(1.0), a0_trend = jitter(2.0);
    const double a1_sub = 1.0 + jitter(0.1), a1_gap = -0.5 + jitter(0.05);
    const double a2_dem = 2.0 + jitter(0.2), a2_sup = 0.5 + jitter(0.1);
    for (int t = 0; t < m; ++t) {
        c.alpha0(t) = 20.0 + pv * (a0_amp * diurnal(t) + a0_trend * trend(t));
        c.alpha1(t) << a1_sub + pv * 0.1 * diurnal(t), a1_gap + pv * 0.05 * trend(t);
        c.alpha2(t) << a2_dem + pv * 0.2 * diurnal(t), a2_sup - pv * 0.05 * diurnal(t);
    }
    const double g_dem = 5.0 + jitter(0.5), g_sup = 3.0 + jitter(0.3);
    Eigen::MatrixXd phi0_shape(q, p_h);
    // temperature, precipitation, holiday
    phi0_shape << 1.0 + jitter(0.2), -4.0 + jitter(0.5), 8.0 + jitter(1.0),
                  0.2 + jitter(0.05), -1.0 + jitter(0.2), 2.0 + jitter(0.5);
    // Covariate ranges.
    auto spec = [&](std::string name, CovariateRole role, auto lo, auto hi) {
        CovariateSpec s;
        s.name = std::move(name);
        s.role = role;
        s.lo.resize(m);
        s.hi.resize(m);
        for (int t = 0; t < m; ++t) {
            s.lo(t) = lo(t);
            s.hi(t) = hi(t);
        }
        return s;
    };
    base.x_specs.push_back(spec("subsidy", CovariateRole::kPerGroup, [](int) { return 0.5; }, [](int) { return 1.5; }));
    base.x_specs.push_back(spec("gap", CovariateRole::kShared, [](int) { return 0.0; },
                                [&](int t) { return 2.0 + 0.5 * diurnal(t); }));
    base.xt_specs.push_back(spec("temperature", CovariateRole::kShared,
                                 [&](int t) { return 19.0 + 3.0 * diurnal(t); },
                                 [&](int t) { return 21.0 + 3.0 * diurnal(t); }));
    base.xt_specs.push_back(spec("precipitation", CovariateRole::kShared, [](int) { return 0.0; },
                                 [](int) { return 1.0; }));
    CovariateSpec holiday;
    holiday.name = "holiday";
    holiday.role = CovariateRole::kCalendar;
    holiday.calendar = Eigen::MatrixXd::Zero(cfg.holiday_period, m);
    // Two marked days per period (the last day and the day before the middle).
    holiday.calendar.row(cfg.holiday_period - 1).setOnes();
    if (cfg.holiday_period >= 4) holiday.calendar.row(cfg.holiday_period / 2 - 1).setOnes();
    base.xt_specs.push_back(std::move(holiday));

    // Phi0~ is rescaled below so that each unit of eta adds unit_gate to the
    // GATE under the excess convention.
    for (int t = 0; t + 1 < m; ++t) {
        Eigen::VectorXd g0(q);
        g0 << g_dem + pv * 0.1 * diurnal(t), g_sup + pv * 0.05 * diurnal(t);
        Eigen::MatrixXd phi1(q, q);
        phi1 << 0.60 + pv * 0.02 * diurnal(t), 0.10, 0.15, 0.55 - pv * 0.02 * diurnal(t);
        c.set_gamma0(t, g0);
        c.set_phi1(t, phi1);
        c.set_phi0(t, phi0_shape);
    }
    base.pool_s1 = {Eigen::MatrixXd::Zero(1, q), Eigen::MatrixXd::Zero(1, q)};
    base.pool_eps = {Eigen::MatrixXd::Zero(1, m), Eigen::MatrixXd::Zero(1, m)};
    base.pool_state = {Eigen::MatrixXd::Zero(1, (m - 1) * q), Eigen::MatrixXd::Zero(1, (m - 1) * q)};
    {
        const EffectMode mode = base.effect_mode;
        base.effect_mode = EffectMode::kExcess;
        const double unit = true_gate(base, 1.0) - true_gate(base, 0.0);
        base.effect_mode = mode;
        const double scale = unit != 0.0 ? cfg.unit_gate / unit : 0.0;
        for (int t = 0; t + 1 < m; ++t) c.set_phi0(t, scale * phi0_shape);
    }

    // Initial states around the stationary level of the covariate-free dynamics.
    Eigen::VectorXd level(q);
    {
        Eigen::MatrixXd phi1(q, q);
        phi1 << 0.60, 0.10, 0.15, 0.55;
        Eigen::VectorXd g0(q);
        g0 << g_dem, g_sup;
        level = (Eigen::MatrixXd::Identity(q, q) - phi1).partialPivLu().solve(g0);
    }
    const int k = cfg.pool_days;
    const double ns = cfg.noise_scale;
    const double innov = std::sqrt(1.0 - cfg.outcome_ar * cfg.outcome_ar);
    for (int g = 0; g < 2; ++g) {
        base.pool_eps[g].resize(k, m);
        base.pool_state[g].resize(k, (m - 1) * q);
        base.pool_s1[g].resize(k, q);
    }
    for (int d = 0; d < k; ++d) {
        for (int g = 0; g < 2; ++g) {
            const double level_shock = cfg.day_sd * noise_rng.normal();
            double e = cfg.outcome_sd * noise_rng.normal();
            for (int t = 0; t < m; ++t) {
                if (t > 0) e = cfg.outcome_ar * e + innov * cfg.outcome_sd * noise_rng.normal();
                base.pool_eps[g](d, t) = ns * (level_shock + e);
            }
            Eigen::VectorXd state_shock(q);
            for (int nu = 0; nu < q; ++nu) state_shock(nu) = cfg.state_day_sd * noise_rng.normal();
            for (int col = 0; col < (m - 1) * q; ++col)
                base.pool_state[g](d, col) = ns * (state_shock(col % q) + cfg.state_sd * noise_rng.normal());
            for (int nu = 0; nu < q; ++nu) base.pool_s1[g](d, nu) = level(nu) + ns * cfg.initial_sd * noise_rng.normal();
        }
    }
    for (int g = 0; g < 2; ++g) {
        center_columns(base.pool_eps[g]);
        center_columns(base.pool_state[g]);
    }
    balance_initial_pools(base);
    base.validate();
    return base;
}

void ScenarioConfig::validate() const {
    if (n < 2) throw Error(ErrorCode::kInvalidConfig, "scenario needs n >= 2 days");
    if (reps < 1) throw Error(ErrorCode::kInvalidConfig, "scenario needs reps >= 1");
    if (etas.empty()) throw Error(ErrorCode::kInvalidConfig, "scenario needs at least one eta");
    if (methods.empty()) throw Error(ErrorCode::kInvalidConfig, "scenario needs at least one method");
    if (keep_boot < 0) throw Error(ErrorCode::kInvalidConfig, "keep_boot must be >= 0");
    boot.validate();
}

double MethodRuns::rejection_rate() const {
    if (rejects.empty()) return 0.0;
    std::size_t r = 0;
    for (auto v : rejects) r += v;
    return static_cast<double>(r) / static_cast<double>(rejects.size());
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t eta_index, std::size_t rep) {
    return derive_seed(seed, eta_index, rep);
}

namespace {

struct RepOutcome {
    std::vector<double> p_values, estimates;
    std::vector<std::uint8_t> rejects;
    std::vector<double> boot;
};

}  // namespace

ReplicationReport replicate(const BaseModel& base, const ScenarioConfig& config) {
    config.validate();
    base.validate();
    ReplicationReport report;
    report.config = config;
    report.m = base.schema.m;
    report.bandwidth = resolve_bandwidth(config.boot.fit, config.n);

    bool want_vcdp = false, want_de = false;
    for (Method mt : config.methods) {
        want_vcdp = want_vcdp || mt == Method::kVcdp;
        want_de = want_de || mt == Method::kDe;
    }
    std::vector<Functional> functionals;
    if (want_vcdp) functionals.push_back(Functional::kGate);
    if (want_de) functionals.push_back(Functional::kNaiveTau);

    const std::size_t n_eta = config.etas.size(), reps = static_cast<std::size_t>(config.reps);
    std::vector<RepOutcome> outcomes(n_eta * reps);
    parallel_for(outcomes.size(), config.workers, [&](std::size_t task) {
        const std::size_t e = task / reps, r = task % reps;
        const std::uint64_t rs = replicate_seed(config.seed, e, r);
        const Panel experiment = simulate(base, config.n, config.etas[e], derive_seed(rs, 1));
        std::vector<TestResult> tests;
        if (!functionals.empty()) {
            BootstrapConfig bc = config.boot;
            bc.seed = derive_seed(rs, 3);
            bc.workers = 1;
            tests = bootstrap_functionals(experiment, bc, functionals);
        }
        auto& out = outcomes[task];
        for (Method mt : config.methods) {
            BaselineResult res;
            bool reject = false;
            switch (mt) {
                case Method::kVcdp:
                case Method::kDe: {
                    const auto& t = tests[mt == Method::kVcdp ? 0 : (want_vcdp ? 1 : 0)];
                    res = from_test(mt, t);
                    reject = t.reject;
                    break;
                }
                case Method::kTTest:
                    res = t_test(experiment);
                    reject = res.p_value < config.boot.alpha;
                    break;
                case Method::kDid: {
                    Panel pre = simulate(base, config.n, base.null_eta(), derive_seed(rs, 2));
                    pre.period = "pre";
                    res = did(pre, experiment);
                    reject = res.p_value < config.boot.alpha;
                    break;
                }
            }
            out.p_values.push_back(res.p_value);
            out.estimates.push_back(res.estimate);
            out.rejects.push_back(reject ? 1 : 0);
        }
        if (want_vcdp && r < static_cast<std::size_t>(config.keep_boot)) out.boot = tests[0].boot_stats;
    });

    for (std::size_t e = 0; e < n_eta; ++e) {
        EtaRuns er;
        er.eta = config.etas[e];
        er.true_gate = true_gate(base, er.eta);
        for (std::size_t k = 0; k < config.methods.size(); ++k) {
            MethodRuns mr;
            mr.method = config.methods[k];
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& o = outcomes[e * reps + r];
                mr.p_values.push_back(o.p_values[k]);
                mr.estimates.push_back(o.estimates[k]);
                mr.rejects.push_back(o.rejects[k]);
            }
            er.methods.push_back(std::move(mr));
        }
        for (std::size_t r = 0; r < reps && r < static_cast<std::size_t>(config.keep_boot); ++r) {
            if (!outcomes[e * reps + r].boot.empty()) er.boot_samples.push_back(outcomes[e * reps + r].boot);
        }
        report.etas.push_back(std::move(er));
    }
    return report;
}

}  // namespace vcdp

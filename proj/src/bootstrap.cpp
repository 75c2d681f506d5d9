#include "vcdp/bootstrap.hpp"

#include <sstream>

#include "vcdp/error.hpp"
#include "vcdp/numerics.hpp"
#include "vcdp/parallel.hpp"
#include "vcdp/random.hpp"

namespace vcdp {

Multipliers draw_multipliers(int n, std::uint64_t seed, std::uint64_t replicate, bool single_per_day) {
    RandomStream rng(seed, replicate);
    Multipliers out;
    out.xi.resize(n, 4);
    for (int d = 0; d < n; ++d) {
        if (single_per_day) {
            out.xi.row(d).setConstant(rng.normal());
        } else {
            for (int c = 0; c < 4; ++c) out.xi(d, c) = rng.normal();
        }
    }
    return out;
}

Responses pseudo_responses(const ModelFit& fit, const Multipliers& xi) {
    const auto n = fit.eps[0].rows();
    if (xi.xi.rows() != n || xi.xi.cols() != 4) {
        throw Error(ErrorCode::kDimensionMismatch, "multipliers must be n x 4");
    }
    Responses r;
    for (Group g : kGroups) {
        const int gi = index_of(g);
        r.y[gi] = fit.fitted_y[gi];
        r.s_next[gi] = fit.fitted_s[gi];
        for (Eigen::Index d = 0; d < n; ++d) {
            r.y[gi].row(d) += xi.y(static_cast<int>(d), g) * fit.eps[gi].row(d);
            r.s_next[gi].row(d) += xi.s(static_cast<int>(d), g) * fit.state_resid[gi].row(d);
        }
    }
    return r;
}

Panel make_pseudo_panel(const Panel& panel, const ModelFit& fit, const Multipliers& xi) {
    const auto& s = panel.schema;
    if (fit.eps[0].rows() != s.n || fit.eps[0].cols() != s.m) {
        throw Error(ErrorCode::kDimensionMismatch, "model fit does not match the panel");
    }
    const Responses r = pseudo_responses(fit, xi);
    Panel out = panel;
    // Perturbed supply generally differs between groups.
    out.schema.shared_supply = false;
    for (Group g : kGroups) {
        const int gi = index_of(g);
        auto& series = out.group(g);
        for (int d = 0; d < s.n; ++d) {
            for (int t = 0; t < s.m; ++t) series.y(d, t) = r.y[gi](d, t);
            for (int t = 0; t + 1 < s.m; ++t) {
                auto next = series.s(d, t + 1);
                for (int nu = 0; nu < s.q; ++nu) next[nu] = r.s_next[gi](d, t * s.q + nu);
            }
        }
    }
    return out;
}

const char* functional_name(Functional f) { return f == Functional::kGate ? "gate" : "naive_tau"; }

void BootstrapConfig::validate() const {
    if (replicates < 1) throw Error(ErrorCode::kInvalidConfig, "bootstrap needs B >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must be in (0,1)");
}

void finalize_test(TestResult& r) {
    r.replicates = static_cast<int>(r.boot_stats.size());
    r.critical_value = empirical_quantile(r.boot_stats, 1.0 - r.alpha);
    std::size_t exceed = 0;
    for (double tb : r.boot_stats)
        if (tb >= r.estimate) ++exceed;
    r.p_value = static_cast<double>(1 + exceed) / static_cast<double>(r.boot_stats.size() + 1);
    r.reject = r.estimate > r.critical_value;
}

namespace {

// Everything a replicate needs besides its multipliers.
struct Evaluator {
    const Panel& panel;
    const BootstrapConfig& config;
    std::span<const Functional> functionals;
    PluginMeans means;
    GroupMeans base_group_means;
    Eigen::MatrixXd w_out, w_state;

    Evaluator(const Panel& p, const BootstrapConfig& c, std::span<const Functional> f, double h)
        : panel(p), config(c), functionals(f), means(plugin_means(p)), base_group_means(group_means(p)),
          w_out(smoothing_matrix(p.schema.m, p.schema.m, h, c.fit.kernel)),
          w_state(smoothing_matrix(p.schema.m - 1, p.schema.m, h, c.fit.kernel)) {}

    CoefficientPaths smooth_raw(CoefficientPaths raw) const {
        for (auto& g : raw.groups) {
            g.outcome = w_out * g.outcome;
            g.state = w_state * g.state;
        }
        return raw;
    }

    // Group means of S follow the responses; X and S(1) are never perturbed.
    GroupMeans means_for(const Responses& r) const {
        GroupMeans gm = base_group_means;
        const auto& s = panel.schema;
        for (int gi = 0; gi < 2; ++gi) {
            const Eigen::RowVectorXd col_means = r.s_next[gi].colwise().mean();
            for (int t = 0; t + 1 < s.m; ++t)
                for (int nu = 0; nu < s.q; ++nu) gm.s[gi](t + 1, nu) = col_means(t * s.q + nu);
        }
        return gm;
    }

    double evaluate(Functional f, const CoefficientPaths& smoothed, const Responses& r,
                    GateResult* decomposition = nullptr) const {
        if (f == Functional::kGate) {
            const GateResult g = gate_closed_form({smoothed, means}, config.policy);
            if (decomposition != nullptr) *decomposition = g;
            return g.gate;
        }
        return naive_tau(smoothed, means_for(r));
    }
};

}  // namespace

std::vector<TestResult> bootstrap_functionals(const Panel& panel, const BootstrapConfig& config,
                                              std::span<const Functional> functionals) {
    config.validate();
    validate_panel(panel);
    const double h = resolve_bandwidth(config.fit, panel.schema.n);
    const PointwiseFitter fitter(panel);
    const Responses observed = responses_of(panel);
    const CoefficientPaths raw = fitter.fit(observed);
    Evaluator eval(panel, config, functionals, h);
    const CoefficientPaths smoothed = eval.smooth_raw(raw);
    ModelFit fit = extract_fit(panel, smoothed);
    fit.raw = raw;
    fit.bandwidth = h;
    fit.kernel = config.fit.kernel;

    std::vector<TestResult> results(functionals.size());
    for (std::size_t k = 0; k < functionals.size(); ++k) {
        auto& r = results[k];
        r.statistic = functionals[k];
        GateResult decomposition;
        r.estimate = eval.evaluate(functionals[k], smoothed, observed, &decomposition);
        if (functionals[k] == Functional::kGate) r.decomposition = decomposition;
        r.alpha = config.alpha;
        r.seed = config.seed;
        r.bandwidth = h;
        r.policy = config.policy;
        r.f_identified = fitter.f_identified();
        r.single_multiplier = config.single_multiplier;
        r.pseudo_state_regressors = config.pseudo_state_regressors;
        r.boot_stats.assign(static_cast<std::size_t>(config.replicates), 0.0);
    }

    parallel_for(static_cast<std::size_t>(config.replicates), config.workers, [&](std::size_t b) {
        try {
            const Multipliers xi = draw_multipliers(panel.schema.n, config.seed, b, config.single_multiplier);
            Responses pseudo = pseudo_responses(fit, xi);
            CoefficientPaths coeffs;
            if (config.pseudo_state_regressors) {
                const Panel pseudo_panel = make_pseudo_panel(panel, fit, xi);
                coeffs = eval.smooth_raw(PointwiseFitter(pseudo_panel).fit(pseudo));
            } else {
                coeffs = eval.smooth_raw(fitter.fit(pseudo));
            }
            for (std::size_t k = 0; k < functionals.size(); ++k) {
                results[k].boot_stats[b] = eval.evaluate(functionals[k], coeffs, pseudo) - results[k].estimate;
            }
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "bootstrap replicate " << b + 1 << " failed: " << e.what();
            throw Error(ErrorCode::kReplicateFailure, os.str());
        }
    });

    for (auto& r : results) finalize_test(r);
    return results;
}

TestResult bootstrap_test(const Panel& panel, const BootstrapConfig& config) {
    const Functional gate[] = {Functional::kGate};
    return bootstrap_functionals(panel, config, gate).front();
}

TestResult combine_cities(std::span<const TestResult> cities, std::span<const std::int64_t> sizes) {
    if (cities.empty()) throw Error(ErrorCode::kEmptyInput, "combine_cities: no cities");
    if (cities.size() != sizes.size()) throw Error(ErrorCode::kDimensionMismatch, "combine_cities: sizes differ");
    const auto b = cities.front().boot_stats.size();
    std::vector<double> estimates;
    for (const auto& c : cities) {
        if (c.boot_stats.size() != b || c.alpha != cities.front().alpha || c.statistic != cities.front().statistic) {
            throw Error(ErrorCode::kDimensionMismatch, "combine_cities: cities differ in B, alpha or statistic");
        }
        estimates.push_back(c.estimate);
    }
    TestResult out = cities.front();
    out.decomposition.reset();
    out.estimate = aggregate_cities(estimates, sizes);
    std::vector<double> column(cities.size());
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t r = 0; r < cities.size(); ++r) column[r] = cities[r].boot_stats[i];
        out.boot_stats[i] = aggregate_cities(column, sizes);
    }
    for (const auto& c : cities) out.f_identified = out.f_identified && c.f_identified;
    finalize_test(out);
    return out;
}

}  // namespace vcdp

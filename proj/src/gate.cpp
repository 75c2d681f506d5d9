#include "vcdp/gate.hpp"

#include <sstream>

#include "vcdp/error.hpp"

namespace vcdp {

PluginMeans plugin_means(const Panel& panel) {
    const auto& s = panel.schema;
    PluginMeans out;
    out.xbar = Eigen::MatrixXd::Zero(s.m, s.p);
    out.xtbar = Eigen::MatrixXd::Zero(s.m, s.p_h);
    out.s1bar = Eigen::VectorXd::Zero(s.q);
    const double inv_n = 1.0 / s.n;
    for (Group g : kGroups) {
        const auto& series = panel.group(g);
        const double w = s.weight_of(g) * inv_n;
        for (int d = 0; d < s.n; ++d) {
            for (int t = 0; t < s.m; ++t) {
                const auto x = series.x(d, t);
                const auto xt = series.xt(d, t);
                for (int j = 0; j < s.p; ++j) out.xbar(t, j) += w * x[j];
                for (int j = 0; j < s.p_h; ++j) out.xtbar(t, j) += w * xt[j];
            }
            const auto s1 = series.s(d, 0);
            for (int j = 0; j < s.q; ++j) out.s1bar(j) += w * s1[j];
        }
    }
    return out;
}

const char* policy_name(ExposurePolicy policy) {
    return policy == ExposurePolicy::kStrict ? "strict" : "experimental-exposure";
}

ExposurePolicy parse_policy(const std::string& name) {
    if (name == "experimental-exposure") return ExposurePolicy::kExperimentalExposure;
    if (name == "strict") return ExposurePolicy::kStrict;
    throw Error(ErrorCode::kInvalidConfig, "unknown exposure policy '" + name + "'");
}

std::vector<Eigen::VectorXd> state_mean_path(const GroupCoefficients& coef, double exposure,
                                             const Eigen::VectorXd& s1bar, const Eigen::MatrixXd& xtbar) {
    if (s1bar.size() != coef.q || xtbar.cols() != coef.p_h || xtbar.rows() < coef.m - 1) {
        throw Error(ErrorCode::kDimensionMismatch, "state_mean_path: inputs do not match coefficients");
    }
    const int q = coef.q, p_h = coef.p_h, w = coef.state_width();
    std::vector<Eigen::VectorXd> path;
    path.reserve(coef.m);
    path.push_back(s1bar);
    for (int t = 0; t + 1 < coef.m; ++t) {
        const auto& prev = path.back();
        Eigen::VectorXd next(q);
        for (int nu = 0; nu < q; ++nu) {
            const auto b = coef.state.row(t).segment(nu * w, w);
            double v = b(0) + exposure * b(1);
            for (int j = 0; j < p_h; ++j) v += b(2 + j) * xtbar(t, j);
            for (int k = 0; k < q; ++k) v += b(2 + p_h + k) * prev(k);
            next(nu) = v;
        }
        path.push_back(std::move(next));
    }
    return path;
}

namespace {

void check_inputs(const PluginInputs& in) {
    const auto& c = in.coeffs;
    const auto& mm = in.means;
    for (const auto& g : c.groups) {
        if (g.m != c.m() || g.p != c.p() || g.q != c.q() || g.p_h != c.p_h()) {
            throw Error(ErrorCode::kDimensionMismatch, "group coefficient dimensions differ");
        }
    }
    if (mm.xbar.rows() != c.m() || mm.xbar.cols() != c.p() || mm.xtbar.rows() != c.m() ||
        mm.xtbar.cols() != c.p_h() || mm.s1bar.size() != c.q()) {
        std::ostringstream os;
        os << "plug-in means do not match coefficients (m=" << c.m() << ", p=" << c.p() << ", q=" << c.q()
           << ", p_h=" << c.p_h() << ")";
        throw Error(ErrorCode::kDimensionMismatch, os.str());
    }
}

}  // namespace

GateResult gate_closed_form(const PluginInputs& in, ExposurePolicy policy) {
    check_inputs(in);
    const auto& c0 = in.coeffs.group(Group::kControl);
    const auto& c1 = in.coeffs.group(Group::kTreated);
    if (policy == ExposurePolicy::kStrict && (!c0.f_identified || !c1.f_identified)) {
        throw Error(ErrorCode::kUnidentifiedExposure,
                    "treated fraction does not vary across days; the exposure effect is not identified "
                    "(use the experimental-exposure policy to extrapolate)");
    }
    // In combined-intercept mode gamma1 is zero, so the exposure argument has
    // no effect and each group keeps its fitted intercept.
    const auto m1 = state_mean_path(c1, 1.0, in.means.s1bar, in.means.xtbar);
    const auto m0 = state_mean_path(c0, 0.0, in.means.s1bar, in.means.xtbar);
    GateResult r;
    r.per_t = Eigen::VectorXd::Zero(c0.m);
    for (int t = 0; t < c0.m; ++t) {
        const double direct = c1.alpha0(t) - c0.alpha0(t);
        const double covariate = in.means.xbar.row(t).dot((c1.alpha1(t) - c0.alpha1(t)).transpose());
        const double interference = c1.alpha2(t).dot(m1[t]) - c0.alpha2(t).dot(m0[t]);
        r.direct += direct;
        r.covariate += covariate;
        r.interference += interference;
        r.per_t(t) = direct + covariate + interference;
    }
    r.gate = r.per_t.sum();
    return r;
}

GroupMeans group_means(const Panel& panel) {
    const auto& s = panel.schema;
    GroupMeans out;
    for (Group g : kGroups) {
        const auto& series = panel.group(g);
        auto& x = out.x[index_of(g)];
        auto& st = out.s[index_of(g)];
        x = Eigen::MatrixXd::Zero(s.m, s.p);
        st = Eigen::MatrixXd::Zero(s.m, s.q);
        for (int d = 0; d < s.n; ++d) {
            for (int t = 0; t < s.m; ++t) {
                const auto xv = series.x(d, t);
                const auto sv = series.s(d, t);
                for (int j = 0; j < s.p; ++j) x(t, j) += xv[j];
                for (int j = 0; j < s.q; ++j) st(t, j) += sv[j];
            }
        }
        x /= s.n;
        st /= s.n;
    }
    return out;
}

double naive_tau(const CoefficientPaths& coeffs, const GroupMeans& means) {
    const int m = coeffs.m();
    for (int gi = 0; gi < 2; ++gi) {
        if (means.x[gi].rows() != m || means.x[gi].cols() != coeffs.p() || means.s[gi].rows() != m ||
            means.s[gi].cols() != coeffs.q()) {
            throw Error(ErrorCode::kDimensionMismatch, "naive_tau: group means do not match coefficients");
        }
    }
    const auto& c0 = coeffs.group(Group::kControl);
    const auto& c1 = coeffs.group(Group::kTreated);
    double tau = 0.0;
    for (int t = 0; t < m; ++t) {
        tau += c1.alpha0(t) - c0.alpha0(t);
        tau += means.x[1].row(t).dot(c1.alpha1(t).transpose()) - means.x[0].row(t).dot(c0.alpha1(t).transpose());
        tau += means.s[1].row(t).dot(c1.alpha2(t).transpose()) - means.s[0].row(t).dot(c0.alpha2(t).transpose());
    }
    return tau;
}

double aggregate_cities(std::span<const double> gates, std::span<const std::int64_t> sizes) {
    if (gates.empty()) throw Error(ErrorCode::kEmptyInput, "aggregate_cities: no cities");
    if (gates.size() != sizes.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "aggregate_cities: gates and sizes differ in length");
    }
    double total = 0.0;
    for (std::size_t r = 0; r < gates.size(); ++r) {
        if (sizes[r] <= 0) throw Error(ErrorCode::kNonPositiveSize, "aggregate_cities: city sizes must be positive");
        total += static_cast<double>(sizes[r]);
    }
    // Weights first, so a single city comes back unchanged.
    double out = 0.0;
    for (std::size_t r = 0; r < gates.size(); ++r) out += static_cast<double>(sizes[r]) / total * gates[r];
    return out;
}

}  // namespace vcdp

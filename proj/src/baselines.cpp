#include "vcdp/baselines.hpp"

#include <cfloat>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "vcdp/error.hpp"

namespace vcdp {

const char* method_name(Method method) {
    switch (method) {
        case Method::kVcdp: return "vcdp";
        case Method::kTTest: return "ttest";
        case Method::kDid: return "did";
        case Method::kDe: return "de";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::kVcdp, Method::kTTest, Method::kDid, Method::kDe})
        if (name == method_name(m)) return m;
    throw Error(ErrorCode::kInvalidConfig, "unknown method '" + name + "' (expected vcdp, ttest, did or de)");
}

namespace {

std::pair<double, double> mean_var(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, ss / static_cast<double>(v.size() - 1)};
}

}  // namespace

WelchResult welch_one_sided(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::kInsufficientDays, "Welch test needs >= 2 days per sample");
    const auto [ma, va] = mean_var(a);
    const auto [mb, vb] = mean_var(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    WelchResult r;
    r.diff = ma - mb;
    const double sa = va / na, sb = vb / nb;
    const double se2 = sa + sb;
    if (se2 <= 0.0) {
        // Degenerate: no within-sample variation.
        r.df = na + nb - 2.0;
        if (r.diff == 0.0) {
            r.t = 0.0;
            r.p_value = 0.5;
        } else {
            r.t = r.diff > 0.0 ? INFINITY : -INFINITY;
            r.p_value = r.diff > 0.0 ? DBL_MIN : 1.0;
        }
        return r;
    }
    r.t = r.diff / std::sqrt(se2);
    r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    const boost::math::students_t dist(r.df);
    r.p_value = std::max(boost::math::cdf(boost::math::complement(dist, r.t)), DBL_MIN);
    return r;
}

std::vector<double> daily_totals(const Panel& panel, Group g) {
    const auto& s = panel.schema;
    std::vector<double> out(static_cast<std::size_t>(s.n), 0.0);
    for (int d = 0; d < s.n; ++d)
        for (int t = 0; t < s.m; ++t) out[d] += panel.group(g).y(d, t);
    return out;
}

BaselineResult t_test(const Panel& panel) {
    if (panel.schema.n < 2) throw Error(ErrorCode::kInsufficientDays, "t-test needs at least 2 days");
    return t_test_totals(daily_totals(panel, Group::kTreated), daily_totals(panel, Group::kControl));
}

BaselineResult t_test_totals(std::span<const double> treated, std::span<const double> control) {
    const auto w = welch_one_sided(treated, control);
    return {Method::kTTest, w.diff, w.p_value, {{"t", w.t}, {"df", w.df}}};
}

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) out[d] = a[d] - b[d];
    return out;
}

}  // namespace

BaselineResult did(const Panel& pre, const Panel& experiment) {
    if (pre.f.empty() || pre.schema.n == 0) throw Error(ErrorCode::kMissingPrePeriod, "DiD needs a pre-period panel");
    const auto& a = pre.schema;
    const auto& b = experiment.schema;
    if (a.m != b.m || a.p != b.p || a.q != b.q || a.p_h != b.p_h) {
        throw Error(ErrorCode::kDimensionMismatch, "pre-period and experiment panels have different schemas");
    }
    return did_totals(daily_totals(pre, Group::kTreated), daily_totals(pre, Group::kControl),
                      daily_totals(experiment, Group::kTreated), daily_totals(experiment, Group::kControl));
}

BaselineResult did_totals(std::span<const double> pre_c1, std::span<const double> pre_c0,
                          std::span<const double> post_c1, std::span<const double> post_c0) {
    if (pre_c1.size() != pre_c0.size() || post_c1.size() != post_c0.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "DiD: groups differ in day count");
    }
    if (pre_c1.size() < 2 || post_c1.size() < 2) {
        throw Error(ErrorCode::kInsufficientDays, "DiD needs at least 2 days in each period");
    }
    const double estimate = (mean_of(post_c1) - mean_of(pre_c1)) - (mean_of(post_c0) - mean_of(pre_c0));
    const auto w = welch_one_sided(differences(post_c1, post_c0), differences(pre_c1, pre_c0));
    return {Method::kDid,
            estimate,
            w.p_value,
            {{"t", w.t},
             {"df", w.df},
             {"pre_c0", mean_of(pre_c0)},
             {"pre_c1", mean_of(pre_c1)},
             {"post_c0", mean_of(post_c0)},
             {"post_c1", mean_of(post_c1)}}};
}

std::vector<double> weighted_daily_totals(std::span<const Panel> panels, Group g) {
    if (panels.empty()) throw Error(ErrorCode::kEmptyInput, "no panels to combine");
    std::int64_t total = 0;
    for (const auto& p : panels) {
        if (p.schema.n != panels.front().schema.n) {
            throw Error(ErrorCode::kDimensionMismatch, "cities differ in day count; daily totals cannot be combined");
        }
        total += p.schema.total_size();
    }
    std::vector<double> out(static_cast<std::size_t>(panels.front().schema.n), 0.0);
    for (const auto& p : panels) {
        const double w = static_cast<double>(p.schema.total_size()) / static_cast<double>(total);
        const auto totals = daily_totals(p, g);
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * totals[d];
    }
    return out;
}

BaselineResult from_test(Method method, const TestResult& r) {
    return {method,
            r.estimate,
            r.p_value,
            {{"critical_value", r.critical_value}, {"replicates", static_cast<double>(r.replicates)}}};
}

BaselineResult de_test(const Panel& panel, const BootstrapConfig& config) {
    const Functional tau[] = {Functional::kNaiveTau};
    return from_test(Method::kDe, bootstrap_functionals(panel, config, tau).front());
}

}  // namespace vcdp

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oracle {

using vcdp::Group;

Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd xtx = x.transpose() * x;
    return xtx.inverse() * (x.transpose() * y);
}

Eigen::VectorXd ols_standard_errors(const Eigen::MatrixXd& x, double sigma) {
    const Eigen::MatrixXd inv = (x.transpose() * x).inverse();
    return (sigma * sigma * inv.diagonal()).cwiseSqrt();
}

namespace {

Eigen::MatrixXd product(const vcdp::GroupCoefficients& c, int hi, int lo) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(c.q, c.q);
    for (int j = hi; j >= lo; --j) p = p * c.phi1(j);  // phi1(hi) leftmost
    return p;
}

Eigen::VectorXd mean_state(const vcdp::GroupCoefficients& c, double a, const vcdp::PluginMeans& means, int t) {
    Eigen::VectorXd m = product(c, t - 1, 0) * means.s1bar;
    for (int k = 0; k <= t - 1; ++k) {
        const Eigen::VectorXd drive = c.gamma0(k) + a * c.gamma1(k) + c.phi0(k) * means.xtbar.row(k).transpose();
        m += product(c, t - 1, k + 1) * drive;
    }
    return m;
}

}  // namespace

double gate_product_sum(const vcdp::CoefficientPaths& coeffs, const vcdp::PluginMeans& means) {
    const auto& c0 = coeffs.group(Group::kControl);
    const auto& c1 = coeffs.group(Group::kTreated);
    double total = 0.0;
    for (int t = 0; t < c0.m; ++t) {
        total += c1.alpha0(t) - c0.alpha0(t);
        total += means.xbar.row(t).dot(c1.alpha1(t) - c0.alpha1(t));
        total += c1.alpha2(t).dot(mean_state(c1, 1.0, means, t)) - c0.alpha2(t).dot(mean_state(c0, 0.0, means, t));
    }
    return total;
}

vcdp::PluginInputs random_plugin_inputs(std::mt19937_64& rng, int m, int p, int q, int p_h) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    vcdp::PluginInputs in;
    in.coeffs = vcdp::CoefficientPaths(m, p, q, p_h);
    for (auto& g : in.coeffs.groups) {
        for (int i = 0; i < g.outcome.size(); ++i) g.outcome.data()[i] = u(rng);
        for (int i = 0; i < g.state.size(); ++i) g.state.data()[i] = u(rng);
        for (int t = 0; t + 1 < m; ++t) {
            Eigen::MatrixXd phi = g.phi1(t);
            const double rows = phi.cwiseAbs().rowwise().sum().maxCoeff();
            if (rows > 0.9) g.set_phi1(t, phi * (0.9 / rows));
        }
    }
    in.means.xbar = Eigen::MatrixXd::NullaryExpr(m, p, [&] { return u(rng); });
    in.means.xtbar = Eigen::MatrixXd::NullaryExpr(m, p_h, [&] { return u(rng); });
    in.means.s1bar = Eigen::VectorXd::NullaryExpr(q, [&] { return u(rng); });
    return in;
}

MonteCarlo forward_gate(const vcdp::BaseModel& base, double eta, int draws, std::uint64_t seed) {
    const auto& s = base.schema;
    const vcdp::GroupCoefficients arm[2] = {base.coefficients_for(Group::kControl, eta),
                                            base.coefficients_for(Group::kTreated, eta)};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](Eigen::Index size) {
        return static_cast<Eigen::Index>(std::min<double>(std::floor(unit(rng) * size), size - 1));
    };
    auto covariate = [&](const vcdp::CovariateSpec& spec, Eigen::Index day, int t) {
        if (spec.role == vcdp::CovariateRole::kCalendar) return spec.calendar(day % spec.calendar.rows(), t);
        return spec.lo(t) + (spec.hi(t) - spec.lo(t)) * unit(rng);
    };
    const double w1 = s.weight_of(Group::kTreated);
    double sum = 0.0, sum_sq = 0.0;
    Eigen::VectorXd x(s.p), xt(s.p_h);
    for (int r = 0; r < draws; ++r) {
        const int g_init = unit(rng) < w1 ? 1 : 0;
        const Eigen::VectorXd s1 = base.pool_s1[g_init].row(pick(base.pool_s1[g_init].rows())).transpose();
        const Eigen::Index k = pick(base.pool_eps[0].rows());
        const Eigen::Index day = pick(1 << 20);
        Eigen::VectorXd state[2] = {s1, s1};
        double diff = 0.0;
        for (int t = 0; t < s.m; ++t) {
            for (int j = 0; j < s.p; ++j) x(j) = covariate(base.x_specs[j], day, t);
            for (int j = 0; j < s.p_h; ++j) xt(j) = covariate(base.xt_specs[j], day, t);
            double y[2];
            for (int a = 0; a < 2; ++a) {
                const auto& c = arm[a];
                y[a] = c.alpha0(t) + c.alpha1(t).dot(x) + c.alpha2(t).dot(state[a]) + base.pool_eps[a](k, t);
            }
            diff += y[1] - y[0];
            if (t + 1 < s.m) {
                for (int a = 0; a < 2; ++a) {
                    const auto& c = arm[a];
                    Eigen::VectorXd next = c.gamma0(t) + static_cast<double>(a) * c.gamma1(t) + c.phi0(t) * xt +
                                           c.phi1(t) * state[a];
                    for (int nu = 0; nu < s.q; ++nu) next(nu) += base.pool_state[a](k, t * s.q + nu);
                    state[a] = next;
                }
            }
        }
        sum += diff;
        sum_sq += diff * diff;
    }
    MonteCarlo mc;
    mc.mean = sum / draws;
    const double var = (sum_sq - draws * mc.mean * mc.mean) / (draws - 1);
    mc.standard_error = std::sqrt(std::max(var, 0.0) / draws);
    return mc;
}

std::pair<double, double> welch(const std::vector<double>& a, const std::vector<double>& b) {
    auto moments = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::pair{m, ss / (v.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double ua = va / a.size(), ub = vb / b.size();
    const double t = (ma - mb) / std::sqrt(ua + ub);
    const double df = (ua + ub) * (ua + ub) / (ua * ua / (a.size() - 1) + ub * ub / (b.size() - 1));
    return {t, df};
}

double t4_upper_tail(double t) {
    const double u = 1.0 + t * t / 4.0;
    const double cdf = 0.5 + 0.375 * (t / std::sqrt(u)) * (1.0 - t * t / (12.0 * u));
    return 1.0 - cdf;
}

double ks_uniform(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        d = std::max(d, std::abs(samples[i] - i / n));
        d = std::max(d, std::abs((i + 1) / n - samples[i]));
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

Truth constant_truth(int m, int p, int q, int p_h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Truth out;
    for (auto* c : {&out.c0, &out.c1}) {
        *c = vcdp::GroupCoefficients(m, p, q, p_h);
        Eigen::RowVectorXd outcome(1 + p + q);
        for (int j = 0; j < outcome.size(); ++j) outcome(j) = u(rng);
        Eigen::VectorXd g0(q), g1(q);
        Eigen::MatrixXd p0(q, p_h), p1(q, q);
        for (int i = 0; i < q; ++i) {
            g0(i) = u(rng);
            g1(i) = u(rng);
            for (int j = 0; j < p_h; ++j) p0(i, j) = u(rng);
            for (int j = 0; j < q; ++j) p1(i, j) = u(rng);
        }
        // Stable: max row sum 0.5.
        p1 *= 0.5 / p1.cwiseAbs().rowwise().sum().maxCoeff();
        for (int t = 0; t < m; ++t) c->outcome.row(t) = outcome;
        for (int t = 0; t + 1 < m; ++t) {
            c->set_gamma0(t, g0);
            c->set_gamma1(t, g1);
            c->set_phi0(t, p0);
            c->set_phi1(t, p1);
        }
    }
    return out;
}

vcdp::Panel generated_panel(const Truth& truth, int n, std::uint64_t seed, bool constant_f, double noise_sd) {
    const auto& c0 = truth.c0;
    vcdp::PanelSchema schema;
    schema.p = c0.p;
    schema.q = c0.q;
    schema.p_h = c0.p_h;
    schema.n = n;
    schema.m = c0.m;
    schema.n0 = 3;
    schema.n1 = 1;
    schema.shared_supply = false;
    vcdp::Panel panel = vcdp::Panel::zeros(schema, "noiseless", "experiment");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), frac(0.1, 0.9);
    std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
    auto err = [&] { return noise_sd > 0.0 ? noise(rng) : 0.0; };
    for (int d = 0; d < n; ++d) {
        const double f = constant_f ? schema.treated_share() : frac(rng);
        for (int t = 0; t < schema.m; ++t) panel.fraction(d, t) = f;
    }
    for (Group g : vcdp::kGroups) {
        const auto& c = g == Group::kControl ? truth.c0 : truth.c1;
        auto& series = panel.group(g);
        for (int d = 0; d < n; ++d) {
            for (int t = 0; t < schema.m; ++t) {
                for (auto& v : series.x(d, t)) v = u(rng);
                for (auto& v : series.xt(d, t)) v = u(rng);
            }
            for (auto& v : series.s(d, 0)) v = 2.0 * u(rng);
            for (int t = 0; t + 1 < schema.m; ++t) {
                const auto xt = series.xt(d, t);
                const auto st = series.s(d, t);
                const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(xt.data(), schema.p_h);
                const Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(st.data(), schema.q);
                const Eigen::VectorXd next =
                    c.gamma0(t) + panel.fraction(d, t) * c.gamma1(t) + c.phi0(t) * xv + c.phi1(t) * sv;
                auto dst = series.s(d, t + 1);
                for (int i = 0; i < schema.q; ++i) dst[i] = next(i) + err();
            }
            for (int t = 0; t < schema.m; ++t) {
                const auto x = series.x(d, t);
                const auto st = series.s(d, t);
                double y = c.alpha0(t);
                for (int j = 0; j < schema.p; ++j) y += c.alpha1(t)(j) * x[j];
                for (int j = 0; j < schema.q; ++j) y += c.alpha2(t)(j) * st[j];
                series.y(d, t) = y + err();
            }
        }
    }
    return panel;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("vcdp_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path data_dir() { return VCDP_DATA_DIR; }

}  // namespace oracle

#include "vcdp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vcdp/error.hpp"

namespace vcdp {

GroupCoefficients::GroupCoefficients(int m_, int p_, int q_, int p_h_)
    : m(m_), p(p_), q(q_), p_h(p_h_),
      outcome(Eigen::MatrixXd::Zero(m_, 1 + p_ + q_)),
      state(Eigen::MatrixXd::Zero(m_ - 1, q_ * (2 + p_h_ + q_))) {}

Eigen::VectorXd GroupCoefficients::gamma0(int t) const {
    Eigen::VectorXd v(q);
    for (int nu = 0; nu < q; ++nu) v(nu) = state_block(t, nu)(0);
    return v;
}

Eigen::VectorXd GroupCoefficients::gamma1(int t) const {
    Eigen::VectorXd v(q);
    for (int nu = 0; nu < q; ++nu) v(nu) = state_block(t, nu)(1);
    return v;
}

Eigen::MatrixXd GroupCoefficients::phi0(int t) const {
    Eigen::MatrixXd v(q, p_h);
    for (int nu = 0; nu < q; ++nu) v.row(nu) = state_block(t, nu).segment(2, p_h);
    return v;
}

Eigen::MatrixXd GroupCoefficients::phi1(int t) const {
    Eigen::MatrixXd v(q, q);
    for (int nu = 0; nu < q; ++nu) v.row(nu) = state_block(t, nu).segment(2 + p_h, q);
    return v;
}

void GroupCoefficients::set_gamma0(int t, const Eigen::VectorXd& v) {
    for (int nu = 0; nu < q; ++nu) state_block(t, nu)(0) = v(nu);
}

void GroupCoefficients::set_gamma1(int t, const Eigen::VectorXd& v) {
    for (int nu = 0; nu < q; ++nu) state_block(t, nu)(1) = v(nu);
}

void GroupCoefficients::set_phi0(int t, const Eigen::MatrixXd& v) {
    for (int nu = 0; nu < q; ++nu) state_block(t, nu).segment(2, p_h) = v.row(nu);
}

void GroupCoefficients::set_phi1(int t, const Eigen::MatrixXd& v) {
    for (int nu = 0; nu < q; ++nu) state_block(t, nu).segment(2 + p_h, q) = v.row(nu);
}

CoefficientPaths::CoefficientPaths(int m, int p, int q, int p_h)
    : groups{GroupCoefficients(m, p, q, p_h), GroupCoefficients(m, p, q, p_h)} {}

Responses responses_of(const Panel& panel) {
    const auto& s = panel.schema;
    Responses r;
    for (Group g : kGroups) {
        const auto& series = panel.group(g);
        auto& y = r.y[index_of(g)];
        auto& sn = r.s_next[index_of(g)];
        y.resize(s.n, s.m);
        sn.resize(s.n, (s.m - 1) * s.q);
        for (int d = 0; d < s.n; ++d) {
            for (int t = 0; t < s.m; ++t) y(d, t) = series.y(d, t);
            for (int t = 0; t + 1 < s.m; ++t) {
                const auto next = series.s(d, t + 1);
                for (int nu = 0; nu < s.q; ++nu) sn(d, t * s.q + nu) = next[nu];
            }
        }
    }
    return r;
}

double default_bandwidth(int n) { return std::min(0.1, std::pow(static_cast<double>(n), -0.3)); }

bool exposure_identified(const Panel& panel) {
    const auto& s = panel.schema;
    for (int t = 0; t + 1 < s.m; ++t) {
        double lo = panel.fraction(0, t), hi = lo;
        for (int d = 1; d < s.n; ++d) {
            lo = std::min(lo, panel.fraction(d, t));
            hi = std::max(hi, panel.fraction(d, t));
        }
        if (hi - lo <= 1e-12) return false;
    }
    return true;
}

namespace {

void check_degrees_of_freedom(const PanelSchema& s) {
    if (s.n <= 2 + s.p + s.q || s.n <= 2 + s.p_h + s.q) {
        std::ostringstream os;
        os << "pointwise fit needs n > 2+p+q and n > 2+p_h+q (n=" << s.n << ", p=" << s.p << ", q=" << s.q
           << ", p_h=" << s.p_h << ")";
        throw Error(ErrorCode::kInsufficientDays, os.str());
    }
}

LeastSquares factorize(const Eigen::MatrixXd& design, const char* equation, Group g, int t) {
    try {
        return LeastSquares(design);
    } catch (const Error& e) {
        std::ostringstream os;
        os << equation << " equation, group " << group_label(g) << ", t=" << t + 1 << ": " << e.what();
        throw Error(e.code(), os.str());
    }
}

}  // namespace

PointwiseFitter::PointwiseFitter(const Panel& panel) : schema_(panel.schema) {
    const auto& s = schema_;
    check_degrees_of_freedom(s);
    f_identified_ = exposure_identified(panel);
    if (!f_identified_) {
        double total = 0.0;
        for (double v : panel.f) total += v;
        combined_exposure_ = total / static_cast<double>(panel.f.size());
    }
    const int state_cols = (f_identified_ ? 2 : 1) + s.p_h + s.q;
    for (Group g : kGroups) {
        const auto& series = panel.group(g);
        auto& out = outcome_[index_of(g)];
        auto& st = state_[index_of(g)];
        out.reserve(s.m);
        st.reserve(s.m - 1);
        for (int t = 0; t < s.m; ++t) {
            Eigen::MatrixXd z(s.n, 1 + s.p + s.q);
            for (int d = 0; d < s.n; ++d) {
                z(d, 0) = 1.0;
                const auto x = series.x(d, t);
                const auto st_now = series.s(d, t);
                for (int j = 0; j < s.p; ++j) z(d, 1 + j) = x[j];
                for (int j = 0; j < s.q; ++j) z(d, 1 + s.p + j) = st_now[j];
            }
            out.push_back(factorize(z, "outcome", g, t));
        }
        for (int t = 0; t + 1 < s.m; ++t) {
            Eigen::MatrixXd z(s.n, state_cols);
            for (int d = 0; d < s.n; ++d) {
                int c = 0;
                z(d, c++) = 1.0;
                if (f_identified_) z(d, c++) = panel.fraction(d, t);
                const auto xt = series.xt(d, t);
                const auto st_now = series.s(d, t);
                for (int j = 0; j < s.p_h; ++j) z(d, c++) = xt[j];
                for (int j = 0; j < s.q; ++j) z(d, c++) = st_now[j];
            }
            st.push_back(factorize(z, "state", g, t));
        }
    }
}

CoefficientPaths PointwiseFitter::fit(const Responses& responses) const {
    const auto& s = schema_;
    CoefficientPaths paths(s.m, s.p, s.q, s.p_h);
    for (Group g : kGroups) {
        const int gi = index_of(g);
        auto& coef = paths.groups[gi];
        coef.f_identified = f_identified_;
        coef.combined_exposure = combined_exposure_;
        const auto& y = responses.y[gi];
        const auto& sn = responses.s_next[gi];
        if (y.rows() != s.n || y.cols() != s.m || sn.rows() != s.n || sn.cols() != (s.m - 1) * s.q) {
            throw Error(ErrorCode::kDimensionMismatch, "responses do not match the fitted panel");
        }
        for (int t = 0; t < s.m; ++t) coef.outcome.row(t) = (outcome_[gi][t].solve_map() * y.col(t)).transpose();
        for (int t = 0; t + 1 < s.m; ++t) {
            const Eigen::MatrixXd theta = state_[gi][t].solve_map() * sn.middleCols(t * s.q, s.q);
            for (int nu = 0; nu < s.q; ++nu) {
                auto block = coef.state_block(t, nu);
                if (f_identified_) {
                    block = theta.col(nu).transpose();
                } else {
                    block(0) = theta(0, nu);
                    block(1) = 0.0;
                    block.tail(s.p_h + s.q) = theta.col(nu).tail(s.p_h + s.q).transpose();
                }
            }
        }
    }
    return paths;
}

CoefficientPaths fit_pointwise(const Panel& panel) {
    validate_panel(panel);
    return PointwiseFitter(panel).fit(responses_of(panel));
}

CoefficientPaths smooth(const CoefficientPaths& raw, double h, KernelType kernel) {
    const int m = raw.m();
    const Eigen::MatrixXd w_out = smoothing_matrix(m, m, h, kernel);
    const Eigen::MatrixXd w_state = smoothing_matrix(m - 1, m, h, kernel);
    CoefficientPaths out = raw;
    for (auto& g : out.groups) {
        g.outcome = w_out * g.outcome;
        g.state = w_state * g.state;
    }
    return out;
}

std::pair<double, double> exact_split(double observed, double residual) {
    double lo = residual, hi = residual;
    for (int i = 0; i < 4; ++i) {
        for (double e : {lo, hi}) {
            const double fitted = observed - e;
            if (fitted + e == observed) return {fitted, e};
            const double back = observed - fitted;
            if (fitted + back == observed) return {fitted, back};
        }
        lo = std::nextafter(lo, -HUGE_VAL);
        hi = std::nextafter(hi, HUGE_VAL);
    }
    // No exact pair exists when |residual| dwarfs |observed|; keep the
    // residual and accept a rounding-level gap.
    return {observed - residual, residual};
}

namespace {

// Snaps rounding-level residuals in each column to zero, then makes the
// observed = fitted + residual identity exact.
void finish_column(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted, Eigen::Ref<Eigen::VectorXd> fitted,
                   Eigen::Ref<Eigen::VectorXd> resid) {
    const double scale = observed.cwiseAbs().maxCoeff();
    for (Eigen::Index d = 0; d < observed.size(); ++d) {
        double e = observed(d) - predicted(d);
        if (std::abs(e) <= kResidualSnap * scale) e = 0.0;
        const auto [f, r] = exact_split(observed(d), e);
        fitted(d) = f;
        resid(d) = r;
    }
}

}  // namespace

ModelFit extract_fit(const Panel& panel, const CoefficientPaths& smoothed) {
    const auto& s = panel.schema;
    if (smoothed.m() != s.m || smoothed.p() != s.p || smoothed.q() != s.q || smoothed.p_h() != s.p_h) {
        throw Error(ErrorCode::kDimensionMismatch, "coefficient paths do not match the panel schema");
    }
    const Responses obs = responses_of(panel);
    ModelFit fit;
    fit.smoothed = smoothed;
    for (Group g : kGroups) {
        const int gi = index_of(g);
        const auto& series = panel.group(g);
        const auto& coef = smoothed.groups[gi];
        fit.eps[gi].resize(s.n, s.m);
        fit.fitted_y[gi].resize(s.n, s.m);
        fit.state_resid[gi].resize(s.n, (s.m - 1) * s.q);
        fit.fitted_s[gi].resize(s.n, (s.m - 1) * s.q);
        Eigen::VectorXd pred(s.n);
        for (int t = 0; t < s.m; ++t) {
            const Eigen::RowVectorXd beta = coef.outcome.row(t);
            for (int d = 0; d < s.n; ++d) {
                double v = beta(0);
                const auto x = series.x(d, t);
                const auto st = series.s(d, t);
                for (int j = 0; j < s.p; ++j) v += beta(1 + j) * x[j];
                for (int j = 0; j < s.q; ++j) v += beta(1 + s.p + j) * st[j];
                pred(d) = v;
            }
            finish_column(obs.y[gi].col(t), pred, fit.fitted_y[gi].col(t), fit.eps[gi].col(t));
        }
        for (int t = 0; t + 1 < s.m; ++t) {
            for (int nu = 0; nu < s.q; ++nu) {
                const Eigen::RowVectorXd b = coef.state_block(t, nu);
                for (int d = 0; d < s.n; ++d) {
                    double v = b(0);
                    if (coef.f_identified) v += b(1) * panel.fraction(d, t);
                    const auto xt = series.xt(d, t);
                    const auto st = series.s(d, t);
                    for (int j = 0; j < s.p_h; ++j) v += b(2 + j) * xt[j];
                    for (int j = 0; j < s.q; ++j) v += b(2 + s.p_h + j) * st[j];
                    pred(d) = v;
                }
                const int col = t * s.q + nu;
                finish_column(obs.s_next[gi].col(col), pred, fit.fitted_s[gi].col(col), fit.state_resid[gi].col(col));
            }
        }
    }
    return fit;
}

double resolve_bandwidth(const FitOptions& options, int n) {
    return options.bandwidth > 0.0 ? options.bandwidth : default_bandwidth(n);
}

ModelFit fit_model(const Panel& panel, const FitOptions& options) {
    validate_panel(panel);
    const double h = resolve_bandwidth(options, panel.schema.n);
    const CoefficientPaths raw = PointwiseFitter(panel).fit(responses_of(panel));
    ModelFit fit = extract_fit(panel, smooth(raw, h, options.kernel));
    fit.raw = raw;
    fit.bandwidth = h;
    fit.kernel = options.kernel;
    return fit;
}

}  // namespace vcdp

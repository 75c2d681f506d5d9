#include "vcdp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "vcdp/error.hpp"

namespace vcdp {

LeastSquares::LeastSquares(const Eigen::MatrixXd& design) {
    const auto n = design.rows();
    const auto k = design.cols();
    if (k < 1 || n < k) {
        std::ostringstream os;
        os << "least squares needs n >= k >= 1 (n=" << n << ", k=" << k << ")";
        throw Error(ErrorCode::kDimensionMismatch, os.str());
    }
    if (!design.allFinite()) throw Error(ErrorCode::kNonFiniteValue, "design matrix has non-finite entries");

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(k - 1) < kRankTolerance * sv(0)) {
        std::ostringstream os;
        os << "design is rank deficient (smallest/largest singular value = "
           << (sv(0) > 0.0 ? sv(k - 1) / sv(0) : 0.0) << ")";
        throw Error(ErrorCode::kRankDeficient, os.str());
    }

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    const auto r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    solve_map_ = r.solve(thin_q.transpose());
}

OlsResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses) {
    if (responses.size() != design.rows()) {
        throw Error(ErrorCode::kDimensionMismatch, "ols_fit: responses length differs from design rows");
    }
    if (!responses.allFinite()) throw Error(ErrorCode::kNonFiniteValue, "ols_fit: non-finite response");
    const LeastSquares solver(design);
    OlsResult out;
    out.coefficients = solver.solve(responses);
    out.fitted = design * out.coefficients;
    out.residuals = responses - out.fitted;
    out.rank_ok = true;
    return out;
}

double gaussian_kernel(double u) { return std::exp(-u * u); }

double truncated_gaussian_kernel(double u) { return std::abs(u) <= 1.0 ? std::exp(-u * u) : 0.0; }

double kernel_value(KernelType kernel, double u) {
    return kernel == KernelType::kGaussian ? gaussian_kernel(u) : truncated_gaussian_kernel(u);
}

namespace {

void check_bandwidth(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorCode::kInvalidBandwidth, "bandwidth must be positive and finite");
    }
}

}  // namespace

Eigen::VectorXd kernel_weights(int t, int m, double h, KernelType kernel) {
    check_bandwidth(h);
    if (m < 1 || t < 0 || t >= m) throw Error(ErrorCode::kDimensionMismatch, "kernel_weights: t outside [0, m)");
    return smoothing_matrix(m, m, h, kernel).row(t).transpose();
}

Eigen::MatrixXd smoothing_matrix(int rows, int m, double h, KernelType kernel) {
    check_bandwidth(h);
    if (rows < 1 || rows > m) throw Error(ErrorCode::kDimensionMismatch, "smoothing_matrix: bad row count");
    const double scale = static_cast<double>(m) * h;
    Eigen::MatrixXd w(rows, rows);
    for (int t = 0; t < rows; ++t) {
        for (int j = 0; j < rows; ++j) w(t, j) = kernel_value(kernel, (j - t) / scale);
        w.row(t) /= w.row(t).sum();
    }
    return w;
}

double empirical_quantile(std::span<const double> samples, double level) {
    if (samples.empty()) throw Error(ErrorCode::kEmptySamples, "empirical_quantile: no samples");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::kInvalidConfig, "quantile level must be in (0,1)");
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double v : sorted)
        if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "empirical_quantile: non-finite sample");
    const auto b = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(b) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, b);
    std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
    return sorted[rank - 1];
}

}  // namespace vcdp

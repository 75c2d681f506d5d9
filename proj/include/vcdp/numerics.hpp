#pragma once

#include <span>

#include <Eigen/Dense>

namespace vcdp {

struct OlsResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted;
    bool rank_ok = false;
};

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Least-squares solver for a fixed design. The design is factorized once
/// (Householder QR, with an SVD rank check) and the factorization is reused
/// for any number of response vectors.
class LeastSquares {
public:
    LeastSquares() = default;
    explicit LeastSquares(const Eigen::MatrixXd& design);

    int rows() const { return static_cast<int>(solve_map_.cols()); }
    int cols() const { return static_cast<int>(solve_map_.rows()); }

    Eigen::VectorXd solve(const Eigen::VectorXd& responses) const { return solve_map_ * responses; }

    /// coefficients = R^{-1} Q^T, k x n.
    const Eigen::MatrixXd& solve_map() const { return solve_map_; }

private:
    Eigen::MatrixXd solve_map_;
};

/// Throws RankDeficient / NonFiniteValue / DimensionMismatch.
OlsResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses);

enum class KernelType { kGaussian, kTruncatedGaussian };

/// K(u) = exp(-u^2).
double gaussian_kernel(double u);
/// exp(-u^2) on [-1, 1], zero outside.
double truncated_gaussian_kernel(double u);
double kernel_value(KernelType kernel, double u);

/// Normalized weights w_j(t) = K((j - t)/(m h)) / sum_k K((k - t)/(m h)) for
/// j = 0..m-1. t is 0-based.
Eigen::VectorXd kernel_weights(int t, int m, double h, KernelType kernel = KernelType::kGaussian);

/// rows x rows matrix W with W(t, j) proportional to K((j - t)/(m h)) and each
/// row renormalized over j < rows. rows = m gives the outcome smoother,
/// rows = m - 1 the state smoother.
Eigen::MatrixXd smoothing_matrix(int rows, int m, double h, KernelType kernel = KernelType::kGaussian);

/// ceil(level * B)-th order statistic (1-based) of the samples.
double empirical_quantile(std::span<const double> samples, double level);

}  // namespace vcdp

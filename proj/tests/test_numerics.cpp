#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "vcdp/error.hpp"
#include "vcdp/numerics.hpp"
#include "vcdp/random.hpp"

using namespace vcdp;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected vcdp::Error");
    return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("ols: exact line") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 1, 1, 2, 1, 3;
    Eigen::VectorXd y(3);
    y << 3, 5, 7;
    const auto r = ols_fit(x, y);
    CHECK(r.rank_ok);
    CHECK(r.coefficients(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.coefficients(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ols: duplicated column is rank deficient") {
    Eigen::MatrixXd x(4, 3);
    x << 1, 2, 2, 1, 3, 3, 1, 5, 5, 1, 7, 7;
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, 0, 3);
    CHECK(code_of([&] { ols_fit(x, y); }) == ErrorCode::kRankDeficient);
}

TEST_CASE("ols: non-finite input") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd y(3);
    y << 1, NAN, 2;
    CHECK(code_of([&] { ols_fit(x, y); }) == ErrorCode::kNonFiniteValue);
    x(1, 0) = INFINITY;
    y(1) = 0;
    CHECK(code_of([&] { ols_fit(x, y); }) == ErrorCode::kNonFiniteValue);
}

TEST_CASE("ols: agrees with the normal-equation oracle") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = rep == 0 ? 20 : 5 + rep % 40;
        const int k = rep == 0 ? 4 : 1 + rep % 5;
        Eigen::MatrixXd x(n, k);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) x(i, j) = z(rng);
            y(i) = z(rng);
        }
        const auto r = ols_fit(x, y);
        const Eigen::VectorXd expect = oracle::normal_equations(x, y);
        CHECK((r.coefficients - expect).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
        CHECK(((r.fitted + r.residuals) - y).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, y.cwiseAbs().maxCoeff()));
        for (int j = 0; j < k; ++j) {
            CHECK(std::abs(x.col(j).dot(r.residuals)) <= 1e-8 * x.col(j).norm() * std::max(1.0, r.residuals.norm()));
        }
    }
}

TEST_CASE("LeastSquares reuses one factorization for many responses") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(30, 3);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 3; ++j) x(i, j) = z(rng);
    const LeastSquares ls(x);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd y(30);
        for (int i = 0; i < 30; ++i) y(i) = z(rng);
        CHECK((ls.solve(y) - oracle::normal_equations(x, y)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("gaussian kernel") {
    CHECK(gaussian_kernel(0.0) == 1.0);
    CHECK(gaussian_kernel(1.0) == doctest::Approx(0.36787944117).epsilon(1e-10));
    for (double u : {0.1, 0.7, 1.3, 5.0}) CHECK(gaussian_kernel(-u) == gaussian_kernel(u));
    CHECK(truncated_gaussian_kernel(0.5) == gaussian_kernel(0.5));
    CHECK(truncated_gaussian_kernel(1.5) == 0.0);
}

TEST_CASE("kernel weights") {
    SUBCASE("wide bandwidth is uniform") {
        for (int t = 0; t < 3; ++t) {
            const auto w = kernel_weights(t, 3, 1e6);
            for (int j = 0; j < 3; ++j) CHECK(std::abs(w(j) - 1.0 / 3.0) < 1e-9);
        }
    }
    SUBCASE("narrow bandwidth is a delta") {
        const auto w = kernel_weights(1, 3, 1e-9);
        CHECK(std::abs(w(0)) < 1e-12);
        CHECK(std::abs(w(1) - 1.0) < 1e-12);
        CHECK(std::abs(w(2)) < 1e-12);
    }
    SUBCASE("two intervals at mh = 1") {
        const auto w = kernel_weights(0, 2, 0.5);
        CHECK(std::abs(w(0) - 0.73105858) < 1e-8);
        CHECK(std::abs(w(1) - 0.26894142) < 1e-8);
    }
    SUBCASE("normalized and proportional to K") {
        for (int m : {2, 5, 24})
            for (double h : {0.01, 0.1, 0.5, 3.0})
                for (int t = 0; t < m; ++t) {
                    const auto w = kernel_weights(t, m, h);
                    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
                    CHECK((w.array() >= 0.0).all());
                    // A constant multiple of K gives the same normalized weights.
                    Eigen::VectorXd raw(m);
                    for (int j = 0; j < m; ++j) raw(j) = 7.5 * std::exp(-std::pow((j - t) / (m * h), 2));
                    CHECK((w - raw / raw.sum()).cwiseAbs().maxCoeff() < 1e-12);
                }
    }
    SUBCASE("bad bandwidth") {
        CHECK(code_of([] { kernel_weights(0, 3, 0.0); }) == ErrorCode::kInvalidBandwidth);
        CHECK(code_of([] { kernel_weights(0, 3, -1.0); }) == ErrorCode::kInvalidBandwidth);
    }
}

TEST_CASE("smoothing matrix rows renormalize over the row range") {
    const auto w = smoothing_matrix(23, 24, 0.1);
    CHECK(w.rows() == 23);
    CHECK(w.cols() == 23);
    for (int t = 0; t < 23; ++t) CHECK(std::abs(w.row(t).sum() - 1.0) < 1e-12);
    const auto full = smoothing_matrix(24, 24, 0.1);
    for (int t = 0; t < 24; ++t) CHECK((full.row(t).transpose() - kernel_weights(t, 24, 0.1)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("empirical quantile") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(empirical_quantile(v, 0.95) == 95.0);
    const std::vector<double> c(17, 2.5);
    for (double level : {0.01, 0.5, 0.99}) CHECK(empirical_quantile(c, level) == 2.5);
    CHECK(empirical_quantile(std::vector<double>{3, 1, 2}, 0.5) == 2.0);
    CHECK(code_of([] { empirical_quantile(std::vector<double>{}, 0.5); }) == ErrorCode::kEmptySamples);
}

TEST_CASE("philox known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal draws") {
    SUBCASE("determinism") {
        RandomStream a(99, 3), b(99, 3);
        for (int i = 0; i < 1000; ++i) CHECK(a.normal() == b.normal());
        RandomStream c(99, 3);
        c.normal();
        CHECK(c.position() == 1);
    }
    SUBCASE("moments of 1e5 draws") {
        RandomStream s(2024, 0);
        double sum = 0.0, sq = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const double z = s.normal();
            sum += z;
            sq += z * z;
        }
        const double mean = sum / n, var = sq / n - mean * mean;
        CHECK(std::abs(mean) < 0.02);
        CHECK(std::abs(var - 1.0) < 0.02);
    }
    SUBCASE("distinct streams are uncorrelated") {
        RandomStream a(5, 1), b(5, 2);
        const int n = 10000;
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < n; ++i) {
            const double x = a.normal(), y = b.normal();
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        const double cov = sab / n - (sa / n) * (sb / n);
        const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
        CHECK(std::abs(corr) < 0.05);
    }
    SUBCASE("draws are a pure function of position") {
        RandomStream a(1, 1);
        for (int i = 0; i < 10; ++i) a.normal();
        RandomStream b(1, 1);
        std::vector<double> seq;
        for (int i = 0; i < 11; ++i) seq.push_back(b.normal());
        CHECK(a.normal() == seq.back());
    }
}

TEST_CASE("uniform and index ranges") {
    RandomStream s(11, 4);
    for (int i = 0; i < 10000; ++i) {
        const double u = s.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(s.index(7) < 7u);
    }
}

TEST_CASE("derived seeds differ across labels") {
    CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
    CHECK(derive_seed(1, 0, 0) != derive_seed(1, 1, 0));
    CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

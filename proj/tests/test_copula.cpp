#include <gtest/gtest.h>

#include <random>

#include "jpmbn/copula.hpp"

using namespace jpmbn;

namespace {

// O(n^2) tau-b.
double brute_kendall(const std::vector<double>& x, const std::vector<double>& y) {
    double c = 0, d = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double sx = (x[i] > x[j]) - (x[i] < x[j]);
            const double sy = (y[i] > y[j]) - (y[i] < y[j]);
            if (sx == 0 && sy == 0) continue;
            if (sx == 0) {
                tx += 1;
            } else if (sy == 0) {
                ty += 1;
            } else if (sx == sy) {
                c += 1;
            } else {
                d += 1;
            }
        }
    return (c - d) / std::sqrt((c + d + tx) * (c + d + ty));
}

double sampled_tau(const Eigen::MatrixXd& rho, std::size_t a, std::size_t b, std::size_t n, std::uint64_t seed) {
    const GaussianCopula cop(rho);
    std::mt19937_64 rng(seed);
    std::vector<double> u(rho.rows()), x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
        cop.draw_uniforms(rng, u);
        x[k] = u[a];
        y[k] = u[b];
    }
    return kendall_tau(x, y);
}

}  // namespace

TEST(Copula, KendallToPearsonClosedForm) {
    EXPECT_EQ(kendall_to_pearson(0.0), 0.0);
    EXPECT_NEAR(kendall_to_pearson(1.0), 1.0, 1e-15);
    EXPECT_NEAR(kendall_to_pearson(0.5), 0.70711, 5e-6);
    EXPECT_THROW(kendall_to_pearson(1.2), std::domain_error);
}

TEST(Copula, PearsonMatrixIsSymmetricWithUnitDiagonal) {
    Eigen::MatrixXd tau(3, 3);
    tau << 1, 0.3, -0.2, 0.3, 1, 0.1, -0.2, 0.1, 1;
    const auto p = pearson_from_kendall(tau);
    EXPECT_FALSE(p.repaired);
    EXPECT_LT((p.rho - p.rho.transpose()).norm(), 1e-15);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(p.rho(k, k), 1.0);
}

TEST(Copula, IndefiniteMatrixIsRepaired) {
    Eigen::MatrixXd tau(3, 3);
    tau << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    const auto p = pearson_from_kendall(tau);
    EXPECT_TRUE(p.repaired);
    EXPECT_LT(p.min_eigenvalue, 0.0);
    EXPECT_NO_THROW(GaussianCopula{p.rho});
    EXPECT_THROW(GaussianCopula{tau}, std::domain_error);
}

TEST(Copula, KendallMatchesBruteForce) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> d(0, 20);
    std::vector<double> x(400), y(400);
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = d(rng);
        y[k] = x[k] + d(rng);
    }
    EXPECT_NEAR(kendall_tau(x, y), brute_kendall(x, y), 1e-12);
}

TEST(Copula, IdentityCopulaIsIndependent) {
    const Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(4, 4);
    EXPECT_NEAR(sampled_tau(rho, 0, 1, 100000, 1), 0.0, 0.02);
    EXPECT_NEAR(sampled_tau(rho, 2, 3, 100000, 2), 0.0, 0.02);
}

TEST(Copula, SampledTauRecoversConfiguredTau) {
    Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(2, 2);
    rho(0, 1) = rho(1, 0) = 0.7071;
    EXPECT_NEAR(sampled_tau(rho, 0, 1, 100000, 3), 0.5, 0.02);
}

#pragma once

#include <random>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace jpmbn {

/// Meta-elliptical relation rho = sin(pi * tau / 2).
double kendall_to_pearson(double tau);

struct PearsonMatrix {
    Eigen::MatrixXd rho;
    bool repaired = false;       ///< eigenvalue clipping was applied
    double min_eigenvalue = 0.0;  ///< before any repair
};

/// Entrywise Kendall-to-Pearson conversion. If the result is not positive
/// definite, eigenvalues are clipped at `floor` and the diagonal rescaled to one.
PearsonMatrix pearson_from_kendall(const Eigen::MatrixXd& tau, double floor = 1e-8);

/// Draws z ~ N(0, rho) through the Cholesky factor of rho.
class GaussianCopula {
public:
    /// Throws std::domain_error when rho is not positive definite.
    explicit GaussianCopula(const Eigen::MatrixXd& rho);

    std::size_t dimension() const { return static_cast<std::size_t>(lower_.rows()); }
    /// Fills `u` with copula uniforms Phi(z_k).
    void draw_uniforms(std::mt19937_64& rng, std::span<double> u) const;

private:
    Eigen::MatrixXd lower_;
};

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
double kendall_tau(std::span<const double> x, std::span<const double> y);

}  // namespace jpmbn

#include "jpmbn/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "jpmbn/distributions.hpp"

namespace jpmbn {

double kendall_to_pearson(double tau) {
    if (!(std::abs(tau) <= 1.0)) throw DistributionError("Kendall's tau must lie in [-1, 1]");
    if (tau == 1.0 || tau == -1.0) return tau;
    return std::sin(M_PI * tau / 2.0);
}

PearsonMatrix pearson_from_kendall(const Eigen::MatrixXd& tau, double floor) {
    if (tau.rows() != tau.cols()) throw DistributionError("Kendall matrix must be square");
    const auto n = tau.rows();
    PearsonMatrix out;
    out.rho = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (tau(i, i) != 1.0) throw DistributionError("Kendall matrix needs a unit diagonal");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (tau(i, j) != tau(j, i)) throw DistributionError("Kendall matrix must be symmetric");
            if (!(std::abs(tau(i, j)) < 1.0))
                throw DistributionError("off-diagonal Kendall entries must satisfy |tau| < 1");
            out.rho(i, j) = out.rho(j, i) = kendall_to_pearson(tau(i, j));
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.rho);
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (out.min_eigenvalue > floor) return out;

    Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd fixed = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd scale = fixed.diagonal().cwiseSqrt().cwiseInverse();
    out.rho = scale.asDiagonal() * fixed * scale.asDiagonal();
    out.rho = 0.5 * (out.rho + out.rho.transpose());
    out.rho.diagonal().setOnes();
    out.repaired = true;
    return out;
}

GaussianCopula::GaussianCopula(const Eigen::MatrixXd& rho) {
    if (rho.rows() > 16) throw DistributionError("copula dimension above 16 is not supported");
    Eigen::LLT<Eigen::MatrixXd> llt(rho);
    if (llt.info() != Eigen::Success) throw DistributionError("correlation matrix is not positive definite");
    lower_ = llt.matrixL();
}

void GaussianCopula::draw_uniforms(std::mt19937_64& rng, std::span<double> u) const {
    const auto n = lower_.rows();
    std::normal_distribution<double> normal;
    double z[16];
    for (Eigen::Index k = 0; k < n; ++k) z[k] = normal(rng);
    constexpr double kEdge = 1e-16;
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) s += lower_(i, k) * z[k];
        u[static_cast<std::size_t>(i)] = std::clamp(std_normal_cdf(s), kEdge, 1.0 - kEdge);
    }
}

namespace {

// Counts inversions in v while merge-sorting it.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                          std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

template <class Eq>
std::uint64_t tied_pairs(std::size_t n, Eq equal) {
    std::uint64_t ties = 0, run = 1;
    for (std::size_t k = 1; k < n; ++k) {
        if (equal(k - 1, k)) {
            ++run;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    return ties + run * (run - 1) / 2;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("kendall_tau needs at least two observations");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = x[idx[k]];
        ys[k] = y[idx[k]];
    }
    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tied_pairs(n, [&](auto a, auto b) { return xs[a] == xs[b]; });
    const std::uint64_t n3 =
        tied_pairs(n, [&](auto a, auto b) { return xs[a] == xs[b] && ys[a] == ys[b]; });
    std::vector<double> buf(n);
    const std::uint64_t swaps = merge_count(ys, buf, 0, n);
    const std::uint64_t n2 = tied_pairs(n, [&](auto a, auto b) { return ys[a] == ys[b]; });

    const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                       static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
    const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    if (!(den > 0.0)) throw std::invalid_argument("kendall_tau undefined for constant input");
    return num / den;
}

}  // namespace jpmbn

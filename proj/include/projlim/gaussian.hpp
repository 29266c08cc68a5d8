#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "projlim/cylinder.hpp"
#include "projlim/polynomial.hpp"

namespace projlim {

/// Periodic lattice covariance stored by displacement: value(i, j) depends only on
/// (site_i - site_j) mod sites_per_dim in each direction.
struct TranslationInvariantTable {
    int dimension = 1;
    std::size_t sites_per_dim = 1;
    std::vector<double> by_displacement; // indexed like sites, length sites_per_dim^dimension

    std::size_t sites() const { return by_displacement.size(); }
    double operator()(std::size_t site_i, std::size_t site_j) const;
};

/// Generator of covariance entries c(xi_i, xi_j) for a fixed complete system (xi_n).
class CovarianceKernel {
public:
    struct Identity {};
    struct Explicit {
        Eigen::MatrixXd matrix;
    };
    using Source = std::variant<Identity, Explicit, TranslationInvariantTable>;

    static constexpr Level unbounded = std::numeric_limits<Level>::max();

    static CovarianceKernel identity();
    /// Rejects non-square or non-symmetric input. Positive definiteness is checked
    /// lazily, per leading block, by build_marginal.
    static CovarianceKernel matrix(Eigen::MatrixXd entries);
    static CovarianceKernel lattice(TranslationInvariantTable table);

    /// 1-based indices.
    double entry(Level i, Level j) const;
    /// Largest level the kernel is defined on.
    Level max_level() const;
    /// Leading n x n block.
    Eigen::MatrixXd block(Level n) const;

    const Source& source() const { return source_; }
    std::string kind() const;

private:
    explicit CovarianceKernel(Source s) : source_(std::move(s)) {}
    Source source_;
};

/// Level-n zero-mean Gaussian law with its Cholesky factor, inverse and log-determinant.
class GaussianMarginal {
public:
    Level n() const { return static_cast<Level>(covariance_.rows()); }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    const Eigen::MatrixXd& cholesky() const { return cholesky_; }
    const Eigen::MatrixXd& inverse() const { return inverse_; }
    double log_det() const { return log_det_; }

    friend GaussianMarginal build_marginal(const Eigen::MatrixXd& covariance);

private:
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd cholesky_;
    Eigen::MatrixXd inverse_;
    double log_det_ = 0.0;
};

/// Cholesky without jitter. Throws NotPositiveDefinite (1-based pivot) when a
/// pivot falls to or below 1e-12 * ||C||.
GaussianMarginal build_marginal(const Eigen::MatrixXd& covariance);
GaussianMarginal build_marginal(const CovarianceKernel& kernel, Level n);

double density(const GaussianMarginal& marginal, std::span<const double> x);

inline constexpr std::size_t kSampleChunk = 8192;

/// Draws `count` rows chol * z, z from Philox4x32(seed, chunk) with chunks of
/// kSampleChunk rows; `visit(chunk, rows)` runs concurrently on distinct chunks.
void sample_chunks(const GaussianMarginal& marginal, std::size_t count, std::uint64_t seed,
                   const std::function<void(std::size_t, const Eigen::MatrixXd&)>& visit);

/// count x n matrix of samples; identical for identical seeds regardless of worker count.
Eigen::MatrixXd sample(const GaussianMarginal& marginal, std::size_t count, std::uint64_t seed);

inline constexpr std::uint32_t kWickDegreeLimit = 16;

/// E[prod x_i^{k_i}] under N(0, C). Variables beyond C's size are a DimensionMismatch;
/// total degree above 16 is a GuardExceeded.
///
/// Memoizes on sorted index multisets, so reusing one evaluator across the terms of
/// a polynomial shares sub-results.
class WickEvaluator {
public:
    explicit WickEvaluator(Eigen::MatrixXd covariance) : covariance_(std::move(covariance)) {}

    double operator()(const Monomial& exponents);
    double integrate(const Polynomial& p);

    const Eigen::MatrixXd& covariance() const { return covariance_; }

private:
    double moment(std::vector<std::uint16_t>& indices);

    Eigen::MatrixXd covariance_;
    std::map<std::vector<std::uint16_t>, double> memo_;
};

double wick_moment(const Monomial& exponents, const Eigen::MatrixXd& covariance);

/// E[f | x_1..x_n] for a polynomial f under N(0, C), where C covers at least
/// level(f) coordinates. Returns f itself when it is already level-n measurable.
Polynomial gaussian_conditional_expectation(const Polynomial& f, Level n,
                                            const Eigen::MatrixXd& covariance);
CylinderFunction gaussian_conditional_expectation(const CylinderFunction& f, Level n,
                                                  const CovarianceKernel& kernel);

std::complex<double> characteristic_value(const GaussianMarginal& marginal, std::span<const double> xi);

struct CharacteristicEstimate {
    std::complex<double> value;
    double stderr_real = 0.0;
    double stderr_imag = 0.0;
    std::size_t samples = 0;
};

/// Sample mean of exp(i <x, xi>).
CharacteristicEstimate characteristic_value_mc(const GaussianMarginal& marginal,
                                               std::span<const double> xi, std::size_t samples,
                                               std::uint64_t seed);

struct PositivityReport {
    double min_eigenvalue = 0.0;
    bool passed = false;
    Eigen::MatrixXd matrix;
};

/// Minimum eigenvalue of [chi(xi_j - xi_k)] for 2..12 vectors of a common length n,
/// with chi taken from build_marginal(kernel, n). passed = min_eigenvalue >= -tol.
PositivityReport positivity_check(const CovarianceKernel& kernel,
                                  const std::vector<std::vector<double>>& xis, double tol);

} // namespace projlim

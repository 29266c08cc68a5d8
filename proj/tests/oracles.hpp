#pragma once

// Test-only reference computations. Nothing here calls into the Wick or
// conditioning code paths of the library; these are the independent routes the
// library results are checked against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "projlim/polynomial.hpp"

namespace projlim::oracle {

/// Gauss-Hermite rule for the standard normal weight (Golub-Welsch).
/// Exact for polynomials of degree <= 2q - 1.
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline Rule gauss_hermite(int q) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(q, q);
    for (int k = 1; k < q; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    Rule r;
    for (int i = 0; i < q; ++i) {
        r.nodes.push_back(eig.eigenvalues()(i));
        const double v = eig.eigenvectors()(0, i);
        r.weights.push_back(v * v);
    }
    return r;
}

/// E[fn(mean + L z)] for z standard normal in `dim` dimensions by tensor quadrature.
inline double gaussian_quadrature(const std::function<double(const std::vector<double>&)>& fn,
                                  const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor, int q) {
    const auto dim = static_cast<int>(mean.size());
    const Rule rule = gauss_hermite(q);
    std::vector<int> idx(dim, 0);
    double total = 0.0;
    Eigen::VectorXd z(dim);
    std::vector<double> x(dim);
    while (true) {
        double w = 1.0;
        for (int d = 0; d < dim; ++d) {
            z(d) = rule.nodes[idx[d]];
            w *= rule.weights[idx[d]];
        }
        Eigen::VectorXd point = mean + factor * z;
        for (int d = 0; d < dim; ++d) x[d] = point(d);
        total += w * fn(x);
        int d = 0;
        while (d < dim && ++idx[d] == q) idx[d++] = 0;
        if (d == dim) break;
    }
    return total;
}

/// E[p] under N(0, C) by Gauss-Hermite quadrature after a Cholesky change of variables.
inline double gaussian_expectation(const Polynomial& p, const Eigen::MatrixXd& c) {
    const int q = static_cast<int>(p.degree()) / 2 + 1;
    Eigen::MatrixXd l = c.llt().matrixL();
    return gaussian_quadrature([&](const std::vector<double>& x) { return p(x); },
                               Eigen::VectorXd::Zero(c.rows()), l, q);
}

/// Isserlis as a sum over all k! permutations divided by 2^{k/2} (k/2)!.
inline double permutation_wick(std::vector<int> indices, const Eigen::MatrixXd& c) {
    const std::size_t k = indices.size();
    if (k % 2 != 0) return 0.0;
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double sum = 0.0;
    do {
        double prod = 1.0;
        for (std::size_t j = 0; j < k; j += 2) prod *= c(indices[perm[j]], indices[perm[j + 1]]);
        sum += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    double norm = std::pow(2.0, static_cast<double>(k / 2));
    for (std::size_t j = 2; j <= k / 2; ++j) norm *= static_cast<double>(j);
    return sum / norm;
}

/// Conditional expectation at a head point through the precision matrix P = C^-1:
/// tail | head ~ N(-P_tt^-1 P_th h, P_tt^-1), integrated by quadrature.
inline double conditional_expectation_at(const Polynomial& f, const Eigen::MatrixXd& c, int n,
                                         const std::vector<double>& head) {
    const int m = static_cast<int>(c.rows());
    const int t = m - n;
    const Eigen::MatrixXd precision = c.inverse();
    const Eigen::MatrixXd p_tt = precision.bottomRightCorner(t, t);
    const Eigen::MatrixXd p_th = precision.bottomLeftCorner(t, n);
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) h(i) = head[i];
    const Eigen::MatrixXd cov = p_tt.inverse();
    const Eigen::VectorXd mean = -cov * p_th * h;
    const Eigen::MatrixXd l = cov.llt().matrixL();
    const int q = static_cast<int>(f.degree()) / 2 + 1;
    return gaussian_quadrature(
        [&](const std::vector<double>& tail) {
            std::vector<double> x(head.begin(), head.end());
            x.insert(x.end(), tail.begin(), tail.end());
            return f(x);
        },
        mean, l, q);
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = g(rng);
    Eigen::MatrixXd c = b * b.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
    return 0.5 * (c + c.transpose());
}

/// Random polynomial in x_1..x_level with at most `terms` terms and total degree <= degree.
/// Always references x_level so the support level is exact.
inline Polynomial random_polynomial(int level, int degree, int terms, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<int> var(0, level - 1);
    std::uniform_int_distribution<int> deg(0, degree);
    Polynomial p;
    for (int t = 0; t < terms; ++t) {
        const int d = deg(rng);
        Monomial m;
        for (int k = 0; k < d; ++k) m = m * Monomial::variable(static_cast<std::uint32_t>(var(rng)));
        p.add_term(m, coeff(rng));
    }
    std::uniform_int_distribution<int> top(1, std::max(1, degree));
    p.add_term(Monomial::variable(static_cast<std::uint32_t>(level - 1), static_cast<std::uint32_t>(top(rng))), 0.75);
    return p;
}

} // namespace projlim::oracle

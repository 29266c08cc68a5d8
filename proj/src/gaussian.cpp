#include "projlim/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "projlim/error.hpp"
#include "projlim/parallel.hpp"
#include "projlim/random.hpp"

namespace projlim {

double TranslationInvariantTable::operator()(std::size_t site_i, std::size_t site_j) const {
    const std::size_t n = sites_per_dim;
    std::size_t index = 0;
    std::size_t stride = 1;
    for (int mu = 0; mu < dimension; ++mu) {
        std::size_t ci = site_i % n;
        std::size_t cj = site_j % n;
        site_i /= n;
        site_j /= n;
        index += ((ci + n - cj) % n) * stride;
        stride *= n;
    }
    return by_displacement[index];
}

CovarianceKernel CovarianceKernel::identity() { return CovarianceKernel(Identity{}); }

CovarianceKernel CovarianceKernel::matrix(Eigen::MatrixXd entries) {
    if (entries.rows() != entries.cols() || entries.rows() == 0)
        throw InvalidArgument("covariance matrix must be square and non-empty");
    if (!entries.allFinite()) throw InvalidArgument("covariance matrix has non-finite entries");
    const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
    if ((entries - entries.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("covariance matrix is not symmetric");
    return CovarianceKernel(Explicit{std::move(entries)});
}

CovarianceKernel CovarianceKernel::lattice(TranslationInvariantTable table) {
    if (table.by_displacement.empty()) throw InvalidArgument("empty lattice covariance table");
    return CovarianceKernel(std::move(table));
}

double CovarianceKernel::entry(Level i, Level j) const {
    if (i < 1 || j < 1 || i > max_level() || j > max_level())
        throw DimensionMismatch("kernel entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") outside 1.." + std::to_string(max_level()));
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Identity>) return i == j ? 1.0 : 0.0;
            else if constexpr (std::is_same_v<T, Explicit>) return s.matrix(i - 1, j - 1);
            else return s(i - 1, j - 1);
        },
        source_);
}

Level CovarianceKernel::max_level() const {
    return std::visit(
        [](const auto& s) -> Level {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Identity>) return unbounded;
            else if constexpr (std::is_same_v<T, Explicit>) return static_cast<Level>(s.matrix.rows());
            else return s.sites();
        },
        source_);
}

Eigen::MatrixXd CovarianceKernel::block(Level n) const {
    if (n < 1 || n > max_level())
        throw DimensionMismatch("kernel (" + kind() + ") is defined up to level " +
                                std::to_string(max_level()) + ", requested " + std::to_string(n));
    if (const auto* e = std::get_if<Explicit>(&source_)) return e->matrix.topLeftCorner(n, n);
    Eigen::MatrixXd c(n, n);
    for (Level i = 1; i <= n; ++i)
        for (Level j = 1; j <= n; ++j) c(i - 1, j - 1) = entry(i, j);
    return c;
}

std::string CovarianceKernel::kind() const {
    switch (source_.index()) {
    case 0: return "identity";
    case 1: return "matrix";
    default: return "lattice";
    }
}

GaussianMarginal build_marginal(const Eigen::MatrixXd& covariance) {
    const Eigen::Index n = covariance.rows();
    if (n == 0 || covariance.cols() != n) throw InvalidArgument("covariance must be square and non-empty");
    if (!covariance.allFinite()) throw InvalidArgument("covariance has non-finite entries");

    const double norm = covariance.cwiseAbs().rowwise().sum().maxCoeff();
    const double pivot_tol = 1e-12 * norm;
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, norm))
        throw InvalidArgument("covariance is not symmetric");

    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) {
        // Locate the failing pivot with a plain left-looking factorization.
        Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            double d = covariance(k, k) - l.row(k).head(k).squaredNorm();
            if (!(d > pivot_tol)) throw NotPositiveDefinite(static_cast<std::size_t>(k + 1), d);
            l(k, k) = std::sqrt(d);
            for (Eigen::Index i = k + 1; i < n; ++i)
                l(i, k) = (covariance(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / l(k, k);
        }
        throw NotPositiveDefinite(static_cast<std::size_t>(n), 0.0);
    }

    GaussianMarginal g;
    g.covariance_ = covariance;
    g.cholesky_ = llt.matrixL();
    for (Eigen::Index k = 0; k < n; ++k) {
        double d = g.cholesky_(k, k) * g.cholesky_(k, k);
        if (!(d > pivot_tol)) throw NotPositiveDefinite(static_cast<std::size_t>(k + 1), d);
        g.log_det_ += 2.0 * std::log(g.cholesky_(k, k));
    }
    g.inverse_ = llt.solve(Eigen::MatrixXd::Identity(n, n));

    const double recon = (g.cholesky_ * g.cholesky_.transpose() - covariance).norm();
    if (recon > 1e-10 * covariance.norm())
        throw Error("Cholesky reconstruction error " + std::to_string(recon));
    const double inv_err =
        (g.inverse_ * covariance - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (inv_err > 1e-8) throw Error("covariance too ill-conditioned: |C^-1 C - I| = " + std::to_string(inv_err));
    return g;
}

GaussianMarginal build_marginal(const CovarianceKernel& kernel, Level n) {
    if (n < 1) throw InvalidArgument("level must be >= 1");
    return build_marginal(kernel.block(n));
}

double density(const GaussianMarginal& marginal, std::span<const double> x) {
    const Level n = marginal.n();
    if (x.size() != n)
        throw DimensionMismatch("density: point has length " + std::to_string(x.size()) +
                                ", marginal has level " + std::to_string(n));
    Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(n));
    // Solve with the factor rather than the stored inverse for accuracy.
    Eigen::VectorXd w = marginal.cholesky().triangularView<Eigen::Lower>().solve(v);
    const double quad = w.squaredNorm();
    return std::exp(-0.5 * quad - 0.5 * marginal.log_det() -
                    0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
}

void sample_chunks(const GaussianMarginal& marginal, std::size_t count, std::uint64_t seed,
                   const std::function<void(std::size_t, const Eigen::MatrixXd&)>& visit) {
    const Eigen::Index n = static_cast<Eigen::Index>(marginal.n());
    const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
    const Eigen::MatrixXd lt = marginal.cholesky().transpose();
    parallel_for(chunks, [&](std::size_t chunk) {
        const std::size_t begin = chunk * kSampleChunk;
        const auto rows = static_cast<Eigen::Index>(std::min(kSampleChunk, count - begin));
        Philox4x32 gen(seed, chunk);
        Eigen::MatrixXd z(rows, n);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < n; ++c) z(r, c) = gen.normal();
        Eigen::MatrixXd x = z * lt.triangularView<Eigen::Upper>();
        visit(chunk, x);
    });
}

Eigen::MatrixXd sample(const GaussianMarginal& marginal, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("sample count must be >= 1");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(marginal.n()));
    sample_chunks(marginal, count, seed, [&](std::size_t chunk, const Eigen::MatrixXd& rows) {
        out.middleRows(static_cast<Eigen::Index>(chunk * kSampleChunk), rows.rows()) = rows;
    });
    return out;
}

double WickEvaluator::operator()(const Monomial& exponents) {
    const std::uint32_t degree = exponents.degree();
    if (degree > kWickDegreeLimit)
        throw GuardExceeded("Wick moment of degree " + std::to_string(degree) + " exceeds limit " +
                            std::to_string(kWickDegreeLimit));
    if (exponents.support_level() > static_cast<Level>(covariance_.rows()))
        throw DimensionMismatch("monomial references x" + std::to_string(exponents.support_level()) +
                                " but covariance has size " + std::to_string(covariance_.rows()));
    if (degree % 2 != 0) return 0.0;
    std::vector<std::uint16_t> indices;
    indices.reserve(degree);
    for (const auto& f : exponents.factors())
        indices.insert(indices.end(), f.power, static_cast<std::uint16_t>(f.var));
    return moment(indices);
}

double WickEvaluator::moment(std::vector<std::uint16_t>& indices) {
    if (indices.empty()) return 1.0;
    if (indices.size() % 2 != 0) return 0.0;
    if (indices.size() == 2) return covariance_(indices[0], indices[1]);
    if (auto it = memo_.find(indices); it != memo_.end()) return it->second;

    // Pair the first index with each distinct partner; multiplicity counts the
    // identical matchings collapsed into one recursive call.
    const std::uint16_t head = indices[0];
    double sum = 0.0;
    std::size_t pos = 1;
    while (pos < indices.size()) {
        const std::uint16_t partner = indices[pos];
        std::size_t end = pos;
        while (end < indices.size() && indices[end] == partner) ++end;
        const double mult = static_cast<double>(end - pos);
        const double c = covariance_(head, partner);
        if (c != 0.0) {
            std::vector<std::uint16_t> rest;
            rest.reserve(indices.size() - 2);
            rest.insert(rest.end(), indices.begin() + 1, indices.begin() + static_cast<std::ptrdiff_t>(pos));
            rest.insert(rest.end(), indices.begin() + static_cast<std::ptrdiff_t>(pos) + 1, indices.end());
            sum += mult * c * moment(rest);
        }
        pos = end;
    }
    memo_.emplace(indices, sum);
    return sum;
}

double WickEvaluator::integrate(const Polynomial& p) {
    double sum = 0.0;
    for (const auto& [m, c] : p.terms()) sum += c * (*this)(m);
    return sum;
}

double wick_moment(const Monomial& exponents, const Eigen::MatrixXd& covariance) {
    WickEvaluator eval(covariance);
    return eval(exponents);
}

Polynomial gaussian_conditional_expectation(const Polynomial& f, Level n, const Eigen::MatrixXd& covariance) {
    if (n < 1) throw InvalidArgument("conditioning level must be >= 1");
    const Level s = f.support_level();
    if (s > static_cast<Level>(covariance.rows()))
        throw DimensionMismatch("polynomial of level " + std::to_string(s) + " but covariance of size " +
                                std::to_string(covariance.rows()));
    if (s <= n) return f;

    const auto head = static_cast<Eigen::Index>(n);
    const auto tail = static_cast<Eigen::Index>(s - n);
    const Eigen::MatrixXd c_hh = covariance.topLeftCorner(head, head);
    const Eigen::MatrixXd c_ht = covariance.block(0, head, head, tail);
    const Eigen::MatrixXd c_tt = covariance.block(head, head, tail, tail);

    Eigen::LLT<Eigen::MatrixXd> llt(c_hh);
    if (llt.info() != Eigen::Success) build_marginal(c_hh); // throws with the pivot
    // Conditional mean of the tail is gain * head; conditional covariance is the Schur complement.
    const Eigen::MatrixXd gain = llt.solve(c_ht).transpose();
    const Eigen::MatrixXd schur = c_tt - gain * c_ht;

    // Tail variable t is replaced by gain.row(t) . head + z_t, with z_t reusing index t.
    std::vector<std::vector<Polynomial>> powers(static_cast<std::size_t>(tail));
    auto tail_power = [&](std::uint32_t var, std::uint32_t k) -> const Polynomial& {
        auto& cache = powers[var - n];
        if (cache.empty()) {
            Polynomial lin = Polynomial::variable(var);
            for (Eigen::Index h = 0; h < head; ++h)
                lin.add_term(Monomial::variable(static_cast<std::uint32_t>(h)), gain(var - head, h));
            cache.push_back(Polynomial::constant(1.0));
            cache.push_back(std::move(lin));
        }
        while (cache.size() <= k) cache.push_back(cache.back() * cache[1]);
        return cache[k];
    };

    WickEvaluator noise(schur);
    Polynomial result;
    for (const auto& [mono, coeff] : f.terms()) {
        Polynomial expanded;
        std::vector<Monomial::Factor> head_factors;
        for (const auto& fac : mono.factors())
            if (fac.var < n) head_factors.push_back(fac);
        Monomial head_mono;
        for (const auto& fac : head_factors) head_mono = head_mono * Monomial::variable(fac.var, fac.power);
        expanded.add_term(head_mono, coeff);
        for (const auto& fac : mono.factors())
            if (fac.var >= n) expanded = expanded * tail_power(fac.var, fac.power);

        for (const auto& [m, c] : expanded.terms()) {
            Monomial keep;
            Monomial noise_part;
            for (const auto& fac : m.factors()) {
                if (fac.var < n) keep = keep * Monomial::variable(fac.var, fac.power);
                else noise_part = noise_part * Monomial::variable(fac.var - static_cast<std::uint32_t>(n), fac.power);
            }
            const double w = noise(noise_part);
            if (w != 0.0) result.add_term(keep, c * w);
        }
    }
    return result;
}

CylinderFunction gaussian_conditional_expectation(const CylinderFunction& f, Level n,
                                                  const CovarianceKernel& kernel) {
    const Polynomial& body = f.polynomial();
    if (n < 1) throw InvalidArgument("conditioning level must be >= 1");
    if (n > f.level())
        throw InvalidArgument("conditioning level " + std::to_string(n) + " above function level " +
                              std::to_string(f.level()));
    const Level s = std::max<Level>(1, body.support_level());
    if (s <= n) return pullback(CylinderFunction(body), n);
    const GaussianMarginal marginal = build_marginal(kernel, s);
    return pullback(CylinderFunction(gaussian_conditional_expectation(body, n, marginal.covariance())), n);
}

std::complex<double> characteristic_value(const GaussianMarginal& marginal, std::span<const double> xi) {
    if (xi.size() != marginal.n())
        throw DimensionMismatch("characteristic value: xi has length " + std::to_string(xi.size()) +
                                ", marginal has level " + std::to_string(marginal.n()));
    Eigen::Map<const Eigen::VectorXd> v(xi.data(), static_cast<Eigen::Index>(xi.size()));
    return {std::exp(-0.5 * v.dot(marginal.covariance() * v)), 0.0};
}

CharacteristicEstimate characteristic_value_mc(const GaussianMarginal& marginal, std::span<const double> xi,
                                               std::size_t samples, std::uint64_t seed) {
    if (xi.size() != marginal.n())
        throw DimensionMismatch("characteristic value: xi has length " + std::to_string(xi.size()) +
                                ", marginal has level " + std::to_string(marginal.n()));
    if (samples < 2) throw InvalidArgument("need at least 2 samples");
    Eigen::Map<const Eigen::VectorXd> v(xi.data(), static_cast<Eigen::Index>(xi.size()));
    const std::size_t chunks = (samples + kSampleChunk - 1) / kSampleChunk;
    std::vector<std::array<double, 4>> partial(chunks);
    sample_chunks(marginal, samples, seed, [&](std::size_t chunk, const Eigen::MatrixXd& rows) {
        Eigen::VectorXd phase = rows * v;
        std::array<double, 4> acc{};
        for (Eigen::Index r = 0; r < phase.size(); ++r) {
            double c = std::cos(phase[r]);
            double s = std::sin(phase[r]);
            acc[0] += c;
            acc[1] += c * c;
            acc[2] += s;
            acc[3] += s * s;
        }
        partial[chunk] = acc;
    });
    std::array<double, 4> total{};
    for (const auto& p : partial)
        for (int k = 0; k < 4; ++k) total[k] += p[k];
    const double count = static_cast<double>(samples);
    const double mean_c = total[0] / count;
    const double mean_s = total[2] / count;
    const double var_c = std::max(0.0, (total[1] - count * mean_c * mean_c) / (count - 1));
    const double var_s = std::max(0.0, (total[3] - count * mean_s * mean_s) / (count - 1));
    return {{mean_c, mean_s}, std::sqrt(var_c / count), std::sqrt(var_s / count), samples};
}

PositivityReport positivity_check(const CovarianceKernel& kernel, const std::vector<std::vector<double>>& xis,
                                  double tol) {
    if (xis.size() < 2 || xis.size() > 12)
        throw InvalidArgument("positivity check takes between 2 and 12 vectors, got " + std::to_string(xis.size()));
    const std::size_t n = xis.front().size();
    for (const auto& xi : xis)
        if (xi.size() != n) throw DimensionMismatch("positivity check: vectors of differing lengths");
    if (n == 0) throw DimensionMismatch("positivity check: empty vectors");

    const GaussianMarginal marginal = build_marginal(kernel, n);
    const auto k = static_cast<Eigen::Index>(xis.size());
    PositivityReport report;
    report.matrix.resize(k, k);
    std::vector<double> diff(n);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            for (std::size_t i = 0; i < n; ++i) diff[i] = xis[a][i] - xis[b][i];
            report.matrix(a, b) = characteristic_value(marginal, diff).real();
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.matrix, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = eig.eigenvalues().minCoeff();
    report.passed = report.min_eigenvalue >= -tol;
    return report;
}

} // namespace projlim

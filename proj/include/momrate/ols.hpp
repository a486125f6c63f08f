#pragma once

#include <momrate/designs.hpp>
#include <momrate/error_laws.hpp>
#include <momrate/moments.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace momrate {

/// The studied functional xi = sqrt(n) alpha'(betahat - beta) for one design,
/// direction alpha != 0, and error law. beta_true is irrelevant to xi's law
/// (xi depends on the errors alone) but is carried for simulation realism.
struct XiSpec {
    Design design;
    Eigen::VectorXd alpha;
    ErrorLaw law;
    Eigen::VectorXd beta_true;

    XiSpec(Design d, Eigen::VectorXd a, ErrorLaw l)
        : design(std::move(d)), alpha(std::move(a)), law(std::move(l)),
          beta_true(Eigen::VectorXd::Zero(design.p)) {
        if (alpha.size() != design.p) throw DomainError("XiSpec: alpha dimension mismatch");
        if (alpha.norm() == 0.0) throw DomainError("XiSpec: alpha must be nonzero");
    }
};

/// Dense covariate matrix; guarded so a sparse-by-construction design is not
/// accidentally expanded at adversarial sizes.
inline Eigen::MatrixXd materialize(const Design& d) {
    if (d.n * static_cast<std::uint64_t>(d.p) > (std::uint64_t(1) << 27))
        throw DomainError("materialize: design too large to expand densely");
    Eigen::MatrixXd X(d.n, d.p);
    for (std::uint64_t i = 0; i < d.n; ++i) X.row(i) = d.row(i).transpose();
    return X;
}

/**
 * @brief Least squares via SPD factorization of XtX.
 *
 * Refuses condition estimates beyond 1e12 (past that, double precision
 * cannot support the moment identities downstream) and verifies residual
 * orthogonality X'(y - X betahat) = 0 to 1e-8 |X'y|.
 */
inline Eigen::VectorXd ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw DomainError("ols_fit: dimension mismatch");
    Eigen::MatrixXd g = X.transpose() * X;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12)
        throw NumericError("ols_fit: XtX condition estimate exceeds 1e12");

    Eigen::VectorXd xty = X.transpose() * y;
    Eigen::VectorXd beta = Eigen::LLT<Eigen::MatrixXd>(g).solve(xty);

    double resid = (xty - g * beta).norm();
    if (resid > 1e-8 * std::max(1e-300, xty.norm()))
        throw NumericError("ols_fit: residual orthogonality check failed");
    return beta;
}

/**
 * @brief Weight vector b with xi = sum_i b_i e_i, b_i = sqrt(n) alpha'(XtX)^{-1} x_i.
 *
 * Asserts the algebraic identity sum b_i^2 = alpha'(n (XtX)^{-1}) alpha to
 * 1e-10 relative, and the trace bound sum b_i^2 <= p alpha'(n (XtX)^{-1}) alpha.
 */
inline Eigen::VectorXd xi_weights(const XiSpec& spec) {
    const Design& d = spec.design;
    Eigen::MatrixXd g = gram(d);
    Eigen::LDLT<Eigen::MatrixXd> fact(g);
    if (fact.info() != Eigen::Success || !fact.isPositive())
        throw NumericError("xi_weights: singular XtX");

    double sqrtn = std::sqrt(static_cast<double>(d.n));
    Eigen::VectorXd w = fact.solve(spec.alpha);

    Eigen::VectorXd b(d.n);
    long double ss = 0.0L;
    for (std::uint64_t i = 0; i < d.n; ++i) {
        b(i) = sqrtn * d.row(i).dot(w);
        ss += static_cast<long double>(b(i)) * b(i);
    }

    double quad = static_cast<double>(d.n) * spec.alpha.dot(w);
    double sum_sq = static_cast<double>(ss);
    if (std::abs(sum_sq - quad) > 1e-10 * std::abs(quad))
        throw NumericError("xi_weights: sum b_i^2 identity violated");
    if (sum_sq > static_cast<double>(d.p) * quad * (1.0 + 1e-10))
        throw NumericError("xi_weights: trace bound violated");
    return b;
}

/// Power sums sum_i b_i^q for q = 0..r, streamed row-wise (spike-wise for
/// the sparse family) without holding b in memory.
inline std::vector<double> xi_weight_power_sums(const XiSpec& spec, int r) {
    const Design& d = spec.design;
    Eigen::LDLT<Eigen::MatrixXd> fact(gram(d));
    if (fact.info() != Eigen::Success || !fact.isPositive())
        throw NumericError("xi_weight_power_sums: singular XtX");
    Eigen::VectorXd w = fact.solve(spec.alpha);
    double sqrtn = std::sqrt(static_cast<double>(d.n));

    std::vector<long double> acc(std::size_t(r) + 1, 0.0L);
    auto add = [&](double bi) {
        acc[0] += 1.0L;
        long double pw = 1.0L;
        for (int q = 1; q <= r; ++q) {
            pw *= bi;
            acc[q] += pw;
        }
    };
    if (d.family == DesignFamily::prop2) {
        std::uint64_t nonzero = 0;
        for (auto& [i, x] : d.sparse_support()) {
            add(sqrtn * x * w(0));
            ++nonzero;
        }
        acc[0] += static_cast<long double>(d.n - nonzero);  // zero rows enter p_0 only
    } else {
        for (std::uint64_t i = 0; i < d.n; ++i) add(sqrtn * d.row(i).dot(w));
    }
    std::vector<double> out(acc.size());
    for (std::size_t q = 0; q < acc.size(); ++q) out[q] = static_cast<double>(acc[q]);
    return out;
}

/**
 * @brief E(xi^r) for a deterministic design, via the weighted-moment expansion
 * over the weight power sums. For r = 2 and 3 the closed forms sigma^2 sum b^2
 * and mu_3 sum b^3 are cross-checked to 1e-10 relative.
 */
inline double xi_exact_moment(const XiSpec& spec, int r) {
    if (r < 0) throw DomainError("xi_exact_moment: negative order");
    auto ps = xi_weight_power_sums(spec, r);
    double value = weighted_moment_psums<double>(r, ps, spec.law.profile());

    if (r == 2 || r == 3) {
        double closed = r == 2 ? to_double(spec.law.profile().central(2)) * ps[2]
                               : to_double(spec.law.profile().central(3)) * ps[3];
        double scale = std::max({std::abs(value), std::abs(closed), 1e-300});
        if (std::abs(value - closed) > 1e-10 * scale)
            throw NumericError("xi_exact_moment: closed form disagrees with expansion");
    }
    return value;
}

/// iid draws from the law into out; one stream value per entry.
inline void sample_errors(const ErrorLaw& law, std::span<double> out, RngStream& stream) {
    for (double& v : out) v = law.sample(stream);
}

}  // namespace momrate

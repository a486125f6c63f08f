#pragma once

#include <momrate/exact.hpp>
#include <momrate/rng.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace momrate {

enum class DesignFamily { canonical, convergent, prop1, prop2, iid_random, explicit_rows };

enum class ColumnLaw { normal, uniform, rademacher };

/// Growth rule for the escaping-weight design: alpha_n = n^s, log(n+1), or a
/// user table. Must increase to infinity with n/alpha_n also increasing.
struct AlphaRule {
    enum class Kind { power, logarithmic, table };
    Kind kind = Kind::power;
    double s = 0.5;
    std::vector<double> table;  // table[i-1] = alpha_i

    double operator()(std::uint64_t n) const {
        switch (kind) {
            case Kind::power:
                return std::pow(static_cast<double>(n), s);
            case Kind::logarithmic:
                return std::log(static_cast<double>(n) + 1.0);
            case Kind::table:
                if (n == 0 || n > table.size())
                    throw DomainError("AlphaRule: table does not cover n");
                return table[n - 1];
        }
        throw DomainError("AlphaRule: bad kind");
    }

    void validate(std::uint64_t n_max) const {
        if (kind == Kind::power && !(s > 0.0 && s < 1.0))
            throw DomainError("AlphaRule: power exponent must lie in (0,1)");
        if (kind == Kind::table) {
            if (table.size() < n_max) throw DomainError("AlphaRule: table does not cover n");
            for (std::uint64_t i = 2; i <= n_max; ++i) {
                double a0 = table[i - 2], a1 = table[i - 1];
                if (!(a1 > a0))
                    throw DomainError("AlphaRule: alpha_n must be strictly increasing");
                if (static_cast<double>(i) / a1 < static_cast<double>(i - 1) / a0)
                    throw DomainError("AlphaRule: n/alpha_n must be nondecreasing");
            }
        }
    }
};

/**
 * @brief Deterministic covariate-matrix generator.
 *
 * A design is a recipe (family, params, n, seed), never a stored matrix,
 * except for the seeded random family whose rows are materialized once at
 * construction so that rank retries stay deterministic. Row access is O(1)
 * for every deterministic family.
 */
class Design {
public:
    DesignFamily family = DesignFamily::canonical;
    std::uint64_t n = 0;
    int p = 1;
    std::uint64_t seed = 0;

    // convergent: x_i = c + a / i^q
    double c = 0.0, a = 0.0, q = 1.0;
    // prop1
    AlphaRule alpha;
    // prop2: x_i = k^{b/2} at i = floor(k^{b+1}), b = (1-2a)/a
    double a_sparse = 0.0, b_sparse = 0.0;
    // iid_random
    ColumnLaw column_law = ColumnLaw::normal;
    bool intercept = false;
    int rank_retries = 0;

    /// Covariate row x_i, 0-based index.
    Eigen::VectorXd row(std::uint64_t i) const {
        if (i >= n) throw DomainError("Design::row: index out of range");
        Eigen::VectorXd x(p);
        switch (family) {
            case DesignFamily::canonical:
                x(0) = 1.0;
                break;
            case DesignFamily::convergent: {
                double idx = static_cast<double>(i + 1);
                x(0) = c + (a == 0.0 ? 0.0 : a / std::pow(idx, q));
                break;
            }
            case DesignFamily::prop1:
                x(0) = std::sqrt(1.0 + beta(i + 1));
                break;
            case DesignFamily::prop2:
                x(0) = sparse_value(i + 1);
                break;
            case DesignFamily::iid_random:
            case DesignFamily::explicit_rows:
                for (int j = 0; j < p; ++j) x(j) = (*rows_)[i * p + j];
                break;
        }
        return x;
    }

    /// beta_i of the escaping-weight construction (1-based i);
    /// beta_1 = alpha_1^{-1/2}, beta_i = i alpha_i^{-1/2} - (i-1) alpha_{i-1}^{-1/2}.
    double beta(std::uint64_t i) const {
        if (family != DesignFamily::prop1) throw DomainError("Design::beta: not a prop1 design");
        double cur = static_cast<double>(i) / std::sqrt(alpha(i));
        double prev = i == 1 ? 0.0 : static_cast<double>(i - 1) / std::sqrt(alpha(i - 1));
        double b = cur - prev;
        if (b < -1e-12) throw DomainError("Design::beta: negative beta_i, alpha rule not admissible");
        return std::max(b, 0.0);
    }

    /// Spike positions of the sparse family: (i, x_i) pairs with x_i != 0,
    /// i 1-based, in increasing i. Later k wins when two floor indices collide.
    std::vector<std::pair<std::uint64_t, double>> sparse_support() const {
        if (family != DesignFamily::prop2)
            throw DomainError("Design::sparse_support: not a prop2 design");
        std::vector<std::pair<std::uint64_t, double>> out;
        for (std::uint64_t k = 1;; ++k) {
            auto i = static_cast<std::uint64_t>(
                std::floor(std::pow(static_cast<long double>(k), b_sparse + 1.0L)));
            if (i > n) break;
            double x = std::pow(static_cast<double>(k), b_sparse / 2.0);
            if (!out.empty() && out.back().first == i)
                out.back().second = x;
            else
                out.emplace_back(i, x);
        }
        return out;
    }

    /// Power sum over rows for single-column designs: sum_i x_i^q.
    double column_power_sum(int power) const {
        if (p != 1) throw DomainError("Design::column_power_sum: p must be 1");
        if (family == DesignFamily::prop2) {
            long double s = 0.0L;
            for (auto& [i, x] : sparse_support()) s += std::pow(static_cast<long double>(x), power);
            return static_cast<double>(s);
        }
        long double s = 0.0L;
        for (std::uint64_t i = 0; i < n; ++i)
            s += std::pow(static_cast<long double>(row(i)(0)), power);
        return static_cast<double>(s);
    }

    std::shared_ptr<const std::vector<double>> rows_;  // iid/explicit storage

private:
    double sparse_value(std::uint64_t i) const {
        // invert i ~ k^{b+1}; check the floor at the nearest candidates,
        // largest k first so a (theoretical) collision resolves like
        // sparse_support does
        double kd = std::pow(static_cast<double>(i), 1.0 / (b_sparse + 1.0));
        for (std::int64_t k = static_cast<std::int64_t>(kd) + 1;
             k >= std::max<std::int64_t>(1, static_cast<std::int64_t>(kd) - 1); --k) {
            auto pos = static_cast<std::uint64_t>(
                std::floor(std::pow(static_cast<long double>(k), b_sparse + 1.0L)));
            if (pos == i) return std::pow(static_cast<double>(k), b_sparse / 2.0);
        }
        return 0.0;
    }
};

/// Gram matrix XtX, accumulated row-wise in long double. The sparse family
/// sums over its spike support instead of all n rows.
inline Eigen::MatrixXd gram(const Design& d) {
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> g(d.p, d.p);
    g.setZero();
    if (d.family == DesignFamily::prop2) {
        long double s = 0.0L;
        for (auto& [i, x] : d.sparse_support()) s += static_cast<long double>(x) * x;
        g(0, 0) = s;
    } else {
        for (std::uint64_t i = 0; i < d.n; ++i) {
            Eigen::VectorXd x = d.row(i);
            for (int r = 0; r < d.p; ++r)
                for (int c = 0; c <= r; ++c)
                    g(r, c) += static_cast<long double>(x(r)) * x(c);
        }
        for (int r = 0; r < d.p; ++r)
            for (int c = r + 1; c < d.p; ++c) g(r, c) = g(c, r);
    }
    return g.cast<double>();
}

inline Design canonical_design(std::uint64_t n) {
    if (n < 2) throw DomainError("canonical_design: n must be >= 2");
    Design d;
    d.family = DesignFamily::canonical;
    d.n = n;
    d.p = 1;
    return d;
}

/// Single-column design x_i = c + a / i^q with limit c != 0.
inline Design convergent_design(std::uint64_t n, double c, double a = 0.0, double q = 1.0) {
    if (n < 2) throw DomainError("convergent_design: n must be >= 2");
    if (c == 0.0) throw DomainError("convergent_design: limit c must be nonzero");
    if (a != 0.0 && !(q > 0.0)) throw DomainError("convergent_design: q must be positive");
    Design d;
    d.family = DesignFamily::convergent;
    d.n = n;
    d.p = 1;
    d.c = c;
    d.a = a;
    d.q = q;
    return d;
}

/// Escaping-weight design x_i = sqrt(1 + beta_i); satisfies the telescoping
/// identity XtX = n (1 + alpha_n^{-1/2}), asserted at construction.
inline Design prop1_design(std::uint64_t n, const AlphaRule& rule) {
    if (n < 2) throw DomainError("prop1_design: n must be >= 2");
    rule.validate(n);
    Design d;
    d.family = DesignFamily::prop1;
    d.n = n;
    d.p = 1;
    d.alpha = rule;
    if (n <= (std::uint64_t(1) << 21)) {
        double xtx = gram(d)(0, 0);
        double closed = static_cast<double>(n) * (1.0 + 1.0 / std::sqrt(rule(n)));
        if (std::abs(xtx - closed) > 1e-10 * std::abs(closed))
            throw NumericError("prop1_design: telescoping identity violated");
    }
    return d;
}

/// Sparse spike design: x_i = k^{b/2} at i = floor(k^{b+1}), b = (1-2a)/a.
inline Design prop2_design(std::uint64_t n, double a) {
    if (!(a > 0.0 && a < 0.5)) throw DomainError("prop2_design: a must lie in (0, 1/2)");
    if (n < 2) throw DomainError("prop2_design: n must be >= 2");
    Design d;
    d.family = DesignFamily::prop2;
    d.n = n;
    d.p = 1;
    d.a_sparse = a;
    d.b_sparse = (1.0 - 2.0 * a) / a;
    // integral sandwich on XtX = sum_{k<=K} k^b. The spike loop admits k while
    // floor(k^{b+1}) <= n, which reaches one past floor(n^{1/(b+1)}) whenever
    // k^{b+1} lands in (n, n+1), so K follows the same admission rule.
    double xtx = gram(d)(0, 0);
    double K = std::floor(std::pow(static_cast<double>(n), 1.0 / (d.b_sparse + 1.0)) + 1e-9);
    if (std::floor(std::pow(static_cast<long double>(K + 1.0), d.b_sparse + 1.0L)) <=
        static_cast<long double>(n))
        K += 1.0;
    double lo = std::pow(K, d.b_sparse + 1.0) / (d.b_sparse + 1.0);
    double hi = std::pow(K + 1.0, d.b_sparse + 1.0) / (d.b_sparse + 1.0);
    if (!(xtx >= lo * (1.0 - 1e-12) && xtx <= hi * (1.0 + 1e-12)))
        throw NumericError("prop2_design: integral sandwich violated");
    return d;
}

inline Design explicit_design(std::uint64_t n, int p, std::vector<double> row_major) {
    if (p < 1) throw DomainError("explicit_design: p must be >= 1");
    if (row_major.size() != n * static_cast<std::uint64_t>(p))
        throw DomainError("explicit_design: value count must be n*p");
    Design d;
    d.family = DesignFamily::explicit_rows;
    d.n = n;
    d.p = p;
    d.rows_ = std::make_shared<const std::vector<double>>(std::move(row_major));
    return d;
}

/**
 * @brief Seeded iid covariate matrix, optionally with an intercept column.
 *
 * Row i is drawn from its own counter stream (seed, retry salt, i), so the
 * matrix is reproducible and row access never depends on draw order. Rank is
 * checked by pivoted QR; a deficient draw is retried on a fresh salt at most
 * 3 times.
 */
inline Design iid_random_design(std::uint64_t n, int p, ColumnLaw law, std::uint64_t seed,
                                bool intercept = false) {
    if (p < 1) throw DomainError("iid_random_design: p must be >= 1");
    if (n <= static_cast<std::uint64_t>(p))
        throw DomainError("iid_random_design: n must exceed p");
    Design d;
    d.family = DesignFamily::iid_random;
    d.n = n;
    d.p = p;
    d.seed = seed;
    d.column_law = law;
    d.intercept = intercept;

    for (int retry = 0; retry <= 3; ++retry) {
        auto rows = std::make_shared<std::vector<double>>(n * static_cast<std::uint64_t>(p));
        std::uint64_t salt = seed + (static_cast<std::uint64_t>(retry) << 48);
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream stream(salt, i);
            for (int j = 0; j < p; ++j) {
                double v;
                if (intercept && j == 0) {
                    v = 1.0;
                } else {
                    double u = stream.next_u01();
                    switch (law) {
                        case ColumnLaw::normal: v = inverse_normal_cdf(u); break;
                        case ColumnLaw::uniform: v = 2.0 * u - 1.0; break;
                        case ColumnLaw::rademacher: v = u < 0.5 ? -1.0 : 1.0; break;
                        default: throw DomainError("iid_random_design: bad column law");
                    }
                }
                (*rows)[i * p + j] = v;
            }
        }
        d.rows_ = rows;
        d.rank_retries = retry;

        Eigen::MatrixXd g = gram(d);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g);
        qr.setThreshold(1e-10);
        if (qr.rank() == p) return d;
    }
    throw NumericError("iid_random_design: rank-deficient after 3 retries");
}

/// Condition (eq.V) and Noether-condition diagnostics, computed in two
/// row-wise passes; the hat matrix is never materialized.
struct DesignDiagnostics {
    Eigen::MatrixXd gram_over_n;
    double noether_max = 0.0;
    double hat_trace = 0.0;
};

inline DesignDiagnostics diagnostics(const Design& d) {
    Eigen::MatrixXd g = gram(d);
    Eigen::LDLT<Eigen::MatrixXd> fact(g);
    if (fact.info() != Eigen::Success || !fact.isPositive())
        throw NumericError("diagnostics: XtX is singular");

    DesignDiagnostics out;
    out.gram_over_n = g / static_cast<double>(d.n);

    long double trace = 0.0L;
    double hmax = 0.0;
    if (d.family == DesignFamily::prop2) {
        // zero rows have zero leverage; visit the spikes only
        for (auto& [i, x] : d.sparse_support()) {
            double h = x * x * fact.solve(Eigen::VectorXd::Constant(1, 1.0))(0);
            trace += h;
            hmax = std::max(hmax, h);
        }
    } else {
        for (std::uint64_t i = 0; i < d.n; ++i) {
            Eigen::VectorXd x = d.row(i);
            double h = x.dot(fact.solve(x));
            trace += h;
            hmax = std::max(hmax, h);
        }
    }
    out.noether_max = hmax;
    out.hat_trace = static_cast<double>(trace);
    return out;
}

}  // namespace momrate

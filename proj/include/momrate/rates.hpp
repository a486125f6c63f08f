#pragma once

#include <momrate/moments.hpp>
#include <momrate/monte_carlo.hpp>
#include <momrate/ols.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace momrate {

enum class RateSource { exact, mc };

struct RateRow {
    std::uint64_t n = 0;
    double delta = 0.0;
    std::optional<double> scaled;
    std::optional<double> std_error;          // mc source only
    std::optional<SqrtRat> delta_exact;       // exact source, even orders
    std::optional<SqrtRat> scaled_exact;      // exact source, when n^s delta is exact
};

struct RateTable {
    int r = 0;
    RateSource source = RateSource::exact;
    Rat scaling_exponent = 0;  // s in n^s delta
    bool identically_zero = false;
    std::vector<RateRow> rows;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::uint64_t n_min = 0, n_max = 0;
    bool used_abs = false;  // deltas changed sign; fit ran on |delta|
};

/// Default scaling for the two convergence regimes: n^1 for even orders,
/// n^{1/2} for odd.
inline Rat default_scaling(int r) { return r % 2 == 0 ? Rat(1) : Rat(1, 2); }

/**
 * @brief Exact delta table Delta_n = E(Z_n^r) - E(N(0,1)^r) over an n-grid.
 *
 * Even orders carry fully exact deltas; odd orders carry the exact
 * sqrt(n)-scaled value (the raw delta keeps a half power of n). A table whose
 * deltas vanish identically (normal profile, even r) is flagged and excluded
 * from slope fitting.
 */
inline RateTable delta_sequence(int r, const MomentProfile& profile,
                                std::span<const std::uint64_t> n_grid) {
    if (n_grid.empty()) throw DomainError("delta_sequence: empty n-grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw DomainError("delta_sequence: n-grid must be strictly increasing");

    RateTable t;
    t.r = r;
    t.source = RateSource::exact;
    t.scaling_exponent = default_scaling(r);
    bool all_zero = true;
    SqrtRat gm(Rat(gaussian_moment(r)));

    for (std::uint64_t n : n_grid) {
        HalfPowerMoment z = moment_Z(r, n, profile);
        RateRow row;
        row.n = n;
        if (r % 2 == 0) {
            SqrtRat d = z.exact() - gm;
            row.delta_exact = d;
            row.delta = d.value();
            row.scaled_exact = Rat(n) * d;
            row.scaled = row.scaled_exact->value();
            if (d != SqrtRat(0)) all_zero = false;
        } else {
            // gaussian odd moment is zero, so sqrt(n) * delta = z.coeff exactly
            row.delta = z.value();
            row.scaled_exact = z.scaled_exact(1);
            row.scaled = row.scaled_exact->value();
            if (z.coeff != SqrtRat(0)) all_zero = false;
        }
        t.rows.push_back(std::move(row));
    }
    t.identically_zero = all_zero;
    return t;
}

/// Limit gram matrix V^{-1} = lim (1/n) XtX for the named families.
inline Eigen::MatrixXd asymptotic_gram(const Design& d) {
    switch (d.family) {
        case DesignFamily::canonical:
            return Eigen::MatrixXd::Constant(1, 1, 1.0);
        case DesignFamily::convergent:
            return Eigen::MatrixXd::Constant(1, 1, d.c * d.c);
        case DesignFamily::prop1:
            return Eigen::MatrixXd::Constant(1, 1, 1.0);
        case DesignFamily::prop2:
            return Eigen::MatrixXd::Constant(1, 1, 1.0 / (d.b_sparse + 1.0));
        case DesignFamily::iid_random: {
            double v = d.column_law == ColumnLaw::uniform ? 1.0 / 3.0 : 1.0;
            Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d.p, d.p) * v;
            if (d.intercept) g(0, 0) = 1.0;
            return g;
        }
        case DesignFamily::explicit_rows:
            throw DomainError("asymptotic_gram: explicit designs have no limit family");
    }
    throw DomainError("asymptotic_gram: bad family");
}

/// Variance of the limit law of xi: sigma^2 alpha' V alpha.
inline double xi_limit_variance(const XiSpec& spec) {
    Eigen::MatrixXd vinv = asymptotic_gram(spec.design);
    Eigen::VectorXd w = Eigen::LDLT<Eigen::MatrixXd>(vinv).solve(spec.alpha);
    return to_double(spec.law.sigma2()) * spec.alpha.dot(w);
}

/// Delta table for the OLS functional: Delta_n = E(xi_n^r) - E(N(0,v)^r)
/// with v the limit variance. Exact (closed-form) path, float-valued.
inline RateTable delta_sequence_xi(const XiSpec& spec, int r,
                                   std::span<const std::uint64_t> n_grid) {
    if (n_grid.empty()) throw DomainError("delta_sequence_xi: empty n-grid");
    RateTable t;
    t.r = r;
    t.source = RateSource::exact;
    t.scaling_exponent = default_scaling(r);
    double v = xi_limit_variance(spec);
    double lim = static_cast<double>(gaussian_moment(r).convert_to<double>()) *
                 std::pow(v, r / 2.0);
    double s = to_double(t.scaling_exponent);
    bool all_zero = true;
    for (std::uint64_t n : n_grid) {
        XiSpec sn(with_n(spec.design, n), spec.alpha, spec.law);
        RateRow row;
        row.n = n;
        row.delta = xi_exact_moment(sn, r) - lim;
        row.scaled = std::pow(static_cast<double>(n), s) * row.delta;
        if (row.delta != 0.0) all_zero = false;
        t.rows.push_back(row);
    }
    t.identically_zero = all_zero;
    return t;
}

/// MC-source delta table; rows carry standard errors.
inline RateTable delta_sequence_mc(const XiSpec& spec, int r,
                                   std::span<const std::uint64_t> n_grid, std::uint64_t reps,
                                   std::uint64_t seed, int threads = 1) {
    RateTable t;
    t.r = r;
    t.source = RateSource::mc;
    t.scaling_exponent = default_scaling(r);
    double v = xi_limit_variance(spec);
    double lim = static_cast<double>(gaussian_moment(r).convert_to<double>()) *
                 std::pow(v, r / 2.0);
    double s = to_double(t.scaling_exponent);
    int orders[1] = {r};
    for (std::uint64_t n : n_grid) {
        XiSpec sn(with_n(spec.design, n), spec.alpha, spec.law);
        McEstimate e = mc_xi_moments(sn, orders, reps, seed, threads)[0];
        RateRow row;
        row.n = n;
        row.delta = e.estimate - lim;
        row.scaled = std::pow(static_cast<double>(n), s) * row.delta;
        row.std_error = e.std_error;
        t.rows.push_back(row);
    }
    return t;
}

/**
 * @brief Least-squares slope of log|delta| against log n.
 *
 * Zero deltas are dropped; a sign change switches the fit to |delta| and
 * flags the result. Requires at least 4 usable points; a table flagged
 * identically zero is rejected outright.
 */
inline RateFit loglog_slope(const RateTable& t) {
    if (t.identically_zero)
        throw DomainError("loglog_slope: table is identically zero; no rate to fit");
    std::vector<std::pair<double, double>> pts;  // (log n, log |delta|)
    bool pos = false, neg = false;
    std::uint64_t n_min = 0, n_max = 0;
    for (const RateRow& row : t.rows) {
        if (row.delta == 0.0) continue;
        (row.delta > 0 ? pos : neg) = true;
        pts.emplace_back(std::log(static_cast<double>(row.n)), std::log(std::abs(row.delta)));
        if (n_min == 0) n_min = row.n;
        n_max = row.n;
    }
    if (pts.size() < 4) throw DomainError("loglog_slope: fewer than 4 usable points");

    double mx = 0, my = 0;
    for (auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.n_min = n_min;
    fit.n_max = n_max;
    fit.used_abs = pos && neg;
    return fit;
}

struct ScaledCheckRow {
    std::uint64_t n = 0;
    double scaled = 0.0;
    double error = 0.0;
};

struct ScaledCheck {
    std::vector<ScaledCheckRow> rows;
    double target = 0.0;
    double last_error = 0.0;
    bool absolute_mode = false;  // target zero: absolute errors reported
    bool monotone_error = true;  // nonincreasing error along the grid
};

/// n^s delta against a target limit; relative errors unless the target is
/// zero, in which case absolute errors are reported instead.
inline ScaledCheck scaled_limit_check(const RateTable& t, const Rat& s, const SqrtRat& target) {
    ScaledCheck out;
    out.target = target.value();
    out.absolute_mode = target == SqrtRat(0);
    double sv = to_double(s);
    double prev = 0.0;
    bool first = true;
    for (const RateRow& row : t.rows) {
        double scaled = (s == t.scaling_exponent && row.scaled)
                            ? *row.scaled
                            : std::pow(static_cast<double>(row.n), sv) * row.delta;
        double err = std::abs(scaled - out.target);
        if (!out.absolute_mode) err /= std::abs(out.target);
        out.rows.push_back({row.n, scaled, err});
        if (!first && err > prev + 1e-14) out.monotone_error = false;
        prev = err;
        first = false;
    }
    if (!out.rows.empty()) out.last_error = out.rows.back().error;
    return out;
}

struct Prop1Row {
    std::uint64_t n = 0;
    double alpha_n = 0.0;
    double value = 0.0;  // alpha_n (E(xi_n^2) - sigma^2)
};

struct Prop1Report {
    std::vector<Prop1Row> rows;
    bool strictly_decreasing = true;
    bool escaped = false;      // |last| >= threshold * |first|
    double escape_threshold = 10.0;
};

/**
 * @brief Divergence evidence for the escaping-weight design.
 *
 * The closed form alpha_n (E(xi_n^2) - sigma^2) = -sqrt(alpha_n)/(1 +
 * alpha_n^{-1/2}) sigma^2 is evaluated on the grid; the report records strict
 * decrease and whether the magnitude escaped the configured multiple of its
 * initial value (a finite certificate of unbounded divergence).
 */
inline Prop1Report prop1_divergence_report(const AlphaRule& rule,
                                           std::span<const std::uint64_t> n_grid, double sigma2,
                                           double escape_threshold = 10.0) {
    if (n_grid.empty()) throw DomainError("prop1_divergence_report: empty n-grid");
    rule.validate(n_grid.back());
    Prop1Report report;
    report.escape_threshold = escape_threshold;
    for (std::uint64_t n : n_grid) {
        double an = rule(n);
        double value = -std::sqrt(an) / (1.0 + 1.0 / std::sqrt(an)) * sigma2;
        if (!report.rows.empty() && value >= report.rows.back().value)
            report.strictly_decreasing = false;
        report.rows.push_back({n, an, value});
    }
    report.escaped = std::abs(report.rows.back().value) >=
                     escape_threshold * std::abs(report.rows.front().value);
    return report;
}

struct Prop2Row {
    std::uint64_t n = 0;
    double xi3 = 0.0;     // E(xi_n^3)
    double scaled = 0.0;  // n^a E(xi_n^3)
};

struct Prop2Report {
    std::vector<Prop2Row> rows;
    RateFit fit;                    // slope of log|scaled| vs log n
    double exponent_derived = 0.0;  // a(1-2a) / (2(1-a))
    double exponent_alt = 0.0;      // a(3-4a) / (4(1-a)), the other candidate
    bool increasing = true;         // scaled strictly increasing along grid
    double growth_ratio = 0.0;      // |scaled| last / first
};

/**
 * @brief Divergence evidence for the sparse spike design.
 *
 * E(xi_n^3) = n^{3/2} (sum x_i^3) / (XtX)^3 mu_3 from the design sums, scaled
 * by n^a; the growth exponent of the scaled sequence is fitted log-log and
 * reported against both closed-form candidates without hard-coding either.
 */
inline Prop2Report prop2_divergence_report(double a, std::span<const std::uint64_t> n_grid,
                                           double mu3) {
    if (mu3 == 0.0) throw DomainError("prop2_divergence_report: mu_3 must be nonzero");
    if (n_grid.size() < 1) throw DomainError("prop2_divergence_report: empty n-grid");
    Prop2Report report;
    report.exponent_derived = a * (1.0 - 2.0 * a) / (2.0 * (1.0 - a));
    report.exponent_alt = a * (3.0 - 4.0 * a) / (4.0 * (1.0 - a));

    RateTable t;  // reuse the fitting machinery on the scaled values
    t.r = 3;
    t.source = RateSource::exact;
    for (std::uint64_t n : n_grid) {
        Design d = prop2_design(n, a);
        double xtx = gram(d)(0, 0);
        double sum3 = d.column_power_sum(3);
        double xi3 = std::pow(static_cast<double>(n), 1.5) * sum3 / (xtx * xtx * xtx) * mu3;
        double scaled = std::pow(static_cast<double>(n), a) * xi3;
        if (!report.rows.empty() && scaled <= report.rows.back().scaled)
            report.increasing = false;
        report.rows.push_back({n, xi3, scaled});
        t.rows.push_back({n, scaled, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    }
    report.growth_ratio =
        std::abs(report.rows.back().scaled) / std::abs(report.rows.front().scaled);
    if (t.rows.size() >= 4) report.fit = loglog_slope(t);
    return report;
}

/// Geometric grid start, start*factor, ... up to limit (inclusive).
inline std::vector<std::uint64_t> geometric_grid(std::uint64_t start, std::uint64_t limit,
                                                 std::uint64_t factor = 2) {
    if (start < 1 || limit < start || factor < 2) throw DomainError("geometric_grid: bad range");
    std::vector<std::uint64_t> g;
    for (std::uint64_t n = start; n <= limit; n *= factor) g.push_back(n);
    return g;
}

}  // namespace momrate

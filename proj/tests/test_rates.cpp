// Convergence-rate tables, log-log slope fitting, the scaled-limit check,
// and the two divergence reports.

#include <catch2/catch_amalgamated.hpp>

#include <momrate/rates.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

using namespace momrate;

namespace {

XiSpec scalar_spec(Design d, ErrorLaw law) {
    Eigen::VectorXd a(1);
    a << 1.0;
    return XiSpec(std::move(d), a, std::move(law));
}

RateTable synthetic_table(const std::vector<std::pair<std::uint64_t, double>>& pts) {
    RateTable t;
    t.r = 4;
    for (auto& [n, delta] : pts) {
        RateRow row;
        row.n = n;
        row.delta = delta;
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace

TEST_CASE("Exact delta table: fourth moment, unit-variance exponential") {
    std::vector<std::uint64_t> grid{10, 100, 1000};
    RateTable t = delta_sequence(4, profiles::exp1(), grid);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.r == 4);
    CHECK(t.source == RateSource::exact);
    CHECK(t.scaling_exponent == Rat(1));
    CHECK_FALSE(t.identically_zero);

    // E(Z^4) - 3 = 6/n exactly.
    CHECK(*t.rows[0].delta_exact == SqrtRat(Rat(3, 5)));
    CHECK(*t.rows[1].delta_exact == SqrtRat(Rat(3, 50)));
    CHECK(*t.rows[2].delta_exact == SqrtRat(Rat(3, 500)));
    for (const RateRow& row : t.rows) {
        CHECK(*row.scaled_exact == SqrtRat(Rat(6)));  // n * delta
        CHECK(*row.scaled == 6.0);
        CHECK(row.delta == Catch::Approx(6.0 / static_cast<double>(row.n)).epsilon(1e-15));
        CHECK_FALSE(row.std_error.has_value());
    }
}

TEST_CASE("Exact delta table: odd moments carry the sqrt(n)-scaled value") {
    std::vector<std::uint64_t> grid{4, 16, 64, 256};
    RateTable t = delta_sequence(3, profiles::exp1(), grid);
    CHECK(t.scaling_exponent == Rat(1, 2));
    // E(Z^3) = mu_3 / sqrt(n) = 2/sqrt(n); at n = 4 the raw delta is exactly 1.
    CHECK(t.rows[0].delta == 1.0);
    for (const RateRow& row : t.rows) {
        CHECK(*row.scaled_exact == SqrtRat(Rat(2)));
        CHECK_FALSE(row.delta_exact.has_value());  // raw delta keeps n^{-1/2}
    }
}

TEST_CASE("A normal profile yields the identically-zero table") {
    std::vector<std::uint64_t> grid{2, 4, 8, 16, 32};
    RateTable t = delta_sequence(4, profiles::normal(), grid);
    CHECK(t.identically_zero);
    for (const RateRow& row : t.rows) CHECK(row.delta == 0.0);
    CHECK_THROWS_AS(loglog_slope(t), DomainError);
}

TEST_CASE("Delta tables validate their grid") {
    std::vector<std::uint64_t> empty;
    CHECK_THROWS_AS(delta_sequence(4, profiles::exp1(), empty), DomainError);
    std::vector<std::uint64_t> unsorted{10, 10, 20};
    CHECK_THROWS_AS(delta_sequence(4, profiles::exp1(), unsorted), DomainError);
}

TEST_CASE("loglog_slope recovers synthetic power laws exactly") {
    std::vector<std::pair<std::uint64_t, double>> pts;
    for (std::uint64_t n : {8, 16, 32, 64, 128}) pts.push_back({n, 7.0 / (double(n) * n)});
    RateFit fit = loglog_slope(synthetic_table(pts));
    CHECK(fit.slope == Catch::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.intercept == Catch::Approx(std::log(7.0)).epsilon(1e-10));
    CHECK(fit.r_squared == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(fit.n_min == 8);
    CHECK(fit.n_max == 128);
    CHECK_FALSE(fit.used_abs);
}

TEST_CASE("loglog_slope flags sign changes and drops zero deltas") {
    std::vector<std::pair<std::uint64_t, double>> pts{
        {8, 3.0 / 8}, {16, -3.0 / 16}, {32, 3.0 / 32}, {64, -3.0 / 64}};
    RateFit fit = loglog_slope(synthetic_table(pts));
    CHECK(fit.used_abs);
    CHECK(fit.slope == Catch::Approx(-1.0).epsilon(1e-12));

    // A zero row is skipped, leaving four usable points.
    std::vector<std::pair<std::uint64_t, double>> with_zero{
        {8, 1.0 / 8}, {12, 0.0}, {16, 1.0 / 16}, {32, 1.0 / 32}, {64, 1.0 / 64}};
    RateFit fz = loglog_slope(synthetic_table(with_zero));
    CHECK(fz.slope == Catch::Approx(-1.0).epsilon(1e-12));
    CHECK(fz.n_min == 8);
    CHECK(fz.n_max == 64);

    std::vector<std::pair<std::uint64_t, double>> three{{8, 0.5}, {16, 0.25}, {32, 0.125}};
    CHECK_THROWS_AS(loglog_slope(synthetic_table(three)), DomainError);
}

TEST_CASE("scaled_limit_check measures relative error against the limit") {
    std::vector<std::uint64_t> grid{10, 100, 1000};
    RateTable t = delta_sequence(4, profiles::exp1(), grid);
    ScaledCheck chk = scaled_limit_check(t, Rat(1), SqrtRat(6));
    REQUIRE(chk.rows.size() == 3);
    CHECK_FALSE(chk.absolute_mode);
    CHECK(chk.monotone_error);
    for (const auto& row : chk.rows) {
        CHECK(row.scaled == 6.0);
        CHECK(row.error == 0.0);
    }
    CHECK(chk.last_error == 0.0);

    // A different exponent recomputes n^s delta; target 0 switches to
    // absolute errors, which decay like 6/sqrt(n).
    ScaledCheck half = scaled_limit_check(t, Rat(1, 2), SqrtRat(0));
    CHECK(half.absolute_mode);
    CHECK(half.monotone_error);
    CHECK(half.rows[0].scaled == Catch::Approx(6.0 / std::sqrt(10.0)).epsilon(1e-12));
    CHECK(half.last_error == Catch::Approx(6.0 / std::sqrt(1000.0)).epsilon(1e-12));
}

TEST_CASE("scaled_limit_check notices non-monotone error sequences") {
    RateTable t = synthetic_table({{10, 0.9}, {100, 0.5}});
    t.scaling_exponent = 0;
    ScaledCheck chk = scaled_limit_check(t, Rat(0), SqrtRat(1));
    CHECK_FALSE(chk.monotone_error);
    CHECK(chk.last_error == Catch::Approx(0.5).epsilon(1e-12));

    RateTable good = synthetic_table({{10, 0.5}, {100, 0.9}});
    good.scaling_exponent = 0;
    CHECK(scaled_limit_check(good, Rat(0), SqrtRat(1)).monotone_error);
}

TEST_CASE("The OLS delta table on the all-ones design matches the sum table") {
    std::vector<std::uint64_t> grid{16, 64, 256, 1024};
    ErrorLaw law = ErrorLaw::centered_exponential();
    XiSpec spec = scalar_spec(canonical_design(16), law);

    for (int r : {2, 3, 4}) {
        RateTable via_xi = delta_sequence_xi(spec, r, grid);
        RateTable via_z = delta_sequence(r, law.profile(), grid);
        REQUIRE(via_xi.rows.size() == via_z.rows.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(via_xi.rows[i].delta ==
                  Catch::Approx(via_z.rows[i].delta).margin(1e-14).epsilon(1e-10));
            CHECK(*via_xi.rows[i].scaled ==
                  Catch::Approx(*via_z.rows[i].scaled).margin(1e-12).epsilon(1e-10));
        }
    }
}

TEST_CASE("A constant design hits its limit variance exactly") {
    // x_i = 2: E(xi^2) = 1/4 for every n, so the second-moment deltas vanish.
    // (Powers of 4 keep sqrt(n) and 1/(4n) exactly representable.)
    XiSpec spec = scalar_spec(convergent_design(16, 2.0), ErrorLaw::centered_exponential());
    std::vector<std::uint64_t> grid{16, 64, 256, 1024};
    RateTable even = delta_sequence_xi(spec, 2, grid);
    CHECK(even.identically_zero);
    for (const RateRow& row : even.rows) CHECK(std::abs(row.delta) < 1e-15);

    // E(xi^3) = mu_3 / (8 sqrt(n)): slope -1/2, sqrt(n)-scaled value 1/4.
    RateTable odd = delta_sequence_xi(spec, 3, grid);
    CHECK_FALSE(odd.identically_zero);
    RateFit fit = loglog_slope(odd);
    CHECK(fit.slope == Catch::Approx(-0.5).epsilon(1e-10));
    CHECK(fit.r_squared == Catch::Approx(1.0).epsilon(1e-10));
    for (const RateRow& row : odd.rows)
        CHECK(*row.scaled == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("Monte Carlo delta tables agree with the exact path") {
    XiSpec spec = scalar_spec(canonical_design(16), ErrorLaw::uniform());
    std::vector<std::uint64_t> grid{16, 32};
    RateTable mc = delta_sequence_mc(spec, 4, grid, 20000, 31, 2);
    RateTable exact = delta_sequence_xi(spec, 4, grid);
    CHECK(mc.source == RateSource::mc);
    REQUIRE(mc.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(mc.rows[i].std_error.has_value());
        CHECK(*mc.rows[i].std_error > 0.0);
        CHECK(std::abs(mc.rows[i].delta - exact.rows[i].delta) <=
              6.0 * *mc.rows[i].std_error + 1e-10);
    }
}

TEST_CASE("asymptotic_gram knows each family's limit") {
    CHECK(asymptotic_gram(canonical_design(4))(0, 0) == 1.0);
    CHECK(asymptotic_gram(convergent_design(4, 2.0, 1.0, 0.5))(0, 0) == 4.0);
    AlphaRule rule;
    CHECK(asymptotic_gram(prop1_design(4, rule))(0, 0) == 1.0);
    // a = 1/4 -> b = 2 -> lim XtX/n = 1/(b+1) = 1/3.
    CHECK(asymptotic_gram(prop2_design(27, 0.25))(0, 0) == Catch::Approx(1.0 / 3.0));

    Eigen::MatrixXd gu = asymptotic_gram(iid_random_design(10, 2, ColumnLaw::uniform, 1));
    CHECK(gu(0, 0) == Catch::Approx(1.0 / 3.0));
    CHECK(gu(1, 1) == Catch::Approx(1.0 / 3.0));
    CHECK(gu(0, 1) == 0.0);
    Eigen::MatrixXd gi =
        asymptotic_gram(iid_random_design(10, 2, ColumnLaw::uniform, 1, true));
    CHECK(gi(0, 0) == 1.0);

    CHECK_THROWS_AS(asymptotic_gram(explicit_design(2, 1, {1.0, 2.0})), DomainError);

    XiSpec spec = scalar_spec(convergent_design(8, 2.0), ErrorLaw::normal());
    CHECK(xi_limit_variance(spec) == Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("Escaping-weight divergence report") {
    AlphaRule rule;  // alpha_n = sqrt(n)
    std::vector<std::uint64_t> grid = geometric_grid(16, std::uint64_t(1) << 17, 4);
    Prop1Report rep = prop1_divergence_report(rule, grid, 1.0);

    REQUIRE(!rep.rows.empty());
    CHECK(rep.rows[0].n == 16);
    CHECK(rep.rows[0].alpha_n == 4.0);
    // alpha (E(xi^2) - sigma^2) = -sqrt(4)/(1 + 1/2) = -4/3 at n = 16.
    CHECK(rep.rows[0].value == Catch::Approx(-4.0 / 3.0).epsilon(1e-14));
    CHECK(rep.strictly_decreasing);
    CHECK(rep.escaped);
    CHECK(rep.escape_threshold == 10.0);

    // The variance enters linearly.
    Prop1Report doubled = prop1_divergence_report(rule, grid, 2.0);
    CHECK(doubled.rows[0].value == Catch::Approx(-8.0 / 3.0).epsilon(1e-14));

    std::vector<std::uint64_t> empty;
    CHECK_THROWS_AS(prop1_divergence_report(rule, empty, 1.0), DomainError);
    AlphaRule bad;
    bad.s = 1.5;
    CHECK_THROWS_AS(prop1_divergence_report(bad, grid, 1.0), DomainError);
}

TEST_CASE("Sparse-design divergence report") {
    // Single point: check the third-moment formula at n = 27, a = 1/4.
    std::vector<std::uint64_t> one{27};
    Prop2Report rep = prop2_divergence_report(0.25, one, 2.0);
    double xi3 = std::pow(27.0, 1.5) * 36.0 / std::pow(14.0, 3) * 2.0;
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].xi3 == Catch::Approx(xi3).epsilon(1e-12));
    CHECK(rep.rows[0].scaled == Catch::Approx(std::pow(27.0, 0.25) * xi3).epsilon(1e-12));
    CHECK(rep.exponent_derived == Catch::Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(rep.exponent_alt == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(rep.growth_ratio == 1.0);
    CHECK(rep.fit.n_min == 0);  // fewer than 4 rows: no fit

    std::vector<std::uint64_t> grid = geometric_grid(1 << 10, 1 << 16, 4);
    Prop2Report fitted = prop2_divergence_report(0.25, grid, 2.0);
    REQUIRE(fitted.rows.size() == 4);
    CHECK(fitted.fit.n_min == 1 << 10);
    CHECK(fitted.fit.n_max == 1 << 16);
    CHECK(fitted.growth_ratio > 1.0);

    CHECK_THROWS_AS(prop2_divergence_report(0.25, one, 0.0), DomainError);
    std::vector<std::uint64_t> empty;
    CHECK_THROWS_AS(prop2_divergence_report(0.25, empty, 2.0), DomainError);
}

TEST_CASE("geometric_grid covers start to limit inclusively") {
    CHECK(geometric_grid(16, 256) == std::vector<std::uint64_t>{16, 32, 64, 128, 256});
    CHECK(geometric_grid(3, 100, 3) == std::vector<std::uint64_t>{3, 9, 27, 81});
    CHECK(geometric_grid(5, 5) == std::vector<std::uint64_t>{5});
    CHECK_THROWS_AS(geometric_grid(0, 10), DomainError);
    CHECK_THROWS_AS(geometric_grid(10, 5), DomainError);
    CHECK_THROWS_AS(geometric_grid(2, 10, 1), DomainError);
}

// Serialization: shortest round-trip doubles, JSON codecs for designs, laws,
// and xi specs, and the CSV/JSON report writers.

#include <catch2/catch_amalgamated.hpp>

#include <momrate/io.hpp>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

using namespace momrate;

TEST_CASE("fmt_double emits shortest forms that parse back exactly") {
    CHECK(fmt_double(1.0) == "1");
    CHECK(fmt_double(0.5) == "0.5");
    CHECK(fmt_double(0.1) == "0.1");
    CHECK(fmt_double(-1.0 / 3.0) == "-0.3333333333333333");
    CHECK(fmt_double(6.0) == "6");

    RngStream s(17, 17);
    for (int i = 0; i < 2000; ++i) {
        double v = (s.next_u01() - 0.5) * std::pow(10.0, double(i % 61) - 30.0);
        std::string text = fmt_double(v);
        CHECK(std::strtod(text.c_str(), nullptr) == v);
    }
}

TEST_CASE("Name tables round-trip and reject unknowns") {
    CHECK(family_name(DesignFamily::explicit_rows) == "explicit");
    CHECK(family_name(DesignFamily::iid_random) == "iid_random");
    for (ColumnLaw law : {ColumnLaw::normal, ColumnLaw::uniform, ColumnLaw::rademacher})
        CHECK(column_law_from_name(column_law_name(law)) == law);
    CHECK_THROWS_AS(column_law_from_name("poisson"), DomainError);
}

TEST_CASE("Alpha rules round-trip through JSON") {
    AlphaRule power;
    power.s = 0.3;
    json jp = alpha_rule_to_json(power);
    CHECK(jp.at("kind") == "power");
    AlphaRule back = alpha_rule_from_json(jp);
    CHECK(back.kind == AlphaRule::Kind::power);
    CHECK(back.s == 0.3);

    AlphaRule logrule;
    logrule.kind = AlphaRule::Kind::logarithmic;
    CHECK(alpha_rule_from_json(alpha_rule_to_json(logrule)).kind ==
          AlphaRule::Kind::logarithmic);

    AlphaRule table;
    table.kind = AlphaRule::Kind::table;
    table.table = {1.0, 1.5, 1.9};
    AlphaRule tback = alpha_rule_from_json(alpha_rule_to_json(table));
    CHECK(tback.table == std::vector<double>{1.0, 1.5, 1.9});

    CHECK_THROWS_AS(alpha_rule_from_json(json{{"kind", "exp"}}), DomainError);
}

TEST_CASE("Designs round-trip through JSON for every family") {
    AlphaRule rule;
    std::vector<Design> designs;
    designs.push_back(canonical_design(12));
    designs.push_back(convergent_design(30, 2.0, 1.0, 0.5));
    designs.push_back(prop1_design(16, rule));
    designs.push_back(prop2_design(27, 0.25));
    designs.push_back(iid_random_design(20, 3, ColumnLaw::uniform, 77, true));
    designs.push_back(explicit_design(3, 1, {1.0, 2.0, 3.0}));

    for (const Design& d : designs) {
        json j = design_to_json(d);
        Design back = design_from_json(j);
        CHECK(back.family == d.family);
        CHECK(back.n == d.n);
        CHECK(back.p == d.p);
        for (std::uint64_t i : {std::uint64_t(0), d.n / 2, d.n - 1})
            CHECK((back.row(i) - d.row(i)).norm() == 0.0);
        // Re-serialization is stable.
        CHECK(design_to_json(back) == j);
    }

    CHECK_THROWS_AS(design_from_json(json{{"family", "banded"}, {"n", 4}, {"params", {}}}),
                    DomainError);
}

TEST_CASE("Parsing a design re-checks the family invariants") {
    json j = design_to_json(prop2_design(27, 0.25));
    j["params"]["a"] = 0.7;  // out of (0, 1/2)
    CHECK_THROWS_AS(design_from_json(j), DomainError);

    json c = design_to_json(convergent_design(10, 2.0));
    c["params"]["c"] = 0.0;
    CHECK_THROWS_AS(design_from_json(c), DomainError);
}

TEST_CASE("Error laws round-trip with exact variances") {
    std::vector<ErrorLaw> laws;
    laws.push_back(ErrorLaw::normal(Rat(9, 4)));
    laws.push_back(ErrorLaw::uniform(Rat(3)));
    laws.push_back(ErrorLaw::centered_exponential(Rat(2)));  // sigma = 2, sigma2 = 4
    laws.push_back(ErrorLaw::rademacher());
    laws.push_back(ErrorLaw::centered_bernoulli(Rat(3, 10)));

    for (const ErrorLaw& law : laws) {
        json j = law_to_json(law);
        ErrorLaw back = law_from_json(j);
        CHECK(back.name() == law.name());
        CHECK(back.sigma2() == law.sigma2());
        CHECK(back.kind() == law.kind());
        for (int nu = 2; nu <= 6; ++nu) CHECK(back.profile().central(nu) == law.profile().central(nu));
    }

    json bern = law_to_json(ErrorLaw::centered_bernoulli(Rat(3, 10)));
    CHECK(bern.at("name") == "bern(3/10)");
    CHECK(law_from_json(bern).sigma2() == Rat(21, 100));

    CHECK_THROWS_AS(law_from_json(json{{"name", "levy"}}), DomainError);
}

TEST_CASE("Xi specs round-trip including the direction and beta") {
    Design d = iid_random_design(15, 2, ColumnLaw::normal, 5);
    Eigen::VectorXd alpha(2);
    alpha << 1.0, -0.25;
    XiSpec spec(d, alpha, ErrorLaw::centered_exponential());
    spec.beta_true << 3.0, -1.0;

    json j = xi_spec_to_json(spec);
    XiSpec back = xi_spec_from_json(j);
    CHECK((back.alpha - spec.alpha).norm() == 0.0);
    CHECK((back.beta_true - spec.beta_true).norm() == 0.0);
    CHECK(back.law.name() == "exp1");
    CHECK(back.design.n == 15);
    CHECK(xi_spec_to_json(back) == j);

    json bad = j;
    bad["beta_true"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(xi_spec_from_json(bad), DomainError);
}

TEST_CASE("Rate-table CSV is byte-stable with an empty column for exact rows") {
    std::vector<std::uint64_t> grid{10, 100};
    RateTable t = delta_sequence(4, profiles::exp1(), grid);
    CHECK(rate_table_csv(t) ==
          "# schema: 1\n"
          "n,delta,scaled,std_error\n"
          "10,0.6,6,\n"
          "100,0.06,6,\n");

    RateTable mc;
    RateRow row;
    row.n = 8;
    row.delta = 0.25;
    row.scaled = 2.0;
    row.std_error = 0.125;
    mc.rows.push_back(row);
    CHECK(rate_table_csv(mc) ==
          "# schema: 1\n"
          "n,delta,scaled,std_error\n"
          "8,0.25,2,0.125\n");
}

TEST_CASE("Fit and MC JSON carry the schema marker and isolate the timestamp") {
    RateFit fit;
    fit.slope = -1.0;
    fit.intercept = 0.5;
    fit.r_squared = 0.99;
    fit.n_min = 8;
    fit.n_max = 64;
    json jf = rate_fit_json(fit);
    CHECK(jf.at("schema") == 1);
    CHECK(jf.at("slope") == -1.0);
    CHECK(jf.at("n_max") == 64);

    Eigen::VectorXd a(1);
    a << 1.0;
    XiSpec spec(canonical_design(10), a, ErrorLaw::normal());
    std::vector<int> orders{2, 3};
    auto est = mc_xi_moments(spec, orders, 2000, 9);
    json jm = mc_result_json(spec, orders, est, 2000, 9, "2026-01-01T00:00:00Z");
    CHECK(jm.at("schema") == 1);
    CHECK(jm.at("reps") == 2000);
    CHECK(jm.at("seed") == 9);
    CHECK(jm.at("meta").at("timestamp") == "2026-01-01T00:00:00Z");
    REQUIRE(jm.at("estimates").size() == 2);
    CHECK(jm.at("estimates")[0].at("r") == 2);
    CHECK(jm.at("estimates")[0].contains("std_error"));
    CHECK_FALSE(jm.at("estimates")[0].contains("powers"));
    // The embedded spec parses back.
    XiSpec back = xi_spec_from_json(jm.at("spec"));
    CHECK(back.design.n == 10);

    // Joint estimates are keyed by their power vector instead.
    std::vector<XiSpec> specs{spec, spec};
    std::vector<int> pw{1, 1};
    McEstimate joint = mc_joint_moments(specs, pw, 2000, 9);
    std::vector<McEstimate> je{joint};
    json jj = mc_result_json(spec, pw, je, 2000, 9, "t");
    CHECK(jj.at("estimates")[0].at("powers") == std::vector<int>{1, 1});
    CHECK_FALSE(jj.at("estimates")[0].contains("r"));
}

TEST_CASE("Divergence reports serialize to CSV and JSON") {
    AlphaRule rule;  // sqrt
    std::vector<std::uint64_t> grid{16};
    Prop1Report p1 = prop1_divergence_report(rule, grid, 1.0);
    CHECK(prop1_report_csv(p1) ==
          "# schema: 1\n"
          "n,alpha_n,value\n"
          "16,4,-1.3333333333333333\n");
    json j1 = prop1_report_json(p1);
    CHECK(j1.at("schema") == 1);
    CHECK(j1.at("rows").size() == 1);
    CHECK(j1.at("rows")[0].at("alpha_n") == 4.0);
    CHECK(j1.at("strictly_decreasing") == true);
    CHECK(j1.at("escaped") == false);

    std::vector<std::uint64_t> two{27, 216};
    Prop2Report p2 = prop2_divergence_report(0.25, two, 2.0);
    std::string csv = prop2_report_csv(p2);
    CHECK(csv.rfind("# schema: 1\nn,xi3,scaled\n27,", 0) == 0);
    CHECK(csv.find("\n216,") != std::string::npos);
    json j2 = prop2_report_json(p2);
    CHECK(j2.at("schema") == 1);
    CHECK(j2.at("fit").is_null());  // fewer than 4 rows
    CHECK(j2.at("exponent_derived") == Catch::Approx(1.0 / 12.0));
    CHECK(j2.at("exponent_alt") == Catch::Approx(1.0 / 6.0));
    CHECK(j2.at("rows").size() == 2);

    std::vector<std::uint64_t> four{1 << 10, 1 << 12, 1 << 14, 1 << 16};
    json j4 = prop2_report_json(prop2_divergence_report(0.25, four, 2.0));
    CHECK(j4.at("fit").is_object());
    CHECK(j4.at("fit").at("n_min") == 1024);
}

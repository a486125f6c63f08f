#pragma once

#include <momrate/designs.hpp>
#include <momrate/error_laws.hpp>
#include <momrate/monte_carlo.hpp>
#include <momrate/ols.hpp>
#include <momrate/rates.hpp>

#include <json.hpp>

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

namespace momrate {

using nlohmann::json;

/// Shortest round-trip decimal form of a double; stable across runs, so CSV
/// and JSON outputs are byte-reproducible.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string family_name(DesignFamily f) {
    switch (f) {
        case DesignFamily::canonical: return "canonical";
        case DesignFamily::convergent: return "convergent";
        case DesignFamily::prop1: return "prop1";
        case DesignFamily::prop2: return "prop2";
        case DesignFamily::iid_random: return "iid_random";
        case DesignFamily::explicit_rows: return "explicit";
    }
    throw DomainError("family_name: bad family");
}

inline std::string column_law_name(ColumnLaw law) {
    switch (law) {
        case ColumnLaw::normal: return "normal";
        case ColumnLaw::uniform: return "uniform";
        case ColumnLaw::rademacher: return "rademacher";
    }
    throw DomainError("column_law_name: bad law");
}

inline ColumnLaw column_law_from_name(const std::string& s) {
    if (s == "normal") return ColumnLaw::normal;
    if (s == "uniform") return ColumnLaw::uniform;
    if (s == "rademacher") return ColumnLaw::rademacher;
    throw DomainError("unknown column law '" + s + "'");
}

inline json alpha_rule_to_json(const AlphaRule& rule) {
    switch (rule.kind) {
        case AlphaRule::Kind::power: return {{"kind", "power"}, {"s", rule.s}};
        case AlphaRule::Kind::logarithmic: return {{"kind", "log"}};
        case AlphaRule::Kind::table: return {{"kind", "table"}, {"values", rule.table}};
    }
    throw DomainError("alpha_rule_to_json: bad kind");
}

inline AlphaRule alpha_rule_from_json(const json& j) {
    AlphaRule rule;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "power") {
        rule.kind = AlphaRule::Kind::power;
        rule.s = j.at("s").get<double>();
    } else if (kind == "log") {
        rule.kind = AlphaRule::Kind::logarithmic;
    } else if (kind == "table") {
        rule.kind = AlphaRule::Kind::table;
        rule.table = j.at("values").get<std::vector<double>>();
    } else {
        throw DomainError("unknown alpha rule kind '" + kind + "'");
    }
    return rule;
}

/// Design spec as {family, params, n, p, seed}; parsing reconstructs through
/// the family factory, so every invariant is re-checked and seeded families
/// rematerialize identically.
inline json design_to_json(const Design& d) {
    json params = json::object();
    switch (d.family) {
        case DesignFamily::canonical:
            break;
        case DesignFamily::convergent:
            params = {{"c", d.c}, {"a", d.a}, {"q", d.q}};
            break;
        case DesignFamily::prop1:
            params = {{"alpha", alpha_rule_to_json(d.alpha)}};
            break;
        case DesignFamily::prop2:
            params = {{"a", d.a_sparse}};
            break;
        case DesignFamily::iid_random:
            params = {{"column_law", column_law_name(d.column_law)}, {"intercept", d.intercept}};
            break;
        case DesignFamily::explicit_rows:
            params = {{"rows", *d.rows_}};
            break;
    }
    return {{"family", family_name(d.family)},
            {"params", params},
            {"n", d.n},
            {"p", d.p},
            {"seed", d.seed}};
}

inline Design design_from_json(const json& j) {
    std::string family = j.at("family").get<std::string>();
    std::uint64_t n = j.at("n").get<std::uint64_t>();
    const json& params = j.at("params");
    if (family == "canonical") return canonical_design(n);
    if (family == "convergent")
        return convergent_design(n, params.at("c").get<double>(),
                                 params.value("a", 0.0), params.value("q", 1.0));
    if (family == "prop1") return prop1_design(n, alpha_rule_from_json(params.at("alpha")));
    if (family == "prop2") return prop2_design(n, params.at("a").get<double>());
    if (family == "iid_random")
        return iid_random_design(n, j.at("p").get<int>(),
                                 column_law_from_name(params.at("column_law").get<std::string>()),
                                 j.at("seed").get<std::uint64_t>(),
                                 params.value("intercept", false));
    if (family == "explicit")
        return explicit_design(n, j.at("p").get<int>(),
                               params.at("rows").get<std::vector<double>>());
    throw DomainError("unknown design family '" + family + "'");
}

/// Law descriptor {name, sigma2} with sigma2 as an exact rational literal.
inline json law_to_json(const ErrorLaw& law) {
    return {{"name", law.name()}, {"sigma2", to_string(law.sigma2())}};
}

inline ErrorLaw law_from_json(const json& j) {
    std::string name = j.at("name").get<std::string>();
    Rat sigma2 = j.contains("sigma2") ? parse_rat(j.at("sigma2").get<std::string>()) : Rat(1);
    // bern(q) carries its variance in the name; by_name rejects overrides
    if (name.rfind("bern(", 0) == 0) sigma2 = 1;
    auto law = ErrorLaw::by_name(name, sigma2);
    if (!law) throw DomainError("unknown error law '" + name + "'");
    return *law;
}

inline json xi_spec_to_json(const XiSpec& spec) {
    std::vector<double> alpha(spec.alpha.data(), spec.alpha.data() + spec.alpha.size());
    std::vector<double> beta(spec.beta_true.data(), spec.beta_true.data() + spec.beta_true.size());
    return {{"design", design_to_json(spec.design)},
            {"alpha", alpha},
            {"law", law_to_json(spec.law)},
            {"beta_true", beta}};
}

inline XiSpec xi_spec_from_json(const json& j) {
    Design d = design_from_json(j.at("design"));
    auto av = j.at("alpha").get<std::vector<double>>();
    Eigen::VectorXd alpha = Eigen::Map<const Eigen::VectorXd>(av.data(),
                                                              static_cast<Eigen::Index>(av.size()));
    XiSpec spec(d, alpha, law_from_json(j.at("law")));
    if (j.contains("beta_true")) {
        auto bv = j.at("beta_true").get<std::vector<double>>();
        if (bv.size() != static_cast<std::size_t>(d.p))
            throw DomainError("xi spec: beta_true dimension mismatch");
        spec.beta_true = Eigen::Map<const Eigen::VectorXd>(bv.data(),
                                                           static_cast<Eigen::Index>(bv.size()));
    }
    return spec;
}

/// RateTable CSV: schema comment, fixed header, one row per n. The std_error
/// column is empty for exact-source tables.
inline std::string rate_table_csv(const RateTable& t) {
    std::ostringstream os;
    os << "# schema: 1\n";
    os << "n,delta,scaled,std_error\n";
    for (const RateRow& row : t.rows) {
        os << row.n << ',' << fmt_double(row.delta) << ',';
        if (row.scaled) os << fmt_double(*row.scaled);
        os << ',';
        if (row.std_error) os << fmt_double(*row.std_error);
        os << '\n';
    }
    return os.str();
}

inline json rate_fit_json(const RateFit& fit) {
    return {{"schema", 1},        {"slope", fit.slope},   {"intercept", fit.intercept},
            {"r_squared", fit.r_squared}, {"n_min", fit.n_min}, {"n_max", fit.n_max}};
}

inline json mc_result_json(const XiSpec& spec, std::span<const int> orders,
                           std::span<const McEstimate> estimates, std::uint64_t reps,
                           std::uint64_t seed, const std::string& timestamp) {
    json est = json::array();
    for (const McEstimate& e : estimates) {
        json row;
        if (e.powers.size() == 1)
            row["r"] = e.powers[0];
        else
            row["powers"] = e.powers;
        row["value"] = e.estimate;
        row["std_error"] = e.std_error;
        est.push_back(row);
    }
    return {{"schema", 1},
            {"spec", xi_spec_to_json(spec)},
            {"orders", std::vector<int>(orders.begin(), orders.end())},
            {"reps", reps},
            {"seed", seed},
            {"estimates", est},
            {"meta", {{"timestamp", timestamp}}}};
}

inline std::string prop1_report_csv(const Prop1Report& report) {
    std::ostringstream os;
    os << "# schema: 1\n";
    os << "n,alpha_n,value\n";
    for (const Prop1Row& row : report.rows)
        os << row.n << ',' << fmt_double(row.alpha_n) << ',' << fmt_double(row.value) << '\n';
    return os.str();
}

inline json prop1_report_json(const Prop1Report& report) {
    json rows = json::array();
    for (const Prop1Row& row : report.rows)
        rows.push_back({{"n", row.n}, {"alpha_n", row.alpha_n}, {"value", row.value}});
    return {{"schema", 1},
            {"rows", rows},
            {"strictly_decreasing", report.strictly_decreasing},
            {"escaped", report.escaped},
            {"escape_threshold", report.escape_threshold}};
}

inline std::string prop2_report_csv(const Prop2Report& report) {
    std::ostringstream os;
    os << "# schema: 1\n";
    os << "n,xi3,scaled\n";
    for (const Prop2Row& row : report.rows)
        os << row.n << ',' << fmt_double(row.xi3) << ',' << fmt_double(row.scaled) << '\n';
    return os.str();
}

inline json prop2_report_json(const Prop2Report& report) {
    json rows = json::array();
    for (const Prop2Row& row : report.rows)
        rows.push_back({{"n", row.n}, {"xi3", row.xi3}, {"scaled", row.scaled}});
    json fit = report.rows.size() >= 4 ? rate_fit_json(report.fit) : json();
    return {{"schema", 1},
            {"rows", rows},
            {"fitted_exponent", report.fit.slope},
            {"exponent_derived", report.exponent_derived},
            {"exponent_alt", report.exponent_alt},
            {"increasing", report.increasing},
            {"growth_ratio", report.growth_ratio},
            {"fit", fit}};
}

}  // namespace momrate

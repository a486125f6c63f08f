#include <momrate/momrate.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace momrate;
using nlohmann::json;

/// Flag-level syntax problems; mapped to exit code 2 like CLI11 parse errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_threads() {
    if (const char* env = std::getenv("MOMRATE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
    }
    return 1;
}

void write_output(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open output file '" + path + "'");
    os << text;
}

std::string json_text(const json& doc) { return doc.dump(2) + "\n"; }

std::string iso_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Rat parse_rat_flag(const std::string& s, const std::string& flag) {
    try {
        return parse_rat(s);
    } catch (const DomainError& e) {
        throw UsageError(flag + ": " + e.what());
    }
}

std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError(flag + ": bad number '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError(flag + ": empty list");
    return out;
}

/// "START:LIMIT:xFACTOR" geometric grid or an explicit comma-separated list.
std::vector<std::uint64_t> parse_ngrid(const std::string& s) {
    auto c1 = s.find(':');
    if (c1 != std::string::npos) {
        auto c2 = s.find(':', c1 + 1);
        if (c2 == std::string::npos || c2 + 1 >= s.size() || s[c2 + 1] != 'x')
            throw UsageError("--ngrid: expected START:LIMIT:xFACTOR");
        try {
            std::uint64_t start = std::stoull(s.substr(0, c1));
            std::uint64_t limit = std::stoull(s.substr(c1 + 1, c2 - c1 - 1));
            std::uint64_t factor = std::stoull(s.substr(c2 + 2));
            return geometric_grid(start, limit, factor);
        } catch (const DomainError& e) {
            throw UsageError(std::string("--ngrid: ") + e.what());
        } catch (const std::exception&) {
            throw UsageError("--ngrid: expected START:LIMIT:xFACTOR");
        }
    }
    std::vector<std::uint64_t> grid;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            grid.push_back(std::stoull(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError("--ngrid: bad entry '" + tok + "'");
        }
    }
    if (grid.empty()) throw UsageError("--ngrid: empty grid");
    return grid;
}

/// "m3=2,m4=9" -> standardized moment map (m2, if given, must be 1).
std::map<int, Rat> parse_inline_moments(const std::string& s) {
    std::map<int, Rat> m;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--moments: expected mK=VALUE, got '" + tok + "'");
        std::string key = tok.substr(0, eq);
        if (key[0] == 'm') key.erase(0, 1);
        int order = 0;
        try {
            std::size_t pos = 0;
            order = std::stoi(key, &pos);
            if (pos != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw UsageError("--moments: bad order '" + tok + "'");
        }
        if (order < 2) throw UsageError("--moments: orders start at 2");
        Rat v = parse_rat_flag(tok.substr(eq + 1), "--moments");
        if (order == 2) {
            if (v != 1) throw UsageError("--moments: standardized m2 must be 1");
            continue;
        }
        m[order] = v;
    }
    if (m.empty()) throw UsageError("--moments: no entries");
    return m;
}

MomentProfile resolve_profile(const std::string& name, const std::string& inline_moments) {
    if (!name.empty() && !inline_moments.empty())
        throw UsageError("--profile and --moments are mutually exclusive");
    if (!name.empty()) {
        auto prof = profiles::by_name(name);
        if (!prof) throw DomainError("unknown profile '" + name + "'");
        return *prof;
    }
    if (!inline_moments.empty()) {
        auto m = parse_inline_moments(inline_moments);
        return MomentProfile::from_standardized("inline", m.rbegin()->first, m);
    }
    throw UsageError("one of --profile or --moments is required");
}

ErrorLaw resolve_law(const std::string& name, const std::string& sigma2_str) {
    Rat s2 = parse_rat_flag(sigma2_str, "--sigma2");
    auto law = ErrorLaw::by_name(name, s2);
    if (!law) throw DomainError("unknown error law '" + name + "'");
    return *law;
}

AlphaRule parse_alpha_rule(const std::string& s) {
    AlphaRule rule;
    if (s == "sqrt") {
        rule.kind = AlphaRule::Kind::power;
        rule.s = 0.5;
    } else if (s == "log") {
        rule.kind = AlphaRule::Kind::logarithmic;
    } else if (s.rfind("pow:", 0) == 0) {
        rule.kind = AlphaRule::Kind::power;
        try {
            std::size_t pos = 0;
            rule.s = std::stod(s.substr(4), &pos);
            if (pos != s.size() - 4) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw UsageError("--alpha: expected pow:S with numeric S");
        }
    } else if (s.rfind("table:", 0) == 0) {
        rule.kind = AlphaRule::Kind::table;
        rule.table = parse_double_list(s.substr(6), "--alpha");
    } else {
        throw UsageError("--alpha: expected sqrt, log, pow:S or table:V1,V2,...");
    }
    return rule;
}

Eigen::VectorXd make_alpha(const std::vector<double>& v, int p) {
    if (v.empty()) return Eigen::VectorXd::Ones(p);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct OutputOpts {
    std::string format;
    std::string output = "-";
};

void check_format(const OutputOpts& out, std::initializer_list<const char*> allowed,
                  const std::string& cmd) {
    for (const char* a : allowed)
        if (out.format == a) return;
    std::string msg = cmd + ": format must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw UsageError(msg);
}

// ---------------------------------------------------------------------------
// partitions

struct PartitionsCfg {
    int r = 0;
    OutputOpts out{"text"};
};

json partitions_to_json(const PartitionsCfg& c) {
    return {{"command", "partitions"},
            {"r", c.r},
            {"format", c.out.format},
            {"output", c.out.output}};
}

PartitionsCfg partitions_from_json(const json& j) {
    PartitionsCfg c;
    c.r = j.at("r").get<int>();
    c.out.format = j.value("format", "text");
    c.out.output = j.value("output", "-");
    if (c.r < 2) throw UsageError("partitions: r must be >= 2");
    check_format(c.out, {"text", "json"}, "partitions");
    return c;
}

std::string partition_label(const Partition& p) {
    std::string s = "(";
    for (int i = 0; i < p.length(); ++i) {
        if (i) s += ",";
        s += std::to_string(p.parts()[i]);
    }
    return s + ")";
}

std::string symbolic_coefficient(const Partition& p) {
    BigInt w = partition_weight(p);
    std::string s = w == 1 ? std::string() : w.str();
    s += "n";
    for (int i = 1; i < p.length(); ++i) s += "(n-" + std::to_string(i) + ")";
    return s;
}

int run_partitions(const PartitionsCfg& c) {
    auto parts = partitions_min2(c.r);
    if (c.out.format == "json") {
        json rows = json::array();
        for (const Partition& p : parts)
            rows.push_back({{"partition", p.parts()},
                            {"weight", partition_weight(p).str()},
                            {"coefficient", symbolic_coefficient(p)}});
        write_output(c.out.output, json_text({{"schema", 1}, {"r", c.r}, {"rows", rows}}));
    } else {
        std::ostringstream os;
        for (const Partition& p : parts)
            os << partition_label(p) << ": coeff " << symbolic_coefficient(p) << "\n";
        write_output(c.out.output, os.str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// moment

struct MomentCfg {
    int r = 0;
    std::uint64_t n = 0;
    std::string profile;
    std::string moments;
    OutputOpts out{"text"};
};

json moment_to_json(const MomentCfg& c) {
    json j{{"command", "moment"},
           {"r", c.r},
           {"n", c.n},
           {"format", c.out.format},
           {"output", c.out.output}};
    if (!c.profile.empty()) j["profile"] = c.profile;
    if (!c.moments.empty()) j["moments"] = c.moments;
    return j;
}

MomentCfg moment_from_json(const json& j) {
    MomentCfg c;
    c.r = j.at("r").get<int>();
    c.n = j.value("n", std::uint64_t{0});
    c.profile = j.value("profile", "");
    c.moments = j.value("moments", "");
    c.out.format = j.value("format", "text");
    c.out.output = j.value("output", "-");
    if (c.r < 1) throw UsageError("moment: r must be >= 1");
    check_format(c.out, {"text", "json"}, "moment");
    return c;
}

std::string moment_exact_str(const HalfPowerMoment& z) {
    if (z.half_exponent == 0) return z.exact().str();
    try {
        return (z.coeff * sqrt_rat(Rat(1) / Rat(z.n))).str();
    } catch (const DomainError&) {
        return z.coeff.str() + " * " + std::to_string(z.n) + "^(-1/2)";
    }
}

int run_moment(const MomentCfg& c) {
    MomentProfile prof = resolve_profile(c.profile, c.moments);
    prof.require_order(c.r);
    if (c.n == 0) throw UsageError("moment: --n is required");
    HalfPowerMoment z = moment_Z(c.r, c.n, prof);
    std::string exact = moment_exact_str(z);
    if (c.out.format == "json") {
        json doc{{"schema", 1},     {"r", c.r},
                 {"n", c.n},        {"profile", prof.name()},
                 {"exact", exact},  {"value", z.value()}};
        write_output(c.out.output, json_text(doc));
    } else {
        std::ostringstream os;
        os << "exact = " << exact << "\n";
        os << "float = " << fmt_double(z.value()) << "\n";
        write_output(c.out.output, os.str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// limits

struct LimitsCfg {
    int kmax = 3;
    std::string parity = "both";
    std::string profile;
    std::string moments;
    OutputOpts out{"text"};
};

json limits_to_json(const LimitsCfg& c) {
    json j{{"command", "limits"},
           {"kmax", c.kmax},
           {"parity", c.parity},
           {"format", c.out.format},
           {"output", c.out.output}};
    if (!c.profile.empty()) j["profile"] = c.profile;
    if (!c.moments.empty()) j["moments"] = c.moments;
    return j;
}

LimitsCfg limits_from_json(const json& j) {
    LimitsCfg c;
    c.kmax = j.at("kmax").get<int>();
    c.parity = j.value("parity", "both");
    c.profile = j.value("profile", "");
    c.moments = j.value("moments", "");
    c.out.format = j.value("format", "text");
    c.out.output = j.value("output", "-");
    if (c.kmax < 1) throw UsageError("limits: kmax must be >= 1");
    if (c.parity != "even" && c.parity != "odd" && c.parity != "both")
        throw UsageError("limits: parity must be even, odd or both");
    check_format(c.out, {"text", "json"}, "limits");
    return c;
}

int run_limits(const LimitsCfg& c) {
    MomentProfile prof = resolve_profile(c.profile, c.moments);
    struct Row {
        int k;
        const char* parity;
        SqrtRat derived;
        SqrtRat alt;
    };
    std::vector<Row> rows;
    for (int k = 1; k <= c.kmax; ++k) {
        if (c.parity != "odd") rows.push_back({k, "even", limit_even(k, prof), limit_even_alt(k, prof)});
        if (c.parity != "even") rows.push_back({k, "odd", limit_odd(k, prof), limit_odd_closed(k, prof)});
    }
    if (c.out.format == "json") {
        json jrows = json::array();
        for (const Row& row : rows)
            jrows.push_back({{"k", row.k},
                             {"parity", row.parity},
                             {"derived", row.derived.str()},
                             {"alt", row.alt.str()},
                             {"derived_value", row.derived.value()},
                             {"alt_value", row.alt.value()}});
        write_output(c.out.output,
                     json_text({{"schema", 1}, {"profile", prof.name()}, {"rows", jrows}}));
    } else {
        std::ostringstream os;
        os << std::left << std::setw(4) << "k" << std::setw(8) << "parity" << std::setw(24)
           << "derived" << "alt" << "\n";
        for (const Row& row : rows)
            os << std::left << std::setw(4) << row.k << std::setw(8) << row.parity
               << std::setw(24) << row.derived.str() << row.alt.str() << "\n";
        write_output(c.out.output, os.str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// shared design flags (rate, simulate)

struct DesignFlags {
    std::string family = "canonical";
    int p = 1;
    std::uint64_t seed = 1;
    double c = 1.0;
    double a = 0.0;
    double q = 1.0;
    std::string alpha_rule = "sqrt";
    std::string column_law = "normal";
    bool intercept = false;
};

Design build_design(const DesignFlags& f, std::uint64_t n) {
    if (n < 2) throw UsageError("--n (an integer >= 2) is required");
    if (f.family == "canonical") return canonical_design(n);
    if (f.family == "convergent") return convergent_design(n, f.c, f.a, f.q);
    if (f.family == "prop1") return prop1_design(n, parse_alpha_rule(f.alpha_rule));
    if (f.family == "prop2") return prop2_design(n, f.a);
    if (f.family == "iid_random")
        return iid_random_design(n, f.p, column_law_from_name(f.column_law), f.seed, f.intercept);
    throw UsageError("unknown design family '" + f.family + "'");
}

void add_design_flags(CLI::App* sub, DesignFlags& f) {
    sub->add_option("--design", f.family, "design family: canonical, convergent, prop1, prop2, iid_random");
    sub->add_option("--p", f.p, "number of regressors (iid_random)")->check(CLI::Range(1, 64));
    sub->add_option("--design-seed", f.seed, "seed for iid_random column draws");
    sub->add_option("--c", f.c, "convergent design: limit value c");
    sub->add_option("--a", f.a, "convergent design offset / prop2 exponent a");
    sub->add_option("--q", f.q, "convergent design decay power q");
    sub->add_option("--alpha-rule", f.alpha_rule, "prop1 weight rule: sqrt, log, pow:S, table:V1,...");
    sub->add_option("--column-law", f.column_law, "iid_random column law")
        ->check(CLI::IsMember({"normal", "uniform", "rademacher"}));
    sub->add_flag("--intercept", f.intercept, "iid_random: make column 0 a constant");
}

// ---------------------------------------------------------------------------
// rate

struct RateCfg {
    int r = 0;
    std::string profile;
    std::string moments;
    std::optional<json> design;
    std::string law = "normal";
    std::string sigma2 = "1";
    std::vector<double> alpha;
    std::vector<std::uint64_t> ngrid;
    std::string scale = "auto";
    std::uint64_t mc_reps = 0;
    std::uint64_t seed = 0;
    int threads = default_threads();
    std::string fit_path;
    OutputOpts out{"csv"};
};

json rate_to_json(const RateCfg& c) {
    json j{{"command", "rate"}, {"r", c.r},           {"ngrid", c.ngrid},
           {"scale", c.scale},  {"mc_reps", c.mc_reps}, {"seed", c.seed},
           {"threads", c.threads}, {"format", c.out.format}, {"output", c.out.output}};
    if (!c.profile.empty()) j["profile"] = c.profile;
    if (!c.moments.empty()) j["moments"] = c.moments;
    if (c.design) {
        j["design"] = *c.design;
        j["law"] = c.law;
        j["sigma2"] = c.sigma2;
        if (!c.alpha.empty()) j["alpha"] = c.alpha;
    }
    if (!c.fit_path.empty()) j["fit"] = c.fit_path;
    return j;
}

RateCfg rate_from_json(const json& j) {
    RateCfg c;
    c.r = j.at("r").get<int>();
    c.profile = j.value("profile", "");
    c.moments = j.value("moments", "");
    if (j.contains("design")) {
        c.design = j.at("design");
        c.law = j.value("law", "normal");
        c.sigma2 = j.value("sigma2", "1");
        if (j.contains("alpha")) c.alpha = j.at("alpha").get<std::vector<double>>();
    }
    c.ngrid = j.at("ngrid").get<std::vector<std::uint64_t>>();
    c.scale = j.value("scale", "auto");
    c.mc_reps = j.value("mc_reps", std::uint64_t{0});
    c.seed = j.value("seed", std::uint64_t{0});
    c.threads = j.value("threads", default_threads());
    c.fit_path = j.value("fit", "");
    c.out.format = j.value("format", "csv");
    c.out.output = j.value("output", "-");
    if (c.r < 1) throw UsageError("rate: r must be >= 1");
    if (c.ngrid.empty()) throw UsageError("rate: ngrid must be nonempty");
    check_format(c.out, {"csv", "json"}, "rate");
    return c;
}

void apply_scale(RateTable& t, const Rat& s) {
    t.scaling_exponent = s;
    double sv = to_double(s);
    for (RateRow& row : t.rows) {
        row.scaled = std::pow(static_cast<double>(row.n), sv) * row.delta;
        row.scaled_exact.reset();
    }
}

json rate_rows_json(const RateTable& t) {
    json rows = json::array();
    for (const RateRow& row : t.rows) {
        json r{{"n", row.n}, {"delta", row.delta}};
        if (row.scaled) r["scaled"] = *row.scaled;
        if (row.std_error) r["std_error"] = *row.std_error;
        if (row.delta_exact) r["delta_exact"] = row.delta_exact->str();
        if (row.scaled_exact) r["scaled_exact"] = row.scaled_exact->str();
        rows.push_back(r);
    }
    return rows;
}

int run_rate(const RateCfg& c) {
    RateTable t;
    if (c.design) {
        Design base = design_from_json(*c.design);
        XiSpec spec(base, make_alpha(c.alpha, base.p), resolve_law(c.law, c.sigma2));
        t = c.mc_reps > 0
                ? delta_sequence_mc(spec, c.r, c.ngrid, c.mc_reps, c.seed, c.threads)
                : delta_sequence_xi(spec, c.r, c.ngrid);
    } else {
        MomentProfile prof = resolve_profile(c.profile, c.moments);
        t = delta_sequence(c.r, prof, c.ngrid);
    }
    if (c.scale != "auto") apply_scale(t, parse_rat_flag(c.scale, "--scale"));
    std::optional<RateFit> fit;
    if (!c.fit_path.empty() || c.out.format == "json") {
        try {
            fit = loglog_slope(t);
        } catch (const DomainError&) {
            if (!c.fit_path.empty()) throw;
        }
    }
    if (c.out.format == "json") {
        json doc{{"schema", 1},
                 {"r", c.r},
                 {"source", t.source == RateSource::mc ? "mc" : "exact"},
                 {"scaling_exponent", to_string(t.scaling_exponent)},
                 {"identically_zero", t.identically_zero},
                 {"rows", rate_rows_json(t)},
                 {"fit", fit ? rate_fit_json(*fit) : json()}};
        write_output(c.out.output, json_text(doc));
    } else {
        write_output(c.out.output, rate_table_csv(t));
    }
    if (!c.fit_path.empty()) write_output(c.fit_path, json_text(rate_fit_json(*fit)));
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateCfg {
    json spec;
    std::vector<int> orders;
    std::uint64_t reps = 10000;
    std::uint64_t seed = 0;
    int threads = default_threads();
    OutputOpts out{"json"};
};

json simulate_to_json(const SimulateCfg& c) {
    return {{"command", "simulate"}, {"spec", c.spec},       {"orders", c.orders},
            {"reps", c.reps},        {"seed", c.seed},       {"threads", c.threads},
            {"format", c.out.format}, {"output", c.out.output}};
}

SimulateCfg simulate_from_json(const json& j) {
    SimulateCfg c;
    c.spec = j.at("spec");
    c.orders = j.at("orders").get<std::vector<int>>();
    c.reps = j.value("reps", std::uint64_t{10000});
    c.seed = j.value("seed", std::uint64_t{0});
    c.threads = j.value("threads", default_threads());
    c.out.format = j.value("format", "json");
    c.out.output = j.value("output", "-");
    if (c.orders.empty()) throw UsageError("simulate: at least one --r is required");
    for (int r : c.orders)
        if (r < 1) throw UsageError("simulate: orders must be >= 1");
    check_format(c.out, {"json"}, "simulate");
    return c;
}

int run_simulate(const SimulateCfg& c) {
    XiSpec spec = xi_spec_from_json(c.spec);
    auto estimates = mc_xi_moments(spec, c.orders, c.reps, c.seed, c.threads);
    json doc = mc_result_json(spec, c.orders, estimates, c.reps, c.seed, iso_timestamp());
    write_output(c.out.output, json_text(doc));
    return 0;
}

// ---------------------------------------------------------------------------
// adversarial

struct AdvCfg {
    int prop = 0;
    std::string alpha = "sqrt";
    std::vector<std::uint64_t> ngrid;
    std::string sigma2 = "1";
    double threshold = 10.0;
    double a = 0.0;
    bool a_set = false;
    double mu3 = 0.0;
    bool mu3_set = false;
    OutputOpts out{"csv"};
};

json adversarial_to_json(const AdvCfg& c) {
    json j{{"command", "adversarial"},
           {"prop", c.prop},
           {"ngrid", c.ngrid},
           {"format", c.out.format},
           {"output", c.out.output}};
    if (c.prop == 1) {
        j["alpha"] = c.alpha;
        j["sigma2"] = c.sigma2;
        j["threshold"] = c.threshold;
    } else {
        if (c.a_set) j["a"] = c.a;
        if (c.mu3_set) j["mu3"] = c.mu3;
    }
    return j;
}

AdvCfg adversarial_from_json(const json& j) {
    AdvCfg c;
    c.prop = j.at("prop").get<int>();
    c.ngrid = j.at("ngrid").get<std::vector<std::uint64_t>>();
    c.alpha = j.value("alpha", "sqrt");
    c.sigma2 = j.value("sigma2", "1");
    c.threshold = j.value("threshold", 10.0);
    if (j.contains("a")) {
        c.a = j.at("a").get<double>();
        c.a_set = true;
    }
    if (j.contains("mu3")) {
        c.mu3 = j.at("mu3").get<double>();
        c.mu3_set = true;
    }
    c.out.format = j.value("format", "csv");
    c.out.output = j.value("output", "-");
    if (c.prop != 1 && c.prop != 2) throw UsageError("adversarial: prop must be 1 or 2");
    if (c.ngrid.empty()) throw UsageError("adversarial: --n or --ngrid is required");
    check_format(c.out, {"csv", "json"}, "adversarial");
    return c;
}

int run_adversarial(const AdvCfg& c) {
    if (c.prop == 1) {
        auto report = prop1_divergence_report(
            parse_alpha_rule(c.alpha), c.ngrid,
            to_double(parse_rat_flag(c.sigma2, "--sigma2")), c.threshold);
        write_output(c.out.output, c.out.format == "json" ? json_text(prop1_report_json(report))
                                                          : prop1_report_csv(report));
    } else {
        if (!c.a_set) throw UsageError("adversarial: --prop 2 requires --a");
        if (!c.mu3_set) throw UsageError("adversarial: --prop 2 requires --mu3");
        auto report = prop2_divergence_report(c.a, c.ngrid, c.mu3);
        write_output(c.out.output, c.out.format == "json" ? json_text(prop2_report_json(report))
                                                          : prop2_report_csv(report));
    }
    return 0;
}

// ---------------------------------------------------------------------------

int dispatch_config(const json& doc) {
    std::string cmd = doc.at("command").get<std::string>();
    if (cmd == "partitions") return run_partitions(partitions_from_json(doc));
    if (cmd == "moment") return run_moment(moment_from_json(doc));
    if (cmd == "limits") return run_limits(limits_from_json(doc));
    if (cmd == "rate") return run_rate(rate_from_json(doc));
    if (cmd == "simulate") return run_simulate(simulate_from_json(doc));
    if (cmd == "adversarial") return run_adversarial(adversarial_from_json(doc));
    throw UsageError("unknown command '" + cmd + "'");
}

json load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot read config file '" + path + "'");
    return json::parse(is);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact and simulated moment rates for standardized sums and "
                 "least-squares functionals"};
    app.require_subcommand(0, 1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration (replaces a subcommand)");

    // partitions
    auto* sub_part = app.add_subcommand("partitions", "list J(r) with symbolic coefficients");
    PartitionsCfg part_cfg;
    sub_part->add_option("--r", part_cfg.r, "moment order")->required()->check(CLI::Range(2, 62));
    sub_part->add_option("--format", part_cfg.out.format)->check(CLI::IsMember({"text", "json"}));
    sub_part->add_option("--output", part_cfg.out.output, "output path or -");

    // moment
    auto* sub_mom = app.add_subcommand("moment", "exact E(Z_n^r) for a moment profile");
    MomentCfg mom_cfg;
    sub_mom->add_option("--r", mom_cfg.r, "moment order")->required()->check(CLI::Range(1, 64));
    sub_mom->add_option("--n", mom_cfg.n, "sample size");
    sub_mom->add_option("--profile", mom_cfg.profile,
                        "named profile: normal, uniform, exp1, rademacher, bern(Q)");
    sub_mom->add_option("--moments", mom_cfg.moments, "inline standardized moments, e.g. m3=2,m4=9");
    sub_mom->add_option("--format", mom_cfg.out.format)->check(CLI::IsMember({"text", "json"}));
    sub_mom->add_option("--output", mom_cfg.out.output, "output path or -");

    // limits
    auto* sub_lim = app.add_subcommand("limits", "scaled limit constants by order");
    LimitsCfg lim_cfg;
    sub_lim->add_option("--kmax", lim_cfg.kmax, "largest k")->check(CLI::Range(1, 8));
    sub_lim->add_option("--parity", lim_cfg.parity)->check(CLI::IsMember({"even", "odd", "both"}));
    sub_lim->add_option("--profile", lim_cfg.profile, "named profile");
    sub_lim->add_option("--moments", lim_cfg.moments, "inline standardized moments");
    sub_lim->add_option("--format", lim_cfg.out.format)->check(CLI::IsMember({"text", "json"}));
    sub_lim->add_option("--output", lim_cfg.out.output, "output path or -");

    // rate
    auto* sub_rate = app.add_subcommand("rate", "delta sequence and log-log rate fit");
    RateCfg rate_cfg;
    DesignFlags rate_design;
    std::string rate_ngrid = "16:16384:x2";
    std::string rate_alpha;
    bool rate_has_design = false;
    sub_rate->add_option("--r", rate_cfg.r, "moment order")->required()->check(CLI::Range(1, 64));
    sub_rate->add_option("--profile", rate_cfg.profile, "named profile (sum path)");
    sub_rate->add_option("--moments", rate_cfg.moments, "inline standardized moments (sum path)");
    add_design_flags(sub_rate, rate_design);
    sub_rate->get_option("--design")->each([&](const std::string&) { rate_has_design = true; });
    sub_rate->add_option("--law", rate_cfg.law, "error law (design path)");
    sub_rate->add_option("--sigma2", rate_cfg.sigma2, "error variance (exact rational)");
    sub_rate->add_option("--alpha", rate_alpha, "functional coefficients, comma separated");
    sub_rate->add_option("--ngrid", rate_ngrid, "grid: START:LIMIT:xFACTOR or N1,N2,...");
    sub_rate->add_option("--scale", rate_cfg.scale, "scaling exponent (rational) or auto");
    sub_rate->add_option("--mc", rate_cfg.mc_reps, "Monte Carlo replications (0 = exact)");
    sub_rate->add_option("--seed", rate_cfg.seed, "Monte Carlo seed");
    sub_rate->add_option("--threads", rate_cfg.threads, "worker threads");
    sub_rate->add_option("--fit", rate_cfg.fit_path, "write the rate fit JSON to this path");
    sub_rate->add_option("--format", rate_cfg.out.format)->check(CLI::IsMember({"csv", "json"}));
    sub_rate->add_option("--output", rate_cfg.out.output, "output path or -");

    // simulate
    auto* sub_sim = app.add_subcommand("simulate", "Monte Carlo moments of the OLS functional");
    SimulateCfg sim_cfg;
    DesignFlags sim_design;
    std::uint64_t sim_n = 0;
    std::string sim_law = "normal", sim_sigma2 = "1", sim_alpha, sim_beta;
    sub_sim->add_option("--n", sim_n, "sample size")->required();
    add_design_flags(sub_sim, sim_design);
    sub_sim->add_option("--law", sim_law, "error law: normal, uniform, exp1, rademacher, bern(Q)");
    sub_sim->add_option("--sigma2", sim_sigma2, "error variance (exact rational)");
    sub_sim->add_option("--alpha", sim_alpha, "functional coefficients (default: all ones)");
    sub_sim->add_option("--beta", sim_beta, "true coefficient vector (default: zeros)");
    sub_sim->add_option("--r", sim_cfg.orders, "moment order (repeatable)")->required();
    sub_sim->add_option("--reps", sim_cfg.reps, "Monte Carlo replications");
    sub_sim->add_option("--seed", sim_cfg.seed, "Monte Carlo seed");
    sub_sim->add_option("--threads", sim_cfg.threads, "worker threads");
    sub_sim->add_option("--format", sim_cfg.out.format)->check(CLI::IsMember({"json"}));
    sub_sim->add_option("--output", sim_cfg.out.output, "output path or -");

    // adversarial
    auto* sub_adv = app.add_subcommand("adversarial", "counterexample design divergence reports");
    AdvCfg adv_cfg;
    std::uint64_t adv_n = 0;
    std::string adv_ngrid;
    auto* adv_a_opt = sub_adv->add_option("--a", adv_cfg.a, "prop2 sparsity exponent in (0, 1/2)");
    auto* adv_mu3_opt = sub_adv->add_option("--mu3", adv_cfg.mu3, "prop2 third error moment");
    sub_adv->add_option("--prop", adv_cfg.prop, "which construction")->required()->check(CLI::Range(1, 2));
    sub_adv->add_option("--alpha", adv_cfg.alpha, "prop1 weight rule: sqrt, log, pow:S, table:...");
    sub_adv->add_option("--n", adv_n, "single grid point");
    sub_adv->add_option("--ngrid", adv_ngrid, "grid: START:LIMIT:xFACTOR or N1,N2,...");
    sub_adv->add_option("--sigma2", adv_cfg.sigma2, "prop1 error variance");
    sub_adv->add_option("--threshold", adv_cfg.threshold, "prop1 escape multiple");
    sub_adv->add_option("--format", adv_cfg.out.format)->check(CLI::IsMember({"csv", "json"}));
    sub_adv->add_option("--output", adv_cfg.out.output, "output path or -");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        json doc;
        if (!config_path.empty()) {
            if (!app.get_subcommands().empty())
                throw UsageError("--config and a subcommand are mutually exclusive");
            doc = load_config(config_path);
        } else if (sub_part->parsed()) {
            doc = partitions_to_json(part_cfg);
        } else if (sub_mom->parsed()) {
            doc = moment_to_json(mom_cfg);
        } else if (sub_lim->parsed()) {
            doc = limits_to_json(lim_cfg);
        } else if (sub_rate->parsed()) {
            rate_cfg.ngrid = parse_ngrid(rate_ngrid);
            if (!rate_alpha.empty()) rate_cfg.alpha = parse_double_list(rate_alpha, "--alpha");
            if (rate_has_design) {
                if (!rate_cfg.profile.empty() || !rate_cfg.moments.empty())
                    throw UsageError("rate: --design excludes --profile/--moments");
                rate_cfg.design = design_to_json(build_design(rate_design, rate_cfg.ngrid.front()));
            }
            doc = rate_to_json(rate_cfg);
        } else if (sub_sim->parsed()) {
            Design d = build_design(sim_design, sim_n);
            XiSpec spec(d, make_alpha(sim_alpha.empty()
                                          ? std::vector<double>{}
                                          : parse_double_list(sim_alpha, "--alpha"),
                                      d.p),
                        resolve_law(sim_law, sim_sigma2));
            if (!sim_beta.empty()) {
                auto bv = parse_double_list(sim_beta, "--beta");
                if (bv.size() != static_cast<std::size_t>(d.p))
                    throw DomainError("simulate: --beta dimension mismatch");
                spec.beta_true = Eigen::Map<const Eigen::VectorXd>(
                    bv.data(), static_cast<Eigen::Index>(bv.size()));
            }
            sim_cfg.spec = xi_spec_to_json(spec);
            doc = simulate_to_json(sim_cfg);
        } else if (sub_adv->parsed()) {
            adv_cfg.a_set = adv_a_opt->count() > 0;
            adv_cfg.mu3_set = adv_mu3_opt->count() > 0;
            if (!adv_ngrid.empty() && adv_n != 0)
                throw UsageError("adversarial: --n and --ngrid are mutually exclusive");
            if (!adv_ngrid.empty())
                adv_cfg.ngrid = parse_ngrid(adv_ngrid);
            else if (adv_n != 0)
                adv_cfg.ngrid = {adv_n};
            doc = adversarial_to_json(adv_cfg);
        } else {
            std::cerr << app.help();
            return 2;
        }
        return dispatch_config(doc);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return 2;
    } catch (const InsufficientMomentsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

#pragma once

#include <momrate/exact.hpp>
#include <momrate/profiles.hpp>
#include <momrate/rng.hpp>

#include <cmath>
#include <map>
#include <optional>
#include <string>

namespace momrate {

enum class LawKind { normal, uniform, centered_exponential, rademacher, centered_bernoulli };

/**
 * @brief Samplable centered error distribution with exact closed-form moments.
 *
 * Each law couples an inverse-CDF sampler (bit-reproducible given a stream)
 * with a MomentProfile holding its central moments as exact rationals. The
 * symmetric laws accept any rational variance; the skewed ones constrain
 * their scale so the odd central moments stay rational.
 */
class ErrorLaw {
public:
    /// N(0, sigma2).
    static ErrorLaw normal(const Rat& sigma2 = 1, int R = 8) {
        std::map<int, Rat> m;
        for (int nu = 2; nu <= R; nu += 2)
            m[nu] = pow_rat(sigma2, nu / 2) * Rat(double_factorial_odd(nu / 2));
        ErrorLaw law(LawKind::normal, sigma2,
                     MomentProfile::from_central("normal", sigma2, R, m));
        law.scale_ = std::sqrt(to_double(sigma2));
        return law;
    }

    /// Uniform on (-s, s) with s = sqrt(3 sigma2); mu_nu = s^nu/(nu+1).
    static ErrorLaw uniform(const Rat& sigma2 = 1, int R = 8) {
        std::map<int, Rat> m;
        for (int nu = 2; nu <= R; nu += 2)
            m[nu] = pow_rat(3 * sigma2, nu / 2) / (nu + 1);
        ErrorLaw law(LawKind::uniform, sigma2,
                     MomentProfile::from_central("uniform", sigma2, R, m));
        law.scale_ = std::sqrt(3.0 * to_double(sigma2));
        return law;
    }

    /// sigma (Exp(1) - 1): variance sigma^2, skewness 2, kurtosis 9. The odd
    /// central moments carry sigma^odd, so the scale itself must be rational.
    static ErrorLaw centered_exponential(const Rat& sigma = 1, int R = 8) {
        if (sigma <= 0) throw DomainError("centered_exponential: sigma must be positive");
        MomentProfile unit = profiles::exp1(R);
        std::map<int, Rat> m;
        for (int nu = 2; nu <= R; ++nu) m[nu] = pow_rat(sigma, nu) * unit.central(nu);
        ErrorLaw law(LawKind::centered_exponential, sigma * sigma,
                     MomentProfile::from_central("exp1", sigma * sigma, R, m));
        law.scale_ = to_double(sigma);
        return law;
    }

    /// Fair sign flip of magnitude sqrt(sigma2).
    static ErrorLaw rademacher(const Rat& sigma2 = 1, int R = 8) {
        std::map<int, Rat> m;
        for (int nu = 2; nu <= R; nu += 2) m[nu] = pow_rat(sigma2, nu / 2);
        ErrorLaw law(LawKind::rademacher, sigma2,
                     MomentProfile::from_central("rademacher", sigma2, R, m));
        law.scale_ = std::sqrt(to_double(sigma2));
        return law;
    }

    /// Bernoulli(q) - q on its natural scale; variance q(1-q).
    static ErrorLaw centered_bernoulli(const Rat& q, int R = 8) {
        if (q <= 0 || q >= 1) throw DomainError("centered_bernoulli: q must be in (0,1)");
        ErrorLaw law(LawKind::centered_bernoulli, q * (1 - q), profiles::bernoulli(q, R));
        law.q_ = q;
        law.scale_ = to_double(q);
        return law;
    }

    /// CLI-style lookup: normal, uniform, exp1, rademacher, bern(Q); the long
    /// kind names are accepted as aliases.
    static std::optional<ErrorLaw> by_name(const std::string& name, const Rat& sigma2 = 1,
                                           int R = 8) {
        if (name == "normal") return normal(sigma2, R);
        if (name == "uniform") return uniform(sigma2, R);
        if (name == "exp1" || name == "centered_exponential") {
            BigInt num, den;
            if (!perfect_square(boost::multiprecision::numerator(sigma2), &num) ||
                !perfect_square(boost::multiprecision::denominator(sigma2), &den))
                throw DomainError("exp1 law: sigma2 must be a perfect rational square");
            return centered_exponential(Rat(num, den), R);
        }
        if (name == "rademacher") return rademacher(sigma2, R);
        if (name.rfind("bern(", 0) == 0 && name.back() == ')') {
            if (sigma2 != 1)
                throw DomainError("bern(q) law uses its natural variance q(1-q)");
            return centered_bernoulli(parse_rat(name.substr(5, name.size() - 6)), R);
        }
        return std::nullopt;
    }

    LawKind kind() const { return kind_; }
    const Rat& sigma2() const { return sigma2_; }
    const MomentProfile& profile() const { return profile_; }
    const std::string& name() const { return profile_.name(); }

    /// One draw; consumes exactly one uniform from the stream.
    double sample(RngStream& stream) const {
        double u = stream.next_u01();
        switch (kind_) {
            case LawKind::normal:
                return scale_ * inverse_normal_cdf(u);
            case LawKind::uniform:
                return scale_ * (2.0 * u - 1.0);
            case LawKind::centered_exponential:
                return scale_ * (-std::log(u) - 1.0);
            case LawKind::rademacher:
                return u < 0.5 ? -scale_ : scale_;
            case LawKind::centered_bernoulli:
                return (u < scale_ ? 1.0 : 0.0) - scale_;
        }
        throw DomainError("ErrorLaw: bad kind");
    }

private:
    ErrorLaw(LawKind kind, const Rat& sigma2, MomentProfile profile)
        : kind_(kind), sigma2_(sigma2), profile_(std::move(profile)) {}

    LawKind kind_;
    Rat sigma2_;
    Rat q_ = 0;
    double scale_ = 1.0;  // sampling scale: sigma, half-width, or q
    MomentProfile profile_;
};

}  // namespace momrate

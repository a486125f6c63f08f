#pragma once

#include <momrate/combinatorics.hpp>
#include <momrate/exact.hpp>

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace momrate {

/**
 * @brief Exact moment data for a centered error distribution.
 *
 * Stores the variance and the central moments mu_2..mu_R as rationals, and
 * serves standardized moments mu_nu / sigma^nu exactly. With an irrational
 * sigma (rational sigma^2 that is not a perfect square) the odd standardized
 * moments live in the quadratic extension Q(sqrt(sigma^2)), which SqrtRat
 * carries without approximation.
 *
 * Construction validates positive variance and positive semidefiniteness of
 * the standardized Hankel matrix [m_{i+j}], the classical necessary condition
 * for a genuine moment sequence; nonsense profiles are rejected up front.
 */
class MomentProfile {
public:
    /// Profile given directly by standardized moments (nu = 3..R); variance 1.
    static MomentProfile from_standardized(std::string name, int R,
                                           const std::map<int, Rat>& std_moments) {
        std::map<int, Rat> central = std_moments;
        central[2] = 1;
        return MomentProfile(std::move(name), Rat(1), R, central);
    }

    /// Profile given by variance and central moments mu_nu (nu = 2..R).
    /// Entries missing from the map are taken as zero.
    static MomentProfile from_central(std::string name, const Rat& sigma2, int R,
                                      const std::map<int, Rat>& central) {
        return MomentProfile(std::move(name), sigma2, R, central);
    }

    const std::string& name() const { return name_; }
    int max_order() const { return R_; }
    const Rat& sigma2() const { return sigma2_; }

    /// Central moment mu_nu; mu_0 = 1, mu_1 = 0.
    Rat central(int nu) const {
        if (nu < 0) throw DomainError("central moment: negative order");
        if (nu == 0) return 1;
        if (nu == 1) return 0;
        require_order(nu);
        return central_[nu];
    }

    /// Standardized moment mu_nu / sigma^nu, exact in Q(sqrt(sigma^2)).
    SqrtRat standardized(int nu) const {
        if (nu < 0) throw DomainError("standardized moment: negative order");
        if (nu == 0) return SqrtRat(1);
        if (nu == 1) return SqrtRat(0);
        require_order(nu);
        const Rat& mu = central_[nu];
        if (nu % 2 == 0) return SqrtRat(mu / pow_rat(sigma2_, nu / 2));
        return SqrtRat(Rat(0), mu / pow_rat(sigma2_, (nu + 1) / 2), sigma2_);
    }

    /// Skewness gamma = mu_3 / sigma^3 (zero when mu_3 = 0).
    SqrtRat skewness() const { return standardized(3); }

    /// gamma^2 = mu_3^2 / sigma^6, always rational.
    Rat skewness_sq() const {
        require_order(3);
        Rat m3 = central_[3];
        return m3 * m3 / pow_rat(sigma2_, 3);
    }

    /// Kurtosis kappa = mu_4 / sigma^4.
    Rat kurtosis() const {
        require_order(4);
        return central_[4] / pow_rat(sigma2_, 2);
    }

    void require_order(int nu) const {
        if (nu > R_)
            throw InsufficientMomentsError("profile '" + name_ + "' carries moments up to order " +
                                           std::to_string(R_) + ", order " + std::to_string(nu) +
                                           " requested");
    }

private:
    MomentProfile(std::string name, const Rat& sigma2, int R, const std::map<int, Rat>& central)
        : name_(std::move(name)), sigma2_(sigma2), R_(R), central_(std::size_t(R) + 1, Rat(0)) {
        if (R_ < 2) throw DomainError("MomentProfile: max order must be >= 2");
        if (sigma2_ <= 0) throw DomainError("MomentProfile: variance must be positive");
        central_[0] = 1;
        for (auto& [nu, mu] : central) {
            if (nu < 2 || nu > R_)
                throw DomainError("MomentProfile: central moment order out of range");
            central_[nu] = mu;
        }
        if (central_[2] != sigma2_)
            throw DomainError("MomentProfile: mu_2 must equal sigma^2");
        validate_hankel();
    }

    void validate_hankel() const {
        int h = R_ / 2;
        Eigen::MatrixXd M(h + 1, h + 1);
        for (int i = 0; i <= h; ++i)
            for (int j = 0; j <= h; ++j) M(i, j) = standardized(i + j).value();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        double scale = std::max(1.0, M.trace());
        if (es.eigenvalues().minCoeff() < -1e-9 * scale)
            throw DomainError("MomentProfile '" + name_ +
                              "': moment sequence fails Hankel positivity");
    }

    std::string name_;
    Rat sigma2_;
    int R_;
    std::vector<Rat> central_;  // index nu
};

namespace profiles {

/// Standard normal: even standardized moments (nu-1)!!, odd zero.
inline MomentProfile normal(int R = 8) {
    std::map<int, Rat> m;
    for (int nu = 4; nu <= R; nu += 2) m[nu] = Rat(double_factorial_odd(nu / 2));
    return MomentProfile::from_standardized("normal", R, m);
}

/// Symmetric uniform: even standardized moments 3^{nu/2} / (nu+1).
inline MomentProfile uniform(int R = 8) {
    std::map<int, Rat> m;
    for (int nu = 4; nu <= R; nu += 2) {
        BigInt p3 = 1;
        for (int i = 0; i < nu / 2; ++i) p3 *= 3;
        m[nu] = Rat(p3, nu + 1);
    }
    return MomentProfile::from_standardized("uniform", R, m);
}

/// Centered unit exponential, Exp(1) - 1. Central moments are the
/// derangement-style sums sum_j C(nu, j) j! (-1)^{nu-j}: 1, 2, 9, 44, 265, ...
inline MomentProfile exp1(int R = 8) {
    std::map<int, Rat> m;
    for (int nu = 3; nu <= R; ++nu) {
        BigInt s = 0;
        for (int j = 0; j <= nu; ++j) {
            BigInt t = binomial(nu, j) * factorial(j);
            s += ((nu - j) % 2 == 0) ? t : -t;
        }
        m[nu] = Rat(s);
    }
    return MomentProfile::from_standardized("exp1", R, m);
}

/// Fair sign flip: even standardized moments 1, odd zero.
inline MomentProfile rademacher(int R = 8) {
    std::map<int, Rat> m;
    for (int nu = 4; nu <= R; nu += 2) m[nu] = 1;
    return MomentProfile::from_standardized("rademacher", R, m);
}

/// Centered Bernoulli(q): mu_nu = q(1-q)^nu + (-q)^nu (1-q), variance q(1-q).
/// Sigma is irrational for most q; standardized moments stay exact via SqrtRat.
inline MomentProfile bernoulli(const Rat& q, int R = 8) {
    if (q <= 0 || q >= 1) throw DomainError("bernoulli profile: q must be in (0,1)");
    std::map<int, Rat> m;
    Rat p = 1 - q;
    for (int nu = 2; nu <= R; ++nu) {
        Rat mu = q * pow_rat(p, nu) + pow_rat(-q, nu) * p;
        m[nu] = mu;
    }
    return MomentProfile::from_central("bern(" + to_string(q) + ")", q * p, R, m);
}

/// Lookup by CLI-style name: normal, uniform, exp1, rademacher, bern(Q)
/// with Q a rational or decimal literal. Returns nullopt for unknown names.
inline std::optional<MomentProfile> by_name(const std::string& name, int R = 8) {
    if (name == "normal") return normal(R);
    if (name == "uniform") return uniform(R);
    if (name == "exp1") return exp1(R);
    if (name == "rademacher") return rademacher(R);
    if (name.rfind("bern(", 0) == 0 && name.back() == ')')
        return bernoulli(parse_rat(name.substr(5, name.size() - 6)), R);
    return std::nullopt;
}

}  // namespace profiles
}  // namespace momrate

#pragma once

#include <momrate/combinatorics.hpp>
#include <momrate/exact.hpp>
#include <momrate/profiles.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

namespace momrate {

/**
 * @brief Exact E(S^r) for S a sum of n iid standardized variables.
 *
 * Expands over partitions of r into parts >= 2: each partition contributes
 * its integer coefficient (weight times falling factorial of n) multiplied by
 * the product of standardized moments of its parts.
 */
inline SqrtRat moment_S(int r, std::uint64_t n, const MomentProfile& profile) {
    if (r < 0) throw DomainError("moment_S: negative order");
    if (r == 0) return SqrtRat(1);
    SqrtRat total(0);
    for (const Partition& p : partitions_min2(r)) {
        SqrtRat term(Rat(expansion_coefficient(p, BigInt(n))));
        for (int part : p.parts()) term *= profile.standardized(part);
        total += term;
    }
    return total;
}

/**
 * @brief Independent oracle for moment_S: direct sum over compositions.
 *
 * Enumerates allocations (j_1,...,j_n) of the r factors to the n summands and
 * sums multinomial(r; j) * prod standardized(j_i). No partition machinery is
 * shared with moment_S. Refuses when the composition count C(n+r-1, r)
 * exceeds 10^7.
 */
inline SqrtRat brute_force_moment_S(int r, std::uint64_t n, const MomentProfile& profile) {
    if (r < 0) throw DomainError("brute_force_moment_S: negative order");
    if (r == 0) return SqrtRat(1);
    BigInt count = binomial(BigInt(n) + r - 1, r);
    if (count > 10'000'000)
        throw DomainError("brute_force_moment_S: " + count.convert_to<std::string>() +
                          " compositions exceed the 10^7 enumeration guard");

    std::vector<SqrtRat> sm(std::size_t(r) + 1, SqrtRat(0));
    for (int q = 0; q <= r; ++q) sm[q] = profile.standardized(q);

    SqrtRat total(0);
    auto rec = [&](auto&& self, std::uint64_t i, int rem, const BigInt& coef,
                   const SqrtRat& prod) -> void {
        if (rem == 0) {
            total += Rat(coef) * prod;
            return;
        }
        if (i == n) return;
        self(self, i + 1, rem, coef, prod);
        // j_i = 1 is skipped: it multiplies in the first moment, which is zero
        for (int j = 2; j <= rem; ++j)
            self(self, i + 1, rem - j, coef * binomial(rem, j), prod * sm[j]);
    };
    rec(rec, 0, r, 1, SqrtRat(1));
    return total;
}

/**
 * @brief Moment of the standardized average Z = S / sqrt(n).
 *
 * E(Z^r) = coeff * n^{half_exponent/2}: for even r the value is exactly
 * rational in the profile's field (half_exponent = 0); for odd r a single
 * factor n^{-1/2} remains (half_exponent = -1), so sqrt(n)-scaled values are
 * exact while the raw value is irrational for most n.
 */
struct HalfPowerMoment {
    SqrtRat coeff;
    int half_exponent = 0;
    std::uint64_t n = 1;

    double value() const {
        return coeff.value() * std::pow(static_cast<double>(n), half_exponent / 2.0);
    }

    /// coeff * n^{(half_exponent + scale_half)/2}, exact when the combined
    /// exponent is an integer.
    SqrtRat scaled_exact(int scale_half) const {
        if (coeff == SqrtRat(0)) return SqrtRat(0);
        int e = half_exponent + scale_half;
        if (e % 2 != 0)
            throw DomainError("HalfPowerMoment: scaled value keeps a half power of n");
        return coeff * pow_rat(Rat(n), e / 2);
    }

    SqrtRat exact() const { return scaled_exact(0); }
};

inline HalfPowerMoment moment_Z(int r, std::uint64_t n, const MomentProfile& profile) {
    if (n == 0) throw DomainError("moment_Z: n must be positive");
    HalfPowerMoment out;
    out.n = n;
    out.half_exponent = (r % 2 == 0) ? 0 : -1;
    out.coeff = moment_S(r, n, profile) / pow_rat(Rat(n), r / 2);
    return out;
}

/// E(N(0,1)^r): (r-1)!! for even r, zero for odd.
inline BigInt gaussian_moment(int r) {
    if (r < 0) throw DomainError("gaussian_moment: negative order");
    if (r % 2 != 0) return 0;
    return double_factorial_odd(r / 2);
}

/**
 * @brief E(S^r) as an exact polynomial in n.
 *
 * Returns coefficients c[0..floor(r/2)] with E(S^r) = sum_j c[j] n^j,
 * obtained by expanding each falling factorial (n)_m through the signed
 * Stirling numbers of the first kind.
 */
inline std::vector<SqrtRat> sum_moment_polynomial(int r, const MomentProfile& profile) {
    if (r < 0) throw DomainError("sum_moment_polynomial: negative order");
    std::vector<SqrtRat> coeffs(std::size_t(r / 2) + 1, SqrtRat(0));
    if (r == 0) {
        coeffs[0] = SqrtRat(1);
        return coeffs;
    }
    for (const Partition& p : partitions_min2(r)) {
        SqrtRat factor(Rat(partition_weight(p)));
        for (int part : p.parts()) factor *= profile.standardized(part);
        auto ff = falling_factorial_coeffs(p.length());
        for (std::size_t j = 0; j < ff.size(); ++j) coeffs[j] += Rat(ff[j]) * factor;
    }
    return coeffs;
}

/**
 * @brief Limit of n * (E(Z^{2k}) - (2k-1)!!), read off the exact polynomial.
 *
 * E(Z^{2k}) = P(n)/n^k with P = sum_moment_polynomial(2k); the leading
 * coefficient is (2k-1)!! and the correction is the n^{k-1} coefficient.
 * Closed form: k(k-1)(2k-1)!! (kappa/6 + (k-2) gamma^2 / 9 - 1/2).
 */
inline SqrtRat limit_even(int k, const MomentProfile& profile) {
    if (k < 1) throw DomainError("limit_even: k must be >= 1");
    auto poly = sum_moment_polynomial(2 * k, profile);
    if (poly[std::size_t(k)] != SqrtRat(Rat(double_factorial_odd(k))))
        throw NumericError("limit_even: leading coefficient is not (2k-1)!!");
    return poly[std::size_t(k) - 1];
}

/// Variant even-limit constant with kappa/3 in place of kappa/6; appears in
/// the literature but fails the normal-profile zero check for k >= 2. Kept
/// for side-by-side reporting.
inline SqrtRat limit_even_alt(int k, const MomentProfile& profile) {
    if (k < 1) throw DomainError("limit_even_alt: k must be >= 1");
    Rat factor = Rat(k) * (k - 1) * Rat(double_factorial_odd(k));
    Rat inner = profile.kurtosis() / 3 + Rat(k - 2) * profile.skewness_sq() / 9 - Rat(1, 2);
    return SqrtRat(factor * inner);
}

/// Limit of sqrt(n) * E(Z^{2k+1}): the n^k coefficient of E(S^{2k+1}).
inline SqrtRat limit_odd(int k, const MomentProfile& profile) {
    if (k < 1) throw DomainError("limit_odd: k must be >= 1");
    auto poly = sum_moment_polynomial(2 * k + 1, profile);
    return poly[std::size_t(k)];
}

/// Closed form k(2k+1)(2k-1)!!/3 * gamma for the odd limit; agrees with
/// limit_odd for every profile.
inline SqrtRat limit_odd_closed(int k, const MomentProfile& profile) {
    if (k < 1) throw DomainError("limit_odd_closed: k must be >= 1");
    Rat factor = Rat(k) * (2 * k + 1) * Rat(double_factorial_odd(k)) / 3;
    return factor * profile.skewness();
}

namespace detail {

/// Augmented monomial symmetric sum from power sums: for exponents lam,
/// sum over distinct index tuples of prod b_{i_t}^{lam_t}, computed by
/// inclusion-exclusion over set partitions of the exponent positions with
/// Moebius factor prod (-1)^{|B|-1} (|B|-1)!.
template <typename Scalar>
Scalar augmented_monomial(std::span<const int> lam, std::span<const Scalar> psums) {
    int m = static_cast<int>(lam.size());
    std::vector<int> block_of(m, -1);
    Scalar total(0);

    auto rec = [&](auto&& self, int t, int nblocks) -> void {
        if (t == m) {
            std::vector<int> bsum(nblocks, 0), bsize(nblocks, 0);
            for (int u = 0; u < m; ++u) {
                bsum[block_of[u]] += lam[u];
                ++bsize[block_of[u]];
            }
            Scalar term(1);
            bool neg = false;
            for (int b = 0; b < nblocks; ++b) {
                term = term * psums[bsum[b]] * Scalar(static_cast<int>(factorial(bsize[b] - 1)));
                if (bsize[b] % 2 == 0) neg = !neg;
            }
            if (neg)
                total = total - term;
            else
                total = total + term;
            return;
        }
        for (int b = 0; b <= nblocks; ++b) {
            block_of[t] = b;
            self(self, t + 1, b == nblocks ? nblocks + 1 : nblocks);
        }
        block_of[t] = -1;
    };
    rec(rec, 0, 0);
    return total;
}

}  // namespace detail

/**
 * @brief Exact E((sum_i b_i e_i)^r) from the power sums of the weights.
 *
 * psums[q] must hold sum_i b_i^q for q = 2..r (entries 0 and 1 are ignored;
 * no block of exponents >= 2 can sum below 2). Expands over partitions of r
 * into parts >= 2, with each partition's augmented monomial evaluated by
 * inclusion-exclusion. Uses raw central moments, so the result is rational
 * whenever weights and moments are.
 */
template <typename Scalar>
Scalar weighted_moment_psums(int r, std::span<const Scalar> psums, const MomentProfile& profile) {
    if (r < 0) throw DomainError("weighted_moment_psums: negative order");
    if (static_cast<int>(psums.size()) < r + 1)
        throw DomainError("weighted_moment_psums: power sums up to order r required");
    if (r == 0) return Scalar(1);
    Scalar total(0);
    for (const Partition& p : partitions_min2(r)) {
        Rat coef(partition_weight(p));
        for (int part : p.parts()) coef *= profile.central(part);
        Scalar mom;
        if constexpr (std::is_same_v<Scalar, Rat>)
            mom = coef;
        else
            mom = Scalar(to_double(coef));
        total = total + mom * detail::augmented_monomial<Scalar>(p.parts(), psums);
    }
    return total;
}

template <typename Scalar>
std::vector<Scalar> power_sums(int r, std::span<const Scalar> b) {
    std::vector<Scalar> ps(std::size_t(r) + 1, Scalar(0));
    ps[0] = Scalar(static_cast<int>(b.size()));
    for (const Scalar& w : b) {
        Scalar acc = w;
        for (int q = 1; q <= r; ++q) {
            ps[q] = ps[q] + acc;
            acc = acc * w;
        }
    }
    return ps;
}

/// Exact E((sum b_i e_i)^r) for rational weights.
inline Rat weighted_moment(int r, std::span<const Rat> b, const MomentProfile& profile) {
    auto ps = power_sums<Rat>(r, b);
    return weighted_moment_psums<Rat>(r, ps, profile);
}

/// Floating-point E((sum b_i e_i)^r); power sums accumulated in long double.
inline double weighted_moment(int r, std::span<const double> b, const MomentProfile& profile) {
    std::vector<double> ps(std::size_t(r) + 1, 0.0);
    ps[0] = static_cast<double>(b.size());
    for (int q = 1; q <= r; ++q) {
        long double acc = 0.0L;
        for (double w : b) acc += std::pow(static_cast<long double>(w), q);
        ps[q] = static_cast<double>(acc);
    }
    return weighted_moment_psums<double>(r, ps, profile);
}

/**
 * @brief Mixed Gaussian moment E(prod_j X_j^{r_j}) for X ~ N(0, cov).
 *
 * Pairing enumeration: the moment is the sum over perfect matchings of the
 * sum(r_j) variable slots of the product of matched covariances. Odd total
 * order gives zero. Guarded at total order 12 (10395 matchings).
 */
inline double gaussian_mixed_moment(const Eigen::MatrixXd& cov, std::span<const int> powers) {
    if (cov.rows() != cov.cols() || cov.rows() != static_cast<Eigen::Index>(powers.size()))
        throw DomainError("gaussian_mixed_moment: covariance/power size mismatch");
    int total = 0;
    for (int p : powers) {
        if (p < 0) throw DomainError("gaussian_mixed_moment: negative power");
        total += p;
    }
    if (total % 2 != 0) return 0.0;
    if (total > 12)
        throw DomainError("gaussian_mixed_moment: total order exceeds the pairing guard (12)");

    std::vector<int> slot_var;
    slot_var.reserve(total);
    for (std::size_t j = 0; j < powers.size(); ++j)
        for (int t = 0; t < powers[j]; ++t) slot_var.push_back(static_cast<int>(j));

    std::vector<bool> used(total, false);
    auto rec = [&](auto&& self) -> double {
        int first = -1;
        for (int s = 0; s < total; ++s)
            if (!used[s]) {
                first = s;
                break;
            }
        if (first < 0) return 1.0;
        used[first] = true;
        double sum = 0.0;
        for (int s = first + 1; s < total; ++s) {
            if (used[s]) continue;
            used[s] = true;
            sum += cov(slot_var[first], slot_var[s]) * self(self);
            used[s] = false;
        }
        used[first] = false;
        return sum;
    };
    return total == 0 ? 1.0 : rec(rec);
}

}  // namespace momrate

#pragma once

#include <momrate/exact.hpp>

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace momrate {

/**
 * @brief Integer partition with all parts >= 2, stored as nondecreasing parts.
 *
 * These index the nonvanishing terms in the expansion of E(S^r) for a sum of
 * centered variables: any part equal to 1 would contribute a first moment,
 * which is zero.
 */
class Partition {
public:
    explicit Partition(std::vector<int> parts) : parts_(std::move(parts)) {
        if (parts_.empty()) throw DomainError("Partition: empty part list");
        if (!std::is_sorted(parts_.begin(), parts_.end()))
            throw DomainError("Partition: parts must be nondecreasing");
        if (parts_.front() < 2) throw DomainError("Partition: parts must be >= 2");
    }

    const std::vector<int>& parts() const { return parts_; }

    /// Sum of parts (the moment order r being partitioned).
    int sum() const {
        int s = 0;
        for (int p : parts_) s += p;
        return s;
    }

    /// Number of parts m.
    int length() const { return static_cast<int>(parts_.size()); }

    /// (part value, multiplicity) pairs in increasing part order.
    std::vector<std::pair<int, int>> multiplicities() const {
        std::vector<std::pair<int, int>> out;
        for (int p : parts_) {
            if (!out.empty() && out.back().first == p)
                ++out.back().second;
            else
                out.emplace_back(p, 1);
        }
        return out;
    }

    friend bool operator==(const Partition& x, const Partition& y) {
        return x.parts_ == y.parts_;
    }

private:
    std::vector<int> parts_;
};

/// All partitions of r into parts >= 2, in lexicographic order of the
/// nondecreasing part lists. Empty for r = 1; the single empty-sum convention
/// is not used (r = 0 also yields an empty list).
inline std::vector<Partition> partitions_min2(int r) {
    if (r < 0) throw DomainError("partitions_min2: negative r");
    std::vector<Partition> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int remaining, int min_part) -> void {
        if (remaining == 0) {
            out.emplace_back(cur);
            return;
        }
        for (int part = min_part; part <= remaining; ++part) {
            if (remaining - part == 1) continue;  // would strand a part of 1
            cur.push_back(part);
            self(self, remaining - part, part);
            cur.pop_back();
        }
    };
    if (r >= 2) rec(rec, r, 2);
    return out;
}

inline BigInt factorial(int n) {
    if (n < 0) throw DomainError("factorial: negative argument");
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline BigInt binomial(const BigInt& n, int k) {
    if (k < 0) return 0;
    if (n >= 0 && n < k) return 0;
    BigInt num = 1, den = 1;
    for (int i = 0; i < k; ++i) {
        num *= n - i;
        den *= i + 1;
    }
    BigInt q = num / den;
    if (q * den != num) throw NumericError("binomial: non-integral quotient");
    return q;
}

/// r! / prod(parts[i]!) for parts summing to r.
inline BigInt multinomial(int r, std::span<const int> parts) {
    int s = 0;
    for (int p : parts) {
        if (p < 0) throw DomainError("multinomial: negative part");
        s += p;
    }
    if (s != r) throw DomainError("multinomial: parts do not sum to r");
    BigInt num = factorial(r);
    for (int p : parts) num /= factorial(p);
    return num;
}

/// Falling factorial (n)_m = n(n-1)...(n-m+1); zero when m > n.
inline BigInt falling_factorial(const BigInt& n, int m) {
    if (m < 0) throw DomainError("falling_factorial: negative m");
    BigInt acc = 1;
    for (int i = 0; i < m; ++i) acc *= n - i;
    return acc;
}

/// (2k-1)!! = 1*3*...*(2k-1), the 2k-th moment of a standard normal.
inline BigInt double_factorial_odd(int k) {
    if (k < 0) throw DomainError("double_factorial_odd: negative k");
    BigInt acc = 1;
    for (int i = 1; i <= k; ++i) acc *= 2 * i - 1;
    return acc;
}

/// multinomial(r; parts) / prod over distinct parts of (multiplicity!).
/// The n-free weight of a partition's term; always an exact integer.
inline BigInt partition_weight(const Partition& p) {
    BigInt w = multinomial(p.sum(), p.parts());
    for (auto [part, mult] : p.multiplicities()) w /= factorial(mult);
    return w;
}

/// Coefficient of the partition's term in E(S^r) for n summands:
/// partition_weight(p) * (n)_m with m = p.length().
inline BigInt expansion_coefficient(const Partition& p, const BigInt& n) {
    if (n < 0) throw DomainError("expansion_coefficient: negative n");
    return partition_weight(p) * falling_factorial(n, p.length());
}

/// Coefficients of (n)_m as a polynomial in n: (n)_m = sum_j c[j] n^j.
/// These are the signed Stirling numbers of the first kind s(m, j).
inline std::vector<BigInt> falling_factorial_coeffs(int m) {
    if (m < 0) throw DomainError("falling_factorial_coeffs: negative m");
    std::vector<BigInt> c{1};  // (n)_0 = 1
    for (int i = 0; i < m; ++i) {
        // multiply by (n - i)
        std::vector<BigInt> next(c.size() + 1);
        for (std::size_t j = 0; j < c.size(); ++j) {
            next[j + 1] += c[j];
            next[j] -= i * c[j];
        }
        c = std::move(next);
    }
    return c;
}

}  // namespace momrate

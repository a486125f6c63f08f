#pragma once

#include <momrate/ols.hpp>

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

namespace momrate {

/// Fixed replication chunk: chunk c always covers reps [c*4096, c*4096+4096),
/// each chunk drawing from its own stream, so estimates are byte-identical
/// for any worker count.
inline constexpr std::uint64_t kMcChunk = 4096;

struct McEstimate {
    std::vector<int> powers;  // single-order estimates store {r}
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
};

namespace detail {

/// Kahan-compensated accumulator; used per chunk and for the cross-chunk
/// reduction so the summation order is fixed by construction.
struct Kahan {
    long double sum = 0.0L, carry = 0.0L;
    void add(long double v) {
        long double y = v - carry;
        long double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

/// One replication: fill `values` (one entry per tracked statistic) using
/// draws from the chunk stream.
using Replicate = std::function<void(RngStream&, std::span<double>)>;

/// Factory handing each worker thread its own Replicate closure (with any
/// per-thread scratch state baked in).
using ReplicateFactory = std::function<Replicate()>;

/// Runs reps replications in chunks of kMcChunk, reduced in chunk order.
/// Fills per-statistic sums and sums of squares.
inline void chunked_mc(std::uint64_t reps, std::uint64_t seed, int threads, std::size_t n_stats,
                       const ReplicateFactory& make_replicate, std::vector<long double>& sums,
                       std::vector<long double>& sumsq) {
    if (reps < 1) throw DomainError("chunked_mc: reps must be >= 1");
    std::uint64_t n_chunks = (reps + kMcChunk - 1) / kMcChunk;
    std::vector<std::vector<long double>> chunk_sums(n_chunks), chunk_sumsq(n_chunks);

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        Replicate replicate = make_replicate();
        std::vector<double> values(n_stats);
        for (;;) {
            std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) break;
            std::uint64_t lo = c * kMcChunk;
            std::uint64_t hi = std::min(reps, lo + kMcChunk);
            RngStream stream(seed, c);
            std::vector<Kahan> s(n_stats), s2(n_stats);
            for (std::uint64_t rep = lo; rep < hi; ++rep) {
                replicate(stream, values);
                for (std::size_t j = 0; j < n_stats; ++j) {
                    if (!std::isfinite(values[j])) {
                        failed.store(true);
                        return;
                    }
                    s[j].add(values[j]);
                    s2[j].add(static_cast<long double>(values[j]) * values[j]);
                }
            }
            chunk_sums[c].resize(n_stats);
            chunk_sumsq[c].resize(n_stats);
            for (std::size_t j = 0; j < n_stats; ++j) {
                chunk_sums[c][j] = s[j].sum;
                chunk_sumsq[c][j] = s2[j].sum;
            }
        }
    };

    int nw = std::max(1, threads);
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw NumericError("chunked_mc: non-finite statistic in accumulation");

    std::vector<Kahan> ks(n_stats), ks2(n_stats);
    for (std::uint64_t c = 0; c < n_chunks; ++c)
        for (std::size_t j = 0; j < n_stats; ++j) {
            ks[j].add(chunk_sums[c][j]);
            ks2[j].add(chunk_sumsq[c][j]);
        }
    sums.assign(n_stats, 0.0L);
    sumsq.assign(n_stats, 0.0L);
    for (std::size_t j = 0; j < n_stats; ++j) {
        sums[j] = ks[j].sum;
        sumsq[j] = ks2[j].sum;
    }
}

inline McEstimate finalize(std::vector<int> powers, long double sum, long double sumsq,
                           std::uint64_t reps, std::uint64_t seed) {
    McEstimate e;
    e.powers = std::move(powers);
    e.reps = reps;
    e.seed = seed;
    long double mean = sum / static_cast<long double>(reps);
    e.estimate = static_cast<double>(mean);
    if (reps >= 2) {
        long double var = (sumsq - static_cast<long double>(reps) * mean * mean) /
                          static_cast<long double>(reps - 1);
        if (var < 0.0L) var = 0.0L;
        e.std_error = static_cast<double>(std::sqrt(var / static_cast<long double>(reps)));
    }
    if (!std::isfinite(e.estimate) || !std::isfinite(e.std_error))
        throw NumericError("mc estimate overflowed");
    return e;
}

/// Per-worker sampling state: the design matrix, its factorization, and an
/// error scratch buffer. draw() returns (XtX)^{-1} X'e for one error vector;
/// xi for direction alpha is then sqrt(n) alpha'(draw). beta_true cancels
/// identically in this form, making runs translation-invariant bit for bit.
struct XiSampler {
    Eigen::MatrixXd X;
    Eigen::LLT<Eigen::MatrixXd> fact;
    double sqrtn;
    ErrorLaw law;
    std::vector<double> eps;

    XiSampler(const Design& d, const ErrorLaw& l)
        : X(materialize(d)), sqrtn(std::sqrt(static_cast<double>(d.n))), law(l), eps(d.n) {
        fact.compute(X.transpose() * X);
        if (fact.info() != Eigen::Success) throw NumericError("mc: XtX factorization failed");
    }

    Eigen::VectorXd draw(RngStream& stream) {
        for (double& v : eps) v = law.sample(stream);
        Eigen::Map<const Eigen::VectorXd> e(eps.data(), static_cast<Eigen::Index>(eps.size()));
        return fact.solve(X.transpose() * e);
    }
};

}  // namespace detail

/// MC estimates of E(xi^r) for each order, chunk-deterministic in the seed.
inline std::vector<McEstimate> mc_xi_moments(const XiSpec& spec, std::span<const int> orders,
                                             std::uint64_t reps, std::uint64_t seed,
                                             int threads = 1) {
    if (reps < 1000) throw DomainError("mc_xi_moments: reps must be >= 1000");
    for (int r : orders)
        if (r < 1) throw DomainError("mc_xi_moments: orders must be >= 1");

    auto factory = [&spec, orders]() -> detail::Replicate {
        auto sampler = std::make_shared<detail::XiSampler>(spec.design, spec.law);
        Eigen::VectorXd alpha = spec.alpha;
        return [sampler, alpha, orders](RngStream& stream, std::span<double> out) {
            double xi = sampler->sqrtn * alpha.dot(sampler->draw(stream));
            for (std::size_t j = 0; j < orders.size(); ++j) out[j] = std::pow(xi, orders[j]);
        };
    };
    std::vector<long double> sums, sumsq;
    detail::chunked_mc(reps, seed, threads, orders.size(), factory, sums, sumsq);

    std::vector<McEstimate> out;
    out.reserve(orders.size());
    for (std::size_t j = 0; j < orders.size(); ++j)
        out.push_back(detail::finalize({orders[j]}, sums[j], sumsq[j], reps, seed));
    return out;
}

/// Joint moment E(prod_j xi_j^{r_j}) for functionals sharing one design and
/// one error draw per replication.
inline McEstimate mc_joint_moments(std::span<const XiSpec> specs, std::span<const int> powers,
                                   std::uint64_t reps, std::uint64_t seed, int threads = 1) {
    if (specs.empty() || specs.size() != powers.size())
        throw DomainError("mc_joint_moments: specs/powers mismatch");
    int total = 0;
    for (int r : powers) {
        if (r < 0) throw DomainError("mc_joint_moments: negative power");
        total += r;
    }
    if (total > 8) throw DomainError("mc_joint_moments: total order must be <= 8");
    if (reps < 1000) throw DomainError("mc_joint_moments: reps must be >= 1000");

    const Design& d = specs[0].design;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(specs.size()), d.p);
    for (std::size_t j = 0; j < specs.size(); ++j)
        A.row(static_cast<Eigen::Index>(j)) = specs[j].alpha.transpose();
    std::vector<int> pw(powers.begin(), powers.end());

    auto factory = [&specs, A, pw]() -> detail::Replicate {
        auto sampler = std::make_shared<detail::XiSampler>(specs[0].design, specs[0].law);
        return [sampler, A, pw](RngStream& stream, std::span<double> out) {
            Eigen::VectorXd xi = sampler->sqrtn * (A * sampler->draw(stream));
            double prod = 1.0;
            for (std::size_t j = 0; j < pw.size(); ++j)
                prod *= std::pow(xi(static_cast<Eigen::Index>(j)), pw[j]);
            out[0] = prod;
        };
    };
    std::vector<long double> sums, sumsq;
    detail::chunked_mc(reps, seed, threads, 1, factory, sums, sumsq);
    return detail::finalize(pw, sums[0], sumsq[0], reps, seed);
}

/// Rebuild the same design family at a different n (seeded families keep
/// their seed). Explicit designs cannot be resized.
inline Design with_n(const Design& d, std::uint64_t n) {
    switch (d.family) {
        case DesignFamily::canonical:
            return canonical_design(n);
        case DesignFamily::convergent:
            return convergent_design(n, d.c, d.a, d.q);
        case DesignFamily::prop1:
            return prop1_design(n, d.alpha);
        case DesignFamily::prop2:
            return prop2_design(n, d.a_sparse);
        case DesignFamily::iid_random:
            return iid_random_design(n, d.p, d.column_law, d.seed, d.intercept);
        case DesignFamily::explicit_rows:
            throw DomainError("with_n: explicit designs have fixed n");
    }
    throw DomainError("with_n: bad family");
}

/// Tail table entry for the uniform-integrability diagnostic.
struct TailRow {
    std::uint64_t n = 0;
    double K = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
};

struct TailReport {
    int r = 0;
    std::vector<TailRow> rows;       // all (n, K) pairs, n-major
    std::vector<double> sup_over_n;  // per threshold
    std::vector<double> thresholds;
};

/// E[|xi|^r 1{|xi| > K}] over an n-grid, one MC pass per n covering every K.
inline TailReport ui_tail_diagnostic(const XiSpec& spec, std::span<const std::uint64_t> n_grid,
                                     int r, std::span<const double> thresholds,
                                     std::uint64_t reps, std::uint64_t seed, int threads = 1) {
    if (thresholds.empty()) throw DomainError("ui_tail_diagnostic: no thresholds");
    if (r < 1) throw DomainError("ui_tail_diagnostic: r must be >= 1");
    TailReport report;
    report.r = r;
    report.thresholds.assign(thresholds.begin(), thresholds.end());
    report.sup_over_n.assign(thresholds.size(), 0.0);

    for (std::uint64_t n : n_grid) {
        XiSpec sn(with_n(spec.design, n), spec.alpha, spec.law);
        std::vector<double> ks(thresholds.begin(), thresholds.end());

        auto factory = [&sn, &ks, r]() -> detail::Replicate {
            auto sampler = std::make_shared<detail::XiSampler>(sn.design, sn.law);
            Eigen::VectorXd alpha = sn.alpha;
            return [sampler, alpha, &ks, r](RngStream& stream, std::span<double> out) {
                double xi = sampler->sqrtn * alpha.dot(sampler->draw(stream));
                double axi = std::abs(xi);
                double axir = std::pow(axi, r);
                for (std::size_t j = 0; j < ks.size(); ++j)
                    out[j] = axi > ks[j] ? axir : 0.0;
            };
        };
        std::vector<long double> sums, sumsq;
        detail::chunked_mc(reps, seed, threads, ks.size(), factory, sums, sumsq);

        for (std::size_t j = 0; j < ks.size(); ++j) {
            McEstimate e = detail::finalize({r}, sums[j], sumsq[j], reps, seed);
            report.rows.push_back({n, ks[j], e.estimate, e.std_error});
            report.sup_over_n[j] = std::max(report.sup_over_n[j], e.estimate);
        }
    }
    return report;
}

}  // namespace momrate

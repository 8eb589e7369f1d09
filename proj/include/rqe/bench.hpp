#pragma once

// Measurement harness: preprocessing and enumeration time, per-answer
// delays, rejection behaviour over the run, and a rejection-sampling
// baseline that turns uniform sampling into sampling without replacement.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "rqe/cq_index.hpp"
#include "rqe/mcucq.hpp"
#include "rqe/shuffle.hpp"
#include "rqe/union_enum.hpp"

namespace rqe {

struct BaselineResult {
    std::vector<Answer> answers;
    std::uint64_t trials = 0;
};

/// Draws uniform answer indices with replacement until k distinct answers
/// were seen.
template <CountedHandle H>
BaselineResult baseline_sample_with_rejection(const H& handle, const Count& k, Rng& rng) {
    const Count n = handle.count();
    if (k > n) throw Error("baseline: requested " + k.str() + " distinct answers but only " + n.str() + " exist");
    BaselineResult out;
    std::unordered_set<Count, CountHash> seen;
    while (Count(out.answers.size()) < k) {
        ++out.trials;
        Count j = rng.uniform_below(n);
        if (!seen.insert(j).second) continue;
        auto a = handle.access(j);
        if (!a) throw InternalError("baseline: index within count reported out of bound");
        out.answers.push_back(std::move(*a));
    }
    return out;
}

struct BenchConfig {
    UCQ query;
    const Database* db = nullptr;
    std::vector<double> percents{10, 50, 90, 100};
    std::size_t repeat = 1;
    std::uint64_t seed = 1;
    /// Methods to run; empty = all applicable.
    std::vector<std::string> methods;
};

/// One measured run of one method at one percentage.
struct BenchRun {
    std::string method;
    double percent = 0;
    std::size_t repeat = 0;
    std::uint64_t preprocess_ns = 0;
    std::uint64_t enumerate_ns = 0;
    std::vector<std::uint64_t> delays_ns;  // one per emitted answer
    std::uint64_t iterations = 0;
    std::uint64_t rejections = 0;
    std::uint64_t operations = 0;  // accesses / trials / iterations, per method
    std::vector<double> rejections_per_decile = std::vector<double>(10, 0.0);
    std::vector<double> rejection_ns_per_decile = std::vector<double>(10, 0.0);
};

/// Quartiles of the per-answer delays.
struct DelaySummary {
    double q1 = 0, median = 0, q3 = 0;
    std::uint64_t outliers = 0;  // beyond q3 + 1.5 IQR
};

inline double quantile(const std::vector<std::uint64_t>& sorted, double p) {
    if (sorted.empty()) return 0;
    double pos = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return static_cast<double>(sorted[lo]) * (1 - frac) + static_cast<double>(sorted[hi]) * frac;
}

inline DelaySummary summarize_delays(std::vector<std::uint64_t> d) {
    DelaySummary s;
    if (d.empty()) return s;
    std::sort(d.begin(), d.end());
    s.q1 = quantile(d, 0.25);
    s.median = quantile(d, 0.5);
    s.q3 = quantile(d, 0.75);
    const double fence = s.q3 + 1.5 * (s.q3 - s.q1);
    s.outliers = static_cast<std::uint64_t>(d.end() - std::upper_bound(d.begin(), d.end(), static_cast<std::uint64_t>(fence)));
    return s;
}

struct BenchReport {
    std::vector<BenchRun> runs;

    /// Mean over repeats of one cell, for (method, percent).
    template <typename F>
    double mean(const std::string& method, double percent, F&& f) const {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& r : runs)
            if (r.method == method && r.percent == percent) sum += f(r), ++n;
        return n ? sum / static_cast<double>(n) : 0;
    }

    std::vector<std::pair<std::string, double>> cells() const {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& r : runs)
            if (std::find(out.begin(), out.end(), std::pair{r.method, r.percent}) == out.end()) out.push_back({r.method, r.percent});
        return out;
    }

    void write_tsv(std::ostream& os) const {
        os << "method\tpercent\tanswers\tpreprocess_ms\tenumerate_ms\ttotal_ms\tdelay_q1_us\tdelay_median_us"
              "\tdelay_q3_us\tdelay_outliers\titerations\trejections\tops_per_answer";
        for (int d = 1; d <= 10; ++d) os << "\trej_d" << d;
        for (int d = 1; d <= 10; ++d) os << "\trej_us_d" << d;
        os << '\n';
        auto fixed = [&](double v) -> std::ostream& { return os << std::fixed << std::setprecision(3) << v; };
        for (const auto& [method, percent] : cells()) {
            auto m = [&](auto f) { return mean(method, percent, f); };
            double answers = m([](const BenchRun& r) { return static_cast<double>(r.delays_ns.size()); });
            double pre = m([](const BenchRun& r) { return r.preprocess_ns / 1e6; });
            double enu = m([](const BenchRun& r) { return r.enumerate_ns / 1e6; });
            os << method << '\t' << std::defaultfloat << percent << '\t';
            fixed(answers) << '\t';
            fixed(pre) << '\t';
            fixed(enu) << '\t';
            fixed(pre + enu) << '\t';
            fixed(m([](const BenchRun& r) { return summarize_delays(r.delays_ns).q1 / 1e3; })) << '\t';
            fixed(m([](const BenchRun& r) { return summarize_delays(r.delays_ns).median / 1e3; })) << '\t';
            fixed(m([](const BenchRun& r) { return summarize_delays(r.delays_ns).q3 / 1e3; })) << '\t';
            fixed(m([](const BenchRun& r) { return static_cast<double>(summarize_delays(r.delays_ns).outliers); })) << '\t';
            fixed(m([](const BenchRun& r) { return static_cast<double>(r.iterations); })) << '\t';
            fixed(m([](const BenchRun& r) { return static_cast<double>(r.rejections); })) << '\t';
            fixed(m([](const BenchRun& r) {
                return r.delays_ns.empty() ? 0.0 : static_cast<double>(r.operations) / static_cast<double>(r.delays_ns.size());
            }));
            for (std::size_t d = 0; d < 10; ++d) {
                os << '\t';
                fixed(m([d](const BenchRun& r) { return r.rejections_per_decile[d]; }));
            }
            for (std::size_t d = 0; d < 10; ++d) {
                os << '\t';
                fixed(m([d](const BenchRun& r) { return r.rejection_ns_per_decile[d] / 1e3; }));
            }
            os << '\n';
        }
    }
};

namespace detail {

using bench_clock = std::chrono::steady_clock;

inline std::uint64_t ns_since(bench_clock::time_point t0) {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(bench_clock::now() - t0).count());
}

inline Count requested(const Count& total, double percent) {
    if (total == 0) return 0;
    // ceil(total * percent / 100) computed on a 10^-6 grid of percent.
    Count scaled = total * Count(static_cast<std::int64_t>(std::llround(percent * 1e6)));
    Count denom = Count(100'000'000);
    Count k = (scaled + denom - 1) / denom;
    return std::min(k, total);
}

/// Consumes `k` answers from `next`, recording per-answer delays.
template <typename Next>
void drain_into(BenchRun& run, const Count& k, Next&& next) {
    auto t0 = bench_clock::now();
    auto last = t0;
    for (Count i = 0; i < k; ++i) {
        if (!next()) throw InternalError("bench: enumeration ended before the requested count");
        auto now = bench_clock::now();
        run.delays_ns.push_back(static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(now - last).count()));
        last = now;
    }
    run.enumerate_ns = ns_since(t0);
}

inline void fill_deciles(BenchRun& run, const UnionStats& st) {
    const auto k = st.rejections_before.size();
    for (std::size_t i = 0; i < k; ++i) {
        auto d = std::min<std::size_t>(9, i * 10 / k);
        run.rejections_per_decile[d] += st.rejections_before[i];
        if (i < st.rejection_ns_before.size()) run.rejection_ns_per_decile[d] += static_cast<double>(st.rejection_ns_before[i]);
    }
}

}  // namespace detail

inline std::vector<std::string> applicable_methods(const UCQ& q) {
    if (q.disjuncts.size() == 1) return {"cq-shuffle", "baseline"};
    std::vector<std::string> out{"union-enum"};
    if (McUcqIndex::recognize(q)) {
        out.push_back("mc-access");
        out.push_back("baseline");
    }
    return out;
}

/// Runs every method at every percentage `repeat` times. The index is
/// rebuilt for every run so each total includes preprocessing.
inline BenchReport bench_run(const BenchConfig& cfg) {
    if (!cfg.db) throw InternalError("bench: no database");
    if (cfg.repeat == 0) throw Error("bench: repeat must be positive");
    for (auto p : cfg.percents)
        if (!(p > 0 && p <= 100)) throw Error("bench: percentages must lie in (0, 100]");
    auto methods = cfg.methods.empty() ? applicable_methods(cfg.query) : cfg.methods;
    const auto& db = *cfg.db;
    const bool single = cfg.query.disjuncts.size() == 1;
    BenchReport report;
    Rng seeds(cfg.seed);
    using detail::bench_clock;
    // Union size for union-enum, found once by a full untimed run.
    std::optional<Count> total;
    auto union_total = [&]() -> const Count& {
        if (!total) {
            std::vector<CqIndex> sets;
            for (const auto& q : cfg.query.disjuncts) sets.push_back(CqIndex::from_query(q, db));
            std::vector<const CqIndex*> handles;
            for (const auto& s : sets) handles.push_back(&s);
            UnionRandomPermutation<CqIndex> probe(handles, Rng(0));
            total = Count(0);
            while (probe.next()) ++*total;
        }
        return *total;
    };
    for (const auto& method : methods) {
        for (auto percent : cfg.percents) {
            for (std::size_t rep = 0; rep < cfg.repeat; ++rep) {
                BenchRun run;
                run.method = method;
                run.percent = percent;
                run.repeat = rep;
                Rng rng = seeds.split();
                auto t0 = bench_clock::now();
                if (method == "cq-shuffle" || (method == "baseline" && single)) {
                    auto idx = CqIndex::from_query(cfg.query.disjuncts.front(), db);
                    run.preprocess_ns = detail::ns_since(t0);
                    auto k = detail::requested(idx.count(), percent);
                    if (method == "cq-shuffle") {
                        RandomPermutation<CqIndex> perm(idx, rng);
                        detail::drain_into(run, k, [&] { return perm.next().has_value(); });
                        run.operations = run.delays_ns.size();
                    } else {
                        // Each delay is the wait for the next new answer.
                        std::unordered_set<Count, CountHash> seen;
                        const Count n = idx.count();
                        detail::drain_into(run, k, [&] {
                            for (;;) {
                                ++run.operations;
                                Count j = rng.uniform_below(n);
                                if (seen.insert(j).second) return idx.access(j).has_value();
                            }
                        });
                    }
                } else if (method == "mc-access" || method == "baseline") {
                    auto idx = McUcqIndex::build(cfg.query, db);
                    if (!idx) throw QueryClassError("bench: union is not recognized as mutually compatible");
                    run.preprocess_ns = detail::ns_since(t0);
                    auto k = detail::requested(idx->count(), percent);
                    if (method == "mc-access") {
                        RandomPermutation<McUcqIndex> perm(*idx, rng);
                        detail::drain_into(run, k, [&] { return perm.next().has_value(); });
                        run.operations = run.delays_ns.size();
                    } else {
                        std::unordered_set<Count, CountHash> seen;
                        const Count n = idx->count();
                        detail::drain_into(run, k, [&] {
                            for (;;) {
                                ++run.operations;
                                Count j = rng.uniform_below(n);
                                if (seen.insert(j).second) return idx->access(j).has_value();
                            }
                        });
                    }
                } else if (method == "union-enum") {
                    std::vector<CqIndex> sets;
                    for (const auto& q : cfg.query.disjuncts) sets.push_back(CqIndex::from_query(q, db));
                    std::vector<const CqIndex*> handles;
                    for (const auto& s : sets) handles.push_back(&s);
                    run.preprocess_ns = detail::ns_since(t0);
                    UnionRandomPermutation<CqIndex> u(handles, rng, {true, false});
                    auto k = detail::requested(union_total(), percent);
                    detail::drain_into(run, k, [&] { return u.next().has_value(); });
                    run.iterations = u.stats().iterations;
                    run.rejections = u.stats().rejections;
                    run.operations = run.iterations;
                    detail::fill_deciles(run, u.stats());
                } else {
                    throw Error("bench: unknown method '" + method + "'");
                }
                report.runs.push_back(std::move(run));
            }
        }
    }
    return report;
}

}  // namespace rqe

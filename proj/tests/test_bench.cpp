#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace rqe;
using namespace rqe::testing;

namespace {

Database unary_db(const std::string& name, std::int64_t from, std::int64_t to) {
    std::vector<std::vector<std::int64_t>> rows;
    for (auto v = from; v < to; ++v) rows.push_back({v});
    return make_db({ints(name, 1, rows)});
}

double mean_trials_per_answer(const CqIndex& idx, double fraction, int seeds) {
    double sum = 0;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(s);
        Count k = static_cast<std::int64_t>(fraction * idx.count().convert_to<double>());
        auto r = baseline_sample_with_rejection(idx, k, rng);
        sum += static_cast<double>(r.trials) / static_cast<double>(r.answers.size());
    }
    return sum / seeds;
}

}  // namespace

TEST(Baseline, AllAnswers) {
    auto db = unary_db("R", 0, 50);
    auto idx = CqIndex::from_query(parse_cq("Q(x) :- R(x)."), db);
    Rng rng(1);
    auto r = baseline_sample_with_rejection(idx, idx.count(), rng);
    EXPECT_EQ(sorted(r.answers), idx.enumerate());
    EXPECT_GE(r.trials, 50u);
}

TEST(Baseline, OneAnswerOneTrial) {
    auto db = unary_db("R", 0, 50);
    auto idx = CqIndex::from_query(parse_cq("Q(x) :- R(x)."), db);
    Rng rng(2);
    EXPECT_EQ(baseline_sample_with_rejection(idx, 1, rng).trials, 1u);
    EXPECT_THROW(baseline_sample_with_rejection(idx, 51, rng), Error);
}

TEST(Baseline, TrialsPerAnswerGrow) {
    auto db = unary_db("R", 0, 10000);
    auto idx = CqIndex::from_query(parse_cq("Q(x) :- R(x)."), db);
    double t10 = mean_trials_per_answer(idx, 0.1, 10);
    double t50 = mean_trials_per_answer(idx, 0.5, 10);
    double t90 = mean_trials_per_answer(idx, 0.9, 10);
    EXPECT_LT(t10, t50);
    EXPECT_LT(t50, t90);
    // Coupon collector: (n/k) * ln(n/(n-k)) for the first k distinct.
    EXPECT_NEAR(t90, std::log(10.0) / 0.9, 0.05);
}

TEST(Delays, Summary) {
    auto s = summarize_delays({1, 2, 3, 4, 5, 6, 7, 8, 9, 100});
    EXPECT_DOUBLE_EQ(s.q1, 3.25);
    EXPECT_DOUBLE_EQ(s.median, 5.5);
    EXPECT_DOUBLE_EQ(s.q3, 7.75);
    EXPECT_EQ(s.outliers, 1u);
    EXPECT_EQ(summarize_delays({}).outliers, 0u);
}

TEST(Bench, CqReport) {
    auto db = worked_example_db();
    BenchConfig cfg;
    cfg.query = parse_query(worked_example_query);
    cfg.db = &db;
    cfg.percents = {25, 100};
    cfg.repeat = 3;
    auto report = bench_run(cfg);
    EXPECT_EQ(report.runs.size(), 2u * 2u * 3u);
    for (const auto& r : report.runs) {
        EXPECT_EQ(r.delays_ns.size(), r.percent == 25 ? 4u : 16u);
        if (r.method == "cq-shuffle") {
            EXPECT_EQ(r.operations, r.delays_ns.size());
        } else {
            EXPECT_GE(r.operations, r.delays_ns.size());
        }
    }
    std::ostringstream os;
    report.write_tsv(os);
    std::istringstream is(os.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0].rfind("method\tpercent\tanswers", 0), 0u);
    EXPECT_EQ(lines[1].rfind("cq-shuffle\t25\t4.000", 0), 0u);
    EXPECT_EQ(std::count(lines[1].begin(), lines[1].end(), '\t'), std::count(lines[0].begin(), lines[0].end(), '\t'));
}

TEST(Bench, Validation) {
    auto db = worked_example_db();
    BenchConfig cfg;
    cfg.query = parse_query(worked_example_query);
    cfg.db = &db;
    cfg.percents = {0};
    EXPECT_THROW(bench_run(cfg), Error);
    cfg.percents = {50};
    cfg.methods = {"nope"};
    EXPECT_THROW(bench_run(cfg), Error);
}

TEST(Bench, DisjointUnionNoRejections) {
    auto db = make_db({ints("A", 1, {{1}, {2}, {3}}), ints("B", 1, {{4}, {5}})});
    BenchConfig cfg;
    cfg.query = parse_query("Q(x) :- A(x). UNION Q(x) :- B(x).");
    cfg.db = &db;
    cfg.repeat = 5;
    auto report = bench_run(cfg);
    for (const auto& r : report.runs) {
        EXPECT_EQ(r.rejections, 0u);
        for (auto d : r.rejections_per_decile) EXPECT_EQ(d, 0.0);
    }
}

TEST(Bench, DuplicateUnionIterationBound) {
    auto db = unary_db("A", 0, 300);
    BenchConfig cfg;
    cfg.query = parse_query("Q(x) :- A(x). UNION Q(x) :- A(x). UNION Q(x) :- A(x).");
    cfg.db = &db;
    cfg.repeat = 5;
    cfg.percents = {100};
    cfg.methods = {"union-enum"};
    for (const auto& r : bench_run(cfg).runs) {
        EXPECT_EQ(r.delays_ns.size(), 300u);
        EXPECT_LE(r.iterations, 600u);
    }
}

TEST(Bench, RejectionsDecay) {
    Database d;
    std::vector<std::vector<std::int64_t>> a, b;
    for (int i = 0; i < 2000; ++i) a.push_back({i});
    for (int i = 500; i < 2500; ++i) b.push_back({i});
    d.add(ints("A", 1, a));
    d.add(ints("B", 1, b));
    BenchConfig cfg;
    cfg.query = parse_query("Q(x) :- A(x). UNION Q(x) :- B(x).");
    cfg.db = &d;
    cfg.repeat = 10;
    cfg.percents = {100};
    cfg.methods = {"union-enum"};
    auto report = bench_run(cfg);
    double first = report.mean("union-enum", 100, [](const BenchRun& r) { return r.rejections_per_decile.front(); });
    double last = report.mean("union-enum", 100, [](const BenchRun& r) { return r.rejections_per_decile.back(); });
    EXPECT_GT(first, 0);
    EXPECT_LE(last, first);
}

TEST(Generate, Shapes) {
    for (std::string shape : {"star", "chain", "tpch"}) {
        GenConfig c;
        c.shape = shape;
        c.scale = 200;
        c.fanout = 2;
        auto g = generate(c);
        auto q = parse_query(g.query);
        ASSERT_EQ(q.disjuncts.size(), 1u);
        auto idx = CqIndex::from_query(q.disjuncts[0], g.db);
        EXPECT_EQ(idx.count(), brute_force_answers(q, g.db).size()) << shape;
        EXPECT_EQ(idx.count(), shape == "tpch" ? 200 : 200 * 4) << shape;
    }
    GenConfig bad;
    bad.shape = "ring";
    EXPECT_THROW(generate(bad), DataError);
}

TEST(Generate, UnionOverlap) {
    for (double overlap : {0.0, 0.5, 1.0}) {
        GenConfig c;
        c.shape = "tpch";
        c.scale = 100;
        c.disjuncts = 3;
        c.overlap = overlap;
        auto g = generate(c);
        auto q = parse_query(g.query);
        ASSERT_EQ(q.disjuncts.size(), 3u);
        auto idx = McUcqIndex::build(q, g.db);
        ASSERT_TRUE(idx);
        // Shared rows: 100*overlap; the rest is disjunct-specific.
        const auto shared = std::llround(100 * overlap);
        EXPECT_EQ(idx->count(), shared + 3 * (100 - shared)) << overlap;
        EXPECT_EQ(idx->count(), brute_force_answers(q, g.db).size());
    }
}

TEST(Generate, Deterministic) {
    GenConfig c;
    c.shape = "star";
    c.scale = 64;
    c.disjuncts = 2;
    auto a = generate(c), b = generate(c);
    EXPECT_EQ(a.query, b.query);
    for (const auto& [name, rel] : a.db.relations()) EXPECT_EQ(serialize(rel), serialize(b.db.at(name)));
}

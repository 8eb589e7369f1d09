#pragma once

// Synthetic desk-scale instances: star, chain and a lineitem/orders/customer
// schema, with optional unions whose disjuncts share a tunable fraction of
// their fact rows.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rqe/relation.hpp"

namespace rqe {

struct GenConfig {
    std::string shape = "star";  // star | chain | tpch
    std::size_t scale = 1000;    // rows of the fact (or each chain) relation
    std::size_t fanout = 2;      // tuples per join key in the dimension side
    std::size_t disjuncts = 1;
    double overlap = 0.5;        // fraction of fact rows shared by all disjuncts
    std::uint64_t seed = 1;
};

struct Generated {
    Database db;
    std::string query;
};

namespace detail {

inline std::vector<std::vector<std::int64_t>> fact_rows(std::size_t n, std::size_t cols, std::int64_t id_base,
                                                        const std::vector<std::int64_t>& domains, std::mt19937_64& g) {
    std::vector<std::vector<std::int64_t>> rows;
    rows.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::int64_t> row{id_base + static_cast<std::int64_t>(r)};
        for (std::size_t c = 1; c < cols; ++c)
            row.push_back(std::uniform_int_distribution<std::int64_t>(0, domains[c - 1] - 1)(g));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Relation int_relation(const std::string& name, std::size_t arity, const std::vector<std::vector<std::int64_t>>& rows) {
    std::vector<Tuple> ts;
    ts.reserve(rows.size());
    for (const auto& r : rows) {
        Tuple t;
        for (auto v : r) t.emplace_back(v);
        ts.push_back(std::move(t));
    }
    return Relation::from_tuples(name, arity, std::move(ts));
}

/// Per-disjunct copies of the fact rows: the first `shared` rows are common,
/// the rest get disjunct-specific ids.
inline std::vector<std::vector<std::vector<std::int64_t>>> split_facts(const GenConfig& c, std::size_t cols,
                                                                       const std::vector<std::int64_t>& domains,
                                                                       std::mt19937_64& g) {
    const auto n = c.scale;
    const auto shared = c.disjuncts > 1 ? static_cast<std::size_t>(std::llround(c.overlap * static_cast<double>(n))) : n;
    auto common = fact_rows(shared, cols, 0, domains, g);
    std::vector<std::vector<std::vector<std::int64_t>>> out;
    for (std::size_t d = 0; d < c.disjuncts; ++d) {
        auto rows = common;
        auto own = fact_rows(n - shared, cols, static_cast<std::int64_t>(n + d * n), domains, g);
        rows.insert(rows.end(), own.begin(), own.end());
        out.push_back(std::move(rows));
    }
    return out;
}

inline std::string union_of(const std::vector<std::string>& rules) {
    std::string s;
    for (std::size_t i = 0; i < rules.size(); ++i) s += (i ? "\nUNION " : "") + rules[i];
    return s + "\n";
}

}  // namespace detail

inline Generated generate(const GenConfig& c) {
    if (c.scale == 0 || c.fanout == 0 || c.disjuncts == 0) throw DataError("generate: scale, fanout and disjuncts must be positive");
    if (c.overlap < 0 || c.overlap > 1) throw DataError("generate: overlap must lie in [0, 1]");
    std::mt19937_64 g(c.seed);
    Generated out;
    const auto keys = static_cast<std::int64_t>(std::max<std::size_t>(1, c.scale / c.fanout));
    auto suffix = [&](std::size_t d) { return c.disjuncts > 1 ? "_" + std::to_string(d + 1) : std::string(); };

    // Dimension with every key present `fanout` times.
    auto dimension = [&](const std::string& name, std::int64_t nkeys) {
        std::vector<std::vector<std::int64_t>> rows;
        for (std::int64_t k = 0; k < nkeys; ++k)
            for (std::size_t f = 0; f < c.fanout; ++f)
                rows.push_back({k, std::uniform_int_distribution<std::int64_t>(0, 999)(g)});
        out.db.add(detail::int_relation(name, 2, rows));
    };

    std::vector<std::string> rules;
    if (c.shape == "star") {
        auto facts = detail::split_facts(c, 3, {keys, keys}, g);
        dimension("D1", keys);
        dimension("D2", keys);
        for (std::size_t d = 0; d < c.disjuncts; ++d) {
            out.db.add(detail::int_relation("F" + suffix(d), 3, facts[d]));
            rules.push_back("Q(id, k1, k2, a1, a2) :- F" + suffix(d) + "(id, k1, k2), D1(k1, a1), D2(k2, a2).");
        }
    } else if (c.shape == "chain") {
        // R1(x0, x1) is the fact; R2, R3 cover every key of the previous column.
        auto facts = detail::split_facts(c, 2, {keys}, g);
        for (int level = 2; level <= 3; ++level) {
            std::vector<std::vector<std::int64_t>> rows;
            for (std::int64_t k = 0; k < keys; ++k)
                for (std::size_t f = 0; f < c.fanout; ++f)
                    rows.push_back({k, std::uniform_int_distribution<std::int64_t>(0, keys - 1)(g)});
            out.db.add(detail::int_relation("R" + std::to_string(level), 2, rows));
        }
        for (std::size_t d = 0; d < c.disjuncts; ++d) {
            out.db.add(detail::int_relation("R1" + suffix(d), 2, facts[d]));
            rules.push_back("Q(x0, x1, x2, x3) :- R1" + suffix(d) + "(x0, x1), R2(x1, x2), R3(x2, x3).");
        }
    } else if (c.shape == "tpch") {
        // lineitem(orderkey, partkey, quantity), orders(orderkey, custkey, date),
        // customer(custkey, nation). Line items are the per-disjunct fact.
        const auto orders = keys;
        const auto customers = std::max<std::int64_t>(1, orders / static_cast<std::int64_t>(c.fanout));
        std::vector<std::vector<std::int64_t>> ord, cust;
        for (std::int64_t o = 0; o < orders; ++o)
            ord.push_back({o, std::uniform_int_distribution<std::int64_t>(0, customers - 1)(g),
                           std::uniform_int_distribution<std::int64_t>(19920101, 19981231)(g)});
        for (std::int64_t k = 0; k < customers; ++k) cust.push_back({k, std::uniform_int_distribution<std::int64_t>(0, 24)(g)});
        out.db.add(detail::int_relation("orders", 3, ord));
        out.db.add(detail::int_relation("customer", 2, cust));
        auto facts = detail::split_facts(c, 3, {orders, 50}, g);
        for (std::size_t d = 0; d < c.disjuncts; ++d) {
            // Row ids double as part keys; the order key is column 1.
            std::vector<std::vector<std::int64_t>> li;
            for (const auto& r : facts[d]) li.push_back({r[1], r[0], r[2]});
            out.db.add(detail::int_relation("lineitem" + suffix(d), 3, li));
            rules.push_back("Q(o, p, c) :- lineitem" + suffix(d) + "(o, p, q), orders(o, c, dt), customer(c, n).");
        }
    } else {
        throw DataError("generate: unknown shape '" + c.shape + "' (expected star, chain or tpch)");
    }
    out.query = detail::union_of(rules);
    return out;
}

/// Writes one CSV per relation plus query.txt.
inline void write_generated(const Generated& gen, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, rel] : gen.db.relations()) {
        std::ofstream f(dir / (name + ".csv"));
        if (!f) throw DataError("cannot write " + (dir / (name + ".csv")).string());
        f << serialize(rel);
    }
    std::ofstream q(dir / "query.txt");
    if (!q) throw DataError("cannot write " + (dir / "query.txt").string());
    q << gen.query;
}

}  // namespace rqe

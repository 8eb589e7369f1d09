#pragma once

// Test-only helpers: literal fixtures, a random instance generator, a
// chi-square check and a literal union-trick transcript.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "rqe/rqe.hpp"

namespace rqe::testing {

inline Value S(const char* s) { return Value(std::string(s)); }
inline Value I(std::int64_t i) { return Value(i); }

inline Relation rel(const std::string& name, std::size_t arity, std::vector<Tuple> tuples) {
    return Relation::from_tuples(name, arity, std::move(tuples));
}

/// Relation of all-string tuples, e.g. strs("R", {{"a1","b1"}}).
inline Relation strs(const std::string& name, const std::vector<std::vector<std::string>>& rows) {
    std::vector<Tuple> tuples;
    for (const auto& r : rows) {
        Tuple t;
        for (const auto& s : r) t.emplace_back(s);
        tuples.push_back(std::move(t));
    }
    return Relation::from_tuples(name, rows.empty() ? 0 : rows.front().size(), std::move(tuples));
}

inline Relation ints(const std::string& name, std::size_t arity, const std::vector<std::vector<std::int64_t>>& rows) {
    std::vector<Tuple> tuples;
    for (const auto& r : rows) {
        Tuple t;
        for (auto v : r) t.emplace_back(v);
        tuples.push_back(std::move(t));
    }
    return Relation::from_tuples(name, arity, std::move(tuples));
}

inline Database make_db(std::vector<Relation> rels) {
    Database db;
    for (auto& r : rels) db.add(std::move(r));
    return db;
}

inline Tuple strs_tuple(const std::vector<std::string>& vals) {
    Tuple t;
    for (const auto& v : vals) t.emplace_back(v);
    return t;
}

/// The three-relation database of the worked example: R1 root, R2 joined
/// on the second column, R3 on the third.
inline Database worked_example_db() {
    return make_db({
        strs("R1", {{"a1", "b1", "c1"}, {"a1", "b1", "c2"}, {"a2", "b2", "c1"}, {"a2", "b2", "c2"}}),
        strs("R2", {{"b1", "d1"}, {"b1", "d2"}, {"b2", "d2"}, {"b2", "d3"}}),
        strs("R3", {{"c1", "e1"}, {"c1", "e2"}, {"c1", "e3"}, {"c2", "e4"}}),
    });
}

inline const char* worked_example_query = "Q(v,w,x,y,z) :- R1(v,w,x), R2(w,y), R3(x,z).";

inline std::vector<Tuple> sorted(std::vector<Tuple> v) {
    std::sort(v.begin(), v.end());
    return v;
}

/// True iff `sub` is a subsequence of `super`.
inline bool is_subsequence(const std::vector<Tuple>& sub, const std::vector<Tuple>& super) {
    std::size_t i = 0;
    for (const auto& t : super)
        if (i < sub.size() && sub[i] == t) ++i;
    return i == sub.size();
}

//---------------------------------------------------------------------------
// Statistics
//---------------------------------------------------------------------------

inline double chi_square_statistic(const std::vector<std::uint64_t>& observed) {
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double expected = total / static_cast<double>(observed.size());
    double stat = 0;
    for (auto o : observed) stat += (o - expected) * (o - expected) / expected;
    return stat;
}

/// Critical value of chi-square with `df` degrees of freedom at `alpha`.
inline double chi_square_critical(std::size_t df, double alpha) {
    boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::quantile(boost::math::complement(dist, alpha));
}

/// Tally of observed orders of `n` distinct items; `run` produces one order.
template <typename Run>
std::map<std::vector<Tuple>, std::uint64_t> tally_orders(std::size_t trials, Run&& run) {
    std::map<std::vector<Tuple>, std::uint64_t> counts;
    for (std::size_t t = 0; t < trials; ++t) ++counts[run(t)];
    return counts;
}

inline std::uint64_t factorial(std::uint64_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

/// Passes iff all n! orders appear and chi-square is below the critical value.
inline bool orders_uniform(const std::map<std::vector<Tuple>, std::uint64_t>& counts, std::size_t n, double alpha,
                           double* stat_out = nullptr, double* crit_out = nullptr) {
    const auto k = factorial(n);
    std::vector<std::uint64_t> observed;
    for (const auto& [_, c] : counts) observed.push_back(c);
    while (observed.size() < k) observed.push_back(0);
    double stat = chi_square_statistic(observed);
    double crit = chi_square_critical(k - 1, alpha);
    if (stat_out) *stat_out = stat;
    if (crit_out) *crit_out = crit;
    return counts.size() == k && stat < crit;
}

//---------------------------------------------------------------------------
// Literal union trick
//---------------------------------------------------------------------------

/// Output of the union trick run by co-enumeration over the disjuncts'
/// own enumeration orders, iterated as S_l ∪ (S_{l+1} ∪ ...).
inline std::vector<Tuple> union_trick_transcript(const std::vector<std::vector<Tuple>>& sets, std::size_t l = 0) {
    if (l + 1 == sets.size()) return sets[l];
    const auto& a_seq = sets[l];
    auto b_seq = union_trick_transcript(sets, l + 1);
    std::set<Tuple> b_members(b_seq.begin(), b_seq.end());
    std::vector<Tuple> out;
    std::size_t a = 0, b = 0;
    while (a < a_seq.size()) {
        if (!b_members.count(a_seq[a])) {
            out.push_back(a_seq[a++]);
        } else {
            out.push_back(b_seq[b++]);
            ++a;
        }
    }
    while (b < b_seq.size()) out.push_back(b_seq[b++]);
    return out;
}

inline std::vector<Tuple> union_trick_transcript(const McUcqIndex& mc) {
    std::vector<std::vector<Tuple>> seqs;
    for (std::size_t l = 0; l < mc.disjuncts(); ++l) seqs.push_back(mc.disjunct(l).enumerate());
    return union_trick_transcript(seqs);
}

//---------------------------------------------------------------------------
// Random instances
//---------------------------------------------------------------------------

struct RandomInstance {
    UCQ query;
    Database db;
    std::vector<Tuple> expected;  // brute-force answers
    bool mc_shaped = false;
};

/// Generates small random free-connex CQs and unions thereof. Structures
/// are grown as random join trees, with occasional constants, repeated
/// variables and self-joins.
class InstanceGenerator {
public:
    struct Options {
        std::size_t max_atoms = 5;
        std::size_t max_tuples = 500;
        std::size_t max_answers = 4000;
    };

    explicit InstanceGenerator(std::uint64_t seed) : g_(seed) {}
    InstanceGenerator(std::uint64_t seed, Options opts) : g_(seed), opts_(opts) {}
    InstanceGenerator(std::uint64_t seed, std::size_t max_atoms, std::size_t max_tuples, std::size_t max_answers)
        : g_(seed), opts_{max_atoms, max_tuples, max_answers} {}

    /// A single free-connex CQ.
    RandomInstance cq() {
        for (;;) {
            Shape s = shape();
            Database db;
            CQ q = realize(s, db, "");
            if (auto inst = finish(UCQ{{q}}, db, false)) return *inst;
        }
    }

    /// A union of m structurally identical disjuncts over overlapping
    /// subsets of shared base relations (recognized as mc).
    RandomInstance mc_union(std::size_t m) {
        for (;;) {
            Shape s = shape(/*allow_self_join=*/false, /*allow_special=*/false);
            Database base;
            CQ q0 = realize(s, base, "B");
            Database db = base;
            UCQ u;
            double keep = std::uniform_real_distribution<double>(0.4, 0.95)(g_);
            for (std::size_t i = 0; i < m; ++i) {
                CQ qi = q0;
                for (std::size_t k = 0; k < qi.atoms.size(); ++k) {
                    const auto& src = base.at(q0.atoms[k].relation);
                    auto name = q0.atoms[k].relation + "_" + std::to_string(i);
                    std::bernoulli_distribution coin(keep);
                    db.add(src.filtered([&](const Tuple&) { return coin(g_); }).renamed(name));
                    qi.atoms[k].relation = name;
                }
                u.disjuncts.push_back(std::move(qi));
            }
            if (auto inst = finish(u, db, true)) return *inst;
        }
    }

    /// A union of m disjuncts with differing structure: variants of one
    /// base query with extra unary filter atoms.
    RandomInstance mixed_union(std::size_t m) {
        for (;;) {
            Shape s = shape();
            Database db;
            CQ q0 = realize(s, db, "M");
            UCQ u;
            u.disjuncts.push_back(q0);
            auto vars = q0.body_variables();
            for (std::size_t i = 1; i < m; ++i) {
                CQ qi = q0;
                auto v = vars[pick(vars.size())];
                auto name = "F" + std::to_string(counter_++);
                std::vector<Tuple> rows;
                for (std::int64_t d = 0; d < 8; ++d)
                    if (coin(0.6)) rows.push_back({value_for(var_type_[v], d)});
                db.add(Relation::from_tuples(name, 1, rows));
                qi.atoms.push_back(Atom{name, {Variable{v}}});
                u.disjuncts.push_back(std::move(qi));
            }
            if (auto inst = finish(u, db, false)) return *inst;
        }
    }

    std::mt19937_64& engine() { return g_; }

private:
    struct AtomShape {
        std::vector<std::string> vars;  // per column variable ("" = constant)
        std::vector<std::int64_t> constants;
    };
    struct Shape {
        std::vector<AtomShape> atoms;
        std::vector<std::size_t> parent;
        std::vector<std::string> head;
    };

    std::mt19937_64 g_;
    Options opts_;
    std::size_t counter_ = 0;
    std::map<std::string, bool> var_type_;  // true = string-typed

    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g_); }
    bool coin(double p) { return std::bernoulli_distribution(p)(g_); }

    static Value value_for(bool is_string, std::int64_t d) {
        if (is_string) return Value("s" + std::to_string(d));
        return Value(d);
    }

    Shape shape(bool allow_self_join = true, bool allow_special = true) {
        (void)allow_self_join;
        Shape s;
        std::size_t n = 1 + pick(opts_.max_atoms);
        std::size_t fresh = 0;
        var_type_.clear();
        auto new_var = [&] {
            auto v = "v" + std::to_string(fresh++);
            var_type_[v] = coin(0.25);
            return v;
        };
        for (std::size_t i = 0; i < n; ++i) {
            AtomShape a;
            if (i == 0) {
                std::size_t k = 1 + pick(3);
                for (std::size_t c = 0; c < k; ++c) a.vars.push_back(new_var());
                s.parent.push_back(0);
            } else {
                std::size_t p = pick(i);
                s.parent.push_back(p);
                std::vector<std::string> pv;
                for (const auto& v : s.atoms[p].vars)
                    if (!v.empty() && std::find(pv.begin(), pv.end(), v) == pv.end()) pv.push_back(v);
                std::shuffle(pv.begin(), pv.end(), g_);
                std::size_t share = pick(std::min<std::size_t>(pv.size(), 2) + 1);
                for (std::size_t c = 0; c < share; ++c) a.vars.push_back(pv[c]);
                std::size_t extra = pick(3);
                if (a.vars.empty() && extra == 0) extra = 1;
                for (std::size_t c = 0; c < extra; ++c) a.vars.push_back(new_var());
                std::shuffle(a.vars.begin(), a.vars.end(), g_);
            }
            if (allow_special && coin(0.15)) {
                // repeated variable column
                a.vars.insert(a.vars.begin() + static_cast<long>(pick(a.vars.size() + 1)), a.vars[pick(a.vars.size())]);
            }
            a.constants.assign(a.vars.size(), 0);
            if (allow_special && coin(0.15)) {
                auto pos = pick(a.vars.size() + 1);
                a.vars.insert(a.vars.begin() + static_cast<long>(pos), "");
                a.constants.insert(a.constants.begin() + static_cast<long>(pos), static_cast<std::int64_t>(pick(3)));
            }
            s.atoms.push_back(std::move(a));
        }
        // Head: full, a connex subtree of atoms, or a random subset.
        std::vector<std::string> all;
        for (const auto& a : s.atoms)
            for (const auto& v : a.vars)
                if (!v.empty() && std::find(all.begin(), all.end(), v) == all.end()) all.push_back(v);
        auto mode = pick(3);
        if (mode == 0) {
            s.head = all;
        } else if (mode == 1) {
            std::vector<bool> in(n, false);
            in[0] = true;
            for (std::size_t i = 1; i < n; ++i) in[i] = in[s.parent[i]] && coin(0.5);
            for (std::size_t i = 0; i < n; ++i)
                if (in[i])
                    for (const auto& v : s.atoms[i].vars)
                        if (!v.empty() && std::find(s.head.begin(), s.head.end(), v) == s.head.end()) s.head.push_back(v);
        } else {
            for (const auto& v : all)
                if (coin(0.5)) s.head.push_back(v);
        }
        std::shuffle(s.head.begin(), s.head.end(), g_);
        return s;
    }

    CQ realize(const Shape& s, Database& db, const std::string& prefix) {
        CQ q;
        q.head = s.head;
        std::int64_t domain = 2 + static_cast<std::int64_t>(pick(8));
        std::vector<std::pair<std::vector<bool>, std::string>> made;  // column types -> relation, for self-joins
        for (const auto& a : s.atoms) {
            std::vector<bool> types;
            for (std::size_t c = 0; c < a.vars.size(); ++c) types.push_back(a.vars[c].empty() ? false : var_type_[a.vars[c]]);
            std::string name;
            for (const auto& [t, n] : made)
                if (t == types && prefix.empty() && coin(0.3)) name = n;
            if (name.empty()) {
                name = prefix + "R" + std::to_string(counter_++);
                std::size_t target = 1 + pick(opts_.max_tuples);
                std::vector<Tuple> rows;
                for (std::size_t r = 0; r < target; ++r) {
                    Tuple t;
                    for (std::size_t c = 0; c < types.size(); ++c)
                        t.push_back(value_for(types[c], static_cast<std::int64_t>(pick(static_cast<std::size_t>(domain)))));
                    rows.push_back(std::move(t));
                }
                db.add(Relation::from_tuples(name, types.size(), std::move(rows)));
                made.push_back({types, name});
            }
            Atom atom{name, {}};
            for (std::size_t c = 0; c < a.vars.size(); ++c) {
                if (a.vars[c].empty())
                    atom.terms.push_back(Value(a.constants[c]));
                else
                    atom.terms.push_back(Variable{a.vars[c]});
            }
            q.atoms.push_back(std::move(atom));
        }
        return q;
    }

    std::optional<RandomInstance> finish(const UCQ& u, const Database& db, bool mc) {
        for (const auto& q : u.disjuncts)
            if (is_free_connex(q).kind != QueryClass::FreeConnex) return std::nullopt;
        RandomInstance inst;
        inst.query = u;
        inst.db = db;
        inst.mc_shaped = mc;
        try {
            inst.expected = brute_force_answers(u, db, 2'000'000);
        } catch (const GuardExceeded&) {
            return std::nullopt;
        }
        if (inst.expected.size() > opts_.max_answers) return std::nullopt;
        return inst;
    }
};

}  // namespace rqe::testing

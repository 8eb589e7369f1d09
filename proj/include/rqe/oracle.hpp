#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rqe/query.hpp"
#include "rqe/relation.hpp"

namespace rqe {

struct GuardExceeded : Error {
    using Error::Error;
};

/// Reference evaluation by backtracking homomorphism search. Works for
/// any CQ (cyclic ones included); independent of the join-tree machinery.
/// Throws GuardExceeded once more than `guard` partial assignments are
/// explored.
inline std::vector<Tuple> brute_force_answers(const CQ& q, const Database& db, std::uint64_t guard = 1'000'000) {
    struct Step {
        std::size_t atom;
        std::vector<std::size_t> lookup_cols;  // constants and already bound variables
        std::vector<std::size_t> bind_cols;    // first occurrences of new variables
        std::vector<std::pair<std::size_t, std::size_t>> same;  // repeated new variable: (col, first col)
        std::unordered_map<Tuple, std::vector<std::size_t>, TupleHash> rows;
    };
    const auto vars = q.body_variables();
    std::unordered_map<std::string, std::size_t> var_id;
    for (std::size_t i = 0; i < vars.size(); ++i) var_id[vars[i]] = i;

    // Greedy order: next atom with the most already-bound variables.
    std::vector<bool> used(q.atoms.size(), false), bound(vars.size(), false);
    std::vector<Step> plan;
    for (std::size_t step = 0; step < q.atoms.size(); ++step) {
        std::size_t best = q.atoms.size();
        long best_score = -1;
        for (std::size_t i = 0; i < q.atoms.size(); ++i) {
            if (used[i]) continue;
            long score = 0;
            for (const auto& t : q.atoms[i].terms)
                if (const auto* v = std::get_if<Variable>(&t); !v || bound[var_id[v->name]]) ++score;
            if (score > best_score) best = i, best_score = score;
        }
        used[best] = true;
        const auto& atom = q.atoms[best];
        const auto& rel = db.at(atom.relation);
        if (rel.arity() != atom.terms.size() && !(rel.empty() && rel.arity() == 0))
            throw DataError("atom " + to_string(atom) + ": arity mismatch with relation " + atom.relation);
        Step s;
        s.atom = best;
        std::unordered_map<std::string, std::size_t> first_here;
        for (std::size_t c = 0; c < atom.terms.size(); ++c) {
            const auto* v = std::get_if<Variable>(&atom.terms[c]);
            if (!v || bound[var_id[v->name]]) {
                s.lookup_cols.push_back(c);
            } else if (auto it = first_here.find(v->name); it != first_here.end()) {
                s.same.push_back({c, it->second});
            } else {
                first_here[v->name] = c;
                s.bind_cols.push_back(c);
            }
        }
        for (const auto& [name, _] : first_here) bound[var_id[name]] = true;
        for (std::size_t r = 0; r < rel.size(); ++r) {
            Tuple key;
            for (auto c : s.lookup_cols) key.push_back(rel[r][c]);
            s.rows[key].push_back(r);
        }
        plan.push_back(std::move(s));
    }

    std::vector<Value> assignment(vars.size());
    std::vector<Tuple> answers;
    std::uint64_t explored = 0;
    auto search = [&](auto&& self, std::size_t depth) -> void {
        if (++explored > guard) throw GuardExceeded("brute force exceeded " + std::to_string(guard) + " partial assignments");
        if (depth == plan.size()) {
            Tuple a;
            for (const auto& h : q.head) a.push_back(assignment[var_id.at(h)]);
            answers.push_back(std::move(a));
            return;
        }
        const auto& s = plan[depth];
        const auto& atom = q.atoms[s.atom];
        const auto& rel = db.at(atom.relation);
        Tuple key;
        for (auto c : s.lookup_cols) {
            if (const auto* v = std::get_if<Variable>(&atom.terms[c]))
                key.push_back(assignment[var_id.at(v->name)]);
            else
                key.push_back(std::get<Value>(atom.terms[c]));
        }
        auto it = s.rows.find(key);
        if (it == s.rows.end()) return;
        for (auto r : it->second) {
            const auto& t = rel[r];
            bool ok = true;
            for (auto [c, f] : s.same) ok = ok && t[c] == t[f];
            if (!ok) continue;
            for (auto c : s.bind_cols) assignment[var_id.at(std::get<Variable>(atom.terms[c]).name)] = t[c];
            self(self, depth + 1);
        }
    };
    search(search, 0);
    std::sort(answers.begin(), answers.end());
    answers.erase(std::unique(answers.begin(), answers.end()), answers.end());
    return answers;
}

/// Union of the disjuncts' answers, canonically sorted.
inline std::vector<Tuple> brute_force_answers(const UCQ& u, const Database& db, std::uint64_t guard = 1'000'000) {
    std::vector<Tuple> all;
    for (const auto& q : u.disjuncts) {
        auto a = brute_force_answers(q, db, guard);
        all.insert(all.end(), a.begin(), a.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

}  // namespace rqe

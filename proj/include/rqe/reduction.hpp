#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rqe/query.hpp"
#include "rqe/relation.hpp"

namespace rqe {

/// A self-join-free full acyclic join over a globally consistent database.
/// Every atom has distinct variable terms only, and its relation is stored
/// in `db` under the atom's relation name with columns in term order.
struct FullJoinInstance {
    CQ query;
    JoinTree tree;
    Database db;

    const Relation& relation(std::size_t atom) const { return db.at(query.atoms[atom].relation); }
};

namespace detail {

inline std::vector<std::string> atom_vars(const Atom& a) {
    std::vector<std::string> out;
    for (const auto& t : a.terms) out.push_back(std::get<Variable>(t).name);
    return out;
}

/// Column positions in `atom` of the hypergraph variables `ids`.
inline std::vector<std::size_t> columns_of(const Atom& atom, const Hypergraph& h, const std::vector<VarId>& ids) {
    std::vector<std::size_t> cols;
    for (auto id : ids) {
        const auto& name = h.nodes[id];
        std::size_t c = 0;
        while (c < atom.terms.size() && std::get<Variable>(atom.terms[c]).name != name) ++c;
        if (c == atom.terms.size()) throw InternalError("variable " + name + " not in atom " + atom.relation);
        cols.push_back(c);
    }
    return cols;
}

inline Tuple project_tuple(const Tuple& t, const std::vector<std::size_t>& cols) {
    Tuple out;
    out.reserve(cols.size());
    for (auto c : cols) out.push_back(t[c]);
    return out;
}

/// target ⋉ source on target[target_cols] = source[source_cols].
inline Relation semijoin(const Relation& target, const std::vector<std::size_t>& target_cols, const Relation& source,
                         const std::vector<std::size_t>& source_cols) {
    std::unordered_set<Tuple, TupleHash> keys;
    keys.reserve(source.size());
    for (const auto& t : source.tuples()) keys.insert(project_tuple(t, source_cols));
    return target.filtered([&](const Tuple& t) { return keys.count(project_tuple(t, target_cols)) != 0; });
}

}  // namespace detail

/// Gives each atom its own relation copy with constants and repeated
/// variables resolved by selection, so the result is self-join-free and
/// its atoms carry distinct variables only.
inline std::pair<CQ, Database> normalize_atoms(const CQ& q, const Database& db) {
    CQ out;
    out.name = q.name;
    out.head = q.head;
    Database out_db;
    for (std::size_t i = 0; i < q.atoms.size(); ++i) {
        const auto& atom = q.atoms[i];
        const auto& rel = db.at(atom.relation);
        // Empty CSV files carry no arity information.
        if (rel.arity() != atom.terms.size() && !(rel.empty() && rel.arity() == 0))
            throw DataError("atom " + to_string(atom) + " has " + std::to_string(atom.terms.size()) +
                            " terms but relation " + atom.relation + " has arity " + std::to_string(rel.arity()));

        std::vector<std::size_t> keep;                                 // first occurrence of each variable
        std::vector<std::pair<std::size_t, std::size_t>> equalities;  // (column, earlier column)
        std::vector<std::pair<std::size_t, Value>> constants;
        Atom normalized;
        normalized.relation = atom.relation + "#" + std::to_string(i);
        for (std::size_t c = 0; c < atom.terms.size(); ++c) {
            if (const auto* v = std::get_if<Variable>(&atom.terms[c])) {
                auto prev = std::find_if(keep.begin(), keep.end(), [&](std::size_t k) {
                    return std::get<Variable>(atom.terms[k]).name == v->name;
                });
                if (prev == keep.end()) {
                    keep.push_back(c);
                    normalized.terms.push_back(*v);
                } else {
                    equalities.push_back({c, *prev});
                }
            } else {
                constants.push_back({c, std::get<Value>(atom.terms[c])});
            }
        }
        std::vector<Tuple> tuples;
        for (const auto& t : rel.tuples()) {
            bool ok = true;
            for (const auto& [c, v] : constants) ok = ok && t[c] == v;
            for (const auto& [c, e] : equalities) ok = ok && t[c] == t[e];
            if (ok) tuples.push_back(detail::project_tuple(t, keep));
        }
        // Dropped columns are constant or copies of kept ones, so the
        // projection stays sorted and duplicate-free.
        out_db.add(Relation::from_sorted(normalized.relation, keep.size(), std::move(tuples)));
        out.atoms.push_back(std::move(normalized));
    }
    return {std::move(out), std::move(out_db)};
}

/// Yannakakis full reducer: a leaf-to-root then a root-to-leaf semi-join
/// pass. `q` must be normalized and `tree` a join tree of its hypergraph.
/// Tuple order within each relation is preserved.
inline Database full_reduction(const CQ& q, const JoinTree& tree, const Database& db) {
    const auto h = make_hypergraph(q);
    std::vector<Relation> rels;
    for (const auto& a : q.atoms) rels.push_back(db.at(a.relation));

    auto reduce = [&](std::size_t target, std::size_t source, const std::vector<VarId>& shared) {
        rels[target] = detail::semijoin(rels[target], detail::columns_of(q.atoms[target], h, shared), rels[source],
                                        detail::columns_of(q.atoms[source], h, shared));
    };
    for (auto n : tree.post_order())
        if (tree.parent[n]) reduce(*tree.parent[n], n, tree.parent_shared[n]);
    for (auto n : tree.pre_order())
        if (tree.parent[n]) reduce(n, *tree.parent[n], tree.parent_shared[n]);

    Database out;
    for (auto& r : rels) out.add(std::move(r));
    return out;
}

/// Turns a normalized free-connex CQ over a fully reduced database into a
/// full acyclic join with the same answers: every atom is projected onto
/// its head variables, and atoms that lost variables are dropped when
/// their projection is covered by another kept atom.
inline FullJoinInstance project_to_full(const CQ& q, const Database& reduced) {
    std::unordered_set<std::string> head(q.head.begin(), q.head.end());
    const auto n = q.atoms.size();
    std::vector<std::vector<std::size_t>> cols(n);
    std::vector<std::vector<std::string>> proj(n);
    std::vector<bool> lost(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        auto vars = detail::atom_vars(q.atoms[i]);
        for (std::size_t c = 0; c < vars.size(); ++c) {
            if (head.count(vars[c])) {
                cols[i].push_back(c);
                proj[i].push_back(vars[c]);
            } else {
                lost[i] = true;
            }
        }
    }
    auto covers = [&](std::size_t k, std::size_t i) {
        return std::all_of(proj[i].begin(), proj[i].end(), [&](const std::string& v) {
            return std::find(proj[k].begin(), proj[k].end(), v) != proj[k].end();
        });
    };
    std::vector<bool> keep(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        if (!lost[i]) continue;
        if (proj[i].empty()) {
            keep[i] = false;
            continue;
        }
        for (std::size_t k = 0; k < n && keep[i]; ++k) {
            if (k == i || !covers(k, i)) continue;
            bool strictly_larger = proj[k].size() > proj[i].size();
            if (strictly_larger || !lost[k] || k < i) keep[i] = false;
        }
    }

    FullJoinInstance inst;
    inst.query.name = q.name;
    inst.query.head = q.head;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        const auto& name = q.atoms[i].relation;
        Atom a;
        a.relation = name;
        for (const auto& v : proj[i]) a.terms.push_back(Variable{v});
        const auto& rel = reduced.at(name);
        inst.db.add(lost[i] ? rel.project(cols[i]) : rel);
        inst.query.atoms.push_back(std::move(a));
    }
    if (inst.query.atoms.empty()) {
        // Boolean query: one nullary atom that holds () iff an answer exists.
        bool nonempty = std::all_of(q.atoms.begin(), q.atoms.end(),
                                    [&](const Atom& a) { return !reduced.at(a.relation).empty(); });
        Relation unit("true#", 0);
        if (nonempty) unit = Relation::from_sorted("true#", 0, {Tuple{}});
        inst.db.add(std::move(unit));
        inst.query.atoms.push_back(Atom{"true#", {}});
    }
    auto tree = gyo_join_tree(make_hypergraph(inst.query));
    if (!tree) throw InternalError("projection of free-connex query " + to_string(q) + " is cyclic");
    inst.tree = std::move(*tree);
    return inst;
}

/// Full pipeline: classify, normalize, fully reduce, project.
inline FullJoinInstance prepare_cq(const CQ& q, const Database& db) {
    auto cls = is_free_connex(q);
    if (cls.kind != QueryClass::FreeConnex)
        throw QueryClassError("query is " + std::string(to_string(cls.kind)) + ", not free-connex: " + to_string(q));
    auto [normalized, ndb] = normalize_atoms(q, db);
    auto tree = gyo_join_tree(make_hypergraph(normalized));
    if (!tree) throw InternalError("normalized query lost acyclicity");
    auto reduced = full_reduction(normalized, *tree, ndb);
    return project_to_full(normalized, reduced);
}

}  // namespace rqe

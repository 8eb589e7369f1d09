#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rqe/common.hpp"
#include "rqe/relation.hpp"

namespace rqe {

//---------------------------------------------------------------------------
// Query AST
//---------------------------------------------------------------------------

struct Variable {
    std::string name;
    friend bool operator==(const Variable&, const Variable&) = default;
};

using Term = std::variant<Variable, Value>;

inline bool is_variable(const Term& t) { return std::holds_alternative<Variable>(t); }

struct Atom {
    std::string relation;
    std::vector<Term> terms;
    friend bool operator==(const Atom&, const Atom&) = default;
};

struct CQ {
    std::string name = "Q";
    std::vector<std::string> head;
    std::vector<Atom> atoms;

    /// Distinct variables in order of first occurrence in the body.
    std::vector<std::string> body_variables() const {
        std::vector<std::string> out;
        for (const auto& a : atoms)
            for (const auto& t : a.terms)
                if (const auto* v = std::get_if<Variable>(&t))
                    if (std::find(out.begin(), out.end(), v->name) == out.end()) out.push_back(v->name);
        return out;
    }

    /// True when every body variable appears in the head.
    bool is_full() const {
        for (const auto& v : body_variables())
            if (std::find(head.begin(), head.end(), v) == head.end()) return false;
        return true;
    }

    friend bool operator==(const CQ&, const CQ&) = default;
};

struct UCQ {
    std::vector<CQ> disjuncts;
    std::size_t head_arity() const { return disjuncts.empty() ? 0 : disjuncts.front().head.size(); }
};

inline std::string to_string(const Term& t) {
    if (const auto* v = std::get_if<Variable>(&t)) return v->name;
    const auto& c = std::get<Value>(t);
    if (std::holds_alternative<std::string>(c)) return '"' + std::get<std::string>(c) + '"';
    return rqe::to_string(c);
}

inline std::string to_string(const Atom& a) {
    std::string s = a.relation + "(";
    for (std::size_t i = 0; i < a.terms.size(); ++i) s += (i ? ", " : "") + to_string(a.terms[i]);
    return s + ")";
}

inline std::string to_string(const CQ& q) {
    std::string s = q.name + "(";
    for (std::size_t i = 0; i < q.head.size(); ++i) s += (i ? ", " : "") + q.head[i];
    s += ") :- ";
    for (std::size_t i = 0; i < q.atoms.size(); ++i) s += (i ? ", " : "") + to_string(q.atoms[i]);
    return s + ".";
}

inline std::string to_string(const UCQ& u) {
    std::string s;
    for (std::size_t i = 0; i < u.disjuncts.size(); ++i) s += (i ? " UNION " : "") + to_string(u.disjuncts[i]);
    return s;
}

//---------------------------------------------------------------------------
// Parser
//---------------------------------------------------------------------------

namespace detail {

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : text_(text) {}

    UCQ parse() {
        UCQ u;
        u.disjuncts.push_back(rule());
        skip();
        while (!at_end()) {
            expect_keyword("UNION");
            u.disjuncts.push_back(rule());
            skip();
        }
        for (std::size_t i = 1; i < u.disjuncts.size(); ++i)
            if (u.disjuncts[i].head.size() != u.disjuncts[0].head.size())
                throw ParseError("disjunct " + std::to_string(i + 1) + " has head arity " +
                                     std::to_string(u.disjuncts[i].head.size()) + ", expected " +
                                     std::to_string(u.disjuncts[0].head.size()),
                                 rule_starts_[i]);
        return u;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<std::size_t> rule_starts_;

    bool at_end() const { return pos_ >= text_.size(); }

    void skip() {
        while (!at_end()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#' || c == '%') {
                while (!at_end() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void expect(std::string_view tok) {
        skip();
        if (text_.substr(pos_, tok.size()) != tok) fail("expected '" + std::string(tok) + "'");
        pos_ += tok.size();
    }

    bool accept(char c) {
        skip();
        if (!at_end() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    std::string name() {
        skip();
        if (at_end() || !ident_start(text_[pos_])) fail("expected identifier");
        auto start = pos_;
        while (!at_end() && ident_char(text_[pos_])) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    void expect_keyword(std::string_view kw) {
        skip();
        auto start = pos_;
        if (at_end() || !ident_start(text_[pos_]) || name() != kw) {
            pos_ = start;
            fail("expected '" + std::string(kw) + "' or end of input");
        }
    }

    Term term() {
        skip();
        if (at_end()) fail("expected term");
        char c = text_[pos_];
        if (c == '"') {
            ++pos_;
            auto start = pos_;
            while (!at_end() && text_[pos_] != '"') ++pos_;
            if (at_end()) throw ParseError("unterminated string literal", start - 1);
            std::string s(text_.substr(start, pos_ - start));
            ++pos_;
            return Value(std::move(s));
        }
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
            auto start = pos_;
            ++pos_;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            auto v = parse_int(text_.substr(start, pos_ - start));
            if (!v) throw ParseError("invalid integer literal", start);
            return Value(*v);
        }
        if (ident_start(c)) return Variable{name()};
        fail("expected variable, integer or string");
    }

    CQ rule() {
        skip();
        rule_starts_.push_back(pos_);
        auto head_pos = pos_;
        CQ q;
        q.name = name();
        expect("(");
        if (!accept(')')) {
            do {
                skip();
                if (at_end() || !ident_start(text_[pos_])) fail("head terms must be variables");
                q.head.push_back(name());
            } while (accept(','));
            expect(")");
        }
        expect(":-");
        do {
            Atom a;
            a.relation = name();
            expect("(");
            if (!accept(')')) {
                do a.terms.push_back(term());
                while (accept(','));
                expect(")");
            }
            q.atoms.push_back(std::move(a));
        } while (accept(','));
        expect(".");
        auto vars = q.body_variables();
        for (const auto& h : q.head)
            if (std::find(vars.begin(), vars.end(), h) == vars.end())
                throw ParseError("unsafe head variable '" + h + "' does not occur in the body", head_pos);
        return q;
    }
};

}  // namespace detail

/// Parses `Q(x,y) :- R(x,y), S(y,"a"). UNION Q(x,y) :- ...`.
inline UCQ parse_query(std::string_view text) { return detail::QueryParser(text).parse(); }

inline CQ parse_cq(std::string_view text) {
    auto u = parse_query(text);
    if (u.disjuncts.size() != 1) throw ParseError("expected a single conjunctive query", 0);
    return u.disjuncts.front();
}

//---------------------------------------------------------------------------
// Hypergraph and join trees
//---------------------------------------------------------------------------

using VarId = std::size_t;

struct Hypergraph {
    std::vector<std::string> nodes;
    /// Sorted, duplicate-free variable ids; one edge per atom.
    std::vector<std::vector<VarId>> edges;
};

inline Hypergraph make_hypergraph(const CQ& q) {
    Hypergraph h;
    h.nodes = q.body_variables();
    std::unordered_map<std::string, VarId> id;
    for (VarId i = 0; i < h.nodes.size(); ++i) id[h.nodes[i]] = i;
    for (const auto& a : q.atoms) {
        std::vector<VarId> e;
        for (const auto& t : a.terms)
            if (const auto* v = std::get_if<Variable>(&t)) e.push_back(id.at(v->name));
        std::sort(e.begin(), e.end());
        e.erase(std::unique(e.begin(), e.end()), e.end());
        h.edges.push_back(std::move(e));
    }
    return h;
}

/// Rooted tree over hyperedges; node i corresponds to edge / atom i.
struct JoinTree {
    std::size_t root = 0;
    std::vector<std::optional<std::size_t>> parent;
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::vector<VarId>> vars;
    /// Variables shared with the parent, ascending; empty at the root.
    std::vector<std::vector<VarId>> parent_shared;

    std::size_t size() const { return vars.size(); }
    bool is_leaf(std::size_t n) const { return children[n].empty(); }

    /// Children before parents.
    std::vector<std::size_t> post_order() const {
        std::vector<std::size_t> out;
        if (vars.empty()) return out;
        std::vector<std::pair<std::size_t, bool>> stack{{root, false}};
        while (!stack.empty()) {
            auto [n, expanded] = stack.back();
            stack.pop_back();
            if (expanded) {
                out.push_back(n);
                continue;
            }
            stack.push_back({n, true});
            for (auto it = children[n].rbegin(); it != children[n].rend(); ++it) stack.push_back({*it, false});
        }
        return out;
    }

    /// Parents before children; children in ascending id order.
    std::vector<std::size_t> pre_order() const {
        std::vector<std::size_t> out;
        if (vars.empty()) return out;
        std::vector<std::size_t> stack{root};
        while (!stack.empty()) {
            auto n = stack.back();
            stack.pop_back();
            out.push_back(n);
            for (auto it = children[n].rbegin(); it != children[n].rend(); ++it) stack.push_back(*it);
        }
        return out;
    }
};

/// Checks tree shape (single root, parent links consistent, acyclic) and
/// the running-intersection property for every variable.
inline bool satisfies_running_intersection(const JoinTree& t) {
    const auto n = t.size();
    if (n == 0) return true;
    if (t.parent.size() != n || t.children.size() != n || t.parent_shared.size() != n) return false;
    if (t.parent[t.root]) return false;
    if (t.post_order().size() != n) return false;
    std::set<VarId> all;
    for (const auto& vs : t.vars) all.insert(vs.begin(), vs.end());
    auto has = [&](std::size_t node, VarId v) { return std::binary_search(t.vars[node].begin(), t.vars[node].end(), v); };
    for (auto v : all) {
        // Nodes holding v form a connected subtree iff exactly one of them
        // has a parent lacking v (or is the root).
        std::size_t tops = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (has(i, v) && (!t.parent[i] || !has(*t.parent[i], v))) ++tops;
        if (tops != 1) return false;
    }
    return true;
}

/// GYO ear removal. Returns a join tree iff the hypergraph is acyclic.
///
/// An edge e is an ear when some other remaining edge (its witness)
/// contains every variable e shares with the rest. The highest-id ear is
/// removed first and attached under its lowest-id witness; the last edge
/// left is the root.
inline std::optional<JoinTree> gyo_join_tree(const Hypergraph& h) {
    const auto n = h.edges.size();
    JoinTree t;
    t.vars = h.edges;
    t.parent.assign(n, std::nullopt);
    t.children.assign(n, {});
    t.parent_shared.assign(n, {});
    if (n == 0) return t;

    std::vector<bool> alive(n, true);
    std::size_t remaining = n;
    auto subset = [](const std::vector<VarId>& a, const std::vector<VarId>& b) {
        return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    while (remaining > 1) {
        bool removed = false;
        for (std::size_t e = n; e-- > 0 && !removed;) {
            if (!alive[e]) continue;
            std::vector<VarId> shared;
            for (auto v : h.edges[e]) {
                bool elsewhere = false;
                for (std::size_t f = 0; f < n && !elsewhere; ++f)
                    if (f != e && alive[f] && std::binary_search(h.edges[f].begin(), h.edges[f].end(), v))
                        elsewhere = true;
                if (elsewhere) shared.push_back(v);
            }
            for (std::size_t f = 0; f < n; ++f) {
                if (f == e || !alive[f] || !subset(shared, h.edges[f])) continue;
                t.parent[e] = f;
                t.parent_shared[e] = shared;
                alive[e] = false;
                --remaining;
                removed = true;
                break;
            }
        }
        if (!removed) return std::nullopt;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) t.root = i;
        if (t.parent[i]) t.children[*t.parent[i]].push_back(i);
    }
    return t;
}

enum class QueryClass { FreeConnex, AcyclicNotFreeConnex, Cyclic };

inline const char* to_string(QueryClass c) {
    switch (c) {
        case QueryClass::FreeConnex: return "free-connex";
        case QueryClass::AcyclicNotFreeConnex: return "acyclic";
        case QueryClass::Cyclic: return "cyclic";
    }
    return "?";
}

struct Classification {
    QueryClass kind;
    /// Join tree of the query itself (not of the head-extended hypergraph);
    /// present unless the query is cyclic.
    std::optional<JoinTree> tree;
};

/// Free-connex iff acyclic and still acyclic after adding a hyperedge over
/// the head variables.
inline Classification is_free_connex(const CQ& q) {
    auto h = make_hypergraph(q);
    auto tree = gyo_join_tree(h);
    if (!tree) return {QueryClass::Cyclic, std::nullopt};
    std::vector<VarId> head_edge;
    for (const auto& v : q.head) {
        auto it = std::find(h.nodes.begin(), h.nodes.end(), v);
        head_edge.push_back(static_cast<VarId>(it - h.nodes.begin()));
    }
    std::sort(head_edge.begin(), head_edge.end());
    head_edge.erase(std::unique(head_edge.begin(), head_edge.end()), head_edge.end());
    auto extended = h;
    extended.edges.push_back(std::move(head_edge));
    if (!gyo_join_tree(extended)) return {QueryClass::AcyclicNotFreeConnex, std::move(tree)};
    return {QueryClass::FreeConnex, std::move(tree)};
}

}  // namespace rqe

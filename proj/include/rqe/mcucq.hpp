#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rqe/cq_index.hpp"
#include "rqe/shuffle.hpp"

namespace rqe {

/// Counters for union access; `lar_probes` counts (T-access, S-inverted-access)
/// pairs issued by the Largest searches.
struct McAccessStats {
    std::uint64_t s_access = 0;
    std::uint64_t membership_tests = 0;
    std::uint64_t t_access = 0;
    std::uint64_t s_inverted = 0;
    std::uint64_t lar_probes = 0;
};

/// Rank (1-based) in T of the largest T-element whose S-index is at most
/// `s_index`, or 0 if there is none. T's order must be a subsequence of S's.
inline Count largest_rank_at(const CqIndex& t, const CqIndex& s, const Count& s_index, McAccessStats* stats = nullptr) {
    const Count size = t.count();
    if (size == 0) return 0;
    auto s_rank_of = [&](const Count& k) {
        auto c = t.access(k);
        auto r = c ? s.inverted_access(*c) : std::nullopt;
        if (stats) {
            ++stats->t_access;
            ++stats->s_inverted;
            ++stats->lar_probes;
        }
        if (!r) throw InternalError("intersection answer missing from its superset");
        return *r;
    };
    Count kc = 0;
    Count jc = s_rank_of(kc);
    if (jc == s_index) return 1;
    if (jc > s_index) return 0;
    Count kd = size - 1;
    if (kd == kc) return 1;
    Count jd = s_rank_of(kd);
    if (jd <= s_index) return size;
    // Invariant: S-index of T[kc] < s_index < S-index of T[kd].
    while (kd - kc > 1) {
        Count mid = (kc + kd) / 2;
        Count jm = s_rank_of(mid);
        if (jm == s_index) return mid + 1;
        if (jm < s_index)
            kc = mid;
        else
            kd = mid;
    }
    return kc + 1;
}

/// Count of T-elements that are <= a in S's enumeration order.
inline Count largest_at_most(const CqIndex& t, const CqIndex& s, const Answer& a, McAccessStats* stats = nullptr) {
    auto j = s.inverted_access(a);
    if (stats) ++stats->s_inverted;
    if (!j) throw InternalError("largest_at_most: answer not in S");
    return largest_rank_at(t, s, *j, stats);
}

/// Random access over a mutually compatible union S_1 ∪ ... ∪ S_m. The
/// order is that of the union trick iterated as S_1 ∪ (S_2 ∪ (... ∪ S_m)):
/// walk S_1, replacing each element that also lies in the rest by the
/// next element of the rest, then drain the rest.
class McUcqIndex {
public:
    static constexpr std::size_t max_disjuncts = 4;

    /// Syntactic applicability check: at most max_disjuncts disjuncts, all
    /// with the same head and atom pattern up to relation names. Throws
    /// QueryClassError if a disjunct is not free-connex.
    static bool recognize(const UCQ& ucq, std::string* why = nullptr) {
        auto reject = [&](std::string reason) {
            if (why) *why = std::move(reason);
            return false;
        };
        const auto m = ucq.disjuncts.size();
        if (m == 0) return reject("empty union");
        for (const auto& q : ucq.disjuncts) {
            auto cls = is_free_connex(q);
            if (cls.kind != QueryClass::FreeConnex)
                throw QueryClassError("disjunct is " + std::string(to_string(cls.kind)) + ": " + to_string(q));
        }
        if (m > max_disjuncts) return reject("more than " + std::to_string(max_disjuncts) + " disjuncts");
        auto shape = signature(structure_of(ucq.disjuncts.front()));
        for (std::size_t i = 1; i < m; ++i)
            if (signature(structure_of(ucq.disjuncts[i])) != shape)
                return reject("disjunct " + std::to_string(i + 1) + " differs structurally from disjunct 1");
        return true;
    }

    /// Builds the index, or returns nullopt (with `why` set) when the union
    /// is not recognized as mutually compatible.
    static std::optional<McUcqIndex> build(const UCQ& ucq, const Database& db, std::string* why = nullptr) {
        if (!recognize(ucq, why)) return std::nullopt;
        const auto m = ucq.disjuncts.size();

        McUcqIndex out;
        out.m_ = m;
        for (const auto& q : ucq.disjuncts) out.s_.emplace_back(prepare_cq(q, db));
        out.t_.resize(m);
        for (std::size_t l = 0; l < m; ++l) {
            for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
                if (mask & ((2u << l) - 1)) continue;  // I ⊆ (l, m)
                out.t_[l].emplace(mask, out.intersect(l, mask));
            }
        }
        out.compute_counts();
        return out;
    }

    std::size_t disjuncts() const { return m_; }
    const CqIndex& disjunct(std::size_t l) const { return s_[l]; }

    /// T_{l,I} for a bitmask I over disjuncts strictly after l.
    const CqIndex& intersection(std::size_t l, std::uint32_t mask) const { return t_[l].at(mask); }
    const std::map<std::uint32_t, CqIndex>& intersections(std::size_t l) const { return t_[l]; }

    /// |S_l ∪ ... ∪ S_m| by the recursive inclusion-exclusion.
    const Count& count() const { return union_[0]; }
    const Count& count_from(std::size_t l) const { return union_[l]; }

    /// |S_l ∩ (S_{l+1} ∪ ... ∪ S_m)|.
    const Count& overlap(std::size_t l) const { return overlap_[l]; }

    std::optional<Answer> access(const Count& j, McAccessStats* stats = nullptr) const {
        if (j < 0) return std::nullopt;
        return access_from(0, j, stats);
    }

    /// |{a_1..a_j} ∩ (S_{l+1} ∪ ... ∪ S_m)| where a_j = a in S_l's order.
    Count compute_k(std::size_t l, const Answer& a, McAccessStats* stats = nullptr) const {
        auto j = s_[l].inverted_access(a);
        if (stats) ++stats->s_inverted;
        if (!j) throw InternalError("compute_k: answer not in the level's disjunct");
        return compute_k_at(l, *j, stats);
    }

private:
    std::size_t m_ = 0;
    std::vector<CqIndex> s_;
    std::vector<std::map<std::uint32_t, CqIndex>> t_;
    std::vector<Count> union_;
    std::vector<Count> overlap_;

    McUcqIndex() = default;

    /// Variable pattern with names replaced by first-occurrence numbers
    /// (head first); relation names are ignored.
    static std::vector<std::vector<std::size_t>> signature(const CQ& q) {
        std::unordered_map<std::string, std::size_t> id;
        auto number = [&](const std::string& v) { return id.try_emplace(v, id.size()).first->second; };
        std::vector<std::vector<std::size_t>> sig;
        std::vector<std::size_t> head;
        for (const auto& v : q.head) head.push_back(number(v));
        sig.push_back(std::move(head));
        for (const auto& a : q.atoms) {
            std::vector<std::size_t> row;
            for (const auto& t : a.terms) row.push_back(number(std::get<Variable>(t).name));
            sig.push_back(std::move(row));
        }
        return sig;
    }

    /// The variable pattern normalize_atoms would produce, without data.
    static CQ structure_of(const CQ& q) {
        CQ out;
        out.head = q.head;
        for (const auto& a : q.atoms) {
            Atom n{a.relation, {}};
            for (const auto& t : a.terms)
                if (const auto* v = std::get_if<Variable>(&t))
                    if (std::find(n.terms.begin(), n.terms.end(), Term{*v}) == n.terms.end()) n.terms.push_back(*v);
            out.atoms.push_back(std::move(n));
        }
        return out;
    }

    /// Index over S_l ∩ ∩_{i∈I} S_i: S_l's full join with every relation
    /// intersected position-wise, then re-reduced.
    CqIndex intersect(std::size_t l, std::uint32_t mask) const {
        const auto& base = s_[l].instance();
        std::vector<Relation> rels;
        for (std::size_t k = 0; k < base.query.atoms.size(); ++k) {
            Relation r = base.relation(k);
            for (std::size_t i = 0; i < m_; ++i)
                if (mask & (1u << i)) {
                    const auto& other = s_[i].instance();
                    if (other.query.atoms.size() != base.query.atoms.size())
                        throw InternalError("structurally equal disjuncts produced different full joins");
                    r = intersect_relations(r, other.relation(k));
                }
            rels.push_back(std::move(r));
        }
        Database db;
        for (auto& r : rels) db.add(std::move(r));
        FullJoinInstance inst{base.query, base.tree, full_reduction(base.query, base.tree, db)};
        return CqIndex(std::move(inst));
    }

    void compute_counts() {
        union_.assign(m_, 0);
        overlap_.assign(m_, 0);
        for (std::size_t l = m_; l-- > 0;) {
            if (l + 1 == m_) {
                union_[l] = s_[l].count();
                continue;
            }
            Count inter = 0;
            for (const auto& [mask, t] : t_[l]) {
                if (std::popcount(mask) % 2 == 1)
                    inter += t.count();
                else
                    inter -= t.count();
            }
            overlap_[l] = inter;
            union_[l] = s_[l].count() + union_[l + 1] - inter;
        }
    }

    Count compute_k_at(std::size_t l, const Count& j, McAccessStats* stats) const {
        Count k = 0;
        for (const auto& [mask, t] : t_[l]) {
            Count n = largest_rank_at(t, s_[l], j, stats);
            if (std::popcount(mask) % 2 == 1)
                k += n;
            else
                k -= n;
        }
        return k;
    }

    bool in_rest(std::size_t l, const Answer& a, McAccessStats* stats) const {
        for (std::size_t i = l + 1; i < m_; ++i) {
            if (stats) ++stats->membership_tests;
            if (s_[i].inverted_access(a)) return true;
        }
        return false;
    }

    std::optional<Answer> access_from(std::size_t l, const Count& j, McAccessStats* stats) const {
        if (j >= union_[l]) return std::nullopt;
        if (stats) ++stats->s_access;
        if (l + 1 == m_) return s_[l].access(j);
        const Count& size = s_[l].count();
        if (j < size) {
            auto a = s_[l].access(j);
            if (!in_rest(l, *a, stats)) return a;
            Count k = compute_k_at(l, j, stats);
            return access_from(l + 1, k - 1, stats);
        }
        return access_from(l + 1, j - size + overlap_[l], stats);
    }
};

}  // namespace rqe

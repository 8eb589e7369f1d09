#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rqe/common.hpp"
#include "rqe/reduction.hpp"

namespace rqe {

/// An answer: values in head-variable order.
using Answer = Tuple;

/// Mixed-radix decomposition of `j`: the last digit is j mod w_m, the rest
/// recursively split floor(j / w_m).
inline std::vector<Count> split_index(Count j, const std::vector<Count>& weights) {
    std::vector<Count> out(weights.size());
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] < 1) throw InternalError("split_index: bucket weight below 1");
        out[i] = j % weights[i];
        j /= weights[i];
    }
    if (j != 0) throw InternalError("split_index: index exceeds product of weights");
    return out;
}

/// Inverse of split_index: j_m + w_m * combine(pairs[0..m-1]).
inline Count combine_index(const std::vector<std::pair<Count, Count>>& pairs) {
    Count acc = 0;
    for (const auto& [w, j] : pairs) {
        if (j < 0 || j >= w) throw InternalError("combine_index: digit out of range");
        acc = acc * w + j;
    }
    return acc;
}

/// Per-call counters; pass a pointer to collect them.
struct AccessStats {
    std::uint64_t probes = 0;       ///< binary-search comparisons
    std::uint64_t node_visits = 0;  ///< join-tree nodes descended
};

/// Weighted bucketed join-tree index over a full acyclic join. Supports
/// counting, random access by answer index and inverted access; the
/// induced answer order is fixed by the tree and canonical tuple order.
class CqIndex {
public:
    struct Bucket {
        Tuple key;
        /// Row ids into the node's relation, in canonical tuple order.
        std::vector<std::uint32_t> rows;
        /// start[k] = startIndex of rows[k]; start.back() = bucket weight.
        std::vector<Count> start;
        const Count& weight() const { return start.back(); }
    };

    struct Node {
        std::size_t atom = 0;
        std::vector<std::size_t> children;            // node ids, ascending
        std::vector<std::size_t> key_cols;            // columns of parent_shared vars
        std::vector<std::vector<std::size_t>> child_cols;  // per child: columns here of that child's key
        std::vector<VarId> column_var;                // per column: variable id
        std::vector<Bucket> buckets;
        std::unordered_map<Tuple, std::uint32_t, TupleHash> bucket_of_key;
        /// row -> (bucket, position in bucket)
        std::vector<std::pair<std::uint32_t, std::uint32_t>> location;
        std::unordered_map<Tuple, std::uint32_t, TupleHash> row_of_tuple;
        /// row -> bucket id in each child
        std::vector<std::vector<std::uint32_t>> child_bucket;
    };

    struct TupleInfo {
        Count weight;
        Count start_index;
        std::size_t bucket;
    };

    explicit CqIndex(FullJoinInstance inst) : inst_(std::move(inst)) { build(); }

    /// Builds from any CQ; throws QueryClassError unless free-connex.
    static CqIndex from_query(const CQ& q, const Database& db) { return CqIndex(prepare_cq(q, db)); }

    const Count& count() const { return total_; }
    std::size_t head_arity() const { return head_var_.size(); }
    const FullJoinInstance& instance() const { return inst_; }
    std::uint64_t build_touches() const { return build_touches_; }
    std::size_t root() const { return inst_.tree.root; }
    const Node& node(std::size_t atom) const { return nodes_[atom]; }

    std::size_t max_bucket_size() const {
        std::size_t m = 0;
        for (const auto& n : nodes_)
            for (const auto& b : n.buckets) m = std::max(m, b.rows.size());
        return m;
    }

    /// Weight, startIndex and bucket of a tuple of the given atom's relation.
    std::optional<TupleInfo> tuple_info(std::size_t atom, const Tuple& t) const {
        const auto& n = nodes_[atom];
        auto it = n.row_of_tuple.find(t);
        if (it == n.row_of_tuple.end()) return std::nullopt;
        auto [b, pos] = n.location[it->second];
        const auto& bucket = n.buckets[b];
        return TupleInfo{bucket.start[pos + 1] - bucket.start[pos], bucket.start[pos], b};
    }

    /// The j-th answer, or nullopt when j >= count().
    std::optional<Answer> access(const Count& j, AccessStats* stats = nullptr) const {
        if (j < 0 || j >= total_) return std::nullopt;
        std::vector<const Value*> assignment(num_vars_, nullptr);
        struct Task {
            std::size_t node;
            std::uint32_t bucket;
            Count j;
        };
        std::vector<Task> stack{{inst_.tree.root, 0, j}};
        std::vector<Count> weights;
        while (!stack.empty()) {
            Task task = std::move(stack.back());
            stack.pop_back();
            const auto& n = nodes_[task.node];
            const auto& bucket = n.buckets[task.bucket];
            if (stats) ++stats->node_visits;
            // Largest k with start[k] <= j.
            std::size_t lo = 0, hi = bucket.rows.size();
            while (hi - lo > 1) {
                auto mid = lo + (hi - lo) / 2;
                if (stats) ++stats->probes;
                if (bucket.start[mid] <= task.j)
                    lo = mid;
                else
                    hi = mid;
            }
            const auto row = bucket.rows[lo];
            const auto& tuple = relation(n.atom)[row];
            for (std::size_t c = 0; c < tuple.size(); ++c) assignment[n.column_var[c]] = &tuple[c];
            if (n.children.empty()) continue;
            weights.clear();
            for (std::size_t s = 0; s < n.children.size(); ++s)
                weights.push_back(nodes_[n.children[s]].buckets[n.child_bucket[row][s]].weight());
            auto digits = split_index(task.j - bucket.start[lo], weights);
            for (std::size_t s = 0; s < n.children.size(); ++s)
                stack.push_back({n.children[s], n.child_bucket[row][s], std::move(digits[s])});
        }
        Answer out;
        out.reserve(head_var_.size());
        for (auto v : head_var_) out.push_back(*assignment[v]);
        return out;
    }

    /// Index j with access(j) == answer, or nullopt if it is not an answer.
    std::optional<Count> inverted_access(const Answer& answer, AccessStats* stats = nullptr) const {
        if (answer.size() != head_var_.size() || total_ == 0) return std::nullopt;
        std::vector<const Value*> assignment(num_vars_, nullptr);
        for (std::size_t i = 0; i < answer.size(); ++i) {
            auto& slot = assignment[head_var_[i]];
            if (slot && *slot != answer[i]) return std::nullopt;
            slot = &answer[i];
        }
        // Post-order: each node's local index and the weight of its bucket.
        std::vector<Count> local(nodes_.size());
        std::vector<const Count*> bucket_weight(nodes_.size(), nullptr);
        for (auto id : post_order_) {
            const auto& n = nodes_[id];
            if (stats) ++stats->node_visits;
            Tuple t;
            t.reserve(n.column_var.size());
            for (auto v : n.column_var) t.push_back(*assignment[v]);
            auto it = n.row_of_tuple.find(t);
            if (it == n.row_of_tuple.end()) return std::nullopt;
            auto [b, pos] = n.location[it->second];
            const auto& bucket = n.buckets[b];
            std::vector<std::pair<Count, Count>> digits;
            digits.reserve(n.children.size());
            for (auto c : n.children) digits.emplace_back(*bucket_weight[c], local[c]);
            local[id] = bucket.start[pos] + combine_index(digits);
            bucket_weight[id] = &bucket.weight();
        }
        return local[inst_.tree.root];
    }

    /// All answers in index order; for tests and small outputs.
    std::vector<Answer> enumerate() const {
        std::vector<Answer> out;
        for (Count j = 0; j < total_; ++j) out.push_back(*access(j));
        return out;
    }

private:
    FullJoinInstance inst_;
    std::vector<Node> nodes_;
    std::vector<std::size_t> post_order_;
    std::vector<VarId> head_var_;
    std::size_t num_vars_ = 0;
    Count total_ = 0;
    std::uint64_t build_touches_ = 0;

    const Relation& relation(std::size_t atom) const { return inst_.relation(atom); }

    void build() {
        const auto& q = inst_.query;
        const auto& tree = inst_.tree;
        const auto h = make_hypergraph(q);
        num_vars_ = h.nodes.size();
        for (const auto& v : q.head) {
            auto it = std::find(h.nodes.begin(), h.nodes.end(), v);
            if (it == h.nodes.end()) throw InternalError("head variable " + v + " missing from full join");
            head_var_.push_back(static_cast<VarId>(it - h.nodes.begin()));
        }
        if (h.nodes.size() != q.body_variables().size() || !q.is_full())
            throw InternalError("CqIndex requires a full join");

        nodes_.resize(q.atoms.size());
        for (std::size_t i = 0; i < q.atoms.size(); ++i) {
            auto& n = nodes_[i];
            n.atom = i;
            n.children = tree.children[i];
            n.key_cols = detail::columns_of(q.atoms[i], h, tree.parent_shared[i]);
            for (auto c : n.children) n.child_cols.push_back(detail::columns_of(q.atoms[i], h, tree.parent_shared[c]));
            for (const auto& t : q.atoms[i].terms) {
                const auto& name = std::get<Variable>(t).name;
                n.column_var.push_back(static_cast<VarId>(std::find(h.nodes.begin(), h.nodes.end(), name) - h.nodes.begin()));
            }
        }

        post_order_ = tree.post_order();
        for (auto id : post_order_) {
            auto& n = nodes_[id];
            const auto& rel = relation(id);
            n.location.resize(rel.size());
            n.child_bucket.resize(rel.size());
            n.row_of_tuple.reserve(rel.size());
            // Partition into buckets; scanning in canonical order keeps
            // each bucket canonically sorted.
            for (std::uint32_t row = 0; row < rel.size(); ++row) {
                const auto& t = rel[row];
                auto key = detail::project_tuple(t, n.key_cols);
                auto [it, fresh] = n.bucket_of_key.try_emplace(key, static_cast<std::uint32_t>(n.buckets.size()));
                if (fresh) {
                    n.buckets.push_back(Bucket{std::move(key), {}, {Count(0)}});
                }
                auto& bucket = n.buckets[it->second];
                n.location[row] = {it->second, static_cast<std::uint32_t>(bucket.rows.size())};
                bucket.rows.push_back(row);
                n.row_of_tuple.emplace(t, row);

                Count w = 1;
                n.child_bucket[row].resize(n.children.size());
                for (std::size_t s = 0; s < n.children.size(); ++s) {
                    const auto& child = nodes_[n.children[s]];
                    auto found = child.bucket_of_key.find(detail::project_tuple(t, n.child_cols[s]));
                    if (found == child.bucket_of_key.end())
                        throw InternalError("tuple " + format_tuple(t, ',') + " of " + rel.name() +
                                            " has no partner bucket; database is not globally consistent");
                    n.child_bucket[row][s] = found->second;
                    w *= child.buckets[found->second].weight();
                    ++build_touches_;
                }
                bucket.start.push_back(bucket.start.back() + w);
                ++build_touches_;
            }
        }
        const auto& root = nodes_[tree.root];
        if (root.buckets.size() > 1) throw InternalError("root relation has more than one bucket");
        total_ = root.buckets.empty() ? Count(0) : root.buckets.front().weight();
    }
};

}  // namespace rqe

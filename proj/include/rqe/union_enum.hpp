#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "rqe/common.hpp"
#include "rqe/shuffle.hpp"

namespace rqe {

struct EmptySet : Error {
    EmptySet() : Error("sample from an empty answer set") {}
};

struct DeleteAbsent : Error {
    DeleteAbsent() : Error("delete of an answer that is not in the set") {}
};

/// Anything offering count, random access and inverted access.
template <typename H>
concept AnswerSetHandle = CountedHandle<H> && requires(const H& h, const Tuple& a) {
    { h.inverted_access(a) } -> std::convertible_to<std::optional<Count>>;
};

/// Answer set of an index with sampling, membership and deletion.
/// Deletions live in a lazy permutation overlay; the index is untouched.
/// Positions [0, i) of the overlay hold deleted answer indices.
template <AnswerSetHandle H>
class DeletableAnswerSet {
public:
    explicit DeletableAnswerSet(const H& handle) : handle_(&handle), perm_(handle.count()) {}

    Count count() const { return perm_.size() - deleted_; }
    const Count& initial_count() const { return perm_.size(); }

    /// Uniform over live answers; does not modify the set.
    Tuple sample(Rng& rng) const {
        if (count() == 0) throw EmptySet();
        Count k = deleted_ + rng.uniform_below(count());
        auto a = handle_->access(perm_.at(k));
        if (!a) throw InternalError("answer set: live index out of bound");
        return *a;
    }

    bool test(const Tuple& answer) const {
        auto m = handle_->inverted_access(answer);
        return m && perm_.position_of(*m) >= deleted_;
    }

    void remove(const Tuple& answer) {
        auto m = handle_->inverted_access(answer);
        if (!m) throw DeleteAbsent();
        auto k = perm_.position_of(*m);
        if (k < deleted_) throw DeleteAbsent();
        perm_.swap(k, deleted_);
        ++deleted_;
    }

    const LazyPermutation& overlay() const { return perm_; }

private:
    const H* handle_;
    LazyPermutation perm_;
    Count deleted_ = 0;
};

struct UnionStats {
    std::uint64_t iterations = 0;
    std::uint64_t rejections = 0;
    std::uint64_t emitted = 0;
    /// Rejections that happened right before each emission.
    std::vector<std::uint32_t> rejections_before;
    /// Nanoseconds spent in rejecting iterations right before each emission;
    /// filled only when timing is enabled.
    std::vector<std::uint64_t> rejection_ns_before;
    /// Every rejected answer, in order; filled only when tracking is enabled.
    std::vector<Tuple> rejected;
};

/// Uniformly random-order enumeration of S_1 ∪ ... ∪ S_k without
/// repetition. Each answer is emitted only through its owner, the
/// lowest-index set containing it; draws through any other provider are
/// rejected after deleting the answer from all non-owners.
template <AnswerSetHandle H>
class UnionRandomPermutation {
public:
    struct Options {
        bool timing = false;
        bool track_rejected = false;
    };

    UnionRandomPermutation(const std::vector<const H*>& handles, Rng rng, Options opts = {})
        : rng_(std::move(rng)), opts_(opts) {
        if (handles.empty()) throw InternalError("union of zero sets");
        for (const auto* h : handles) sets_.emplace_back(*h);
    }

    std::optional<Tuple> next() {
        std::uint32_t rejected = 0;
        std::uint64_t rejected_ns = 0;
        for (;;) {
            auto t0 = opts_.timing ? std::chrono::steady_clock::now() : std::chrono::steady_clock::time_point{};
            Count total = 0;
            for (const auto& s : sets_) total += s.count();
            if (total == 0) return std::nullopt;
            ++stats_.iterations;

            Count u = rng_.uniform_below(total);
            std::size_t chosen = 0;
            while (u >= sets_[chosen].count()) {
                u -= sets_[chosen].count();
                ++chosen;
            }
            Tuple element = sets_[chosen].sample(rng_);

            std::optional<std::size_t> owner;
            provider_.assign(sets_.size(), false);
            for (std::size_t j = 0; j < sets_.size(); ++j) {
                if (!sets_[j].test(element)) continue;
                provider_[j] = true;
                if (!owner) owner = j;
            }
            for (std::size_t j = 0; j < sets_.size(); ++j)
                if (provider_[j] && j != *owner) sets_[j].remove(element);

            if (*owner == chosen) {
                sets_[chosen].remove(element);
                ++stats_.emitted;
                stats_.rejections_before.push_back(rejected);
                if (opts_.timing) stats_.rejection_ns_before.push_back(rejected_ns);
                return element;
            }
            ++stats_.rejections;
            ++rejected;
            if (opts_.track_rejected) stats_.rejected.push_back(element);
            if (opts_.timing)
                rejected_ns += static_cast<std::uint64_t>(
                    std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
                        .count());
        }
    }

    const UnionStats& stats() const { return stats_; }
    const std::vector<DeletableAnswerSet<H>>& sets() const { return sets_; }

private:
    std::vector<DeletableAnswerSet<H>> sets_;
    Rng rng_;
    Options opts_;
    UnionStats stats_;
    std::vector<bool> provider_;
};

}  // namespace rqe

#pragma once

#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "rqe/common.hpp"
#include "rqe/relation.hpp"

namespace rqe {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable 64-bit generator (mt19937_64 behind a splitmix64-scrambled
/// seed) with exactly uniform bounded draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n); n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw InternalError("uniform_below(0)");
        // Reject the low 2^64 mod n values so the remaining range is a
        // multiple of n.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            auto x = next();
            if (x >= threshold) return x % n;
        }
    }

    Count uniform_below(const Count& n) {
        if (n <= 0) throw InternalError("uniform_below on non-positive bound");
        if (fits_u64(n)) return Count(uniform_below(n.convert_to<std::uint64_t>()));
        const unsigned bits = msb_or_zero(n) + 1;
        for (;;) {
            Count x = 0;
            for (unsigned have = 0; have < bits; have += 64) x = (x << 64) | next();
            x &= (Count(1) << bits) - 1;
            if (x < n) return x;
        }
    }

    /// A generator for an independent session, derived from this stream.
    Rng split() { return Rng(next()); }

private:
    std::mt19937_64 engine_;
};

/// Lazily initialized array of [0, n): an unwritten cell k holds k. Keeps
/// the reverse map so a value's position is found in O(1).
class LazyPermutation {
public:
    explicit LazyPermutation(Count n = 0) : n_(std::move(n)) {}

    const Count& size() const { return n_; }

    Count at(const Count& pos) const {
        auto it = a_.find(pos);
        return it == a_.end() ? pos : it->second;
    }

    Count position_of(const Count& value) const {
        auto it = b_.find(value);
        return it == b_.end() ? value : it->second;
    }

    void swap(const Count& p, const Count& q) {
        if (p == q) return;
        Count vp = at(p), vq = at(q);
        a_[p] = vq;
        a_[q] = vp;
        b_[vq] = p;
        b_[vp] = q;
    }

    std::size_t materialized() const { return a_.size(); }
    std::size_t reverse_materialized() const { return b_.size(); }

    /// b is the exact inverse of the written part of a.
    bool consistent() const {
        for (const auto& [pos, val] : a_)
            if (position_of(val) != pos) return false;
        for (const auto& [val, pos] : b_)
            if (at(pos) != val) return false;
        return true;
    }

private:
    Count n_;
    std::unordered_map<Count, Count, CountHash> a_;
    std::unordered_map<Count, Count, CountHash> b_;
};

/// Fisher-Yates shuffle of [0, n) with O(1) setup and O(1) map operations
/// per emitted value.
class LazyShuffle {
public:
    explicit LazyShuffle(Count n) : perm_(std::move(n)) {}

    /// Next value of the permutation, or nullopt once all n were emitted.
    std::optional<Count> next(Rng& rng) {
        if (i_ >= perm_.size()) return std::nullopt;
        Count j = i_ + rng.uniform_below(Count(perm_.size() - i_));
        perm_.swap(i_, j);
        Count out = perm_.at(i_);
        ++i_;
        return out;
    }

    const Count& emitted() const { return i_; }
    Count remaining() const { return perm_.size() - i_; }
    const LazyPermutation& state() const { return perm_; }

private:
    LazyPermutation perm_;
    Count i_ = 0;
};

/// Anything with `access(j) -> optional<Answer>`.
template <typename H>
concept RandomAccessHandle = requires(const H& h, const Count& j) {
    { h.access(j) } -> std::convertible_to<std::optional<Tuple>>;
};

template <typename H>
concept CountedHandle = RandomAccessHandle<H> && requires(const H& h) {
    { h.count() } -> std::convertible_to<Count>;
};

/// Number of answers of a handle that only reports out-of-bound accesses:
/// gallop to an upper bound, then binary search. Uses at most
/// 2*ceil(log2 n) + 2 probes.
template <RandomAccessHandle H>
Count count_by_probing(const H& handle, std::uint64_t* probes = nullptr) {
    auto in_bound = [&](const Count& j) {
        if (probes) ++*probes;
        return handle.access(j).has_value();
    };
    if (!in_bound(Count(0))) return 0;
    Count lo = 0;  // known in bound
    Count hi = 1;
    while (in_bound(hi)) {
        lo = hi;
        hi <<= 1;
    }
    // lo in bound, hi out of bound.
    while (hi - lo > 1) {
        Count mid = (lo + hi) >> 1;
        if (in_bound(mid))
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

/// Random-order enumeration from random access: a lazy shuffle of the
/// answer indices, each mapped through one access call.
template <RandomAccessHandle H>
class RandomPermutation {
public:
    RandomPermutation(const H& handle, Rng rng) : handle_(&handle), rng_(std::move(rng)), shuffle_(total(handle)) {}

    std::optional<Tuple> next() {
        auto j = shuffle_.next(rng_);
        if (!j) return std::nullopt;
        auto a = handle_->access(*j);
        if (!a) throw InternalError("random permutation: index within count reported out of bound");
        return a;
    }

    Count count() const { return shuffle_.state().size(); }
    const LazyShuffle& shuffle() const { return shuffle_; }

private:
    const H* handle_;
    Rng rng_;
    LazyShuffle shuffle_;

    static Count total(const H& h) {
        if constexpr (CountedHandle<H>)
            return h.count();
        else
            return count_by_probing(h);
    }
};

template <RandomAccessHandle H>
RandomPermutation<H> random_permutation(const H& handle, Rng rng) {
    return RandomPermutation<H>(handle, std::move(rng));
}

}  // namespace rqe

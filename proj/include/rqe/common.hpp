#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <boost/functional/hash.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace rqe {

/// Answer counts, weights and answer indices. Counts multiply along a join
/// tree and overflow 64 bits quickly; cpp_int keeps small values inline.
using Count = boost::multiprecision::cpp_int;

struct CountHash {
    std::size_t operator()(const Count& c) const { return boost::hash<Count>{}(c); }
};

inline unsigned msb_or_zero(const Count& c) { return c == 0 ? 0u : static_cast<unsigned>(boost::multiprecision::msb(c)); }

inline bool fits_u64(const Count& c) { return c >= 0 && msb_or_zero(c) < 64; }

inline std::size_t to_size(const Count& c) { return static_cast<std::size_t>(c.convert_to<std::uint64_t>()); }

// Error hierarchy. Exit-code mapping in the CLI follows these classes.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed query text.
struct ParseError : Error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " at position " + std::to_string(pos)), position(pos) {}
};

/// Bad input data: unreadable CSV, arity mismatch, unknown relation.
struct DataError : Error {
    using Error::Error;
};

/// Query outside the supported class (cyclic, not free-connex, ...).
struct QueryClassError : Error {
    using Error::Error;
};

/// Violated internal invariant; indicates a bug upstream of the throw site.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace rqe

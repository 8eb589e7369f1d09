#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rqe/common.hpp"

namespace rqe {

//---------------------------------------------------------------------------
// Values and tuples
//---------------------------------------------------------------------------

/// A constant. Integers order numerically, strings bytewise, and every
/// integer precedes every string (variant index order).
using Value = std::variant<std::int64_t, std::string>;

using Tuple = std::vector<Value>;

enum class ColumnType { Int, Str };

inline std::ostream& operator<<(std::ostream& os, const Value& v) {
    std::visit([&](const auto& x) { os << x; }, v);
    return os;
}

inline std::string to_string(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return std::get<std::string>(v);
}

inline std::optional<std::int64_t> parse_int(std::string_view text) {
    std::int64_t out = 0;
    if (text.empty()) return std::nullopt;
    const char* first = text.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return out;
}

/// Integer if the text parses as a 64-bit integer, string otherwise.
inline Value infer_value(std::string_view text) {
    if (auto i = parse_int(text)) return *i;
    return std::string(text);
}

struct ValueHash {
    std::size_t operator()(const Value& v) const {
        std::size_t seed = v.index();
        if (const auto* i = std::get_if<std::int64_t>(&v))
            boost::hash_combine(seed, *i);
        else
            boost::hash_combine(seed, std::get<std::string>(v));
        return seed;
    }
};

struct TupleHash {
    std::size_t operator()(const Tuple& t) const {
        std::size_t seed = t.size();
        for (const auto& v : t) boost::hash_combine(seed, ValueHash{}(v));
        return seed;
    }
};

/// Writes values separated by `sep` (no trailing separator).
inline void write_tuple(std::ostream& os, const Tuple& t, char sep = '\t') {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) os << sep;
        os << t[i];
    }
}

inline std::string format_tuple(const Tuple& t, char sep = '\t') {
    std::ostringstream os;
    write_tuple(os, t, sep);
    return os.str();
}

//---------------------------------------------------------------------------
// Relation
//---------------------------------------------------------------------------

/// A named set of same-arity tuples, kept sorted in canonical order.
class Relation {
public:
    Relation() = default;
    Relation(std::string name, std::size_t arity) : name_(std::move(name)), arity_(arity) {}

    /// Sorts and deduplicates; rejects tuples of the wrong arity.
    static Relation from_tuples(std::string name, std::size_t arity, std::vector<Tuple> tuples) {
        for (const auto& t : tuples)
            if (t.size() != arity)
                throw DataError("relation " + name + ": tuple of arity " + std::to_string(t.size()) +
                                ", expected " + std::to_string(arity));
        std::sort(tuples.begin(), tuples.end());
        tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
        Relation r(std::move(name), arity);
        r.tuples_ = std::move(tuples);
        return r;
    }

    /// Adopts tuples that are already sorted and duplicate-free.
    static Relation from_sorted(std::string name, std::size_t arity, std::vector<Tuple> tuples) {
        if (!std::is_sorted(tuples.begin(), tuples.end()) ||
            std::adjacent_find(tuples.begin(), tuples.end()) != tuples.end())
            throw InternalError("relation " + name + ": from_sorted on unsorted input");
        Relation r(std::move(name), arity);
        r.tuples_ = std::move(tuples);
        return r;
    }

    const std::string& name() const { return name_; }
    std::size_t arity() const { return arity_; }
    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }
    const std::vector<Tuple>& tuples() const { return tuples_; }
    const Tuple& operator[](std::size_t i) const { return tuples_[i]; }

    bool contains(const Tuple& t) const { return std::binary_search(tuples_.begin(), tuples_.end(), t); }

    Relation renamed(std::string name) const {
        Relation r = *this;
        r.name_ = std::move(name);
        return r;
    }

    /// Keeps tuples satisfying `pred`; order is preserved.
    template <typename Pred>
    Relation filtered(Pred&& pred) const {
        Relation r(name_, arity_);
        for (const auto& t : tuples_)
            if (pred(t)) r.tuples_.push_back(t);
        return r;
    }

    /// Projection onto `columns` (in that order), deduplicated and re-sorted.
    Relation project(const std::vector<std::size_t>& columns) const {
        std::vector<Tuple> out;
        out.reserve(tuples_.size());
        for (const auto& t : tuples_) {
            Tuple p;
            p.reserve(columns.size());
            for (auto c : columns) p.push_back(t[c]);
            out.push_back(std::move(p));
        }
        return from_tuples(name_, columns.size(), std::move(out));
    }

    friend bool operator==(const Relation&, const Relation&) = default;

private:
    std::string name_;
    std::size_t arity_ = 0;
    std::vector<Tuple> tuples_;
};

/// Set intersection; the result is a subsequence of both inputs.
inline Relation intersect_relations(const Relation& r1, const Relation& r2) {
    if (r1.arity() != r2.arity())
        throw DataError("intersect: arity mismatch between " + r1.name() + " (" + std::to_string(r1.arity()) +
                        ") and " + r2.name() + " (" + std::to_string(r2.arity()) + ")");
    std::vector<Tuple> out;
    std::set_intersection(r1.tuples().begin(), r1.tuples().end(), r2.tuples().begin(), r2.tuples().end(),
                          std::back_inserter(out));
    return Relation::from_sorted(r1.name(), r1.arity(), std::move(out));
}

/// One line per tuple, comma separated.
inline std::string serialize(const Relation& r) {
    std::ostringstream os;
    for (const auto& t : r.tuples()) {
        write_tuple(os, t, ',');
        os << '\n';
    }
    return os.str();
}

//---------------------------------------------------------------------------
// Database
//---------------------------------------------------------------------------

class Database {
public:
    void add(Relation r) {
        auto name = r.name();
        relations_.insert_or_assign(std::move(name), std::move(r));
    }

    bool contains(const std::string& name) const { return relations_.count(name) != 0; }

    const Relation& at(const std::string& name) const {
        auto it = relations_.find(name);
        if (it == relations_.end()) throw DataError("unknown relation " + name);
        return it->second;
    }

    const std::map<std::string, Relation>& relations() const { return relations_; }

    std::size_t total_tuples() const {
        std::size_t n = 0;
        for (const auto& [_, r] : relations_) n += r.size();
        return n;
    }

private:
    std::map<std::string, Relation> relations_;
};

//---------------------------------------------------------------------------
// CSV ingestion
//---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace detail

/// Parses CSV text (no header, no quoting). Blank lines are skipped.
inline Relation parse_csv(std::string_view text, const std::string& name, const std::vector<ColumnType>& types,
                          const std::string& source = "<input>") {
    std::vector<Tuple> tuples;
    std::size_t row = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++row;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (fields.size() != types.size())
            throw DataError(source + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(types.size()));
        Tuple t;
        t.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (types[c] == ColumnType::Int) {
                auto v = parse_int(fields[c]);
                if (!v)
                    throw DataError(source + ": row " + std::to_string(row) + " column " + std::to_string(c + 1) +
                                    ": '" + std::string(fields[c]) + "' is not a 64-bit integer");
                t.emplace_back(*v);
            } else {
                t.emplace_back(std::string(fields[c]));
            }
        }
        tuples.push_back(std::move(t));
    }
    return Relation::from_tuples(name, types.size(), std::move(tuples));
}

inline Relation load_csv(const std::filesystem::path& path, const std::string& name,
                         const std::vector<ColumnType>& types) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), name, types, path.string());
}

/// Column types for a CSV file: a column is Int iff every non-blank row's
/// field parses as a 64-bit integer. Arity comes from the first row; an
/// empty file yields an empty type list.
inline std::vector<ColumnType> infer_column_types(const std::filesystem::path& path) {
    std::vector<ColumnType> types;
    bool first = true;
    std::size_t row = 0;
    for (const auto& line : detail::read_lines(path)) {
        ++row;
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (first) {
            types.assign(fields.size(), ColumnType::Int);
            first = false;
        } else if (fields.size() != types.size()) {
            throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(types.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c)
            if (types[c] == ColumnType::Int && !parse_int(fields[c])) types[c] = ColumnType::Str;
    }
    return types;
}

/// Loads every `*.csv` in `dir` as a relation named after the file stem.
/// `arities` supplies the arity of relations whose file is empty.
inline Database load_directory(const std::filesystem::path& dir, const std::map<std::string, std::size_t>& arities = {}) {
    if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    Database db;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto name = f.stem().string();
        auto types = infer_column_types(f);
        if (types.empty()) {
            auto it = arities.find(name);
            db.add(Relation(name, it == arities.end() ? 0 : it->second));
            continue;
        }
        db.add(load_csv(f, name, types));
    }
    return db;
}

}  // namespace rqe

#pragma once

// Command-line front end. Exit codes: 0 ok, 1 usage (bad flags, bad query
// text, index out of range, failed oracle check), 2 query outside the
// supported class, 3 data errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rqe/bench.hpp"
#include "rqe/generate.hpp"
#include "rqe/rqe.hpp"

namespace rqe::cli {

enum Exit : int { Ok = 0, Usage = 1, Unsupported = 2, BadData = 3 };

struct UsageError : Error {
    using Error::Error;
};

enum class Mode { Auto, UnionEnum, McAccess };

struct Options {
    std::string query_path;
    std::string data_dir;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> limit;
    Mode mode = Mode::Auto;
    std::string index;  // access
    std::string tuple;  // inv
    std::vector<double> percents{10, 50, 90, 100};
    std::size_t repeat = 1;
    std::vector<std::string> methods;
    GenConfig gen;
    std::string out_dir;
};

namespace detail {

inline UCQ load_query(const Options& o) {
    if (o.query_path.empty()) throw UsageError("--query is required");
    std::ifstream in(o.query_path);
    if (!in) throw DataError("cannot open query file " + o.query_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_query(ss.str());
}

inline Database load_data(const Options& o, const UCQ& q) {
    std::string dir = o.data_dir;
    if (dir.empty())
        if (const char* env = std::getenv("RQE_DATA")) dir = env;
    if (dir.empty()) throw UsageError("--data is required (or set RQE_DATA)");
    std::map<std::string, std::size_t> arities;
    for (const auto& d : q.disjuncts)
        for (const auto& a : d.atoms) arities.emplace(a.relation, a.terms.size());
    auto db = load_directory(dir, arities);
    for (const auto& [name, _] : arities)
        if (!db.contains(name)) throw DataError("relation " + name + " has no file " + name + ".csv in " + dir);
    return db;
}

inline Count parse_index(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw UsageError("answer index must be a nonnegative integer, got '" + s + "'");
    return Count(s);
}

/// Reads an answer tuple "v1,v2,..." typed after the relation columns the
/// head variables bind to.
inline Tuple parse_answer(const std::string& text, const CQ& q, const Database& db) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        auto pos = text.find_first_of(",\t", start);
        fields.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (q.head.empty() && text.empty()) fields.clear();
    if (fields.size() != q.head.size())
        throw UsageError("answer has " + std::to_string(fields.size()) + " values, the head has " +
                         std::to_string(q.head.size()));
    Tuple out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        std::optional<bool> is_string;
        for (const auto& a : q.atoms) {
            for (std::size_t c = 0; c < a.terms.size() && !is_string; ++c) {
                const auto* v = std::get_if<Variable>(&a.terms[c]);
                if (!v || v->name != q.head[i]) continue;
                const auto& rel = db.at(a.relation);
                if (!rel.empty()) is_string = std::holds_alternative<std::string>(rel[0][c]);
            }
            if (is_string) break;
        }
        auto as_int = parse_int(fields[i]);
        if (is_string.value_or(!as_int) || !as_int)
            out.emplace_back(fields[i]);
        else
            out.emplace_back(*as_int);
    }
    return out;
}

inline void print(std::ostream& os, const Tuple& t) {
    write_tuple(os, t, '\t');
    os << '\n';
}

inline std::vector<CqIndex> disjunct_indexes(const UCQ& q, const Database& db) {
    std::vector<CqIndex> out;
    for (const auto& d : q.disjuncts) out.push_back(CqIndex::from_query(d, db));
    return out;
}

inline std::vector<const CqIndex*> handles(const std::vector<CqIndex>& v) {
    std::vector<const CqIndex*> out;
    for (const auto& x : v) out.push_back(&x);
    return out;
}

/// Index for mc-access when the mode permits it; nullopt means union-enum.
inline std::optional<McUcqIndex> mc_for(const UCQ& q, const Database& db, Mode mode) {
    if (mode == Mode::UnionEnum) return std::nullopt;
    std::string why;
    auto idx = McUcqIndex::build(q, db, &why);
    if (!idx && mode == Mode::McAccess) throw QueryClassError("union is not recognized as an mc-UCQ: " + why);
    return idx;
}

inline int classify(const Options& o, std::ostream& out) {
    auto q = load_query(o);
    bool all_fc = true;
    for (std::size_t i = 0; i < q.disjuncts.size(); ++i) {
        auto kind = is_free_connex(q.disjuncts[i]).kind;
        all_fc = all_fc && kind == QueryClass::FreeConnex;
        out << "disjunct " << i + 1 << '\t' << to_string(kind) << '\n';
    }
    if (q.disjuncts.size() > 1) {
        std::string why;
        if (!all_fc)
            out << "union\tunsupported\n";
        else if (McUcqIndex::recognize(q, &why))
            out << "union\tmc-ucq\n";
        else
            out << "union\tunion-enum\t" << why << '\n';
    }
    return Ok;
}

inline int count(const Options& o, std::ostream& out) {
    auto q = load_query(o);
    auto db = load_data(o, q);
    if (q.disjuncts.size() == 1) {
        out << CqIndex::from_query(q.disjuncts[0], db).count() << '\n';
        return Ok;
    }
    if (auto mc = mc_for(q, db, o.mode)) {
        out << mc->count() << '\n';
        return Ok;
    }
    // Without inclusion-exclusion structures the union is counted by a full run.
    auto sets = disjunct_indexes(q, db);
    UnionRandomPermutation<CqIndex> u(handles(sets), Rng(o.seed));
    Count n = 0;
    while (u.next()) ++n;
    out << n << '\n';
    return Ok;
}

inline int access(const Options& o, std::ostream& out, std::ostream& err) {
    auto q = load_query(o);
    auto j = parse_index(o.index);
    auto db = load_data(o, q);
    std::optional<Answer> a;
    Count n;
    if (q.disjuncts.size() == 1) {
        auto idx = CqIndex::from_query(q.disjuncts[0], db);
        a = idx.access(j);
        n = idx.count();
    } else {
        if (o.mode == Mode::UnionEnum) throw QueryClassError("random access is not available in union-enum mode");
        auto mc = mc_for(q, db, Mode::McAccess);
        a = mc->access(j);
        n = mc->count();
    }
    if (!a) {
        err << "index " << j << " is out of bound (count " << n << ")\n";
        return Usage;
    }
    print(out, *a);
    return Ok;
}

inline int inverted(const Options& o, std::ostream& out, std::ostream& err) {
    auto q = load_query(o);
    if (q.disjuncts.size() != 1) throw QueryClassError("inverted access is provided for single conjunctive queries");
    auto db = load_data(o, q);
    auto idx = CqIndex::from_query(q.disjuncts[0], db);
    auto t = parse_answer(o.tuple, q.disjuncts[0], db);
    auto j = idx.inverted_access(t);
    if (!j) {
        err << "(" << format_tuple(t, ',') << ") is not an answer\n";
        return Usage;
    }
    out << *j << '\n';
    return Ok;
}

inline int permute(const Options& o, std::ostream& out) {
    auto q = load_query(o);
    auto db = load_data(o, q);
    const std::uint64_t limit = o.limit.value_or(std::numeric_limits<std::uint64_t>::max());
    std::uint64_t emitted = 0;
    auto emit = [&](auto& stream) {
        while (emitted < limit) {
            auto a = stream.next();
            if (!a) break;
            print(out, *a);
            ++emitted;
        }
    };
    if (q.disjuncts.size() == 1) {
        auto idx = CqIndex::from_query(q.disjuncts[0], db);
        RandomPermutation<CqIndex> p(idx, Rng(o.seed));
        emit(p);
    } else if (auto mc = mc_for(q, db, o.mode)) {
        RandomPermutation<McUcqIndex> p(*mc, Rng(o.seed));
        emit(p);
    } else {
        auto sets = disjunct_indexes(q, db);
        UnionRandomPermutation<CqIndex> u(handles(sets), Rng(o.seed));
        emit(u);
    }
    return Ok;
}

inline int bench(const Options& o, std::ostream& out) {
    auto q = load_query(o);
    auto db = load_data(o, q);
    BenchConfig cfg;
    cfg.query = q;
    cfg.db = &db;
    cfg.percents = o.percents;
    cfg.repeat = o.repeat;
    cfg.seed = o.seed;
    cfg.methods = o.methods;
    if (cfg.methods.empty() && q.disjuncts.size() > 1 && o.mode != Mode::Auto) {
        cfg.methods = {o.mode == Mode::UnionEnum ? "union-enum" : "mc-access"};
        if (o.mode == Mode::McAccess) mc_for(q, db, Mode::McAccess);
    }
    for (auto p : o.percents)
        if (!(p > 0 && p <= 100)) throw UsageError("--percent values must lie in (0, 100]");
    if (o.repeat == 0) throw UsageError("--repeat must be positive");
    // Classify up front so unsupported queries fail before any timing.
    for (const auto& d : q.disjuncts) prepare_cq(d, db);
    bench_run(cfg).write_tsv(out);
    return Ok;
}

/// Engine vs brute force: answer set, count, bijection, permutations and,
/// for mc unions, intersection compatibility.
inline int oracle_check(const Options& o, std::ostream& out, std::ostream& err) {
    auto q = load_query(o);
    auto db = load_data(o, q);
    for (const auto& d : q.disjuncts) {
        auto kind = is_free_connex(d).kind;
        if (kind != QueryClass::FreeConnex)
            throw QueryClassError("query is " + std::string(to_string(kind)) + ", not free-connex: " + to_string(d));
    }
    const auto expected = brute_force_answers(q, db);
    bool ok = true;
    auto report = [&](const std::string& what, bool pass) {
        out << what << '\t' << (pass ? "ok" : "FAILED") << '\n';
        ok = ok && pass;
    };
    auto sorted_copy = [](std::vector<Tuple> v) {
        std::sort(v.begin(), v.end());
        return v;
    };

    auto check_index = [&](const std::string& name, const CqIndex& idx, const std::vector<Tuple>& answers) {
        report(name + " count", idx.count() == answers.size());
        auto all = idx.enumerate();
        report(name + " access", sorted_copy(all) == answers);
        bool bij = !idx.access(idx.count());
        for (std::size_t j = 0; j < all.size() && bij; ++j) bij = idx.inverted_access(all[j]) == Count(j);
        for (const auto& a : answers) {
            auto j = idx.inverted_access(a);
            bij = bij && j && idx.access(*j) == a;
        }
        report(name + " bijection", bij);
    };

    auto sets = disjunct_indexes(q, db);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        auto answers = q.disjuncts.size() == 1 ? expected : brute_force_answers(q.disjuncts[i], db);
        check_index(q.disjuncts.size() == 1 ? "cq" : "disjunct " + std::to_string(i + 1), sets[i], answers);
    }
    {
        RandomPermutation<CqIndex> p(sets[0], Rng(o.seed));
        if (q.disjuncts.size() == 1) {
            std::vector<Tuple> got;
            while (auto a = p.next()) got.push_back(*a);
            report("cq permutation", sorted_copy(got) == expected);
        }
    }
    if (q.disjuncts.size() > 1) {
        UnionRandomPermutation<CqIndex> u(handles(sets), Rng(o.seed));
        std::vector<Tuple> got;
        while (auto a = u.next()) got.push_back(*a);
        report("union-enum answers", sorted_copy(got) == expected);
        report("union-enum iterations", u.stats().iterations <= 2 * expected.size());

        std::string why;
        if (auto mc = McUcqIndex::build(q, db, &why)) {
            report("mc count", mc->count() == expected.size());
            std::vector<Tuple> sweep;
            for (Count j = 0; j < mc->count(); ++j) sweep.push_back(*mc->access(j));
            report("mc access", sorted_copy(sweep) == expected && !mc->access(mc->count()));
            RandomPermutation<McUcqIndex> p(*mc, Rng(o.seed));
            std::vector<Tuple> perm;
            while (auto a = p.next()) perm.push_back(*a);
            report("mc permutation", sorted_copy(perm) == expected);
            bool compatible = true;
            for (std::size_t l = 0; l < mc->disjuncts(); ++l) {
                auto s = mc->disjunct(l).enumerate();
                for (const auto& [mask, t] : mc->intersections(l)) {
                    auto te = t.enumerate();
                    std::size_t i = 0;
                    for (const auto& a : s)
                        if (i < te.size() && te[i] == a) ++i;
                    compatible = compatible && i == te.size();
                }
            }
            report("mc compatibility", compatible);
        } else {
            out << "mc\tskipped\t" << why << '\n';
        }
    }
    out << "answers\t" << expected.size() << '\n';
    if (!ok) {
        err << "oracle-check failed\n";
        return Usage;
    }
    return Ok;
}

inline int generate_cmd(const Options& o, std::ostream& out) {
    if (o.out_dir.empty()) throw UsageError("--out is required");
    auto gen = generate(o.gen);
    write_generated(gen, o.out_dir);
    out << "wrote " << gen.db.relations().size() << " relations and query.txt to " << o.out_dir << '\n';
    return Ok;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Counting, random access and random-order enumeration for free-connex CQs and UCQs"};
    app.name("rqe");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("-q,--query", o.query_path, "query file");
    app.add_option("-d,--data", o.data_dir, "directory of <relation>.csv files (default: $RQE_DATA)");

    const std::map<std::string, Mode> modes{{"auto", Mode::Auto}, {"union-enum", Mode::UnionEnum}, {"mc-access", Mode::McAccess}};
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", o.mode, "auto | union-enum | mc-access")->transform(CLI::CheckedTransformer(modes));
    };

    auto* classify = app.add_subcommand("classify", "free-connex / acyclic / cyclic per disjunct, mc-ucq verdict");
    auto* count = app.add_subcommand("count", "number of answers");
    add_mode(count);
    auto* access = app.add_subcommand("access", "the j-th answer");
    access->add_option("j", o.index, "answer index")->required();
    add_mode(access);
    auto* inv = app.add_subcommand("inv", "index of an answer");
    inv->add_option("tuple", o.tuple, "comma-separated answer values")->required();
    auto* permute = app.add_subcommand("permute", "all answers in uniformly random order");
    permute->add_option("--seed", o.seed, "random seed (default 1)");
    permute->add_option("--limit", o.limit, "stop after this many answers");
    add_mode(permute);
    auto* bench = app.add_subcommand("bench", "timing and operation counts");
    bench->add_option("--percent", o.percents, "percentages of the answers to enumerate")->delimiter(',');
    bench->add_option("--repeat", o.repeat, "runs per cell, averaged");
    bench->add_option("--seed", o.seed, "random seed (default 1)");
    bench->add_option("--method", o.methods, "cq-shuffle, baseline, union-enum, mc-access")->delimiter(',');
    add_mode(bench);
    auto* check = app.add_subcommand("oracle-check", "compare the engine against brute-force evaluation");
    check->add_option("--seed", o.seed, "random seed (default 1)");
    auto* gen = app.add_subcommand("generate", "write a synthetic instance");
    gen->add_option("--shape", o.gen.shape, "star | chain | tpch")->check(CLI::IsMember({"star", "chain", "tpch"}));
    gen->add_option("--scale", o.gen.scale, "fact rows");
    gen->add_option("--fanout", o.gen.fanout, "tuples per join key");
    gen->add_option("--disjuncts", o.gen.disjuncts, "union disjuncts");
    gen->add_option("--overlap", o.gen.overlap, "shared fraction of fact rows")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", o.gen.seed, "random seed (default 1)");
    gen->add_option("--out", o.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (*classify) return detail::classify(o, out);
        if (*count) return detail::count(o, out);
        if (*access) return detail::access(o, out, err);
        if (*inv) return detail::inverted(o, out, err);
        if (*permute) return detail::permute(o, out);
        if (*bench) return detail::bench(o, out);
        if (*check) return detail::oracle_check(o, out, err);
        if (*gen) return detail::generate_cmd(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const ParseError& e) {
        err << "query parse error: " << e.what() << '\n';
        return Usage;
    } catch (const QueryClassError& e) {
        err << "unsupported query: " << e.what() << '\n';
        return Unsupported;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return BadData;
    } catch (const GuardExceeded& e) {
        err << "data error: " << e.what() << '\n';
        return BadData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return Usage;
    }
    return Usage;
}

}  // namespace rqe::cli

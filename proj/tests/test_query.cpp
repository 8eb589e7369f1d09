#include <gtest/gtest.h>

#include "support.hpp"

using namespace rqe;
using namespace rqe::testing;

namespace {

Hypergraph edges(std::vector<std::vector<VarId>> e, std::size_t nodes) {
    Hypergraph h;
    for (std::size_t i = 0; i < nodes; ++i) h.nodes.push_back("v" + std::to_string(i));
    h.edges = std::move(e);
    return h;
}

QueryClass kind(const char* text) { return is_free_connex(parse_cq(text)).kind; }

}  // namespace

TEST(Parse, Basic) {
    auto q = parse_cq("Q(x,y) :- R(x,y), S(y,z).");
    EXPECT_EQ(q.head, (std::vector<std::string>{"x", "y"}));
    ASSERT_EQ(q.atoms.size(), 2u);
    EXPECT_EQ(q.atoms[1].relation, "S");
    EXPECT_FALSE(q.is_full());
    EXPECT_EQ(q.body_variables(), (std::vector<std::string>{"x", "y", "z"}));
}

TEST(Parse, Constants) {
    auto q = parse_cq("Q(x) :- R(x,1), S(x, \"a b\"), T(-3, x).");
    EXPECT_EQ(std::get<Value>(q.atoms[0].terms[1]), I(1));
    EXPECT_EQ(std::get<Value>(q.atoms[1].terms[1]), S("a b"));
    EXPECT_EQ(std::get<Value>(q.atoms[2].terms[0]), I(-3));
    EXPECT_TRUE(is_variable(q.atoms[0].terms[0]));
}

TEST(Parse, UnsafeHead) {
    try {
        parse_cq("Q(x,y) :- R(x).");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos);
    }
}

TEST(Parse, Errors) {
    EXPECT_THROW(parse_query("Q(x) :- R(x)"), ParseError);
    EXPECT_THROW(parse_query("Q(x) R(x)."), ParseError);
    EXPECT_THROW(parse_query("Q(1) :- R(1)."), ParseError);
    EXPECT_THROW(parse_query("Q(x) :- R(\"x)."), ParseError);
    EXPECT_THROW(parse_query("Q(x) :- R(x). Q(x) :- S(x)."), ParseError);
    EXPECT_THROW(parse_query("Q(x) :- R(x). UNION Q(x,y) :- S(x,y)."), ParseError);
    EXPECT_THROW(parse_cq("Q(x) :- R(x). UNION Q(x) :- S(x)."), ParseError);
    try {
        parse_query("Q(x) :- R(x) S(x).");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position, 13u);
    }
}

TEST(Parse, UnionAndComments) {
    auto u = parse_query("# header\nQ(x) :- R(x).\nUNION % second\n  Q(y) :- S(y,z).\n");
    ASSERT_EQ(u.disjuncts.size(), 2u);
    EXPECT_EQ(u.head_arity(), 1u);
    EXPECT_EQ(to_string(u), "Q(x) :- R(x). UNION Q(y) :- S(y, z).");
}

TEST(Parse, RoundTrip) {
    auto q = parse_cq("Q(x, y) :- R(x, 1, \"s\"), S(y, x).");
    EXPECT_EQ(parse_cq(to_string(q)), q);
}

TEST(Gyo, Path) {
    auto t = gyo_join_tree(edges({{0, 1}, {1, 2}}, 3));
    ASSERT_TRUE(t);
    EXPECT_EQ(t->size(), 2u);
    EXPECT_TRUE(satisfies_running_intersection(*t));
    EXPECT_EQ(t->root, 0u);
    EXPECT_EQ(t->parent[1], 0u);
    EXPECT_EQ(t->parent_shared[1], (std::vector<VarId>{1}));
    EXPECT_TRUE(t->parent_shared[t->root].empty());
}

TEST(Gyo, Triangle) { EXPECT_FALSE(gyo_join_tree(edges({{0, 1}, {1, 2}, {0, 2}}, 3))); }

TEST(Gyo, SingleEdge) {
    auto t = gyo_join_tree(edges({{0, 1, 2}}, 3));
    ASSERT_TRUE(t);
    EXPECT_EQ(t->size(), 1u);
    EXPECT_EQ(t->root, 0u);
}

TEST(Gyo, WorkedExampleShape) {
    // R1 is the root with R2 and R3 as children.
    auto t = gyo_join_tree(make_hypergraph(parse_cq(worked_example_query)));
    ASSERT_TRUE(t);
    EXPECT_EQ(t->root, 0u);
    EXPECT_EQ(t->children[0], (std::vector<std::size_t>{1, 2}));
}

TEST(Gyo, RunningIntersectionOnRandomQueries) {
    InstanceGenerator g(11);
    for (int i = 0; i < 100; ++i) {
        auto inst = g.cq();
        auto t = gyo_join_tree(make_hypergraph(inst.query.disjuncts[0]));
        ASSERT_TRUE(t);
        EXPECT_TRUE(satisfies_running_intersection(*t));
    }
}

TEST(Gyo, RejectsBrokenTree) {
    auto t = *gyo_join_tree(edges({{0, 1}, {1, 2}, {2, 3}}, 4));
    ASSERT_TRUE(satisfies_running_intersection(t));
    // Reattach the xy edge under zw: y is no longer connected.
    auto broken = t;
    for (std::size_t i = 0; i < 3; ++i) broken.children[i].clear();
    broken.root = 2;
    broken.parent = {2, 2, std::nullopt};
    broken.children[2] = {0, 1};
    broken.parent_shared = {{}, {2}, {}};
    EXPECT_FALSE(satisfies_running_intersection(broken));
}

TEST(Classify, Examples) {
    EXPECT_EQ(kind("Q(x,y) :- R(x,y), S(y,z)."), QueryClass::FreeConnex);
    EXPECT_EQ(kind("Q(x,z) :- R(x,y), S(y,z)."), QueryClass::AcyclicNotFreeConnex);
    EXPECT_EQ(kind("Q(x,y,z) :- R(x,y), S(y,z), T(x,z)."), QueryClass::Cyclic);
    EXPECT_EQ(kind("Q() :- R(x,y), S(y,z)."), QueryClass::FreeConnex);
    EXPECT_EQ(kind(worked_example_query), QueryClass::FreeConnex);
    EXPECT_STREQ(to_string(QueryClass::AcyclicNotFreeConnex), "acyclic");
}

TEST(Classify, InvariantUnderReorderAndRenaming) {
    InstanceGenerator g(5);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 60; ++i) {
        auto q = g.cq().query.disjuncts[0];
        // Also try a non-free-connex head.
        for (int variant = 0; variant < 2; ++variant) {
            if (variant == 1) {
                auto vars = q.body_variables();
                q.head.clear();
                for (const auto& v : vars)
                    if (rng() % 2) q.head.push_back(v);
            }
            auto expected = is_free_connex(q).kind;
            auto p = q;
            std::shuffle(p.atoms.begin(), p.atoms.end(), rng);
            auto rename = [](std::string v) { return "w_" + v; };
            for (auto& h : p.head) h = rename(h);
            for (auto& a : p.atoms)
                for (auto& t : a.terms)
                    if (auto* v = std::get_if<Variable>(&t)) v->name = rename(v->name);
            EXPECT_EQ(is_free_connex(p).kind, expected) << to_string(q);
        }
    }
}

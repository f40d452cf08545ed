#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rainbow/generators.hpp"
#include "rainbow/model.hpp"
#include "rainbow/random.hpp"
#include "rainbow/rmf.hpp"

using namespace rainbow;

namespace {

MatchingFamily family_of(int k, Vertex nv, const std::vector<std::vector<Edge>>& classes) {
    MatchingFamily f(k, nv, classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (const auto& e : classes[i]) f.add_edge(i, e);
    return f;
}

bool mentions(const std::vector<std::string>& msgs, const std::string& needle) {
    return std::any_of(msgs.begin(), msgs.end(), [&](const auto& s) { return s.find(needle) != std::string::npos; });
}

} // namespace

TEST_CASE("edges are stored sorted and arity is enforced") {
    MatchingFamily f(3, 10, 1);
    f.add_edge(0, {7, 2, 5});
    auto e = f.edge(0, 0);
    CHECK(std::vector<Vertex>(e.begin(), e.end()) == std::vector<Vertex>{2, 5, 7});
    CHECK_THROWS_AS(f.add_edge(0, {1, 2}), Error);
    CHECK(f.contains_edge(0, std::vector<Vertex>{2, 5, 7}));
    CHECK_FALSE(f.contains_edge(0, std::vector<Vertex>{2, 5, 8}));
    CHECK(f.num_edges() == 1);
}

TEST_CASE("validate") {
    SUBCASE("single edge is fine") { CHECK(validate(family_of(2, 2, {{{0, 1}}})).empty()); }
    SUBCASE("shared vertex inside a matching") {
        auto v = validate(family_of(2, 3, {{{0, 1}, {1, 2}}}));
        REQUIRE(v.size() == 1);
        CHECK(v[0] == "vertex 1 repeated in matching 0");
        CHECK(validate(family_of(2, 3, {{{0, 1}, {1, 2}}}), {.require_matchings = false}).empty());
    }
    SUBCASE("out of range and repeated within edge") {
        MatchingFamily f(2, 3, 1);
        f.add_edge(0, {0, 5});
        f.add_edge(0, {2, 2});
        auto v = validate(f);
        CHECK(mentions(v, "vertex 5 out of range"));
        CHECK(mentions(v, "vertex 2 repeated within edge"));
    }
    SUBCASE("double star colour classes are stars") {
        const auto g6 = gen_double_star(6);
        CHECK_FALSE(validate(g6).empty());
        CHECK(validate(g6, {.require_matchings = false}).empty());
    }
}

TEST_CASE("compute_stats") {
    SUBCASE("one edge") {
        auto st = compute_stats(family_of(2, 2, {{{0, 1}}}));
        CHECK(st.m == 1);
        CHECK(st.max_degree == 1);
        CHECK(st.max_multiplicity == 1);
        CHECK(st.simple());
    }
    SUBCASE("doubled edge") {
        auto st = compute_stats(family_of(2, 2, {{{0, 1}}, {{0, 1}}}));
        CHECK(st.max_degree == 2);
        CHECK(st.max_multiplicity == 2);
        CHECK(st.max_codegree == 2);
        CHECK_FALSE(st.simple());
    }
    SUBCASE("hypergraph codegree counted by hand") {
        // pair {0,1} lies in {0,1,2}, {0,1,3}, {0,1,4}: codegree 3, no repeated triple.
        auto f = family_of(3, 6, {{{0, 1, 2}, {3, 4, 5}}, {{0, 1, 3}}, {{0, 1, 4}, {2, 3, 5}}});
        auto st = compute_stats(f);
        CHECK(st.max_codegree == 3);
        CHECK(st.max_multiplicity == 1);
        CHECK(st.max_degree == 3);
        CHECK(st.min_size == 1);
        CHECK(st.max_size == 2);
        CHECK_FALSE(st.equal_sizes());
    }
    SUBCASE("double star G_6") {
        auto st = compute_stats(gen_double_star(6));
        CHECK(st.max_degree == 4);
        CHECK(st.min_size == 6);
        CHECK(st.max_size == 6);
        CHECK(st.m == 7);
    }
    SUBCASE("invalid family throws") {
        MatchingFamily f(2, 2, 1);
        f.add_edge(0, {0, 4});
        CHECK_THROWS_AS(compute_stats(f), Error);
    }
}

TEST_CASE("stats properties on random families") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto f = gen_random_simple(20, 12, seed % 2 ? 2 : 3, seed);
        const auto st = compute_stats(f);
        const auto deg = vertex_degrees(f);
        CHECK(std::accumulate(deg.begin(), deg.end(), std::size_t{0}) == f.k() * f.num_edges());
        CHECK(st.max_degree <= st.m);
        CHECK(st.max_multiplicity <= st.max_codegree);
        CHECK(st.max_codegree <= st.max_degree);

        std::vector<std::size_t> order(f.num_matchings());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto rng = Rng::derive(seed, {99});
        rng.shuffle(order.begin(), order.end());
        MatchingFamily g(f.k(), f.num_vertices(), f.num_matchings());
        for (std::size_t i = 0; i < order.size(); ++i)
            for (std::size_t e = 0; e < f.size(order[i]); ++e) g.add_edge(i, f.edge(order[i], e));
        CHECK(compute_stats(g) == st);
    }
}

TEST_CASE("verify_rainbow") {
    const auto f = family_of(2, 4, {{{0, 1}, {2, 3}}, {{1, 2}, {0, 3}}});
    RainbowMatching rm;
    CHECK(verify_rainbow(f, rm, false).empty());
    CHECK(verify_rainbow(f, rm, true).find("not full") != std::string::npos);

    rm.picks[0] = {0, 1};
    rm.picks[1] = {1, 2};
    CHECK(verify_rainbow(f, rm, false).find("vertices overlap") != std::string::npos);

    rm.picks[1] = {2, 3};
    CHECK(verify_rainbow(f, rm, false).find("does not belong") != std::string::npos);

    rm.picks[0] = {2, 3};
    rm.picks[1] = {0, 3};
    CHECK(verify_rainbow(f, rm, false).find("vertices overlap") != std::string::npos);

    rm.picks[0] = {1, 2};
    rm.picks.erase(1);
    CHECK(verify_rainbow(f, rm, false).find("does not belong") != std::string::npos);

    rm.picks.clear();
    rm.picks[0] = {0, 1};
    rm.picks[1] = {3, 0};
    CHECK(verify_rainbow(f, rm, false).find("overlap") != std::string::npos);

    const auto g = family_of(2, 4, {{{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}});
    RainbowMatching full;
    full.picks[0] = {0, 1};
    full.picks[1] = {2, 0};
    CHECK(verify_rainbow(g, full, true).find("overlap") != std::string::npos);
    full.picks[1] = {3, 1};
    CHECK(verify_rainbow(g, full, true).find("overlap") != std::string::npos);
    full.picks[0] = {2, 3};
    full.picks[1] = {1, 3};
    CHECK_FALSE(verify_rainbow(g, full, true).empty());
    full.picks[0] = {0, 1};
    full.picks.erase(1);
    CHECK(verify_rainbow(g, full, false).empty());
}

TEST_CASE("full verification implies partial verification") {
    const auto f = family_of(2, 6, {{{0, 1}, {2, 3}}, {{1, 2}, {4, 5}}, {{0, 5}, {3, 4}}});
    RainbowMatching ok;
    ok.picks[0] = {2, 3};
    ok.picks[1] = {4, 5};
    CHECK(verify_rainbow(f, ok, false).empty());
    ok.picks[2] = {0, 1};
    CHECK_FALSE(verify_rainbow(f, ok, false).empty());

    std::size_t full_seen = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto g = gen_random_simple(3, 3, 2, seed, {.universe_ratio = 1.0});
        auto rng = Rng::derive(seed, {7});
        RainbowMatching rm;
        for (std::size_t i = 0; i < g.num_matchings(); ++i) {
            auto e = g.edge(i, rng.below(g.size(i)));
            rm.picks[i] = Edge(e.begin(), e.end());
        }
        if (verify_rainbow(g, rm, true).empty()) {
            ++full_seen;
            CHECK(verify_rainbow(g, rm, false).empty());
        }
    }
    CHECK(full_seen > 0);
}

TEST_CASE("check_hypotheses") {
    SUBCASE("m clause fails above (1 - n^-c) n") {
        RandomFamilyOptions opts;
        opts.max_degree_cap = 750;
        const auto f = gen_random_simple(1000, 800, 2, 3, opts);
        const auto rep = check_hypotheses(f, Theorem::bounded_degree, {.c = 0.05, .delta = 0.0});
        const auto* mb = rep.find("m bound");
        REQUIRE(mb != nullptr);
        // 1000^-0.05 = exp(-0.05 ln 1000)
        const double expected = (1.0 - std::exp(-0.05 * std::log(1000.0))) * 1000.0;
        CHECK(expected == doctest::Approx(292.1).epsilon(1e-3));
        CHECK(mb->bound == doctest::Approx(expected));
        CHECK_FALSE(mb->satisfied);
        CHECK(rep.find("simple")->satisfied);
        CHECK(rep.find("k = 2")->satisfied);
        CHECK_FALSE(rep.all_satisfied());
    }
    SUBCASE("simple family meets the multiplicity clause") {
        const auto f = gen_random_simple(10000, 2, 2, 1);
        const auto rep = check_hypotheses(f, Theorem::multigraph, {.eps0 = 0.1});
        const auto* mu = rep.find("multiplicity bound");
        REQUIRE(mu != nullptr);
        CHECK(mu->measured == 1.0);
        CHECK(mu->bound > 1.0);
        CHECK(mu->satisfied);
    }
    SUBCASE("double star fails the m clause of the simple-graph theorem") {
        const auto rep = check_hypotheses(gen_double_star(6), Theorem::simple, {});
        CHECK_FALSE(rep.find("m bound")->satisfied);
        CHECK(rep.find("m bound")->measured == 7.0);
    }
}

TEST_CASE("rmf round trip and parse errors") {
    const auto f = gen_random_simple(6, 4, 3, 11);
    std::stringstream ss;
    write_rmf(ss, f);
    CHECK(read_rmf(ss) == f);

    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_rmf(in, "t.rmf");
    };
    CHECK_NOTHROW(parse("rmf 1\n# comment\nk 2\nvertices 3\n\nm 1\ne 0 0 2\n"));
    CHECK_THROWS_AS(parse("rmf 2\nk 2\nvertices 3\nm 1\n"), ParseError);
    try {
        parse("rmf 1\nk 2\nvertices 3\nm 1\ne 0 0 9\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 5);
    }
    try {
        parse("rmf 1\nk 3\nvertices 3\nm 1\ne 0 0 1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 5);
    }
    CHECK_THROWS_AS(parse("rmf 1\nk 2\nvertices 3\nm 1\ne 1 0 1\n"), ParseError);
    CHECK_THROWS_AS(parse("rmf 1\nk 2\nvertices 3\nm 1\ne 0 1 0\n"), ParseError);

    RainbowMatching rm;
    rm.picks[0] = {0, 3};
    rm.picks[2] = {1, 4};
    std::stringstream sel;
    write_selection(sel, rm);
    CHECK(sel.str() == "pick 0 0 3\npick 2 1 4\n");
    CHECK(read_selection(sel) == rm);
    std::istringstream dup("pick 0 0 1\npick 0 2 3\n");
    CHECK_THROWS_AS(read_selection(dup), ParseError);
}

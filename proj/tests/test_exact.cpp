#include "doctest.h"

#include <numeric>

#include "rainbow/exact.hpp"
#include "rainbow/generators.hpp"
#include "rainbow/model.hpp"
#include "rainbow/random.hpp"

using namespace rainbow;

namespace {

MatchingFamily permuted(const MatchingFamily& f, std::uint64_t seed) {
    std::vector<std::size_t> order(f.num_matchings());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = Rng::derive(seed, {5});
    rng.shuffle(order.begin(), order.end());
    MatchingFamily g(f.k(), f.num_vertices(), f.num_matchings());
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t e = 0; e < f.size(order[i]); ++e) g.add_edge(i, f.edge(order[i], e));
    return g;
}

} // namespace

TEST_CASE("two disjoint K4") {
    const auto f = gen_two_k4();
    auto full = find_full(f);
    CHECK(full.status == SearchStatus::none);
    CHECK_FALSE(full.witness.has_value());
    auto mx = max_rainbow(f);
    CHECK(mx.size == 2);
    CHECK(mx.complete);
    CHECK(verify_rainbow(f, mx.witness, false).empty());
    CHECK(enumerate_oracle(f) == 0);
}

TEST_CASE("double star families") {
    for (std::size_t m : {2, 4, 6}) {
        const auto f = gen_double_star(m);
        CHECK(find_full(f).status == SearchStatus::none);
        auto mx = max_rainbow(f);
        CHECK(mx.size == m);
        CHECK(mx.complete);
        CHECK(verify_rainbow(f, mx.witness, false).empty());
    }
}

TEST_CASE("small counts") {
    CHECK(enumerate_oracle(gen_latin(3, LatinKind::cyclic)) == 3);
    MatchingFamily one(2, 6, 1);
    one.add_edge(0, {0, 1});
    one.add_edge(0, {2, 3});
    one.add_edge(0, {4, 5});
    CHECK(enumerate_oracle(one) == 3);
    CHECK(find_full(one).status == SearchStatus::found);

    MatchingFamily empty(2, 0, 0);
    CHECK(max_rainbow(empty).size == 0);
    CHECK(find_full(empty).status == SearchStatus::found);
    CHECK(enumerate_oracle(empty) == 1);
}

TEST_CASE("search agrees with the enumeration oracle") {
    std::size_t found = 0, none = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const std::size_t n = 4 + seed % 2;
        const std::size_t m = 3 + seed % 3;
        const int k = seed % 5 == 0 ? 3 : 2;
        const auto f = gen_random_simple(n, m, k, seed, {.universe_ratio = 1.0});
        const auto count = enumerate_oracle(f);
        auto full = find_full(f);
        CAPTURE(seed);
        CHECK((full.status == SearchStatus::found) == (count > 0));
        if (full.witness) CHECK(verify_rainbow(f, *full.witness, true).empty());
        auto mx = max_rainbow(f);
        CHECK(mx.complete);
        CHECK(verify_rainbow(f, mx.witness, false).empty());
        CHECK((mx.size == m) == (count > 0));
        (count > 0 ? found : none)++;

        const auto g = permuted(f, seed);
        CHECK(enumerate_oracle(g) == count);
        CHECK(max_rainbow(g).size == mx.size);
    }
    CHECK(found > 0);
    CHECK(none > 0);
}

TEST_CASE("budget exhaustion") {
    const auto f = gen_latin(8, LatinKind::cyclic);
    auto r = find_full(f, {.node_budget = 50});
    CHECK(r.status == SearchStatus::timeout);
    CHECK(r.nodes <= 51);
    auto mx = max_rainbow(f, {.node_budget = 50});
    CHECK_FALSE(mx.complete);
    CHECK(verify_rainbow(f, mx.witness, false).empty());
    CHECK_THROWS_AS(enumerate_oracle(gen_latin(9, LatinKind::cyclic), 1000), Error);
}

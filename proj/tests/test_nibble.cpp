#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "rainbow/generators.hpp"
#include "rainbow/model.hpp"
#include "rainbow/nibble.hpp"
#include "rainbow/schedule.hpp"

using namespace rainbow;

namespace {

MatchingFamily family_of(int k, Vertex nv, const std::vector<std::vector<Edge>>& classes) {
    MatchingFamily f(k, nv, classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (const auto& e : classes[i]) f.add_edge(i, e);
    return f;
}

NibbleConfig config_for(const MatchingFamily& f, std::size_t chunk, std::uint64_t seed = 1) {
    NibbleConfig cfg;
    const auto n = f.size(0);
    const auto m = f.num_matchings();
    std::size_t maxdeg = 0;
    for (auto d : vertex_degrees(f)) maxdeg = std::max<std::size_t>(maxdeg, d);
    cfg.schedule = adaptive_params(f.k(), n, m, maxdeg, double(chunk) / double(m));
    cfg.seed = seed;
    return cfg;
}

// Probability that vertex v is covered when one edge is drawn uniformly from each class.
double enumerate_cover(const MatchingFamily& f, Vertex v) {
    std::vector<std::size_t> idx(f.num_matchings(), 0);
    std::size_t hit = 0, total = 0;
    while (true) {
        bool covered = false;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto e = f.edge(i, idx[i]);
            if (std::find(e.begin(), e.end(), v) != e.end()) covered = true;
        }
        hit += covered;
        ++total;
        std::size_t i = 0;
        while (i < idx.size() && ++idx[i] == f.size(i)) idx[i++] = 0;
        if (i == idx.size()) break;
    }
    return double(hit) / double(total);
}

} // namespace

TEST_CASE("marking probability against enumeration") {
    // v = 0 lies on one edge of a size-4 class and one edge of a size-5 class.
    const auto f = family_of(2, 17,
                             {{{0, 1}, {2, 3}, {4, 5}, {6, 7}},
                              {{0, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}}});
    const double oracle = enumerate_cover(f, 0);
    CHECK(oracle == doctest::Approx(0.4).epsilon(1e-15));
    NibbleEngine eng(f, config_for(f, 2));
    eng.start_attempt(0);
    CHECK(eng.marking_probability(0) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(eng.marking_probability(1) == doctest::Approx(enumerate_cover(f, 1)).epsilon(1e-15));
    CHECK(eng.marking_probability(9) == doctest::Approx(0.2).epsilon(1e-15));

    // improper class: v has two edges in one class of size 4
    const auto g = family_of(2, 8, {{{0, 1}, {0, 2}, {3, 4}, {5, 6}}, {{0, 7}, {1, 2}, {3, 5}, {4, 6}}});
    NibbleConfig cfg = config_for(g, 2);
    cfg.allow_improper = true;
    NibbleEngine eng2(g, cfg);
    eng2.start_attempt(0);
    CHECK(eng2.marking_probability(0) == doctest::Approx(enumerate_cover(g, 0)).epsilon(1e-15));
}

TEST_CASE("collision frequency on a 3x3 toy") {
    // Only vertex 0 is shared, so a collision happens iff both picks contain it.
    const auto f = family_of(2, 11, {{{0, 1}, {2, 3}, {4, 5}}, {{0, 6}, {7, 8}, {9, 10}}});
    double oracle = 0.0;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            auto x = f.edge(0, a), y = f.edge(1, b);
            bool shared = false;
            for (auto u : x)
                if (std::find(y.begin(), y.end(), u) != y.end()) shared = true;
            oracle += shared ? 1.0 / 9.0 : 0.0;
        }
    CHECK(oracle == doctest::Approx(1.0 / 9.0));

    NibbleEngine eng(f, config_for(f, 2));
    const std::size_t runs = 20000;
    std::size_t collisions = 0;
    for (std::size_t t = 0; t < runs; ++t) {
        eng.start_attempt(t);
        auto mk = eng.step_mark_and_kill();
        REQUIRE(mk.ok);
        if (!mk.phi.empty()) {
            ++collisions;
            CHECK(mk.phi == std::vector<std::size_t>{0, 1});
            CHECK(mk.collision_vertices == 1);
            CHECK(eng.partial().size() == 0);
        } else {
            CHECK(eng.partial().size() == 2);
        }
    }
    const double p = double(collisions) / runs;
    const double se = std::sqrt(oracle * (1 - oracle) / runs);
    CHECK(std::abs(p - oracle) < 3 * se);
}

TEST_CASE("zap probability") {
    // Q(0) = 1/5 from a single class of size 5 in the chunk.
    const auto f = family_of(2, 12, {{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}}, {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {10, 11}}});
    SUBCASE("f below Q restarts") {
        NibbleEngine eng(f, config_for(f, 1));
        eng.start_attempt(0);
        const auto cm = eng.plan().chunk(0)[0];
        CHECK(eng.marking_probability(f.edge(cm, 0)[0]) == doctest::Approx(0.2));
        auto mk = eng.step_mark_and_kill();
        REQUIRE(mk.ok);
        CHECK(eng.step_zap(0.1).restart);
    }
    SUBCASE("f equal to Q never zaps that vertex") {
        for (std::size_t t = 0; t < 50; ++t) {
            NibbleEngine eng(f, config_for(f, 1));
            eng.start_attempt(t);
            const auto cm = eng.plan().chunk(0)[0];
            std::set<Vertex> in_chunk;
            for (std::size_t e = 0; e < f.size(cm); ++e)
                for (auto v : f.edge(cm, e)) in_chunk.insert(v);
            eng.step_mark_and_kill();
            auto z = eng.step_zap(0.2);
            CHECK_FALSE(z.restart);
            CHECK(z.max_residual <= 1e-12);
            for (auto v : eng.last_zapped()) CHECK(in_chunk.count(v) == 0);
        }
    }
    SUBCASE("f = 1 deletes every survivor") {
        NibbleEngine eng(f, config_for(f, 1));
        eng.start_attempt(0);
        eng.step_mark_and_kill();
        auto z = eng.step_zap(1.0);
        CHECK_FALSE(z.restart);
        CHECK(eng.alive_count() == 0);
    }
}

TEST_CASE("condemnation is uniform at rate f") {
    // Each vertex is condemned (marked or zapped) with probability Q + (1 - Q) P = f.
    const auto f = gen_random_simple(6, 4, 2, 3);
    NibbleEngine eng(f, config_for(f, 2));
    const double rate = 0.5;
    const std::size_t runs = 10000;
    std::vector<std::size_t> condemned(f.num_vertices(), 0);
    for (std::size_t t = 0; t < runs; ++t) {
        eng.start_attempt(t);
        REQUIRE(eng.step_mark_and_kill().ok);
        auto marked = eng.last_marked();
        auto z = eng.step_zap(rate);
        REQUIRE_FALSE(z.restart);
        std::set<Vertex> gone(marked.begin(), marked.end());
        gone.insert(eng.last_zapped().begin(), eng.last_zapped().end());
        for (auto v : gone) ++condemned[v];
    }
    const double se = std::sqrt(rate * (1 - rate) / runs);
    for (Vertex v = 0; v < f.num_vertices(); ++v) {
        CAPTURE(v);
        CHECK(std::abs(double(condemned[v]) / runs - rate) < 3.5 * se);
    }
}

TEST_CASE("collision repair and final greedy take the lowest edge") {
    const auto f = family_of(2, 10, {{{5, 9}, {2, 7}}});
    auto cfg = config_for(f, 1);
    auto out = run_nibble(f, cfg);
    REQUIRE(out.status == RunStatus::success);
    CHECK(out.rainbow.picks.at(0) == Edge{2, 7});
    CHECK(out.final_stage.reached);
}

TEST_CASE("trivial instances") {
    SUBCASE("one class of one edge") {
        const auto f = family_of(2, 2, {{{0, 1}}});
        auto out = run_nibble(f, config_for(f, 1));
        CHECK(out.status == RunStatus::success);
        CHECK(out.rainbow.size() == 1);
    }
    SUBCASE("one chunk holding every class succeeds unless picks collide") {
        const auto f = family_of(2, 8, {{{0, 1}, {2, 3}}, {{4, 5}, {6, 7}}});
        for (std::uint64_t s = 1; s <= 20; ++s) CHECK(run_nibble(f, config_for(f, 2, s)).status == RunStatus::success);
    }
    SUBCASE("chunk of one class never collides") {
        const auto f = gen_random_simple(10, 6, 2, 5);
        NibbleEngine eng(f, config_for(f, 1));
        eng.start_attempt(0);
        auto mk = eng.step_mark_and_kill();
        CHECK(mk.ok);
        CHECK(mk.phi.empty());
        CHECK(eng.partial().size() == 1);
    }
}

TEST_CASE("no false success on families without a full rainbow matching") {
    for (std::size_t m : {2, 4, 6}) {
        const auto f = gen_double_star(m);
        for (std::uint64_t s = 1; s <= 30; ++s) {
            auto cfg = config_for(f, 1, s);
            cfg.allow_improper = true;
            cfg.max_restarts = 3;
            auto out = run_nibble(f, cfg);
            CHECK(out.status != RunStatus::success);
            CHECK(verify_rainbow(f, out.rainbow, false).empty());
        }
    }
    const auto two = gen_two_k4();
    for (std::uint64_t s = 1; s <= 30; ++s) CHECK(run_nibble(two, config_for(two, 1, s)).status != RunStatus::success);
    CHECK_THROWS_AS(run_nibble(gen_double_star(4), config_for(gen_double_star(4), 1)), Error);
}

TEST_CASE("permutation and chunking") {
    Rng a(3), b(3);
    auto p = permute_and_chunk(10, 2, a);
    CHECK(p.num_chunks == 5);
    CHECK(permute_and_chunk(10, 2, b).order == p.order);
    std::vector<std::size_t> sorted = p.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
    for (std::size_t j = 0; j < p.num_chunks; ++j)
        for (auto mi : p.chunk(j)) CHECK(p.chunk_of[mi] == j);

    Rng c(4);
    auto q = permute_and_chunk(10, 3, c);
    CHECK(q.num_chunks == 4);
    CHECK(q.chunk(3).size() == 1);

    // first position is uniform
    std::vector<std::size_t> first(10, 0);
    Rng d(9);
    const std::size_t runs = 20000;
    for (std::size_t t = 0; t < runs; ++t) ++first[permute_and_chunk(10, 2, d).order[0]];
    const double se = std::sqrt(0.1 * 0.9 / runs);
    for (auto cnt : first) CHECK(std::abs(double(cnt) / runs - 0.1) < 4 * se);
}

TEST_CASE("determinism") {
    const auto f = gen_random_simple(200, 160, 2, 17);
    auto cfg = config_for(f, 8, 99);
    auto a = run_nibble(f, cfg);
    auto b = run_nibble(f, cfg);
    CHECK(deterministic_equal(a, b));
    cfg.seed = 100;
    auto c = run_nibble(f, cfg);
    CHECK_FALSE(deterministic_equal(a, c));
}

TEST_CASE("step invariants on random runs") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const int k = seed % 3 == 0 ? 3 : 2;
        const auto f = gen_random_simple(40, 30, k, seed);
        auto cfg = config_for(f, 3, seed);
        NibbleEngine eng(f, cfg);
        eng.start_attempt(0);
        std::vector<std::size_t> prev(f.num_matchings());
        for (std::size_t i = 0; i < f.num_matchings(); ++i) prev[i] = eng.live_size(i);
        std::size_t processed = 0;
        bool stopped = false;
        while (!eng.at_final_chunk() && !stopped) {
            const auto chunk = eng.plan().chunk(eng.current_chunk());
            double maxq = 0.0;
            for (Vertex v = 0; v < f.num_vertices(); ++v)
                if (eng.alive(v)) maxq = std::max(maxq, eng.marking_probability(v));
            auto mk = eng.step_mark_and_kill();
            if (!mk.ok) break;
            CHECK(verify_rainbow(f, eng.partial(), false).empty());
            auto z = eng.step_zap(std::min(1.0, maxq + 1e-6));
            if (z.restart) {
                stopped = true;
                break;
            }
            CHECK(z.max_residual <= 1e-12);
            auto rep = eng.step_collision_repair();
            if (!rep.ok) break;
            processed += chunk.size();
            CHECK(eng.partial().size() == processed);
            CHECK(verify_rainbow(f, eng.partial(), false).empty());
            for (std::size_t i = 0; i < f.num_matchings(); ++i) {
                CHECK(eng.live_size(i) <= prev[i]);
                prev[i] = eng.live_size(i);
                for (const auto& e : eng.live_edges(i))
                    for (auto v : e) CHECK(eng.alive(v));
            }
            // matchings already in M0 contribute none of their vertices to the live graph
            for (const auto& [mi, e] : eng.partial().picks)
                for (auto v : e) CHECK_FALSE(eng.alive(v));
        }
    }
}

TEST_CASE("outcomes are consistent") {
    std::size_t guard_runs = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto f = gen_random_simple(30, 20, 2, seed);
        auto cfg = config_for(f, 4, seed);
        cfg.max_restarts = 2;
        auto out = run_nibble(f, cfg);
        CHECK(verify_rainbow(f, out.rainbow, out.status == RunStatus::success).empty());
        CHECK(out.max_zap_residual <= 1e-12);
        if (out.final_stage.reached && out.final_stage.guard_held) {
            ++guard_runs;
            CHECK(out.status == RunStatus::success);
        }
        if (out.status == RunStatus::success) CHECK(out.rainbow.size() == f.num_matchings());
        for (std::size_t i = 1; i < out.trajectory.size(); ++i) {
            CHECK(out.trajectory[i].surviving_vertices <= out.trajectory[i - 1].surviving_vertices);
            CHECK(out.trajectory[i].surviving_matchings < out.trajectory[i - 1].surviving_matchings);
        }
    }
    CHECK(guard_runs > 0);
}

TEST_CASE("strict theoretical mode stops on an envelope breach") {
    const auto f = gen_latin(8, LatinKind::cyclic);
    NibbleConfig cfg;
    cfg.schedule.k = 2;
    cfg.schedule.n = 8;
    cfg.schedule.m = 8;
    cfg.schedule.epsilon = 0.5;
    cfg.schedule.gamma = 0.01;
    cfg.schedule.xi = 1.0 / std::log(8.0);
    cfg.schedule.mode = ScheduleMode::theoretical;
    cfg.strict = true;
    NibbleEngine eng(f, cfg);
    auto out = eng.run();
    CHECK(out.status == RunStatus::constraint_violation);
    REQUIRE_FALSE(out.trajectory.empty());
    CHECK(out.trajectory.back().a2_breach);
}

TEST_CASE("precondition errors") {
    MatchingFamily uneven(2, 6, 2);
    uneven.add_edge(0, {0, 1});
    uneven.add_edge(1, {2, 3});
    uneven.add_edge(1, {4, 5});
    CHECK_THROWS_AS(run_nibble(uneven, config_for(uneven, 1)), Error);
    const auto f = gen_random_simple(10, 5, 2, 1);
    auto cfg = config_for(f, 1);
    cfg.schedule.m = 4;
    CHECK_THROWS_AS(NibbleEngine(f, cfg), Error);
}

#include "rainbow/generators.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <tuple>

#include "rainbow/exact.hpp"
#include "rainbow/random.hpp"

namespace rainbow {

namespace {

// Membership set of sorted k-vertex sets; packs into 64 bits when possible.
class EdgeSet {
public:
    EdgeSet(int k, std::uint64_t universe, std::size_t expected)
        : k_(k), universe_(universe), packed_(std::pow(static_cast<double>(universe), k) < 1.8e19) {
        if (packed_) keys_.reserve(expected);
    }

    bool contains(std::span<const Vertex> e) const {
        return packed_ ? keys_.contains(pack(e)) : wide_.contains(std::vector<Vertex>(e.begin(), e.end()));
    }

    void insert(std::span<const Vertex> e) {
        if (packed_)
            keys_.insert(pack(e));
        else
            wide_.insert(std::vector<Vertex>(e.begin(), e.end()));
    }

private:
    std::uint64_t pack(std::span<const Vertex> e) const {
        std::uint64_t key = 0;
        for (Vertex v : e) key = key * universe_ + v;
        return key;
    }

    int k_;
    std::uint64_t universe_;
    bool packed_;
    absl::flat_hash_set<std::uint64_t> keys_;
    absl::flat_hash_set<std::vector<Vertex>> wide_;
};

std::optional<MatchingFamily> place_random_family(std::size_t n, std::size_t m, int k, Vertex universe, Rng& rng,
                                                  const RandomFamilyOptions& opt) {
    MatchingFamily family(k, universe, m);
    EdgeSet edges(k, universe, n * m);
    absl::flat_hash_map<std::uint64_t, std::uint32_t> codegree;
    std::vector<std::uint32_t> degree(universe, 0);
    std::vector<Vertex> free(universe);
    std::vector<Vertex> candidate(k);
    const bool track_codegree = opt.max_codegree_cap && k >= 3;

    for (std::size_t i = 0; i < m; ++i) {
        std::iota(free.begin(), free.end(), Vertex{0});
        std::size_t free_count = universe;
        for (std::size_t e = 0; e < n; ++e) {
            bool placed = false;
            for (std::size_t attempt = 0; attempt < opt.edge_retries && !placed; ++attempt) {
                // Partial Fisher-Yates moves k distinct free vertices to the tail of the free region.
                for (int j = 0; j < k; ++j) {
                    const auto last = free_count - 1 - j;
                    const auto r = rng.below(last + 1);
                    std::swap(free[r], free[last]);
                    candidate[j] = free[last];
                }
                std::sort(candidate.begin(), candidate.end());
                if (opt.max_degree_cap &&
                    std::any_of(candidate.begin(), candidate.end(), [&](Vertex v) { return degree[v] >= *opt.max_degree_cap; }))
                    continue;
                if (edges.contains(candidate)) continue;
                if (track_codegree) {
                    bool over = false;
                    for (int a = 0; a < k && !over; ++a)
                        for (int b = a + 1; b < k && !over; ++b) {
                            auto it = codegree.find(std::uint64_t{candidate[a]} * universe + candidate[b]);
                            over = it != codegree.end() && it->second >= *opt.max_codegree_cap;
                        }
                    if (over) continue;
                    for (int a = 0; a < k; ++a)
                        for (int b = a + 1; b < k; ++b) ++codegree[std::uint64_t{candidate[a]} * universe + candidate[b]];
                }
                edges.insert(candidate);
                for (Vertex v : candidate) ++degree[v];
                family.add_edge(i, candidate);
                free_count -= k;
                placed = true;
            }
            if (!placed) return std::nullopt;
        }
    }
    return family;
}

} // namespace

MatchingFamily gen_random_simple(std::size_t n, std::size_t m, int k, std::uint64_t seed,
                                 const RandomFamilyOptions& options) {
    if (k < 2) throw Error("edge arity must be at least 2");
    if (options.universe_ratio < 1.0) throw Error("universe ratio must be at least 1");
    const auto universe = static_cast<std::uint64_t>(std::ceil(options.universe_ratio * k * n));
    if (universe > 0xffffffffULL) throw Error("vertex universe too large");
    if (options.max_degree_cap && m * n * k > *options.max_degree_cap * universe)
        throw Error("could not place edge: degree cap leaves too few vertex slots");

    for (std::size_t attempt = 0; attempt <= options.restarts; ++attempt) {
        auto rng = Rng::derive(seed, {static_cast<std::uint64_t>(Stream::generator), attempt});
        if (auto family = place_random_family(n, m, k, static_cast<Vertex>(universe), rng, options)) return *family;
    }
    std::ostringstream os;
    os << "could not place edge after " << options.restarts << " restarts (n=" << n << ", m=" << m << ", k=" << k
       << ")";
    throw Error(os.str());
}

namespace {

// Incidence cube of a Latin square, with at most one -1 entry while improper.
class LatinCube {
public:
    explicit LatinCube(std::size_t n) : n_(n), cell_(n * n * n, 0) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) at(r, c, (r + c) % n) = 1;
    }

    void step(Rng& rng) {
        std::size_t r, c, s, r2, c2, s2;
        if (!improper_) {
            do {
                r = rng.below(n_);
                c = rng.below(n_);
                s = rng.below(n_);
            } while (at(r, c, s) != 0);
            r2 = find_row(c, s, rng);
            c2 = find_col(r, s, rng);
            s2 = find_sym(r, c, rng);
        } else {
            std::tie(r, c, s) = bad_;
            r2 = find_row(c, s, rng);
            c2 = find_col(r, s, rng);
            s2 = find_sym(r, c, rng);
        }
        ++at(r, c, s);
        ++at(r, c2, s2);
        ++at(r2, c, s2);
        ++at(r2, c2, s);
        --at(r, c, s2);
        --at(r, c2, s);
        --at(r2, c, s);
        --at(r2, c2, s2);
        improper_ = at(r2, c2, s2) < 0;
        if (improper_) bad_ = {r2, c2, s2};
    }

    bool proper() const noexcept { return !improper_; }

    std::vector<std::vector<std::uint32_t>> square() const {
        std::vector<std::vector<std::uint32_t>> sq(n_, std::vector<std::uint32_t>(n_));
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c)
                for (std::size_t s = 0; s < n_; ++s)
                    if (at(r, c, s) == 1) sq[r][c] = static_cast<std::uint32_t>(s);
        return sq;
    }

private:
    std::int8_t& at(std::size_t r, std::size_t c, std::size_t s) { return cell_[(r * n_ + c) * n_ + s]; }
    std::int8_t at(std::size_t r, std::size_t c, std::size_t s) const { return cell_[(r * n_ + c) * n_ + s]; }

    // Uniform choice among the positive entries of a line (one when proper, two when improper).
    template <class F>
    std::size_t pick(F entry, Rng& rng) const {
        std::size_t hits[2];
        std::size_t count = 0;
        for (std::size_t x = 0; x < n_ && count < 2; ++x)
            if (entry(x) == 1) hits[count++] = x;
        return count == 1 ? hits[0] : hits[rng.below(2)];
    }
    std::size_t find_row(std::size_t c, std::size_t s, Rng& rng) const {
        return pick([&](std::size_t x) { return at(x, c, s); }, rng);
    }
    std::size_t find_col(std::size_t r, std::size_t s, Rng& rng) const {
        return pick([&](std::size_t x) { return at(r, x, s); }, rng);
    }
    std::size_t find_sym(std::size_t r, std::size_t c, Rng& rng) const {
        return pick([&](std::size_t x) { return at(r, c, x); }, rng);
    }

    std::size_t n_;
    std::vector<std::int8_t> cell_;
    bool improper_ = false;
    std::tuple<std::size_t, std::size_t, std::size_t> bad_{};
};

} // namespace

std::vector<std::vector<std::uint32_t>> latin_square(std::size_t n, LatinKind kind, std::uint64_t seed) {
    if (n == 0) throw Error("Latin square order must be positive");
    std::vector<std::vector<std::uint32_t>> sq(n, std::vector<std::uint32_t>(n));
    if (kind == LatinKind::cyclic || n == 1) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) sq[r][c] = static_cast<std::uint32_t>((r + c) % n);
        return sq;
    }
    auto rng = Rng::derive(seed, {static_cast<std::uint64_t>(Stream::latin), n});
    LatinCube cube(n);
    const std::size_t steps = std::min<std::size_t>(n * n * n, 200000);
    for (std::size_t i = 0; i < steps || !cube.proper(); ++i) cube.step(rng);
    const auto walked = cube.square();

    std::vector<std::uint32_t> rows(n), cols(n), syms(n);
    std::iota(rows.begin(), rows.end(), 0u);
    std::iota(cols.begin(), cols.end(), 0u);
    std::iota(syms.begin(), syms.end(), 0u);
    rng.shuffle(rows.begin(), rows.end());
    rng.shuffle(cols.begin(), cols.end());
    rng.shuffle(syms.begin(), syms.end());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) sq[rows[r]][cols[c]] = syms[walked[r][c]];
    return sq;
}

MatchingFamily latin_family(const std::vector<std::vector<std::uint32_t>>& square) {
    const auto n = square.size();
    MatchingFamily family(2, static_cast<Vertex>(2 * n), n);
    for (std::size_t r = 0; r < n; ++r) {
        if (square[r].size() != n) throw Error("Latin square must be n x n");
        for (std::size_t c = 0; c < n; ++c) {
            if (square[r][c] >= n) throw Error("Latin square symbol out of range");
            family.add_edge(square[r][c], {static_cast<Vertex>(r), static_cast<Vertex>(n + c)});
        }
    }
    return family;
}

MatchingFamily gen_latin(std::size_t n, LatinKind kind, std::uint64_t seed) {
    return latin_family(latin_square(n, kind, seed));
}

MatchingFamily gen_double_star(std::size_t m) {
    if (m < 2 || m % 2 != 0) throw Error("double-star family needs an even m >= 2");
    const std::size_t block = m + 2;
    const std::size_t half = m / 2;
    MatchingFamily family(2, static_cast<Vertex>(m * block), m + 1);
    for (std::size_t j = 0; j < m; ++j) {
        const auto a = static_cast<Vertex>(j * block);
        const auto b = a + 1;
        family.add_edge(0, {a, b});
        for (std::size_t l = 0; l < half; ++l) family.add_edge(j + 1, {a, static_cast<Vertex>(a + 2 + l)});
        for (std::size_t l = 0; l < half; ++l) family.add_edge(j + 1, {b, static_cast<Vertex>(a + 2 + half + l)});
    }
    return family;
}

MatchingFamily gen_two_k4() {
    static constexpr Vertex factors[3][2][2] = {{{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}};
    MatchingFamily family(2, 8, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (Vertex offset : {0u, 4u})
            for (const auto& e : factors[i]) family.add_edge(i, {e[0] + offset, e[1] + offset});
    return family;
}

const char* part_name(Part p) noexcept {
    switch (p) {
    case Part::colour: return "colour";
    case Part::side_a: return "side_a";
    case Part::side_b: return "side_b";
    case Part::original: return "original";
    }
    return "?";
}

LiftedFamily lift_to_3uniform(const MatchingFamily& family) {
    if (family.k() != 2) throw Error("lift_to_3uniform needs a graph family (k=2)");
    const Vertex nv = family.num_vertices();
    const auto m = family.num_matchings();

    // 2-colour the underlying graph to detect bipartiteness.
    std::vector<std::vector<Vertex>> adj(nv);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t e = 0; e < family.size(i); ++e) {
            auto x = family.edge(i, e);
            adj.at(x[0]).push_back(x[1]);
            adj.at(x[1]).push_back(x[0]);
        }
    std::vector<int> side(nv, -1);
    bool bipartite = true;
    for (Vertex s = 0; s < nv; ++s) {
        if (side[s] != -1) continue;
        side[s] = 0;
        std::queue<Vertex> q;
        q.push(s);
        while (!q.empty()) {
            const Vertex u = q.front();
            q.pop();
            for (Vertex w : adj[u]) {
                if (side[w] == -1) {
                    side[w] = 1 - side[u];
                    q.push(w);
                } else if (side[w] == side[u]) {
                    bipartite = false;
                }
            }
        }
    }

    LiftedFamily out;
    out.tripartite = bipartite;
    out.family = MatchingFamily(3, static_cast<Vertex>(nv + m), m);
    out.parts.resize(nv + m, Part::colour);
    for (Vertex v = 0; v < nv; ++v) out.parts[v] = !bipartite ? Part::original : side[v] == 0 ? Part::side_a : Part::side_b;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t e = 0; e < family.size(i); ++e) {
            auto x = family.edge(i, e);
            out.family.add_edge(i, {x[0], x[1], static_cast<Vertex>(nv + i)});
        }

    out.min_colour_degree = m == 0 ? 0 : family.size(0);
    for (std::size_t i = 0; i < m; ++i) out.min_colour_degree = std::min(out.min_colour_degree, family.size(i));
    const auto degree = vertex_degrees(family);
    out.max_original_degree = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
    return out;
}

namespace {

// Partitions of `total` into even parts >= 4, non-increasing.
void even_cycle_partitions(std::size_t total, std::size_t max_part, std::vector<std::size_t>& current,
                           std::vector<std::vector<std::size_t>>& out) {
    if (total == 0) {
        out.push_back(current);
        return;
    }
    for (std::size_t part = std::min(total, max_part) & ~std::size_t{1}; part >= 4; part -= 2) {
        if (total - part != 0 && total - part < 4) continue;
        current.push_back(part);
        even_cycle_partitions(total - part, part, current, out);
        current.pop_back();
    }
}

std::vector<std::array<Vertex, 2>> cycle_edges(const std::vector<std::size_t>& lengths) {
    std::vector<std::array<Vertex, 2>> edges;
    Vertex base = 0;
    for (auto len : lengths) {
        for (std::size_t j = 0; j < len; ++j) {
            auto u = static_cast<Vertex>(base + j);
            auto v = static_cast<Vertex>(base + (j + 1) % len);
            edges.push_back({std::min(u, v), std::max(u, v)});
        }
        base += static_cast<Vertex>(len);
    }
    return edges;
}

MatchingFamily coloured_family(const std::vector<std::array<Vertex, 2>>& edges, const std::vector<std::size_t>& colour,
                               std::size_t colours) {
    MatchingFamily family(2, static_cast<Vertex>(edges.size()), colours);
    for (std::size_t e = 0; e < edges.size(); ++e) family.add_edge(colour[e], {edges[e][0], edges[e][1]});
    return family;
}

// Enumerates set partitions of the edges into classes of exactly 3 (restricted
// growth order) and stops at the first colouring accepted by `visit`.
template <class Visit>
bool enumerate_triples(std::vector<std::size_t>& colour, std::vector<std::size_t>& fill, std::size_t e,
                       std::size_t used, std::uint64_t& budget, Visit&& visit) {
    const std::size_t colours = fill.size();
    if (e == colour.size()) {
        if (budget == 0) return false;
        --budget;
        return visit(colour);
    }
    for (std::size_t c = 0; c <= used && c < colours; ++c) {
        if (fill[c] == 3) continue;
        colour[e] = c;
        ++fill[c];
        const bool done = enumerate_triples(colour, fill, e + 1, std::max(used, c + 1), budget, visit);
        --fill[c];
        if (done || budget == 0) return done;
    }
    return false;
}

} // namespace

std::optional<Counterexample> find_2regular_counterexample(std::size_t max_vertices, std::uint64_t seed,
                                                           std::uint64_t budget) {
    auto rng = Rng::derive(seed, {static_cast<std::uint64_t>(Stream::search)});
    std::uint64_t tried = 0;
    // Bipartite 2-regular graphs are unions of even cycles; with colour classes of
    // size 3 the vertex count must be a multiple of 6.
    for (std::size_t nv = 6; nv <= max_vertices && budget > 0; nv += 6) {
        std::vector<std::vector<std::size_t>> structures;
        std::vector<std::size_t> current;
        even_cycle_partitions(nv, nv, current, structures);
        const std::size_t colours = nv / 3;
        for (const auto& lengths : structures) {
            const auto edges = cycle_edges(lengths);
            std::optional<Counterexample> found;
            auto check = [&](const std::vector<std::size_t>& colour) {
                ++tried;
                auto family = coloured_family(edges, colour, colours);
                auto res = find_full(family);
                if (res.status != SearchStatus::none) return false;
                found = Counterexample{std::move(family), lengths, tried, res.nodes};
                return true;
            };
            // Number of colourings is E! / (3!^C C!); enumerate when it fits the budget.
            double count = 1.0;
            for (std::size_t j = 1; j <= edges.size(); ++j) count *= static_cast<double>(j);
            for (std::size_t j = 1; j <= colours; ++j) count /= 6.0 * static_cast<double>(j);
            if (count <= static_cast<double>(budget)) {
                std::vector<std::size_t> colour(edges.size()), fill(colours, 0);
                enumerate_triples(colour, fill, 0, 0, budget, check);
            } else {
                const std::uint64_t samples = budget / std::max<std::size_t>(structures.size(), 1);
                std::vector<std::size_t> colour(edges.size());
                for (std::uint64_t s = 0; s < samples && budget > 0 && !found; ++s, --budget) {
                    for (std::size_t e = 0; e < colour.size(); ++e) colour[e] = e / 3;
                    rng.shuffle(colour.begin(), colour.end());
                    check(colour);
                }
            }
            if (found) return found;
            if (budget == 0) break;
        }
    }
    return std::nullopt;
}

MatchingFamily pad_with_disjoint_matchings(const MatchingFamily& family, std::size_t target_m) {
    const auto m = family.num_matchings();
    if (target_m < m) throw Error("pad target is smaller than the current number of matchings");
    if (m == 0) throw Error("cannot infer the matching size of an empty family");
    const auto n = family.size(0);
    for (std::size_t i = 1; i < m; ++i)
        if (family.size(i) != n) throw Error("padding needs matchings of equal size");

    MatchingFamily out = family;
    const int k = family.k();
    Vertex next = family.num_vertices();
    std::vector<Vertex> e(k);
    for (std::size_t i = m; i < target_m; ++i) {
        const auto idx = out.add_matching();
        for (std::size_t j = 0; j < n; ++j) {
            for (int t = 0; t < k; ++t) e[t] = next++;
            out.add_edge(idx, e);
        }
    }
    out.set_num_vertices(next);
    return out;
}

} // namespace rainbow

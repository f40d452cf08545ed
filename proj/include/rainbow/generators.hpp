#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rainbow/model.hpp"

namespace rainbow {

struct RandomFamilyOptions {
    std::optional<std::size_t> max_degree_cap;
    std::optional<std::size_t> max_codegree_cap; // k >= 3 only
    double universe_ratio = 1.5;                 // vertex universe = ceil(ratio * k * n)
    std::size_t edge_retries = 1000;
    std::size_t restarts = 20;
};

/// m pairwise edge-disjoint matchings, each of exactly n edges on k vertices,
/// placed by rejection sampling. Deterministic in (n, m, k, seed, options).
/// Throws Error("could not place edge ...") when the retry budget runs out.
MatchingFamily gen_random_simple(std::size_t n, std::size_t m, int k, std::uint64_t seed,
                                 const RandomFamilyOptions& options = {});

enum class LatinKind { cyclic, random };

/// square[r][c] = symbol. The random kind runs a Jacobson-Matthews walk from
/// the cyclic square followed by a random isotopy; its distribution is
/// heuristic, not proven uniform.
std::vector<std::vector<std::uint32_t>> latin_square(std::size_t n, LatinKind kind, std::uint64_t seed);

/// Symbol s becomes the matching {(r, c) : square[r][c] = s} on rows 0..n-1
/// and columns n..2n-1; full rainbow matchings are exactly the transversals.
MatchingFamily latin_family(const std::vector<std::vector<std::uint32_t>>& square);
MatchingFamily gen_latin(std::size_t n, LatinKind kind, std::uint64_t seed = 0);

/// Double-star family on m components (m even). Matching 0 holds the m central
/// edges; matching j+1 holds the m leaf edges of component j. Leaf classes are
/// stars, so the colouring is improper. Component j occupies ids
/// [j(m+2), (j+1)(m+2)): two centres, then m/2 leaves per centre.
MatchingFamily gen_double_star(std::size_t m);

/// Three matchings of size 4 on 8 vertices from the 1-factorisation
/// {01,23}, {02,13}, {03,12} of two disjoint copies of K4.
MatchingFamily gen_two_k4();

enum class Part : std::uint8_t { colour, side_a, side_b, original };

const char* part_name(Part p) noexcept;

struct LiftedFamily {
    /// k=3; colour i is vertex original.num_vertices() + i and every hyperedge
    /// of colour i lies in matching i.
    MatchingFamily family;
    std::vector<Part> parts;
    bool tripartite = false;
    std::size_t min_colour_degree = 0;   // delta(V1)
    std::size_t max_original_degree = 0; // Delta(V2 u V3)
};

LiftedFamily lift_to_3uniform(const MatchingFamily& family);

struct Counterexample {
    MatchingFamily family;
    std::vector<std::size_t> cycle_lengths;
    std::uint64_t colourings_tried = 0;
    std::uint64_t oracle_nodes = 0; // nodes of the exhaustive search certifying "none"
};

/// Searches bipartite 2-regular graphs (disjoint even cycles) whose edges are
/// split into colour classes of exactly 3 edges for one without a full
/// rainbow matching. Small cases are enumerated exhaustively, larger ones
/// sampled; `budget` caps the number of colourings examined.
std::optional<Counterexample> find_2regular_counterexample(std::size_t max_vertices, std::uint64_t seed,
                                                           std::uint64_t budget = 200000);

/// Appends target_m - m matchings of the common size n on fresh vertices.
MatchingFamily pad_with_disjoint_matchings(const MatchingFamily& family, std::size_t target_m);

} // namespace rainbow

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rainbow {

using Vertex = std::uint32_t;
using Edge = std::vector<Vertex>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A family of m colour classes ("matchings") of k-vertex edges over the dense
/// vertex universe 0..num_vertices-1. Edges are stored with their vertices
/// sorted ascending. Parallel edges are the same vertex set appearing in
/// different matchings; multiplicity is derived, never stored.
///
/// The container does not enforce the matching property or vertex ranges so
/// that improperly coloured instances (the double-star family, lifted
/// hypergraphs) can be represented; `validate` reports those.
class MatchingFamily {
public:
    MatchingFamily() = default;
    MatchingFamily(int k, Vertex num_vertices, std::size_t num_matchings = 0);

    int k() const noexcept { return k_; }
    Vertex num_vertices() const noexcept { return num_vertices_; }
    std::size_t num_matchings() const noexcept { return slots_.size(); }
    std::size_t size(std::size_t matching) const { return slots_.at(matching).size() / k_; }
    std::size_t num_edges() const noexcept;

    std::span<const Vertex> edge(std::size_t matching, std::size_t index) const;
    /// All vertex slots of one matching, k per edge.
    std::span<const Vertex> slots(std::size_t matching) const { return slots_.at(matching); }

    std::size_t add_matching();
    void set_num_vertices(Vertex n) noexcept { num_vertices_ = n; }
    /// Sorts the vertices; throws Error if the arity differs from k.
    void add_edge(std::size_t matching, std::span<const Vertex> vertices);
    void add_edge(std::size_t matching, std::initializer_list<Vertex> vertices);

    bool contains_edge(std::size_t matching, std::span<const Vertex> sorted_vertices) const;

    bool operator==(const MatchingFamily&) const = default;

private:
    int k_ = 2;
    Vertex num_vertices_ = 0;
    std::vector<std::vector<Vertex>> slots_;
};

struct ValidateOptions {
    /// When false, colour classes may share vertices (improper colourings).
    bool require_matchings = true;
};

/// Empty result means the family is valid.
std::vector<std::string> validate(const MatchingFamily& family, const ValidateOptions& options = {});

struct FamilyStats {
    std::size_t m = 0;
    std::size_t num_edges = 0;
    std::size_t min_size = 0;
    std::size_t max_size = 0;
    std::size_t max_degree = 0;       // edge slots per vertex, counting multiplicity
    std::size_t max_multiplicity = 0; // matchings sharing one exact vertex set
    std::size_t max_codegree = 0;     // edges through a vertex pair (k=2: multiplicity)

    bool equal_sizes() const noexcept { return min_size == max_size; }
    bool simple() const noexcept { return max_multiplicity <= 1; }
    bool operator==(const FamilyStats&) const = default;
};

/// Throws Error when the family is structurally invalid (range, arity, repeated vertex in an edge).
FamilyStats compute_stats(const MatchingFamily& family);
std::vector<std::size_t> vertex_degrees(const MatchingFamily& family);

/// One chosen edge per represented colour class, keyed by matching index.
struct RainbowMatching {
    std::map<std::size_t, Edge> picks;

    std::size_t size() const noexcept { return picks.size(); }
    bool operator==(const RainbowMatching&) const = default;
};

/// Returns an empty string when `rm` is a valid (and, if requested, full)
/// rainbow matching of `family`; otherwise a description of the first violation.
std::string verify_rainbow(const MatchingFamily& family, const RainbowMatching& rm, bool require_full);

enum class Theorem { bounded_degree = 1, simple = 2, multigraph = 3, hypergraph = 4 };

struct HypothesisParams {
    double c = 0.05;
    double delta = 0.0;
    double eps0 = 0.1;
};

struct HypothesisClause {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool satisfied = false;
};

struct HypothesisReport {
    Theorem theorem = Theorem::simple;
    std::size_t n = 0; // common matching size (max size when sizes differ)
    std::vector<HypothesisClause> clauses;

    bool all_satisfied() const noexcept;
    const HypothesisClause* find(const std::string& name) const noexcept;
};

HypothesisReport check_hypotheses(const MatchingFamily& family, Theorem theorem, const HypothesisParams& params);

} // namespace rainbow

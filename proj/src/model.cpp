#include "rainbow/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace rainbow {

MatchingFamily::MatchingFamily(int k, Vertex num_vertices, std::size_t num_matchings)
    : k_(k), num_vertices_(num_vertices), slots_(num_matchings) {
    if (k < 2) throw Error("edge arity must be at least 2");
}

std::size_t MatchingFamily::num_edges() const noexcept {
    std::size_t total = 0;
    for (const auto& s : slots_) total += s.size();
    return total / k_;
}

std::span<const Vertex> MatchingFamily::edge(std::size_t matching, std::size_t index) const {
    const auto& s = slots_.at(matching);
    return std::span<const Vertex>(s).subspan(index * k_, k_);
}

std::size_t MatchingFamily::add_matching() {
    slots_.emplace_back();
    return slots_.size() - 1;
}

void MatchingFamily::add_edge(std::size_t matching, std::span<const Vertex> vertices) {
    if (static_cast<int>(vertices.size()) != k_) {
        std::ostringstream os;
        os << "edge of arity " << vertices.size() << " added to a family with k=" << k_;
        throw Error(os.str());
    }
    auto& s = slots_.at(matching);
    const auto first = s.size();
    s.insert(s.end(), vertices.begin(), vertices.end());
    std::sort(s.begin() + static_cast<std::ptrdiff_t>(first), s.end());
}

void MatchingFamily::add_edge(std::size_t matching, std::initializer_list<Vertex> vertices) {
    add_edge(matching, std::span<const Vertex>(vertices.begin(), vertices.size()));
}

bool MatchingFamily::contains_edge(std::size_t matching, std::span<const Vertex> sorted_vertices) const {
    if (static_cast<int>(sorted_vertices.size()) != k_) return false;
    for (std::size_t e = 0; e < size(matching); ++e) {
        auto x = edge(matching, e);
        if (std::equal(x.begin(), x.end(), sorted_vertices.begin())) return true;
    }
    return false;
}

std::vector<std::string> validate(const MatchingFamily& family, const ValidateOptions& options) {
    std::vector<std::string> violations;
    const auto nv = family.num_vertices();
    // owner[v] = 1 + matching index that last claimed v
    std::vector<std::size_t> owner(nv, 0);
    for (std::size_t i = 0; i < family.num_matchings(); ++i) {
        for (std::size_t e = 0; e < family.size(i); ++e) {
            auto x = family.edge(i, e);
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (x[j] >= nv) {
                    std::ostringstream os;
                    os << "matching " << i << " edge " << e << ": vertex " << x[j] << " out of range";
                    violations.push_back(os.str());
                    continue;
                }
                if (j > 0 && x[j] == x[j - 1]) {
                    std::ostringstream os;
                    os << "matching " << i << " edge " << e << ": vertex " << x[j] << " repeated within edge";
                    violations.push_back(os.str());
                    continue;
                }
                if (!options.require_matchings) continue;
                if (owner[x[j]] == i + 1) {
                    std::ostringstream os;
                    os << "vertex " << x[j] << " repeated in matching " << i;
                    violations.push_back(os.str());
                }
                owner[x[j]] = i + 1;
            }
        }
    }
    return violations;
}

std::vector<std::size_t> vertex_degrees(const MatchingFamily& family) {
    std::vector<std::size_t> degree(family.num_vertices(), 0);
    for (std::size_t i = 0; i < family.num_matchings(); ++i)
        for (Vertex v : family.slots(i)) ++degree.at(v);
    return degree;
}

namespace {

// Length of the longest run of equal values in a sorted range.
template <class It, class Eq>
std::size_t longest_run(It first, It last, Eq eq) {
    std::size_t best = 0;
    while (first != last) {
        auto next = first;
        std::size_t run = 0;
        while (next != last && eq(*next, *first)) {
            ++next;
            ++run;
        }
        best = std::max(best, run);
        first = next;
    }
    return best;
}

std::size_t max_multiplicity(const MatchingFamily& family) {
    const int k = family.k();
    const double nv = std::max<double>(family.num_vertices(), 1.0);
    if (std::pow(nv, k) < 1.8e19) {
        std::vector<std::uint64_t> keys;
        keys.reserve(family.num_edges());
        for (std::size_t i = 0; i < family.num_matchings(); ++i) {
            auto s = family.slots(i);
            for (std::size_t p = 0; p < s.size(); p += k) {
                std::uint64_t key = 0;
                for (int j = 0; j < k; ++j) key = key * family.num_vertices() + s[p + j];
                keys.push_back(key);
            }
        }
        std::sort(keys.begin(), keys.end());
        return longest_run(keys.begin(), keys.end(), std::equal_to<>{});
    }
    std::vector<std::span<const Vertex>> edges;
    for (std::size_t i = 0; i < family.num_matchings(); ++i)
        for (std::size_t e = 0; e < family.size(i); ++e) edges.push_back(family.edge(i, e));
    auto less = [](auto a, auto b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); };
    auto eq = [](auto a, auto b) { return std::equal(a.begin(), a.end(), b.begin()); };
    std::sort(edges.begin(), edges.end(), less);
    return longest_run(edges.begin(), edges.end(), eq);
}

std::size_t max_pair_codegree(const MatchingFamily& family) {
    const int k = family.k();
    const std::uint64_t nv = family.num_vertices();
    std::vector<std::uint64_t> keys;
    keys.reserve(family.num_edges() * k * (k - 1) / 2);
    for (std::size_t i = 0; i < family.num_matchings(); ++i) {
        auto s = family.slots(i);
        for (std::size_t p = 0; p < s.size(); p += k)
            for (int a = 0; a < k; ++a)
                for (int b = a + 1; b < k; ++b) keys.push_back(s[p + a] * nv + s[p + b]);
    }
    std::sort(keys.begin(), keys.end());
    return longest_run(keys.begin(), keys.end(), std::equal_to<>{});
}

} // namespace

FamilyStats compute_stats(const MatchingFamily& family) {
    if (auto v = validate(family, {.require_matchings = false}); !v.empty())
        throw Error("invalid family: " + v.front());

    FamilyStats st;
    st.m = family.num_matchings();
    st.num_edges = family.num_edges();
    if (st.m > 0) {
        st.min_size = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < st.m; ++i) {
            st.min_size = std::min(st.min_size, family.size(i));
            st.max_size = std::max(st.max_size, family.size(i));
        }
    }
    auto degree = vertex_degrees(family);
    if (!degree.empty()) st.max_degree = *std::max_element(degree.begin(), degree.end());
    if (st.num_edges > 0) {
        st.max_multiplicity = max_multiplicity(family);
        st.max_codegree = family.k() == 2 ? st.max_multiplicity : max_pair_codegree(family);
    }
    return st;
}

std::string verify_rainbow(const MatchingFamily& family, const RainbowMatching& rm, bool require_full) {
    std::set<Vertex> used;
    for (const auto& [matching, edge] : rm.picks) {
        std::ostringstream os;
        if (matching >= family.num_matchings()) {
            os << "matching index " << matching << " out of range";
            return os.str();
        }
        Edge sorted = edge;
        std::sort(sorted.begin(), sorted.end());
        if (!family.contains_edge(matching, sorted)) {
            os << "edge picked for matching " << matching << " does not belong to it";
            return os.str();
        }
        for (Vertex v : sorted) {
            if (!used.insert(v).second) {
                os << "vertices overlap at " << v;
                return os.str();
            }
        }
    }
    if (require_full && rm.picks.size() != family.num_matchings()) {
        std::ostringstream os;
        os << "not full: " << rm.picks.size() << " of " << family.num_matchings() << " matchings represented";
        return os.str();
    }
    return {};
}

bool HypothesisReport::all_satisfied() const noexcept {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.satisfied; });
}

const HypothesisClause* HypothesisReport::find(const std::string& name) const noexcept {
    for (const auto& c : clauses)
        if (c.name == name) return &c;
    return nullptr;
}

HypothesisReport check_hypotheses(const MatchingFamily& family, Theorem theorem, const HypothesisParams& params) {
    const auto st = compute_stats(family);
    HypothesisReport rep;
    rep.theorem = theorem;
    rep.n = st.max_size;
    const double n = static_cast<double>(rep.n);
    const double m = static_cast<double>(st.m);
    const double k = family.k();

    auto clause = [&](std::string name, double measured, double bound, bool ok) {
        rep.clauses.push_back({std::move(name), measured, bound, ok});
    };
    // Upper-bound clause: measured <= bound.
    auto at_most = [&](std::string name, double measured, double bound) {
        clause(std::move(name), measured, bound, measured <= bound);
    };

    clause("equal sizes", static_cast<double>(st.max_size - st.min_size), 0.0, st.equal_sizes());
    const double gamma = 1.0 - std::pow(n, -params.c);
    const double log_n = std::log(n);
    const double sparse_bound = log_n > 0.0 ? std::sqrt(n) / (log_n * log_n) : std::numeric_limits<double>::infinity();

    switch (theorem) {
    case Theorem::bounded_degree:
        clause("k = 2", k, 2.0, family.k() == 2);
        at_most("simple", static_cast<double>(st.max_multiplicity), 1.0);
        clause("0 <= delta < 1/4", params.delta, 0.25, params.delta >= 0.0 && params.delta < 0.25);
        clause("0 < c < (1-4delta)/10", params.c, (1.0 - 4.0 * params.delta) / 10.0,
               params.c > 0.0 && params.c < (1.0 - 4.0 * params.delta) / 10.0);
        at_most("m bound", m, gamma * std::pow(n, 1.0 + params.delta));
        at_most("max degree bound", static_cast<double>(st.max_degree), gamma * n);
        break;
    case Theorem::simple:
        clause("k = 2", k, 2.0, family.k() == 2);
        at_most("simple", static_cast<double>(st.max_multiplicity), 1.0);
        clause("0 < c < 1/10", params.c, 0.1, params.c > 0.0 && params.c < 0.1);
        at_most("m bound", m, gamma * n);
        break;
    case Theorem::multigraph:
        clause("k = 2", k, 2.0, family.k() == 2);
        clause("eps0 > 0", params.eps0, 0.0, params.eps0 > 0.0);
        at_most("m bound", m, (1.0 - params.eps0) * n);
        at_most("multiplicity bound", static_cast<double>(st.max_multiplicity), sparse_bound);
        break;
    case Theorem::hypergraph:
        clause("k >= 2", k, 2.0, family.k() >= 2);
        clause("eps0 > 0", params.eps0, 0.0, params.eps0 > 0.0);
        at_most("edge disjoint", static_cast<double>(st.max_multiplicity), 1.0);
        at_most("m bound", m, (1.0 - params.eps0) * n);
        at_most("codegree bound", static_cast<double>(st.max_codegree), sparse_bound);
        break;
    }
    return rep;
}

} // namespace rainbow

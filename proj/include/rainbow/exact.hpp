#pragma once

#include <chrono>
#include <cstdint>
#include <optional>

#include "rainbow/model.hpp"

namespace rainbow {

/// The node budget is the contractual limit; the wall-clock limit is advisory
/// (zero disables it) because it makes results machine-dependent.
struct SearchLimits {
    std::uint64_t node_budget = 100'000'000;
    std::chrono::milliseconds wall_clock{0};
};

enum class SearchStatus { found, none, timeout };

const char* status_name(SearchStatus s) noexcept;

struct FullSearchResult {
    SearchStatus status = SearchStatus::none;
    std::optional<RainbowMatching> witness;
    std::uint64_t nodes = 0;
};

/// Decides whether a full rainbow matching exists. Backtracking with a
/// fail-first colour order; "none" is only reported after full exhaustion.
FullSearchResult find_full(const MatchingFamily& family, const SearchLimits& limits = {});

struct MaxSearchResult {
    std::size_t size = 0;
    RainbowMatching witness;
    bool complete = true; // false: budget hit, size is only a lower bound
    std::uint64_t nodes = 0;
};

/// Branch and bound for the largest rainbow matching.
MaxSearchResult max_rainbow(const MatchingFamily& family, const SearchLimits& limits = {});

/// Counts full rainbow matchings by walking the whole Cartesian product of
/// colour classes. Deliberately naive: it is the cross-check for find_full.
/// Throws Error when the product exceeds `max_product`.
std::uint64_t enumerate_oracle(const MatchingFamily& family, std::uint64_t max_product = 10'000'000);

} // namespace rainbow

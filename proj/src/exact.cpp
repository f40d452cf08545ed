#include "rainbow/exact.hpp"

#include <limits>

namespace rainbow {

const char* status_name(SearchStatus s) noexcept {
    switch (s) {
    case SearchStatus::found: return "found";
    case SearchStatus::none: return "none";
    case SearchStatus::timeout: return "timeout";
    }
    return "?";
}

namespace {

struct BudgetExceeded {};

// Shared state for both searches: colour classes, the used-vertex set and node accounting.
class SearchState {
public:
    SearchState(const MatchingFamily& family, const SearchLimits& limits)
        : family_(family), limits_(limits), used_(family.num_vertices(), 0), start_(std::chrono::steady_clock::now()) {}

    void tick() {
        ++nodes_;
        if (nodes_ > limits_.node_budget) throw BudgetExceeded{};
        if (limits_.wall_clock.count() > 0 && (nodes_ & 0xfff) == 0 &&
            std::chrono::steady_clock::now() - start_ > limits_.wall_clock)
            throw BudgetExceeded{};
    }

    bool available(std::size_t colour, std::size_t e) const {
        for (Vertex v : family_.edge(colour, e))
            if (used_[v]) return false;
        return true;
    }

    std::size_t count_available(std::size_t colour) const {
        std::size_t count = 0;
        for (std::size_t e = 0; e < family_.size(colour); ++e) count += available(colour, e);
        return count;
    }

    void take(std::size_t colour, std::size_t e, bool on) {
        for (Vertex v : family_.edge(colour, e)) used_[v] = on;
    }

    Edge edge(std::size_t colour, std::size_t e) const {
        auto x = family_.edge(colour, e);
        return Edge(x.begin(), x.end());
    }

    const MatchingFamily& family() const { return family_; }
    std::uint64_t nodes() const { return nodes_; }

private:
    const MatchingFamily& family_;
    SearchLimits limits_;
    std::vector<std::uint8_t> used_;
    std::uint64_t nodes_ = 0;
    std::chrono::steady_clock::time_point start_;
};

class FullSearch {
public:
    explicit FullSearch(SearchState& st) : st_(st), pick_(st.family().num_matchings(), npos) {}

    bool run(std::size_t remaining) {
        st_.tick();
        if (remaining == 0) return true;
        // Fail-first: the open colour with the fewest available edges, ties by index.
        std::size_t best = npos, best_count = std::numeric_limits<std::size_t>::max();
        for (std::size_t c = 0; c < pick_.size(); ++c) {
            if (pick_[c] != npos) continue;
            const auto count = st_.count_available(c);
            if (count < best_count) {
                best = c;
                best_count = count;
                if (count == 0) return false;
            }
        }
        const auto& family = st_.family();
        for (std::size_t e = 0; e < family.size(best); ++e) {
            if (!st_.available(best, e)) continue;
            st_.take(best, e, true);
            pick_[best] = e;
            if (run(remaining - 1)) return true;
            pick_[best] = npos;
            st_.take(best, e, false);
        }
        return false;
    }

    RainbowMatching witness() const {
        RainbowMatching rm;
        for (std::size_t c = 0; c < pick_.size(); ++c) rm.picks.emplace(c, st_.edge(c, pick_[c]));
        return rm;
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    SearchState& st_;
    std::vector<std::size_t> pick_;
};

class MaxSearch {
public:
    explicit MaxSearch(SearchState& st)
        : st_(st), state_(st.family().num_matchings(), open), pick_(st.family().num_matchings(), 0) {}

    void run(std::size_t current) {
        st_.tick();
        if (current > best_size_) record(current);
        if (best_size_ == state_.size()) return;

        std::size_t alive = 0, branch = npos, branch_count = std::numeric_limits<std::size_t>::max();
        for (std::size_t c = 0; c < state_.size(); ++c) {
            if (state_[c] != open) continue;
            const auto count = st_.count_available(c);
            if (count == 0) continue;
            ++alive;
            if (count < branch_count) {
                branch = c;
                branch_count = count;
            }
        }
        if (current + alive <= best_size_ || alive == 0) return;

        const auto& family = st_.family();
        state_[branch] = taken;
        for (std::size_t e = 0; e < family.size(branch); ++e) {
            if (!st_.available(branch, e)) continue;
            st_.take(branch, e, true);
            pick_[branch] = e;
            run(current + 1);
            st_.take(branch, e, false);
            if (best_size_ == state_.size()) break;
        }
        state_[branch] = skipped;
        if (best_size_ < state_.size()) run(current);
        state_[branch] = open;
    }

    std::size_t best_size() const { return best_size_; }
    const RainbowMatching& best() const { return best_; }

private:
    enum : std::uint8_t { open, taken, skipped };
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    void record(std::size_t current) {
        best_size_ = current;
        best_.picks.clear();
        for (std::size_t c = 0; c < state_.size(); ++c)
            if (state_[c] == taken) best_.picks.emplace(c, st_.edge(c, pick_[c]));
    }

    SearchState& st_;
    std::vector<std::uint8_t> state_;
    std::vector<std::size_t> pick_;
    std::size_t best_size_ = 0;
    RainbowMatching best_;
};

} // namespace

FullSearchResult find_full(const MatchingFamily& family, const SearchLimits& limits) {
    SearchState st(family, limits);
    FullSearch search(st);
    FullSearchResult res;
    try {
        if (search.run(family.num_matchings())) {
            res.status = SearchStatus::found;
            res.witness = search.witness();
        } else {
            res.status = SearchStatus::none;
        }
    } catch (const BudgetExceeded&) {
        res.status = SearchStatus::timeout;
    }
    res.nodes = st.nodes();
    return res;
}

MaxSearchResult max_rainbow(const MatchingFamily& family, const SearchLimits& limits) {
    SearchState st(family, limits);
    MaxSearch search(st);
    MaxSearchResult res;
    try {
        search.run(0);
    } catch (const BudgetExceeded&) {
        res.complete = false;
    }
    res.size = search.best_size();
    res.witness = search.best();
    res.nodes = st.nodes();
    return res;
}

std::uint64_t enumerate_oracle(const MatchingFamily& family, std::uint64_t max_product) {
    const auto m = family.num_matchings();
    std::uint64_t product = 1;
    for (std::size_t i = 0; i < m; ++i) {
        const auto s = family.size(i);
        if (s == 0) return 0;
        if (product > max_product / s) throw Error("enumerate_oracle: selection space exceeds the product limit");
        product *= s;
    }

    std::vector<std::size_t> index(m, 0);
    std::vector<std::uint64_t> stamp(family.num_vertices(), 0);
    std::uint64_t count = 0;
    for (std::uint64_t sel = 1; sel <= product; ++sel) {
        bool disjoint = true;
        for (std::size_t i = 0; i < m && disjoint; ++i)
            for (Vertex v : family.edge(i, index[i])) {
                if (stamp[v] == sel) {
                    disjoint = false;
                    break;
                }
                stamp[v] = sel;
            }
        count += disjoint;
        // Odometer increment.
        for (std::size_t i = 0; i < m; ++i) {
            if (++index[i] < family.size(i)) break;
            index[i] = 0;
        }
    }
    return count;
}

} // namespace rainbow

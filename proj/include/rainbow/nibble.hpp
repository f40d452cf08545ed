#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rainbow/model.hpp"
#include "rainbow/random.hpp"
#include "rainbow/schedule.hpp"

namespace rainbow {

enum class RunStatus { success, restart_exhausted, greedy_failed, constraint_violation };

const char* status_name(RunStatus s) noexcept;

struct NibbleConfig {
    ScheduleParams schedule;
    std::uint64_t seed = 1;
    std::size_t max_restarts = 10;
    /// Theoretical mode only: stop with constraint_violation when the size or
    /// degree envelopes (r_i n +- a_i, eps gamma g_i n + b_i) are breached.
    bool strict = false;
    /// Adaptive slack: c_i = max(0, max_v Q(v) - eps gamma g_i/r_i) + eta.
    double slack_eta = 1e-6;
    /// Vertices sampled per iteration to track degrees into chunks beyond the next one.
    std::size_t degree_sample = 32;
    /// Permit colour classes that are not matchings (e.g. the double-star family).
    bool allow_improper = false;
};

/// Random order of the matchings cut into consecutive chunks of chunk_size;
/// the last chunk may be shorter.
struct ChunkPlan {
    std::vector<std::size_t> order;
    std::vector<std::size_t> chunk_of; // matching -> chunk
    std::size_t chunk_size = 1;
    std::size_t num_chunks = 0;

    std::span<const std::size_t> chunk(std::size_t j) const;
};

/// Fisher-Yates over the matchings using `rng`.
ChunkPlan permute_and_chunk(std::size_t m, std::size_t chunk_size, Rng& rng);

/// Observables after i iterations next to their predictions.
struct TrajectoryRecord {
    std::size_t i = 0;
    double x = 0.0;
    std::size_t surviving_matchings = 0;
    std::size_t surviving_vertices = 0;
    double min_size = 0.0;
    double mean_size = 0.0;
    double max_size = 0.0;
    double predicted_size = 0.0;      // r_i n
    std::size_t max_chunk_degree = 0; // exact for the next chunk, sampled beyond
    double predicted_degree = 0.0;    // eps gamma g_i n + b_i
    double f = 0.0;
    double c = 0.0;
    double a = 0.0;
    double b = 0.0;
    double max_q = 0.0;
    double zap_residual = 0.0; // max |Q + P(1-Q) - f| over surviving vertices
    std::size_t marked = 0;
    std::size_t killed = 0;
    std::size_t zapped = 0;
    std::size_t collision_vertices = 0;
    std::size_t phi = 0;
    std::size_t repaired = 0; // vertices deleted by collision repair
    bool a1_breach = false;
    bool a2_breach = false;
    double elapsed_seconds = 0.0;
};

struct FinalStageInfo {
    bool reached = false;
    std::size_t remaining = 0;
    std::size_t min_size = 0;
    bool guard_held = false;
    bool succeeded = false;
};

struct RunOutcome {
    RunStatus status = RunStatus::greedy_failed;
    RainbowMatching rainbow; // full on success, the partial M0 otherwise
    std::vector<TrajectoryRecord> trajectory;
    ScheduleParams schedule;
    std::uint64_t seed = 0;
    std::size_t restarts = 0;
    FinalStageInfo final_stage;
    double max_zap_residual = 0.0;
    std::string detail;
    double elapsed_seconds = 0.0;
};

/// Equality of everything except wall-clock fields.
bool deterministic_equal(const RunOutcome& a, const RunOutcome& b);

struct MarkResult {
    bool ok = true; // false: a chunk matching had no surviving edge
    std::size_t marked = 0;
    std::size_t killed = 0;
    std::size_t collision_vertices = 0;
    std::vector<std::size_t> phi; // matchings deferred to repair, ascending
};

struct ZapResult {
    bool restart = false; // some P(v) fell outside [0, 1]
    std::size_t zapped = 0;
    double max_residual = 0.0;
};

struct RepairResult {
    bool ok = true;
    std::size_t deleted = 0;
};

struct FinalResult {
    bool ok = true;
    std::size_t remaining = 0;
    std::size_t min_size = 0;
    bool guard_held = false;
};

/// Live state of one attempt: surviving vertices (tombstones), per-matching
/// surviving-edge lists with swap removal, the chunk plan and the partial
/// rainbow matching M0. The step methods act on the current chunk, which is
/// the number of completed iterations.
class NibbleEngine {
public:
    NibbleEngine(const MatchingFamily& family, const NibbleConfig& config);

    /// Resets all state and draws a fresh permutation for restart number `attempt`.
    void start_attempt(std::size_t attempt);

    const ChunkPlan& plan() const noexcept { return plan_; }
    std::size_t current_chunk() const noexcept { return chunk_; }
    bool at_final_chunk() const noexcept { return chunk_ + 1 >= plan_.num_chunks; }

    /// Q(v) for the current chunk, computed from the present surviving sets.
    double marking_probability(Vertex v) const;

    /// Step (i): one uniform surviving edge per chunk matching; collision-free
    /// picks join M0 and their vertices are killed.
    MarkResult step_mark_and_kill();
    /// Step (ii): zap each surviving vertex with P = (f - Q)/(1 - Q), Q as it
    /// was before step (i). Marked vertices that survived a collision are zappable.
    /// Throws std::logic_error if |Q + P(1 - Q) - f| exceeds 1e-12 anywhere.
    ZapResult step_zap(double f);
    /// Step (iii): deferred matchings in index order take the surviving edge
    /// with the smallest lowest vertex. Completes the iteration.
    RepairResult step_collision_repair();
    /// Greedy completion of the last chunk in index order.
    FinalResult final_greedy();

    bool alive(Vertex v) const { return alive_.at(v) != 0; }
    std::size_t alive_count() const noexcept { return alive_count_; }
    std::size_t live_size(std::size_t matching) const { return live_count_.at(matching); }
    std::vector<Edge> live_edges(std::size_t matching) const;
    const RainbowMatching& partial() const noexcept { return m0_; }
    /// Vertices marked by the last step_mark_and_kill, ascending.
    const std::vector<Vertex>& last_marked() const noexcept { return marked_; }
    /// Vertices deleted by the last step_zap, ascending.
    const std::vector<Vertex>& last_zapped() const noexcept { return zapped_; }

    /// One full run with restarts; the public entry point.
    RunOutcome run();

private:
    std::span<const Vertex> vertices_of(std::uint32_t e) const;
    void delete_vertex(Vertex v);
    void prepare_chunk(); // Q and next-chunk degrees for the current chunk
    std::size_t sampled_future_degree(Rng& rng) const;
    void add_to_m0(std::uint32_t e);
    std::uint32_t lowest_live_edge(std::size_t matching) const;
    TrajectoryRecord observe(std::size_t i, const std::vector<ScheduleState>& table, Rng& diag) const;

    const MatchingFamily& family_;
    NibbleConfig config_;
    int k_;
    Vertex nv_;

    // Static structure.
    std::vector<std::uint32_t> edge_base_;     // matching -> first global edge id
    std::vector<std::uint32_t> edge_matching_; // global edge -> matching
    std::vector<std::uint32_t> inc_offset_;    // CSR vertex -> incident edges
    std::vector<std::uint32_t> inc_edges_;
    std::vector<std::uint8_t> has_edges_;

    // Attempt state.
    ChunkPlan plan_;
    std::size_t chunk_ = 0;
    std::vector<std::uint8_t> alive_;
    std::size_t alive_count_ = 0;
    std::vector<std::uint32_t> live_;       // per-matching segments of surviving edge ids
    std::vector<std::uint32_t> live_pos_;   // edge -> index in live_, npos when dead
    std::vector<std::uint32_t> live_count_; // matching -> surviving edges
    RainbowMatching m0_;
    std::size_t attempt_ = 0;

    // Per-iteration scratch.
    std::vector<double> survive_prod_; // prod over chunk matchings of (1 - d_M(v)/|M|)
    std::vector<std::uint32_t> chunk_degree_;
    std::vector<Vertex> touched_;
    double max_q_ = 0.0;
    std::size_t max_next_degree_ = 0;
    bool chunk_ready_ = false;
    bool chunk_empty_ = false;
    std::vector<std::size_t> phi_;
    std::vector<Vertex> marked_;
    std::vector<Vertex> zapped_;
};

/// Convenience wrapper: validates preconditions and runs one engine.
/// Throws Error when the family is invalid or sizes are unequal.
RunOutcome run_nibble(const MatchingFamily& family, const NibbleConfig& config);

} // namespace rainbow

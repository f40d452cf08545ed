#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rainbow/generators.hpp"
#include "rainbow/model.hpp"
#include "rainbow/nibble.hpp"
#include "rainbow/schedule.hpp"

namespace rainbow {

/// How epsilon and the mode are chosen for one run. Exactly one of
/// chunk / epsilon / alpha is used, in that priority; adaptive mode with none
/// of them falls back to epsilon = 0.05.
struct ScheduleChoice {
    ScheduleMode mode = ScheduleMode::adaptive;
    std::optional<std::size_t> chunk; // epsilon * m
    std::optional<double> epsilon;
    std::optional<double> alpha;
    double c = 0.05;
    double delta = 0.0;
    std::optional<double> xi;
    double c0 = 4.0;
};

/// Schedule for a concrete family (n = common matching size, m, k and, in
/// adaptive mode, gamma from the measured max degree). Throws Error when the
/// family has unequal matching sizes or no admissible alpha exists.
ScheduleParams make_schedule(const MatchingFamily& family, const ScheduleChoice& choice);
/// Same from the shape alone; m may be zero only for an empty family.
ScheduleParams make_schedule(int k, std::size_t n, std::size_t m, std::size_t max_degree, const ScheduleChoice& choice);

enum class InstanceKind { file, random, latin, double_star, two_k4 };

const char* instance_name(InstanceKind k) noexcept;

struct InstanceSource {
    InstanceKind kind = InstanceKind::random;
    std::filesystem::path path;           // file
    LatinKind latin = LatinKind::cyclic;  // latin
    RandomFamilyOptions random;           // random
};

/// One point of the parameter grid. n, m and k are ignored for file and
/// two_k4 instances (they come from the family); m is ignored for latin.
struct GridPoint {
    std::size_t n = 0;
    std::size_t m = 0;
    int k = 2;
    ScheduleChoice schedule;
};

struct ExperimentSpec {
    InstanceSource instance;
    std::vector<GridPoint> grid; // expanded Cartesian product
    std::size_t trials = 1;
    std::uint64_t base_seed = 1; // trial t runs with seed base_seed + t
    std::size_t max_restarts = 10;
    bool strict = false;
    std::size_t degree_sample = 32;
    std::size_t threads = 1;
    std::filesystem::path output_dir = "experiment_out";
    std::string source_text; // the JSON the spec was parsed from
};

/// Parses the JSON experiment description:
///   { "instance": {"generator": "random" | "latin" | "double-star" | "two-k4", ...} | {"file": "x.rmf"},
///     "grid": {"n": [...], "m": [...] | "m_ratio": [...], "k": [...], "chunk" | "epsilon" | "alpha": [...],
///              "c": [...], "delta": [...], "mode": ["adaptive", "theoretical"]},
///     "trials": 50, "base_seed": 1, "max_restarts": 10, "strict": false, "threads": 1, "output": "dir" }
/// Throws Error on malformed input.
ExperimentSpec parse_experiment_spec(std::string_view json_text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// The family for one trial: random instances are regenerated per trial from
/// its seed, the others are fixed.
MatchingFamily build_instance(const InstanceSource& source, const GridPoint& point, std::uint64_t seed);

struct TrialResult {
    std::size_t cell = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    bool ran = false; // false: instance or schedule construction failed
    std::string error;
    RunOutcome outcome;
    bool verified = false; // success re-checked with verify_rainbow
};

struct DeviationRow {
    std::size_t i = 0;
    double predicted_size = 0.0; // r_i n
    double min_dev = 0.0;        // (observed - predicted) / predicted
    double mean_dev = 0.0;
    double max_dev = 0.0;
    double predicted_degree = 0.0; // eps gamma g_i n
    double degree_dev = 0.0;
    double a = 0.0;
    double b = 0.0;
    bool a1_breach = false; // theoretical mode only
    bool a2_breach = false;
};

std::vector<DeviationRow> trajectory_report(const std::vector<TrajectoryRecord>& records, const ScheduleParams& params);

/// Per-iteration averages over the trials of a cell that reached iteration i.
struct AggregateRow {
    std::size_t i = 0;
    std::size_t trials = 0;
    double x = 0.0;
    double predicted_size = 0.0;
    double mean_size = 0.0;
    double min_size = 0.0; // minimum over trials
    double max_size = 0.0; // maximum over trials
    double rel_dev = 0.0;  // |mean_size - predicted_size| / predicted_size
    double max_chunk_degree = 0.0;
    double predicted_degree = 0.0;
    double f = 0.0;
    double max_q = 0.0;
    double marked = 0.0;
    double killed = 0.0;
    double zapped = 0.0;
    double phi = 0.0;
    double repaired = 0.0;
    std::size_t a1_breaches = 0;
    std::size_t a2_breaches = 0;
};

struct CellResult {
    std::size_t index = 0;
    GridPoint point;
    std::size_t n = 0; // as realised by the instance
    std::size_t m = 0;
    int k = 2;
    double epsilon = 0.0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::size_t restarts = 0;
    std::size_t greedy_failed = 0;
    std::size_t restart_exhausted = 0;
    std::size_t constraint_violation = 0;
    std::size_t errors = 0;
    std::string first_error;
    std::size_t guard_held = 0;
    std::size_t guard_held_failed = 0;
    double mean_deviation = 0.0; // mean over i of AggregateRow::rel_dev
    double max_deviation = 0.0;  // max over i
    std::size_t a1_breaches = 0;
    std::size_t a2_breaches = 0;
    double wallclock = 0.0; // summed trial run time, excluded from CSV
    std::vector<AggregateRow> trajectory;
};

/// Folds trial results (any order) into a cell; trials are sorted by index first.
CellResult aggregate_cell(std::size_t index, const GridPoint& point, std::vector<TrialResult> trials);

struct ExperimentResult {
    std::vector<CellResult> cells;
    std::vector<TrialResult> trials; // sorted by (cell, trial)
    double wallclock = 0.0;
};

/// Runs every (cell, trial) pair. Work is split into fixed contiguous blocks
/// per thread, so results do not depend on the thread count.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::size_t threads = 0);

/// cells.csv, trials.csv, trajectories/cell_<i>.csv and run.json under `dir`.
void write_experiment(const ExperimentSpec& spec, const ExperimentResult& result, const std::filesystem::path& dir);

void write_cells_csv(std::ostream& out, const std::vector<CellResult>& cells);
void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records);
void write_schedule_csv(std::ostream& out, const ScheduleParams& params);

} // namespace rainbow

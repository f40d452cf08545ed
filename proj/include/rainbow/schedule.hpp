#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rainbow/model.hpp"

namespace rainbow {

/// Idealised surviving-matching fraction at time x: (1 - gamma x)^k.
double trajectory_r(double x, double gamma, int k);
/// Idealised chunk-degree fraction at time x: (1 - gamma x)^(k-1).
double trajectory_g(double x, double gamma, int k);

enum class ScheduleMode { adaptive, theoretical };

const char* mode_name(ScheduleMode m) noexcept;
std::optional<ScheduleMode> parse_mode(const std::string& s) noexcept;

struct ScheduleParams {
    int k = 2;
    std::size_t n = 0; // common matching size
    std::size_t m = 0; // number of matchings
    double gamma = 0.5;
    double epsilon = 1.0; // epsilon * m must be an integer
    double alpha = 0.0;
    double delta = 0.0;
    double c = 0.0;
    double xi = 0.0;
    double c0 = 4.0;
    ScheduleMode mode = ScheduleMode::adaptive;

    /// Matchings per chunk, epsilon * m.
    std::size_t chunk_size() const;
    /// tau: number of chunks, the last one possibly short.
    std::size_t num_chunks() const;
    /// epsilon * gamma * g_i / r_i, the part of f that does not depend on the error terms.
    double base_condemnation(std::size_t i) const;
};

/// Open interval of admissible exponents alpha for given (c, delta).
struct AlphaInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const noexcept { return !(lo < hi); }
};

AlphaInterval alpha_interval(double c, double delta);
/// Midpoint of the admissible interval, or nullopt when it is empty or c >= 1/3.
std::optional<double> choose_alpha(double c, double delta);
/// s/m with s = max(1, round(n^-alpha m)).
double choose_epsilon(std::size_t n, std::size_t m, double alpha);
/// xi(n) = 1/log n.
double default_xi(std::size_t n);

/// gamma = max(max_degree/n, m/n), clamped to (0, 1 - 1e-9).
double adaptive_gamma(std::size_t max_degree, std::size_t n, std::size_t m);
ScheduleParams adaptive_params(int k, std::size_t n, std::size_t m, std::size_t max_degree, double epsilon);
/// gamma = 1 - n^-c; epsilon from choose_epsilon with alpha (choose_alpha when not given).
/// Throws Error when no admissible alpha exists.
ScheduleParams theoretical_params(int k, std::size_t n, std::size_t m, double c, double delta,
                                  std::optional<double> alpha = std::nullopt, double c0 = 4.0,
                                  std::optional<double> xi = std::nullopt);
/// m = floor(gamma n^(1+delta)), the extremal family size used when no instance is given.
std::size_t theoretical_m(std::size_t n, double c, double delta);

struct ScheduleState {
    std::size_t i = 0;
    double x = 0.0;
    double r = 1.0;
    double g = 1.0;
    double f = 0.0;
    double a = 0.0; // matching-size error, in edges
    double b = 0.0; // chunk-degree error, in edge slots
    double c = 0.0; // condemnation slack
};

/// Error-term recurrences from a_0 = 0, b_0 = sqrt(eps gamma n) log n:
///   c_j     = eps gamma a_j g_j (1+2xi) / (r_j^2 n) + b_j (1+2xi) / (r_j n)
///   f_j     = eps gamma g_j / r_j + c_j
///   a_{j+1} = C0 (eps^2 g_j m / r_j + sqrt(eps m) log n) + 2 c_j r_j n + a_j (1 - 2 eps gamma g_j / r_j)
///   b_{j+1} = (1 - f_j) b_j + C0 (eps^2 g_j^2 / r_j^2 + sqrt(eps m) log n)
ScheduleState theoretical_error_terms(const ScheduleParams& p, std::size_t i);
/// States for i = 0 .. tau-1 (error terms are zero in adaptive mode).
std::vector<ScheduleState> schedule_table(const ScheduleParams& p);

struct ConstraintClause {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

struct ConstraintReport {
    std::vector<ConstraintClause> clauses;
    bool ok() const noexcept;
    std::vector<std::string> violated() const;
};

/// a_i < r_i n/2, b_i <= eps gamma g_i n, c_i <= eps gamma g_i/r_i, eps gamma g_i/r_i <= 1/2,
/// a_i <= xi r_i n, b_i <= xi eps g_i n.
ConstraintReport check_ab_constraints(const ScheduleParams& p, std::size_t i, double a, double b, double c);

/// Last-chunk greedy is safe when every remaining matching has at least
/// k * remaining edges (each pick removes at most k edges from any other matching).
bool final_stage_guard(int k, std::size_t remaining_m, std::size_t min_size);

} // namespace rainbow

#include "rainbow/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace rainbow {

double trajectory_r(double x, double gamma, int k) { return std::pow(1.0 - gamma * x, k); }

double trajectory_g(double x, double gamma, int k) { return std::pow(1.0 - gamma * x, k - 1); }

const char* mode_name(ScheduleMode m) noexcept { return m == ScheduleMode::adaptive ? "adaptive" : "theoretical"; }

std::optional<ScheduleMode> parse_mode(const std::string& s) noexcept {
    if (s == "adaptive") return ScheduleMode::adaptive;
    if (s == "theoretical") return ScheduleMode::theoretical;
    return std::nullopt;
}

std::size_t ScheduleParams::chunk_size() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(epsilon * static_cast<double>(m))));
}

std::size_t ScheduleParams::num_chunks() const {
    if (m == 0) return 0;
    const auto s = chunk_size();
    return (m + s - 1) / s;
}

double ScheduleParams::base_condemnation(std::size_t i) const {
    const double x = static_cast<double>(i) * epsilon;
    return epsilon * gamma * trajectory_g(x, gamma, k) / trajectory_r(x, gamma, k);
}

AlphaInterval alpha_interval(double c, double delta) {
    return {std::max(delta + 2.0 * c, 0.0), std::min((1.0 - delta - 4.0 * c) / 3.0, 1.0 / 3.0)};
}

std::optional<double> choose_alpha(double c, double delta) {
    if (c >= 1.0 / 3.0) return std::nullopt;
    const auto iv = alpha_interval(c, delta);
    if (iv.empty()) return std::nullopt;
    return 0.5 * (iv.lo + iv.hi);
}

double choose_epsilon(std::size_t n, std::size_t m, double alpha) {
    if (m == 0) throw Error("choose_epsilon needs m >= 1");
    const double target = std::pow(static_cast<double>(n), -alpha) * static_cast<double>(m);
    auto s = static_cast<std::size_t>(std::max<long long>(1, std::llround(target)));
    s = std::min(s, m);
    return static_cast<double>(s) / static_cast<double>(m);
}

double default_xi(std::size_t n) { return n > 1 ? 1.0 / std::log(static_cast<double>(n)) : 1.0; }

double adaptive_gamma(std::size_t max_degree, std::size_t n, std::size_t m) {
    if (n == 0) return 0.5;
    const double g = std::max(static_cast<double>(max_degree), static_cast<double>(m)) / static_cast<double>(n);
    return std::clamp(g, 1e-9, 1.0 - 1e-9);
}

ScheduleParams adaptive_params(int k, std::size_t n, std::size_t m, std::size_t max_degree, double epsilon) {
    ScheduleParams p;
    p.k = k;
    p.n = n;
    p.m = m;
    p.gamma = adaptive_gamma(max_degree, n, m);
    p.epsilon = epsilon;
    p.xi = default_xi(n);
    p.mode = ScheduleMode::adaptive;
    return p;
}

std::size_t theoretical_m(std::size_t n, double c, double delta) {
    const double nn = static_cast<double>(n);
    return static_cast<std::size_t>(std::floor((1.0 - std::pow(nn, -c)) * std::pow(nn, 1.0 + delta)));
}

ScheduleParams theoretical_params(int k, std::size_t n, std::size_t m, double c, double delta,
                                  std::optional<double> alpha, double c0, std::optional<double> xi) {
    if (!alpha) alpha = choose_alpha(c, delta);
    if (!alpha) throw Error("no admissible alpha for the given c and delta");
    ScheduleParams p;
    p.k = k;
    p.n = n;
    p.m = m;
    p.c = c;
    p.delta = delta;
    p.alpha = *alpha;
    p.gamma = 1.0 - std::pow(static_cast<double>(n), -c);
    p.epsilon = choose_epsilon(n, m, *alpha);
    p.c0 = c0;
    p.xi = xi.value_or(default_xi(n));
    p.mode = ScheduleMode::theoretical;
    return p;
}

namespace {

ScheduleState trajectory_state(const ScheduleParams& p, std::size_t i) {
    ScheduleState s;
    s.i = i;
    s.x = static_cast<double>(i) * p.epsilon;
    s.r = trajectory_r(s.x, p.gamma, p.k);
    s.g = trajectory_g(s.x, p.gamma, p.k);
    return s;
}

// Fills c and f of `s` from its a and b.
void close_state(const ScheduleParams& p, ScheduleState& s) {
    const double n = static_cast<double>(p.n);
    const double eg = p.epsilon * p.gamma;
    s.c = eg * s.a * s.g * (1.0 + 2.0 * p.xi) / (s.r * s.r * n) + s.b * (1.0 + 2.0 * p.xi) / (s.r * n);
    s.f = eg * s.g / s.r + s.c;
}

// One step of the coupled (a, b, c) recurrences.
ScheduleState advance(const ScheduleParams& p, const ScheduleState& s) {
    const double n = static_cast<double>(p.n);
    const double m = static_cast<double>(p.m);
    const double eps = p.epsilon;
    const double eg = eps * p.gamma;
    const double noise = std::sqrt(eps * m) * std::log(n);
    ScheduleState next = trajectory_state(p, s.i + 1);
    next.a = p.c0 * (eps * eps * s.g * m / s.r + noise) + 2.0 * s.c * s.r * n + s.a * (1.0 - 2.0 * eg * s.g / s.r);
    next.b = (1.0 - s.f) * s.b + p.c0 * (eps * eps * s.g * s.g / (s.r * s.r) + noise);
    close_state(p, next);
    return next;
}

ScheduleState initial_state(const ScheduleParams& p) {
    auto s = trajectory_state(p, 0);
    s.a = 0.0;
    s.b = std::sqrt(p.epsilon * p.gamma * static_cast<double>(p.n)) * std::log(static_cast<double>(p.n));
    close_state(p, s);
    return s;
}

} // namespace

ScheduleState theoretical_error_terms(const ScheduleParams& p, std::size_t i) {
    auto s = initial_state(p);
    while (s.i < i) s = advance(p, s);
    return s;
}

std::vector<ScheduleState> schedule_table(const ScheduleParams& p) {
    std::vector<ScheduleState> rows;
    const auto tau = p.num_chunks();
    rows.reserve(tau);
    for (std::size_t i = 0; i < tau; ++i) {
        if (p.mode == ScheduleMode::theoretical) {
            rows.push_back(i == 0 ? initial_state(p) : advance(p, rows.back()));
        } else {
            auto s = trajectory_state(p, i);
            s.f = p.base_condemnation(i);
            rows.push_back(s);
        }
    }
    return rows;
}

bool ConstraintReport::ok() const noexcept {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.ok; });
}

std::vector<std::string> ConstraintReport::violated() const {
    std::vector<std::string> out;
    for (const auto& c : clauses)
        if (!c.ok) out.push_back(c.name);
    return out;
}

ConstraintReport check_ab_constraints(const ScheduleParams& p, std::size_t i, double a, double b, double c) {
    const double n = static_cast<double>(p.n);
    const double x = static_cast<double>(i) * p.epsilon;
    const double r = trajectory_r(x, p.gamma, p.k);
    const double g = trajectory_g(x, p.gamma, p.k);
    const double base = p.epsilon * p.gamma * g / r;
    ConstraintReport rep;
    rep.clauses = {
        {"a_i < r_i n/2", a, r * n / 2.0, a < r * n / 2.0},
        {"b_i <= eps gamma g_i n", b, p.epsilon * p.gamma * g * n, b <= p.epsilon * p.gamma * g * n},
        {"c_i <= eps gamma g_i/r_i", c, base, c <= base},
        {"eps gamma g_i/r_i <= 1/2", base, 0.5, base <= 0.5},
        {"a_i <= xi r_i n", a, p.xi * r * n, a <= p.xi * r * n},
        {"b_i <= xi eps g_i n", b, p.xi * p.epsilon * g * n, b <= p.xi * p.epsilon * g * n},
    };
    return rep;
}

bool final_stage_guard(int k, std::size_t remaining_m, std::size_t min_size) {
    return static_cast<std::size_t>(k) * remaining_m <= min_size;
}

} // namespace rainbow

#include "rainbow/nibble.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace rainbow {

namespace {

constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

} // namespace

const char* status_name(RunStatus s) noexcept {
    switch (s) {
    case RunStatus::success: return "success";
    case RunStatus::restart_exhausted: return "restart_exhausted";
    case RunStatus::greedy_failed: return "greedy_failed";
    case RunStatus::constraint_violation: return "constraint_violation";
    }
    return "?";
}

std::span<const std::size_t> ChunkPlan::chunk(std::size_t j) const {
    const auto first = std::min(order.size(), j * chunk_size);
    const auto last = std::min(order.size(), first + chunk_size);
    return std::span<const std::size_t>(order).subspan(first, last - first);
}

ChunkPlan permute_and_chunk(std::size_t m, std::size_t chunk_size, Rng& rng) {
    if (chunk_size == 0) throw Error("chunk size must be positive");
    ChunkPlan plan;
    plan.chunk_size = chunk_size;
    plan.order.resize(m);
    std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
    rng.shuffle(plan.order.begin(), plan.order.end());
    plan.num_chunks = (m + chunk_size - 1) / chunk_size;
    plan.chunk_of.resize(m);
    for (std::size_t p = 0; p < m; ++p) plan.chunk_of[plan.order[p]] = p / chunk_size;
    return plan;
}

namespace {

auto record_key(const TrajectoryRecord& r) {
    return std::tie(r.i, r.x, r.surviving_matchings, r.surviving_vertices, r.min_size, r.mean_size, r.max_size,
                    r.predicted_size, r.max_chunk_degree, r.predicted_degree, r.f, r.c, r.a, r.b, r.max_q,
                    r.zap_residual, r.marked, r.killed, r.zapped, r.collision_vertices, r.phi, r.repaired,
                    r.a1_breach, r.a2_breach);
}

} // namespace

bool deterministic_equal(const RunOutcome& a, const RunOutcome& b) {
    if (std::tie(a.status, a.rainbow, a.seed, a.restarts, a.max_zap_residual, a.detail) !=
        std::tie(b.status, b.rainbow, b.seed, b.restarts, b.max_zap_residual, b.detail))
        return false;
    const auto& fa = a.final_stage;
    const auto& fb = b.final_stage;
    if (std::tie(fa.reached, fa.remaining, fa.min_size, fa.guard_held, fa.succeeded) !=
        std::tie(fb.reached, fb.remaining, fb.min_size, fb.guard_held, fb.succeeded))
        return false;
    if (a.trajectory.size() != b.trajectory.size()) return false;
    for (std::size_t i = 0; i < a.trajectory.size(); ++i)
        if (record_key(a.trajectory[i]) != record_key(b.trajectory[i])) return false;
    return true;
}

NibbleEngine::NibbleEngine(const MatchingFamily& family, const NibbleConfig& config)
    : family_(family), config_(config), k_(family.k()), nv_(family.num_vertices()) {
    const auto m = family.num_matchings();
    if (config_.schedule.m != m) throw Error("schedule m does not match the family");
    if (family.num_edges() >= npos) throw Error("family too large for 32-bit edge ids");

    edge_base_.resize(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i) edge_base_[i + 1] = edge_base_[i] + static_cast<std::uint32_t>(family.size(i));
    const auto num_edges = edge_base_[m];
    edge_matching_.resize(num_edges);
    for (std::size_t i = 0; i < m; ++i)
        std::fill(edge_matching_.begin() + edge_base_[i], edge_matching_.begin() + edge_base_[i + 1],
                  static_cast<std::uint32_t>(i));

    inc_offset_.assign(nv_ + 1, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (Vertex v : family.slots(i)) ++inc_offset_.at(v + 1);
    std::partial_sum(inc_offset_.begin(), inc_offset_.end(), inc_offset_.begin());
    inc_edges_.resize(inc_offset_.back());
    std::vector<std::uint32_t> fill(inc_offset_.begin(), inc_offset_.end() - 1);
    for (std::uint32_t e = 0; e < num_edges; ++e)
        for (Vertex v : vertices_of(e)) inc_edges_[fill[v]++] = e;
    has_edges_.resize(nv_);
    for (Vertex v = 0; v < nv_; ++v) has_edges_[v] = inc_offset_[v + 1] > inc_offset_[v];

    survive_prod_.assign(nv_, 1.0);
    chunk_degree_.assign(nv_, 0);
}

std::span<const Vertex> NibbleEngine::vertices_of(std::uint32_t e) const {
    const auto matching = edge_matching_[e];
    return family_.slots(matching).subspan(static_cast<std::size_t>(e - edge_base_[matching]) * k_, k_);
}

void NibbleEngine::start_attempt(std::size_t attempt) {
    attempt_ = attempt;
    auto rng = Rng::derive(config_.seed, {tag(Stream::permutation), attempt});
    plan_ = permute_and_chunk(family_.num_matchings(), config_.schedule.chunk_size(), rng);
    chunk_ = 0;

    alive_.assign(has_edges_.begin(), has_edges_.end());
    alive_count_ = static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), 1));
    live_.resize(edge_matching_.size());
    std::iota(live_.begin(), live_.end(), 0u);
    live_pos_ = live_;
    live_count_.resize(family_.num_matchings());
    for (std::size_t i = 0; i < live_count_.size(); ++i) live_count_[i] = edge_base_[i + 1] - edge_base_[i];
    m0_.picks.clear();
    marked_.clear();
    zapped_.clear();

    for (Vertex v : touched_) {
        survive_prod_[v] = 1.0;
        chunk_degree_[v] = 0;
    }
    touched_.clear();
    chunk_ready_ = false;
    chunk_empty_ = false;
    phi_.clear();
}

void NibbleEngine::delete_vertex(Vertex v) {
    if (!alive_[v]) return;
    alive_[v] = 0;
    --alive_count_;
    for (auto p = inc_offset_[v]; p < inc_offset_[v + 1]; ++p) {
        const auto e = inc_edges_[p];
        const auto pos = live_pos_[e];
        if (pos == npos) continue;
        const auto matching = edge_matching_[e];
        const auto last = edge_base_[matching] + --live_count_[matching];
        const auto moved = live_[last];
        live_[pos] = moved;
        live_pos_[moved] = pos;
        live_[last] = e;
        live_pos_[e] = npos;
    }
}

std::vector<Edge> NibbleEngine::live_edges(std::size_t matching) const {
    std::vector<Edge> out;
    const auto base = edge_base_.at(matching);
    for (std::uint32_t p = base; p < base + live_count_[matching]; ++p) {
        auto x = vertices_of(live_[p]);
        out.emplace_back(x.begin(), x.end());
    }
    return out;
}

void NibbleEngine::prepare_chunk() {
    if (chunk_ready_) return;
    chunk_empty_ = false;
    max_q_ = 0.0;
    max_next_degree_ = 0;
    // Per matching, d_M(v) is counted first so improper classes (d > 1) are handled exactly.
    std::vector<Vertex> local;
    for (std::size_t matching : plan_.chunk(chunk_)) {
        const auto size = live_count_[matching];
        if (size == 0) {
            chunk_empty_ = true;
            continue;
        }
        local.clear();
        const auto base = edge_base_[matching];
        for (auto p = base; p < base + size; ++p)
            for (Vertex v : vertices_of(live_[p])) local.push_back(v);
        std::sort(local.begin(), local.end());
        for (std::size_t a = 0; a < local.size();) {
            std::size_t b = a;
            while (b < local.size() && local[b] == local[a]) ++b;
            const Vertex v = local[a];
            const auto d = static_cast<std::uint32_t>(b - a);
            if (chunk_degree_[v] == 0) touched_.push_back(v);
            chunk_degree_[v] += d;
            survive_prod_[v] *= 1.0 - static_cast<double>(d) / static_cast<double>(size);
            a = b;
        }
    }
    for (Vertex v : touched_) {
        max_q_ = std::max(max_q_, 1.0 - survive_prod_[v]);
        max_next_degree_ = std::max<std::size_t>(max_next_degree_, chunk_degree_[v]);
    }
    chunk_ready_ = true;
}

double NibbleEngine::marking_probability(Vertex v) const {
    if (!alive_.at(v)) return 0.0;
    std::map<std::size_t, std::size_t> hits;
    for (auto p = inc_offset_[v]; p < inc_offset_[v + 1]; ++p) {
        const auto e = inc_edges_[p];
        const auto matching = edge_matching_[e];
        if (live_pos_[e] != npos && plan_.chunk_of[matching] == chunk_) ++hits[matching];
    }
    double survive = 1.0;
    for (auto [matching, d] : hits)
        survive *= 1.0 - static_cast<double>(d) / static_cast<double>(live_count_[matching]);
    return 1.0 - survive;
}

void NibbleEngine::add_to_m0(std::uint32_t e) {
    auto x = vertices_of(e);
    m0_.picks.emplace(edge_matching_[e], Edge(x.begin(), x.end()));
}

std::uint32_t NibbleEngine::lowest_live_edge(std::size_t matching) const {
    const auto base = edge_base_[matching];
    std::uint32_t best = npos;
    for (auto p = base; p < base + live_count_[matching]; ++p) {
        const auto e = live_[p];
        if (best == npos) {
            best = e;
            continue;
        }
        auto x = vertices_of(e);
        auto y = vertices_of(best);
        if (std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end())) best = e;
    }
    return best;
}

MarkResult NibbleEngine::step_mark_and_kill() {
    prepare_chunk();
    MarkResult res;
    if (chunk_empty_) {
        res.ok = false;
        return res;
    }
    auto rng = Rng::derive(config_.seed, {tag(Stream::mark), attempt_, chunk_});
    const auto chunk = plan_.chunk(chunk_);
    std::vector<std::uint32_t> chosen;
    chosen.reserve(chunk.size());
    for (std::size_t matching : chunk) {
        const auto size = live_count_[matching];
        chosen.push_back(live_[edge_base_[matching] + static_cast<std::uint32_t>(rng.below(size))]);
    }

    std::map<Vertex, std::uint32_t> hit;
    for (auto e : chosen)
        for (Vertex v : vertices_of(e)) ++hit[v];
    res.marked = hit.size();
    marked_.clear();
    for (const auto& [v, count] : hit) marked_.push_back(v);
    for (const auto& [v, count] : hit) res.collision_vertices += count >= 2;

    std::vector<Vertex> kill;
    for (auto e : chosen) {
        auto x = vertices_of(e);
        const bool collides = std::any_of(x.begin(), x.end(), [&](Vertex v) { return hit[v] >= 2; });
        if (collides) {
            res.phi.push_back(edge_matching_[e]);
        } else {
            add_to_m0(e);
            kill.insert(kill.end(), x.begin(), x.end());
        }
    }
    for (Vertex v : kill) delete_vertex(v);
    res.killed = kill.size();
    std::sort(res.phi.begin(), res.phi.end());
    phi_ = res.phi;
    return res;
}

ZapResult NibbleEngine::step_zap(double f) {
    prepare_chunk();
    zapped_.clear();
    ZapResult res;
    // P(v) = (f - Q)/(1 - Q); Q = 1 forces f = 1 (any P then satisfies the identity; use 0).
    auto zap_probability = [&](Vertex v, double& residual) -> double {
        const double q = 1.0 - survive_prod_[v];
        double p;
        if (survive_prod_[v] <= 0.0) {
            p = f >= 1.0 ? 0.0 : -1.0;
        } else {
            p = (f - q) / (1.0 - q);
        }
        residual = std::abs(q + p * (1.0 - q) - f);
        return p;
    };

    for (Vertex v = 0; v < nv_; ++v) {
        if (!alive_[v]) continue;
        double residual;
        const double p = zap_probability(v, residual);
        if (p < 0.0 || p > 1.0) {
            res.restart = true;
            return res;
        }
        res.max_residual = std::max(res.max_residual, residual);
    }
    if (res.max_residual > 1e-12) throw std::logic_error("zap equation residual above 1e-12");

    auto rng = Rng::derive(config_.seed, {tag(Stream::zap), attempt_, chunk_});
    std::vector<Vertex> zap;
    for (Vertex v = 0; v < nv_; ++v) {
        if (!alive_[v]) continue;
        double residual;
        const double p = zap_probability(v, residual);
        if (rng.uniform() < p) zap.push_back(v);
    }
    for (Vertex v : zap) delete_vertex(v);
    res.zapped = zap.size();
    zapped_ = std::move(zap);
    return res;
}

RepairResult NibbleEngine::step_collision_repair() {
    RepairResult res;
    for (std::size_t matching : phi_) {
        const auto e = lowest_live_edge(matching);
        if (e == npos) {
            res.ok = false;
            break;
        }
        add_to_m0(e);
        for (Vertex v : vertices_of(e)) {
            delete_vertex(v);
            ++res.deleted;
        }
    }
    phi_.clear();
    for (Vertex v : touched_) {
        survive_prod_[v] = 1.0;
        chunk_degree_[v] = 0;
    }
    touched_.clear();
    chunk_ready_ = false;
    ++chunk_;
    return res;
}

FinalResult NibbleEngine::final_greedy() {
    FinalResult res;
    if (chunk_ >= plan_.num_chunks) return res;
    const auto span = plan_.chunk(chunk_);
    std::vector<std::size_t> last(span.begin(), span.end());
    std::sort(last.begin(), last.end());
    res.remaining = last.size();
    res.min_size = std::numeric_limits<std::size_t>::max();
    for (auto matching : last) res.min_size = std::min<std::size_t>(res.min_size, live_count_[matching]);
    if (last.empty()) res.min_size = 0;
    res.guard_held = final_stage_guard(k_, res.remaining, res.min_size);
    for (auto matching : last) {
        const auto e = lowest_live_edge(matching);
        if (e == npos) {
            res.ok = false;
            break;
        }
        add_to_m0(e);
        for (Vertex v : vertices_of(e)) delete_vertex(v);
    }
    for (Vertex v : touched_) {
        survive_prod_[v] = 1.0;
        chunk_degree_[v] = 0;
    }
    touched_.clear();
    chunk_ready_ = false;
    ++chunk_;
    return res;
}

std::size_t NibbleEngine::sampled_future_degree(Rng& rng) const {
    if (config_.degree_sample == 0 || chunk_ + 1 >= plan_.num_chunks) return 0;
    std::vector<Vertex> alive;
    alive.reserve(alive_count_);
    for (Vertex v = 0; v < nv_; ++v)
        if (alive_[v]) alive.push_back(v);
    if (alive.empty()) return 0;
    std::vector<std::uint32_t> per_chunk(plan_.num_chunks, 0);
    std::vector<std::size_t> seen;
    std::size_t best = 0;
    for (std::size_t s = 0; s < config_.degree_sample; ++s) {
        const Vertex v = alive[rng.below(alive.size())];
        for (auto p = inc_offset_[v]; p < inc_offset_[v + 1]; ++p) {
            const auto e = inc_edges_[p];
            if (live_pos_[e] == npos) continue;
            const auto j = plan_.chunk_of[edge_matching_[e]];
            if (j <= chunk_) continue;
            if (per_chunk[j]++ == 0) seen.push_back(j);
        }
        for (auto j : seen) {
            best = std::max<std::size_t>(best, per_chunk[j]);
            per_chunk[j] = 0;
        }
        seen.clear();
    }
    return best;
}

TrajectoryRecord NibbleEngine::observe(std::size_t i, const std::vector<ScheduleState>& table, Rng& diag) const {
    const auto& p = config_.schedule;
    const auto& st = table.at(i);
    TrajectoryRecord rec;
    rec.i = i;
    rec.x = st.x;
    rec.a = st.a;
    rec.b = st.b;
    rec.surviving_vertices = alive_count_;

    double sum = 0.0;
    rec.min_size = std::numeric_limits<double>::infinity();
    for (std::size_t j = i; j < plan_.num_chunks; ++j)
        for (auto matching : plan_.chunk(j)) {
            const double s = live_count_[matching];
            sum += s;
            rec.min_size = std::min(rec.min_size, s);
            rec.max_size = std::max(rec.max_size, s);
            ++rec.surviving_matchings;
        }
    if (rec.surviving_matchings == 0) rec.min_size = 0.0;
    rec.mean_size = rec.surviving_matchings ? sum / static_cast<double>(rec.surviving_matchings) : 0.0;

    const double n = static_cast<double>(p.n);
    rec.predicted_size = st.r * n;
    rec.predicted_degree = p.epsilon * p.gamma * st.g * n + st.b;
    rec.max_chunk_degree = std::max(max_next_degree_, sampled_future_degree(diag));
    if (p.mode == ScheduleMode::theoretical) {
        rec.a1_breach = rec.min_size < rec.predicted_size - st.a || rec.max_size > rec.predicted_size + st.a;
        rec.a2_breach = static_cast<double>(rec.max_chunk_degree) > rec.predicted_degree;
    }
    return rec;
}

RunOutcome NibbleEngine::run() {
    const auto t_run = Clock::now();
    const auto& p = config_.schedule;
    const auto table = schedule_table(p);
    RunOutcome out;
    out.schedule = p;
    out.seed = config_.seed;

    auto finish = [&](RunStatus status, std::string detail) {
        out.status = status;
        out.detail = std::move(detail);
        out.rainbow = m0_;
        out.elapsed_seconds = seconds_since(t_run);
        return out;
    };

    for (std::size_t attempt = 0; attempt <= config_.max_restarts; ++attempt) {
        out.restarts = attempt;
        out.trajectory.clear();
        out.final_stage = {};
        out.max_zap_residual = 0.0;
        start_attempt(attempt);
        auto diag = Rng::derive(config_.seed, {tag(Stream::diagnostics), attempt});
        bool restart = false;

        while (chunk_ < plan_.num_chunks && !at_final_chunk()) {
            const auto t_iter = Clock::now();
            const auto i = chunk_;
            prepare_chunk();
            auto rec = observe(i, table, diag);
            if (chunk_empty_) {
                out.trajectory.push_back(rec);
                return finish(RunStatus::greedy_failed, "a matching of chunk " + std::to_string(i) + " ran empty");
            }
            if (config_.strict && p.mode == ScheduleMode::theoretical && (rec.a1_breach || rec.a2_breach)) {
                out.trajectory.push_back(rec);
                return finish(RunStatus::constraint_violation,
                              std::string(rec.a1_breach ? "size" : "degree") + " envelope breached at iteration " +
                                  std::to_string(i));
            }

            rec.max_q = max_q_;
            if (p.mode == ScheduleMode::adaptive) {
                const double base = table[i].f;
                rec.c = std::max(0.0, max_q_ - base) + config_.slack_eta;
                rec.f = std::min(1.0, base + rec.c);
            } else {
                rec.c = table[i].c;
                rec.f = table[i].f;
            }

            const auto alive_before = alive_count_;
            const auto mark = step_mark_and_kill();
            const auto zap = step_zap(rec.f);
            if (zap.restart) {
                restart = true;
                break;
            }
            const auto repair = step_collision_repair();
            rec.marked = mark.marked;
            rec.killed = mark.killed;
            rec.collision_vertices = mark.collision_vertices;
            rec.phi = mark.phi.size();
            rec.zapped = zap.zapped;
            rec.zap_residual = zap.max_residual;
            rec.repaired = repair.deleted;
            rec.elapsed_seconds = seconds_since(t_iter);
            out.max_zap_residual = std::max(out.max_zap_residual, zap.max_residual);
            out.trajectory.push_back(rec);
            if (alive_before - alive_count_ != mark.killed + zap.zapped + repair.deleted)
                throw std::logic_error("vertex conservation violated");
            if (!repair.ok)
                return finish(RunStatus::greedy_failed,
                              "collision repair found an empty matching in chunk " + std::to_string(i));
        }
        if (restart) continue;

        if (plan_.num_chunks > 0) {
            prepare_chunk();
            out.trajectory.push_back(observe(chunk_, table, diag));
        }
        const auto fin = final_greedy();
        out.final_stage = {true, fin.remaining, fin.min_size, fin.guard_held, fin.ok};
        if (fin.guard_held && !fin.ok) throw std::logic_error("final-stage guard held but greedy completion failed");
        if (!fin.ok) return finish(RunStatus::greedy_failed, "greedy completion of the last chunk failed");
        if (auto why = verify_rainbow(family_, m0_, true); !why.empty())
            throw std::logic_error("nibble produced an invalid rainbow matching: " + why);
        return finish(RunStatus::success, {});
    }
    out.restarts = config_.max_restarts;
    return finish(RunStatus::restart_exhausted, "zap probability outside [0,1] in every attempt");
}

RunOutcome run_nibble(const MatchingFamily& family, const NibbleConfig& config) {
    if (auto v = validate(family, {.require_matchings = !config.allow_improper}); !v.empty())
        throw Error("invalid family: " + v.front());
    const auto m = family.num_matchings();
    for (std::size_t i = 1; i < m; ++i)
        if (family.size(i) != family.size(0)) throw Error("the nibble algorithm needs matchings of equal size");
    const auto& p = config.schedule;
    if (p.m != m || p.n != (m ? family.size(0) : p.n) || p.k != family.k())
        throw Error("schedule parameters (k, n, m) do not match the family");
    if (p.mode == ScheduleMode::theoretical) {
        const auto degree = vertex_degrees(family);
        const auto max_degree = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
        if (static_cast<double>(max_degree) > p.gamma * static_cast<double>(p.n))
            throw Error("theoretical mode needs max degree <= gamma n");
    }
    NibbleEngine engine(family, config);
    return engine.run();
}

} // namespace rainbow

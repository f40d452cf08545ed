#include "rainbow/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rainbow/rmf.hpp"

namespace rainbow {

using nlohmann::json;

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::size_t round_chunk(double epsilon, std::size_t m) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(epsilon * static_cast<double>(m))));
}

} // namespace

ScheduleParams make_schedule(const MatchingFamily& family, const ScheduleChoice& choice) {
    if (auto v = validate(family, {.require_matchings = false}); !v.empty()) throw Error("invalid family: " + v.front());
    const auto m = family.num_matchings();
    for (std::size_t i = 1; i < m; ++i)
        if (family.size(i) != family.size(0)) throw Error("matchings must all have the same size");
    const std::size_t n = m ? family.size(0) : 0;
    const auto degree = vertex_degrees(family);
    const std::size_t max_degree = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
    return make_schedule(family.k(), n, m, max_degree, choice);
}

ScheduleParams make_schedule(int k, std::size_t n, std::size_t m, std::size_t max_degree, const ScheduleChoice& choice) {
    std::optional<double> eps;
    if (m == 0) {
        eps = 1.0;
    } else if (choice.chunk) {
        if (*choice.chunk == 0) throw Error("chunk must be positive");
        eps = static_cast<double>(std::min(*choice.chunk, m)) / static_cast<double>(m);
    } else if (choice.epsilon) {
        if (!(*choice.epsilon > 0.0 && *choice.epsilon <= 1.0)) throw Error("epsilon must lie in (0, 1]");
        eps = static_cast<double>(std::min(round_chunk(*choice.epsilon, m), m)) / static_cast<double>(m);
    }

    ScheduleParams p;
    if (choice.mode == ScheduleMode::theoretical) {
        if (n < 2) throw Error("theoretical mode needs n >= 2");
        p = theoretical_params(k, n, std::max<std::size_t>(m, 1), choice.c, choice.delta, choice.alpha, choice.c0,
                               choice.xi);
        p.m = m;
        if (eps) p.epsilon = *eps;
    } else {
        if (!eps) eps = choice.alpha && m > 0 ? choose_epsilon(n, m, *choice.alpha)
                                              : static_cast<double>(round_chunk(0.05, m)) / static_cast<double>(m);
        p = adaptive_params(k, n, m, max_degree, *eps);
        if (choice.alpha) p.alpha = *choice.alpha;
        p.c = choice.c;
        p.delta = choice.delta;
        p.c0 = choice.c0;
        if (choice.xi) p.xi = *choice.xi;
    }
    return p;
}

const char* instance_name(InstanceKind k) noexcept {
    switch (k) {
    case InstanceKind::file: return "file";
    case InstanceKind::random: return "random";
    case InstanceKind::latin: return "latin";
    case InstanceKind::double_star: return "double-star";
    case InstanceKind::two_k4: return "two-k4";
    }
    return "?";
}

namespace {

template <class T>
std::vector<T> list_of(const json& grid, const char* key) {
    std::vector<T> out;
    if (!grid.contains(key)) return out;
    const auto& v = grid.at(key);
    if (v.is_array()) {
        for (const auto& x : v) out.push_back(x.get<T>());
    } else {
        out.push_back(v.get<T>());
    }
    return out;
}

template <class T>
std::vector<T> or_default(std::vector<T> v, T fallback) {
    if (v.empty()) v.push_back(fallback);
    return v;
}

InstanceSource parse_instance(const json& j) {
    InstanceSource src;
    if (j.contains("file")) {
        src.kind = InstanceKind::file;
        src.path = j.at("file").get<std::string>();
        return src;
    }
    const auto gen = j.value("generator", std::string("random"));
    if (gen == "random") {
        src.kind = InstanceKind::random;
        if (j.contains("max_degree")) src.random.max_degree_cap = j.at("max_degree").get<std::size_t>();
        if (j.contains("max_codegree")) src.random.max_codegree_cap = j.at("max_codegree").get<std::size_t>();
        src.random.universe_ratio = j.value("universe_ratio", src.random.universe_ratio);
    } else if (gen == "latin") {
        src.kind = InstanceKind::latin;
        const auto kind = j.value("kind", std::string("cyclic"));
        if (kind == "cyclic") src.latin = LatinKind::cyclic;
        else if (kind == "random") src.latin = LatinKind::random;
        else throw Error("unknown latin kind '" + kind + "'");
    } else if (gen == "double-star") {
        src.kind = InstanceKind::double_star;
    } else if (gen == "two-k4") {
        src.kind = InstanceKind::two_k4;
    } else {
        throw Error("unknown generator '" + gen + "'");
    }
    return src;
}

} // namespace

ExperimentSpec parse_experiment_spec(std::string_view json_text) {
    ExperimentSpec spec;
    spec.source_text = std::string(json_text);
    try {
        const auto j = json::parse(json_text);
        if (!j.is_object()) throw Error("experiment spec must be a JSON object");
        spec.instance = parse_instance(j.value("instance", json::object()));
        spec.trials = j.value("trials", std::size_t{1});
        spec.base_seed = j.value("base_seed", std::uint64_t{1});
        spec.max_restarts = j.value("max_restarts", std::size_t{10});
        spec.strict = j.value("strict", false);
        spec.degree_sample = j.value("degree_sample", std::size_t{32});
        spec.threads = j.value("threads", std::size_t{1});
        spec.output_dir = j.value("output", std::string("experiment_out"));
        if (spec.trials < 1) throw Error("trials must be at least 1");

        const auto grid = j.value("grid", json::object());
        const auto ns = or_default(list_of<std::size_t>(grid, "n"), std::size_t{0});
        const auto ms = list_of<std::size_t>(grid, "m");
        const auto ratios = list_of<double>(grid, "m_ratio");
        if (!ms.empty() && !ratios.empty()) throw Error("give either m or m_ratio, not both");
        const auto ks = or_default(list_of<int>(grid, "k"), 2);
        const auto cs = or_default(list_of<double>(grid, "c"), 0.05);
        const auto deltas = or_default(list_of<double>(grid, "delta"), 0.0);
        std::vector<ScheduleMode> modes;
        for (const auto& s : or_default(list_of<std::string>(grid, "mode"), std::string("adaptive"))) {
            auto mode = parse_mode(s);
            if (!mode) throw Error("unknown mode '" + s + "'");
            modes.push_back(*mode);
        }
        const auto chunks = list_of<std::size_t>(grid, "chunk");
        const auto epsilons = list_of<double>(grid, "epsilon");
        const auto alphas = list_of<double>(grid, "alpha");
        if (!chunks.empty() + !epsilons.empty() + !alphas.empty() > 1)
            throw Error("give only one of chunk, epsilon, alpha");
        std::vector<ScheduleChoice> eps_choices;
        for (auto v : chunks) eps_choices.emplace_back().chunk = v;
        for (auto v : epsilons) eps_choices.emplace_back().epsilon = v;
        for (auto v : alphas) eps_choices.emplace_back().alpha = v;
        if (eps_choices.empty()) eps_choices.emplace_back();
        const std::optional<double> xi = grid.contains("xi") ? std::optional(grid.at("xi").get<double>()) : std::nullopt;
        const double c0 = grid.value("c0", 4.0);

        for (auto n : ns) {
            std::vector<std::size_t> m_values = ms;
            for (double r : ratios)
                m_values.push_back(static_cast<std::size_t>(std::llround(r * static_cast<double>(n))));
            if (m_values.empty()) m_values.push_back(0);
            for (auto m : m_values)
                for (int k : ks)
                    for (const auto& e : eps_choices)
                        for (double c : cs)
                            for (double d : deltas)
                                for (auto mode : modes) {
                                    GridPoint pt;
                                    pt.n = n;
                                    pt.m = m;
                                    pt.k = k;
                                    pt.schedule = e;
                                    pt.schedule.c = c;
                                    pt.schedule.delta = d;
                                    pt.schedule.mode = mode;
                                    pt.schedule.xi = xi;
                                    pt.schedule.c0 = c0;
                                    spec.grid.push_back(pt);
                                }
        }
    } catch (const json::exception& e) {
        throw Error(std::string("experiment spec: ") + e.what());
    }
    if (spec.grid.empty()) throw Error("experiment grid is empty");
    return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto spec = parse_experiment_spec(text);
    if (spec.instance.kind == InstanceKind::file && spec.instance.path.is_relative())
        spec.instance.path = path.parent_path() / spec.instance.path;
    return spec;
}

MatchingFamily build_instance(const InstanceSource& source, const GridPoint& point, std::uint64_t seed) {
    switch (source.kind) {
    case InstanceKind::file: return read_rmf_file(source.path);
    case InstanceKind::random: {
        auto rng = Rng::derive(seed, {static_cast<std::uint64_t>(Stream::generator)});
        return gen_random_simple(point.n, point.m, point.k, rng(), source.random);
    }
    case InstanceKind::latin: return gen_latin(point.n, source.latin, seed);
    case InstanceKind::double_star: return gen_double_star(point.m);
    case InstanceKind::two_k4: return gen_two_k4();
    }
    throw Error("unknown instance kind");
}

std::vector<DeviationRow> trajectory_report(const std::vector<TrajectoryRecord>& records, const ScheduleParams& params) {
    std::vector<DeviationRow> rows;
    rows.reserve(records.size());
    const bool theoretical = params.mode == ScheduleMode::theoretical;
    for (const auto& rec : records) {
        DeviationRow row;
        row.i = rec.i;
        row.predicted_size = rec.predicted_size;
        if (rec.predicted_size > 0.0) {
            row.min_dev = (rec.min_size - rec.predicted_size) / rec.predicted_size;
            row.mean_dev = (rec.mean_size - rec.predicted_size) / rec.predicted_size;
            row.max_dev = (rec.max_size - rec.predicted_size) / rec.predicted_size;
        }
        row.predicted_degree = rec.predicted_degree - rec.b;
        if (row.predicted_degree > 0.0)
            row.degree_dev = (static_cast<double>(rec.max_chunk_degree) - row.predicted_degree) / row.predicted_degree;
        row.a = rec.a;
        row.b = rec.b;
        if (theoretical) {
            row.a1_breach = rec.min_size < rec.predicted_size - rec.a || rec.max_size > rec.predicted_size + rec.a;
            row.a2_breach = static_cast<double>(rec.max_chunk_degree) > row.predicted_degree + rec.b;
        }
        rows.push_back(row);
    }
    return rows;
}

CellResult aggregate_cell(std::size_t index, const GridPoint& point, std::vector<TrialResult> trials) {
    std::sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
    CellResult cell;
    cell.index = index;
    cell.point = point;
    cell.trials = trials.size();
    bool shape_known = false;
    std::vector<AggregateRow> rows;
    for (const auto& t : trials) {
        if (!t.ran) {
            ++cell.errors;
            if (cell.first_error.empty()) cell.first_error = t.error;
            continue;
        }
        const auto& o = t.outcome;
        if (!shape_known) {
            cell.n = o.schedule.n;
            cell.m = o.schedule.m;
            cell.k = o.schedule.k;
            cell.epsilon = o.schedule.epsilon;
            shape_known = true;
        }
        cell.wallclock += o.elapsed_seconds;
        cell.restarts += o.restarts;
        switch (o.status) {
        case RunStatus::success: cell.successes += t.verified; break;
        case RunStatus::greedy_failed: ++cell.greedy_failed; break;
        case RunStatus::restart_exhausted: ++cell.restart_exhausted; break;
        case RunStatus::constraint_violation: ++cell.constraint_violation; break;
        }
        if (o.final_stage.reached && o.final_stage.guard_held) {
            ++cell.guard_held;
            cell.guard_held_failed += !o.final_stage.succeeded;
        }
        for (const auto& rec : o.trajectory) {
            if (rows.size() <= rec.i) rows.resize(rec.i + 1);
            auto& row = rows[rec.i];
            if (row.trials == 0) {
                row.min_size = rec.min_size;
                row.max_size = rec.max_size;
            }
            row.min_size = std::min(row.min_size, rec.min_size);
            row.max_size = std::max(row.max_size, rec.max_size);
            ++row.trials;
            row.x += rec.x;
            row.predicted_size += rec.predicted_size;
            row.mean_size += rec.mean_size;
            row.max_chunk_degree += static_cast<double>(rec.max_chunk_degree);
            row.predicted_degree += rec.predicted_degree;
            row.f += rec.f;
            row.max_q += rec.max_q;
            row.marked += static_cast<double>(rec.marked);
            row.killed += static_cast<double>(rec.killed);
            row.zapped += static_cast<double>(rec.zapped);
            row.phi += static_cast<double>(rec.phi);
            row.repaired += static_cast<double>(rec.repaired);
            row.a1_breaches += rec.a1_breach;
            row.a2_breaches += rec.a2_breach;
        }
    }
    double dev_sum = 0.0;
    std::size_t dev_count = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& row = rows[i];
        row.i = i;
        if (row.trials == 0) continue;
        const double t = static_cast<double>(row.trials);
        for (double* field : {&row.x, &row.predicted_size, &row.mean_size, &row.max_chunk_degree,
                              &row.predicted_degree, &row.f, &row.max_q, &row.marked, &row.killed, &row.zapped,
                              &row.phi, &row.repaired})
            *field /= t;
        if (row.predicted_size > 0.0) row.rel_dev = std::abs(row.mean_size - row.predicted_size) / row.predicted_size;
        dev_sum += row.rel_dev;
        ++dev_count;
        cell.max_deviation = std::max(cell.max_deviation, row.rel_dev);
        cell.a1_breaches += row.a1_breaches;
        cell.a2_breaches += row.a2_breaches;
    }
    cell.mean_deviation = dev_count ? dev_sum / static_cast<double>(dev_count) : 0.0;
    cell.trajectory = std::move(rows);
    return cell;
}

namespace {

TrialResult run_trial(const ExperimentSpec& spec, std::size_t cell, std::size_t trial,
                      const std::optional<MatchingFamily>& shared, const std::string& shared_error) {
    TrialResult res;
    res.cell = cell;
    res.trial = trial;
    res.seed = spec.base_seed + trial;
    const auto& point = spec.grid[cell];
    try {
        if (!shared_error.empty()) throw Error(shared_error);
        std::optional<MatchingFamily> own;
        if (!shared) own = build_instance(spec.instance, point, res.seed);
        const MatchingFamily& family = shared ? *shared : *own;
        NibbleConfig config;
        config.schedule = make_schedule(family, point.schedule);
        config.seed = res.seed;
        config.max_restarts = spec.max_restarts;
        config.strict = spec.strict;
        config.degree_sample = spec.degree_sample;
        config.allow_improper = spec.instance.kind == InstanceKind::double_star;
        res.outcome = run_nibble(family, config);
        res.ran = true;
        res.verified = res.outcome.status == RunStatus::success && verify_rainbow(family, res.outcome.rainbow, true).empty();
    } catch (const std::exception& e) {
        res.ran = false;
        res.error = e.what();
    }
    return res;
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, std::size_t threads) {
    const auto t0 = std::chrono::steady_clock::now();
    if (threads == 0) threads = std::max<std::size_t>(1, spec.threads);
    const auto cells = spec.grid.size();

    // Non-random instances are built once per cell and shared read-only.
    std::vector<std::optional<MatchingFamily>> shared(cells);
    std::vector<std::string> shared_error(cells);
    if (spec.instance.kind != InstanceKind::random) {
        for (std::size_t c = 0; c < cells; ++c) {
            try {
                shared[c] = build_instance(spec.instance, spec.grid[c], spec.base_seed);
            } catch (const std::exception& e) {
                shared_error[c] = e.what();
            }
        }
    }

    const auto units = cells * spec.trials;
    std::vector<TrialResult> results(units);
    threads = std::min(threads, std::max<std::size_t>(units, 1));
    auto work = [&](std::size_t first, std::size_t last) {
        for (std::size_t u = first; u < last; ++u) {
            const auto c = u / spec.trials;
            results[u] = run_trial(spec, c, u % spec.trials, shared[c], shared_error[c]);
        }
    };
    if (threads <= 1) {
        work(0, units);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(work, units * t / threads, units * (t + 1) / threads);
        for (auto& th : pool) th.join();
    }

    ExperimentResult out;
    for (std::size_t c = 0; c < cells; ++c) {
        std::vector<TrialResult> mine(results.begin() + static_cast<std::ptrdiff_t>(c * spec.trials),
                                      results.begin() + static_cast<std::ptrdiff_t>((c + 1) * spec.trials));
        out.cells.push_back(aggregate_cell(c, spec.grid[c], std::move(mine)));
    }
    out.trials = std::move(results);
    out.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

void write_cells_csv(std::ostream& out, const std::vector<CellResult>& cells) {
    out << "cell,n,m,k,mode,chunk,epsilon,alpha,c,delta,trials,successes,success_rate,restarts,greedy_failed,"
           "restart_exhausted,constraint_violation,errors,guard_held,guard_held_failed,mean_deviation,"
           "max_deviation,a1_breaches,a2_breaches\n";
    for (const auto& c : cells) {
        const auto& s = c.point.schedule;
        const auto chunk = c.m ? round_chunk(c.epsilon, c.m) : 0;
        out << c.index << ',' << c.n << ',' << c.m << ',' << c.k << ',' << mode_name(s.mode) << ',' << chunk << ','
            << num(c.epsilon) << ',' << (s.alpha ? num(*s.alpha) : std::string()) << ',' << num(s.c) << ','
            << num(s.delta) << ',' << c.trials << ',' << c.successes << ','
            << num(c.trials ? static_cast<double>(c.successes) / static_cast<double>(c.trials) : 0.0) << ','
            << c.restarts << ',' << c.greedy_failed << ',' << c.restart_exhausted << ',' << c.constraint_violation
            << ',' << c.errors << ',' << c.guard_held << ',' << c.guard_held_failed << ',' << num(c.mean_deviation)
            << ',' << num(c.max_deviation) << ',' << c.a1_breaches << ',' << c.a2_breaches << '\n';
    }
}

void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
    out << "cell,trial,seed,status,verified,restarts,iterations,final_remaining,final_min_size,guard_held,"
           "rainbow_size,max_zap_residual,error\n";
    for (const auto& t : trials) {
        const auto& o = t.outcome;
        std::string error = t.error;
        std::replace(error.begin(), error.end(), ',', ';');
        std::replace(error.begin(), error.end(), '\n', ' ');
        out << t.cell << ',' << t.trial << ',' << t.seed << ',' << (t.ran ? status_name(o.status) : "error") << ','
            << t.verified << ',' << o.restarts << ',' << o.trajectory.size() << ',' << o.final_stage.remaining << ','
            << o.final_stage.min_size << ',' << o.final_stage.guard_held << ',' << o.rainbow.size() << ','
            << num(o.max_zap_residual) << ',' << error << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "i,trials,x,predicted_size,mean_size,min_size,max_size,rel_dev,max_chunk_degree,predicted_degree,f,"
           "max_q,marked,killed,zapped,phi,repaired,a1_breaches,a2_breaches\n";
    for (const auto& r : rows) {
        out << r.i << ',' << r.trials << ',' << num(r.x) << ',' << num(r.predicted_size) << ',' << num(r.mean_size)
            << ',' << num(r.min_size) << ',' << num(r.max_size) << ',' << num(r.rel_dev) << ','
            << num(r.max_chunk_degree) << ',' << num(r.predicted_degree) << ',' << num(r.f) << ',' << num(r.max_q)
            << ',' << num(r.marked) << ',' << num(r.killed) << ',' << num(r.zapped) << ',' << num(r.phi) << ','
            << num(r.repaired) << ',' << r.a1_breaches << ',' << r.a2_breaches << '\n';
    }
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
    out << "i,x,surviving_matchings,surviving_vertices,min_size,mean_size,max_size,predicted_size,"
           "max_chunk_degree,predicted_degree,f,c,a,b,max_q,zap_residual,marked,killed,zapped,"
           "collision_vertices,phi,repaired,a1_breach,a2_breach\n";
    for (const auto& r : records) {
        out << r.i << ',' << num(r.x) << ',' << r.surviving_matchings << ',' << r.surviving_vertices << ','
            << num(r.min_size) << ',' << num(r.mean_size) << ',' << num(r.max_size) << ',' << num(r.predicted_size)
            << ',' << r.max_chunk_degree << ',' << num(r.predicted_degree) << ',' << num(r.f) << ',' << num(r.c)
            << ',' << num(r.a) << ',' << num(r.b) << ',' << num(r.max_q) << ',' << num(r.zap_residual) << ','
            << r.marked << ',' << r.killed << ',' << r.zapped << ',' << r.collision_vertices << ',' << r.phi << ','
            << r.repaired << ',' << r.a1_breach << ',' << r.a2_breach << '\n';
    }
}

void write_schedule_csv(std::ostream& out, const ScheduleParams& p) {
    out << "i,x,r,g,predicted_size,predicted_degree,f,a,b,c,abconstraints,asmall\n";
    const double n = static_cast<double>(p.n);
    for (const auto& s : schedule_table(p)) {
        const auto rep = check_ab_constraints(p, s.i, s.a, s.b, s.c);
        bool ab = true, small = true;
        for (const auto& cl : rep.clauses) {
            if (cl.name.rfind("a_i <= xi", 0) == 0 || cl.name.rfind("b_i <= xi", 0) == 0) small = small && cl.ok;
            else ab = ab && cl.ok;
        }
        out << s.i << ',' << num(s.x) << ',' << num(s.r) << ',' << num(s.g) << ',' << num(s.r * n) << ','
            << num(p.epsilon * p.gamma * s.g * n) << ',' << num(s.f) << ',' << num(s.a) << ',' << num(s.b) << ','
            << num(s.c) << ',' << ab << ',' << small << '\n';
    }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

template <class F>
std::string render(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

} // namespace

void write_experiment(const ExperimentSpec& spec, const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "trajectories");
    write_file(dir / "cells.csv", render([&](std::ostream& os) { write_cells_csv(os, result.cells); }));
    write_file(dir / "trials.csv", render([&](std::ostream& os) { write_trials_csv(os, result.trials); }));
    for (const auto& cell : result.cells)
        write_file(dir / "trajectories" / ("cell_" + std::to_string(cell.index) + ".csv"),
                   render([&](std::ostream& os) { write_aggregate_csv(os, cell.trajectory); }));

    json side;
    try {
        side["spec"] = json::parse(spec.source_text);
    } catch (const json::exception&) {
        side["spec"] = spec.source_text;
    }
    side["wallclock_seconds"] = result.wallclock;
    json cells = json::array();
    for (const auto& cell : result.cells)
        cells.push_back({{"cell", cell.index}, {"trial_seconds", cell.wallclock}, {"first_error", cell.first_error}});
    side["cells"] = cells;
    write_file(dir / "run.json", side.dump(2) + "\n");
}

} // namespace rainbow

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rainbow/exact.hpp"
#include "rainbow/generators.hpp"
#include "rainbow/harness.hpp"
#include "rainbow/model.hpp"
#include "rainbow/nibble.hpp"
#include "rainbow/rmf.hpp"
#include "rainbow/schedule.hpp"

using namespace rainbow;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_no = 1;
constexpr int exit_usage = 2;

struct Globals {
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::string out;
};

// Writes to --out when given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path.empty()) return;
        file_.open(path);
        if (!file_) throw Error("cannot write " + path);
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void emit_family(const Globals& g, const MatchingFamily& f) {
    Sink sink(g.out);
    write_rmf(sink.stream(), f);
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

struct ScheduleFlags {
    std::string mode = "adaptive";
    std::optional<std::size_t> chunk;
    std::optional<double> epsilon;
    std::optional<double> alpha;
    double c = 0.05;
    double delta = 0.0;
    std::optional<double> xi;
    double c0 = 4.0;

    void attach(CLI::App* app) {
        app->add_option("--mode", mode, "adaptive or theoretical")->check(CLI::IsMember({"adaptive", "theoretical"}));
        auto* ch = app->add_option("--chunk", chunk, "matchings per chunk (epsilon * m)");
        auto* ep = app->add_option("--epsilon", epsilon, "chunk fraction epsilon");
        auto* al = app->add_option("--alpha", alpha, "epsilon = n^-alpha");
        ch->excludes(ep)->excludes(al);
        ep->excludes(al);
        app->add_option("--c", c, "exponent c in gamma = 1 - n^-c");
        app->add_option("--delta", delta, "exponent delta in m = gamma n^(1+delta)");
        app->add_option("--xi", xi, "xi (default 1/ln n)");
        app->add_option("--c0", c0, "constant C0 of the error recurrences");
    }

    ScheduleChoice choice() const {
        ScheduleChoice ch;
        ch.mode = *parse_mode(mode);
        ch.chunk = chunk;
        ch.epsilon = epsilon;
        ch.alpha = alpha;
        ch.c = c;
        ch.delta = delta;
        ch.xi = xi;
        ch.c0 = c0;
        return ch;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rainbow matchings: nibble solver, exact search, generators and experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads for experiments (0: from spec)");
    app.add_option("--out", g.out, "output file or directory");

    int code = exit_ok;

    // gen
    auto* gen = app.add_subcommand("gen", "write a generated family as RMF");
    gen->require_subcommand(1);
    {
        auto* sub = gen->add_subcommand("random", "random simple family of equal-size matchings");
        static std::size_t n = 0, m = 0;
        static int k = 2;
        static RandomFamilyOptions opts;
        sub->add_option("--n", n, "matching size")->required();
        sub->add_option("--m", m, "number of matchings")->required();
        sub->add_option("--k", k, "edge arity");
        sub->add_option("--max-degree", opts.max_degree_cap, "vertex degree cap");
        sub->add_option("--max-codegree", opts.max_codegree_cap, "pair codegree cap (k >= 3)");
        sub->add_option("--universe-ratio", opts.universe_ratio, "vertices per edge slot");
        sub->callback([&] { emit_family(g, gen_random_simple(n, m, k, g.seed, opts)); });
    }
    {
        auto* sub = gen->add_subcommand("latin", "Latin square family (transversals are full rainbow matchings)");
        static std::size_t n = 0;
        static std::string kind = "cyclic";
        sub->add_option("--n", n, "order")->required();
        sub->add_option("--kind", kind, "cyclic or random")->check(CLI::IsMember({"cyclic", "random"}));
        sub->callback([&] {
            emit_family(g, gen_latin(n, kind == "cyclic" ? LatinKind::cyclic : LatinKind::random, g.seed));
        });
    }
    {
        auto* sub = gen->add_subcommand("double-star", "double-star family on m components (improper classes)");
        static std::size_t m = 0;
        sub->add_option("--m", m, "number of components (even)")->required();
        sub->callback([&] { emit_family(g, gen_double_star(m)); });
    }
    {
        auto* sub = gen->add_subcommand("two-k4", "two disjoint K4 with their 1-factorisation");
        sub->callback([&] { emit_family(g, gen_two_k4()); });
    }
    {
        auto* sub = gen->add_subcommand("find-2reg", "search for a 2-regular family without a full rainbow matching");
        static std::size_t max_vertices = 12;
        static std::uint64_t budget = 200000;
        static std::string cert;
        sub->add_option("--max-vertices", max_vertices, "largest graph to try");
        sub->add_option("--budget", budget, "colourings to examine");
        sub->add_option("--certificate", cert, "certificate note path (default <out>.cert.txt, or stderr)");
        sub->callback([&] {
            auto found = find_2regular_counterexample(max_vertices, g.seed, budget);
            if (!found) {
                std::cerr << "no counterexample found within the budget\n";
                code = exit_no;
                return;
            }
            emit_family(g, found->family);
            std::string path = cert;
            if (path.empty() && !g.out.empty()) path = g.out + ".cert.txt";
            std::ofstream file;
            if (!path.empty()) {
                file.open(path);
                if (!file) throw Error("cannot write " + path);
            }
            std::ostream& note = path.empty() ? std::cerr : file;
            note << "2-regular bipartite family, classes of exactly 3 edges\n";
            note << "cycle lengths:";
            for (auto c : found->cycle_lengths) note << ' ' << c;
            note << "\nvertices: " << found->family.num_vertices() << "\nmatchings: " << found->family.num_matchings()
                 << "\ncolourings tried: " << found->colourings_tried
                 << "\nfull rainbow matching: none (exhaustive search, " << found->oracle_nodes << " nodes)\n";
        });
    }

    // lift
    {
        auto* sub = app.add_subcommand("lift", "3-uniform lift with one colour vertex per class");
        static std::string in, parts;
        sub->add_option("input", in, "RMF file")->required();
        sub->add_option("--parts", parts, "part-label sidecar (default <out>.parts, or stderr)");
        sub->callback([&] {
            auto lifted = lift_to_3uniform(read_rmf_file(in));
            emit_family(g, lifted.family);
            std::string path = parts;
            if (path.empty() && !g.out.empty()) path = g.out + ".parts";
            std::ofstream file;
            if (!path.empty()) {
                file.open(path);
                if (!file) throw Error("cannot write " + path);
            }
            std::ostream& side = path.empty() ? std::cerr : file;
            side << "# tripartite " << (lifted.tripartite ? 1 : 0) << " min_colour_degree " << lifted.min_colour_degree
                 << " max_original_degree " << lifted.max_original_degree << '\n';
            for (std::size_t v = 0; v < lifted.parts.size(); ++v) side << v << ' ' << part_name(lifted.parts[v]) << '\n';
        });
    }

    // stats
    {
        auto* sub = app.add_subcommand("stats", "family statistics and hypothesis checks");
        static std::string in;
        static std::optional<int> theorem;
        static HypothesisParams hp;
        sub->add_option("input", in, "RMF file")->required();
        sub->add_option("--theorem", theorem, "check the hypotheses of theorem 1-4")->check(CLI::Range(1, 4));
        sub->add_option("--c", hp.c, "exponent c");
        sub->add_option("--delta", hp.delta, "exponent delta");
        sub->add_option("--eps0", hp.eps0, "multigraph slack");
        sub->callback([&] {
            const auto f = read_rmf_file(in);
            Sink sink(g.out);
            auto& out = sink.stream();
            const auto problems = validate(f);
            const auto st = compute_stats(f);
            out << "k " << f.k() << "\nvertices " << f.num_vertices() << "\nm " << st.m << "\nedges " << st.num_edges
                << "\nmin_size " << st.min_size << "\nmax_size " << st.max_size << "\nmax_degree " << st.max_degree
                << "\nmax_multiplicity " << st.max_multiplicity << "\nmax_codegree " << st.max_codegree
                << "\nproper " << (problems.empty() ? 1 : 0) << '\n';
            if (theorem) {
                auto rep = check_hypotheses(f, static_cast<Theorem>(*theorem), hp);
                for (const auto& cl : rep.clauses)
                    out << "clause \"" << cl.name << "\" measured " << num(cl.measured) << " bound " << num(cl.bound)
                        << ' ' << (cl.satisfied ? "ok" : "fails") << '\n';
                if (!rep.all_satisfied()) code = exit_no;
            }
        });
    }

    // verify
    {
        auto* sub = app.add_subcommand("verify", "check a selection against a family");
        static std::string in, sel;
        static bool partial = false;
        sub->add_option("input", in, "RMF file")->required();
        sub->add_option("selection", sel, "selection file")->required();
        sub->add_flag("--partial", partial, "accept a rainbow matching that is not full");
        sub->callback([&] {
            const auto f = read_rmf_file(in);
            const auto why = verify_rainbow(f, read_selection_file(sel), !partial);
            if (why.empty()) {
                std::cout << "ok\n";
            } else {
                std::cout << "invalid: " << why << '\n';
                code = exit_no;
            }
        });
    }

    // solve
    auto* solve = app.add_subcommand("solve", "find a full rainbow matching");
    solve->require_subcommand(1);
    {
        auto* sub = solve->add_subcommand("nibble", "randomized chunked algorithm");
        static std::string in, trajectory;
        static ScheduleFlags flags;
        static std::size_t max_restarts = 10;
        static bool strict = false, improper = false;
        sub->add_option("input", in, "RMF file")->required();
        flags.attach(sub);
        sub->add_option("--max-restarts", max_restarts, "restarts after an out-of-range zap probability");
        sub->add_option("--trajectory", trajectory, "per-iteration CSV");
        sub->add_flag("--strict", strict, "stop when the theoretical envelopes are breached");
        sub->add_flag("--allow-improper", improper, "accept colour classes that are not matchings");
        sub->callback([&] {
            const auto f = read_rmf_file(in);
            NibbleConfig cfg;
            cfg.schedule = make_schedule(f, flags.choice());
            cfg.seed = g.seed;
            cfg.max_restarts = max_restarts;
            cfg.strict = strict;
            cfg.allow_improper = improper;
            const auto out = run_nibble(f, cfg);
            if (!trajectory.empty()) {
                std::ofstream t(trajectory);
                if (!t) throw Error("cannot write " + trajectory);
                write_trajectory_csv(t, out.trajectory);
            }
            Sink sink(g.out);
            auto& os = sink.stream();
            os << "# status " << status_name(out.status) << "\n# restarts " << out.restarts << "\n# epsilon "
               << num(out.schedule.epsilon) << "\n# gamma " << num(out.schedule.gamma) << "\n# size "
               << out.rainbow.size() << " of " << f.num_matchings() << '\n';
            if (!out.detail.empty()) os << "# detail " << out.detail << '\n';
            write_selection(os, out.rainbow);
            if (out.status != RunStatus::success) code = exit_no;
        });
    }
    {
        auto* sub = solve->add_subcommand("exact", "exhaustive search");
        static std::string in;
        static bool max = false, count = false;
        static std::uint64_t budget = SearchLimits{}.node_budget;
        sub->add_option("input", in, "RMF file")->required();
        auto* mx = sub->add_flag("--max", max, "largest rainbow matching instead of a full one");
        auto* ct = sub->add_flag("--count", count, "count full rainbow matchings by enumeration");
        mx->excludes(ct);
        sub->add_option("--node-budget", budget, "search node limit");
        sub->callback([&] {
            const auto f = read_rmf_file(in);
            Sink sink(g.out);
            auto& os = sink.stream();
            SearchLimits limits;
            limits.node_budget = budget;
            if (count) {
                const auto c = enumerate_oracle(f);
                os << "count " << c << '\n';
                if (c == 0) code = exit_no;
            } else if (max) {
                const auto r = max_rainbow(f, limits);
                os << "# max " << r.size << (r.complete ? "" : " (lower bound, budget hit)") << "\n# nodes " << r.nodes
                   << '\n';
                write_selection(os, r.witness);
                if (r.size < f.num_matchings()) code = exit_no;
            } else {
                const auto r = find_full(f, limits);
                os << "# status " << status_name(r.status) << "\n# nodes " << r.nodes << '\n';
                if (r.witness) write_selection(os, *r.witness);
                if (r.status != SearchStatus::found) code = exit_no;
            }
        });
    }

    // schedule
    {
        auto* sub = app.add_subcommand("schedule", "print the schedule table as CSV");
        static std::size_t n = 0;
        static std::optional<std::size_t> m, max_degree;
        static int k = 2;
        static ScheduleFlags flags;
        sub->add_option("--n", n, "matching size")->required();
        sub->add_option("--m", m, "number of matchings (theoretical default: gamma n^(1+delta))");
        sub->add_option("--k", k, "edge arity");
        sub->add_option("--max-degree", max_degree, "max vertex degree (adaptive gamma; default m)");
        flags.attach(sub);
        sub->callback([&] {
            const auto choice = flags.choice();
            std::size_t mm = 0;
            if (m) mm = *m;
            else if (choice.mode == ScheduleMode::theoretical) mm = theoretical_m(n, choice.c, choice.delta);
            else throw Error("--m is required in adaptive mode");
            const auto p = make_schedule(k, n, mm, max_degree.value_or(mm), choice);
            Sink sink(g.out);
            write_schedule_csv(sink.stream(), p);
        });
    }

    // experiment
    {
        auto* sub = app.add_subcommand("experiment", "run a parameter grid");
        static std::string spec_path;
        sub->add_option("spec", spec_path, "JSON experiment description")->required();
        sub->callback([&] {
            auto spec = load_experiment_spec(spec_path);
            const auto dir = g.out.empty() ? spec.output_dir : std::filesystem::path(g.out);
            const auto result = run_experiment(spec, g.threads);
            write_experiment(spec, result, dir);
            std::size_t errors = 0;
            for (const auto& c : result.cells) {
                std::cout << "cell " << c.index << ": " << c.successes << '/' << c.trials << " successes\n";
                errors += c.errors;
            }
            std::cout << "wrote " << dir.string() << '\n';
            if (errors) code = exit_no;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return code;
}

#include "rainbow/rmf.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace rainbow {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

// Splits significant lines into whitespace tokens, tracking line numbers.
class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            tokens.clear();
            for (std::string t; ls >> t;) tokens.push_back(std::move(t));
            if (!tokens.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

    std::uint64_t number(const std::string& token) const {
        std::uint64_t value = 0;
        std::size_t used = 0;
        try {
            if (token.empty() || token[0] == '-') throw std::invalid_argument(token);
            value = std::stoull(token, &used);
        } catch (const std::exception&) {
            fail("expected a non-negative integer, got '" + token + "'");
        }
        if (used != token.size()) fail("expected a non-negative integer, got '" + token + "'");
        return value;
    }

    std::uint64_t keyed(const std::string& key) {
        std::vector<std::string> t;
        if (!next(t)) fail("unexpected end of input, expected '" + key + "'");
        if (t.size() != 2 || t[0] != key) fail("expected '" + key + " <value>'");
        return number(t[1]);
    }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

} // namespace

MatchingFamily read_rmf(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    std::vector<std::string> t;
    if (!reader.next(t) || t.size() != 2 || t[0] != "rmf") reader.fail("missing 'rmf 1' header");
    if (t[1] != "1") reader.fail("unsupported rmf version " + t[1]);

    const auto k = reader.keyed("k");
    if (k < 2 || k > 64) reader.fail("arity k must be in [2, 64]");
    const auto nv = reader.keyed("vertices");
    if (nv > 0xffffffffULL) reader.fail("too many vertices");
    const auto m = reader.keyed("m");

    MatchingFamily family(static_cast<int>(k), static_cast<Vertex>(nv), m);
    std::vector<Vertex> vertices;
    while (reader.next(t)) {
        if (t[0] != "e") reader.fail("expected an 'e' edge line, got '" + t[0] + "'");
        if (t.size() != k + 2)
            reader.fail("arity mismatch: edge has " + std::to_string(t.size() < 2 ? 0 : t.size() - 2) +
                        " vertices, expected " + std::to_string(k));
        const auto matching = reader.number(t[1]);
        if (matching >= m) reader.fail("matching index " + t[1] + " out of range");
        vertices.clear();
        for (std::size_t j = 2; j < t.size(); ++j) {
            const auto v = reader.number(t[j]);
            if (v >= nv) reader.fail("vertex " + t[j] + " out of range");
            if (!vertices.empty() && v <= vertices.back()) reader.fail("edge vertices must be strictly increasing");
            vertices.push_back(static_cast<Vertex>(v));
        }
        family.add_edge(matching, vertices);
    }
    return family;
}

MatchingFamily read_rmf_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_rmf(in, path.string());
}

void write_rmf(std::ostream& out, const MatchingFamily& family) {
    out << "rmf 1\nk " << family.k() << "\nvertices " << family.num_vertices() << "\nm " << family.num_matchings()
        << '\n';
    for (std::size_t i = 0; i < family.num_matchings(); ++i) {
        for (std::size_t e = 0; e < family.size(i); ++e) {
            out << "e " << i;
            for (Vertex v : family.edge(i, e)) out << ' ' << v;
            out << '\n';
        }
    }
}

void write_rmf_file(const std::filesystem::path& path, const MatchingFamily& family) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_rmf(out, family);
}

RainbowMatching read_selection(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    RainbowMatching rm;
    std::vector<std::string> t;
    while (reader.next(t)) {
        if (t[0] != "pick" || t.size() < 4) reader.fail("expected 'pick <matching> <v1> ... <vk>'");
        const auto matching = reader.number(t[1]);
        Edge edge;
        for (std::size_t j = 2; j < t.size(); ++j) edge.push_back(static_cast<Vertex>(reader.number(t[j])));
        if (!rm.picks.emplace(matching, std::move(edge)).second)
            reader.fail("matching " + t[1] + " picked twice");
    }
    return rm;
}

RainbowMatching read_selection_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_selection(in, path.string());
}

void write_selection(std::ostream& out, const RainbowMatching& rm) {
    for (const auto& [matching, edge] : rm.picks) {
        out << "pick " << matching;
        for (Vertex v : edge) out << ' ' << v;
        out << '\n';
    }
}

} // namespace rainbow

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rainbow/model.hpp"

namespace rainbow {

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// RMF text format:
//   rmf 1
//   k <k>
//   vertices <num_vertices>
//   m <m>
//   e <matching_index> <v1> ... <vk>      (v1 < ... < vk, one line per edge)
// Blank lines and '#' comments are ignored.
MatchingFamily read_rmf(std::istream& in, const std::string& source = "<stream>");
MatchingFamily read_rmf_file(const std::filesystem::path& path);
void write_rmf(std::ostream& out, const MatchingFamily& family);
void write_rmf_file(const std::filesystem::path& path, const MatchingFamily& family);

// Selection format: one `pick <matching_index> <v1> ... <vk>` line per chosen edge.
RainbowMatching read_selection(std::istream& in, const std::string& source = "<stream>");
RainbowMatching read_selection_file(const std::filesystem::path& path);
void write_selection(std::ostream& out, const RainbowMatching& rm);

} // namespace rainbow

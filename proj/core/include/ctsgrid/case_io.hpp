#pragma once

#include <stdexcept>
#include <string>

#include "ctsgrid/network.hpp"

namespace ctsgrid {

// Raised on malformed case-file text. `line()` is 1-based; 0 means the error
// is not tied to a single line.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Parses the native line-oriented case format:
//
//   CASE <base_mva>
//   BUS
//   # id base_kv kind v_mag v_ang_rad v_min v_max p_load q_load shunt_g shunt_b
//   ...
//   BRANCH
//   # id from to r x b_charging tap phase_rad rate_a rate_c in_service switchable
//   ...
//   GEN
//   # id bus p_out q_out p_min p_max q_min q_max v_set in_service
//   ...
//
// '#' starts a comment; blank lines are ignored. Sections may appear in any
// order, each at most once. Semantic violations surface as SemanticError.
Network parse_case(const std::string& text);

// Canonical text form; parse_case(serialize_case(net)) reproduces `net`
// exactly (values are written with full round-trip precision).
std::string serialize_case(const Network& net);

// File wrappers. Throw std::ios_base::failure when the path is unreadable or
// unwritable.
Network load_case(const std::string& path);
void save_case(const Network& net, const std::string& path);

} // namespace ctsgrid

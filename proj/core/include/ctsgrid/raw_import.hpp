#pragma once

#include <string>
#include <vector>

#include "ctsgrid/case_io.hpp"
#include "ctsgrid/network.hpp"

namespace ctsgrid {

struct RawImportResult {
  Network net;
  // One entry per skipped record in unsupported blocks (fixed shunts, areas,
  // DC lines, switched shunts, ...).
  std::vector<std::string> warnings;
};

// Imports the restricted RAW record subset: a case identification line
// (IC, SBASE, ...), two title lines, then comma-separated record blocks in
// the fixed order bus / load / fixed shunt / generator / branch /
// two-winding transformer, each terminated by a line whose first field is 0.
// Blocks after the transformer block are skipped with warnings until a lone
// 'Q' or end of input.
//
// Explicitly rejected (ParseError): IC != 0, three-winding transformers
// (K != 0), transformer codes CW/CZ/CM != 1 or magnetizing admittance,
// constant-current/constant-admittance load components, and branch line
// shunts (GI/BI/GJ/BJ != 0). Malformed records report their line number.
RawImportResult import_raw_subset(const std::string& text);

RawImportResult load_raw_subset(const std::string& path);

} // namespace ctsgrid

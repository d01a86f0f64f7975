#include "ctsgrid/raw_import.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ctsgrid {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '\'') {
      quoted = !quoted;
      continue;
    }
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur += c;
  }
  out.push_back(trim(cur));
  return out;
}

struct RawReader {
  std::vector<std::string> lines;
  std::size_t pos = 0;

  explicit RawReader(const std::string& text) {
    std::istringstream is(text);
    std::string l;
    while (std::getline(is, l)) lines.push_back(l);
  }

  bool eof() const { return pos >= lines.size(); }
  int lineno() const { return static_cast<int>(pos); } // 1-based for the line just read

  // Next non-empty record line, or empty optional at end of input.
  bool next(std::vector<std::string>& fields) {
    while (pos < lines.size()) {
      const std::string l = trim(lines[pos++]);
      if (l.empty()) continue;
      fields = split_record(l);
      return true;
    }
    return false;
  }
};

bool is_terminator(const std::vector<std::string>& f) {
  if (f.empty()) return false;
  // '0' optionally followed by a '/ END OF ...' comment in the same field.
  const std::string& t = f[0];
  if (t == "0") return true;
  return t.size() > 1 && t[0] == '0' && (t[1] == ' ' || t[1] == '/' || t[1] == '\t');
}

bool is_q(const std::vector<std::string>& f) {
  return !f.empty() && (f[0] == "Q" || f[0] == "q" || (f[0].size() > 1 && f[0][0] == 'Q'));
}

double num_at(const std::vector<std::string>& f, std::size_t i, int line) {
  if (i >= f.size()) throw ParseError(line, "record has too few fields");
  try {
    return std::stod(f[i]);
  } catch (const std::exception&) {
    throw ParseError(line, "expected a number in field " + std::to_string(i + 1));
  }
}

int int_at(const std::vector<std::string>& f, std::size_t i, int line) {
  return static_cast<int>(num_at(f, i, line));
}

} // namespace

RawImportResult import_raw_subset(const std::string& text) {
  RawReader rd(text);
  std::vector<std::string> f;
  std::vector<std::string> warnings;

  if (!rd.next(f)) throw ParseError(0, "empty file");
  const int ic = int_at(f, 0, rd.lineno());
  if (ic != 0) throw ParseError(rd.lineno(), "only base-case files (IC = 0) are supported");
  const double base_mva = num_at(f, 1, rd.lineno());
  // Two title lines (may be blank; consume raw lines, not records).
  for (int i = 0; i < 2 && rd.pos < rd.lines.size(); ++i) ++rd.pos;

  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;
  int next_branch_id = 1, next_gen_id = 1;

  // Bus block: I, NAME, BASKV, IDE, AREA, ZONE, OWNER, VM, VA, ...
  while (rd.next(f) && !is_terminator(f)) {
    const int line = rd.lineno();
    if (f.size() < 9) throw ParseError(line, "bus record has too few fields");
    const int ide = int_at(f, 3, line);
    if (ide == 4) {
      warnings.push_back("line " + std::to_string(line) + ": isolated bus skipped");
      continue;
    }
    Bus b;
    b.id = int_at(f, 0, line);
    b.base_kv = num_at(f, 2, line);
    b.kind = ide == 3 ? BusKind::slack : (ide == 2 ? BusKind::pv : BusKind::pq);
    b.v_mag = num_at(f, 7, line);
    b.v_ang = num_at(f, 8, line) * kPi / 180.0;
    buses.push_back(b);
  }

  // Load block: I, ID, STATUS, AREA, ZONE, PL, QL [, IP, IQ, YP, YQ, ...]
  while (rd.next(f) && !is_terminator(f)) {
    const int line = rd.lineno();
    if (f.size() < 7) throw ParseError(line, "load record has too few fields");
    if (int_at(f, 2, line) == 0) continue;
    for (std::size_t i = 7; i < 11 && i < f.size(); ++i) {
      if (num_at(f, i, line) != 0.0)
        throw ParseError(line, "constant-current/admittance load components are not supported");
    }
    const int bus_id = int_at(f, 0, line);
    bool found = false;
    for (Bus& b : buses) {
      if (b.id == bus_id) {
        b.p_load += num_at(f, 5, line);
        b.q_load += num_at(f, 6, line);
        found = true;
        break;
      }
    }
    if (!found)
      throw SemanticError("load record references unknown bus " + std::to_string(bus_id));
  }

  // Fixed shunt block: outside the supported subset, skipped with warnings.
  while (rd.next(f) && !is_terminator(f)) {
    warnings.push_back("line " + std::to_string(rd.lineno()) + ": fixed shunt record skipped");
  }

  // Generator block: I, ID, PG, QG, QT, QB, VS, IREG, MBASE, ZR, ZX, RT, XT,
  // GTAP, STAT, RMPCT, PT, PB, ...
  while (rd.next(f) && !is_terminator(f)) {
    const int line = rd.lineno();
    if (f.size() < 18) throw ParseError(line, "generator record has too few fields");
    Generator g;
    g.id = next_gen_id++;
    g.bus = int_at(f, 0, line);
    g.p_out = num_at(f, 2, line);
    g.q_out = num_at(f, 3, line);
    g.q_max = num_at(f, 4, line);
    g.q_min = num_at(f, 5, line);
    g.v_set = num_at(f, 6, line);
    g.in_service = int_at(f, 14, line) != 0;
    g.p_max = num_at(f, 16, line);
    g.p_min = num_at(f, 17, line);
    gens.push_back(g);
  }

  // Branch block: I, J, CKT, R, X, B, RATEA, RATEB, RATEC, GI, BI, GJ, BJ, ST, ...
  while (rd.next(f) && !is_terminator(f)) {
    const int line = rd.lineno();
    if (f.size() < 14) throw ParseError(line, "branch record has too few fields");
    for (std::size_t i = 9; i < 13; ++i) {
      if (num_at(f, i, line) != 0.0)
        throw ParseError(line, "branch line shunts (GI/BI/GJ/BJ) are not supported");
    }
    Branch br;
    br.id = next_branch_id++;
    br.from_bus = std::abs(int_at(f, 0, line));
    br.to_bus = std::abs(int_at(f, 1, line));
    br.r = num_at(f, 3, line);
    br.x = num_at(f, 4, line);
    br.b_charging = num_at(f, 5, line);
    br.rate_a = num_at(f, 6, line);
    br.rate_c = num_at(f, 8, line);
    br.in_service = int_at(f, 13, line) != 0;
    branches.push_back(br);
  }

  // Two-winding transformer block (4 lines per record).
  while (rd.next(f) && !is_terminator(f)) {
    const int line = rd.lineno();
    if (is_q(f)) {
      return RawImportResult{
          Network(base_mva, std::move(buses), std::move(branches), std::move(gens)),
          std::move(warnings)};
    }
    if (f.size() < 12) throw ParseError(line, "transformer record has too few fields");
    if (int_at(f, 2, line) != 0)
      throw ParseError(line, "three-winding transformers are not supported");
    if (int_at(f, 4, line) != 1 || int_at(f, 5, line) != 1 || int_at(f, 6, line) != 1)
      throw ParseError(line, "only transformer codes CW=CZ=CM=1 are supported");
    if (num_at(f, 7, line) != 0.0 || num_at(f, 8, line) != 0.0)
      throw ParseError(line, "transformer magnetizing admittance is not supported");
    Branch br;
    br.id = next_branch_id++;
    br.from_bus = std::abs(int_at(f, 0, line));
    br.to_bus = std::abs(int_at(f, 1, line));
    br.in_service = int_at(f, 11, line) != 0;

    std::vector<std::string> f2, f3, f4;
    if (!rd.next(f2) || is_terminator(f2)) throw ParseError(rd.lineno(), "truncated transformer record");
    br.r = num_at(f2, 0, rd.lineno());
    br.x = num_at(f2, 1, rd.lineno());
    if (!rd.next(f3) || is_terminator(f3)) throw ParseError(rd.lineno(), "truncated transformer record");
    const double windv1 = num_at(f3, 0, rd.lineno());
    br.phase_shift = num_at(f3, 2, rd.lineno()) * kPi / 180.0;
    br.rate_a = num_at(f3, 3, rd.lineno());
    br.rate_c = f3.size() > 5 ? num_at(f3, 5, rd.lineno()) : 0.0;
    if (!rd.next(f4) || is_terminator(f4)) throw ParseError(rd.lineno(), "truncated transformer record");
    const double windv2 = num_at(f4, 0, rd.lineno());
    if (windv2 == 0.0) throw ParseError(rd.lineno(), "zero winding-2 ratio");
    br.tap_ratio = windv1 / windv2;
    branches.push_back(br);
  }

  // Remaining blocks are outside the subset: skip record lines until 'Q'.
  while (rd.next(f)) {
    if (is_q(f)) break;
    if (is_terminator(f)) continue;
    warnings.push_back("line " + std::to_string(rd.lineno()) + ": unsupported record skipped");
  }

  return RawImportResult{Network(base_mva, std::move(buses), std::move(branches), std::move(gens)),
                         std::move(warnings)};
}

RawImportResult load_raw_subset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open raw file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return import_raw_subset(buf.str());
}

} // namespace ctsgrid

#include "ctsgrid/case_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace ctsgrid {

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

double to_double(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "expected a number, got '" + tok + "'");
  }
}

int to_int(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "expected an integer, got '" + tok + "'");
  }
}

bool to_flag(const std::string& tok, int line) {
  if (tok == "0") return false;
  if (tok == "1") return true;
  throw ParseError(line, "expected 0 or 1, got '" + tok + "'");
}

BusKind to_kind(const std::string& tok, int line) {
  if (tok == "slack") return BusKind::slack;
  if (tok == "pv") return BusKind::pv;
  if (tok == "pq") return BusKind::pq;
  throw ParseError(line, "unknown bus kind '" + tok + "'");
}

const char* kind_name(BusKind k) {
  switch (k) {
    case BusKind::slack: return "slack";
    case BusKind::pv: return "pv";
    case BusKind::pq: return "pq";
  }
  return "pq";
}

// Full round-trip precision; trailing text form is stable for a given value.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

Network parse_case(const std::string& text) {
  enum class Section { none, bus, branch, gen };
  Section section = Section::none;
  bool saw_case = false, saw_bus = false, saw_branch = false, saw_gen = false;
  double base_mva = 0.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> gens;

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    auto toks = tokenize(strip_comment(raw));
    if (toks.empty()) continue;

    if (toks[0] == "CASE") {
      if (saw_case) throw ParseError(lineno, "duplicate CASE header");
      if (toks.size() != 2) throw ParseError(lineno, "CASE header takes exactly one value");
      base_mva = to_double(toks[1], lineno);
      saw_case = true;
      continue;
    }
    if (!saw_case) throw ParseError(lineno, "file must start with a CASE header");

    if (toks[0] == "BUS" && toks.size() == 1) {
      if (saw_bus) throw ParseError(lineno, "duplicate BUS section");
      saw_bus = true;
      section = Section::bus;
      continue;
    }
    if (toks[0] == "BRANCH" && toks.size() == 1) {
      if (saw_branch) throw ParseError(lineno, "duplicate BRANCH section");
      saw_branch = true;
      section = Section::branch;
      continue;
    }
    if (toks[0] == "GEN" && toks.size() == 1) {
      if (saw_gen) throw ParseError(lineno, "duplicate GEN section");
      saw_gen = true;
      section = Section::gen;
      continue;
    }

    switch (section) {
      case Section::none:
        throw ParseError(lineno, "record outside of any section");
      case Section::bus: {
        if (toks.size() != 11) throw ParseError(lineno, "BUS record takes 11 fields");
        Bus b;
        b.id = to_int(toks[0], lineno);
        b.base_kv = to_double(toks[1], lineno);
        b.kind = to_kind(toks[2], lineno);
        b.v_mag = to_double(toks[3], lineno);
        b.v_ang = to_double(toks[4], lineno);
        b.v_min = to_double(toks[5], lineno);
        b.v_max = to_double(toks[6], lineno);
        b.p_load = to_double(toks[7], lineno);
        b.q_load = to_double(toks[8], lineno);
        b.shunt_g = to_double(toks[9], lineno);
        b.shunt_b = to_double(toks[10], lineno);
        buses.push_back(b);
        break;
      }
      case Section::branch: {
        if (toks.size() != 12) throw ParseError(lineno, "BRANCH record takes 12 fields");
        Branch br;
        br.id = to_int(toks[0], lineno);
        br.from_bus = to_int(toks[1], lineno);
        br.to_bus = to_int(toks[2], lineno);
        br.r = to_double(toks[3], lineno);
        br.x = to_double(toks[4], lineno);
        br.b_charging = to_double(toks[5], lineno);
        br.tap_ratio = to_double(toks[6], lineno);
        br.phase_shift = to_double(toks[7], lineno);
        br.rate_a = to_double(toks[8], lineno);
        br.rate_c = to_double(toks[9], lineno);
        br.in_service = to_flag(toks[10], lineno);
        br.switchable = to_flag(toks[11], lineno);
        branches.push_back(br);
        break;
      }
      case Section::gen: {
        if (toks.size() != 10) throw ParseError(lineno, "GEN record takes 10 fields");
        Generator g;
        g.id = to_int(toks[0], lineno);
        g.bus = to_int(toks[1], lineno);
        g.p_out = to_double(toks[2], lineno);
        g.q_out = to_double(toks[3], lineno);
        g.p_min = to_double(toks[4], lineno);
        g.p_max = to_double(toks[5], lineno);
        g.q_min = to_double(toks[6], lineno);
        g.q_max = to_double(toks[7], lineno);
        g.v_set = to_double(toks[8], lineno);
        g.in_service = to_flag(toks[9], lineno);
        gens.push_back(g);
        break;
      }
    }
  }

  if (!saw_case) throw ParseError(0, "empty case file");
  return Network(base_mva, std::move(buses), std::move(branches), std::move(gens));
}

std::string serialize_case(const Network& net) {
  std::ostringstream os;
  os << "CASE " << num(net.base_mva()) << "\n";
  os << "BUS\n";
  os << "# id base_kv kind v_mag v_ang_rad v_min v_max p_load_mw q_load_mvar shunt_g shunt_b\n";
  for (const Bus& b : net.buses()) {
    os << b.id << ' ' << num(b.base_kv) << ' ' << kind_name(b.kind) << ' ' << num(b.v_mag) << ' '
       << num(b.v_ang) << ' ' << num(b.v_min) << ' ' << num(b.v_max) << ' ' << num(b.p_load) << ' '
       << num(b.q_load) << ' ' << num(b.shunt_g) << ' ' << num(b.shunt_b) << "\n";
  }
  os << "BRANCH\n";
  os << "# id from to r x b_charging tap phase_rad rate_a rate_c in_service switchable\n";
  for (const Branch& br : net.branches()) {
    os << br.id << ' ' << br.from_bus << ' ' << br.to_bus << ' ' << num(br.r) << ' ' << num(br.x)
       << ' ' << num(br.b_charging) << ' ' << num(br.tap_ratio) << ' ' << num(br.phase_shift)
       << ' ' << num(br.rate_a) << ' ' << num(br.rate_c) << ' ' << (br.in_service ? 1 : 0) << ' '
       << (br.switchable ? 1 : 0) << "\n";
  }
  os << "GEN\n";
  os << "# id bus p_out_mw q_out_mvar p_min p_max q_min q_max v_set in_service\n";
  for (const Generator& g : net.generators()) {
    os << g.id << ' ' << g.bus << ' ' << num(g.p_out) << ' ' << num(g.q_out) << ' ' << num(g.p_min)
       << ' ' << num(g.p_max) << ' ' << num(g.q_min) << ' ' << num(g.q_max) << ' ' << num(g.v_set)
       << ' ' << (g.in_service ? 1 : 0) << "\n";
  }
  return os.str();
}

Network load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open case file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

void save_case(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write case file: " + path);
  out << serialize_case(net);
}

} // namespace ctsgrid

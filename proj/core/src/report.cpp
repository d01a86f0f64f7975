#include "ctsgrid/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ctsgrid/case_io.hpp"
#include "ctsgrid/raw_import.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace ctsgrid {

namespace {

constexpr const char* kDetailHeader =
    "contingency,rank,branch,depth,distance,flow_reduction_pct,voltage_reduction_pct,"
    "score,pareto";

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string fmt4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", round4(x));
  return buf;
}

std::string fmt4(const std::optional<double>& x) { return x ? fmt4(*x) : "na"; }

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << content;
  if (!out) throw std::ios_base::failure("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

DetailRecord to_record(const std::string& label, int rank, const CtsResult& r) {
  DetailRecord rec;
  rec.contingency = label;
  rec.rank = rank;
  rec.branch = r.candidate.branch;
  rec.depth = r.candidate.depth;
  rec.distance = r.candidate.distance;
  rec.flow_reduction_pct = r.flow_reduction_pct;
  rec.voltage_reduction_pct = r.voltage_reduction_pct;
  rec.score = r.score;
  rec.pareto = r.pareto;
  return rec;
}

std::string detail_csv(const std::vector<DetailRecord>& rows) {
  std::ostringstream os;
  os << kDetailHeader << "\n";
  for (const DetailRecord& r : rows) {
    os << r.contingency << "," << r.rank << "," << r.branch << "," << r.depth << ","
       << r.distance << "," << fmt4(r.flow_reduction_pct) << ","
       << fmt4(r.voltage_reduction_pct) << "," << fmt4(r.score) << ","
       << (r.pareto ? 1 : 0) << "\n";
  }
  return os.str();
}

ordered_json detail_json(const std::vector<DetailRecord>& rows) {
  ordered_json arr = ordered_json::array();
  for (const DetailRecord& r : rows) {
    ordered_json o;
    o["contingency"] = r.contingency;
    o["rank"] = r.rank;
    o["branch"] = r.branch;
    o["depth"] = r.depth;
    o["distance"] = r.distance;
    o["flow_reduction_pct"] =
        r.flow_reduction_pct ? ordered_json(round4(*r.flow_reduction_pct)) : ordered_json();
    o["voltage_reduction_pct"] = r.voltage_reduction_pct
                                     ? ordered_json(round4(*r.voltage_reduction_pct))
                                     : ordered_json();
    o["score"] = round4(r.score);
    o["pareto"] = r.pareto ? 1 : 0;
    arr.push_back(std::move(o));
  }
  return arr;
}

struct Avg {
  double sum = 0.0;
  int count = 0;
  void add(const std::optional<double>& x) {
    if (!x) return;
    sum += *x;
    ++count;
  }
  std::optional<double> mean() const {
    if (count == 0) return std::nullopt;
    return sum / count;
  }
};

} // namespace

std::string to_string(Heuristic h) {
  switch (h) {
    case Heuristic::cbce: return "cbce";
    case Heuristic::cbve: return "cbve";
    case Heuristic::dm1: return "dm1";
    case Heuristic::dm2: return "dm2";
    case Heuristic::dm3: return "dm3";
    default: return "ce";
  }
}

std::optional<Heuristic> heuristic_from(const std::string& name) {
  if (name == "cbce") return Heuristic::cbce;
  if (name == "cbve") return Heuristic::cbve;
  if (name == "dm1") return Heuristic::dm1;
  if (name == "dm2") return Heuristic::dm2;
  if (name == "dm3") return Heuristic::dm3;
  if (name == "ce") return Heuristic::ce;
  return std::nullopt;
}

Network load_case_auto(const std::string& path, std::vector<std::string>* warnings) {
  std::string lower = path;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".raw") == 0) {
    RawImportResult res = load_raw_subset(path);
    if (warnings) *warnings = std::move(res.warnings);
    return std::move(res.net);
  }
  return load_case(path);
}

RunOutput run(const RunConfig& config) {
  if (config.top_k < 1 || config.list_size < config.top_k)
    throw std::invalid_argument("candidate_list_size >= top_k >= 1 required");
  const bool use_dm = config.heuristic == Heuristic::dm1 ||
                      config.heuristic == Heuristic::dm2 || config.heuristic == Heuristic::dm3;

  RunOutput out;
  const Network net = load_case_auto(config.case_path, &out.load_warnings);

  DmModel model;
  if (use_dm) {
    if (config.dm_model_path.empty())
      throw std::invalid_argument("dm heuristics need --dm-model");
    model = load_dm_model(config.dm_model_path);
    const auto expect = dm_variant_from(to_string(config.heuristic));
    if (expect && model.variant != *expect)
      throw std::invalid_argument("model file is " + to_string(model.variant) +
                                  " but the heuristic is " + to_string(config.heuristic));
  }

  const PowerFlowSolution base = solve(net, config.solver);
  if (!base.converged()) throw std::runtime_error("base case power flow did not converge");

  std::vector<Contingency> set;
  if (config.contingency_list_path.empty())
    set = default_contingency_set(net, config.screening);
  else
    set = parse_contingency_list(read_file(config.contingency_list_path), net);

  const ScreeningOutcome screening =
      screen_all(net, base, set, config.screening, config.solver, config.threads);

  out.summary.contingencies_simulated = screening.simulated;
  out.summary.with_violations = screening.with_violations;
  out.summary.beyond_threshold = static_cast<int>(screening.retained.size());
  out.summary.unsolvable = static_cast<int>(screening.unsolvable.size());
  for (const auto& [c, reason] : screening.unsolvable)
    out.unsolvable.emplace_back(c.label(), reason);

  out.timing.rtca_wall_s = screening.wall_seconds;
  if (!screening.case_seconds.empty()) {
    double lo = std::numeric_limits<double>::max(), hi = 0.0, sum = 0.0;
    for (double s : screening.case_seconds) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      sum += s;
    }
    out.timing.case_min_s = lo;
    out.timing.case_max_s = hi;
    out.timing.case_avg_s = sum / static_cast<double>(screening.case_seconds.size());
  }

  CtsConfig cc;
  cc.screening = config.screening;
  cc.solver = config.solver;
  cc.list_size = config.list_size;
  cc.top_k = config.top_k;
  cc.require_pareto = config.require_pareto;

  Avg flow_nopi, volt_nopi, flow_pi, volt_pi;
  const auto t0 = std::chrono::steady_clock::now();
  for (const ScreenedContingency& sc : screening.retained) {
    std::vector<SwitchingCandidate> list;
    switch (config.heuristic) {
      case Heuristic::cbce:
        list = build_cbce(sc.net, sc.c, config.list_size);
        break;
      case Heuristic::cbve:
        list = build_cbve(sc.net, sc.viol, config.list_size, &sc.c);
        break;
      case Heuristic::ce:
        list = build_cbve(sc.net, sc.viol, std::numeric_limits<int>::max(), &sc.c);
        break;
      default:
        list = build_dm(model, sc.net, sc.c, config.list_size);
        if (list.empty()) list = build_cbve(sc.net, sc.viol, config.list_size, &sc.c);
        break;
    }
    const auto results = evaluate_list(sc.net, sc.sol, sc.viol, list, cc, config.threads);
    const auto full = rank(results, std::numeric_limits<int>::max(), false);
    const auto pareto_full = rank(results, std::numeric_limits<int>::max(), true);
    const auto proposed = rank(results, config.top_k, config.require_pareto);

    const std::string label = sc.c.label();
    for (std::size_t i = 0; i < proposed.size(); ++i)
      out.details.push_back(to_record(label, static_cast<int>(i) + 1, proposed[i]));
    for (std::size_t i = 0; i < full.size(); ++i)
      out.history.push_back(to_record(label, static_cast<int>(i) + 1, full[i]));

    if (proposed.empty() || proposed[0].score <= 0.0)
      ++out.summary.not_reduced;
    else if (!proposed[0].post_viol.significant(config.screening))
      ++out.summary.fully_eliminated;
    else
      ++out.summary.partially_reduced;

    if (!full.empty()) {
      flow_nopi.add(full[0].flow_reduction_pct);
      volt_nopi.add(full[0].voltage_reduction_pct);
    }
    if (!pareto_full.empty()) {
      flow_pi.add(pareto_full[0].flow_reduction_pct);
      volt_pi.add(pareto_full[0].voltage_reduction_pct);
    }
  }
  out.timing.cts_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out.summary.avg_flow_reduction_pct = flow_nopi.mean();
  out.summary.avg_voltage_reduction_pct = volt_nopi.mean();
  out.summary.avg_flow_reduction_pct_pi = flow_pi.mean();
  out.summary.avg_voltage_reduction_pct_pi = volt_pi.mean();
  return out;
}

void emit_report(const RunOutput& out, const RunConfig& config) {
  fs::create_directories(config.out_dir);
  const auto at = [&](const char* name) { return (fs::path(config.out_dir) / name).string(); };

  const RunSummary& s = out.summary;
  const std::vector<std::pair<std::string, std::string>> fields = {
      {"case", config.case_path},
      {"heuristic", to_string(config.heuristic)},
      {"list_size", std::to_string(config.list_size)},
      {"top_k", std::to_string(config.top_k)},
      {"require_pareto", config.require_pareto ? "1" : "0"},
      {"contingencies_simulated", std::to_string(s.contingencies_simulated)},
      {"with_violations", std::to_string(s.with_violations)},
      {"beyond_threshold", std::to_string(s.beyond_threshold)},
      {"unsolvable", std::to_string(s.unsolvable)},
      {"fully_eliminated", std::to_string(s.fully_eliminated)},
      {"partially_reduced", std::to_string(s.partially_reduced)},
      {"not_reduced", std::to_string(s.not_reduced)},
      {"avg_flow_reduction_pct", fmt4(s.avg_flow_reduction_pct)},
      {"avg_voltage_reduction_pct", fmt4(s.avg_voltage_reduction_pct)},
      {"avg_flow_reduction_pct_pi", fmt4(s.avg_flow_reduction_pct_pi)},
      {"avg_voltage_reduction_pct_pi", fmt4(s.avg_voltage_reduction_pct_pi)},
  };

  if (config.format == ReportFormat::csv) {
    std::ostringstream os;
    os << "key,value\n";
    for (const auto& [k, v] : fields) os << k << "," << v << "\n";
    write_file(at("summary.csv"), os.str());
    write_file(at("details.csv"), detail_csv(out.details));
  } else {
    ordered_json sj;
    sj["case"] = config.case_path;
    sj["heuristic"] = to_string(config.heuristic);
    sj["list_size"] = config.list_size;
    sj["top_k"] = config.top_k;
    sj["require_pareto"] = config.require_pareto ? 1 : 0;
    sj["contingencies_simulated"] = s.contingencies_simulated;
    sj["with_violations"] = s.with_violations;
    sj["beyond_threshold"] = s.beyond_threshold;
    sj["unsolvable"] = s.unsolvable;
    sj["fully_eliminated"] = s.fully_eliminated;
    sj["partially_reduced"] = s.partially_reduced;
    sj["not_reduced"] = s.not_reduced;
    sj["avg_flow_reduction_pct"] = s.avg_flow_reduction_pct
                                       ? ordered_json(round4(*s.avg_flow_reduction_pct))
                                       : ordered_json();
    sj["avg_voltage_reduction_pct"] = s.avg_voltage_reduction_pct
                                          ? ordered_json(round4(*s.avg_voltage_reduction_pct))
                                          : ordered_json();
    sj["avg_flow_reduction_pct_pi"] = s.avg_flow_reduction_pct_pi
                                          ? ordered_json(round4(*s.avg_flow_reduction_pct_pi))
                                          : ordered_json();
    sj["avg_voltage_reduction_pct_pi"] =
        s.avg_voltage_reduction_pct_pi ? ordered_json(round4(*s.avg_voltage_reduction_pct_pi))
                                       : ordered_json();
    write_file(at("summary.json"), sj.dump(2) + "\n");
    write_file(at("details.json"), detail_json(out.details).dump(2) + "\n");
  }

  write_file(at("history.csv"), detail_csv(out.history));

  {
    std::ostringstream os;
    os << "contingency,reason\n";
    for (const auto& [label, reason] : out.unsolvable) os << label << "," << reason << "\n";
    write_file(at("unsolvable.csv"), os.str());
  }
  {
    std::ostringstream os;
    os << "metric,seconds\n";
    os << "rtca_wall," << fmt6(out.timing.rtca_wall_s) << "\n";
    os << "cts_wall," << fmt6(out.timing.cts_wall_s) << "\n";
    os << "case_min," << fmt6(out.timing.case_min_s) << "\n";
    os << "case_avg," << fmt6(out.timing.case_avg_s) << "\n";
    os << "case_max," << fmt6(out.timing.case_max_s) << "\n";
    write_file(at("timing.csv"), os.str());
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_opt(const std::string& s, int lineno) {
  if (s == "na") return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ParseError(lineno, "expected a number or `na`, got `" + s + "`");
  }
}

void parse_history_file(const std::string& path, std::vector<TrainingRecord>& out) {
  std::istringstream is(read_file(path));
  std::string line;
  int lineno = 0;
  if (!std::getline(is, line)) return;
  ++lineno;
  if (split_csv_line(line) != split_csv_line(kDetailHeader))
    throw ParseError(lineno, path + " is not a history file");
  std::string open_label;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ParseError(lineno, "expected 9 fields");
    const std::string& label = f[0];
    if (label.size() < 2 || (label[0] != 'B' && label[0] != 'G'))
      throw ParseError(lineno, "bad contingency label `" + label + "`");
    try {
      if (label != open_label) {
        TrainingRecord rec;
        rec.contingency.kind = label[0] == 'B' ? ContingencyKind::branch_outage
                                               : ContingencyKind::generator_outage;
        rec.contingency.element = std::stoi(label.substr(1));
        out.push_back(std::move(rec));
        open_label = label;
      }
      CtsResult r;
      r.feasible = true;
      r.candidate.branch = std::stoi(f[2]);
      r.candidate.depth = std::stoi(f[3]);
      r.candidate.distance = std::stoi(f[4]);
      r.flow_reduction_pct = parse_opt(f[5], lineno);
      r.voltage_reduction_pct = parse_opt(f[6], lineno);
      r.score = std::stod(f[7]);
      r.pareto = f[8] == "1";
      out.back().ranked.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(lineno, "malformed history row");
    }
  }
}

} // namespace

std::vector<TrainingRecord> load_history_dir(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<TrainingRecord> out;
  for (const std::string& f : files) {
    // A run's output directory is a valid history source: artifacts with a
    // different schema (summary, timing, unsolvable) are skipped by header,
    // and details.csv is skipped by name since it is just the truncated view
    // of the history.csv next to it.
    if (fs::path(f).filename() == "details.csv") continue;
    std::istringstream is(read_file(f));
    std::string first;
    if (!std::getline(is, first) || split_csv_line(first) != split_csv_line(kDetailHeader))
      continue;
    parse_history_file(f, out);
  }
  return out;
}

void write_scaling_csv(const std::vector<ScalingReport>& reports, const std::string& path) {
  std::ostringstream os;
  os << "workers,phase,wall_s,speedup,efficiency\n";
  for (const ScalingReport& rep : reports) {
    for (const ScalingRow& row : rep.rows) {
      os << row.workers << "," << rep.phase << "," << fmt6(row.wall_seconds) << ","
         << fmt4(row.speedup) << "," << fmt4(row.efficiency) << "\n";
    }
  }
  write_file(path, os.str());
}

} // namespace ctsgrid

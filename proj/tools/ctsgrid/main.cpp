#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctsgrid/case_io.hpp"
#include "ctsgrid/ctsearch.hpp"
#include "ctsgrid/report.hpp"

namespace fs = std::filesystem;

namespace {

int do_run(const ctsgrid::RunConfig& config) {
  const ctsgrid::RunOutput out = ctsgrid::run(config);
  for (const std::string& w : out.load_warnings) std::cerr << "warning: " << w << "\n";
  ctsgrid::emit_report(out, config);
  const ctsgrid::RunSummary& s = out.summary;
  std::cout << "simulated " << s.contingencies_simulated << ", with violations "
            << s.with_violations << ", beyond threshold " << s.beyond_threshold
            << ", unsolvable " << s.unsolvable << "\n"
            << "fully eliminated " << s.fully_eliminated << ", partially reduced "
            << s.partially_reduced << ", not reduced " << s.not_reduced << "\n"
            << "reports written to " << config.out_dir << "\n";
  return 0;
}

int do_train(const std::string& history_dir, const std::string& variant_name,
             const std::string& out_file) {
  const auto variant = ctsgrid::dm_variant_from(variant_name);
  if (!variant) throw std::invalid_argument("unknown variant " + variant_name);
  const auto records = ctsgrid::load_history_dir(history_dir);
  const ctsgrid::DmModel model = ctsgrid::train_dm(records, *variant);
  ctsgrid::save_dm_model(model, out_file);
  std::cout << "trained " << ctsgrid::to_string(model.variant) << " model on "
            << records.size() << " ranked contingencies, " << model.scores.size()
            << " branches kept, written to " << out_file << "\n";
  return 0;
}

int do_scale(const std::string& case_path, const std::vector<int>& threads,
             const std::string& out_dir) {
  const ctsgrid::Network net = ctsgrid::load_case_auto(case_path);
  const ctsgrid::SolverOptions opts;
  const ctsgrid::ScreeningConfig scfg;
  const ctsgrid::PowerFlowSolution base = ctsgrid::solve(net, opts);
  if (!base.converged()) throw std::runtime_error("base case power flow did not converge");
  const auto set = ctsgrid::default_contingency_set(net, scfg);

  const auto rtca = ctsgrid::scaling_study("rtca", threads, [&](int w) {
    ctsgrid::screen_all(net, base, set, scfg, opts, w);
  });

  const auto screening = ctsgrid::screen_all(net, base, set, scfg, opts, 1);
  ctsgrid::CtsConfig cc;
  cc.screening = scfg;
  cc.solver = opts;
  struct Job {
    const ctsgrid::ScreenedContingency* sc;
    std::vector<ctsgrid::SwitchingCandidate> list;
  };
  std::vector<Job> jobs;
  for (const auto& sc : screening.retained)
    jobs.push_back({&sc, ctsgrid::build_cbve(sc.net, sc.viol, cc.list_size, &sc.c)});
  const auto cts = ctsgrid::scaling_study("cts", threads, [&](int w) {
    for (const Job& j : jobs)
      ctsgrid::evaluate_list(j.sc->net, j.sc->sol, j.sc->viol, j.list, cc, w);
  });

  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "scale.csv").string();
  ctsgrid::write_scaling_csv({rtca, cts}, path);
  std::cout << "scaling over " << set.size() << " contingencies (" << screening.retained.size()
            << " retained) written to " << path << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"AC contingency analysis with corrective transmission switching"};
  app.require_subcommand(1);

  ctsgrid::RunConfig config;
  std::string heuristic = "cbve", format = "csv";
  auto* run_c = app.add_subcommand("run", "Screen N-1 contingencies and rank switching actions");
  run_c->add_option("--case", config.case_path, "case file (.raw goes through the importer)")
      ->required();
  run_c->add_option("--heuristic", heuristic, "candidate list builder")
      ->check(CLI::IsMember({"cbce", "cbve", "dm1", "dm2", "dm3", "ce"}));
  run_c->add_option("--list-size", config.list_size, "candidate list length");
  run_c->add_option("--top-k", config.top_k, "proposals kept per contingency");
  run_c->add_flag("--pareto", config.require_pareto, "drop non-Pareto candidates");
  run_c->add_option("--threads", config.threads, "worker threads");
  run_c->add_option("--contingencies", config.contingency_list_path,
                    "critical-contingency list file");
  run_c->add_option("--dm-model", config.dm_model_path, "trained model for dm heuristics");
  run_c->add_option("--format", format, "summary/details format")
      ->check(CLI::IsMember({"csv", "json"}));
  run_c->add_option("--out", config.out_dir, "output directory")->required();

  std::string history_dir, variant = "dm1", model_out;
  auto* train_c = app.add_subcommand("train-dm", "Train a switching-history model");
  train_c->add_option("--history", history_dir, "directory of history.csv files")->required();
  train_c->add_option("--variant", variant, "dm1|dm2|dm3")
      ->check(CLI::IsMember({"dm1", "dm2", "dm3"}));
  train_c->add_option("--out", model_out, "model file to write")->required();

  std::string scale_case, scale_out;
  std::vector<int> scale_threads{1, 2, 4, 8};
  auto* scale_c = app.add_subcommand("scale", "Measure screening and search scaling");
  scale_c->add_option("--case", scale_case, "case file")->required();
  scale_c->add_option("--threads", scale_threads, "worker counts")->delimiter(',');
  scale_c->add_option("--out", scale_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_c) {
      config.heuristic = *ctsgrid::heuristic_from(heuristic);
      config.format = format == "json" ? ctsgrid::ReportFormat::json : ctsgrid::ReportFormat::csv;
      return do_run(config);
    }
    if (*train_c) return do_train(history_dir, variant, model_out);
    return do_scale(scale_case, scale_threads, scale_out);
  } catch (const ctsgrid::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ctsgrid::SemanticError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

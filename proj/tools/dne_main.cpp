#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dne/errors.hpp"
#include "dne/feasibility.hpp"
#include "dne/nccg.hpp"
#include "dne/report.hpp"
#include "dne/system.hpp"

namespace {

using nlohmann::json;

// Bad paths and malformed inputs are usage errors (exit 1).
class UsageError : public dne::Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write file: " + path);
  out << content;
  if (!out) throw UsageError("write failed: " + path);
}

std::string plot_path(const std::string& output) {
  const std::string suffix = ".json";
  if (output.size() > suffix.size() &&
      output.compare(output.size() - suffix.size(), suffix.size(), suffix) == 0)
    return output.substr(0, output.size() - suffix.size()) + ".plot.csv";
  return output + ".plot.csv";
}

struct CommonOptions {
  std::string case_path;
  std::string output;
  std::string config_path;
  int periods = 0;
  std::string enable_qsu = "all";
  std::optional<std::uint64_t> seed;
  bool log_iterations = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("case", opts.case_path, "case file (JSON)")->required();
  cmd->add_option("-o,--output", opts.output, "write the results document here");
  cmd->add_option("--config", opts.config_path, "solver configuration file (JSON)");
  cmd->add_option("--periods", opts.periods, "truncate the horizon to this many periods");
  cmd->add_option("--enable-qsu", opts.enable_qsu,
                  "quick-start units adjustable for recourse: all, none, or ids");
  cmd->add_option("--seed", opts.seed, "seed for sampling audits and searches");
  cmd->add_flag("--log-iterations", opts.log_iterations,
                "print one JSON line per outer iteration");
}

void apply_config_key(dne::SolverConfig& config, const std::string& key,
                      const json& value) {
  if (key == "eps_feas") config.eps_feas = value.get<double>();
  else if (key == "eps_inner") config.eps_inner = value.get<double>();
  else if (key == "outer_iteration_cap") config.outer_iteration_cap = value.get<int>();
  else if (key == "inner_iteration_cap") config.inner_iteration_cap = value.get<int>();
  else if (key == "verification_samples") config.verification_samples = value.get<int>();
  else if (key == "seed") config.seed = value.get<std::uint64_t>();
  else if (key == "threads") config.threads = value.get<int>();
  else if (key == "milp_node_limit") config.milp_node_limit = value.get<long>();
  else if (key == "sigma") {
    std::vector<Eigen::VectorXd> sigma;
    for (const json& row : value) {
      Eigen::VectorXd s(row.size());
      for (size_t f = 0; f < row.size(); ++f) s[f] = row[f].get<double>();
      sigma.push_back(std::move(s));
    }
    config.sigma_override = std::move(sigma);
  } else if (key == "lp") {
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (it.key() == "feas_tol") config.lp.feas_tol = it.value().get<double>();
      else if (it.key() == "opt_tol") config.lp.opt_tol = it.value().get<double>();
      else if (it.key() == "max_iterations") config.lp.max_iterations = it.value().get<int>();
      else if (it.key() == "refactor_interval") config.lp.refactor_interval = it.value().get<int>();
      else if (it.key() == "pivot_rule") {
        const std::string rule = it.value().get<std::string>();
        if (rule == "bland") config.lp.pivot_rule = dne::PivotRule::kBland;
        else if (rule == "dantzig") config.lp.pivot_rule = dne::PivotRule::kDantzigBlandGuard;
        else throw UsageError("config: pivot_rule must be bland or dantzig");
      } else {
        throw UsageError("config: unknown key lp." + it.key());
      }
    }
  } else {
    throw UsageError("config: unknown key \"" + key + "\"");
  }
}

dne::SolverConfig make_config(const CommonOptions& opts, const dne::SystemCase& c) {
  dne::SolverConfig config;
  if (!opts.config_path.empty()) {
    json doc;
    try {
      doc = json::parse(read_file(opts.config_path));
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    if (!doc.is_object()) throw UsageError("config file: top level must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
      apply_config_key(config, it.key(), it.value());
  }
  if (opts.seed) config.seed = *opts.seed;

  if (opts.enable_qsu == "all") {
    config.enabled_qsu_ids.reset();
  } else if (opts.enable_qsu == "none") {
    config.enabled_qsu_ids = std::vector<int>{};
  } else {
    std::vector<int> ids;
    std::istringstream in(opts.enable_qsu);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      try {
        size_t pos = 0;
        ids.push_back(std::stoi(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw UsageError("--enable-qsu: expected all, none, or comma-separated ids");
      }
    }
    if (ids.empty())
      throw UsageError("--enable-qsu: expected all, none, or comma-separated ids");
    config.enabled_qsu_ids = std::move(ids);
  }
  (void)c;
  return config;
}

dne::SystemCase load_case_file(const CommonOptions& opts) {
  dne::SystemCase c = dne::load_case(read_file(opts.case_path));
  if (opts.periods > 0) {
    c.truncate_periods(opts.periods);
    c.validate();
  }
  return c;
}

void emit_document(const CommonOptions& opts, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (opts.output.empty())
    std::cout << text;
  else
    write_file(opts.output, text);
}

void emit_iteration_log(const dne::DneSolution& sol) {
  for (const dne::IterationRecord& r : sol.iterations) {
    json line;
    line["k"] = r.k;
    line["mp_objective"] = r.mp_objective;
    line["q"] = r.q;
    line["vertex"] =
        std::vector<double>(r.vertex.data(), r.vertex.data() + r.vertex.size());
    std::cout << line.dump() << "\n";
  }
}

int run_solve(const CommonOptions& opts) {
  const dne::SystemCase c = load_case_file(opts);
  const dne::SolverConfig config = make_config(opts, c);
  const dne::DneSolution sol = dne::solve_dne(c, config);
  if (opts.log_iterations) emit_iteration_log(sol);
  const json doc = dne::solution_to_json(sol, c, dne::qsu_label(sol.enabled_qsu_ids, c));
  emit_document(opts, doc);
  if (!opts.output.empty())
    write_file(plot_path(opts.output),
               dne::emit_plot_csv(doc, dne::PlotKind::kBands));
  return 0;
}

int run_ded(const CommonOptions& opts) {
  const dne::SystemCase c = load_case_file(opts);
  const dne::DedResult ded = dne::solve_ded(c);
  emit_document(opts, dne::ded_to_json(ded, c));
  return 0;
}

int run_single(const CommonOptions& opts) {
  const dne::SystemCase c = load_case_file(opts);
  const dne::SolverConfig config = make_config(opts, c);
  std::vector<dne::DneSolution> sols;
  for (int t = 1; t <= c.num_periods(); ++t) {
    sols.push_back(dne::solve_single_period(c, t, config));
    if (opts.log_iterations) emit_iteration_log(sols.back());
  }
  const std::string label =
      dne::qsu_label(sols.front().enabled_qsu_ids, c) + ":single";
  emit_document(opts, dne::single_solutions_to_json(sols, c, label));
  return 0;
}

int run_check(const CommonOptions& opts, const std::string& trajectory_path) {
  const dne::SystemCase c = load_case_file(opts);
  const dne::SolverConfig config = make_config(opts, c);
  const dne::WindTrajectory traj =
      dne::read_trajectory_csv(read_file(trajectory_path), c);
  const dne::DedResult ded = dne::solve_ded(c);
  const dne::ScenarioCheck check = dne::check_scenario(c, ded.ddp, traj, config);
  json doc;
  doc["kind"] = "scenario_check";
  doc["feasible"] = check.feasible;
  doc["total_slack"] = check.total_slack;
  doc["violated_rows"] = check.violated_rows;
  emit_document(opts, doc);
  return check.feasible ? 0 : 2;
}

int run_compare(const CommonOptions& opts) {
  const dne::SystemCase c = load_case_file(opts);
  const dne::SolverConfig config = make_config(opts, c);

  const dne::DneSolution multi = dne::solve_dne(c, config);
  if (opts.log_iterations) emit_iteration_log(multi);
  std::vector<dne::DneSolution> singles;
  std::vector<dne::DneBox> single_boxes;
  for (int t = 1; t <= c.num_periods(); ++t) {
    singles.push_back(dne::solve_single_period(c, t, config));
    single_boxes.push_back(singles.back().box);
  }

  const auto trajectory =
      dne::find_violating_trajectory(c, single_boxes, multi.box, config);
  std::optional<dne::ScenarioCheck> check;
  if (trajectory) {
    const dne::DedResult ded = dne::solve_ded(c);
    check = dne::check_scenario(c, ded.ddp, *trajectory, config);
  }

  const std::string label = dne::qsu_label(multi.enabled_qsu_ids, c);
  const json doc =
      dne::comparison_to_json(multi, singles, trajectory, check, c, label);
  emit_document(opts, doc);
  if (!opts.output.empty())
    write_file(plot_path(opts.output),
               dne::emit_plot_csv(doc, dne::PlotKind::kComparison));
  return trajectory ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-period do-not-exceed dispatch ranges for wind under "
               "continuous and quick-start recourse"};
  app.require_subcommand(1);

  CommonOptions solve_opts, ded_opts, single_opts, check_opts, compare_opts;
  std::string trajectory_path;

  CLI::App* solve = app.add_subcommand("solve", "multi-period dispatch ranges");
  add_common(solve, solve_opts);
  CLI::App* ded = app.add_subcommand("ded", "dynamic economic dispatch and prices");
  add_common(ded, ded_opts);
  CLI::App* single = app.add_subcommand("single", "single-period ranges per period");
  add_common(single, single_opts);
  CLI::App* check = app.add_subcommand("check", "audit a wind trajectory");
  add_common(check, check_opts);
  check->add_option("--trajectory", trajectory_path, "trajectory CSV")->required();
  CLI::App* compare =
      app.add_subcommand("compare", "multi vs single-period ranges plus a "
                         "violating trajectory search");
  add_common(compare, compare_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (solve->parsed()) return run_solve(solve_opts);
    if (ded->parsed()) return run_ded(ded_opts);
    if (single->parsed()) return run_single(single_opts);
    if (check->parsed()) return run_check(check_opts, trajectory_path);
    if (compare->parsed()) return run_compare(compare_opts);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dne::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dne::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dne::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const dne::SolveError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
}

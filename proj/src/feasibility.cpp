#include "dne/feasibility.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "dne/ded.hpp"
#include "dne/errors.hpp"

namespace dne {

namespace {

constexpr double kSlackReportTol = 1e-7;

std::vector<Eigen::VectorXd> uniform_sigma(const SystemCase& c) {
  const double w = 1.0 / (c.num_farms() * c.num_periods());
  return std::vector<Eigen::VectorXd>(
      c.num_periods(), Eigen::VectorXd::Constant(c.num_farms(), w));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Eigen::VectorXd WindTrajectory::flat() const {
  Eigen::VectorXd v(mw.size());
  for (int t = 0; t < num_periods(); ++t)
    for (int f = 0; f < num_farms(); ++f) v[t * num_farms() + f] = mw(f, t);
  return v;
}

ScenarioCheck check_scenario(const SystemCase& c, const Eigen::MatrixXd& ddp,
                             const WindTrajectory& trajectory,
                             const SolverConfig& config) {
  c.validate();
  if (trajectory.num_farms() != c.num_farms() ||
      trajectory.num_periods() != c.num_periods())
    throw ValidationError("check_scenario: trajectory must be farms x periods");

  const RecourseOptions options = config.recourse_options(c);
  DedResult ded;
  ded.ddp = ddp;
  const StackedSystem sys =
      build_stacked_system(c, ded, uniform_sigma(c), options);

  const RecourseEval eval = recourse_at(sys, trajectory.flat(), config);
  ScenarioCheck out;
  out.total_slack = eval.q;
  out.feasible = eval.q <= config.eps_feas;
  if (!out.feasible)
    for (int i = 0; i < sys.num_rows(); ++i)
      if (eval.slack[i] > kSlackReportTol)
        out.violated_rows.push_back(sys.row_refs[i].label);
  return out;
}

std::optional<WindTrajectory> find_violating_trajectory(
    const SystemCase& c, const std::vector<DneBox>& single_boxes,
    const DneBox& multi_box, const SolverConfig& config) {
  c.validate();
  const int nf = c.num_farms();
  const int nt = c.num_periods();
  const int n = nf * nt;
  if (static_cast<int>(single_boxes.size()) != nt)
    throw ValidationError("find_violating_trajectory: one box per period required");
  for (const DneBox& b : single_boxes)
    if (b.size() != nf)
      throw ValidationError("find_violating_trajectory: single box size mismatch");
  if (multi_box.size() != n)
    throw ValidationError("find_violating_trajectory: multi box size mismatch");

  const DedResult ded = solve_ded(c);

  auto component_bounds = [&](int j) {
    const int t = j / nf, f = j % nf;
    return std::pair<double, double>(single_boxes[t].lower[f],
                                     single_boxes[t].upper[f]);
  };
  auto outside_multi = [&](const Eigen::VectorXd& w) {
    for (int j = 0; j < n; ++j)
      if (w[j] < multi_box.lower[j] - 1e-9 || w[j] > multi_box.upper[j] + 1e-9)
        return true;
    return false;
  };
  auto to_trajectory = [&](const Eigen::VectorXd& w) {
    WindTrajectory traj;
    traj.mw.resize(nf, nt);
    for (int t = 0; t < nt; ++t)
      for (int f = 0; f < nf; ++f) traj.mw(f, t) = w[t * nf + f];
    return traj;
  };
  auto certified_infeasible = [&](const WindTrajectory& traj) {
    return !check_scenario(c, ded.ddp, traj, config).feasible;
  };

  std::optional<WindTrajectory> fallback;  // outside multi but still feasible
  if (n <= 12) {
    for (long mask = 0; mask < (1L << n); ++mask) {
      Eigen::VectorXd w(n);
      for (int j = 0; j < n; ++j) {
        const auto [lo, hi] = component_bounds(j);
        w[j] = (mask >> j) & 1 ? hi : lo;
      }
      if (!outside_multi(w)) continue;
      WindTrajectory traj = to_trajectory(w);
      if (certified_infeasible(traj)) return traj;
      if (!fallback) fallback = std::move(traj);
    }
    return fallback;
  }

  std::mt19937_64 rng(config.seed);
  constexpr int kAttempts = 500;
  for (int a = 0; a < kAttempts; ++a) {
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j) {
      const auto [lo, hi] = component_bounds(j);
      w[j] = lo + (hi - lo) * uniform01(rng);
    }
    if (!outside_multi(w)) continue;
    WindTrajectory traj = to_trajectory(w);
    if (certified_infeasible(traj)) return traj;
    if (!fallback) fallback = std::move(traj);
  }
  return fallback;
}

WindTrajectory read_trajectory_csv(const std::string& text, const SystemCase& c) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory CSV: empty input");
  // Tolerate a trailing carriage return from foreign line endings.
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "period,farm,mw")
    throw ParseError("trajectory CSV: header must be period,farm,mw");

  const int nf = c.num_farms();
  const int nt = c.num_periods();
  WindTrajectory traj;
  traj.mw.resize(nf, nt);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(nf, nt);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 3)
      throw ParseError("trajectory CSV line " + std::to_string(line_no) +
                       ": expected period,farm,mw");
    int period = 0, farm_id = 0;
    double mw = 0.0;
    try {
      period = std::stoi(cells[0]);
      farm_id = std::stoi(cells[1]);
      mw = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw ParseError("trajectory CSV line " + std::to_string(line_no) +
                       ": malformed number");
    }
    if (period < 1 || period > nt)
      throw ParseError("trajectory CSV line " + std::to_string(line_no) +
                       ": period " + std::to_string(period) + " out of range");
    int f = -1;
    for (int i = 0; i < nf; ++i)
      if (c.wind_farms[i].id == farm_id) { f = i; break; }
    if (f < 0)
      throw ParseError("trajectory CSV line " + std::to_string(line_no) +
                       ": unknown farm id " + std::to_string(farm_id));
    traj.mw(f, period - 1) = mw;
    seen(f, period - 1) = 1;
  }
  for (int t = 0; t < nt; ++t)
    for (int f = 0; f < nf; ++f)
      if (!seen(f, t))
        throw ParseError("trajectory CSV: missing entry for period " +
                         std::to_string(t + 1) + ", farm " +
                         std::to_string(c.wind_farms[f].id));
  return traj;
}

std::string write_trajectory_csv(const WindTrajectory& t, const SystemCase& c) {
  if (t.num_farms() != c.num_farms() || t.num_periods() != c.num_periods())
    throw ValidationError("write_trajectory_csv: trajectory does not match case");
  std::string out = "period,farm,mw\n";
  char buf[64];
  for (int p = 0; p < t.num_periods(); ++p)
    for (int f = 0; f < t.num_farms(); ++f) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.6f\n", p + 1, c.wind_farms[f].id,
                    t.mw(f, p));
      out += buf;
    }
  return out;
}

}  // namespace dne

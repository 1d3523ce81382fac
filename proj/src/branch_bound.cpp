#include "dne/branch_bound.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "dne/errors.hpp"

namespace dne {

void MixedIntegerProgram::validate() const {
  lp.validate();
  for (int j : integer_vars) {
    if (j < 0 || j >= lp.num_vars())
      throw ValidationError("MixedIntegerProgram: integer index " +
                            std::to_string(j) + " out of range");
    if (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j]))
      throw ValidationError("MixedIntegerProgram: integer variable " +
                            std::to_string(j) + " needs finite bounds");
  }
}

namespace {

struct Node {
  long id = 0;
  double bound = 0.0;  // parent LP objective until explored
  // Tightened bounds on integer variables, relative to the root.
  std::vector<std::pair<int, double>> lower_changes;
  std::vector<std::pair<int, double>> upper_changes;
};

// Ordering: better bound first, ties by lowest node id.
struct NodeOrder {
  bool maximize;
  bool operator()(const Node& a, const Node& b) const {
    const double sa = maximize ? a.bound : -a.bound;
    const double sb = maximize ? b.bound : -b.bound;
    if (sa != sb) return sa < sb;  // priority_queue: top = "largest"
    return a.id > b.id;
  }
};

bool point_feasible(const MixedIntegerProgram& mip, const Eigen::VectorXd& x,
                    double int_tol) {
  const LinearProgram& lp = mip.lp;
  if (x.size() != lp.num_vars()) return false;
  for (int j = 0; j < lp.num_vars(); ++j)
    if (x[j] < lp.lower[j] - 1e-9 || x[j] > lp.upper[j] + 1e-9) return false;
  for (int j : mip.integer_vars)
    if (std::abs(x[j] - std::round(x[j])) > int_tol) return false;
  Eigen::VectorXd ax = lp.rows * x;
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double diff = ax[i] - lp.rhs[i];
    switch (lp.relations[i]) {
      case Relation::kLe: if (diff > 1e-7) return false; break;
      case Relation::kGe: if (diff < -1e-7) return false; break;
      case Relation::kEq: if (std::abs(diff) > 1e-7) return false; break;
    }
  }
  return true;
}

}  // namespace

MipSolution solve_milp(const MixedIntegerProgram& mip, const MipConfig& config) {
  mip.validate();
  const bool maximize = mip.lp.sense == Sense::kMaximize;
  const double sign = maximize ? 1.0 : -1.0;  // scores are sign*objective

  bool have_incumbent = false;
  double incumbent_score = -kInf;
  Eigen::VectorXd incumbent;

  for (const Eigen::VectorXd& cand : config.warm_candidates) {
    if (!point_feasible(mip, cand, config.int_tol)) continue;
    const double score = sign * mip.lp.objective.dot(cand);
    if (score > incumbent_score) {
      incumbent_score = score;
      incumbent = cand;
      have_incumbent = true;
    }
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open(
      NodeOrder{maximize});
  long next_id = 0;
  Node root;
  root.id = next_id++;
  root.bound = maximize ? kInf : -kInf;
  open.push(root);

  long explored = 0;
  std::vector<double> bound_history;
  LinearProgram node_lp = mip.lp;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    const double node_bound_score = sign * node.bound;
    if (have_incumbent && node_bound_score <= incumbent_score + config.gap_tol)
      break;  // best-first: every remaining node is at least as bad
    bound_history.push_back(node.bound);

    if (explored >= config.node_limit)
      throw SolveError("solve_milp: node limit " +
                       std::to_string(config.node_limit) +
                       " exceeded with gap " +
                       std::to_string(node_bound_score -
                                      (have_incumbent ? incumbent_score : -kInf)));
    ++explored;

    node_lp.lower = mip.lp.lower;
    node_lp.upper = mip.lp.upper;
    for (const auto& [j, v] : node.lower_changes) node_lp.lower[j] = std::max(node_lp.lower[j], v);
    for (const auto& [j, v] : node.upper_changes) node_lp.upper[j] = std::min(node_lp.upper[j], v);
    bool crossed = false;
    for (int j : mip.integer_vars)
      if (node_lp.lower[j] > node_lp.upper[j]) { crossed = true; break; }
    if (crossed) continue;

    LpSolution rel = solve_lp(node_lp, config.lp);
    if (rel.status == LpStatus::kInfeasible) continue;
    if (rel.status == LpStatus::kUnbounded)
      throw SolveError("solve_milp: LP relaxation unbounded; integer variables "
                       "must bound the objective");
    const double rel_score = sign * rel.objective;
    if (have_incumbent && rel_score <= incumbent_score + config.gap_tol) continue;

    // Lowest-index fractional integer variable.
    int branch_var = -1;
    for (int j : mip.integer_vars) {
      if (std::abs(rel.primal[j] - std::round(rel.primal[j])) > config.int_tol) {
        branch_var = j;
        break;
      }
    }
    if (branch_var < 0) {
      if (!have_incumbent || rel_score > incumbent_score) {
        have_incumbent = true;
        incumbent_score = rel_score;
        incumbent = rel.primal;
      }
      continue;
    }

    const double frac = rel.primal[branch_var];
    Node down = node;  // down-branch first: lower id, explored first on ties
    down.id = next_id++;
    down.bound = rel.objective;
    down.upper_changes.emplace_back(branch_var, std::floor(frac));
    open.push(down);
    Node up = node;
    up.id = next_id++;
    up.bound = rel.objective;
    up.lower_changes.emplace_back(branch_var, std::ceil(frac));
    open.push(up);
  }

  MipSolution sol;
  sol.nodes = explored;
  sol.bound_history = std::move(bound_history);
  if (!have_incumbent) {
    sol.status = MipStatus::kInfeasible;
    return sol;
  }
  sol.status = MipStatus::kOptimal;
  sol.primal = incumbent;
  for (int j : mip.integer_vars) sol.primal[j] = std::round(sol.primal[j]);
  sol.objective = mip.lp.objective.dot(sol.primal);
  double open_best = -kInf;
  if (!open.empty()) open_best = sign * open.top().bound;
  sol.best_bound = sign * std::max(incumbent_score, open_best);
  return sol;
}

}  // namespace dne

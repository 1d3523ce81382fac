#pragma once

#include <vector>

#include "dne/simplex.hpp"

namespace dne {

/// A linear program plus the indices of variables constrained to integers.
/// Integer variables must carry finite bounds.
struct MixedIntegerProgram {
  LinearProgram lp;
  std::vector<int> integer_vars;

  void validate() const;
};

enum class MipStatus { kOptimal, kInfeasible };

struct MipSolution {
  MipStatus status = MipStatus::kOptimal;
  double objective = 0.0;
  /// Integer components are exactly integral (rounded after the 1e-6 check).
  Eigen::VectorXd primal;
  long nodes = 0;
  double best_bound = 0.0;
  /// Global bound at each node expansion (best-first, so monotone).
  std::vector<double> bound_history;
};

struct MipConfig {
  double gap_tol = 1e-6;      // absolute objective gap at termination
  double int_tol = 1e-6;      // integrality tolerance before exact rounding
  long node_limit = 1000000;  // exceeding it is an error, not infeasibility
  SimplexConfig lp;
  /// Optional caller-supplied points. Each one that is bound-, row-, and
  /// integrality-feasible seeds the incumbent before the search starts; the
  /// tree itself is unchanged, so determinism is preserved.
  std::vector<Eigen::VectorXd> warm_candidates;
};

/// Best-bound branch and bound over the LP kernel. Deterministic: best-bound
/// node selection with ties by lowest node index, branching on the
/// lowest-index fractional variable, down-branch explored first.
MipSolution solve_milp(const MixedIntegerProgram& mip, const MipConfig& config = {});

}  // namespace dne

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dne/branch_bound.hpp"
#include "dne/ded.hpp"
#include "dne/formulation.hpp"
#include "dne/simplex.hpp"
#include "dne/system.hpp"

namespace dne {

struct SolverConfig {
  /// A subproblem value above this counts as a violated dispatch range.
  double eps_feas = 1e-6;
  /// Convergence gap of the inner column-and-constraint loop.
  double eps_inner = 1e-6;
  int outer_iteration_cap = 0;  // 0 = automatic (vertex count of the box)
  int inner_iteration_cap = 50;
  /// Interior points of the returned box re-checked through the recourse
  /// oracle after vertex convergence.
  int verification_samples = 200;
  std::uint64_t seed = 1u;
  int threads = 0;  // 0 = hardware concurrency; audits only
  /// Overrides the LMP-derived objective weights; one vector per period,
  /// sized by farm count. Nonnegative; normalized internally.
  std::optional<std::vector<Eigen::VectorXd>> sigma_override;
  /// Quick-start units whose commitment may change as recourse.
  /// Unset = every quick-start unit in the case.
  std::optional<std::vector<int>> enabled_qsu_ids;
  SimplexConfig lp;
  long milp_node_limit = 1000000;

  void validate() const;
  RecourseOptions recourse_options(const SystemCase& c) const;
};

/// Outer-loop bookkeeping: the scenario set and the bound history.
struct NccgState {
  std::vector<Eigen::VectorXd> scenarios;  // vertices of [0,1]^n
  std::vector<double> mp_history;          // master objectives, non-increasing
  std::vector<double> q_history;           // subproblem values

  int iteration() const { return static_cast<int>(scenarios.size()); }
};

struct RecourseEval {
  double q = 0.0;  // minimal total constraint violation, always >= 0
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  Eigen::VectorXd slack;  // per row
  long milp_nodes = 0;
};

struct SubproblemResult {
  Eigen::VectorXd worst_vertex;  // in {0,1}^n
  double q = 0.0;
  RecourseEval recourse;                    // at the worst vertex
  std::vector<Eigen::VectorXd> candidates;  // integer recourse set Z
  std::vector<Eigen::VectorXd> lambdas;     // one dual vector per candidate
  int inner_iterations = 0;                 // master solves
  double master_eta = 0.0;                  // final inner master value
};

struct MasterResult {
  DneBox box;
  double objective = 0.0;
  /// Recourse copies (x, z) per scenario, in scenario order.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> witnesses;
};

struct IterationRecord {
  int k = 0;
  double mp_objective = 0.0;
  double q = 0.0;
  Eigen::VectorXd vertex;
};

struct Certificate {
  Eigen::VectorXd vertex;
  Eigen::VectorXd x;
  Eigen::VectorXd z;
};

struct AuditSummary {
  int interior_samples = 0;
  double max_q = 0.0;
};

struct DneSolution {
  DneBox box;
  double objective = 0.0;
  Eigen::VectorXd sigma;  // aligned with wind_refs
  std::vector<WindRef> wind_refs;
  std::vector<IterationRecord> iterations;
  std::vector<Certificate> certificates;
  AuditSummary audit;
  std::vector<int> enabled_qsu_ids;
  int restricted_period = 0;  // 0 = full horizon, else the single period
};

/// Minimal total slack of the stacked rows at a fixed wind realization; the
/// exact mixed-integer minimum when commitment recourse exists. `z_hints`
/// are commitment patterns probed first; a pattern reaching zero slack is
/// returned directly (zero is a global minimum since slack cannot be
/// negative), otherwise the full search runs with the best probe seeding the
/// incumbent.
RecourseEval recourse_at(const StackedSystem& sys, const Eigen::VectorXd& wind,
                         const SolverConfig& config = {},
                         const std::vector<Eigen::VectorXd>& z_hints = {});

/// recourse_at at the realization l + (u - l) o v for v in [0,1]^n.
RecourseEval evaluate_recourse(const StackedSystem& sys, const DneBox& box,
                               const Eigen::VectorXd& v,
                               const SolverConfig& config = {},
                               const std::vector<Eigen::VectorXd>& z_hints = {});

/// Master step: widest weighted box subject to one recourse-copy block per
/// accumulated scenario. Throws InfeasibleError when no box at all admits
/// recourse (the forecast itself is infeasible).
MasterResult solve_master(const NccgState& state, const StackedSystem& sys,
                          const DneBox& envelope, const SolverConfig& config);

/// Worst-case search over the box vertices via the dualized max-min-max form,
/// solved by an inner column-and-constraint loop: the master picks a vertex
/// and one bounded dual ray per known integer recourse candidate (products of
/// vertex bits with dual aggregates linearized exactly), the oracle evaluates
/// the true recourse there and contributes a new candidate until the gap
/// closes below eps_inner.
SubproblemResult solve_subproblem(const StackedSystem& sys, const DneBox& box,
                                  const SolverConfig& config);

/// The full pipeline on one stacked system (shared by the multi-period and
/// single-period entries).
DneSolution solve_dne_on_system(const StackedSystem& sys, const DneBox& envelope,
                                const SolverConfig& config);

/// Two-step framework: dispatch at forecast for weights, then alternate
/// master and subproblem until the box is certified, then audit the interior.
DneSolution solve_dne(const SystemCase& c, const SolverConfig& config = {});

/// Restriction to one period: that period's decoupled constraints, plus the
/// initially-anchored coupling rows when period == 1 (for a one-period case
/// this is the whole model, so the result equals solve_dne exactly).
DneSolution solve_single_period(const SystemCase& c, int period,
                                const SolverConfig& config = {});

/// The stacked system solve_dne would use (exposed for audits and tests).
StackedSystem build_stacked_system(const SystemCase& c, const DedResult& ded,
                                   const std::vector<Eigen::VectorXd>& sigma,
                                   const RecourseOptions& options);

}  // namespace dne

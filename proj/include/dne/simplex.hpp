#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace dne {

enum class Sense { kMinimize, kMaximize };
enum class Relation { kLe, kEq, kGe };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// General-form linear program:
///   min/max  objective . x
///   s.t.     rows_i . x  (<= | = | >=)  rhs_i        for every row i
///            lower_j <= x_j <= upper_j               (+-inf allowed)
struct LinearProgram {
  Sense sense = Sense::kMinimize;
  Eigen::VectorXd objective;
  Eigen::SparseMatrix<double> rows;  // m x n, column-major
  std::vector<Relation> relations;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  /// Throws ValidationError on inconsistent dimensions or crossed bounds.
  void validate() const;
};

/// Incremental row-wise builder; keeps formulation code free of triplet noise.
class LpBuilder {
 public:
  explicit LpBuilder(int num_vars, Sense sense = Sense::kMinimize);

  void set_objective(int var, double coeff);
  void set_bounds(int var, double lo, double hi);
  /// Returns the row index.
  int add_row(const std::vector<std::pair<int, double>>& terms, Relation rel,
              double rhs);

  int num_vars() const { return num_vars_; }
  int num_rows() const { return static_cast<int>(rhs_.size()); }

  LinearProgram build() const;

 private:
  int num_vars_;
  Sense sense_;
  Eigen::VectorXd objective_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<Relation> relations_;
  std::vector<double> rhs_;
};

struct LpSolution {
  LpStatus status = LpStatus::kOptimal;
  double objective = 0.0;
  /// Dual objective in the same sense as `objective`; equals it at optimality
  /// up to round-off (strong duality).
  double dual_objective = 0.0;
  Eigen::VectorXd primal;
  /// One multiplier per row in shadow-price convention: duals[i] is the
  /// sensitivity d(objective)/d(rhs[i]) at the optimal basis.
  Eigen::VectorXd duals;
  /// Hash of the optimal basis; identical runs produce identical ids.
  std::uint64_t basis_id = 0;
  int iterations = 0;
  double max_primal_residual = 0.0;
};

enum class PivotRule {
  kBland,              // smallest-index entering variable, always
  kDantzigBlandGuard,  // most-negative reduced cost, Bland after stalling
};

struct SimplexConfig {
  double feas_tol = 1e-8;   // bound/row feasibility tolerance
  double opt_tol = 1e-9;    // reduced-cost tolerance
  int max_iterations = 0;   // 0 = automatic (scales with problem size)
  int refactor_interval = 100;
  PivotRule pivot_rule = PivotRule::kBland;
};

/// Two-phase bounded-variable revised simplex. Deterministic: fixed index
/// order everywhere, Bland's anti-cycling rule by default.
LpSolution solve_lp(const LinearProgram& lp, const SimplexConfig& config = {});

}  // namespace dne

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "dne/system.hpp"

namespace dne {

enum class RowKind {
  kBalanceUpper,  // sum of injections <= demand
  kBalanceLower,  // demand <= sum of injections
  kLineForward,
  kLineReverse,
  kUnitMax,
  kUnitMin,
  kRampUp,
  kRampDown,
  kStartLinkLe,   // y_up - y_dn - z_t + z_{t-1} <= 0
  kStartLinkGe,   // the paired reverse inequality
  kStartExclusive,  // y_up + y_dn <= 1
  kStartNonneg,
  kStopNonneg,
  kMinUp,
  kMinDown,
  kStartupCap,
};

struct RowRef {
  RowKind kind;
  int element_id;  // line id, unit id, or 0 for system-wide rows
  int period;      // 1-based; the later period for two-period ramp rows
  std::string label;
};

struct VarRef {
  enum class Kind { kUnitOutput, kStartUp, kStartDown };
  Kind kind;
  int element_id;  // unit id
  int period;      // 1-based
};

struct ZRef {
  int unit_id;
  int period;  // 1-based
};

struct WindRef {
  int farm_id;
  int period;  // 1-based
};

/// Which quick-start units may change commitment as recourse. Units outside
/// the set keep their initial status for the whole horizon.
struct RecourseOptions {
  std::vector<int> enabled_qsu_ids;

  bool is_enabled(int unit_id) const;
  static RecourseOptions all(const SystemCase& c);
  static RecourseOptions none();
};

/// Temporally decoupled constraints of one period: power balance (as an
/// inequality pair), PTDF transmission limits, and unit output limits.
/// Columns cover this period's continuous variables, discrete variables and
/// wind farms only.
struct PeriodBlocks {
  int period = 1;  // 1-based
  Eigen::SparseMatrix<double> x_coeffs;     // rows x local continuous vars
  Eigen::SparseMatrix<double> z_coeffs;     // rows x local commitment vars
  Eigen::SparseMatrix<double> wind_coeffs;  // rows x farms
  Eigen::VectorXd limits;                   // right-hand sides (all rows <=)
  std::vector<RowRef> row_refs;
  std::vector<VarRef> x_refs;
  std::vector<ZRef> z_refs;
  std::vector<double> z_initial;  // initial commitment per local z column
  std::vector<int> farm_ids;      // wind column -> farm id

  int num_rows() const { return static_cast<int>(limits.size()); }
};

/// Temporally coupled constraints: ramp limits, start/stop logic, rolling
/// minimum up/down windows and the startup output cap tie.
struct CouplingBlocks {
  std::vector<Eigen::SparseMatrix<double>> x_coeffs;  // per period: |g| x nx_t
  std::vector<Eigen::SparseMatrix<double>> z_coeffs;  // per period: |g| x nz_t
  Eigen::VectorXd limits;                             // g
  std::vector<RowRef> row_refs;

  int num_rows() const { return static_cast<int>(limits.size()); }
};

/// The whole horizon stacked into single matrices: block-diagonal period rows
/// followed by the coupling rows. Every constraint is a <= row so that the
/// recourse subproblem can attach one slack and one dual multiplier per row.
struct StackedSystem {
  Eigen::SparseMatrix<double> x_coeffs;     // rows x all continuous vars
  Eigen::SparseMatrix<double> z_coeffs;     // rows x all commitment vars
  Eigen::SparseMatrix<double> wind_coeffs;  // rows x (farms * periods)
  Eigen::VectorXd limits;
  Eigen::VectorXd weights;     // objective weights per wind component
  Eigen::VectorXd z_baseline;  // initial commitment per z column

  std::vector<RowRef> row_refs;
  std::vector<VarRef> x_refs;
  std::vector<ZRef> z_refs;
  std::vector<WindRef> wind_refs;

  int num_rows() const { return static_cast<int>(limits.size()); }
  int num_x() const { return static_cast<int>(x_refs.size()); }
  int num_z() const { return static_cast<int>(z_refs.size()); }
  int num_wind() const { return static_cast<int>(wind_refs.size()); }

  /// Row-wise violation  H x + J z + K w - h  (positive entries violate).
  Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& wind) const;

  int wind_index(int farm_id, int period) const;  // period 1-based
};

/// Wind dispatch ranges with the data defining their admissible ordering
/// cap_min <= lower <= forecast <= upper <= cap_max. All vectors are indexed
/// like StackedSystem::wind_refs (period-major).
struct DneBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd forecast;
  Eigen::VectorXd cap_min;
  Eigen::VectorXd cap_max;

  int size() const { return static_cast<int>(lower.size()); }
  /// Throws ValidationError unless the ordering holds componentwise.
  void validate() const;
  /// Snaps entries within `tol` of their admissible interval back onto it;
  /// beyond that, throws.
  void clamp(double tol);

  Eigen::VectorXd realize(const Eigen::VectorXd& v) const;  // l + (u-l).v
};

/// Capacity/forecast envelope of a case in stacked component order.
DneBox full_box(const SystemCase& c);

PeriodBlocks build_period_blocks(const SystemCase& c, const Eigen::MatrixXd& ptdf,
                                 const Eigen::MatrixXd& ddp, int period,
                                 const RecourseOptions& options);

CouplingBlocks build_coupling_blocks(const SystemCase& c,
                                     const RecourseOptions& options);

StackedSystem stack_system(const std::vector<PeriodBlocks>& periods,
                           const CouplingBlocks& coupling,
                           const std::vector<Eigen::VectorXd>& sigma_per_period);

/// Right-hand side h - K (l + (u-l) o v) for a normalized uncertainty point
/// v in [0,1]^n.
Eigen::VectorXd apply_uncertainty(const StackedSystem& sys, const DneBox& box,
                                  const Eigen::VectorXd& v);

}  // namespace dne

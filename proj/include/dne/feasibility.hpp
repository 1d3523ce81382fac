#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dne/formulation.hpp"
#include "dne/nccg.hpp"
#include "dne/system.hpp"

namespace dne {

/// One concrete wind realization over the horizon.
struct WindTrajectory {
  Eigen::MatrixXd mw;  // farms x periods

  int num_farms() const { return static_cast<int>(mw.rows()); }
  int num_periods() const { return static_cast<int>(mw.cols()); }
  /// Period-major flattening matching StackedSystem wind components.
  Eigen::VectorXd flat() const;
};

struct ScenarioCheck {
  bool feasible = false;
  double total_slack = 0.0;
  std::vector<std::string> violated_rows;  // labels of rows carrying slack
};

/// Whether a fixed trajectory admits feasible corrective dispatch, via the
/// recourse oracle at that realization. `ddp` is validated against the case
/// like in the block builders.
ScenarioCheck check_scenario(const SystemCase& c, const Eigen::MatrixXd& ddp,
                             const WindTrajectory& trajectory,
                             const SolverConfig& config = {});

/// Searches for a trajectory inside every single-period box but outside the
/// multi-period box, preferring one whose corrective dispatch is infeasible.
/// Vertex enumeration when the component count is at most 12, otherwise
/// seeded uniform sampling. Returns nothing when the search space is empty.
std::optional<WindTrajectory> find_violating_trajectory(
    const SystemCase& c, const std::vector<DneBox>& single_boxes,
    const DneBox& multi_box, const SolverConfig& config = {});

/// CSV with header period,farm,mw; one row per (period, farm id).
WindTrajectory read_trajectory_csv(const std::string& text, const SystemCase& c);
std::string write_trajectory_csv(const WindTrajectory& t, const SystemCase& c);

}  // namespace dne

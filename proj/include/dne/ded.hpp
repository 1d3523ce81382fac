#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dne/system.hpp"

namespace dne {

/// Dynamic economic dispatch output: desired dispatch points, locational
/// marginal prices, and the total production cost.
struct DedResult {
  Eigen::MatrixXd ddp;  // units x periods, MW
  Eigen::MatrixXd lmp;  // buses x periods, $/MWh
  double total_cost = 0.0;
};

/// Cost-minimal dispatch at forecast wind subject to balance, transmission,
/// unit limits and ramp constraints. Commitments are taken from the case's
/// initial statuses; no unit is started or stopped here.
/// Throws InfeasibleError naming the period when load is not coverable.
DedResult solve_ded(const SystemCase& c);

/// Objective weights proportional to the LMP at each farm's bus, normalized
/// to sum to one. Negative prices clamp to zero; an all-zero profile falls
/// back to uniform weights. One vector per period, sized by farm count.
std::vector<Eigen::VectorXd> sigma_from_lmps(const DedResult& ded,
                                             const SystemCase& c);

}  // namespace dne

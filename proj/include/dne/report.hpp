#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dne/ded.hpp"
#include "dne/feasibility.hpp"
#include "dne/nccg.hpp"
#include "dne/system.hpp"

namespace dne {

/// Label identifying which quick-start units were adjustable, e.g. "qsu:all".
std::string qsu_label(const std::vector<int>& enabled_ids, const SystemCase& c);

nlohmann::json solution_to_json(const DneSolution& sol, const SystemCase& c,
                                const std::string& label);

nlohmann::json ded_to_json(const DedResult& ded, const SystemCase& c);

nlohmann::json single_solutions_to_json(const std::vector<DneSolution>& sols,
                                        const SystemCase& c,
                                        const std::string& label);

nlohmann::json comparison_to_json(const DneSolution& multi,
                                  const std::vector<DneSolution>& singles,
                                  const std::optional<WindTrajectory>& trajectory,
                                  const std::optional<ScenarioCheck>& check,
                                  const SystemCase& c, const std::string& label);

enum class PlotKind { kBands, kComparison };

/// Farm-summed band data for the plots, derived purely from the results
/// document so that re-reading a written file reproduces identical bytes.
/// Bands:       period,case_label,total_lower,total_upper,total_forecast
/// Comparison:  adds single_lower,single_upper,trajectory
std::string emit_plot_csv(const nlohmann::json& results, PlotKind kind);

}  // namespace dne

#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace dne {

struct Bus {
  int id = 0;
  bool is_slack = false;
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per unit, > 0
  double capacity = 0.0;   // MW, > 0
};

enum class UnitStatus { kOn, kOff };

struct ThermalUnit {
  int id = 0;
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_rate = 0.0;      // MW per period
  double marginal_cost = 0.0;  // $/MWh
  bool is_quick_start = false;
  int min_up = 1;              // periods, quick-start units only
  int min_down = 1;
  double startup_limit = 0.0;  // MW cap in the first on-period, QSU only
  UnitStatus initial_status = UnitStatus::kOn;
  double initial_output = 0.0;
};

struct WindFarm {
  int id = 0;
  int bus = 0;
  double w_min = 0.0;            // capacity bounds, applied each period
  double w_max = 0.0;
  std::vector<double> forecast;  // MW, one entry per period
};

struct TimeGrid {
  int n_periods = 1;
  double period_length = 5.0;  // minutes
};

struct SystemCase {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<ThermalUnit> units;
  std::vector<WindFarm> wind_farms;
  std::map<int, std::vector<double>> load;  // bus id -> MW per period
  TimeGrid time_grid;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }
  int num_units() const { return static_cast<int>(units.size()); }
  int num_farms() const { return static_cast<int>(wind_farms.size()); }
  int num_periods() const { return time_grid.n_periods; }

  int bus_index(int bus_id) const;  // position in `buses`, throws if unknown
  int slack_bus_id() const;
  double load_at(int bus_id, int period) const;  // 0 if the bus has no entry
  double total_load(int period) const;

  /// Cross-reference and invariant checks; throws ValidationError.
  void validate() const;

  /// Drops periods beyond `n`, truncating loads and forecasts.
  void truncate_periods(int n);
};

/// Parses and validates a case from JSON text. Unknown keys are rejected.
SystemCase load_case(const std::string& source);

/// Inverse of load_case up to formatting: load_case(serialize_case(c)) == c.
std::string serialize_case(const SystemCase& c);

/// Injection shift factors under the DC model: entry (l, b) is the MW flow on
/// line l per MW injected at bus b and withdrawn at the slack. The slack
/// column is identically zero. Throws on a disconnected network.
Eigen::MatrixXd compute_ptdf(const SystemCase& c);

}  // namespace dne

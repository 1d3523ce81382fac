#include "dne/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dne/errors.hpp"

namespace dne {

using nlohmann::json;

int SystemCase::bus_index(int bus_id) const {
  for (int i = 0; i < num_buses(); ++i)
    if (buses[i].id == bus_id) return i;
  throw ValidationError("unknown bus id " + std::to_string(bus_id));
}

int SystemCase::slack_bus_id() const {
  for (const Bus& b : buses)
    if (b.is_slack) return b.id;
  throw ValidationError("case has no slack bus");
}

double SystemCase::load_at(int bus_id, int period) const {
  auto it = load.find(bus_id);
  if (it == load.end()) return 0.0;
  return it->second.at(period);
}

double SystemCase::total_load(int period) const {
  double total = 0.0;
  for (const auto& [bus, mw] : load) total += mw.at(period);
  return total;
}

void SystemCase::validate() const {
  if (buses.empty()) throw ValidationError("case has no buses");
  if (time_grid.n_periods < 1)
    throw ValidationError("time_grid: n_periods must be >= 1");
  if (!(time_grid.period_length > 0))
    throw ValidationError("time_grid: period_length must be > 0");

  std::set<int> bus_ids;
  int slack_count = 0;
  for (const Bus& b : buses) {
    if (!bus_ids.insert(b.id).second)
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    if (b.is_slack) ++slack_count;
  }
  if (slack_count != 1)
    throw ValidationError("case must have exactly one slack bus, found " +
                          std::to_string(slack_count));

  std::set<int> line_ids;
  for (const Line& l : lines) {
    if (!line_ids.insert(l.id).second)
      throw ValidationError("duplicate line id " + std::to_string(l.id));
    if (!(l.reactance > 0))
      throw ValidationError("line " + std::to_string(l.id) +
                            ": reactance must be > 0");
    if (!(l.capacity > 0))
      throw ValidationError("line " + std::to_string(l.id) +
                            ": capacity must be > 0");
    if (!bus_ids.count(l.from_bus))
      throw ValidationError("line " + std::to_string(l.id) +
                            " references unknown bus " + std::to_string(l.from_bus));
    if (!bus_ids.count(l.to_bus))
      throw ValidationError("line " + std::to_string(l.id) +
                            " references unknown bus " + std::to_string(l.to_bus));
    if (l.from_bus == l.to_bus)
      throw ValidationError("line " + std::to_string(l.id) +
                            ": endpoints must differ");
  }

  std::set<int> unit_ids;
  for (const ThermalUnit& u : units) {
    const std::string tag = "unit " + std::to_string(u.id);
    if (!unit_ids.insert(u.id).second)
      throw ValidationError("duplicate unit id " + std::to_string(u.id));
    if (!bus_ids.count(u.bus))
      throw ValidationError(tag + " references unknown bus " + std::to_string(u.bus));
    if (u.p_min < 0 || u.p_min > u.p_max)
      throw ValidationError(tag + ": requires 0 <= p_min <= p_max");
    if (u.ramp_rate < 0) throw ValidationError(tag + ": ramp_rate must be >= 0");
    if (u.is_quick_start) {
      if (u.min_up < 1 || u.min_down < 1)
        throw ValidationError(tag + ": quick-start min_up/min_down must be >= 1");
      if (u.startup_limit < u.p_min || u.startup_limit > u.p_max)
        throw ValidationError(tag + ": requires p_min <= startup_limit <= p_max");
    }
    if (u.initial_status == UnitStatus::kOff && u.initial_output != 0.0)
      throw ValidationError(tag + ": initial_output must be 0 when initially off");
  }

  std::set<int> farm_ids;
  for (const WindFarm& f : wind_farms) {
    const std::string tag = "wind farm " + std::to_string(f.id);
    if (!farm_ids.insert(f.id).second)
      throw ValidationError("duplicate wind farm id " + std::to_string(f.id));
    if (!bus_ids.count(f.bus))
      throw ValidationError(tag + " references unknown bus " + std::to_string(f.bus));
    if (static_cast<int>(f.forecast.size()) != time_grid.n_periods)
      throw ValidationError(tag + ": forecast must have one entry per period");
    for (int t = 0; t < time_grid.n_periods; ++t) {
      if (f.forecast[t] < f.w_min || f.forecast[t] > f.w_max)
        throw ValidationError(
            tag + ": forecast[" + std::to_string(t + 1) + "] = " +
            std::to_string(f.forecast[t]) +
            " breaks the limit ordering w_min <= l <= forecast <= u <= w_max");
    }
  }

  for (const auto& [bus, mw] : load) {
    if (!bus_ids.count(bus))
      throw ValidationError("load references unknown bus " + std::to_string(bus));
    if (static_cast<int>(mw.size()) != time_grid.n_periods)
      throw ValidationError("load at bus " + std::to_string(bus) +
                            " must have one entry per period");
  }
  for (int t = 0; t < time_grid.n_periods; ++t)
    if (total_load(t) < 0)
      throw ValidationError("total load in period " + std::to_string(t + 1) +
                            " is negative");
}

void SystemCase::truncate_periods(int n) {
  if (n < 1 || n > time_grid.n_periods)
    throw ValidationError("truncate_periods: need 1 <= n <= " +
                          std::to_string(time_grid.n_periods));
  time_grid.n_periods = n;
  for (WindFarm& f : wind_farms) f.forecast.resize(n);
  for (auto& [bus, mw] : load) mw.resize(n);
}

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw ParseError("case file: " + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      parse_fail(where, "unknown key \"" + it.key() + "\"");
}

double require_number(const json& obj, const std::string& where,
                      const std::string& key) {
  if (!obj.contains(key)) parse_fail(where, "missing key \"" + key + "\"");
  if (!obj[key].is_number()) parse_fail(where, "\"" + key + "\" must be a number");
  return obj[key].get<double>();
}

int require_int(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) parse_fail(where, "missing key \"" + key + "\"");
  if (!obj[key].is_number_integer())
    parse_fail(where, "\"" + key + "\" must be an integer");
  return obj[key].get<int>();
}

bool require_bool(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) parse_fail(where, "missing key \"" + key + "\"");
  if (!obj[key].is_boolean()) parse_fail(where, "\"" + key + "\" must be a boolean");
  return obj[key].get<bool>();
}

std::vector<double> require_number_array(const json& obj, const std::string& where,
                                         const std::string& key) {
  if (!obj.contains(key)) parse_fail(where, "missing key \"" + key + "\"");
  if (!obj[key].is_array()) parse_fail(where, "\"" + key + "\" must be an array");
  std::vector<double> out;
  for (const json& v : obj[key]) {
    if (!v.is_number()) parse_fail(where, "\"" + key + "\" must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

SystemCase load_case(const std::string& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("case file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("case file: top level must be an object");
  reject_unknown_keys(doc, "top level",
                      {"buses", "lines", "units", "wind_farms", "load", "time_grid"});
  for (const char* key : {"buses", "lines", "units", "wind_farms", "load", "time_grid"})
    if (!doc.contains(key))
      throw ParseError(std::string("case file: missing top-level key \"") + key + "\"");

  SystemCase c;

  const json& tg = doc["time_grid"];
  reject_unknown_keys(tg, "time_grid", {"n_periods", "period_length"});
  c.time_grid.n_periods = require_int(tg, "time_grid", "n_periods");
  c.time_grid.period_length = require_number(tg, "time_grid", "period_length");

  for (const json& jb : doc["buses"]) {
    const std::string where = "buses[" + std::to_string(c.buses.size()) + "]";
    reject_unknown_keys(jb, where, {"id", "is_slack"});
    Bus b;
    b.id = require_int(jb, where, "id");
    b.is_slack = jb.contains("is_slack") ? require_bool(jb, where, "is_slack") : false;
    c.buses.push_back(b);
  }

  for (const json& jl : doc["lines"]) {
    const std::string where = "lines[" + std::to_string(c.lines.size()) + "]";
    reject_unknown_keys(jl, where, {"id", "from_bus", "to_bus", "reactance", "capacity"});
    Line l;
    l.id = require_int(jl, where, "id");
    l.from_bus = require_int(jl, where, "from_bus");
    l.to_bus = require_int(jl, where, "to_bus");
    l.reactance = require_number(jl, where, "reactance");
    l.capacity = require_number(jl, where, "capacity");
    c.lines.push_back(l);
  }

  for (const json& ju : doc["units"]) {
    const std::string where = "units[" + std::to_string(c.units.size()) + "]";
    reject_unknown_keys(ju, where,
                        {"id", "bus", "p_min", "p_max", "ramp_rate", "marginal_cost",
                         "is_quick_start", "min_up", "min_down", "startup_limit",
                         "initial_status", "initial_output"});
    ThermalUnit u;
    u.id = require_int(ju, where, "id");
    u.bus = require_int(ju, where, "bus");
    u.p_min = require_number(ju, where, "p_min");
    u.p_max = require_number(ju, where, "p_max");
    u.ramp_rate = require_number(ju, where, "ramp_rate");
    u.marginal_cost = require_number(ju, where, "marginal_cost");
    u.is_quick_start = require_bool(ju, where, "is_quick_start");
    if (u.is_quick_start) {
      u.min_up = require_int(ju, where, "min_up");
      u.min_down = require_int(ju, where, "min_down");
      u.startup_limit = require_number(ju, where, "startup_limit");
    } else {
      for (const char* key : {"min_up", "min_down", "startup_limit"})
        if (ju.contains(key))
          parse_fail(where, std::string("\"") + key +
                                "\" applies to quick-start units only");
    }
    if (!ju.contains("initial_status"))
      parse_fail(where, "missing key \"initial_status\"");
    const std::string st = ju["initial_status"].get<std::string>();
    if (st == "on") u.initial_status = UnitStatus::kOn;
    else if (st == "off") u.initial_status = UnitStatus::kOff;
    else parse_fail(where, "initial_status must be \"on\" or \"off\"");
    u.initial_output = require_number(ju, where, "initial_output");
    c.units.push_back(u);
  }

  for (const json& jf : doc["wind_farms"]) {
    const std::string where = "wind_farms[" + std::to_string(c.wind_farms.size()) + "]";
    reject_unknown_keys(jf, where, {"id", "bus", "w_min", "w_max", "forecast"});
    WindFarm f;
    f.id = require_int(jf, where, "id");
    f.bus = require_int(jf, where, "bus");
    f.w_min = require_number(jf, where, "w_min");
    f.w_max = require_number(jf, where, "w_max");
    f.forecast = require_number_array(jf, where, "forecast");
    c.wind_farms.push_back(f);
  }

  if (!doc["load"].is_object())
    throw ParseError("case file: \"load\" must map bus ids to per-period arrays");
  for (auto it = doc["load"].begin(); it != doc["load"].end(); ++it) {
    int bus = 0;
    try {
      size_t pos = 0;
      bus = std::stoi(it.key(), &pos);
      if (pos != it.key().size()) throw std::invalid_argument(it.key());
    } catch (const std::exception&) {
      throw ParseError("case file: load key \"" + it.key() + "\" is not a bus id");
    }
    if (!it.value().is_array())
      throw ParseError("case file: load at bus " + it.key() + " must be an array");
    std::vector<double> mw;
    for (const json& v : it.value()) mw.push_back(v.get<double>());
    c.load[bus] = std::move(mw);
  }

  c.validate();
  return c;
}

std::string serialize_case(const SystemCase& c) {
  json doc;
  doc["time_grid"] = {{"n_periods", c.time_grid.n_periods},
                      {"period_length", c.time_grid.period_length}};
  doc["buses"] = json::array();
  for (const Bus& b : c.buses)
    doc["buses"].push_back({{"id", b.id}, {"is_slack", b.is_slack}});
  doc["lines"] = json::array();
  for (const Line& l : c.lines)
    doc["lines"].push_back({{"id", l.id},
                            {"from_bus", l.from_bus},
                            {"to_bus", l.to_bus},
                            {"reactance", l.reactance},
                            {"capacity", l.capacity}});
  doc["units"] = json::array();
  for (const ThermalUnit& u : c.units) {
    json ju = {{"id", u.id},
               {"bus", u.bus},
               {"p_min", u.p_min},
               {"p_max", u.p_max},
               {"ramp_rate", u.ramp_rate},
               {"marginal_cost", u.marginal_cost},
               {"is_quick_start", u.is_quick_start},
               {"initial_status", u.initial_status == UnitStatus::kOn ? "on" : "off"},
               {"initial_output", u.initial_output}};
    if (u.is_quick_start) {
      ju["min_up"] = u.min_up;
      ju["min_down"] = u.min_down;
      ju["startup_limit"] = u.startup_limit;
    }
    doc["units"].push_back(ju);
  }
  doc["wind_farms"] = json::array();
  for (const WindFarm& f : c.wind_farms)
    doc["wind_farms"].push_back({{"id", f.id},
                                 {"bus", f.bus},
                                 {"w_min", f.w_min},
                                 {"w_max", f.w_max},
                                 {"forecast", f.forecast}});
  doc["load"] = json::object();
  for (const auto& [bus, mw] : c.load) doc["load"][std::to_string(bus)] = mw;
  return doc.dump(2) + "\n";
}

Eigen::MatrixXd compute_ptdf(const SystemCase& c) {
  const int nb = c.num_buses();
  const int nl = c.num_lines();
  const int slack = c.bus_index(c.slack_bus_id());

  // Connectivity check first so the error names the cause, not the symptom.
  {
    std::vector<std::vector<int>> adj(nb);
    for (const Line& l : c.lines) {
      adj[c.bus_index(l.from_bus)].push_back(c.bus_index(l.to_bus));
      adj[c.bus_index(l.to_bus)].push_back(c.bus_index(l.from_bus));
    }
    std::vector<char> seen(nb, 0);
    std::vector<int> stack{slack};
    seen[slack] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    for (int b = 0; b < nb; ++b)
      if (!seen[b])
        throw ValidationError("network is disconnected: bus " +
                              std::to_string(c.buses[b].id) +
                              " unreachable from the slack");
  }

  // Reduced nodal susceptance system (slack row/column removed).
  std::vector<int> red_index(nb, -1);
  int nr = 0;
  for (int b = 0; b < nb; ++b)
    if (b != slack) red_index[b] = nr++;

  Eigen::MatrixXd b_red = Eigen::MatrixXd::Zero(nr, nr);
  for (const Line& l : c.lines) {
    const double b_line = 1.0 / l.reactance;
    const int i = c.bus_index(l.from_bus);
    const int j = c.bus_index(l.to_bus);
    if (red_index[i] >= 0) b_red(red_index[i], red_index[i]) += b_line;
    if (red_index[j] >= 0) b_red(red_index[j], red_index[j]) += b_line;
    if (red_index[i] >= 0 && red_index[j] >= 0) {
      b_red(red_index[i], red_index[j]) -= b_line;
      b_red(red_index[j], red_index[i]) -= b_line;
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(b_red);
  if (nr > 0 && ldlt.info() != Eigen::Success)
    throw ValidationError("singular susceptance matrix");

  // Angles for a unit injection at each non-slack bus, then line flows.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(nr, nb);
  for (int b = 0; b < nb; ++b) {
    if (b == slack) continue;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nr);
    e[red_index[b]] = 1.0;
    theta.col(b) = ldlt.solve(e);
  }

  Eigen::MatrixXd ptdf = Eigen::MatrixXd::Zero(nl, nb);
  for (int k = 0; k < nl; ++k) {
    const Line& l = c.lines[k];
    const double b_line = 1.0 / l.reactance;
    const int i = c.bus_index(l.from_bus);
    const int j = c.bus_index(l.to_bus);
    for (int b = 0; b < nb; ++b) {
      if (b == slack) continue;
      const double ti = red_index[i] >= 0 ? theta(red_index[i], b) : 0.0;
      const double tj = red_index[j] >= 0 ? theta(red_index[j], b) : 0.0;
      ptdf(k, b) = b_line * (ti - tj);
    }
  }
  return ptdf;
}

}  // namespace dne

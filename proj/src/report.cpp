#include "dne/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "dne/errors.hpp"

namespace dne {

using nlohmann::json;

std::string qsu_label(const std::vector<int>& enabled_ids, const SystemCase& c) {
  std::vector<int> all;
  for (const ThermalUnit& u : c.units)
    if (u.is_quick_start) all.push_back(u.id);
  std::sort(all.begin(), all.end());
  std::vector<int> ids = enabled_ids;
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) return "qsu:none";
  if (ids == all) return "qsu:all";
  std::string out = "qsu:";
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(ids[i]);
  }
  return out;
}

json solution_to_json(const DneSolution& sol, const SystemCase& c,
                      const std::string& label) {
  json doc;
  doc["kind"] = "dne_solution";
  doc["label"] = label;
  doc["objective"] = sol.objective;
  doc["enabled_qsus"] = sol.enabled_qsu_ids;

  // The periods this solution covers, in stacked component order.
  std::vector<int> periods;
  for (const WindRef& w : sol.wind_refs)
    if (periods.empty() || periods.back() != w.period) periods.push_back(w.period);
  doc["periods"] = periods;

  json farms = json::array();
  for (const WindFarm& farm : c.wind_farms) {
    json jf;
    jf["id"] = farm.id;
    jf["bus"] = farm.bus;
    jf["w_min"] = farm.w_min;
    jf["w_max"] = farm.w_max;
    std::vector<double> lower, upper, forecast, sigma;
    for (int i = 0; i < static_cast<int>(sol.wind_refs.size()); ++i) {
      if (sol.wind_refs[i].farm_id != farm.id) continue;
      lower.push_back(sol.box.lower[i]);
      upper.push_back(sol.box.upper[i]);
      forecast.push_back(sol.box.forecast[i]);
      sigma.push_back(sol.sigma[i]);
    }
    jf["lower"] = lower;
    jf["upper"] = upper;
    jf["forecast"] = forecast;
    jf["sigma"] = sigma;
    farms.push_back(jf);
  }
  doc["farms"] = farms;

  json iters = json::array();
  for (const IterationRecord& r : sol.iterations) {
    json ji;
    ji["k"] = r.k;
    ji["mp_objective"] = r.mp_objective;
    ji["q"] = r.q;
    std::vector<double> v(r.vertex.data(), r.vertex.data() + r.vertex.size());
    ji["vertex"] = v;
    iters.push_back(ji);
  }
  doc["iterations"] = iters;

  json certs = json::array();
  for (const Certificate& cert : sol.certificates) {
    json jc;
    jc["vertex"] = std::vector<double>(cert.vertex.data(),
                                       cert.vertex.data() + cert.vertex.size());
    jc["x"] = std::vector<double>(cert.x.data(), cert.x.data() + cert.x.size());
    jc["z"] = std::vector<double>(cert.z.data(), cert.z.data() + cert.z.size());
    certs.push_back(jc);
  }
  doc["certificates"] = certs;

  doc["audit"] = {{"interior_samples", sol.audit.interior_samples},
                  {"max_q", sol.audit.max_q}};
  if (sol.restricted_period > 0) doc["restricted_period"] = sol.restricted_period;
  return doc;
}

json ded_to_json(const DedResult& ded, const SystemCase& c) {
  json doc;
  doc["kind"] = "ded_result";
  doc["total_cost"] = ded.total_cost;
  json ddp = json::array();
  for (int u = 0; u < c.num_units(); ++u) {
    std::vector<double> mw(ded.ddp.cols());
    for (int t = 0; t < ded.ddp.cols(); ++t) mw[t] = ded.ddp(u, t);
    ddp.push_back({{"unit", c.units[u].id}, {"mw", mw}});
  }
  doc["ddp"] = ddp;
  json lmp = json::array();
  for (int b = 0; b < c.num_buses(); ++b) {
    std::vector<double> price(ded.lmp.cols());
    for (int t = 0; t < ded.lmp.cols(); ++t) price[t] = ded.lmp(b, t);
    lmp.push_back({{"bus", c.buses[b].id}, {"dollars_per_mwh", price}});
  }
  doc["lmp"] = lmp;
  return doc;
}

json single_solutions_to_json(const std::vector<DneSolution>& sols,
                              const SystemCase& c, const std::string& label) {
  json doc;
  doc["kind"] = "single_period_solutions";
  json arr = json::array();
  for (const DneSolution& s : sols) arr.push_back(solution_to_json(s, c, label));
  doc["solutions"] = arr;
  return doc;
}

json comparison_to_json(const DneSolution& multi,
                        const std::vector<DneSolution>& singles,
                        const std::optional<WindTrajectory>& trajectory,
                        const std::optional<ScenarioCheck>& check,
                        const SystemCase& c, const std::string& label) {
  json doc;
  doc["kind"] = "comparison";
  doc["multi"] = solution_to_json(multi, c, label);
  json arr = json::array();
  for (const DneSolution& s : singles) arr.push_back(solution_to_json(s, c, label));
  doc["single"] = arr;
  if (trajectory) {
    json rows = json::array();
    for (int t = 0; t < trajectory->num_periods(); ++t)
      for (int f = 0; f < trajectory->num_farms(); ++f)
        rows.push_back({{"period", t + 1},
                        {"farm", c.wind_farms[f].id},
                        {"mw", trajectory->mw(f, t)}});
    doc["violating_trajectory"] = {{"rows", rows}};
  } else {
    doc["violating_trajectory"] = nullptr;
  }
  if (check) {
    doc["trajectory_check"] = {{"feasible", check->feasible},
                               {"total_slack", check->total_slack},
                               {"violated_rows", check->violated_rows}};
  } else {
    doc["trajectory_check"] = nullptr;
  }
  return doc;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct BandRow {
  int period = 0;
  double lower = 0.0, upper = 0.0, forecast = 0.0;
};

// Farm-summed totals per period from a dne_solution document.
std::map<int, BandRow> totals_from_solution(const json& sol) {
  if (!sol.is_object() || sol.value("kind", "") != "dne_solution")
    throw ValidationError("plot: expected a dne_solution document");
  std::map<int, BandRow> rows;
  const auto& periods = sol.at("periods");
  for (const auto& farm : sol.at("farms")) {
    const auto& lower = farm.at("lower");
    const auto& upper = farm.at("upper");
    const auto& forecast = farm.at("forecast");
    for (size_t i = 0; i < periods.size(); ++i) {
      BandRow& r = rows[periods[i].get<int>()];
      r.period = periods[i].get<int>();
      r.lower += lower.at(i).get<double>();
      r.upper += upper.at(i).get<double>();
      r.forecast += forecast.at(i).get<double>();
    }
  }
  return rows;
}

}  // namespace

std::string emit_plot_csv(const json& results, PlotKind kind) {
  if (kind == PlotKind::kBands) {
    const auto rows = totals_from_solution(results);
    const std::string label = results.at("label").get<std::string>();
    std::string out = "period,case_label,total_lower,total_upper,total_forecast\n";
    for (const auto& [period, r] : rows)
      out += std::to_string(period) + "," + label + "," + fmt(r.lower) + "," +
             fmt(r.upper) + "," + fmt(r.forecast) + "\n";
    return out;
  }

  if (!results.is_object() || results.value("kind", "") != "comparison")
    throw ValidationError("plot: expected a comparison document");
  const auto multi = totals_from_solution(results.at("multi"));
  const std::string label = results.at("multi").at("label").get<std::string>();

  std::map<int, BandRow> single;
  for (const auto& sol : results.at("single"))
    for (const auto& [period, r] : totals_from_solution(sol)) {
      if (single.count(period))
        throw ValidationError("plot: duplicate single-period solution for period " +
                              std::to_string(period));
      single[period] = r;
    }

  std::map<int, double> traj_total;
  if (!results.at("violating_trajectory").is_null())
    for (const auto& row : results.at("violating_trajectory").at("rows"))
      traj_total[row.at("period").get<int>()] += row.at("mw").get<double>();

  std::string out =
      "period,case_label,total_lower,total_upper,total_forecast,"
      "single_lower,single_upper,trajectory\n";
  for (const auto& [period, r] : multi) {
    auto it = single.find(period);
    if (it == single.end())
      throw ValidationError("plot: missing single-period solution for period " +
                            std::to_string(period));
    out += std::to_string(period) + "," + label + "," + fmt(r.lower) + "," +
           fmt(r.upper) + "," + fmt(r.forecast) + "," + fmt(it->second.lower) +
           "," + fmt(it->second.upper) + ",";
    auto tt = traj_total.find(period);
    if (tt != traj_total.end()) out += fmt(tt->second);
    out += "\n";
  }
  return out;
}

}  // namespace dne

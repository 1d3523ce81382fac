#include "dne/ded.hpp"

#include <cmath>
#include <iostream>

#include "dne/errors.hpp"
#include "dne/simplex.hpp"

namespace dne {

DedResult solve_ded(const SystemCase& c) {
  c.validate();
  const int nu = c.num_units();
  const int nt = c.num_periods();
  const int nl = c.num_lines();
  const int nb = c.num_buses();
  const Eigen::MatrixXd ptdf = compute_ptdf(c);

  auto committed = [&](const ThermalUnit& u) {
    return u.initial_status == UnitStatus::kOn;
  };

  // Net demand carried by thermal units (wind fixed at its forecast).
  std::vector<double> net_demand(nt);
  for (int t = 0; t < nt; ++t) {
    double wind = 0.0;
    for (const WindFarm& f : c.wind_farms) wind += f.forecast[t];
    net_demand[t] = c.total_load(t) - wind;
  }
  for (int t = 0; t < nt; ++t) {
    double cap = 0.0;
    for (const ThermalUnit& u : c.units)
      if (committed(u)) cap += u.p_max;
    if (cap < net_demand[t] - 1e-9)
      throw InfeasibleError("dynamic economic dispatch infeasible in period " +
                            std::to_string(t + 1) + ": committed capacity " +
                            std::to_string(cap) + " MW cannot cover net demand " +
                            std::to_string(net_demand[t]) + " MW (shortfall " +
                            std::to_string(net_demand[t] - cap) + " MW)");
  }

  LpBuilder builder(nu * nt, Sense::kMinimize);
  auto xi = [&](int u, int t) { return t * nu + u; };
  for (int t = 0; t < nt; ++t) {
    for (int u = 0; u < nu; ++u) {
      const ThermalUnit& unit = c.units[u];
      builder.set_objective(xi(u, t), unit.marginal_cost);
      if (committed(unit))
        builder.set_bounds(xi(u, t), unit.p_min, unit.p_max);
      else
        builder.set_bounds(xi(u, t), 0.0, 0.0);
    }
  }

  std::vector<int> balance_row(nt);
  std::vector<std::vector<int>> line_fwd_row(nt), line_rev_row(nt);
  for (int t = 0; t < nt; ++t) {
    std::vector<std::pair<int, double>> terms;
    for (int u = 0; u < nu; ++u) terms.emplace_back(xi(u, t), 1.0);
    balance_row[t] = builder.add_row(terms, Relation::kEq, net_demand[t]);

    for (int k = 0; k < nl; ++k) {
      double fixed = 0.0;  // wind minus load injections, scaled by PTDF
      for (int b = 0; b < nb; ++b)
        fixed -= ptdf(k, b) * c.load_at(c.buses[b].id, t);
      for (const WindFarm& f : c.wind_farms)
        fixed += ptdf(k, c.bus_index(f.bus)) * f.forecast[t];
      std::vector<std::pair<int, double>> fwd, rev;
      for (int u = 0; u < nu; ++u) {
        const double coef = ptdf(k, c.bus_index(c.units[u].bus));
        if (coef != 0.0) {
          fwd.emplace_back(xi(u, t), coef);
          rev.emplace_back(xi(u, t), -coef);
        }
      }
      line_fwd_row[t].push_back(
          builder.add_row(fwd, Relation::kLe, c.lines[k].capacity - fixed));
      line_rev_row[t].push_back(
          builder.add_row(rev, Relation::kLe, c.lines[k].capacity + fixed));
    }
  }
  for (int u = 0; u < nu; ++u) {
    const ThermalUnit& unit = c.units[u];
    if (!committed(unit)) continue;
    for (int t = 0; t < nt; ++t) {
      std::vector<std::pair<int, double>> up{{xi(u, t), 1.0}};
      std::vector<std::pair<int, double>> dn{{xi(u, t), -1.0}};
      double base = 0.0;
      if (t > 0) {
        up.emplace_back(xi(u, t - 1), -1.0);
        dn.emplace_back(xi(u, t - 1), 1.0);
      } else {
        base = unit.initial_output;
      }
      builder.add_row(up, Relation::kLe, unit.ramp_rate + base);
      builder.add_row(dn, Relation::kLe, unit.ramp_rate - base);
    }
  }

  const LpSolution sol = solve_lp(builder.build());
  if (sol.status == LpStatus::kInfeasible)
    throw InfeasibleError(
        "dynamic economic dispatch infeasible: no per-period capacity shortfall, "
        "so ramp or transmission coupling binds");
  if (sol.status != LpStatus::kOptimal)
    throw SolveError("dynamic economic dispatch: unexpected LP status");

  DedResult out;
  out.total_cost = sol.objective;
  out.ddp.resize(nu, nt);
  for (int t = 0; t < nt; ++t)
    for (int u = 0; u < nu; ++u) out.ddp(u, t) = sol.primal[xi(u, t)];

  // LMP at a bus: the system marginal price plus the congestion components
  // mapped through the shift factors.
  out.lmp.resize(nb, nt);
  for (int t = 0; t < nt; ++t) {
    const double lambda = sol.duals[balance_row[t]];
    for (int b = 0; b < nb; ++b) {
      double price = lambda;
      for (int k = 0; k < nl; ++k)
        price += ptdf(k, b) * (sol.duals[line_fwd_row[t][k]] -
                               sol.duals[line_rev_row[t][k]]);
      out.lmp(b, t) = price;
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> sigma_from_lmps(const DedResult& ded,
                                             const SystemCase& c) {
  const int nf = c.num_farms();
  const int nt = c.num_periods();
  if (ded.lmp.rows() != c.num_buses() || ded.lmp.cols() != nt)
    throw ValidationError("sigma_from_lmps: LMP matrix does not match the case");

  std::vector<Eigen::VectorXd> sigma(nt, Eigen::VectorXd::Zero(nf));
  bool clamped = false;
  double total = 0.0;
  for (int t = 0; t < nt; ++t) {
    for (int f = 0; f < nf; ++f) {
      double price = ded.lmp(c.bus_index(c.wind_farms[f].bus), t);
      if (price < 0.0) {
        price = 0.0;
        clamped = true;
      }
      sigma[t][f] = price;
      total += price;
    }
  }
  if (clamped)
    std::cerr << "warning: negative locational prices clamped to zero when "
                 "setting objective weights\n";
  if (total <= 0.0) {
    const double uniform = 1.0 / (nf * nt);
    for (int t = 0; t < nt; ++t) sigma[t].setConstant(uniform);
    return sigma;
  }
  for (int t = 0; t < nt; ++t) sigma[t] /= total;
  return sigma;
}

}  // namespace dne

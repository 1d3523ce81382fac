#include "dne/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dne/errors.hpp"

namespace dne {

namespace {

std::string fmt_label(const std::string& name, int element_id, int period) {
  std::string s = name;
  if (element_id != 0) s += "[" + std::to_string(element_id) + "]";
  s += "[t=" + std::to_string(period) + "]";
  return s;
}

// Commitment of a unit that owns no recourse variable: fixed for the horizon.
double fixed_commitment(const ThermalUnit& u) {
  return u.initial_status == UnitStatus::kOn ? 1.0 : 0.0;
}

struct PeriodLayout {
  // Local continuous variables: unit outputs, then start/stop indicators of
  // recourse-enabled quick-start units.
  std::vector<VarRef> x_refs;
  std::vector<ZRef> z_refs;
  std::vector<double> z_initial;
  std::vector<int> unit_output;  // unit position -> local x index
  std::vector<int> start_up;     // unit position -> local x index or -1
  std::vector<int> start_down;
  std::vector<int> commitment;   // unit position -> local z index or -1
};

PeriodLayout make_layout(const SystemCase& c, const RecourseOptions& options,
                         int period) {
  PeriodLayout lay;
  const int nu = c.num_units();
  lay.unit_output.assign(nu, -1);
  lay.start_up.assign(nu, -1);
  lay.start_down.assign(nu, -1);
  lay.commitment.assign(nu, -1);
  for (int u = 0; u < nu; ++u) {
    lay.unit_output[u] = static_cast<int>(lay.x_refs.size());
    lay.x_refs.push_back({VarRef::Kind::kUnitOutput, c.units[u].id, period});
  }
  for (int u = 0; u < nu; ++u) {
    if (!c.units[u].is_quick_start || !options.is_enabled(c.units[u].id)) continue;
    lay.start_up[u] = static_cast<int>(lay.x_refs.size());
    lay.x_refs.push_back({VarRef::Kind::kStartUp, c.units[u].id, period});
    lay.start_down[u] = static_cast<int>(lay.x_refs.size());
    lay.x_refs.push_back({VarRef::Kind::kStartDown, c.units[u].id, period});
    lay.commitment[u] = static_cast<int>(lay.z_refs.size());
    lay.z_refs.push_back({c.units[u].id, period});
    lay.z_initial.push_back(c.units[u].initial_status == UnitStatus::kOn ? 1.0 : 0.0);
  }
  return lay;
}

}  // namespace

bool RecourseOptions::is_enabled(int unit_id) const {
  return std::find(enabled_qsu_ids.begin(), enabled_qsu_ids.end(), unit_id) !=
         enabled_qsu_ids.end();
}

RecourseOptions RecourseOptions::all(const SystemCase& c) {
  RecourseOptions o;
  for (const ThermalUnit& u : c.units)
    if (u.is_quick_start) o.enabled_qsu_ids.push_back(u.id);
  return o;
}

RecourseOptions RecourseOptions::none() { return {}; }

void DneBox::validate() const {
  const int n = size();
  if (upper.size() != n || forecast.size() != n || cap_min.size() != n ||
      cap_max.size() != n)
    throw ValidationError("DneBox: component count mismatch");
  for (int i = 0; i < n; ++i) {
    const bool ok = cap_min[i] <= lower[i] && lower[i] <= forecast[i] &&
                    forecast[i] <= upper[i] && upper[i] <= cap_max[i];
    if (!ok)
      throw ValidationError(
          "DneBox: component " + std::to_string(i) +
          " breaks the ordering cap_min <= lower <= forecast <= upper <= cap_max");
  }
}

void DneBox::clamp(double tol) {
  for (int i = 0; i < size(); ++i) {
    auto snap = [&](double v, double lo, double hi) {
      if (v < lo - tol || v > hi + tol)
        throw ValidationError("DneBox: component " + std::to_string(i) +
                              " outside its admissible interval by more than " +
                              std::to_string(tol));
      return std::min(std::max(v, lo), hi);
    };
    lower[i] = snap(lower[i], cap_min[i], forecast[i]);
    upper[i] = snap(upper[i], forecast[i], cap_max[i]);
  }
}

Eigen::VectorXd DneBox::realize(const Eigen::VectorXd& v) const {
  return lower.array() + (upper - lower).array() * v.array();
}

DneBox full_box(const SystemCase& c) {
  const int nf = c.num_farms();
  const int nt = c.num_periods();
  DneBox box;
  box.lower.resize(nf * nt);
  box.upper.resize(nf * nt);
  box.forecast.resize(nf * nt);
  box.cap_min.resize(nf * nt);
  box.cap_max.resize(nf * nt);
  for (int t = 0; t < nt; ++t) {
    for (int f = 0; f < nf; ++f) {
      const int i = t * nf + f;
      const WindFarm& farm = c.wind_farms[f];
      box.cap_min[i] = farm.w_min;
      box.cap_max[i] = farm.w_max;
      box.forecast[i] = farm.forecast[t];
      box.lower[i] = farm.w_min;
      box.upper[i] = farm.w_max;
    }
  }
  box.validate();
  return box;
}

PeriodBlocks build_period_blocks(const SystemCase& c, const Eigen::MatrixXd& ptdf,
                                 const Eigen::MatrixXd& ddp, int period,
                                 const RecourseOptions& options) {
  if (period < 1 || period > c.num_periods())
    throw ValidationError("build_period_blocks: period out of range");
  if (ddp.rows() != c.num_units() || ddp.cols() != c.num_periods())
    throw ValidationError("build_period_blocks: dispatch points must be units x periods");
  if (ptdf.rows() != c.num_lines() || ptdf.cols() != c.num_buses())
    throw ValidationError("build_period_blocks: PTDF must be lines x buses");

  const int t = period - 1;
  const int nu = c.num_units();
  const int nf = c.num_farms();
  const PeriodLayout lay = make_layout(c, options, period);

  PeriodBlocks blocks;
  blocks.period = period;
  blocks.x_refs = lay.x_refs;
  blocks.z_refs = lay.z_refs;
  blocks.z_initial = lay.z_initial;
  for (const WindFarm& f : c.wind_farms) blocks.farm_ids.push_back(f.id);

  std::vector<Eigen::Triplet<double>> ax, az, aw;
  std::vector<double> limits;
  auto add_ref = [&](RowKind kind, int element_id, const std::string& name) {
    blocks.row_refs.push_back({kind, element_id, period, fmt_label(name, element_id, period)});
  };

  // System power balance as an inequality pair.
  const double demand = c.total_load(t);
  {
    const int up = static_cast<int>(limits.size());
    for (int u = 0; u < nu; ++u) ax.emplace_back(up, lay.unit_output[u], 1.0);
    for (int f = 0; f < nf; ++f) aw.emplace_back(up, f, 1.0);
    limits.push_back(demand);
    add_ref(RowKind::kBalanceUpper, 0, "balance_upper");
    const int lo = static_cast<int>(limits.size());
    for (int u = 0; u < nu; ++u) ax.emplace_back(lo, lay.unit_output[u], -1.0);
    for (int f = 0; f < nf; ++f) aw.emplace_back(lo, f, -1.0);
    limits.push_back(-demand);
    add_ref(RowKind::kBalanceLower, 0, "balance_lower");
  }

  // Transmission limits: |PTDF . injections| <= capacity. Loads are constant
  // injections and move to the right-hand side.
  for (int k = 0; k < c.num_lines(); ++k) {
    const Line& line = c.lines[k];
    double load_term = 0.0;
    for (int b = 0; b < c.num_buses(); ++b)
      load_term += ptdf(k, b) * c.load_at(c.buses[b].id, t);
    for (int sign = 0; sign < 2; ++sign) {
      const double s = sign == 0 ? 1.0 : -1.0;
      const int row = static_cast<int>(limits.size());
      for (int u = 0; u < nu; ++u) {
        const double coef = s * ptdf(k, c.bus_index(c.units[u].bus));
        if (coef != 0.0) ax.emplace_back(row, lay.unit_output[u], coef);
      }
      for (int f = 0; f < nf; ++f) {
        const double coef = s * ptdf(k, c.bus_index(c.wind_farms[f].bus));
        if (coef != 0.0) aw.emplace_back(row, f, coef);
      }
      limits.push_back(line.capacity + s * load_term);
      add_ref(sign == 0 ? RowKind::kLineForward : RowKind::kLineReverse, line.id,
              sign == 0 ? "line_fwd" : "line_rev");
    }
  }

  // Unit output limits p_min z <= x <= p_max z. For units without a recourse
  // commitment variable, z is the fixed initial status.
  for (int u = 0; u < nu; ++u) {
    const ThermalUnit& unit = c.units[u];
    const int zi = lay.commitment[u];
    {
      const int row = static_cast<int>(limits.size());
      ax.emplace_back(row, lay.unit_output[u], 1.0);
      if (zi >= 0) {
        az.emplace_back(row, zi, -unit.p_max);
        limits.push_back(0.0);
      } else {
        limits.push_back(unit.p_max * fixed_commitment(unit));
      }
      add_ref(RowKind::kUnitMax, unit.id, "unit_max");
    }
    {
      const int row = static_cast<int>(limits.size());
      ax.emplace_back(row, lay.unit_output[u], -1.0);
      if (zi >= 0) {
        az.emplace_back(row, zi, unit.p_min);
        limits.push_back(0.0);
      } else {
        limits.push_back(-unit.p_min * fixed_commitment(unit));
      }
      add_ref(RowKind::kUnitMin, unit.id, "unit_min");
    }
  }

  const int rows = static_cast<int>(limits.size());
  blocks.x_coeffs.resize(rows, static_cast<int>(lay.x_refs.size()));
  blocks.x_coeffs.setFromTriplets(ax.begin(), ax.end());
  blocks.z_coeffs.resize(rows, static_cast<int>(lay.z_refs.size()));
  blocks.z_coeffs.setFromTriplets(az.begin(), az.end());
  blocks.wind_coeffs.resize(rows, nf);
  blocks.wind_coeffs.setFromTriplets(aw.begin(), aw.end());
  blocks.limits = Eigen::Map<const Eigen::VectorXd>(limits.data(),
                                                    static_cast<long>(limits.size()));
  return blocks;
}

CouplingBlocks build_coupling_blocks(const SystemCase& c,
                                     const RecourseOptions& options) {
  const int nt = c.num_periods();
  const int nu = c.num_units();

  std::vector<PeriodLayout> lay;
  lay.reserve(nt);
  for (int t = 1; t <= nt; ++t) lay.push_back(make_layout(c, options, t));

  CouplingBlocks blocks;
  std::vector<std::vector<Eigen::Triplet<double>>> ex(nt), fz(nt);
  std::vector<double> limits;
  auto add_ref = [&](RowKind kind, int element_id, int period,
                     const std::string& name) {
    blocks.row_refs.push_back({kind, element_id, period, fmt_label(name, element_id, period)});
  };

  // Two-sided ramp limits with x_0 = initial_output.
  for (int u = 0; u < nu; ++u) {
    const ThermalUnit& unit = c.units[u];
    for (int t = 0; t < nt; ++t) {
      const int up = static_cast<int>(limits.size());
      ex[t].emplace_back(up, lay[t].unit_output[u], 1.0);
      if (t > 0) ex[t - 1].emplace_back(up, lay[t - 1].unit_output[u], -1.0);
      limits.push_back(unit.ramp_rate + (t == 0 ? unit.initial_output : 0.0));
      add_ref(RowKind::kRampUp, unit.id, t + 1, "ramp_up");

      const int dn = static_cast<int>(limits.size());
      ex[t].emplace_back(dn, lay[t].unit_output[u], -1.0);
      if (t > 0) ex[t - 1].emplace_back(dn, lay[t - 1].unit_output[u], 1.0);
      limits.push_back(unit.ramp_rate - (t == 0 ? unit.initial_output : 0.0));
      add_ref(RowKind::kRampDown, unit.id, t + 1, "ramp_down");
    }
  }

  // Quick-start commitment logic for recourse-enabled units.
  for (int u = 0; u < nu; ++u) {
    const ThermalUnit& unit = c.units[u];
    if (!unit.is_quick_start || !options.is_enabled(unit.id)) continue;
    const double z_init = fixed_commitment(unit);
    for (int t = 0; t < nt; ++t) {
      const int yu = lay[t].start_up[u];
      const int yd = lay[t].start_down[u];
      const int zt = lay[t].commitment[u];

      // y_up - y_dn = z_t - z_{t-1}, as a <= pair.
      for (int sign = 0; sign < 2; ++sign) {
        const double s = sign == 0 ? 1.0 : -1.0;
        const int row = static_cast<int>(limits.size());
        ex[t].emplace_back(row, yu, s);
        ex[t].emplace_back(row, yd, -s);
        fz[t].emplace_back(row, zt, -s);
        if (t > 0)
          fz[t - 1].emplace_back(row, lay[t - 1].commitment[u], s);
        limits.push_back(t == 0 ? -s * z_init : 0.0);
        add_ref(sign == 0 ? RowKind::kStartLinkLe : RowKind::kStartLinkGe, unit.id,
                t + 1, sign == 0 ? "start_link_le" : "start_link_ge");
      }
      {
        const int row = static_cast<int>(limits.size());
        ex[t].emplace_back(row, yu, 1.0);
        ex[t].emplace_back(row, yd, 1.0);
        limits.push_back(1.0);
        add_ref(RowKind::kStartExclusive, unit.id, t + 1, "start_excl");
      }
      {
        const int row = static_cast<int>(limits.size());
        ex[t].emplace_back(row, yu, -1.0);
        limits.push_back(0.0);
        add_ref(RowKind::kStartNonneg, unit.id, t + 1, "start_nonneg");
      }
      {
        const int row = static_cast<int>(limits.size());
        ex[t].emplace_back(row, yd, -1.0);
        limits.push_back(0.0);
        add_ref(RowKind::kStopNonneg, unit.id, t + 1, "stop_nonneg");
      }
      // Rolling windows: every start within the last min_up periods implies
      // still on; every stop within the last min_down periods implies still off.
      {
        const int row = static_cast<int>(limits.size());
        for (int tau = std::max(0, t - unit.min_up + 1); tau <= t; ++tau)
          ex[tau].emplace_back(row, lay[tau].start_up[u], 1.0);
        fz[t].emplace_back(row, zt, -1.0);
        limits.push_back(0.0);
        add_ref(RowKind::kMinUp, unit.id, t + 1, "min_up");
      }
      {
        const int row = static_cast<int>(limits.size());
        for (int tau = std::max(0, t - unit.min_down + 1); tau <= t; ++tau)
          ex[tau].emplace_back(row, lay[tau].start_down[u], 1.0);
        fz[t].emplace_back(row, zt, 1.0);
        limits.push_back(1.0);
        add_ref(RowKind::kMinDown, unit.id, t + 1, "min_down");
      }
      // First on-period output cap: x <= p_max z - (p_max - startup_limit) y_up.
      {
        const int row = static_cast<int>(limits.size());
        ex[t].emplace_back(row, lay[t].unit_output[u], 1.0);
        ex[t].emplace_back(row, yu, unit.p_max - unit.startup_limit);
        fz[t].emplace_back(row, zt, -unit.p_max);
        limits.push_back(0.0);
        add_ref(RowKind::kStartupCap, unit.id, t + 1, "startup_cap");
      }
    }
  }

  const int rows = static_cast<int>(limits.size());
  blocks.x_coeffs.resize(nt);
  blocks.z_coeffs.resize(nt);
  for (int t = 0; t < nt; ++t) {
    blocks.x_coeffs[t].resize(rows, static_cast<int>(lay[t].x_refs.size()));
    blocks.x_coeffs[t].setFromTriplets(ex[t].begin(), ex[t].end());
    blocks.z_coeffs[t].resize(rows, static_cast<int>(lay[t].z_refs.size()));
    blocks.z_coeffs[t].setFromTriplets(fz[t].begin(), fz[t].end());
  }
  blocks.limits = Eigen::Map<const Eigen::VectorXd>(limits.data(),
                                                    static_cast<long>(limits.size()));
  return blocks;
}

StackedSystem stack_system(const std::vector<PeriodBlocks>& periods,
                           const CouplingBlocks& coupling,
                           const std::vector<Eigen::VectorXd>& sigma_per_period) {
  const int nt = static_cast<int>(periods.size());
  if (nt == 0) throw ValidationError("stack_system: no periods");
  if (static_cast<int>(sigma_per_period.size()) != nt)
    throw ValidationError("stack_system: one sigma vector per period required");
  if (static_cast<int>(coupling.x_coeffs.size()) != nt)
    throw ValidationError("stack_system: coupling blocks cover a different horizon");
  for (int t = 0; t < nt; ++t)
    if (periods[t].period != t + 1)
      throw ValidationError("stack_system: blocks must cover each period exactly once");

  StackedSystem sys;
  std::vector<int> x_offset(nt), z_offset(nt), w_offset(nt);
  int nx = 0, nz = 0, nw = 0, rows = 0;
  for (int t = 0; t < nt; ++t) {
    x_offset[t] = nx;
    z_offset[t] = nz;
    w_offset[t] = nw;
    nx += static_cast<int>(periods[t].x_refs.size());
    nz += static_cast<int>(periods[t].z_refs.size());
    const int nf = static_cast<int>(periods[t].wind_coeffs.cols());
    if (static_cast<int>(sigma_per_period[t].size()) != nf)
      throw ValidationError("stack_system: sigma size mismatch in period " +
                            std::to_string(t + 1));
    nw += nf;
    rows += periods[t].num_rows();
    if (coupling.x_coeffs[t].cols() != periods[t].x_coeffs.cols() ||
        coupling.z_coeffs[t].cols() != periods[t].z_coeffs.cols())
      throw ValidationError("stack_system: coupling column mismatch in period " +
                            std::to_string(t + 1));
  }
  rows += coupling.num_rows();

  sys.limits.resize(rows);
  sys.weights.resize(nw);
  sys.z_baseline.resize(nz);
  std::vector<Eigen::Triplet<double>> hx, jz, kw;
  int row0 = 0;
  for (int t = 0; t < nt; ++t) {
    const PeriodBlocks& p = periods[t];
    for (int k = 0; k < p.x_coeffs.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.x_coeffs, k); it; ++it)
        hx.emplace_back(row0 + it.row(), x_offset[t] + it.col(), it.value());
    for (int k = 0; k < p.z_coeffs.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.z_coeffs, k); it; ++it)
        jz.emplace_back(row0 + it.row(), z_offset[t] + it.col(), it.value());
    for (int k = 0; k < p.wind_coeffs.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.wind_coeffs, k); it; ++it)
        kw.emplace_back(row0 + it.row(), w_offset[t] + it.col(), it.value());
    sys.limits.segment(row0, p.num_rows()) = p.limits;
    for (const RowRef& r : p.row_refs) sys.row_refs.push_back(r);
    for (const VarRef& r : p.x_refs) sys.x_refs.push_back(r);
    for (int q = 0; q < static_cast<int>(p.z_refs.size()); ++q) {
      sys.z_baseline[z_offset[t] + q] = p.z_initial[q];
      sys.z_refs.push_back(p.z_refs[q]);
    }
    const int nf = static_cast<int>(p.wind_coeffs.cols());
    for (int f = 0; f < nf; ++f) {
      sys.weights[w_offset[t] + f] = sigma_per_period[t][f];
      sys.wind_refs.push_back({p.farm_ids[f], t + 1});
    }
    row0 += p.num_rows();
  }
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < coupling.x_coeffs[t].outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(coupling.x_coeffs[t], k); it; ++it)
        hx.emplace_back(row0 + it.row(), x_offset[t] + it.col(), it.value());
    for (int k = 0; k < coupling.z_coeffs[t].outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(coupling.z_coeffs[t], k); it; ++it)
        jz.emplace_back(row0 + it.row(), z_offset[t] + it.col(), it.value());
  }
  sys.limits.segment(row0, coupling.num_rows()) = coupling.limits;
  for (const RowRef& r : coupling.row_refs) sys.row_refs.push_back(r);

  sys.x_coeffs.resize(rows, nx);
  sys.x_coeffs.setFromTriplets(hx.begin(), hx.end());
  sys.z_coeffs.resize(rows, nz);
  sys.z_coeffs.setFromTriplets(jz.begin(), jz.end());
  sys.wind_coeffs.resize(rows, nw);
  sys.wind_coeffs.setFromTriplets(kw.begin(), kw.end());
  return sys;
}

Eigen::VectorXd StackedSystem::residual(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& wind) const {
  if (x.size() != num_x() || z.size() != num_z() || wind.size() != num_wind())
    throw ValidationError("StackedSystem::residual: dimension mismatch");
  Eigen::VectorXd r = -limits;
  r += x_coeffs * x;
  if (num_z() > 0) r += z_coeffs * z;
  r += wind_coeffs * wind;
  return r;
}

int StackedSystem::wind_index(int farm_id, int period) const {
  for (int i = 0; i < num_wind(); ++i)
    if (wind_refs[i].farm_id == farm_id && wind_refs[i].period == period) return i;
  throw ValidationError("StackedSystem: no wind component for farm " +
                        std::to_string(farm_id) + ", period " +
                        std::to_string(period));
}

Eigen::VectorXd apply_uncertainty(const StackedSystem& sys, const DneBox& box,
                                  const Eigen::VectorXd& v) {
  if (v.size() != box.size() || box.size() != sys.num_wind())
    throw ValidationError("apply_uncertainty: dimension mismatch");
  for (int i = 0; i < v.size(); ++i)
    if (v[i] < -1e-12 || v[i] > 1.0 + 1e-12)
      throw ValidationError("apply_uncertainty: v outside the unit box at component " +
                            std::to_string(i));
  return sys.limits - sys.wind_coeffs * box.realize(v);
}

}  // namespace dne

#include "dne/nccg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "dne/errors.hpp"

namespace dne {

namespace {

constexpr double kZeroSlack = 1e-9;  // a probe below this certifies Q = 0

// Uniform double in [0,1) from the top 53 bits; portable across platforms.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool same_integral_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 0.5) return false;
  return true;
}

MipConfig recourse_mip_config(const SolverConfig& config) {
  MipConfig mc;
  mc.gap_tol = 1e-9;
  mc.node_limit = config.milp_node_limit;
  mc.lp = config.lp;
  return mc;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(eps_feas > 0)) throw ValidationError("SolverConfig: eps_feas must be > 0");
  if (!(eps_inner > 0)) throw ValidationError("SolverConfig: eps_inner must be > 0");
  if (outer_iteration_cap < 0 || inner_iteration_cap < 1)
    throw ValidationError("SolverConfig: bad iteration caps");
  if (verification_samples < 0)
    throw ValidationError("SolverConfig: verification_samples must be >= 0");
  if (threads < 0) throw ValidationError("SolverConfig: threads must be >= 0");
}

RecourseOptions SolverConfig::recourse_options(const SystemCase& c) const {
  if (!enabled_qsu_ids) return RecourseOptions::all(c);
  RecourseOptions options;
  std::set<int> seen;
  for (int id : *enabled_qsu_ids) {
    if (!seen.insert(id).second) continue;
    bool found = false;
    for (const ThermalUnit& u : c.units) {
      if (u.id != id) continue;
      if (!u.is_quick_start)
        throw ValidationError("unit " + std::to_string(id) +
                              " is not a quick-start unit");
      found = true;
      break;
    }
    if (!found)
      throw ValidationError("enabled quick-start unit " + std::to_string(id) +
                            " is not in the case");
  }
  options.enabled_qsu_ids.assign(seen.begin(), seen.end());
  return options;
}

// ---------------------------------------------------------------------------
// Recourse oracle: min 1's subject to H x + J z - s <= h - K w, s >= 0.
// ---------------------------------------------------------------------------

namespace {

LinearProgram recourse_lp(const StackedSystem& sys, const Eigen::VectorXd& rhs) {
  const int rows = sys.num_rows();
  const int nx = sys.num_x();
  const int nz = sys.num_z();
  LinearProgram lp;
  lp.sense = Sense::kMinimize;
  const int total = nx + nz + rows;
  lp.objective = Eigen::VectorXd::Zero(total);
  lp.lower = Eigen::VectorXd::Constant(total, -kInf);
  lp.upper = Eigen::VectorXd::Constant(total, kInf);
  for (int q = 0; q < nz; ++q) {
    lp.lower[nx + q] = 0.0;
    lp.upper[nx + q] = 1.0;
  }
  for (int i = 0; i < rows; ++i) {
    lp.objective[nx + nz + i] = 1.0;
    lp.lower[nx + nz + i] = 0.0;
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < nx; ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.x_coeffs, c); it; ++it)
      trip.emplace_back(it.row(), c, it.value());
  for (int q = 0; q < nz; ++q)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.z_coeffs, q); it; ++it)
      trip.emplace_back(it.row(), nx + q, it.value());
  for (int i = 0; i < rows; ++i) trip.emplace_back(i, nx + nz + i, -1.0);
  lp.rows.resize(rows, total);
  lp.rows.setFromTriplets(trip.begin(), trip.end());
  lp.relations.assign(rows, Relation::kLe);
  lp.rhs = rhs;
  return lp;
}

RecourseEval eval_from_primal(const StackedSystem& sys, const Eigen::VectorXd& p,
                              double objective, bool round_z) {
  const int nx = sys.num_x();
  const int nz = sys.num_z();
  RecourseEval ev;
  ev.q = std::max(objective, 0.0);
  ev.x = p.head(nx);
  ev.z = p.segment(nx, nz);
  if (round_z)
    for (int q = 0; q < nz; ++q) ev.z[q] = std::round(ev.z[q]);
  ev.slack = p.tail(sys.num_rows());
  return ev;
}

}  // namespace

RecourseEval recourse_at(const StackedSystem& sys, const Eigen::VectorXd& wind,
                         const SolverConfig& config,
                         const std::vector<Eigen::VectorXd>& z_hints) {
  if (wind.size() != sys.num_wind())
    throw ValidationError("recourse_at: wind vector size mismatch");
  const Eigen::VectorXd rhs = sys.limits - sys.wind_coeffs * wind;
  LinearProgram lp = recourse_lp(sys, rhs);
  const int nx = sys.num_x();
  const int nz = sys.num_z();

  if (nz == 0) {
    LpSolution sol = solve_lp(lp, config.lp);
    if (sol.status != LpStatus::kOptimal)
      throw SolveError("recourse_at: slack minimization must be solvable");
    return eval_from_primal(sys, sol.primal, sol.objective, false);
  }

  // Probe fixed commitment patterns; zero slack at any of them is a global
  // minimum because the objective cannot go below zero.
  std::vector<Eigen::VectorXd> probes{sys.z_baseline};
  for (const Eigen::VectorXd& h : z_hints) {
    if (h.size() != nz) continue;
    bool dup = false;
    for (const Eigen::VectorXd& p : probes)
      if (same_integral_vector(p, h)) { dup = true; break; }
    if (!dup) probes.push_back(h);
  }
  bool have_best = false;
  double best_obj = kInf;
  Eigen::VectorXd best_primal;
  for (const Eigen::VectorXd& pat : probes) {
    for (int q = 0; q < nz; ++q) {
      lp.lower[nx + q] = pat[q];
      lp.upper[nx + q] = pat[q];
    }
    LpSolution sol = solve_lp(lp, config.lp);
    if (sol.status != LpStatus::kOptimal)
      throw SolveError("recourse_at: slack minimization must be solvable");
    if (sol.objective <= kZeroSlack)
      return eval_from_primal(sys, sol.primal, sol.objective, false);
    if (sol.objective < best_obj) {
      best_obj = sol.objective;
      best_primal = sol.primal;
      have_best = true;
    }
  }
  for (int q = 0; q < nz; ++q) {
    lp.lower[nx + q] = 0.0;
    lp.upper[nx + q] = 1.0;
  }

  MixedIntegerProgram mip;
  mip.lp = std::move(lp);
  for (int q = 0; q < nz; ++q) mip.integer_vars.push_back(nx + q);
  MipConfig mc = recourse_mip_config(config);
  if (have_best) mc.warm_candidates.push_back(best_primal);
  MipSolution sol = solve_milp(mip, mc);
  if (sol.status != MipStatus::kOptimal)
    throw SolveError("recourse_at: slack minimization must be solvable");
  RecourseEval ev = eval_from_primal(sys, sol.primal, sol.objective, true);
  ev.milp_nodes = sol.nodes;
  return ev;
}

RecourseEval evaluate_recourse(const StackedSystem& sys, const DneBox& box,
                               const Eigen::VectorXd& v,
                               const SolverConfig& config,
                               const std::vector<Eigen::VectorXd>& z_hints) {
  if (v.size() != box.size())
    throw ValidationError("evaluate_recourse: v size mismatch");
  for (int i = 0; i < v.size(); ++i)
    if (v[i] < -1e-12 || v[i] > 1.0 + 1e-12)
      throw ValidationError("evaluate_recourse: v outside the unit box");
  box.validate();
  return recourse_at(sys, box.realize(v), config, z_hints);
}

// ---------------------------------------------------------------------------
// Master problem: widest weighted box subject to per-scenario recourse copies.
// ---------------------------------------------------------------------------

MasterResult solve_master(const NccgState& state, const StackedSystem& sys,
                          const DneBox& envelope, const SolverConfig& config) {
  envelope.validate();
  const int n = sys.num_wind();
  const int nx = sys.num_x();
  const int nz = sys.num_z();
  const int rows = sys.num_rows();
  const int ns = static_cast<int>(state.scenarios.size());
  if (envelope.size() != n)
    throw ValidationError("solve_master: envelope size mismatch");
  for (const Eigen::VectorXd& v : state.scenarios)
    if (v.size() != n)
      throw ValidationError("solve_master: scenario size mismatch");

  const int total = 2 * n + ns * (nx + nz);
  auto x_col = [&](int k, int c) { return 2 * n + k * (nx + nz) + c; };
  auto z_col = [&](int k, int q) { return 2 * n + k * (nx + nz) + nx + q; };

  LinearProgram lp;
  lp.sense = Sense::kMaximize;
  lp.objective = Eigen::VectorXd::Zero(total);
  lp.lower = Eigen::VectorXd::Constant(total, -kInf);
  lp.upper = Eigen::VectorXd::Constant(total, kInf);
  for (int j = 0; j < n; ++j) {
    lp.objective[j] = -sys.weights[j];
    lp.objective[n + j] = sys.weights[j];
    lp.lower[j] = envelope.cap_min[j];
    lp.upper[j] = envelope.forecast[j];
    lp.lower[n + j] = envelope.forecast[j];
    lp.upper[n + j] = envelope.cap_max[j];
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < ns; ++k) {
    const Eigen::VectorXd& v = state.scenarios[k];
    const int row0 = k * rows;
    for (int c = 0; c < nx; ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.x_coeffs, c); it; ++it)
        trip.emplace_back(row0 + it.row(), x_col(k, c), it.value());
    for (int q = 0; q < nz; ++q) {
      lp.lower[z_col(k, q)] = 0.0;
      lp.upper[z_col(k, q)] = 1.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.z_coeffs, q); it; ++it)
        trip.emplace_back(row0 + it.row(), z_col(k, q), it.value());
    }
    // K [l + (u - l) o v] splits into K(1-v) on l and K v on u per component.
    for (int j = 0; j < n; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.wind_coeffs, j); it; ++it) {
        const double on_l = it.value() * (1.0 - v[j]);
        const double on_u = it.value() * v[j];
        if (on_l != 0.0) trip.emplace_back(row0 + it.row(), j, on_l);
        if (on_u != 0.0) trip.emplace_back(row0 + it.row(), n + j, on_u);
      }
    }
  }
  lp.rows.resize(ns * rows, total);
  lp.rows.setFromTriplets(trip.begin(), trip.end());
  lp.relations.assign(ns * rows, Relation::kLe);
  lp.rhs.resize(ns * rows);
  for (int k = 0; k < ns; ++k) lp.rhs.segment(k * rows, rows) = sys.limits;

  MixedIntegerProgram mip;
  mip.lp = std::move(lp);
  for (int k = 0; k < ns; ++k)
    for (int q = 0; q < nz; ++q) mip.integer_vars.push_back(z_col(k, q));
  MipConfig mc = recourse_mip_config(config);
  MipSolution sol = solve_milp(mip, mc);
  if (sol.status == MipStatus::kInfeasible)
    throw InfeasibleError(
        "master infeasible: no dispatch range admits recourse for the "
        "accumulated scenarios (the forecast itself cannot be covered)");

  MasterResult out;
  out.box = envelope;
  out.box.lower = sol.primal.head(n);
  out.box.upper = sol.primal.segment(n, n);
  out.box.clamp(1e-6);
  out.objective = sys.weights.dot(out.box.upper - out.box.lower);
  for (int k = 0; k < ns; ++k) {
    Eigen::VectorXd xk(nx), zk(nz);
    for (int c = 0; c < nx; ++c) xk[c] = sol.primal[x_col(k, c)];
    for (int q = 0; q < nz; ++q) zk[q] = sol.primal[z_col(k, q)];
    out.witnesses.emplace_back(std::move(xk), std::move(zk));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dualized subproblem master and the inner column-and-constraint loop.
// ---------------------------------------------------------------------------

namespace {

struct SpdMasterResult {
  double eta = 0.0;
  Eigen::VectorXd vertex;
  std::vector<Eigen::VectorXd> lambdas;
};

// max eta s.t. for every candidate m:
//   eta <= lambda^m . (K l - h + J z^m) + sum_j (u_j - l_j) p^m_j,
//   lambda^m in [0,1]^rows,  H' lambda^m = 0,
//   q^m = K' lambda^m,  p^m_j = v_j q^m_j  (exact for binary v_j).
SpdMasterResult solve_spd_master(const StackedSystem& sys, const DneBox& box,
                                 const std::vector<Eigen::VectorXd>& candidates,
                                 const SolverConfig& config) {
  const int n = box.size();
  const int rows = sys.num_rows();
  const int nx = sys.num_x();
  const int nm = static_cast<int>(candidates.size());

  // Aggregate bounds of q_j = (K' lambda)_j over lambda in [0,1]^rows.
  Eigen::VectorXd q_min = Eigen::VectorXd::Zero(n), q_max = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.wind_coeffs, j); it; ++it) {
      if (it.value() < 0) q_min[j] += it.value();
      else q_max[j] += it.value();
    }

  const Eigen::VectorXd width = box.upper - box.lower;
  const Eigen::VectorXd base = sys.wind_coeffs * box.lower - sys.limits;  // K l - h

  const int per_cand = rows + 2 * n;  // lambda, q, p
  const int eta_col = n;
  const int total = n + 1 + nm * per_cand;
  auto lam_col = [&](int m, int i) { return n + 1 + m * per_cand + i; };
  auto q_col = [&](int m, int j) { return n + 1 + m * per_cand + rows + j; };
  auto p_col = [&](int m, int j) { return n + 1 + m * per_cand + rows + n + j; };

  LpBuilder builder(total, Sense::kMaximize);
  builder.set_objective(eta_col, 1.0);
  for (int j = 0; j < n; ++j) builder.set_bounds(j, 0.0, 1.0);
  for (int m = 0; m < nm; ++m) {
    for (int i = 0; i < rows; ++i) builder.set_bounds(lam_col(m, i), 0.0, 1.0);
    for (int j = 0; j < n; ++j) {
      builder.set_bounds(q_col(m, j), q_min[j], q_max[j]);
      builder.set_bounds(p_col(m, j), q_min[j], q_max[j]);
    }
  }

  for (int m = 0; m < nm; ++m) {
    const Eigen::VectorXd& z = candidates[m];
    // Dual feasibility against the continuous columns: H' lambda = 0.
    for (int c = 0; c < nx; ++c) {
      std::vector<std::pair<int, double>> terms;
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.x_coeffs, c); it; ++it)
        terms.emplace_back(lam_col(m, static_cast<int>(it.row())), it.value());
      if (!terms.empty()) builder.add_row(terms, Relation::kEq, 0.0);
    }
    // q_j definition.
    for (int j = 0; j < n; ++j) {
      std::vector<std::pair<int, double>> terms{{q_col(m, j), 1.0}};
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.wind_coeffs, j); it; ++it)
        terms.emplace_back(lam_col(m, static_cast<int>(it.row())), -it.value());
      builder.add_row(terms, Relation::kEq, 0.0);
    }
    // Product linearization p_j = v_j q_j, exact at binary v_j.
    for (int j = 0; j < n; ++j) {
      builder.add_row({{p_col(m, j), 1.0}, {j, -q_max[j]}}, Relation::kLe, 0.0);
      builder.add_row({{p_col(m, j), -1.0}, {j, q_min[j]}}, Relation::kLe, 0.0);
      builder.add_row({{p_col(m, j), 1.0}, {q_col(m, j), -1.0}, {j, -q_min[j]}},
                      Relation::kLe, -q_min[j]);
      builder.add_row({{p_col(m, j), -1.0}, {q_col(m, j), 1.0}, {j, q_max[j]}},
                      Relation::kLe, q_max[j]);
    }
    // The value cut for this candidate.
    std::vector<std::pair<int, double>> cut{{eta_col, 1.0}};
    Eigen::VectorXd lin = base;
    if (sys.num_z() > 0) lin += sys.z_coeffs * z;
    for (int i = 0; i < rows; ++i)
      if (lin[i] != 0.0) cut.emplace_back(lam_col(m, i), -lin[i]);
    for (int j = 0; j < n; ++j)
      if (width[j] != 0.0) cut.emplace_back(p_col(m, j), -width[j]);
    builder.add_row(cut, Relation::kLe, 0.0);
  }

  MixedIntegerProgram mip;
  mip.lp = builder.build();
  for (int j = 0; j < n; ++j) mip.integer_vars.push_back(j);
  MipConfig mc = recourse_mip_config(config);
  MipSolution sol = solve_milp(mip, mc);
  if (sol.status != MipStatus::kOptimal)
    throw SolveError("subproblem master infeasible (internal error)");

  SpdMasterResult out;
  out.eta = sol.objective;
  out.vertex = sol.primal.head(n);
  for (int j = 0; j < n; ++j) out.vertex[j] = std::round(out.vertex[j]);
  for (int m = 0; m < nm; ++m) {
    Eigen::VectorXd lam(rows);
    for (int i = 0; i < rows; ++i) lam[i] = sol.primal[lam_col(m, i)];
    out.lambdas.push_back(std::move(lam));
  }
  return out;
}

}  // namespace

SubproblemResult solve_subproblem(const StackedSystem& sys, const DneBox& box,
                                  const SolverConfig& config) {
  box.validate();
  const int n = box.size();

  // Bootstrap the candidate set with the recourse at the all-upper vertex.
  Eigen::VectorXd v0 = Eigen::VectorXd::Ones(n);
  RecourseEval boot = evaluate_recourse(sys, box, v0, config);
  std::vector<Eigen::VectorXd> candidates{boot.z};

  SubproblemResult out;
  for (int iter = 1; iter <= config.inner_iteration_cap; ++iter) {
    SpdMasterResult master = solve_spd_master(sys, box, candidates, config);
    RecourseEval eval = evaluate_recourse(sys, box, master.vertex, config, candidates);
    out.inner_iterations = iter;
    out.master_eta = master.eta;
    if (master.eta <= eval.q + config.eps_inner) {
      out.worst_vertex = master.vertex;
      out.q = eval.q;
      out.recourse = std::move(eval);
      out.candidates = candidates;
      out.lambdas = master.lambdas;
      return out;
    }
    bool known = false;
    for (const Eigen::VectorXd& z : candidates)
      if (same_integral_vector(z, eval.z)) { known = true; break; }
    if (known)
      throw SolveError(
          "subproblem stalled: repeated recourse candidate with open gap " +
          std::to_string(master.eta - eval.q));
    candidates.push_back(eval.z);
  }
  throw SolveError("subproblem: inner iteration cap " +
                   std::to_string(config.inner_iteration_cap) +
                   " exceeded with gap " + std::to_string(out.master_eta));
}

// ---------------------------------------------------------------------------
// Outer loop.
// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::VectorXd> draw_samples(int count, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(count);
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = uniform01(rng);
    samples.push_back(std::move(v));
  }
  return samples;
}

AuditSummary audit_interior(const StackedSystem& sys, const DneBox& box,
                            const SolverConfig& config,
                            const std::vector<Eigen::VectorXd>& hints) {
  AuditSummary summary;
  summary.interior_samples = config.verification_samples;
  if (config.verification_samples == 0) return summary;
  const auto samples =
      draw_samples(config.verification_samples, box.size(), config.seed);
  std::vector<double> qs(samples.size(), 0.0);

  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(samples.size())));
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](int w) {
    try {
      for (size_t s = w; s < samples.size(); s += threads)
        qs[s] = evaluate_recourse(sys, box, samples[s], config, hints).q;
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  for (size_t s = 0; s < qs.size(); ++s) {
    if (qs[s] > config.eps_feas)
      throw SolveError("interior audit failed: sample " + std::to_string(s) +
                       " inside the returned box has violation " +
                       std::to_string(qs[s]));
    summary.max_q = std::max(summary.max_q, qs[s]);
  }
  return summary;
}

}  // namespace

DneSolution solve_dne_on_system(const StackedSystem& sys, const DneBox& envelope,
                                const SolverConfig& config) {
  config.validate();
  envelope.validate();
  const int n = sys.num_wind();
  if (n == 0) throw ValidationError("solve_dne: the case has no wind farms");

  RecourseEval pre = recourse_at(sys, envelope.forecast, config);
  if (pre.q > config.eps_feas)
    throw InfeasibleError("forecast infeasible: minimal corrective-dispatch "
                          "violation at the forecast is " +
                          std::to_string(pre.q) + " MW");

  const long vertex_count = n >= 20 ? (1L << 20) : (1L << n);
  const long outer_cap = config.outer_iteration_cap > 0
                             ? config.outer_iteration_cap
                             : vertex_count;

  NccgState state;
  DneSolution out;
  while (true) {
    MasterResult master = solve_master(state, sys, envelope, config);
    state.mp_history.push_back(master.objective);
    SubproblemResult sub = solve_subproblem(sys, master.box, config);
    state.q_history.push_back(sub.q);

    IterationRecord rec;
    rec.k = static_cast<int>(state.scenarios.size());
    rec.mp_objective = master.objective;
    rec.q = sub.q;
    rec.vertex = sub.worst_vertex;
    out.iterations.push_back(rec);

    if (sub.q > config.eps_feas) {
      for (const Eigen::VectorXd& v : state.scenarios)
        if (same_integral_vector(v, sub.worst_vertex))
          throw SolveError("outer loop inconsistency: scenario vertex repeated "
                           "with violation " + std::to_string(sub.q));
      state.scenarios.push_back(sub.worst_vertex);
      if (static_cast<long>(state.scenarios.size()) > outer_cap)
        throw SolveError("outer iteration cap " + std::to_string(outer_cap) +
                         " exceeded");
      continue;
    }

    // Certified at the vertices; keep the certificates and audit the interior.
    out.box = master.box;
    out.objective = master.objective;
    out.sigma = sys.weights;
    out.wind_refs = sys.wind_refs;
    for (size_t k = 0; k < state.scenarios.size(); ++k) {
      Certificate cert;
      cert.vertex = state.scenarios[k];
      cert.x = master.witnesses[k].first;
      cert.z = master.witnesses[k].second;
      const Eigen::VectorXd wind = master.box.realize(cert.vertex);
      const double viol = sys.num_rows() == 0
                              ? 0.0
                              : sys.residual(cert.x, cert.z, wind).maxCoeff();
      if (viol > config.eps_feas)
        throw SolveError("certificate for scenario " + std::to_string(k) +
                         " violates the stacked rows by " + std::to_string(viol));
      out.certificates.push_back(std::move(cert));
    }
    std::vector<Eigen::VectorXd> hints;
    for (const auto& w : master.witnesses) hints.push_back(w.second);
    out.audit = audit_interior(sys, master.box, config, hints);
    return out;
  }
}

StackedSystem build_stacked_system(const SystemCase& c, const DedResult& ded,
                                   const std::vector<Eigen::VectorXd>& sigma,
                                   const RecourseOptions& options) {
  const Eigen::MatrixXd ptdf = compute_ptdf(c);
  std::vector<PeriodBlocks> periods;
  for (int t = 1; t <= c.num_periods(); ++t)
    periods.push_back(build_period_blocks(c, ptdf, ded.ddp, t, options));
  const CouplingBlocks coupling = build_coupling_blocks(c, options);
  return stack_system(periods, coupling, sigma);
}

namespace {

std::vector<Eigen::VectorXd> resolve_sigma(const SystemCase& c,
                                           const DedResult& ded,
                                           const SolverConfig& config) {
  if (!config.sigma_override) return sigma_from_lmps(ded, c);
  const auto& given = *config.sigma_override;
  if (static_cast<int>(given.size()) != c.num_periods())
    throw ValidationError("sigma override: one vector per period required");
  double total = 0.0;
  for (const Eigen::VectorXd& s : given) {
    if (s.size() != c.num_farms())
      throw ValidationError("sigma override: one weight per farm required");
    for (int f = 0; f < s.size(); ++f) {
      if (s[f] < 0) throw ValidationError("sigma override: weights must be >= 0");
      total += s[f];
    }
  }
  if (total <= 0) throw ValidationError("sigma override: weights sum to zero");
  std::vector<Eigen::VectorXd> sigma = given;
  for (Eigen::VectorXd& s : sigma) s /= total;
  return sigma;
}

SystemCase restrict_to_period(const SystemCase& c, int period) {
  SystemCase rc = c;
  rc.time_grid.n_periods = 1;
  const int t = period - 1;
  for (size_t f = 0; f < rc.wind_farms.size(); ++f)
    rc.wind_farms[f].forecast = {c.wind_farms[f].forecast[t]};
  for (auto& [bus, mw] : rc.load) mw = {c.load.at(bus)[t]};
  return rc;
}

}  // namespace

DneSolution solve_dne(const SystemCase& c, const SolverConfig& config) {
  c.validate();
  const RecourseOptions options = config.recourse_options(c);
  const DedResult ded = solve_ded(c);
  const std::vector<Eigen::VectorXd> sigma = resolve_sigma(c, ded, config);
  const StackedSystem sys = build_stacked_system(c, ded, sigma, options);
  DneSolution sol = solve_dne_on_system(sys, full_box(c), config);
  sol.enabled_qsu_ids = options.enabled_qsu_ids;
  return sol;
}

DneSolution solve_single_period(const SystemCase& c, int period,
                                const SolverConfig& config) {
  c.validate();
  if (period < 1 || period > c.num_periods())
    throw ValidationError("solve_single_period: period out of range");
  const RecourseOptions options = config.recourse_options(c);
  const DedResult ded = solve_ded(c);
  const std::vector<Eigen::VectorXd> sigma = resolve_sigma(c, ded, config);

  const SystemCase rc = restrict_to_period(c, period);
  const Eigen::MatrixXd ptdf = compute_ptdf(rc);
  const Eigen::MatrixXd ddp_slice = ded.ddp.col(period - 1);
  std::vector<PeriodBlocks> blocks{
      build_period_blocks(rc, ptdf, ddp_slice, 1, options)};

  CouplingBlocks coupling;
  if (period == 1) {
    coupling = build_coupling_blocks(rc, options);
  } else {
    // Later periods keep no coupling rows: nothing ties them to the initial
    // condition once earlier periods are out of the model.
    coupling.limits.resize(0);
    coupling.x_coeffs.emplace_back(0, static_cast<int>(blocks[0].x_refs.size()));
    coupling.z_coeffs.emplace_back(0, static_cast<int>(blocks[0].z_refs.size()));
  }

  const StackedSystem sys =
      stack_system(blocks, coupling, {sigma[period - 1]});
  DneSolution sol = solve_dne_on_system(sys, full_box(rc), config);
  sol.enabled_qsu_ids = options.enabled_qsu_ids;
  sol.restricted_period = period;
  // Report components under their original period index.
  for (WindRef& w : sol.wind_refs) w.period = period;
  return sol;
}

}  // namespace dne

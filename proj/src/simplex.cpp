#include "dne/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dne/errors.hpp"

namespace dne {

void LinearProgram::validate() const {
  const int n = num_vars();
  const int m = num_rows();
  if (rows.rows() != m || rows.cols() != n)
    throw ValidationError("LinearProgram: matrix is " +
                          std::to_string(rows.rows()) + "x" +
                          std::to_string(rows.cols()) + ", expected " +
                          std::to_string(m) + "x" + std::to_string(n));
  if (static_cast<int>(relations.size()) != m)
    throw ValidationError("LinearProgram: relations size mismatch");
  if (lower.size() != n || upper.size() != n)
    throw ValidationError("LinearProgram: bound vector size mismatch");
  for (int j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || std::isnan(objective[j]))
      throw ValidationError("LinearProgram: NaN in variable " + std::to_string(j));
    if (lower[j] > upper[j])
      throw ValidationError("LinearProgram: crossed bounds on variable " +
                            std::to_string(j));
  }
  for (int i = 0; i < m; ++i)
    if (std::isnan(rhs[i]) || std::isinf(rhs[i]))
      throw ValidationError("LinearProgram: bad rhs on row " + std::to_string(i));
}

LpBuilder::LpBuilder(int num_vars, Sense sense)
    : num_vars_(num_vars),
      sense_(sense),
      objective_(Eigen::VectorXd::Zero(num_vars)),
      lower_(Eigen::VectorXd::Constant(num_vars, -kInf)),
      upper_(Eigen::VectorXd::Constant(num_vars, kInf)) {}

void LpBuilder::set_objective(int var, double coeff) { objective_[var] = coeff; }

void LpBuilder::set_bounds(int var, double lo, double hi) {
  lower_[var] = lo;
  upper_[var] = hi;
}

int LpBuilder::add_row(const std::vector<std::pair<int, double>>& terms,
                       Relation rel, double rhs) {
  const int row = static_cast<int>(rhs_.size());
  for (const auto& [var, coeff] : terms) {
    if (var < 0 || var >= num_vars_)
      throw ValidationError("LpBuilder: variable index out of range");
    if (coeff != 0.0) triplets_.emplace_back(row, var, coeff);
  }
  relations_.push_back(rel);
  rhs_.push_back(rhs);
  return row;
}

LinearProgram LpBuilder::build() const {
  LinearProgram lp;
  lp.sense = sense_;
  lp.objective = objective_;
  lp.lower = lower_;
  lp.upper = upper_;
  lp.relations = relations_;
  lp.rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(),
                                             static_cast<long>(rhs_.size()));
  lp.rows.resize(static_cast<int>(rhs_.size()), num_vars_);
  lp.rows.setFromTriplets(triplets_.begin(), triplets_.end());
  lp.validate();
  return lp;
}

namespace {

enum class VarState : unsigned char { kBasic, kAtLower, kAtUpper, kFreeZero };

// Internal minimization workspace over [structurals | slacks | artificials].
// Every row is an equality  A x + s = b  with the slack's bounds carrying the
// relation:  <=  ->  s in [0, inf),   >=  ->  s in (-inf, 0],   =  ->  s = 0.
class SimplexWorkspace {
 public:
  SimplexWorkspace(const LinearProgram& lp, const SimplexConfig& config)
      : lp_(lp), config_(config), m_(lp.num_rows()), ns_(lp.num_vars()) {
    const double flip = lp.sense == Sense::kMaximize ? -1.0 : 1.0;
    cost_.assign(ns_ + m_, 0.0);
    lo_.assign(ns_ + m_, 0.0);
    up_.assign(ns_ + m_, 0.0);
    for (int j = 0; j < ns_; ++j) {
      cost_[j] = flip * lp.objective[j];
      lo_[j] = lp.lower[j];
      up_[j] = lp.upper[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int sj = ns_ + i;
      switch (lp.relations[i]) {
        case Relation::kLe: lo_[sj] = 0.0; up_[sj] = kInf; break;
        case Relation::kGe: lo_[sj] = -kInf; up_[sj] = 0.0; break;
        case Relation::kEq: lo_[sj] = 0.0; up_[sj] = 0.0; break;
      }
    }
  }

  LpSolution run() {
    init_point();
    phase1();
    if (infeasible_) {
      LpSolution sol;
      sol.status = LpStatus::kInfeasible;
      sol.iterations = iterations_;
      return sol;
    }
    phase_ = 2;
    const bool bounded = iterate();
    refactorize();
    return assemble(bounded);
  }

 private:
  int total_vars() const { return ns_ + m_ + static_cast<int>(art_row_.size()); }

  bool is_artificial(int j) const { return j >= ns_ + m_; }

  // Column j of the equality system as (row, coeff) pairs via a callback.
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < ns_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp_.rows, j); it; ++it)
        f(static_cast<int>(it.row()), it.value());
    } else if (j < ns_ + m_) {
      f(j - ns_, 1.0);
    } else {
      const int i = art_row_[j - ns_ - m_];
      f(i, art_sign_[j - ns_ - m_]);
    }
  }

  void init_point() {
    const int nsm = ns_ + m_;
    x_.assign(nsm, 0.0);
    state_.assign(nsm, VarState::kAtLower);
    for (int j = 0; j < ns_; ++j) {
      if (std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
        state_[j] = VarState::kAtLower;
      } else if (std::isfinite(up_[j])) {
        x_[j] = up_[j];
        state_[j] = VarState::kAtUpper;
      } else {
        x_[j] = 0.0;
        state_[j] = VarState::kFreeZero;
      }
    }
    // Row residuals at the crash point (slacks all at zero).
    Eigen::VectorXd r = lp_.rhs;
    for (int j = 0; j < ns_; ++j) {
      if (x_[j] == 0.0) continue;
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp_.rows, j); it; ++it)
        r[it.row()] -= it.value() * x_[j];
    }
    basis_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      const int sj = ns_ + i;
      const bool fits = r[i] >= lo_[sj] && r[i] <= up_[sj];
      if (fits) {
        basis_[i] = sj;
        x_[sj] = r[i];
        state_[sj] = VarState::kBasic;
      } else {
        // Slack parks at the bound nearest the residual; artificial covers it.
        const double parked = r[i] > up_[sj] ? up_[sj] : lo_[sj];
        x_[sj] = parked;
        state_[sj] = parked == lo_[sj] ? VarState::kAtLower : VarState::kAtUpper;
        const double shortfall = r[i] - parked;
        art_row_.push_back(i);
        art_sign_.push_back(shortfall >= 0 ? 1.0 : -1.0);
        cost_.push_back(0.0);
        lo_.push_back(0.0);
        up_.push_back(kInf);
        x_.push_back(std::abs(shortfall));
        state_.push_back(VarState::kBasic);
        basis_[i] = nsm_offset() + static_cast<int>(art_row_.size()) - 1;
      }
    }
    refactorize();
  }

  int nsm_offset() const { return ns_ + m_; }

  void phase1() {
    if (art_row_.empty()) return;  // crash basis already feasible
    phase_ = 1;
    iterate();
    refactorize();
    double infeas = 0.0;
    for (int a = 0; a < static_cast<int>(art_row_.size()); ++a)
      infeas += x_[nsm_offset() + a];
    if (infeas > config_.feas_tol * (1.0 + lp_.rhs.cwiseAbs().maxCoeff())) {
      infeasible_ = true;
      return;
    }
    // Pin artificials at zero; they may linger in the basis degenerately.
    for (int a = 0; a < static_cast<int>(art_row_.size()); ++a) {
      const int j = nsm_offset() + a;
      up_[j] = 0.0;
      if (state_[j] != VarState::kBasic) x_[j] = 0.0;
    }
  }

  double phase_cost(int j) const {
    if (phase_ == 1) return is_artificial(j) ? 1.0 : 0.0;
    return is_artificial(j) ? 0.0 : cost_[j];
  }

  void compute_duals() {
    y_.setZero(m_);
    for (int p = 0; p < m_; ++p) {
      const double cb = phase_cost(basis_[p]);
      if (cb != 0.0) y_.noalias() += cb * binv_.row(p).transpose();
    }
  }

  double reduced_cost(int j) const {
    double d = phase_cost(j);
    for_column(j, [&](int i, double v) { d -= y_[i] * v; });
    return d;
  }

  // Returns false on unbounded (phase 2 only).
  bool iterate() {
    const int n_all = total_vars();
    long max_iters = config_.max_iterations > 0
                         ? config_.max_iterations
                         : 2000 + 200L * (m_ + n_all);
    int degenerate_streak = 0;
    while (true) {
      if (iterations_ >= max_iters)
        throw SolveError("simplex: iteration limit " + std::to_string(max_iters) +
                         " exceeded (m=" + std::to_string(m_) +
                         ", n=" + std::to_string(n_all) + ")");
      compute_duals();
      const bool use_bland = config_.pivot_rule == PivotRule::kBland ||
                             degenerate_streak >= 40;
      int enter = -1;
      int dir = 0;
      double best_score = config_.opt_tol;
      for (int j = 0; j < n_all; ++j) {
        if (state_[j] == VarState::kBasic) continue;
        if (lo_[j] == up_[j]) continue;  // fixed, never enters
        const double d = reduced_cost(j);
        int cand_dir = 0;
        if (state_[j] == VarState::kAtLower && d < -config_.opt_tol) cand_dir = 1;
        else if (state_[j] == VarState::kAtUpper && d > config_.opt_tol) cand_dir = -1;
        else if (state_[j] == VarState::kFreeZero && std::abs(d) > config_.opt_tol)
          cand_dir = d < 0 ? 1 : -1;
        if (cand_dir == 0) continue;
        if (use_bland) { enter = j; dir = cand_dir; break; }
        if (std::abs(d) > best_score) {
          best_score = std::abs(d);
          enter = j;
          dir = cand_dir;
        }
      }
      if (enter < 0) return true;  // optimal for this phase

      // FTRAN: w = Binv * A_enter.
      w_.setZero(m_);
      for_column(enter, [&](int i, double v) { w_.noalias() += v * binv_.col(i); });

      // Bounded-variable ratio test.
      const double kPivTol = 1e-9;
      double theta = kInf;
      int leave_pos = -1;  // basis position, -1 = bound flip
      bool leave_to_lower = true;
      if (std::isfinite(lo_[enter]) && std::isfinite(up_[enter]))
        theta = up_[enter] - lo_[enter];
      for (int p = 0; p < m_; ++p) {
        const int bj = basis_[p];
        const double coef = dir * w_[p];
        double cand = kInf;
        bool to_lower = true;
        if (coef > kPivTol) {
          if (std::isfinite(lo_[bj]))
            cand = std::max(0.0, x_[bj] - lo_[bj]) / coef;
        } else if (coef < -kPivTol) {
          if (std::isfinite(up_[bj])) {
            cand = std::max(0.0, up_[bj] - x_[bj]) / -coef;
            to_lower = false;
          }
        }
        if (cand < theta - 1e-12 ||
            (cand < theta + 1e-12 && leave_pos >= 0 && bj < basis_[leave_pos])) {
          theta = cand;
          leave_pos = p;
          leave_to_lower = to_lower;
        }
      }
      if (!std::isfinite(theta)) {
        if (phase_ == 1)
          throw SolveError("simplex: phase-1 objective unbounded (internal error)");
        return false;  // unbounded
      }
      degenerate_streak = theta <= 1e-11 ? degenerate_streak + 1 : 0;

      // Apply the step.
      const double step = dir * theta;
      if (theta > 0.0) {
        for (int p = 0; p < m_; ++p)
          if (w_[p] != 0.0) x_[basis_[p]] -= step * w_[p];
      }
      if (leave_pos < 0) {
        // Bound flip: the entering variable crosses to its opposite bound.
        x_[enter] = state_[enter] == VarState::kAtLower ? up_[enter] : lo_[enter];
        state_[enter] =
            state_[enter] == VarState::kAtLower ? VarState::kAtUpper : VarState::kAtLower;
      } else {
        const int bj = basis_[leave_pos];
        x_[bj] = leave_to_lower ? lo_[bj] : up_[bj];
        state_[bj] = leave_to_lower ? VarState::kAtLower : VarState::kAtUpper;
        x_[enter] = x_[enter] + step;
        state_[enter] = VarState::kBasic;
        basis_[leave_pos] = enter;
        update_inverse(leave_pos);
      }
      ++iterations_;
      if (iterations_ % config_.refactor_interval == 0) refactorize();
    }
  }

  void update_inverse(int p) {
    const double piv = w_[p];
    if (std::abs(piv) < 1e-11) {
      refactorize();
      return;
    }
    binv_.row(p) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == p) continue;
      const double wi = w_[i];
      if (wi != 0.0) binv_.row(i).noalias() -= wi * binv_.row(p);
    }
  }

  void refactorize() {
    if (m_ == 0) {
      binv_.resize(0, 0);
      return;
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (int p = 0; p < m_; ++p)
      for_column(basis_[p], [&](int i, double v) { b(i, p) = v; });
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    // Permuted inverse applied column-wise keeps the (basis position) layout.
    Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(m_, m_));
    binv_ = inv;
    // Recompute basic values from the nonbasic point for accuracy.
    Eigen::VectorXd r = lp_.rhs;
    const int n_all = total_vars();
    for (int j = 0; j < n_all; ++j) {
      if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
      for_column(j, [&](int i, double v) { r[i] -= v * x_[j]; });
    }
    Eigen::VectorXd xb = binv_ * r;
    for (int p = 0; p < m_; ++p) x_[basis_[p]] = xb[p];
    // Residual check ||B xb - r||_inf flags a (near-)singular basis.
    Eigen::VectorXd bxb = Eigen::VectorXd::Zero(m_);
    for (int p = 0; p < m_; ++p)
      for_column(basis_[p], [&](int i, double v) { bxb[i] += v * xb[p]; });
    const double recon = (bxb - r).cwiseAbs().maxCoeff();
    const double scale = 1.0 + r.cwiseAbs().maxCoeff();
    if (!(recon <= 1e-6 * scale))
      throw SolveError("simplex: numerical breakdown, basis reconstruction "
                       "residual " + std::to_string(recon) +
                       " (rhs scale " + std::to_string(scale) + ")");
  }

  LpSolution assemble(bool bounded) {
    LpSolution sol;
    sol.iterations = iterations_;
    if (!bounded) {
      sol.status = LpStatus::kUnbounded;
      return sol;
    }
    sol.status = LpStatus::kOptimal;
    const double flip = lp_.sense == Sense::kMaximize ? -1.0 : 1.0;
    sol.primal.resize(ns_);
    for (int j = 0; j < ns_; ++j) sol.primal[j] = x_[j];
    sol.objective = lp_.objective.dot(sol.primal);

    compute_duals();  // phase-2 duals at the final basis
    sol.duals.resize(m_);
    for (int i = 0; i < m_; ++i) sol.duals[i] = flip * y_[i];

    // Internal dual objective: y.b plus reduced-cost contributions of the
    // nonbasic variables parked at nonzero bounds.
    double dual_int = y_.size() ? y_.dot(lp_.rhs) : 0.0;
    const int n_all = total_vars();
    for (int j = 0; j < n_all; ++j) {
      if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
      dual_int += reduced_cost(j) * x_[j];
    }
    sol.dual_objective = flip * dual_int;

    sol.max_primal_residual = primal_residual();
    sol.basis_id = hash_basis();
    return sol;
  }

  double primal_residual() const {
    double worst = 0.0;
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < ns_; ++j) {
      if (x_[j] == 0.0) continue;
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp_.rows, j); it; ++it)
        ax[it.row()] += it.value() * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const double diff = ax[i] - lp_.rhs[i];
      switch (lp_.relations[i]) {
        case Relation::kLe: worst = std::max(worst, diff); break;
        case Relation::kGe: worst = std::max(worst, -diff); break;
        case Relation::kEq: worst = std::max(worst, std::abs(diff)); break;
      }
    }
    for (int j = 0; j < ns_; ++j) {
      if (std::isfinite(lo_[j])) worst = std::max(worst, lo_[j] - x_[j]);
      if (std::isfinite(up_[j])) worst = std::max(worst, x_[j] - up_[j]);
    }
    return worst;
  }

  std::uint64_t hash_basis() const {
    std::uint64_t h = 1469598103934665603ull;
    for (int p = 0; p < m_; ++p) {
      std::uint64_t v = static_cast<std::uint64_t>(basis_[p]);
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    }
    return h;
  }

  const LinearProgram& lp_;
  const SimplexConfig& config_;
  int m_;
  int ns_;
  int phase_ = 1;
  bool infeasible_ = false;
  int iterations_ = 0;

  std::vector<double> cost_, lo_, up_, x_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  std::vector<int> art_row_;
  std::vector<double> art_sign_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> binv_;
  Eigen::VectorXd y_, w_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexConfig& config) {
  lp.validate();
  for (int j = 0; j < lp.num_vars(); ++j)
    if (lp.lower[j] > lp.upper[j])
      throw ValidationError("solve_lp: crossed bounds");
  SimplexWorkspace ws(lp, config);
  return ws.run();
}

}  // namespace dne

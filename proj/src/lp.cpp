#include "cqr/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cqr {
namespace {

/// Revised primal simplex specialised for problems whose columns are mostly
/// singletons (one nonzero entry). The basis is split into singleton columns,
/// each owning its row, and a small set of dense columns; only the dense core
/// (a d x d matrix with d = #dense basic columns) is factorized. For the
/// regression LPs built here d stays below a few dozen while the basis itself
/// has thousands of rows, so every solve with the full basis matrix is
/// replaced by a diagonal sweep plus a small dense solve.
class Simplex {
 public:
  Simplex(const LpProblem& problem, const SimplexOptions& options)
      : A_(problem.A), c_(problem.c), rhs_(problem.rhs), opt_(options) {
    if (A_.rows() != rhs_.size() || A_.cols() != c_.size()) {
      throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
    }
    A_.makeCompressed();
    m_ = static_cast<int>(A_.rows());
    n_ = static_cast<int>(A_.cols());
    max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : 200 + 60 * m_;

    single_row_.assign(n_, -1);
    single_val_.assign(n_, 0.0);
    const auto* outer = A_.outerIndexPtr();
    for (int j = 0; j < n_; ++j) {
      if (outer[j + 1] - outer[j] == 1) {
        SparseMatrix::InnerIterator it(A_, j);
        if (std::abs(it.value()) > opt_.pivot_tol) {
          single_row_[j] = static_cast<int>(it.row());
          single_val_[j] = it.value();
        }
      }
    }
  }

  LpSolution run(LpBasis* basis) {
    LpSolution sol;
    if (m_ == 0) {
      sol.x = Vector::Zero(n_);
      sol.duals = Vector(0);
      sol.reduced_costs = c_;
      sol.objective = 0.0;
      sol.status = (n_ == 0 || c_.minCoeff() >= -opt_.optimality_tol) ? LpStatus::optimal
                                                                      : LpStatus::unbounded;
      return sol;
    }

    bool warm = try_warm_start(basis);
    if (!warm) crash_basis();
    const int n_total = n_ + static_cast<int>(art_row_.size());
    cost2_ = Vector::Zero(n_total);
    cost2_.head(n_) = c_;

    if (!factorize()) {
      // A failed warm start can leave a singular basis; rebuild from scratch.
      reset_basis();
      crash_basis();
      cost2_ = Vector::Zero(n_ + static_cast<int>(art_row_.size()));
      cost2_.head(n_) = c_;
      if (!factorize()) throw std::runtime_error("solve_lp: crash basis is singular");
    }
    x_basic_ = ftran(rhs_);

    if (!art_row_.empty()) {
      Vector cost1 = Vector::Zero(cost2_.size());
      cost1.tail(static_cast<int>(art_row_.size())).setOnes();
      const LoopExit exit1 = iterate(cost1);
      if (exit1 == LoopExit::iter_limit) {
        sol.status = LpStatus::iteration_limit;
        sol.iterations = iterations_;
        return sol;
      }
      double infeasibility = 0.0;
      for (int slot = 0; slot < m_; ++slot) {
        if (basic_[slot] >= n_) infeasibility += std::max(x_basic_[slot], 0.0);
      }
      const double scale = 1.0 + rhs_.cwiseAbs().maxCoeff();
      if (infeasibility > opt_.feasibility_tol * scale) {
        sol.status = LpStatus::infeasible;
        sol.iterations = iterations_;
        return sol;
      }
      drive_out_artificials();
    }

    const LoopExit exit2 = iterate(cost2_);
    sol.iterations = iterations_;
    if (exit2 == LoopExit::iter_limit) {
      sol.status = LpStatus::iteration_limit;
      return sol;
    }
    if (exit2 == LoopExit::unbounded) {
      sol.status = LpStatus::unbounded;
      return sol;
    }

    sol.status = LpStatus::optimal;
    sol.x = Vector::Zero(n_);
    for (int slot = 0; slot < m_; ++slot) {
      if (basic_[slot] < n_) sol.x[basic_[slot]] = std::max(x_basic_[slot], 0.0);
    }
    sol.objective = c_.dot(sol.x);
    Vector cb(m_);
    for (int slot = 0; slot < m_; ++slot) cb[slot] = cost2_[basic_[slot]];
    sol.duals = btran(cb);
    sol.reduced_costs.resize(n_);
    for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = c_[j] - column_dot(j, sol.duals);

    if (basis != nullptr &&
        std::all_of(basic_.begin(), basic_.end(), [&](int j) { return j < n_; })) {
      basis->basic_cols = basic_;
    }
    return sol;
  }

 private:
  enum class LoopExit { optimal, unbounded, iter_limit };

  bool is_artificial(int j) const { return j >= n_; }

  template <typename F>
  void for_column(int j, F&& fn) const {
    if (j >= n_) {
      fn(art_row_[j - n_], art_sigma_[j - n_]);
      return;
    }
    for (SparseMatrix::InnerIterator it(A_, j); it; ++it) {
      fn(static_cast<int>(it.row()), it.value());
    }
  }

  double column_dot(int j, const Vector& y) const {
    double acc = 0.0;
    for_column(j, [&](int r, double v) { acc += v * y[r]; });
    return acc;
  }

  int singleton_row(int j) const { return j >= n_ ? art_row_[j - n_] : single_row_[j]; }
  double singleton_val(int j) const { return j >= n_ ? art_sigma_[j - n_] : single_val_[j]; }

  void reset_basis() {
    basic_.clear();
    in_basis_.clear();
    art_row_.clear();
    art_sigma_.clear();
  }

  bool try_warm_start(const LpBasis* basis) {
    if (basis == nullptr || static_cast<int>(basis->basic_cols.size()) != m_) return false;
    in_basis_.assign(n_, 0);
    for (int j : basis->basic_cols) {
      if (j < 0 || j >= n_ || in_basis_[j]) {
        in_basis_.clear();
        return false;
      }
      in_basis_[j] = 1;
    }
    basic_ = basis->basic_cols;
    if (!factorize()) {
      reset_basis();
      return false;
    }
    x_basic_ = ftran(rhs_);
    const double scale = 1.0 + rhs_.cwiseAbs().maxCoeff();
    if (x_basic_.minCoeff() < -opt_.feasibility_tol * scale) {
      reset_basis();
      return false;
    }
    return true;
  }

  /// Start from sign-matched singleton columns; rows no singleton column can
  /// cover feasibly receive an artificial variable (phase 1 removes those).
  void crash_basis() {
    std::vector<std::vector<int>> row_singletons(m_);
    for (int j = 0; j < n_; ++j) {
      if (single_row_[j] >= 0) row_singletons[single_row_[j]].push_back(j);
    }
    basic_.assign(m_, -1);
    in_basis_.assign(n_, 0);
    art_row_.clear();
    art_sigma_.clear();
    for (int r = 0; r < m_; ++r) {
      int best = -1;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int j : row_singletons[r]) {
        if (in_basis_[j]) continue;
        if (rhs_[r] / single_val_[j] < 0.0) continue;
        if (c_[j] < best_cost) {
          best_cost = c_[j];
          best = j;
        }
      }
      if (best >= 0) {
        basic_[r] = best;
        in_basis_[best] = 1;
      } else {
        basic_[r] = n_ + static_cast<int>(art_row_.size());
        art_row_.push_back(r);
        art_sigma_.push_back(rhs_[r] >= 0.0 ? 1.0 : -1.0);
      }
    }
  }

  bool factorize() {
    owner_slot_.assign(m_, -1);
    sigma_.assign(m_, 0.0);
    dense_slots_.clear();
    s_rows_.clear();
    s_pos_.assign(m_, -1);
    for (int slot = 0; slot < m_; ++slot) {
      const int j = basic_[slot];
      const int sr = singleton_row(j);
      if (sr >= 0) {
        if (owner_slot_[sr] >= 0) return false;  // two singletons in one row
        owner_slot_[sr] = slot;
        sigma_[sr] = singleton_val(j);
      } else {
        dense_slots_.push_back(slot);
      }
    }
    for (int r = 0; r < m_; ++r) {
      if (owner_slot_[r] < 0) {
        s_pos_[r] = static_cast<int>(s_rows_.size());
        s_rows_.push_back(r);
      }
    }
    const int d = static_cast<int>(dense_slots_.size());
    if (static_cast<int>(s_rows_.size()) != d) return false;
    ds_.setZero(d, d);
    for (int t = 0; t < d; ++t) {
      for_column(basic_[dense_slots_[t]], [&](int r, double v) {
        if (s_pos_[r] >= 0) ds_(s_pos_[r], t) = v;
      });
    }
    if (d > 0) {
      lu_.compute(ds_);
      if (lu_.rank() < d) return false;
    }
    return true;
  }

  /// Solve B w = v; the result is indexed by basis slot.
  Vector ftran(const Vector& v) {
    const int d = static_cast<int>(dense_slots_.size());
    Vector w(m_);
    Vector xd;
    if (d > 0) {
      Vector rhs_s(d);
      for (int t = 0; t < d; ++t) rhs_s[t] = v[s_rows_[t]];
      xd = lu_.solve(rhs_s);
    }
    work_ = v;
    for (int t = 0; t < d; ++t) {
      for_column(basic_[dense_slots_[t]], [&](int r, double val) {
        if (owner_slot_[r] >= 0) work_[r] -= val * xd[t];
      });
    }
    for (int r = 0; r < m_; ++r) {
      if (owner_slot_[r] >= 0) w[owner_slot_[r]] = work_[r] / sigma_[r];
    }
    for (int t = 0; t < d; ++t) w[dense_slots_[t]] = xd[t];
    return w;
  }

  /// Solve B'y = cb, where cb is indexed by basis slot.
  Vector btran(const Vector& cb) {
    const int d = static_cast<int>(dense_slots_.size());
    Vector y(m_);
    for (int r = 0; r < m_; ++r) {
      if (owner_slot_[r] >= 0) y[r] = cb[owner_slot_[r]] / sigma_[r];
    }
    if (d > 0) {
      Vector rhs_d(d);
      for (int t = 0; t < d; ++t) {
        double acc = cb[dense_slots_[t]];
        for_column(basic_[dense_slots_[t]], [&](int r, double val) {
          if (owner_slot_[r] >= 0) acc -= val * y[r];
        });
        rhs_d[t] = acc;
      }
      Vector ys = lu_.transpose().solve(rhs_d);
      for (int t = 0; t < d; ++t) y[s_rows_[t]] = ys[t];
    }
    return y;
  }

  int choose_entering(const Vector& y, const Vector& cost, bool bland) const {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < n_; ++j) {  // artificials never enter
      if (in_basis_[j]) continue;
      const double dj = cost[j] - column_dot(j, y);
      const double tol = opt_.optimality_tol * std::max(1.0, std::abs(cost[j]));
      if (dj < -tol) {
        if (bland) return j;
        const double score = dj / std::max(1.0, std::abs(cost[j]));
        if (score < best_score) {
          best_score = score;
          best = j;
        }
      }
    }
    return best;
  }

  /// Standard ratio test; a basic artificial that would grow blocks at zero
  /// and is forced out so phase 1 progress is never undone.
  int choose_leaving(const Vector& w, bool bland, double* theta_out) const {
    int leave = -1;
    double theta = std::numeric_limits<double>::infinity();
    double leave_pivot = 0.0;
    for (int slot = 0; slot < m_; ++slot) {
      const double wij = w[slot];
      double ratio;
      double pivot_mag;
      if (wij > opt_.pivot_tol) {
        ratio = std::max(x_basic_[slot], 0.0) / wij;
        pivot_mag = wij;
      } else if (wij < -opt_.pivot_tol && is_artificial(basic_[slot]) &&
                 x_basic_[slot] <= opt_.feasibility_tol) {
        ratio = 0.0;
        pivot_mag = -wij;
      } else {
        continue;
      }
      if (ratio < theta - 1e-12) {
        theta = ratio;
        leave = slot;
        leave_pivot = pivot_mag;
      } else if (ratio <= theta + 1e-12 && leave >= 0) {
        const bool take = bland ? basic_[slot] < basic_[leave] : pivot_mag > leave_pivot;
        if (take) {
          theta = std::min(theta, ratio);
          leave = slot;
          leave_pivot = pivot_mag;
        }
      }
    }
    *theta_out = theta;
    return leave;
  }

  LoopExit iterate(const Vector& cost) {
    constexpr int kStallLimit = 100;
    int degenerate_streak = 0;
    Vector cb(m_);
    for (;;) {
      if (iterations_ >= max_iter_) return LoopExit::iter_limit;
      const bool bland = opt_.bland || degenerate_streak > kStallLimit;
      for (int slot = 0; slot < m_; ++slot) cb[slot] = cost[basic_[slot]];
      const Vector y = btran(cb);
      const int q = choose_entering(y, cost, bland);
      if (q < 0) return LoopExit::optimal;

      Vector aq = Vector::Zero(m_);
      for_column(q, [&](int r, double v) { aq[r] += v; });
      const Vector w = ftran(aq);
      double theta = 0.0;
      const int slot = choose_leaving(w, bland, &theta);
      if (slot < 0) return LoopExit::unbounded;
      degenerate_streak = theta <= 1e-12 ? degenerate_streak + 1 : 0;

      const int jleave = basic_[slot];
      in_basis_assign(jleave, 0);
      basic_[slot] = q;
      in_basis_assign(q, 1);
      ++iterations_;

      // A singleton replacing the singleton that owns the same row leaves the
      // dense core untouched; anything else changes the structure.
      const int rq = singleton_row(q);
      if (rq >= 0 && owner_slot_[rq] == slot && singleton_row(jleave) == rq) {
        sigma_[rq] = singleton_val(q);
      } else if (!factorize()) {
        throw std::runtime_error("solve_lp: basis became singular");
      }
      x_basic_ = ftran(rhs_);
    }
  }

  void in_basis_assign(int j, char flag) {
    if (j < n_) in_basis_[j] = flag;
  }

  /// Pivot zero-valued basic artificials out wherever a nonbasic structural
  /// column has a usable pivot element; rows where none exists are redundant
  /// and keep their artificial pinned at zero.
  void drive_out_artificials() {
    for (int slot = 0; slot < m_; ++slot) {
      if (basic_[slot] < n_) continue;
      Vector e = Vector::Zero(m_);
      e[slot] = 1.0;
      const Vector z = btran(e);  // row `slot` of B^{-1}, as a dual vector
      int pivot_col = -1;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        if (std::abs(column_dot(j, z)) > opt_.pivot_tol * 100) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col < 0) continue;
      basic_[slot] = pivot_col;
      in_basis_[pivot_col] = 1;
      if (!factorize()) throw std::runtime_error("solve_lp: basis became singular");
      x_basic_ = ftran(rhs_);
    }
  }

  SparseMatrix A_;
  Vector c_;
  Vector rhs_;
  SimplexOptions opt_;
  int m_ = 0;
  int n_ = 0;
  int max_iter_ = 0;
  int iterations_ = 0;

  std::vector<int> single_row_;
  std::vector<double> single_val_;
  std::vector<int> art_row_;
  std::vector<double> art_sigma_;
  Vector cost2_;

  std::vector<int> basic_;
  std::vector<char> in_basis_;
  Vector x_basic_;
  Vector work_;

  std::vector<int> owner_slot_;
  std::vector<double> sigma_;
  std::vector<int> dense_slots_;
  std::vector<int> s_rows_;
  std::vector<int> s_pos_;
  Matrix ds_;
  Eigen::FullPivLU<Matrix> lu_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& options, LpBasis* basis) {
  Simplex simplex(problem, options);
  return simplex.run(basis);
}

LpProblem build_cqr_lp(const Matrix& X, const Vector& y, const QuantileGrid& grid,
                       const Vector& penalty_weights) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  const int K = grid.size();
  if (y.size() != n) throw std::invalid_argument("build_cqr_lp: X and y disagree on n");
  if (K < 1) throw std::invalid_argument("build_cqr_lp: empty quantile grid");
  Vector w = penalty_weights;
  if (w.size() == 0) {
    w = Vector::Zero(p);
  } else if (w.size() != p) {
    throw std::invalid_argument("build_cqr_lp: penalty_weights size mismatch");
  }
  for (int j = 0; j < p; ++j) {
    if (!(w[j] >= 0.0)) {
      throw std::invalid_argument("build_cqr_lp: penalty_weights must be nonnegative and finite");
    }
  }

  CqrColumnMap map{n, K, p};
  LpProblem lp;
  lp.A.resize(map.rows(), map.cols());
  lp.c = Vector::Zero(map.cols());
  lp.rhs.resize(map.rows());

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(map.rows()) * (4 + 2 * p));
  for (int k = 0; k < K; ++k) {
    const double tau = grid.levels[k];
    for (int i = 0; i < n; ++i) {
      const int r = map.row(i, k);
      trips.emplace_back(r, map.u_plus(i, k), 1.0);
      trips.emplace_back(r, map.u_minus(i, k), -1.0);
      trips.emplace_back(r, map.b_plus(k), 1.0);
      trips.emplace_back(r, map.b_minus(k), -1.0);
      for (int j = 0; j < p; ++j) {
        if (X(i, j) != 0.0) {
          trips.emplace_back(r, map.beta_plus(j), X(i, j));
          trips.emplace_back(r, map.beta_minus(j), -X(i, j));
        }
      }
      lp.rhs[r] = y[i];
      lp.c[map.u_plus(i, k)] = tau;
      lp.c[map.u_minus(i, k)] = 1.0 - tau;
    }
  }
  for (int j = 0; j < p; ++j) {
    lp.c[map.beta_plus(j)] = w[j];
    lp.c[map.beta_minus(j)] = w[j];
  }
  lp.A.setFromTriplets(trips.begin(), trips.end());
  lp.A.makeCompressed();
  return lp;
}

Vector cqr_extract_beta(const CqrColumnMap& map, const Vector& x) {
  Vector beta(map.p);
  for (int j = 0; j < map.p; ++j) beta[j] = x[map.beta_plus(j)] - x[map.beta_minus(j)];
  return beta;
}

Vector cqr_extract_intercepts(const CqrColumnMap& map, const Vector& x) {
  Vector b(map.K);
  for (int k = 0; k < map.K; ++k) b[k] = x[map.b_plus(k)] - x[map.b_minus(k)];
  return b;
}

}  // namespace cqr

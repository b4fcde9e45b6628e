#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oros::lp {

DualSimplex::DualSimplex(const MilpModel& model) {
  n_ = static_cast<int>(model.cols.size());
  m_ = static_cast<int>(model.rows.size());
  total_ = n_ + m_;
  maximize_ = model.maximize;

  // CSC of the structural part.
  std::vector<std::vector<std::pair<int, double>>> bycol(n_);
  for (int i = 0; i < m_; ++i)
    for (const auto& [j, a] : model.rows[i].terms)
      if (a != 0.0) bycol[j].push_back({i, a});
  col_ptr_.assign(n_ + 1, 0);
  for (int j = 0; j < n_; ++j) col_ptr_[j + 1] = col_ptr_[j] + static_cast<int>(bycol[j].size());
  col_row_.resize(col_ptr_[n_]);
  col_val_.resize(col_ptr_[n_]);
  for (int j = 0; j < n_; ++j) {
    int at = col_ptr_[j];
    for (const auto& [i, a] : bycol[j]) {
      col_row_[at] = i;
      col_val_[at] = a;
      ++at;
    }
  }

  cost_.resize(n_);
  for (int j = 0; j < n_; ++j) {
    if (!std::isfinite(model.cols[j].lb) || !std::isfinite(model.cols[j].ub))
      throw ValidationError("solve_lp: column bounds must be finite");
    cost_[j] = maximize_ ? -model.cols[j].obj : model.cols[j].obj;
  }

  lb0_.resize(total_);
  ub0_.resize(total_);
  for (int j = 0; j < n_; ++j) {
    lb0_[j] = model.cols[j].lb;
    ub0_[j] = model.cols[j].ub;
  }
  for (int i = 0; i < m_; ++i) {
    // logical value is -(row activity)
    lb0_[n_ + i] = model.rows[i].hi >= kInf ? -kInf : -model.rows[i].hi;
    ub0_[n_ + i] = model.rows[i].lo <= -kInf ? kInf : -model.rows[i].lo;
  }
  lb_ = lb0_;
  ub_ = ub0_;

  val_.assign(total_, 0.0);
  d_.assign(total_, 0.0);
  work_.assign(m_, 0.0);
  rho_.assign(m_, 0.0);
  alpha_.assign(total_, 0.0);
  reset_basis();
}

void DualSimplex::set_bounds(int j, double lo, double hi) {
  lb_[j] = lo;
  ub_[j] = hi;
  if (stat_[j] == 1) val_[j] = lo;
  else if (stat_[j] == 2) val_[j] = hi;
}

void DualSimplex::reset_bounds() {
  for (int j = 0; j < n_; ++j) {
    lb_[j] = lb0_[j];
    ub_[j] = ub0_[j];
    if (stat_[j] == 1) val_[j] = lb_[j];
    else if (stat_[j] == 2) val_[j] = ub_[j];
  }
}

double DualSimplex::bound_value(int j) const {
  if (stat_[j] == 1) return lb_[j];
  if (stat_[j] == 2) return ub_[j];
  return val_[j];
}

void DualSimplex::reset_basis() {
  etas_.clear();
  fill_ = 0;
  bland_ = false;
  degenerate_run_ = 0;
  stat_.assign(total_, 1);
  basic_.resize(m_);
  pos_of_.assign(total_, -1);
  for (int i = 0; i < m_; ++i) {
    basic_[i] = n_ + i;
    stat_[n_ + i] = 0;
    pos_of_[n_ + i] = i;
  }
  // Nonbasic structurals sit at the dual-feasible bound for their cost.
  for (int j = 0; j < n_; ++j) {
    if (lb_[j] == ub_[j]) stat_[j] = 1;
    else if (cost_[j] >= 0.0) stat_[j] = 1;
    else stat_[j] = 2;
    val_[j] = stat_[j] == 1 ? lb_[j] : ub_[j];
  }
  compute_duals();
}

void DualSimplex::ftran(std::vector<double>& v) const {
  for (const Eta& e : etas_) {
    double t = v[e.p];
    if (t == 0.0) continue;
    t /= e.pivot;
    for (const auto& [i, w] : e.w)
      if (i != e.p) v[i] -= w * t;
    v[e.p] = t;
  }
}

void DualSimplex::btran(std::vector<double>& v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    const Eta& e = *it;
    double acc = v[e.p];
    for (const auto& [i, w] : e.w)
      if (i != e.p) acc -= w * v[i];
    v[e.p] = acc / e.pivot;
  }
}

void DualSimplex::load_column(int j, std::vector<double>& dense, std::vector<int>& idx) const {
  idx.clear();
  if (j < n_) {
    for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
      dense[col_row_[k]] = col_val_[k];
      idx.push_back(col_row_[k]);
    }
  } else {
    dense[j - n_] = 1.0;
    idx.push_back(j - n_);
  }
}

void DualSimplex::compute_values() {
  std::fill(work_.begin(), work_.end(), 0.0);
  for (int j = 0; j < total_; ++j) {
    if (stat_[j] == 0) continue;
    double vj = bound_value(j);
    val_[j] = vj;
    if (vj == 0.0) continue;
    if (j < n_) {
      for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) work_[col_row_[k]] -= col_val_[k] * vj;
    } else {
      work_[j - n_] -= vj;
    }
  }
  ftran(work_);
  for (int p = 0; p < m_; ++p) val_[basic_[p]] = work_[p];
}

void DualSimplex::compute_duals() {
  std::fill(work_.begin(), work_.end(), 0.0);
  bool any = false;
  for (int p = 0; p < m_; ++p) {
    int k = basic_[p];
    double c = k < n_ ? cost_[k] : 0.0;
    work_[p] = c;
    if (c != 0.0) any = true;
  }
  if (any) btran(work_);
  for (int j = 0; j < total_; ++j) {
    if (stat_[j] == 0) {
      d_[j] = 0.0;
      continue;
    }
    double c = j < n_ ? cost_[j] : 0.0;
    if (any) {
      if (j < n_) {
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) c -= col_val_[k] * work_[col_row_[k]];
      } else {
        c -= work_[j - n_];
      }
    }
    d_[j] = c;
  }
}

bool DualSimplex::refactorize() {
  std::vector<int> basics = basic_;
  std::sort(basics.begin(), basics.end());
  etas_.clear();
  fill_ = 0;
  std::vector<char> row_used(m_, 0);
  std::vector<int> new_basic(m_, -1);
  // Logical basics pivot on their own row with a unit eta we can skip.
  std::vector<int> structurals;
  for (int k : basics) {
    if (k >= n_) {
      int i = k - n_;
      row_used[i] = 1;
      new_basic[i] = k;
    } else {
      structurals.push_back(k);
    }
  }
  std::vector<int> idx;
  std::vector<int> repaired;
  for (int k : structurals) {
    std::fill(work_.begin(), work_.end(), 0.0);
    load_column(k, work_, idx);
    ftran(work_);
    int piv = -1;
    double best = 1e-10;
    for (int i = 0; i < m_; ++i) {
      if (row_used[i]) continue;
      double a = std::fabs(work_[i]);
      if (a > best) {
        best = a;
        piv = i;
      }
    }
    if (piv < 0) {
      repaired.push_back(k);
      continue;
    }
    Eta e;
    e.p = piv;
    e.pivot = work_[piv];
    for (int i = 0; i < m_; ++i)
      if (work_[i] != 0.0) e.w.push_back({i, work_[i]});
    fill_ += static_cast<long>(e.w.size());
    etas_.push_back(std::move(e));
    row_used[piv] = 1;
    new_basic[piv] = k;
  }
  // Repair: drop dependent structurals to a bound, re-seat the freed logicals.
  // Repairs can lose dual feasibility, so the caller restarts from scratch.
  last_repairs_ = static_cast<int>(repaired.size());
  for (int k : repaired) {
    stat_[k] = 1;
    val_[k] = lb_[k];
    pos_of_[k] = -1;
  }
  for (int i = 0; i < m_; ++i) {
    if (new_basic[i] >= 0) continue;
    int k = n_ + i;
    new_basic[i] = k;
    stat_[k] = 0;
  }
  basic_ = new_basic;
  std::fill(pos_of_.begin(), pos_of_.end(), -1);
  for (int p = 0; p < m_; ++p) {
    pos_of_[basic_[p]] = p;
    stat_[basic_[p]] = 0;
  }
  compute_duals();
  compute_values();
  return true;
}

double DualSimplex::objective_min() const {
  double z = 0.0;
  for (int j = 0; j < n_; ++j) z += cost_[j] * val_[j];
  return z;
}

DualSimplex::Result DualSimplex::solve(long iter_limit,
                                       const std::chrono::steady_clock::time_point* deadline) {
  Result res;
  res.iters = 0;
  compute_values();
  const int reinvert_every = 120;
  int since_reinvert = 0;
  int hard_resets = 0;
  std::vector<int> idx;
  // Refactorize; on a basis repair dual feasibility is gone, so restart from
  // the all-logical basis instead. False only when that failed repeatedly.
  auto refresh = [&]() -> bool {
    since_reinvert = 0;
    if (refactorize() && last_repairs_ == 0) return true;
    if (++hard_resets > 3) return false;
    reset_basis();
    compute_values();
    return true;
  };

  while (true) {
    if (iter_limit > 0 && res.iters >= iter_limit) {
      res.status = LpStatus::IterLimit;
      return res;
    }
    if (deadline && (res.iters & 63) == 0 &&
        std::chrono::steady_clock::now() > *deadline) {
      res.status = LpStatus::TimeLimit;
      return res;
    }

    // Leaving variable: the basic value with the largest bound violation,
    // ties broken toward the lowest variable index.
    int p_out = -1, k_out = -1;
    double worst = kFeasTol;
    bool below = false;
    for (int p = 0; p < m_; ++p) {
      int k = basic_[p];
      double v = val_[k];
      double viol_lo = lb_[k] - v;
      double viol_hi = v - ub_[k];
      double viol = viol_lo > viol_hi ? viol_lo : viol_hi;
      if (viol <= kFeasTol) continue;
      bool take = p_out < 0 || viol > worst + 1e-12 ||
                  (viol > worst - 1e-12 && k < k_out);
      if (take) {
        if (viol > worst) worst = viol;
        p_out = p;
        k_out = k;
        below = viol_lo > viol_hi;
      }
    }
    if (p_out < 0) {
      // Candidate optimum: refresh the factorization and re-check.
      if (since_reinvert > 0) {
        if (!refresh()) {
          res.status = LpStatus::NumFail;
          return res;
        }
        bool violated = false;
        for (int p = 0; p < m_ && !violated; ++p) {
          int k = basic_[p];
          violated = val_[k] < lb_[k] - kFeasTol || val_[k] > ub_[k] + kFeasTol;
        }
        if (violated) continue;
      }
      res.status = LpStatus::Optimal;
      double z = objective_min();
      res.obj = maximize_ ? -z : z;
      return res;
    }

    // Pivot row over nonbasic variables.
    std::fill(rho_.begin(), rho_.end(), 0.0);
    rho_[p_out] = 1.0;
    btran(rho_);
    double sigma = below ? 1.0 : -1.0;
    alpha_nz_.clear();
    for (int j = 0; j < total_; ++j) {
      if (stat_[j] == 0 || lb_[j] == ub_[j]) continue;
      double a;
      if (j < n_) {
        a = 0.0;
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) a += col_val_[k] * rho_[col_row_[k]];
      } else {
        a = rho_[j - n_];
      }
      if (std::fabs(a) < 1e-11) continue;
      alpha_[j] = a;
      alpha_nz_.push_back(j);
    }

    // Dual ratio test: min |d|/|alpha|, preferring larger pivots then lower
    // indices inside the tolerance window. Bland mode takes the lowest index.
    int q = -1;
    double best_ratio = 0.0, best_mag = 0.0;
    for (int j : alpha_nz_) {
      double abar = sigma * alpha_[j];
      bool eligible = (stat_[j] == 1 && abar < -kPivotTol) || (stat_[j] == 2 && abar > kPivotTol);
      if (!eligible) continue;
      if (bland_) {
        if (q < 0 || j < q) q = j;
        continue;
      }
      double ratio = std::fabs(d_[j]) / std::fabs(abar);
      double mag = std::fabs(abar);
      bool take = false;
      if (q < 0 || ratio < best_ratio - 1e-10) take = true;
      else if (ratio <= best_ratio + 1e-10) {
        if (mag > best_mag + 1e-12) take = true;
        else if (mag > best_mag - 1e-12 && j < q) take = true;
      }
      if (take) {
        q = j;
        best_ratio = ratio;
        best_mag = mag;
      }
    }
    if (q < 0) {
      res.status = LpStatus::Infeasible;
      return res;
    }

    // Transformed entering column.
    std::fill(work_.begin(), work_.end(), 0.0);
    load_column(q, work_, idx);
    ftran(work_);
    double apiv = work_[p_out];
    if (std::fabs(apiv) < 1e-11) {
      if (!refresh()) {
        res.status = LpStatus::NumFail;
        return res;
      }
      continue;
    }

    double target = below ? lb_[k_out] : ub_[k_out];
    double step = (val_[k_out] - target) / apiv;  // change of the entering value
    double theta = d_[q] / apiv;                  // dual step

    // Primal update.
    for (int p = 0; p < m_; ++p) {
      if (work_[p] == 0.0) continue;
      val_[basic_[p]] -= work_[p] * step;
    }
    val_[q] = bound_value(q) + step;
    val_[k_out] = target;

    // Dual update over the computed pivot row.
    for (int j : alpha_nz_) {
      if (j == q) continue;
      d_[j] -= theta * alpha_[j];
    }
    d_[k_out] = -theta;
    d_[q] = 0.0;

    stat_[q] = 0;
    pos_of_[q] = p_out;
    stat_[k_out] = below ? 1 : 2;
    pos_of_[k_out] = -1;
    basic_[p_out] = q;

    Eta e;
    e.p = p_out;
    e.pivot = apiv;
    for (int i = 0; i < m_; ++i)
      if (work_[i] != 0.0) e.w.push_back({i, work_[i]});
    fill_ += static_cast<long>(e.w.size());
    etas_.push_back(std::move(e));

    ++res.iters;
    ++iters_total_;
    ++since_reinvert;
    if (std::fabs(theta) <= 1e-12) {
      if (++degenerate_run_ > 1000) bland_ = true;
    } else {
      degenerate_run_ = 0;
      bland_ = false;
    }
    if (since_reinvert >= reinvert_every || fill_ > std::max<long>(8L * col_ptr_[n_], 1L << 21)) {
      if (!refresh()) {
        res.status = LpStatus::NumFail;
        return res;
      }
    }
  }
}

}  // namespace oros::lp

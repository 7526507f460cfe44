// Copyright 2026 The ecotraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "ecotraj/banded.hpp"
#include "ecotraj/error.hpp"
#include "ecotraj/qp_solver.hpp"

namespace ecotraj
{

std::string_view to_string(SolveStatus status)
{
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kMaxIterations:
      return "max_iterations";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
    case SolveStatus::kTimeLimit:
      return "time_limit";
  }
  return "unknown";
}

namespace
{

using Vec = std::vector<double>;

double inf_norm(const Vec & v)
{
  double m = 0.0;
  for (double x : v) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

struct Csr
{
  int rows = 0;
  int cols = 0;
  std::vector<int> ptr;
  std::vector<int> idx;
  Vec val;

  void multiply(const Vec & x, Vec & y) const
  {
    y.assign(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int k = ptr[r]; k < ptr[r + 1]; ++k) {
        s += val[k] * x[idx[k]];
      }
      y[r] = s;
    }
  }

  void multiply_transpose(const Vec & y, Vec & x) const
  {
    x.assign(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      for (int k = ptr[r]; k < ptr[r + 1]; ++k) {
        x[idx[k]] += val[k] * y[r];
      }
    }
  }
};

Csr to_csr(int rows, int cols, const std::vector<Triplet> & entries)
{
  std::map<std::pair<int, int>, double> merged;
  for (const auto & t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw Error(ErrorCode::kInvalidArgument, "constraint entry out of range");
    }
    merged[{t.row, t.col}] += t.value;
  }
  Csr a;
  a.rows = rows;
  a.cols = cols;
  a.ptr.assign(rows + 1, 0);
  for (const auto & [key, value] : merged) {
    ++a.ptr[key.first + 1];
    a.idx.push_back(key.second);
    a.val.push_back(value);
  }
  std::partial_sum(a.ptr.begin(), a.ptr.end(), a.ptr.begin());
  return a;
}

/// Symmetric matrix kept as merged lower-triangle entries.
struct SymEntries
{
  std::vector<int> row;
  std::vector<int> col;
  Vec val;

  void multiply(const Vec & x, Vec & y) const
  {
    y.assign(x.size(), 0.0);
    for (std::size_t k = 0; k < val.size(); ++k) {
      y[row[k]] += val[k] * x[col[k]];
      if (row[k] != col[k]) {
        y[col[k]] += val[k] * x[row[k]];
      }
    }
  }
};

SymEntries to_sym(int n, const std::vector<Triplet> & entries)
{
  std::map<std::pair<int, int>, double> merged;
  for (const auto & t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) {
      throw Error(ErrorCode::kInvalidArgument, "hessian entry out of range");
    }
    const int r = std::max(t.row, t.col);
    const int c = std::min(t.row, t.col);
    merged[{r, c}] += t.value;
  }
  SymEntries s;
  for (const auto & [key, value] : merged) {
    s.row.push_back(key.first);
    s.col.push_back(key.second);
    s.val.push_back(value);
  }
  return s;
}

class Admm
{
public:
  Admm(const QpData & qp, const QpSettings & settings)
  : qp_(qp), set_(settings), n_(qp.num_vars), m_(qp.num_rows())
  {
    validate();
    p_ = to_sym(n_, qp.hessian);
    a_ = to_csr(m_, n_, qp.constraints);
    q_ = qp.gradient;
    l_ = qp.lower;
    u_ = qp.upper;
    scale();
    bandwidth_ = 0;
    for (std::size_t k = 0; k < p_.val.size(); ++k) {
      bandwidth_ = std::max(bandwidth_, p_.row[k] - p_.col[k]);
    }
    for (int r = 0; r < m_; ++r) {
      if (a_.ptr[r + 1] > a_.ptr[r]) {
        const auto [lo, hi] = std::minmax_element(
          a_.idx.begin() + a_.ptr[r], a_.idx.begin() + a_.ptr[r + 1]);
        bandwidth_ = std::max(bandwidth_, *hi - *lo);
      }
    }
    rho_ = set_.rho;
    set_rho_vector();
  }

  QpResult run(const QpWarmStart * warm);

private:
  void validate() const
  {
    if (n_ <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "QP has no variables");
    }
    if (static_cast<int>(qp_.gradient.size()) != n_ || static_cast<int>(qp_.upper.size()) != m_) {
      throw Error(ErrorCode::kInvalidArgument, "QP vector sizes are inconsistent");
    }
    for (int r = 0; r < m_; ++r) {
      if (!(qp_.lower[r] <= qp_.upper[r])) {
        throw Error(ErrorCode::kInvalidArgument, "QP row has lower > upper");
      }
    }
  }

  void scale();
  void set_rho_vector();
  bool factor_reduced();
  void compute_residuals();
  bool try_polish(QpResult & out);
  bool polish_on(const std::vector<signed char> & set, std::vector<signed char> & next);
  void write_result(QpResult & out) const;
  bool check_infeasible(QpResult & out);

  const QpData & qp_;
  QpSettings set_;
  int n_;
  int m_;

  SymEntries p_;
  Csr a_;
  Vec q_, l_, u_;
  Vec d_, e_;
  double c_ = 1.0;
  int bandwidth_ = 0;

  double rho_ = 0.1;
  Vec rho_vec_;
  BandedLdlt ldlt_;
  int refactorizations_ = 0;

  Vec x_, z_, y_, y_prev_;
  Vec ax_, px_, aty_;
  double prim_ = 0.0;
  double dual_ = 0.0;
  double eps_prim_ = 0.0;
  double eps_dual_ = 0.0;
  double prim_scaled_ratio_ = 0.0;
  double dual_scaled_ratio_ = 0.0;
  std::vector<signed char> last_polish_set_;
};

void Admm::scale()
{
  d_.assign(n_, 1.0);
  e_.assign(m_, 1.0);
  c_ = 1.0;
  auto clip_norm = [](double v) { return v < 1e-4 ? 1.0 : std::min(v, 1e4); };
  for (int it = 0; it < set_.scaling_iter; ++it) {
    Vec col(n_, 0.0);
    Vec row(m_, 0.0);
    for (std::size_t k = 0; k < p_.val.size(); ++k) {
      const double v = std::abs(p_.val[k]);
      col[p_.row[k]] = std::max(col[p_.row[k]], v);
      col[p_.col[k]] = std::max(col[p_.col[k]], v);
    }
    for (int r = 0; r < m_; ++r) {
      for (int k = a_.ptr[r]; k < a_.ptr[r + 1]; ++k) {
        const double v = std::abs(a_.val[k]);
        col[a_.idx[k]] = std::max(col[a_.idx[k]], v);
        row[r] = std::max(row[r], v);
      }
    }
    Vec dd(n_), de(m_);
    for (int j = 0; j < n_; ++j) {
      dd[j] = 1.0 / std::sqrt(clip_norm(col[j]));
    }
    for (int r = 0; r < m_; ++r) {
      de[r] = 1.0 / std::sqrt(clip_norm(row[r]));
    }
    for (std::size_t k = 0; k < p_.val.size(); ++k) {
      p_.val[k] *= dd[p_.row[k]] * dd[p_.col[k]];
    }
    for (int r = 0; r < m_; ++r) {
      for (int k = a_.ptr[r]; k < a_.ptr[r + 1]; ++k) {
        a_.val[k] *= de[r] * dd[a_.idx[k]];
      }
    }
    for (int j = 0; j < n_; ++j) {
      q_[j] *= dd[j];
      d_[j] *= dd[j];
    }
    for (int r = 0; r < m_; ++r) {
      e_[r] *= de[r];
    }

    Vec pcol(n_, 0.0);
    for (std::size_t k = 0; k < p_.val.size(); ++k) {
      const double v = std::abs(p_.val[k]);
      pcol[p_.row[k]] = std::max(pcol[p_.row[k]], v);
      pcol[p_.col[k]] = std::max(pcol[p_.col[k]], v);
    }
    const double mean_p = std::accumulate(pcol.begin(), pcol.end(), 0.0) / n_;
    const double gamma = 1.0 / clip_norm(std::max(mean_p, inf_norm(q_)));
    for (double & v : p_.val) {
      v *= gamma;
    }
    for (double & v : q_) {
      v *= gamma;
    }
    c_ *= gamma;
  }
  for (int r = 0; r < m_; ++r) {
    if (std::isfinite(l_[r])) {
      l_[r] *= e_[r];
    }
    if (std::isfinite(u_[r])) {
      u_[r] *= e_[r];
    }
  }
}

void Admm::set_rho_vector()
{
  rho_vec_.assign(m_, rho_);
  for (int r = 0; r < m_; ++r) {
    if (qp_.lower[r] == qp_.upper[r]) {
      rho_vec_[r] = 1e3 * rho_;
    } else if (!std::isfinite(qp_.lower[r]) && !std::isfinite(qp_.upper[r])) {
      rho_vec_[r] = 1e-6;
    }
  }
}

bool Admm::factor_reduced()
{
  BandedSymmetricMatrix m(n_, bandwidth_);
  for (int j = 0; j < n_; ++j) {
    m.add(j, j, set_.sigma);
  }
  for (std::size_t k = 0; k < p_.val.size(); ++k) {
    m.add(p_.row[k], p_.col[k], p_.val[k]);
  }
  for (int r = 0; r < m_; ++r) {
    for (int k1 = a_.ptr[r]; k1 < a_.ptr[r + 1]; ++k1) {
      for (int k2 = a_.ptr[r]; k2 <= k1; ++k2) {
        const int i = a_.idx[k1];
        const int j = a_.idx[k2];
        const double v = rho_vec_[r] * a_.val[k1] * a_.val[k2];
        if (i == j) {
          m.add(i, j, v);
        } else {
          m.add(std::max(i, j), std::min(i, j), v);
        }
      }
    }
  }
  ++refactorizations_;
  return ldlt_.factorize(m);
}

void Admm::compute_residuals()
{
  a_.multiply(x_, ax_);
  p_.multiply(x_, px_);
  a_.multiply_transpose(y_, aty_);
  double prim = 0.0;
  double ax_norm = 0.0;
  double z_norm = 0.0;
  double prim_s = 0.0;
  double ax_s = 0.0;
  double z_s = 0.0;
  for (int r = 0; r < m_; ++r) {
    prim = std::max(prim, std::abs(ax_[r] - z_[r]) / e_[r]);
    ax_norm = std::max(ax_norm, std::abs(ax_[r]) / e_[r]);
    z_norm = std::max(z_norm, std::abs(z_[r]) / e_[r]);
    prim_s = std::max(prim_s, std::abs(ax_[r] - z_[r]));
    ax_s = std::max(ax_s, std::abs(ax_[r]));
    z_s = std::max(z_s, std::abs(z_[r]));
  }
  double dual = 0.0;
  double px_norm = 0.0;
  double aty_norm = 0.0;
  double q_norm = 0.0;
  double dual_s = 0.0;
  double px_s = 0.0;
  double aty_s = 0.0;
  double q_s = 0.0;
  for (int j = 0; j < n_; ++j) {
    const double inv = 1.0 / (c_ * d_[j]);
    const double rd = px_[j] + q_[j] + aty_[j];
    dual = std::max(dual, std::abs(rd) * inv);
    px_norm = std::max(px_norm, std::abs(px_[j]) * inv);
    aty_norm = std::max(aty_norm, std::abs(aty_[j]) * inv);
    q_norm = std::max(q_norm, std::abs(q_[j]) * inv);
    dual_s = std::max(dual_s, std::abs(rd));
    px_s = std::max(px_s, std::abs(px_[j]));
    aty_s = std::max(aty_s, std::abs(aty_[j]));
    q_s = std::max(q_s, std::abs(q_[j]));
  }
  prim_ = prim;
  dual_ = dual;
  eps_prim_ = set_.eps_abs + set_.eps_rel * std::max(ax_norm, z_norm);
  eps_dual_ = set_.eps_abs + set_.eps_rel * std::max({px_norm, aty_norm, q_norm});
  prim_scaled_ratio_ = prim_s / std::max({ax_s, z_s, 1e-10});
  dual_scaled_ratio_ = dual_s / std::max({px_s, aty_s, q_s, 1e-10});
}

void Admm::write_result(QpResult & out) const
{
  out.x.resize(n_);
  out.y.resize(m_);
  out.z.resize(m_);
  for (int j = 0; j < n_; ++j) {
    out.x[j] = d_[j] * x_[j];
  }
  for (int r = 0; r < m_; ++r) {
    out.y[r] = e_[r] * y_[r] / c_;
    out.z[r] = z_[r] / e_[r];
  }
  out.objective = qp_.objective(out.x);
  out.primal_residual = prim_;
  out.dual_residual = dual_;
  out.refactorizations = refactorizations_;
}

bool Admm::try_polish(QpResult & out)
{
  // Guess the active set from the current iterate.
  std::vector<signed char> set(m_, 0);
  for (int r = 0; r < m_; ++r) {
    if (qp_.lower[r] == qp_.upper[r]) {
      set[r] = -1;
    } else if (z_[r] - l_[r] < -y_[r]) {
      set[r] = -1;
    } else if (u_[r] - z_[r] < y_[r]) {
      set[r] = 1;
    }
  }
  if (set == last_polish_set_) {
    return false;
  }
  last_polish_set_ = set;
  ++out.polish_attempts;

  // A wrong guess usually differs by a few rows; repair it a couple of times.
  std::vector<signed char> next;
  for (int pass = 0; pass < 4; ++pass) {
    if (polish_on(set, next)) {
      return true;
    }
    if (next == set) {
      break;
    }
    set = next;
  }
  return false;
}

bool Admm::polish_on(const std::vector<signed char> & set, std::vector<signed char> & next)
{
  next = set;
  std::vector<int> active;
  std::vector<int> active_index(m_, -1);
  for (int r = 0; r < m_; ++r) {
    if (set[r] != 0) {
      active_index[r] = static_cast<int>(active.size());
      active.push_back(r);
    }
  }
  const int na = static_cast<int>(active.size());
  std::vector<int> row_stage(na);
  for (int k = 0; k < na; ++k) {
    row_stage[k] = qp_.row_stage[active[k]];
  }
  std::vector<std::pair<int, int>> pairs;
  for (const auto & [var, row] : qp_.pivot_pairs) {
    if (active_index[row] >= 0) {
      pairs.push_back({var, active_index[row]});
    }
  }
  KktLayout layout = KktLayout::build(qp_.var_stage, row_stage, pairs);
  for (std::size_t k = 0; k < p_.val.size(); ++k) {
    layout.bandwidth =
      std::max(layout.bandwidth, std::abs(layout.var_pos[p_.row[k]] - layout.var_pos[p_.col[k]]));
  }
  for (int k = 0; k < na; ++k) {
    const int r = active[k];
    for (int e = a_.ptr[r]; e < a_.ptr[r + 1]; ++e) {
      layout.bandwidth =
        std::max(layout.bandwidth, std::abs(layout.row_pos[k] - layout.var_pos[a_.idx[e]]));
    }
  }

  const double delta = set_.polish_delta;
  BandedSymmetricMatrix kkt(layout.size, layout.bandwidth);
  for (int j = 0; j < n_; ++j) {
    kkt.add(layout.var_pos[j], layout.var_pos[j], delta);
  }
  for (std::size_t k = 0; k < p_.val.size(); ++k) {
    kkt.add(layout.var_pos[p_.row[k]], layout.var_pos[p_.col[k]], p_.val[k]);
  }
  for (int k = 0; k < na; ++k) {
    const int r = active[k];
    kkt.add(layout.row_pos[k], layout.row_pos[k], -delta);
    for (int e = a_.ptr[r]; e < a_.ptr[r + 1]; ++e) {
      kkt.add(layout.row_pos[k], layout.var_pos[a_.idx[e]], a_.val[e]);
    }
  }
  BandedLdlt fact;
  if (!fact.factorize(kkt, layout.pivots)) {
    return false;
  }

  Vec rhs(layout.size, 0.0);
  for (int j = 0; j < n_; ++j) {
    rhs[layout.var_pos[j]] = -q_[j];
  }
  for (int k = 0; k < na; ++k) {
    const int r = active[k];
    rhs[layout.row_pos[k]] = set[r] < 0 ? l_[r] : u_[r];
  }
  Vec sol = rhs;
  fact.solve(sol);

  // Iterative refinement against the unregularized system.
  Vec xs(n_), ys(na), res(layout.size);
  for (int it = 0; it < set_.polish_refine_iter; ++it) {
    for (int j = 0; j < n_; ++j) {
      xs[j] = sol[layout.var_pos[j]];
    }
    Vec full_y(m_, 0.0);
    for (int k = 0; k < na; ++k) {
      full_y[active[k]] = sol[layout.row_pos[k]];
    }
    Vec px, aty, ax;
    p_.multiply(xs, px);
    a_.multiply_transpose(full_y, aty);
    a_.multiply(xs, ax);
    for (int j = 0; j < n_; ++j) {
      res[layout.var_pos[j]] = rhs[layout.var_pos[j]] - px[j] - aty[j];
    }
    for (int k = 0; k < na; ++k) {
      res[layout.row_pos[k]] = rhs[layout.row_pos[k]] - ax[active[k]];
    }
    fact.solve(res);
    for (int i = 0; i < layout.size; ++i) {
      sol[i] += res[i];
    }
  }

  // Candidate iterate.
  Vec x_old = x_, z_old = z_, y_old = y_;
  double prim_old = prim_, dual_old = dual_;
  for (int j = 0; j < n_; ++j) {
    x_[j] = sol[layout.var_pos[j]];
  }
  std::fill(y_.begin(), y_.end(), 0.0);
  bool signs_ok = true;
  for (int k = 0; k < na; ++k) {
    const int r = active[k];
    y_[r] = sol[layout.row_pos[k]];
    const double y_unscaled = e_[r] * y_[r] / c_;
    if (qp_.lower[r] != qp_.upper[r]) {
      if ((set[r] < 0 && y_unscaled > set_.eps_abs) || (set[r] > 0 && y_unscaled < -set_.eps_abs)) {
        signs_ok = false;
        next[r] = 0;
      }
    }
  }
  a_.multiply(x_, ax_);
  for (int r = 0; r < m_; ++r) {
    if (set[r] == 0 && ax_[r] < l_[r] - eps_prim_) {
      next[r] = -1;
    } else if (set[r] == 0 && ax_[r] > u_[r] + eps_prim_) {
      next[r] = 1;
    }
    z_[r] = std::clamp(ax_[r], l_[r], u_[r]);
  }
  compute_residuals();
  if (signs_ok && prim_ <= eps_prim_ && dual_ <= eps_dual_) {
    return true;
  }
  x_ = x_old;
  z_ = z_old;
  y_ = y_old;
  prim_ = prim_old;
  dual_ = dual_old;
  compute_residuals();
  return false;
}

bool Admm::check_infeasible(QpResult & out)
{
  Vec dy(m_);
  double dy_norm = 0.0;
  for (int r = 0; r < m_; ++r) {
    dy[r] = y_[r] - y_prev_[r];
    dy_norm = std::max(dy_norm, std::abs(e_[r] * dy[r]));
  }
  if (dy_norm <= 1e-30) {
    return false;
  }
  const double tol = set_.eps_infeasible * dy_norm;
  Vec atdy;
  a_.multiply_transpose(dy, atdy);
  for (int j = 0; j < n_; ++j) {
    if (std::abs(atdy[j] / d_[j]) > tol) {
      return false;
    }
  }
  double support = 0.0;
  for (int r = 0; r < m_; ++r) {
    if (dy[r] > 0.0) {
      if (!std::isfinite(u_[r])) {
        return false;
      }
      support += u_[r] * dy[r];
    } else if (dy[r] < 0.0) {
      if (!std::isfinite(l_[r])) {
        return false;
      }
      support += l_[r] * dy[r];
    }
  }
  if (support >= -tol) {
    return false;
  }
  out.certificate.resize(m_);
  int worst = 0;
  for (int r = 0; r < m_; ++r) {
    out.certificate[r] = e_[r] * dy[r] / dy_norm;
    if (std::abs(out.certificate[r]) > std::abs(out.certificate[worst])) {
      worst = r;
    }
  }
  out.infeasible_row = worst;
  return true;
}

QpResult Admm::run(const QpWarmStart * warm)
{
  QpResult out;
  x_.assign(n_, 0.0);
  y_.assign(m_, 0.0);
  z_.assign(m_, 0.0);
  if (warm != nullptr && static_cast<int>(warm->x.size()) == n_) {
    for (int j = 0; j < n_; ++j) {
      x_[j] = warm->x[j] / d_[j];
    }
    if (static_cast<int>(warm->y.size()) == m_) {
      for (int r = 0; r < m_; ++r) {
        y_[r] = c_ * warm->y[r] / e_[r];
      }
    }
  }
  a_.multiply(x_, ax_);
  for (int r = 0; r < m_; ++r) {
    z_[r] = std::clamp(ax_[r], l_[r], u_[r]);
  }
  if (!factor_reduced()) {
    out.status = SolveStatus::kNumericalFailure;
    write_result(out);
    return out;
  }
  if (set_.trace) {
    out.trace = nlohmann::json::array();
  }

  compute_residuals();
  if (warm != nullptr && prim_ <= eps_prim_ && dual_ <= eps_dual_) {
    out.status = SolveStatus::kOptimal;
    write_result(out);
    return out;
  }

  const auto start = std::chrono::steady_clock::now();
  const double alpha = set_.alpha;
  Vec rhs(n_), xt(n_), zt(m_), tmp(n_), w(m_);
  for (int k = 1; k <= set_.max_iter; ++k) {
    y_prev_ = y_;
    for (int r = 0; r < m_; ++r) {
      w[r] = rho_vec_[r] * z_[r] - y_[r];
    }
    a_.multiply_transpose(w, tmp);
    for (int j = 0; j < n_; ++j) {
      rhs[j] = set_.sigma * x_[j] - q_[j] + tmp[j];
    }
    xt = rhs;
    ldlt_.solve(xt);
    a_.multiply(xt, zt);
    for (int j = 0; j < n_; ++j) {
      x_[j] = alpha * xt[j] + (1.0 - alpha) * x_[j];
    }
    for (int r = 0; r < m_; ++r) {
      const double zh = alpha * zt[r] + (1.0 - alpha) * z_[r];
      const double zn = std::clamp(zh + y_[r] / rho_vec_[r], l_[r], u_[r]);
      y_[r] += rho_vec_[r] * (zh - zn);
      z_[r] = zn;
    }
    compute_residuals();
    out.iterations = k;
    if (set_.trace) {
      out.trace.push_back({{"iter", k}, {"primal", prim_}, {"dual", dual_}, {"rho", rho_}});
    }

    if (prim_ <= eps_prim_ && dual_ <= eps_dual_) {
      out.status = SolveStatus::kOptimal;
      if (set_.polish) {
        out.polished = try_polish(out);
      }
      write_result(out);
      return out;
    }
    if (check_infeasible(out)) {
      out.status = SolveStatus::kInfeasible;
      write_result(out);
      return out;
    }
    const bool near = prim_ <= std::max(1e3 * eps_prim_, 1e-3) &&
                      dual_ <= std::max(1e3 * eps_dual_, 1e-3);
    if (set_.polish && near && try_polish(out)) {
      out.status = SolveStatus::kOptimal;
      out.polished = true;
      write_result(out);
      return out;
    }
    if (set_.time_limit_ms > 0.0 &&
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count() > set_.time_limit_ms) {
      out.status = SolveStatus::kTimeLimit;
      write_result(out);
      return out;
    }
    if (set_.adaptive_rho && k % set_.adaptive_rho_interval == 0) {
      const double ratio = std::sqrt(prim_scaled_ratio_ / std::max(dual_scaled_ratio_, 1e-30));
      const double rho_new = std::clamp(rho_ * ratio, 1e-6, 1e6);
      if (rho_new > 5.0 * rho_ || rho_new < 0.2 * rho_) {
        rho_ = rho_new;
        set_rho_vector();
        if (!factor_reduced()) {
          out.status = SolveStatus::kNumericalFailure;
          write_result(out);
          return out;
        }
      }
    }
  }
  out.status = SolveStatus::kMaxIterations;
  if (set_.polish && try_polish(out)) {
    out.status = SolveStatus::kOptimal;
    out.polished = true;
  }
  write_result(out);
  return out;
}

}  // namespace

QpResult solve_qp_admm(const QpData & qp, const QpSettings & settings, const QpWarmStart * warm)
{
  Admm admm(qp, settings);
  return admm.run(warm);
}

QpResiduals qp_residuals(const QpData & qp, const std::vector<double> & x, const std::vector<double> & y)
{
  const Csr a = to_csr(qp.num_rows(), qp.num_vars, qp.constraints);
  const SymEntries p = to_sym(qp.num_vars, qp.hessian);
  Vec ax, px, aty;
  a.multiply(x, ax);
  p.multiply(x, px);
  a.multiply_transpose(y, aty);
  QpResiduals r;
  for (int i = 0; i < qp.num_rows(); ++i) {
    r.primal = std::max(r.primal, std::max({0.0, qp.lower[i] - ax[i], ax[i] - qp.upper[i]}));
  }
  for (int j = 0; j < qp.num_vars; ++j) {
    r.dual = std::max(r.dual, std::abs(px[j] + qp.gradient[j] + aty[j]));
  }
  return r;
}

}  // namespace ecotraj

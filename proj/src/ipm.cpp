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
#include <limits>

#include "ecotraj/banded.hpp"
#include "ecotraj/error.hpp"
#include "ecotraj/nlp_solver.hpp"

namespace ecotraj
{

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

void jt_multiply(const std::vector<Triplet> & jac, const Vec & y, Vec & out)
{
  for (const auto & t : jac) {
    out[t.col] += t.value * y[t.row];
  }
}

double sym_quadratic(const std::vector<Triplet> & h, const Vec & x)
{
  double q = 0.0;
  for (const auto & t : h) {
    const double v = t.value * x[t.row] * x[t.col];
    q += t.row == t.col ? v : 2.0 * v;
  }
  return q;
}

/// Pushes a starting value strictly inside [lo, hi].
double push_inside(double v, double lo, double hi, double push, double frac)
{
  const bool has_lo = std::isfinite(lo);
  const bool has_hi = std::isfinite(hi);
  if (has_lo && has_hi) {
    const double pl = std::min(push * std::max(1.0, std::abs(lo)), frac * (hi - lo));
    const double pu = std::min(push * std::max(1.0, std::abs(hi)), frac * (hi - lo));
    return std::clamp(v, lo + pl, hi - pu);
  }
  if (has_lo) {
    return std::max(v, lo + push * std::max(1.0, std::abs(lo)));
  }
  if (has_hi) {
    return std::min(v, hi - push * std::max(1.0, std::abs(hi)));
  }
  return v;
}

/// Variables with two-sided boxes: primal value, bounds and the two multipliers.
struct BoxedVector
{
  Vec val, lo, hi, zl, zu;

  void init(std::size_t n)
  {
    val.assign(n, 0.0);
    lo.assign(n, -kInf);
    hi.assign(n, kInf);
    zl.assign(n, 0.0);
    zu.assign(n, 0.0);
  }

  void reset_duals(double mu)
  {
    for (std::size_t i = 0; i < val.size(); ++i) {
      zl[i] = std::isfinite(lo[i]) ? std::max(1.0, mu) : 0.0;
      zu[i] = std::isfinite(hi[i]) ? std::max(1.0, mu) : 0.0;
    }
  }

  double sigma(std::size_t i) const
  {
    double s = 0.0;
    if (std::isfinite(lo[i])) {
      s += zl[i] / (val[i] - lo[i]);
    }
    if (std::isfinite(hi[i])) {
      s += zu[i] / (hi[i] - val[i]);
    }
    return s;
  }

  /// d/dv of -mu sum log(distance).
  double barrier_gradient(std::size_t i, double mu) const
  {
    double g = 0.0;
    if (std::isfinite(lo[i])) {
      g -= mu / (val[i] - lo[i]);
    }
    if (std::isfinite(hi[i])) {
      g += mu / (hi[i] - val[i]);
    }
    return g;
  }

  double barrier(const Vec & v, double mu) const
  {
    double b = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::isfinite(lo[i])) {
        const double d = v[i] - lo[i];
        if (d <= 0.0) {
          return kInf;
        }
        b -= mu * std::log(d);
      }
      if (std::isfinite(hi[i])) {
        const double d = hi[i] - v[i];
        if (d <= 0.0) {
          return kInf;
        }
        b -= mu * std::log(d);
      }
    }
    return b;
  }

  double complementarity(double mu) const
  {
    double c = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (std::isfinite(lo[i])) {
        c = std::max(c, std::abs((val[i] - lo[i]) * zl[i] - mu));
      }
      if (std::isfinite(hi[i])) {
        c = std::max(c, std::abs((hi[i] - val[i]) * zu[i] - mu));
      }
    }
    return c;
  }

  double dual_norm1() const
  {
    double s = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      s += zl[i] + zu[i];
    }
    return s;
  }

  /// Largest step in (0, 1] keeping the primal values a fraction tau inside their bounds.
  double max_primal_step(const Vec & dv, double tau) const
  {
    double alpha = 1.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (dv[i] < 0.0 && std::isfinite(lo[i])) {
        alpha = std::min(alpha, -tau * (val[i] - lo[i]) / dv[i]);
      }
      if (dv[i] > 0.0 && std::isfinite(hi[i])) {
        alpha = std::min(alpha, tau * (hi[i] - val[i]) / dv[i]);
      }
    }
    return alpha;
  }

  void dual_steps(const Vec & dv, double mu, Vec & dzl, Vec & dzu) const
  {
    for (std::size_t i = 0; i < val.size(); ++i) {
      dzl[i] = 0.0;
      dzu[i] = 0.0;
      if (std::isfinite(lo[i])) {
        const double gap = val[i] - lo[i];
        dzl[i] = mu / gap - zl[i] - zl[i] / gap * dv[i];
      }
      if (std::isfinite(hi[i])) {
        const double gap = hi[i] - val[i];
        dzu[i] = mu / gap - zu[i] + zu[i] / gap * dv[i];
      }
    }
  }

  double max_dual_step(const Vec & dzl, const Vec & dzu, double tau) const
  {
    double alpha = 1.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (dzl[i] < 0.0 && std::isfinite(lo[i])) {
        alpha = std::min(alpha, -tau * zl[i] / dzl[i]);
      }
      if (dzu[i] < 0.0 && std::isfinite(hi[i])) {
        alpha = std::min(alpha, -tau * zu[i] / dzu[i]);
      }
    }
    return alpha;
  }

  /// Keeps each multiplier within a factor kappa of its primal-dual central value.
  void safeguard(double mu, double kappa)
  {
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (std::isfinite(lo[i])) {
        const double gap = val[i] - lo[i];
        zl[i] = std::clamp(zl[i], mu / (kappa * gap), kappa * mu / gap);
      }
      if (std::isfinite(hi[i])) {
        const double gap = hi[i] - val[i];
        zu[i] = std::clamp(zu[i], mu / (kappa * gap), kappa * mu / gap);
      }
    }
  }
};

}  // namespace

IpmResult solve_ipm(
  const SmoothProgram & program, std::span<const double> x0, const IpmSettings & settings)
{
  const int n = program.num_vars();
  const int me = program.num_eq();
  const int mi = program.num_ineq();
  if (static_cast<int>(x0.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument, "initial point has the wrong length");
  }

  BoxedVector x, s;
  x.init(n);
  s.init(mi);
  program.variable_bounds(x.lo, x.hi);
  program.ineq_bounds(s.lo, s.hi);
  for (int r = 0; r < mi; ++r) {
    if (!std::isfinite(s.lo[r]) && !std::isfinite(s.hi[r])) {
      throw Error(ErrorCode::kInvalidArgument, "inequality row without finite bounds");
    }
    if (!(s.lo[r] < s.hi[r])) {
      throw Error(ErrorCode::kInvalidArgument, "inequality row with empty range");
    }
  }
  for (int j = 0; j < n; ++j) {
    if (!(x.lo[j] < x.hi[j])) {
      throw Error(ErrorCode::kInvalidArgument, "variable with empty range");
    }
    x.val[j] = push_inside(x0[j], x.lo[j], x.hi[j], settings.bound_push, settings.bound_frac);
  }
  Vec d(mi), c(me), g(n);
  program.ineq_values(x.val, d);
  for (int r = 0; r < mi; ++r) {
    s.val[r] = push_inside(d[r], s.lo[r], s.hi[r], settings.bound_push, settings.bound_frac);
  }

  program.gradient(x.val, g);
  const double obj_scale = std::min(1.0, settings.max_gradient / std::max(inf_norm(g), 1e-300));

  double mu = settings.mu_init;
  x.reset_duals(1.0);
  s.reset_duals(1.0);
  Vec yc(me, 0.0), yd(mi, 0.0);

  // KKT ordering: rows are the equality rows followed by the inequality rows.
  std::vector<int> row_stage = program.eq_stages();
  const std::vector<int> ineq_stage = program.ineq_stages();
  row_stage.insert(row_stage.end(), ineq_stage.begin(), ineq_stage.end());
  const std::vector<int> var_stage = program.var_stages();
  const auto pairs = program.pivot_pairs();
  KktLayout layout = KktLayout::build(var_stage, row_stage, pairs);

  std::vector<Triplet> jc, jd, hess;
  program.eq_jacobian(x.val, jc);
  program.ineq_jacobian(x.val, jd);
  program.lagrangian_hessian(x.val, obj_scale, yc, yd, hess);
  layout.cover_hessian(hess);
  layout.cover_jacobian(jc, 0);
  layout.cover_jacobian(jd, me);

  IpmResult out;
  if (settings.trace) {
    out.trace = nlohmann::json::array();
  }

  const int nk = layout.size;
  BandedSymmetricMatrix kkt(nk, layout.bandwidth);
  BandedLdlt ldlt;
  Vec rhs(nk), sol(nk), resid(nk), tmp(nk);
  Vec rx(n), rs(mi), dx(n), ds(mi), dyc(me), dyd(mi);
  Vec dzl(n), dzu(n), dvl(mi), dvu(mi);
  Vec x_trial(n), s_trial(mi), c_trial(me), d_trial(mi);
  double delta_w_last = 0.0;
  double nu = 1.0;

  auto constraint_l1 = [&](const Vec & cc, const Vec & dd, const Vec & ss) {
    double t = 0.0;
    for (double v : cc) {
      t += std::abs(v);
    }
    for (int r = 0; r < mi; ++r) {
      t += std::abs(dd[r] - ss[r]);
    }
    return t;
  };

  const auto start = std::chrono::steady_clock::now();
  int iter = 0;
  for (;; ++iter) {
    const double f = program.objective(x.val) * obj_scale;
    program.gradient(x.val, g);
    for (double & v : g) {
      v *= obj_scale;
    }
    program.eq_values(x.val, c);
    program.ineq_values(x.val, d);
    program.eq_jacobian(x.val, jc);
    program.ineq_jacobian(x.val, jd);

    // Optimality errors.
    Vec lag(g);
    jt_multiply(jc, yc, lag);
    jt_multiply(jd, yd, lag);
    for (int j = 0; j < n; ++j) {
      lag[j] += -x.zl[j] + x.zu[j];
    }
    double dual_inf = inf_norm(lag);
    for (int r = 0; r < mi; ++r) {
      dual_inf = std::max(dual_inf, std::abs(-yd[r] - s.zl[r] + s.zu[r]));
    }
    double primal_inf = inf_norm(c);
    for (int r = 0; r < mi; ++r) {
      primal_inf = std::max(primal_inf, std::abs(d[r] - s.val[r]));
    }
    const double mult_count = static_cast<double>(me + mi + 2 * n + 2 * mi);
    const double y_sum = [&] {
      double t = 0.0;
      for (double v : yc) {
        t += std::abs(v);
      }
      for (double v : yd) {
        t += std::abs(v);
      }
      return t;
    }();
    const double z_sum = x.dual_norm1() + s.dual_norm1();
    const double s_d = std::max(100.0, (y_sum + z_sum) / std::max(mult_count, 1.0)) / 100.0;
    const double s_c = std::max(100.0, z_sum / std::max(2.0 * (n + mi), 1.0)) / 100.0;
    auto error_at = [&](double m) {
      const double comp = std::max(x.complementarity(m), s.complementarity(m));
      return std::max({dual_inf / s_d, primal_inf, comp / s_c});
    };

    out.iterations = iter;
    out.primal_infeasibility = primal_inf;
    out.dual_infeasibility = dual_inf / obj_scale;
    out.complementarity = std::max(x.complementarity(0.0), s.complementarity(0.0));
    out.mu = mu;

    if (error_at(0.0) <= settings.tol) {
      out.status = SolveStatus::kOptimal;
      break;
    }
    if (iter >= settings.max_iter) {
      out.status = SolveStatus::kMaxIterations;
      break;
    }
    if (settings.time_limit_ms > 0.0 &&
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count() > settings.time_limit_ms) {
      out.status = SolveStatus::kTimeLimit;
      break;
    }
    while (mu > settings.tol / 10.0 && error_at(mu) <= 10.0 * mu) {
      mu = std::max(settings.tol / 10.0, std::min(0.2 * mu, std::pow(mu, 1.5)));
    }
    const double tau = std::max(0.99, 1.0 - mu);

    program.lagrangian_hessian(x.val, obj_scale, yc, yd, hess);

    // Barrier residuals.
    for (int j = 0; j < n; ++j) {
      rx[j] = g[j] + x.barrier_gradient(j, mu);
    }
    jt_multiply(jc, yc, rx);
    jt_multiply(jd, yd, rx);
    Vec sig_s(mi);
    for (int r = 0; r < mi; ++r) {
      rs[r] = -yd[r] + s.barrier_gradient(r, mu);
      sig_s[r] = s.sigma(r);
    }

    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      rhs[layout.var_pos[j]] = -rx[j];
    }
    for (int r = 0; r < me; ++r) {
      rhs[layout.row_pos[r]] = -c[r];
    }
    for (int r = 0; r < mi; ++r) {
      rhs[layout.row_pos[me + r]] = -(d[r] - s.val[r]) - rs[r] / sig_s[r];
    }

    auto assemble = [&](double delta_w, double delta_c) {
      kkt.set_zero();
      for (const auto & t : hess) {
        kkt.add(layout.var_pos[t.row], layout.var_pos[t.col], t.value);
      }
      for (int j = 0; j < n; ++j) {
        kkt.add(layout.var_pos[j], layout.var_pos[j], x.sigma(j) + delta_w);
      }
      for (const auto & t : jc) {
        kkt.add(layout.row_pos[t.row], layout.var_pos[t.col], t.value);
      }
      for (const auto & t : jd) {
        kkt.add(layout.row_pos[me + t.row], layout.var_pos[t.col], t.value);
      }
      for (int r = 0; r < me; ++r) {
        kkt.add(layout.row_pos[r], layout.row_pos[r], -delta_c);
      }
      for (int r = 0; r < mi; ++r) {
        kkt.add(layout.row_pos[me + r], layout.row_pos[me + r], -1.0 / sig_s[r] - delta_c);
      }
    };

    // Inertia correction.
    double delta_w = 0.0;
    double delta_c = 0.0;
    bool factored = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      assemble(delta_w, delta_c);
      const bool ok = ldlt.factorize(kkt, layout.pivots);
      const Inertia in = ldlt.inertia();
      if (ok && in.positive == n && in.negative == me + mi && in.zero == 0) {
        factored = true;
        break;
      }
      if (!ok || in.zero > 0) {
        delta_c = 1e-8 * std::pow(mu, 0.25);
      }
      ++out.inertia_corrections;
      if (delta_w == 0.0) {
        delta_w = delta_w_last == 0.0 ? 1e-4 : std::max(1e-20, delta_w_last / 3.0);
      } else {
        delta_w *= delta_w_last == 0.0 ? 100.0 : 8.0;
      }
      if (delta_w > 1e40) {
        break;
      }
    }
    if (!factored) {
      out.status = SolveStatus::kNumericalFailure;
      break;
    }
    if (delta_w > 0.0) {
      delta_w_last = delta_w;
    }

    sol = rhs;
    ldlt.solve(sol);
    // One step of refinement against the factored matrix.
    kkt.multiply(sol, tmp);
    for (int i = 0; i < nk; ++i) {
      resid[i] = rhs[i] - tmp[i];
    }
    ldlt.solve(resid);
    for (int i = 0; i < nk; ++i) {
      sol[i] += resid[i];
    }

    for (int j = 0; j < n; ++j) {
      dx[j] = sol[layout.var_pos[j]];
    }
    for (int r = 0; r < me; ++r) {
      dyc[r] = sol[layout.row_pos[r]];
    }
    for (int r = 0; r < mi; ++r) {
      dyd[r] = sol[layout.row_pos[me + r]];
      ds[r] = (dyd[r] - rs[r]) / sig_s[r];
    }
    x.dual_steps(dx, mu, dzl, dzu);
    s.dual_steps(ds, mu, dvl, dvu);

    const double alpha_max = std::min(x.max_primal_step(dx, tau), s.max_primal_step(ds, tau));
    const double alpha_z = std::min(x.max_dual_step(dzl, dzu, tau), s.max_dual_step(dvl, dvu, tau));

    // l1 merit line search.
    const double theta = constraint_l1(c, d, s.val);
    double grad_dir = 0.0;
    for (int j = 0; j < n; ++j) {
      grad_dir += (g[j] + x.barrier_gradient(j, mu)) * dx[j];
    }
    for (int r = 0; r < mi; ++r) {
      grad_dir += s.barrier_gradient(r, mu) * ds[r];
    }
    if (theta > 0.0) {
      double quad = sym_quadratic(hess, dx);
      for (int j = 0; j < n; ++j) {
        quad += x.sigma(j) * dx[j] * dx[j];
      }
      for (int r = 0; r < mi; ++r) {
        quad += sig_s[r] * ds[r] * ds[r];
      }
      const double nu_req = (grad_dir + 0.5 * std::max(quad, 0.0)) / (0.9 * theta);
      if (nu < nu_req) {
        nu = nu_req + 1.0;
      }
    }
    const double merit0 = f + x.barrier(x.val, mu) + s.barrier(s.val, mu) + nu * theta;
    const double slope = grad_dir - nu * theta;

    double alpha = alpha_max;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (int j = 0; j < n; ++j) {
        x_trial[j] = x.val[j] + alpha * dx[j];
      }
      for (int r = 0; r < mi; ++r) {
        s_trial[r] = s.val[r] + alpha * ds[r];
      }
      program.eq_values(x_trial, c_trial);
      program.ineq_values(x_trial, d_trial);
      const double merit = program.objective(x_trial) * obj_scale + x.barrier(x_trial, mu) +
                           s.barrier(s_trial, mu) + nu * constraint_l1(c_trial, d_trial, s_trial);
      if (std::isfinite(merit) && merit <= merit0 + 1e-8 * alpha * slope + 1e-12 * std::abs(merit0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ++out.line_search_failures;
      alpha = alpha_max;
      for (int j = 0; j < n; ++j) {
        x_trial[j] = x.val[j] + alpha * dx[j];
      }
      for (int r = 0; r < mi; ++r) {
        s_trial[r] = s.val[r] + alpha * ds[r];
      }
    }

    x.val = x_trial;
    s.val = s_trial;
    for (int r = 0; r < me; ++r) {
      yc[r] += alpha * dyc[r];
    }
    for (int r = 0; r < mi; ++r) {
      yd[r] += alpha * dyd[r];
    }
    for (int j = 0; j < n; ++j) {
      x.zl[j] += alpha_z * dzl[j];
      x.zu[j] += alpha_z * dzu[j];
    }
    for (int r = 0; r < mi; ++r) {
      s.zl[r] += alpha_z * dvl[r];
      s.zu[r] += alpha_z * dvu[r];
    }
    x.safeguard(mu, settings.kappa_sigma);
    s.safeguard(mu, settings.kappa_sigma);

    if (settings.trace) {
      out.trace.push_back(
        {{"iter", iter},
         {"mu", mu},
         {"objective", f / obj_scale},
         {"primal", primal_inf},
         {"dual", dual_inf},
         {"alpha", alpha},
         {"alpha_z", alpha_z},
         {"delta_w", delta_w}});
    }
  }

  out.x = x.val;
  out.objective = program.objective(x.val);
  out.y_eq.resize(me);
  out.y_ineq.resize(mi);
  out.z.resize(n);
  for (int r = 0; r < me; ++r) {
    out.y_eq[r] = yc[r] / obj_scale;
  }
  for (int r = 0; r < mi; ++r) {
    out.y_ineq[r] = yd[r] / obj_scale;
  }
  for (int j = 0; j < n; ++j) {
    out.z[j] = (x.zl[j] - x.zu[j]) / obj_scale;
  }
  return out;
}

KktResiduals kkt_residuals(
  const SmoothProgram & program, std::span<const double> x, std::span<const double> y_eq,
  std::span<const double> y_ineq, std::span<const double> z)
{
  const int n = program.num_vars();
  const int me = program.num_eq();
  const int mi = program.num_ineq();
  Vec xl(n), xu(n), dl(mi), du(mi), g(n), c(me), d(mi);
  program.variable_bounds(xl, xu);
  program.ineq_bounds(dl, du);
  program.gradient(x, g);
  program.eq_values(x, c);
  program.ineq_values(x, d);
  std::vector<Triplet> jc, jd;
  program.eq_jacobian(x, jc);
  program.ineq_jacobian(x, jd);
  Vec yc(y_eq.begin(), y_eq.end());
  Vec yd(y_ineq.begin(), y_ineq.end());
  jt_multiply(jc, yc, g);
  jt_multiply(jd, yd, g);

  KktResiduals r;
  for (int j = 0; j < n; ++j) {
    r.stationarity = std::max(r.stationarity, std::abs(g[j] - z[j]));
    r.primal = std::max({r.primal, xl[j] - x[j], x[j] - xu[j]});
    if (z[j] > 0.0) {
      r.complementarity = std::max(
        r.complementarity, std::isfinite(xl[j]) ? (x[j] - xl[j]) * z[j] : 0.0);
      if (!std::isfinite(xl[j])) {
        r.dual_sign = std::max(r.dual_sign, z[j]);
      }
    } else if (z[j] < 0.0) {
      r.complementarity = std::max(
        r.complementarity, std::isfinite(xu[j]) ? (xu[j] - x[j]) * -z[j] : 0.0);
      if (!std::isfinite(xu[j])) {
        r.dual_sign = std::max(r.dual_sign, -z[j]);
      }
    }
  }
  for (int k = 0; k < me; ++k) {
    r.primal = std::max(r.primal, std::abs(c[k]));
  }
  for (int k = 0; k < mi; ++k) {
    r.primal = std::max({r.primal, dl[k] - d[k], d[k] - du[k]});
    if (yd[k] < 0.0) {
      r.complementarity = std::max(r.complementarity, (d[k] - dl[k]) * -yd[k]);
      if (!std::isfinite(dl[k])) {
        r.dual_sign = std::max(r.dual_sign, -yd[k]);
      }
    } else if (yd[k] > 0.0) {
      r.complementarity = std::max(r.complementarity, (du[k] - d[k]) * yd[k]);
      if (!std::isfinite(du[k])) {
        r.dual_sign = std::max(r.dual_sign, yd[k]);
      }
    }
  }
  r.primal = std::max(r.primal, 0.0);
  return r;
}

}  // namespace ecotraj

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

// Dense reference solvers used only by the tests. They share no code with the
// library solvers: equality rows are eliminated with an SVD null space and the
// remaining inequality QP is solved by the Goldfarb-Idnani dual active-set method,
// or, for tiny instances, by enumerating every active set.

#ifndef ECOTRAJ_TESTS__ORACLE__DENSE_QP_HPP_
#define ECOTRAJ_TESTS__ORACLE__DENSE_QP_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ecotraj/program.hpp"

namespace oracle
{

struct DenseQp
{
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  double constant = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double objective(const Eigen::VectorXd & x) const
  {
    return 0.5 * x.dot(P * x) + q.dot(x) + constant;
  }
};

inline DenseQp densify(const ecotraj::QpData & qp)
{
  DenseQp d;
  const int n = qp.num_vars;
  const int m = qp.num_rows();
  d.P = Eigen::MatrixXd::Zero(n, n);
  for (const auto & t : qp.hessian) {
    d.P(t.row, t.col) += t.value;
    if (t.row != t.col) {
      d.P(t.col, t.row) += t.value;
    }
  }
  d.q = Eigen::Map<const Eigen::VectorXd>(qp.gradient.data(), n);
  d.constant = qp.constant;
  d.A = Eigen::MatrixXd::Zero(m, n);
  for (const auto & t : qp.constraints) {
    d.A(t.row, t.col) += t.value;
  }
  d.lower = Eigen::Map<const Eigen::VectorXd>(qp.lower.data(), m);
  d.upper = Eigen::Map<const Eigen::VectorXd>(qp.upper.data(), m);
  return d;
}

/// Inequality-only problem  min 1/2 z'Hz + g'z  s.t.  C z >= b  in null-space coordinates.
struct Reduced
{
  Eigen::VectorXd x0;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd C;
  Eigen::VectorXd b;
  bool equalities_consistent = true;
};

inline Reduced reduce(const DenseQp & d, double eq_tol = 1e-12)
{
  const double big = 1e19;
  std::vector<int> eq;
  std::vector<int> ineq;
  for (int i = 0; i < d.A.rows(); ++i) {
    (std::abs(d.upper(i) - d.lower(i)) <= eq_tol ? eq : ineq).push_back(i);
  }
  const int n = static_cast<int>(d.P.rows());
  Reduced r;
  Eigen::MatrixXd Ae(eq.size(), n);
  Eigen::VectorXd be(eq.size());
  for (std::size_t k = 0; k < eq.size(); ++k) {
    Ae.row(k) = d.A.row(eq[k]);
    be(k) = d.lower(eq[k]);
  }
  if (eq.empty()) {
    r.x0 = Eigen::VectorXd::Zero(n);
    r.Z = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ae, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    const int rank = static_cast<int>(svd.rank());
    r.x0 = svd.solve(be);
    r.equalities_consistent = (Ae * r.x0 - be).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + be.cwiseAbs().maxCoeff());
    r.Z = svd.matrixV().rightCols(n - rank);
  }
  r.H = r.Z.transpose() * d.P * r.Z;
  r.g = r.Z.transpose() * (d.P * r.x0 + d.q);
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (const int i : ineq) {
    const Eigen::RowVectorXd a = d.A.row(i) * r.Z;
    const double ax0 = d.A.row(i).dot(r.x0);
    if (d.lower(i) > -big) {
      rows.push_back(a);
      rhs.push_back(d.lower(i) - ax0);
    }
    if (d.upper(i) < big) {
      rows.push_back(-a);
      rhs.push_back(ax0 - d.upper(i));
    }
  }
  r.C.resize(static_cast<Eigen::Index>(rows.size()), r.Z.cols());
  r.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    r.C.row(k) = rows[k];
    r.b(k) = rhs[k];
  }
  return r;
}

struct OracleResult
{
  bool feasible = false;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

/// Goldfarb-Idnani dual active-set method; needs H positive definite.
inline std::optional<Eigen::VectorXd> goldfarb_idnani(
  const Eigen::MatrixXd & H, const Eigen::VectorXd & g, const Eigen::MatrixXd & C,
  const Eigen::VectorXd & b, bool & infeasible, int & iterations, double tol = 1e-10)
{
  infeasible = false;
  iterations = 0;
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(C.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    return std::nullopt;
  }
  const Eigen::MatrixXd J = llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd x = -J * g;
  std::vector<int> active;
  std::vector<double> u;
  const double scale = 1.0 + C.cwiseAbs().maxCoeff();

  for (int outer = 0; outer < 10 * (m + n) + 100; ++outer) {
    // Most violated constraint, normalized by its row norm.
    int p = -1;
    double worst = -tol * scale;
    for (int i = 0; i < m; ++i) {
      const double s = (C.row(i).dot(x) - b(i)) / std::max(1.0, C.row(i).norm());
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      return x;
    }
    double u_p = 0.0;
    for (;;) {
      ++iterations;
      const int q = static_cast<int>(active.size());
      const Eigen::VectorXd np = C.row(p).transpose();
      Eigen::VectorXd z;
      Eigen::VectorXd r(q);
      if (q == 0) {
        z = J * np;
      } else {
        Eigen::MatrixXd N(n, q);
        for (int k = 0; k < q; ++k) {
          N.col(k) = C.row(active[k]).transpose();
        }
        const Eigen::MatrixXd NJN = N.transpose() * J * N;
        r = NJN.ldlt().solve(N.transpose() * J * np);
        z = J * (np - N * r);
      }
      double t1 = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (int k = 0; k < q; ++k) {
        if (r(k) > 1e-14 && u[k] / r(k) < t1) {
          t1 = u[k] / r(k);
          drop = k;
        }
      }
      const double zn = z.dot(np);
      const bool z_zero = z.norm() <= 1e-14 * (1.0 + np.norm());
      const double slack = C.row(p).dot(x) - b(p);
      const double t2 = z_zero ? std::numeric_limits<double>::infinity() : -slack / zn;
      if (z_zero && drop < 0) {
        infeasible = true;
        return std::nullopt;
      }
      const double t = std::min(t1, t2);
      if (!z_zero) {
        x += t * z;
      }
      for (int k = 0; k < q; ++k) {
        u[k] -= t * r(k);
      }
      u_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        u.push_back(u_p);
        break;
      }
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }
  return std::nullopt;
}

inline OracleResult solve_dense(const ecotraj::QpData & qp)
{
  const DenseQp d = densify(qp);
  const Reduced r = reduce(d);
  OracleResult out;
  if (!r.equalities_consistent) {
    return out;
  }
  bool infeasible = false;
  const auto z = goldfarb_idnani(r.H, r.g, r.C, r.b, infeasible, out.iterations);
  if (!z) {
    return out;
  }
  out.feasible = true;
  out.x = r.x0 + r.Z * *z;
  out.objective = d.objective(out.x);
  return out;
}

/// Exhaustive search over active sets of the reduced problem: every subset of at most
/// dim(z) rows is made tight, the equality-constrained minimizer is computed, and the
/// best primal-feasible, dual-feasible point is kept. Exponential; tiny problems only.
inline OracleResult solve_enumerate(const ecotraj::QpData & qp, int max_rows = 22)
{
  const DenseQp d = densify(qp);
  const Reduced r = reduce(d);
  OracleResult out;
  const int m = static_cast<int>(r.C.rows());
  const int n = static_cast<int>(r.H.rows());
  if (m > max_rows || !r.equalities_consistent) {
    return out;
  }
  double best = std::numeric_limits<double>::infinity();
  for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
    const int q = __builtin_popcountl(mask);
    if (q > n) {
      continue;
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + q, n + q);
    Eigen::VectorXd rhs(n + q);
    K.topLeftCorner(n, n) = r.H;
    rhs.head(n) = -r.g;
    int k = 0;
    for (int i = 0; i < m; ++i) {
      if (mask & (1ul << i)) {
        K.block(n + k, 0, 1, n) = r.C.row(i);
        K.block(0, n + k, n, 1) = -r.C.row(i).transpose();
        rhs(n + k) = r.b(i);
        ++k;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) {
      continue;
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    if ((r.C * z - r.b).minCoeff() < -1e-9 || (q > 0 && sol.tail(q).minCoeff() < -1e-9)) {
      continue;
    }
    const double f = 0.5 * z.dot(r.H * z) + r.g.dot(z);
    if (f < best) {
      best = f;
      out.x = r.x0 + r.Z * z;
    }
  }
  if (std::isfinite(best)) {
    out.feasible = true;
    out.objective = d.objective(out.x);
  }
  return out;
}

}  // namespace oracle

#endif  // ECOTRAJ_TESTS__ORACLE__DENSE_QP_HPP_

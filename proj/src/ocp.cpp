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

#include "ecotraj/ocp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace
{

void require(bool condition, const std::string & message)
{
  if (!condition) {
    throw Error(ErrorCode::kInvalidArgument, message);
  }
}

std::string lowercase(std::string_view text)
{
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

void require_length(std::span<const double> values, int expected, const char * what)
{
  require(
    static_cast<int>(values.size()) == expected,
    fmt::format("{} has {} entries, expected {}", what, values.size(), expected));
}

}  // namespace

std::string_view to_string(Method method)
{
  switch (method) {
    case Method::kQp:
      return "qp";
    case Method::kSqp:
      return "sqp";
    case Method::kNlp:
      return "nlp";
  }
  return "unknown";
}

Method method_from_string(std::string_view text)
{
  const std::string key = lowercase(text);
  if (key == "qp") {
    return Method::kQp;
  }
  if (key == "sqp") {
    return Method::kSqp;
  }
  if (key == "nlp") {
    return Method::kNlp;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown method '{}'", text));
}

void HorizonSpec::validate() const
{
  require(steps >= 1, "horizon needs at least one step");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(time_headway >= 0.0, "time headway must be non-negative");
  require(d_min > 0.0, "d_min must be positive");
  require(acc_margin >= 0.0, "acc margin must be non-negative");
  require(d_max - d_min > 2.0 * acc_margin, "d_max must exceed d_min");
  require(weights.w1 > 0.0 && weights.w2 > 0.0, "w1 and w2 must be positive");
  require(weights.w3 >= 0.0, "w3 must be non-negative");
  require(bounds.v_max > 0.0, "v_max must be positive");
  require(bounds.a_v_max > 0.0 && bounds.b_max > 0.0, "acceleration limits must be positive");
  require(bounds.u_max > 0.0, "u_max must be positive");
}

HorizonSpec HorizonSpec::for_method(
  Method method, const VehicleParams & params, double horizon_s, double dt)
{
  require(dt > 0.0, "dt must be positive");
  HorizonSpec spec;
  spec.dt = dt;
  spec.steps = static_cast<int>(std::lround(horizon_s / dt));
  spec.bounds = params.bounds;
  switch (method) {
    case Method::kQp:
      spec.weights = {0.1, 2.0, 0.0};
      spec.d_max = 100.0;
      break;
    case Method::kSqp:
      spec.weights = {0.1, 5.0, 2.0};
      spec.d_max = 200.0;
      break;
    case Method::kNlp:
      spec.weights = {0.1, 5.0, 10.0};
      spec.d_max = 100.0;
      break;
  }
  spec.validate();
  return spec;
}

Trajectory Trajectory::zeros(std::size_t nodes, bool with_traction)
{
  Trajectory t;
  t.s.assign(nodes, 0.0);
  t.v.assign(nodes, 0.0);
  t.a.assign(nodes, 0.0);
  if (with_traction) {
    t.u.assign(nodes, 0.0);
    t.b.assign(nodes, 0.0);
  }
  return t;
}

VariableLayout VariableLayout::linear(int steps)
{
  VariableLayout l;
  l.steps = steps;
  return l;
}

VariableLayout VariableLayout::full(int steps)
{
  VariableLayout l;
  l.steps = steps;
  l.per_step = 5;
  l.slot_s = 0;
  l.slot_v = 1;
  l.slot_u = 2;
  l.slot_a = 3;
  l.slot_b = 4;
  return l;
}

std::vector<double> VariableLayout::pack(const Trajectory & traj) const
{
  std::vector<double> x(num_vars(), 0.0);
  for (int i = 0; i <= steps; ++i) {
    x[s(i)] = traj.s[i];
    x[v(i)] = traj.v[i];
    x[a(i)] = traj.a[i];
    if (has_traction()) {
      x[u(i)] = traj.u[i];
      x[b(i)] = traj.b[i];
    }
  }
  return x;
}

Trajectory VariableLayout::unpack(std::span<const double> x) const
{
  Trajectory t = Trajectory::zeros(steps + 1, has_traction());
  for (int i = 0; i <= steps; ++i) {
    t.s[i] = x[s(i)];
    t.v[i] = x[v(i)];
    t.a[i] = x[a(i)];
    if (has_traction()) {
      t.u[i] = x[u(i)];
      t.b[i] = x[b(i)];
    }
  }
  return t;
}

double LinearRow::evaluate(std::span<const double> x) const
{
  double sum = 0.0;
  for (const auto & [var, coeff] : terms) {
    sum += coeff * x[var];
  }
  return sum;
}

double acc_gap(double lead_s, double s, double v, double time_headway)
{
  return lead_s - s - time_headway * v;
}

std::vector<LinearRow> build_acc_constraints(
  std::span<const double> lead_s_local, const HorizonSpec & spec, const VariableLayout & layout)
{
  require_length(lead_s_local, spec.steps + 1, "leader positions");
  std::vector<LinearRow> rows;
  rows.reserve(spec.steps + 1);
  for (int i = 0; i <= spec.steps; ++i) {
    LinearRow row;
    row.label = fmt::format("acc[{}]", i);
    row.stage = i;
    row.terms = {{layout.s(i), -1.0}, {layout.v(i), -spec.time_headway}};
    row.lower = spec.d_min + spec.acc_margin - lead_s_local[i];
    row.upper = spec.d_max - spec.acc_margin - lead_s_local[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LinearRow> build_kinematic_constraints(
  double v0, const HorizonSpec & spec, const VariableLayout & layout)
{
  const double dt = spec.dt;
  std::vector<LinearRow> rows;
  rows.reserve(2 * spec.steps + 2);
  rows.push_back({"pin_s", 0, {{layout.s(0), 1.0}}, 0.0, 0.0});
  rows.push_back({"pin_v", 0, {{layout.v(0), 1.0}}, v0, v0});
  for (int i = 0; i < spec.steps; ++i) {
    rows.push_back(
      {fmt::format("kin_s[{}]", i), i + 1,
       {{layout.s(i + 1), 1.0}, {layout.s(i), -1.0}, {layout.v(i), -dt},
        {layout.a(i), -0.5 * dt * dt}},
       0.0, 0.0});
    rows.push_back(
      {fmt::format("kin_v[{}]", i), i + 1,
       {{layout.v(i + 1), 1.0}, {layout.v(i), -1.0}, {layout.a(i), -dt}}, 0.0, 0.0});
  }
  return rows;
}

double DynamicConstraints::residual(int i, double v, double u, double a, double b) const
{
  return u - a - b - coeffs.k1 * v * v - grade_accel[i];
}

DynamicConstraints build_dynamic_constraints(
  std::span<const double> slope, const DerivedCoeffs & coeffs)
{
  DynamicConstraints dyn;
  dyn.coeffs = coeffs;
  dyn.grade_accel.reserve(slope.size());
  for (double g : slope) {
    dyn.grade_accel.push_back(coeffs.k2 * std::cos(g) + coeffs.k3 * std::sin(g));
  }
  return dyn;
}

double FuelQuadratic::evaluate(double v, double u) const
{
  const double dv_ = v - v_ref;
  const double du_ = u - u_ref;
  return value + dv * dv_ + du * du_ +
         0.5 * (hvv * dv_ * dv_ + 2.0 * hvu * dv_ * du_ + huu * du_ * du_);
}

FuelQuadratic fuel_quadratic(double v_ref, double u_ref, const FuelCoefficients & coeffs)
{
  const FuelDerivatives d = fuel_rate_hat_derivatives(v_ref, u_ref, coeffs);
  FuelQuadratic q;
  q.value = fuel_rate_hat(v_ref, u_ref, coeffs);
  q.dv = d.dv;
  q.du = d.du;
  q.v_ref = v_ref;
  q.u_ref = u_ref;

  // Projection of [[dvv, dvu], [dvu, duu]] onto the PSD cone via its eigenpairs.
  const double a = d.dvv;
  const double b = d.dvu;
  const double c = d.duu;
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  const double lambda1 = mean + radius;
  const double lambda2 = mean - radius;
  if (lambda2 >= 0.0) {
    q.hvv = a;
    q.hvu = b;
    q.huu = c;
  } else if (lambda1 <= 0.0) {
    q.hvv = q.hvu = q.huu = 0.0;
  } else {
    // Keep only lambda1 with eigenvector (e0, e1).
    double e0 = b;
    double e1 = lambda1 - a;
    if (std::abs(e0) + std::abs(e1) == 0.0) {
      e0 = lambda1 - c;
      e1 = b;
    }
    if (std::abs(e0) + std::abs(e1) == 0.0) {
      e0 = a >= c ? 1.0 : 0.0;
      e1 = a >= c ? 0.0 : 1.0;
    }
    const double norm2 = e0 * e0 + e1 * e1;
    q.hvv = lambda1 * e0 * e0 / norm2;
    q.hvu = lambda1 * e0 * e1 / norm2;
    q.huu = lambda1 * e1 * e1 / norm2;
  }
  return q;
}

VariableLayout HorizonProblem::layout() const
{
  return kind == ProblemKind::kQp ? VariableLayout::linear(spec.steps)
                                  : VariableLayout::full(spec.steps);
}

std::vector<double> HorizonProblem::lead_s_local() const
{
  std::vector<double> out(lead_s.size());
  for (std::size_t i = 0; i < lead_s.size(); ++i) {
    out[i] = lead_s[i] - initial.s;
  }
  return out;
}

HorizonProblem build_qp(
  const EgoState & x0, std::span<const double> lead_s, std::span<const double> lead_v,
  const HorizonSpec & spec)
{
  spec.validate();
  require_length(lead_s, spec.steps + 1, "leader positions");
  require_length(lead_v, spec.steps + 1, "leader speeds");
  require(std::isfinite(x0.s) && std::isfinite(x0.v), "initial state must be finite");
  HorizonProblem p;
  p.kind = ProblemKind::kQp;
  p.spec = spec;
  p.initial = x0;
  p.lead_s.assign(lead_s.begin(), lead_s.end());
  p.lead_v.assign(lead_v.begin(), lead_v.end());
  return p;
}

HorizonProblem build_nlp(
  const EgoState & x0, std::span<const double> lead_s, std::span<const double> lead_v,
  std::span<const double> slope, const DerivedCoeffs & coeffs, const FuelCoefficients & fuel,
  const HorizonSpec & spec)
{
  HorizonProblem p = build_qp(x0, lead_s, lead_v, spec);
  require_length(slope, spec.steps + 1, "slope sequence");
  p.kind = ProblemKind::kNlp;
  p.slope.assign(slope.begin(), slope.end());
  p.resistance = coeffs;
  p.fuel = fuel;
  return p;
}

HorizonProblem build_sqp_subproblem(
  const EgoState & x0, std::span<const double> lead_s, std::span<const double> lead_v,
  std::span<const double> slope, const DerivedCoeffs & coeffs, const FuelCoefficients & fuel,
  std::span<const double> ref_v, std::span<const double> ref_u, const HorizonSpec & spec)
{
  HorizonProblem p = build_nlp(x0, lead_s, lead_v, slope, coeffs, fuel, spec);
  require_length(ref_v, spec.steps + 1, "reference speeds");
  require_length(ref_u, spec.steps + 1, "reference traction");
  p.kind = ProblemKind::kSqpSubproblem;
  p.ref_v.assign(ref_v.begin(), ref_v.end());
  p.ref_u.assign(ref_u.begin(), ref_u.end());
  return p;
}

namespace
{

void append_row(QpData & qp, const LinearRow & row)
{
  const int r = qp.num_rows();
  for (const auto & [var, coeff] : row.terms) {
    qp.constraints.push_back({r, var, coeff});
  }
  qp.lower.push_back(row.lower);
  qp.upper.push_back(row.upper);
  qp.row_labels.push_back(row.label);
  qp.row_stage.push_back(row.stage);
}

void append_box(QpData & qp, const std::string & label, int stage, int var, double lo, double hi)
{
  append_row(qp, LinearRow{label, stage, {{var, 1.0}}, lo, hi});
}

}  // namespace

QpData to_qp_data(const HorizonProblem & problem)
{
  require(problem.kind != ProblemKind::kNlp, "the exact formulation has no QP form");
  const HorizonSpec & spec = problem.spec;
  const VariableLayout layout = problem.layout();
  const int n = spec.steps;
  const Weights & w = spec.weights;
  const bool full = layout.has_traction();

  QpData qp;
  qp.num_vars = layout.num_vars();
  qp.gradient.assign(qp.num_vars, 0.0);
  qp.var_stage.resize(qp.num_vars);
  for (int i = 0; i < qp.num_vars; ++i) {
    qp.var_stage[i] = i / layout.per_step;
  }

  for (int i = 0; i <= n; ++i) {
    const double vl = problem.lead_v[i];
    qp.hessian.push_back({layout.v(i), layout.v(i), 2.0 * w.w1});
    qp.gradient[layout.v(i)] += -2.0 * w.w1 * vl;
    qp.constant += w.w1 * vl * vl;
    qp.hessian.push_back({layout.a(i), layout.a(i), 2.0 * w.w2});
    if (full) {
      qp.hessian.push_back({layout.b(i), layout.b(i), 2.0 * w.w2});
      const FuelQuadratic f = fuel_quadratic(problem.ref_v[i], problem.ref_u[i], problem.fuel);
      const double zv = f.v_ref;
      const double zu = f.u_ref;
      qp.hessian.push_back({layout.v(i), layout.v(i), w.w3 * f.hvv});
      qp.hessian.push_back({layout.u(i), layout.v(i), w.w3 * f.hvu});
      qp.hessian.push_back({layout.u(i), layout.u(i), w.w3 * f.huu});
      const double hz_v = f.hvv * zv + f.hvu * zu;
      const double hz_u = f.hvu * zv + f.huu * zu;
      qp.gradient[layout.v(i)] += w.w3 * (f.dv - hz_v);
      qp.gradient[layout.u(i)] += w.w3 * (f.du - hz_u);
      qp.constant += w.w3 * (f.value - f.dv * zv - f.du * zu + 0.5 * (zv * hz_v + zu * hz_u));
    }
  }

  const auto kin = build_kinematic_constraints(problem.initial.v, spec, layout);
  for (const auto & row : kin) {
    append_row(qp, row);
  }
  qp.pivot_pairs.push_back({layout.s(0), 0});
  for (int i = 0; i < n; ++i) {
    qp.pivot_pairs.push_back({layout.s(i + 1), 2 + 2 * i});
  }

  if (full) {
    const DynamicConstraints dyn = build_dynamic_constraints(problem.slope, problem.resistance);
    const double k1 = problem.resistance.k1;
    for (int i = 0; i <= n; ++i) {
      const double vr = problem.ref_v[i];
      const double rhs = dyn.grade_accel[i] - k1 * vr * vr;
      append_row(
        qp, LinearRow{
              fmt::format("dyn[{}]", i), i,
              {{layout.v(i), -2.0 * k1 * vr}, {layout.u(i), 1.0}, {layout.a(i), -1.0},
               {layout.b(i), -1.0}},
              rhs, rhs});
    }
  }

  const auto acc = build_acc_constraints(problem.lead_s_local(), spec, layout);
  for (const auto & row : acc) {
    append_row(qp, row);
  }

  const VehicleBounds & bd = spec.bounds;
  for (int i = 0; i <= n; ++i) {
    if (i >= 1) {
      append_box(qp, fmt::format("v_bound[{}]", i), i, layout.v(i), 0.0, bd.v_max);
    }
    append_box(qp, fmt::format("a_bound[{}]", i), i, layout.a(i), -bd.b_max, bd.a_v_max);
    if (full) {
      append_box(qp, fmt::format("u_bound[{}]", i), i, layout.u(i), 0.0, bd.u_max);
      append_box(qp, fmt::format("b_bound[{}]", i), i, layout.b(i), 0.0, bd.b_max);
    }
  }
  return qp;
}

namespace
{

class HorizonNlp final : public SmoothProgram
{
public:
  explicit HorizonNlp(const HorizonProblem & problem)
  : problem_(problem),
    layout_(VariableLayout::full(problem.spec.steps)),
    dyn_(build_dynamic_constraints(problem.slope, problem.resistance)),
    kin_(build_kinematic_constraints(problem.initial.v, problem.spec, layout_)),
    acc_(build_acc_constraints(problem.lead_s_local(), problem.spec, layout_))
  {
  }

  int num_vars() const override { return layout_.num_vars(); }
  int num_eq() const override { return static_cast<int>(kin_.size()) + steps() + 1; }
  int num_ineq() const override { return static_cast<int>(acc_.size()); }

  void variable_bounds(std::span<double> lo, std::span<double> hi) const override
  {
    const VehicleBounds & bd = problem_.spec.bounds;
    for (int i = 0; i <= steps(); ++i) {
      lo[layout_.s(i)] = -kInf;
      hi[layout_.s(i)] = kInf;
      // V_0 is fixed by its equality row; a second bound would only add a degenerate pair.
      lo[layout_.v(i)] = i == 0 ? -kInf : 0.0;
      hi[layout_.v(i)] = i == 0 ? kInf : bd.v_max;
      lo[layout_.u(i)] = 0.0;
      hi[layout_.u(i)] = bd.u_max;
      lo[layout_.a(i)] = -bd.b_max;
      hi[layout_.a(i)] = bd.a_v_max;
      lo[layout_.b(i)] = 0.0;
      hi[layout_.b(i)] = bd.b_max;
    }
  }

  void ineq_bounds(std::span<double> lo, std::span<double> hi) const override
  {
    for (std::size_t r = 0; r < acc_.size(); ++r) {
      lo[r] = acc_[r].lower;
      hi[r] = acc_[r].upper;
    }
  }

  double objective(std::span<const double> x) const override
  {
    const Weights & w = problem_.spec.weights;
    double f = 0.0;
    for (int i = 0; i <= steps(); ++i) {
      const double dv = problem_.lead_v[i] - x[layout_.v(i)];
      const double a = x[layout_.a(i)];
      const double b = x[layout_.b(i)];
      f += w.w1 * dv * dv + w.w2 * (a * a + b * b) +
           w.w3 * fuel_rate_hat(x[layout_.v(i)], x[layout_.u(i)], problem_.fuel);
    }
    return f;
  }

  void gradient(std::span<const double> x, std::span<double> g) const override
  {
    const Weights & w = problem_.spec.weights;
    std::fill(g.begin(), g.end(), 0.0);
    for (int i = 0; i <= steps(); ++i) {
      const double v = x[layout_.v(i)];
      const FuelDerivatives d = fuel_rate_hat_derivatives(v, x[layout_.u(i)], problem_.fuel);
      g[layout_.v(i)] = -2.0 * w.w1 * (problem_.lead_v[i] - v) + w.w3 * d.dv;
      g[layout_.u(i)] = w.w3 * d.du;
      g[layout_.a(i)] = 2.0 * w.w2 * x[layout_.a(i)];
      g[layout_.b(i)] = 2.0 * w.w2 * x[layout_.b(i)];
    }
  }

  void eq_values(std::span<const double> x, std::span<double> c) const override
  {
    const int nk = static_cast<int>(kin_.size());
    for (int r = 0; r < nk; ++r) {
      c[r] = kin_[r].evaluate(x) - kin_[r].lower;
    }
    for (int i = 0; i <= steps(); ++i) {
      c[nk + i] = dyn_.residual(
        i, x[layout_.v(i)], x[layout_.u(i)], x[layout_.a(i)], x[layout_.b(i)]);
    }
  }

  void ineq_values(std::span<const double> x, std::span<double> d) const override
  {
    for (std::size_t r = 0; r < acc_.size(); ++r) {
      d[r] = acc_[r].evaluate(x);
    }
  }

  void eq_jacobian(std::span<const double> x, std::vector<Triplet> & out) const override
  {
    out.clear();
    const int nk = static_cast<int>(kin_.size());
    for (int r = 0; r < nk; ++r) {
      for (const auto & [var, coeff] : kin_[r].terms) {
        out.push_back({r, var, coeff});
      }
    }
    const double k1 = problem_.resistance.k1;
    for (int i = 0; i <= steps(); ++i) {
      const int r = nk + i;
      out.push_back({r, layout_.v(i), -2.0 * k1 * x[layout_.v(i)]});
      out.push_back({r, layout_.u(i), 1.0});
      out.push_back({r, layout_.a(i), -1.0});
      out.push_back({r, layout_.b(i), -1.0});
    }
  }

  void ineq_jacobian(std::span<const double> /*x*/, std::vector<Triplet> & out) const override
  {
    out.clear();
    for (std::size_t r = 0; r < acc_.size(); ++r) {
      for (const auto & [var, coeff] : acc_[r].terms) {
        out.push_back({static_cast<int>(r), var, coeff});
      }
    }
  }

  void lagrangian_hessian(
    std::span<const double> x, double obj_factor, std::span<const double> y_eq,
    std::span<const double> /*y_ineq*/, std::vector<Triplet> & out) const override
  {
    out.clear();
    const Weights & w = problem_.spec.weights;
    const int nk = static_cast<int>(kin_.size());
    const double k1 = problem_.resistance.k1;
    for (int i = 0; i <= steps(); ++i) {
      const int iv = layout_.v(i);
      const int iu = layout_.u(i);
      const FuelDerivatives d = fuel_rate_hat_derivatives(x[iv], x[iu], problem_.fuel);
      out.push_back({iv, iv, obj_factor * (2.0 * w.w1 + w.w3 * d.dvv) - 2.0 * k1 * y_eq[nk + i]});
      out.push_back({iu, iv, obj_factor * w.w3 * d.dvu});
      out.push_back({iu, iu, obj_factor * w.w3 * d.duu});
      out.push_back({layout_.a(i), layout_.a(i), obj_factor * 2.0 * w.w2});
      out.push_back({layout_.b(i), layout_.b(i), obj_factor * 2.0 * w.w2});
    }
  }

  std::vector<int> var_stages() const override
  {
    std::vector<int> st(num_vars());
    for (int i = 0; i < num_vars(); ++i) {
      st[i] = i / layout_.per_step;
    }
    return st;
  }

  std::vector<int> eq_stages() const override
  {
    std::vector<int> st;
    for (const auto & row : kin_) {
      st.push_back(row.stage);
    }
    for (int i = 0; i <= steps(); ++i) {
      st.push_back(i);
    }
    return st;
  }

  std::vector<int> ineq_stages() const override
  {
    std::vector<int> st;
    for (const auto & row : acc_) {
      st.push_back(row.stage);
    }
    return st;
  }

  std::vector<std::pair<int, int>> pivot_pairs() const override
  {
    std::vector<std::pair<int, int>> pairs{{layout_.s(0), 0}};
    for (int i = 0; i < steps(); ++i) {
      pairs.push_back({layout_.s(i + 1), 2 + 2 * i});
    }
    return pairs;
  }

  std::string eq_label(int row) const override
  {
    const int nk = static_cast<int>(kin_.size());
    return row < nk ? kin_[row].label : fmt::format("dyn[{}]", row - nk);
  }

  std::string ineq_label(int row) const override { return acc_[row].label; }

private:
  int steps() const { return problem_.spec.steps; }

  HorizonProblem problem_;
  VariableLayout layout_;
  DynamicConstraints dyn_;
  std::vector<LinearRow> kin_;
  std::vector<LinearRow> acc_;
};

}  // namespace

std::unique_ptr<SmoothProgram> make_nlp_program(const HorizonProblem & problem)
{
  require(problem.kind == ProblemKind::kNlp, "make_nlp_program needs the exact formulation");
  return std::make_unique<HorizonNlp>(problem);
}

Trajectory default_initial_guess(const HorizonProblem & problem)
{
  const int n = problem.spec.steps;
  const bool full = problem.kind != ProblemKind::kQp;
  const double v0 = problem.initial.v;
  const VehicleBounds & bd = problem.spec.bounds;
  Trajectory t = Trajectory::zeros(n + 1, full);
  for (int i = 0; i <= n; ++i) {
    t.s[i] = problem.initial.s + i * problem.spec.dt * v0;
    t.v[i] = v0;
    if (full) {
      const double r = resistance_accel(v0, problem.slope[i], problem.resistance);
      t.u[i] = std::clamp(r, 0.0, bd.u_max);
      t.b[i] = std::clamp(-r, 0.0, bd.b_max);
      t.a[i] = t.u[i] - r - t.b[i];
    }
  }
  return t;
}

double evaluate_objective(const HorizonProblem & problem, const Trajectory & traj)
{
  const Weights & w = problem.spec.weights;
  double f = 0.0;
  for (int i = 0; i <= problem.spec.steps; ++i) {
    const double dv = problem.lead_v[i] - traj.v[i];
    f += w.w1 * dv * dv + w.w2 * traj.a[i] * traj.a[i];
    if (problem.kind == ProblemKind::kQp) {
      continue;
    }
    f += w.w2 * traj.b[i] * traj.b[i];
    if (problem.kind == ProblemKind::kNlp) {
      f += w.w3 * fuel_rate_hat(traj.v[i], traj.u[i], problem.fuel);
    } else {
      f += w.w3 * fuel_quadratic(problem.ref_v[i], problem.ref_u[i], problem.fuel)
                    .evaluate(traj.v[i], traj.u[i]);
    }
  }
  return f;
}

double ResidualReport::max_violation() const
{
  return std::max({pin, kinematic, dynamic, acc_violation, bound_violation});
}

ResidualReport check_solution(const HorizonProblem & problem, const Trajectory & traj)
{
  const HorizonSpec & spec = problem.spec;
  const int n = spec.steps;
  require(static_cast<int>(traj.size()) == n + 1, "trajectory length does not match horizon");
  ResidualReport rep;
  double worst = 0.0;
  auto note = [&](double & field, double value, const std::string & label) {
    field = std::max(field, value);
    if (value > worst) {
      worst = value;
      rep.worst = label;
    }
  };

  note(rep.pin, std::abs(traj.s[0] - problem.initial.s), "pin_s");
  note(rep.pin, std::abs(traj.v[0] - problem.initial.v), "pin_v");
  const double dt = spec.dt;
  for (int i = 0; i < n; ++i) {
    const double es = traj.s[i + 1] - traj.s[i] - dt * traj.v[i] - 0.5 * dt * dt * traj.a[i];
    const double ev = traj.v[i + 1] - traj.v[i] - dt * traj.a[i];
    note(rep.kinematic, std::abs(es), fmt::format("kin_s[{}]", i));
    note(rep.kinematic, std::abs(ev), fmt::format("kin_v[{}]", i));
  }

  const VehicleBounds & bd = spec.bounds;
  auto box = [&](double value, double lo, double hi, const std::string & label) {
    note(rep.bound_violation, std::max({0.0, lo - value, value - hi}), label);
  };
  const bool full = problem.kind != ProblemKind::kQp;
  rep.min_fuel_rate = full ? kInf : 0.0;
  for (int i = 0; i <= n; ++i) {
    const double gap = acc_gap(problem.lead_s[i], traj.s[i], traj.v[i], spec.time_headway);
    note(
      rep.acc_violation, std::max({0.0, spec.d_min - gap, gap - spec.d_max}),
      fmt::format("acc[{}]", i));
    if (i >= 1) {
      box(traj.v[i], 0.0, bd.v_max, fmt::format("v_bound[{}]", i));
    }
    box(traj.a[i], -bd.b_max, bd.a_v_max, fmt::format("a_bound[{}]", i));
    if (!full) {
      continue;
    }
    box(traj.u[i], 0.0, bd.u_max, fmt::format("u_bound[{}]", i));
    box(traj.b[i], 0.0, bd.b_max, fmt::format("b_bound[{}]", i));
    const DerivedCoeffs & k = problem.resistance;
    const double grade = k.k2 * std::cos(problem.slope[i]) + k.k3 * std::sin(problem.slope[i]);
    double r = 0.0;
    if (problem.kind == ProblemKind::kNlp) {
      r = k.k1 * traj.v[i] * traj.v[i] + grade;
    } else {
      const double vr = problem.ref_v[i];
      r = k.k1 * (vr * vr + 2.0 * vr * (traj.v[i] - vr)) + grade;
    }
    note(rep.dynamic, std::abs(traj.u[i] - traj.a[i] - traj.b[i] - r), fmt::format("dyn[{}]", i));
    rep.min_fuel_rate = std::min(rep.min_fuel_rate, fuel_rate_hat(traj.v[i], traj.u[i], problem.fuel));
  }
  return rep;
}

namespace
{

nlohmann::json triplets_json(const std::vector<Triplet> & entries)
{
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json cols = nlohmann::json::array();
  nlohmann::json vals = nlohmann::json::array();
  for (const auto & t : entries) {
    rows.push_back(t.row);
    cols.push_back(t.col);
    vals.push_back(t.value);
  }
  return {{"row", rows}, {"col", cols}, {"value", vals}};
}

std::string_view kind_name(ProblemKind kind)
{
  switch (kind) {
    case ProblemKind::kQp:
      return "qp";
    case ProblemKind::kSqpSubproblem:
      return "sqp_subproblem";
    case ProblemKind::kNlp:
      return "nlp";
  }
  return "unknown";
}

}  // namespace

nlohmann::json dump_problem(const HorizonProblem & problem)
{
  const HorizonSpec & spec = problem.spec;
  nlohmann::json j;
  j["kind"] = kind_name(problem.kind);
  j["spec"] = {
    {"steps", spec.steps},
    {"dt", spec.dt},
    {"time_headway", spec.time_headway},
    {"d_min", spec.d_min},
    {"d_max", spec.d_max},
    {"acc_margin", spec.acc_margin},
    {"use_slope_prediction", spec.use_slope_prediction},
    {"weights", {{"w1", spec.weights.w1}, {"w2", spec.weights.w2}, {"w3", spec.weights.w3}}},
    {"bounds",
     {{"v_max", spec.bounds.v_max},
      {"a_v_max", spec.bounds.a_v_max},
      {"b_max", spec.bounds.b_max},
      {"u_max", spec.bounds.u_max}}}};
  j["initial"] = {{"s", problem.initial.s}, {"v", problem.initial.v}};
  j["lead_s"] = problem.lead_s;
  j["lead_v"] = problem.lead_v;
  if (problem.kind != ProblemKind::kQp) {
    j["slope"] = problem.slope;
    j["resistance"] = {
      {"k1", problem.resistance.k1}, {"k2", problem.resistance.k2}, {"k3", problem.resistance.k3}};
    j["fuel"] = to_json(problem.fuel);
  }
  if (problem.kind == ProblemKind::kSqpSubproblem) {
    j["ref_v"] = problem.ref_v;
    j["ref_u"] = problem.ref_u;
  }
  if (problem.kind == ProblemKind::kNlp) {
    const auto prog = make_nlp_program(problem);
    const Trajectory guess = default_initial_guess(problem);
    std::vector<double> x = VariableLayout::full(spec.steps).pack(guess);
    for (int i = 0; i <= spec.steps; ++i) {
      x[VariableLayout::full(spec.steps).s(i)] -= problem.initial.s;
    }
    std::vector<Triplet> jac;
    prog->eq_jacobian(x, jac);
    j["eq_jacobian"] = triplets_json(jac);
    prog->ineq_jacobian(x, jac);
    j["ineq_jacobian"] = triplets_json(jac);
    j["num_vars"] = prog->num_vars();
    j["num_eq"] = prog->num_eq();
    j["num_ineq"] = prog->num_ineq();
  } else {
    const QpData qp = to_qp_data(problem);
    j["num_vars"] = qp.num_vars;
    j["P"] = triplets_json(qp.hessian);
    j["q"] = qp.gradient;
    j["constant"] = qp.constant;
    j["A"] = triplets_json(qp.constraints);
    j["l"] = qp.lower;
    j["u"] = qp.upper;
    j["row_labels"] = qp.row_labels;
  }
  return j;
}

}  // namespace ecotraj

#include "rta/filters.hpp"

#include <cmath>
#include <iostream>

#include "rta/derivatives.hpp"

namespace rta {

RtaFilter::RtaFilter(int state_dim, ActuationLimits limits)
    : state_dim_(state_dim), limits_(std::move(limits)) {
  if (limits_.lower.size() != limits_.upper.size() || limits_.lower.size() == 0)
    throw std::invalid_argument("filter: malformed actuation limits");
  if (!limits_.lower.allFinite() || !limits_.upper.allFinite() ||
      (limits_.lower.array() > limits_.upper.array()).any())
    throw std::invalid_argument("filter: actuation limits must be finite with lower <= upper");
}

FilterOutcome RtaFilter::filter(const Vector& x, const Vector& u_des, double t) {
  if (x.size() != state_dim_)
    throw std::invalid_argument("filter: state size " + std::to_string(x.size()) + " != " +
                                std::to_string(state_dim_));
  if (u_des.size() != control_dim())
    throw std::invalid_argument("filter: control size mismatch");
  if (!x.allFinite() || !u_des.allFinite())
    throw std::invalid_argument("filter: non-finite state or desired control");

  FilterOutcome out = apply(x, u_des, t);
  out.u_act = limits_.clamp(out.u_act);  // u_act in U, exactly, no matter the core
  out.intervened = (out.u_act - u_des).lpNorm<Eigen::Infinity>() > kInterventionTol;
  return out;
}

PassthroughFilter::PassthroughFilter(int state_dim, ActuationLimits limits)
    : RtaFilter(state_dim, std::move(limits)) {}

FilterOutcome PassthroughFilter::apply(const Vector&, const Vector& u_des, double) {
  FilterOutcome out;
  out.u_act = u_des;
  return out;
}

ExplicitSimplexFilter::ExplicitSimplexFilter(ControlAffineDynamics dyn,
                                             std::vector<SafetyConstraint> constraints,
                                             std::shared_ptr<BackupController> backup,
                                             double predict_dt, ActuationLimits limits)
    : RtaFilter(dyn.state_dim(), std::move(limits)),
      dyn_(std::move(dyn)),
      constraints_(std::move(constraints)),
      backup_(std::move(backup)),
      predict_dt_(predict_dt) {
  if (!backup_) throw std::invalid_argument("explicit simplex: backup controller required");
  if (!(predict_dt_ > 0.0))
    throw std::invalid_argument("explicit simplex: prediction interval must be positive");
}

FilterOutcome ExplicitSimplexFilter::apply(const Vector& x, const Vector& u_des, double t) {
  FilterOutcome out;
  const Vector u_try = limits().clamp(u_des);
  bool safe = false;
  bool predicted = false;
  try {
    const Vector x_plus = dyn_.propagate(x, u_try, predict_dt_);
    safe = in_allowable_set(constraints_, x_plus, 0.0).inside;
    predicted = true;
  } catch (const std::exception& e) {
    std::cerr << "explicit simplex: prediction failed (" << e.what()
              << "); engaging backup control\n";
  }
  if (predicted && safe) {
    backup_->internal_state().clear();  // disengaged: set points re-capture next time
    out.u_act = u_try;
  } else {
    out.u_act = backup_->control(x, t);
  }
  return out;
}

ImplicitSimplexFilter::ImplicitSimplexFilter(ControlAffineDynamics dyn,
                                             std::vector<SafetyConstraint> constraints,
                                             std::shared_ptr<BackupController> backup,
                                             double predict_dt, double horizon, double dt_b,
                                             ActuationLimits limits)
    : RtaFilter(dyn.state_dim(), std::move(limits)),
      dyn_(std::move(dyn)),
      constraints_(std::move(constraints)),
      backup_(std::move(backup)),
      predict_dt_(predict_dt),
      horizon_(horizon),
      dt_b_(dt_b) {
  if (!backup_) throw std::invalid_argument("implicit simplex: backup controller required");
  if (!(predict_dt_ > 0.0) || !(horizon_ > 0.0) || !(dt_b_ > 0.0))
    throw std::invalid_argument("implicit simplex: intervals and horizon must be positive");
}

FilterOutcome ImplicitSimplexFilter::apply(const Vector& x, const Vector& u_des, double t) {
  FilterOutcome out;
  const Vector u_try = limits().clamp(u_des);
  bool safe = false;
  bool predicted = false;
  try {
    const Vector x_plus = dyn_.propagate(x, u_try, predict_dt_);
    const BackupTrajectory traj = compute_backup_trajectory(dyn_, *backup_, x_plus, horizon_, dt_b_);
    safe = true;
    for (const Vector& xs : traj.states)
      if (!in_allowable_set(constraints_, xs, 0.0).inside) {
        safe = false;
        break;
      }
    predicted = true;
  } catch (const std::exception& e) {
    std::cerr << "implicit simplex: prediction failed (" << e.what()
              << "); engaging backup control\n";
  }
  if (predicted && safe) {
    backup_->internal_state().clear();
    out.u_act = u_try;
  } else {
    out.u_act = backup_->control(x, t);
  }
  return out;
}

std::vector<BarrierRow> build_explicit_barrier_rows(const Vector& x,
                                                    const std::vector<SafetyConstraint>& cs,
                                                    const ControlAffineDynamics& dyn) {
  if (x.size() != dyn.state_dim())
    throw std::invalid_argument("barrier rows: state size mismatch");
  const Vector fx = dyn.drift()(x);
  const Matrix gx = dyn.input_map()(x);

  std::vector<BarrierRow> rows;
  rows.reserve(cs.size());
  for (const SafetyConstraint& c : cs) {
    Vector grad;
    double h = 0.0;
    try {
      grad = gradient(c.h, x);
      h = c.h(x);
    } catch (const std::exception& e) {
      throw std::runtime_error("barrier row for constraint '" + c.name + "': " + e.what());
    }
    BarrierRow row;
    row.coeff = gx.transpose() * grad;
    row.offset = -(grad.dot(fx) + c.alpha(h));
    row.source = c.name;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

// Indices kept for one constraint: the shared stride comb plus (optionally)
// all local minima of its trace, boundary points included.
std::vector<int> retained_indices(const std::vector<double>& vals, int stride,
                                  bool include_local_minima) {
  const int len = static_cast<int>(vals.size());
  std::vector<bool> keep(static_cast<std::size_t>(len), false);
  for (int j = 0; j < len; j += stride) keep[static_cast<std::size_t>(j)] = true;
  if (include_local_minima && len > 1) {
    for (int j = 0; j < len; ++j) {
      const bool left_ok = (j == 0) || vals[static_cast<std::size_t>(j)] <= vals[static_cast<std::size_t>(j - 1)];
      const bool right_ok =
          (j == len - 1) || vals[static_cast<std::size_t>(j)] <= vals[static_cast<std::size_t>(j + 1)];
      if (left_ok && right_ok) keep[static_cast<std::size_t>(j)] = true;
    }
  }
  std::vector<int> out;
  for (int j = 0; j < len; ++j)
    if (keep[static_cast<std::size_t>(j)]) out.push_back(j);
  return out;
}

}  // namespace

std::vector<BarrierRow> build_implicit_barrier_rows(const Vector& x, const BackupTrajectory& traj,
                                                    const std::vector<SafetyConstraint>& cs,
                                                    const ControlAffineDynamics& dyn,
                                                    BackupController& backup, int stride,
                                                    bool include_local_minima,
                                                    int sensitivity_substeps) {
  if (stride < 1) throw std::invalid_argument("implicit barrier rows: stride must be >= 1");
  if (traj.states.empty()) throw std::invalid_argument("implicit barrier rows: empty trajectory");
  if (x.size() != dyn.state_dim())
    throw std::invalid_argument("implicit barrier rows: state size mismatch");

  const std::vector<Matrix> D = sensitivity_matrices(dyn, backup, traj, sensitivity_substeps);
  const Vector fx = dyn.drift()(x);
  const Matrix gx = dyn.input_map()(x);

  std::vector<BarrierRow> rows;
  std::vector<double> vals(traj.states.size());
  for (const SafetyConstraint& c : cs) {
    for (std::size_t j = 0; j < traj.states.size(); ++j) vals[j] = evaluate(c, traj.states[j]);
    for (int j : retained_indices(vals, stride, include_local_minima)) {
      Vector grad;
      try {
        grad = gradient(c.h, traj.states[static_cast<std::size_t>(j)]);
      } catch (const std::exception& e) {
        throw std::runtime_error("implicit barrier row for constraint '" + c.name +
                                 "' at trajectory index " + std::to_string(j) + ": " + e.what());
      }
      const Vector back = D[static_cast<std::size_t>(j)].transpose() * grad;
      BarrierRow row;
      row.coeff = gx.transpose() * back;
      row.offset = -(back.dot(fx) + c.alpha(vals[static_cast<std::size_t>(j)]));
      row.source = c.name + "@" + std::to_string(j);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

ExplicitAsifFilter::ExplicitAsifFilter(ControlAffineDynamics dyn,
                                       std::vector<SafetyConstraint> constraints,
                                       ActuationLimits limits)
    : RtaFilter(dyn.state_dim(), std::move(limits)),
      dyn_(std::move(dyn)),
      constraints_(std::move(constraints)) {}

FilterOutcome ExplicitAsifFilter::apply(const Vector& x, const Vector& u_des, double) {
  QpProblem qp;
  qp.u_des = u_des;
  qp.lower = limits().lower;
  qp.upper = limits().upper;
  qp.rows = build_explicit_barrier_rows(x, constraints_, dyn_);
  const QpSolution sol = solve_qp(qp);
  FilterOutcome out;
  out.u_act = sol.u;
  out.qp_status = sol.status;
  out.qp_slack = sol.slack;
  return out;
}

ImplicitAsifFilter::ImplicitAsifFilter(ControlAffineDynamics dyn,
                                       std::vector<SafetyConstraint> constraints,
                                       std::shared_ptr<BackupController> backup, double horizon,
                                       double dt_b, int stride, bool include_local_minima,
                                       ActuationLimits limits)
    : RtaFilter(dyn.state_dim(), std::move(limits)),
      dyn_(std::move(dyn)),
      constraints_(std::move(constraints)),
      backup_(std::move(backup)),
      horizon_(horizon),
      dt_b_(dt_b),
      stride_(stride),
      include_local_minima_(include_local_minima) {
  if (!backup_) throw std::invalid_argument("implicit asif: backup controller required");
  if (!(horizon_ > 0.0) || !(dt_b_ > 0.0))
    throw std::invalid_argument("implicit asif: horizon and dt_b must be positive");
  if (stride_ < 1) throw std::invalid_argument("implicit asif: stride must be >= 1");
}

FilterOutcome ImplicitAsifFilter::apply(const Vector& x, const Vector& u_des, double) {
  const BackupTrajectory traj = compute_backup_trajectory(dyn_, *backup_, x, horizon_, dt_b_);
  QpProblem qp;
  qp.u_des = u_des;
  qp.lower = limits().lower;
  qp.upper = limits().upper;
  qp.rows = build_implicit_barrier_rows(x, traj, constraints_, dyn_, *backup_, stride_,
                                        include_local_minima_);
  const QpSolution sol = solve_qp(qp);
  FilterOutcome out;
  out.u_act = sol.u;
  out.qp_status = sol.status;
  out.qp_slack = sol.slack;
  return out;
}

RtaModule::RtaModule(std::shared_ptr<RtaFilter> core, StateConverter converter)
    : core_(std::move(core)), converter_(std::move(converter)) {
  if (!core_) throw std::invalid_argument("rta module: filter core required");
}

Vector RtaModule::filter(const Vector& x_sys, const Vector& u_des, double t) {
  const Vector x_rta = converter_ ? converter_(x_sys) : x_sys;
  last_ = core_->filter(x_rta, u_des, t);
  return last_.u_act;
}

Vector cascaded_filter(std::vector<RtaModule>& modules, const Vector& x_sys, const Vector& u_des,
                       double t) {
  if (modules.empty()) throw std::invalid_argument("cascaded_filter: need at least one module");
  Vector u = u_des;
  for (RtaModule& m : modules) u = m.filter(x_sys, u, t);
  return u;
}

CascadeFilter::CascadeFilter(int state_dim, ActuationLimits limits, std::vector<RtaModule> stages)
    : RtaFilter(state_dim, std::move(limits)), stages_(std::move(stages)) {
  if (stages_.empty()) throw std::invalid_argument("cascade filter: need at least one stage");
}

FilterOutcome CascadeFilter::apply(const Vector& x, const Vector& u_des, double t) {
  FilterOutcome out;
  out.u_act = cascaded_filter(stages_, x, u_des, t);
  const FilterOutcome& last = stages_.back().last_outcome();
  out.qp_status = last.qp_status;
  out.qp_slack = last.qp_slack;
  return out;
}

}  // namespace rta

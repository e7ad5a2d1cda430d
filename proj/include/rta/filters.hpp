#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rta/backup.hpp"
#include "rta/constraints.hpp"
#include "rta/dynamics.hpp"
#include "rta/qp.hpp"
#include "rta/types.hpp"

// The four run-time-assurance filters behind one interface: given the current
// state and the primary controller's desired action, return an actuable
// control that keeps the system safe. Simplex variants switch wholesale to a
// backup law; ASIF variants minimally modify u_des through a QP with barrier
// rows. Explicit variants evaluate conditions on the current state; implicit
// variants evaluate them along a simulated backup trajectory.

namespace rta {

struct ActuationLimits {
  Vector lower;
  Vector upper;

  static ActuationLimits symmetric(double u_max, int m_ctrl) {
    ActuationLimits lim;
    lim.lower = Vector::Constant(m_ctrl, -u_max);
    lim.upper = Vector::Constant(m_ctrl, u_max);
    return lim;
  }

  Vector clamp(const Vector& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
};

struct FilterOutcome {
  Vector u_act;
  bool intervened = false;
  std::optional<QpStatus> qp_status;  // set by ASIF variants
  double qp_slack = 0.0;
};

inline constexpr double kInterventionTol = 1e-9;

class RtaFilter {
 public:
  virtual ~RtaFilter() = default;

  // t is the caller's clock, forwarded to time-dependent backup laws.
  FilterOutcome filter(const Vector& x, const Vector& u_des, double t = 0.0);

  int state_dim() const { return state_dim_; }
  int control_dim() const { return static_cast<int>(limits_.lower.size()); }
  const ActuationLimits& limits() const { return limits_; }

 protected:
  RtaFilter(int state_dim, ActuationLimits limits);
  virtual FilterOutcome apply(const Vector& x, const Vector& u_des, double t) = 0;

 private:
  int state_dim_ = 0;
  ActuationLimits limits_;
};

// Passes u_des through the actuation saturation only. Stands in for "RTA
// disabled" while keeping the u_act-in-bounds invariant (the plant cannot
// exceed its thrust either way).
class PassthroughFilter final : public RtaFilter {
 public:
  PassthroughFilter(int state_dim, ActuationLimits limits);

 private:
  FilterOutcome apply(const Vector& x, const Vector& u_des, double t) override;
};

// Switching filter on an explicit safe set: propagate one step under u_des;
// keep u_des if every h_i stays nonnegative, otherwise hand over to the
// backup law. Constraints must be control invariant (relative degree one or
// pre-transformed).
class ExplicitSimplexFilter final : public RtaFilter {
 public:
  ExplicitSimplexFilter(ControlAffineDynamics dyn, std::vector<SafetyConstraint> constraints,
                        std::shared_ptr<BackupController> backup, double predict_dt,
                        ActuationLimits limits);

 private:
  FilterOutcome apply(const Vector& x, const Vector& u_des, double t) override;

  ControlAffineDynamics dyn_;
  std::vector<SafetyConstraint> constraints_;
  std::shared_ptr<BackupController> backup_;
  double predict_dt_;
};

// Switching filter on the implicit safe set: propagate one step under u_des,
// then simulate the backup law from there; keep u_des only if the whole
// backup trajectory stays in the allowable set.
class ImplicitSimplexFilter final : public RtaFilter {
 public:
  ImplicitSimplexFilter(ControlAffineDynamics dyn, std::vector<SafetyConstraint> constraints,
                        std::shared_ptr<BackupController> backup, double predict_dt,
                        double horizon, double dt_b, ActuationLimits limits);

 private:
  FilterOutcome apply(const Vector& x, const Vector& u_des, double t) override;

  ControlAffineDynamics dyn_;
  std::vector<SafetyConstraint> constraints_;
  std::shared_ptr<BackupController> backup_;
  double predict_dt_;
  double horizon_;
  double dt_b_;
};

// One barrier row per constraint at the current state:
//   c = grad h . g(x),  d = -(grad h . f(x) + alpha(h(x))).
std::vector<BarrierRow> build_explicit_barrier_rows(const Vector& x,
                                                    const std::vector<SafetyConstraint>& cs,
                                                    const ControlAffineDynamics& dyn);

// Barrier rows along a backup trajectory (sensitivity-propagated): at each
// retained trajectory index j,
//   c = (D_j^T grad phi_i(x_j))^T g(x),  d = -(that . f(x) + alpha(phi_i(x_j))).
// Retained indices: every `stride`-th point, plus (when include_local_minima)
// each constraint's local minima along the trajectory, endpoints included.
std::vector<BarrierRow> build_implicit_barrier_rows(const Vector& x, const BackupTrajectory& traj,
                                                    const std::vector<SafetyConstraint>& cs,
                                                    const ControlAffineDynamics& dyn,
                                                    BackupController& backup, int stride = 5,
                                                    bool include_local_minima = true,
                                                    int sensitivity_substeps = 1);

// QP filter on explicit barrier rows. Needs no backup controller.
class ExplicitAsifFilter final : public RtaFilter {
 public:
  ExplicitAsifFilter(ControlAffineDynamics dyn, std::vector<SafetyConstraint> constraints,
                     ActuationLimits limits);

 private:
  FilterOutcome apply(const Vector& x, const Vector& u_des, double t) override;

  ControlAffineDynamics dyn_;
  std::vector<SafetyConstraint> constraints_;
};

// QP filter on implicit barrier rows from a freshly simulated backup
// trajectory at every call.
class ImplicitAsifFilter final : public RtaFilter {
 public:
  ImplicitAsifFilter(ControlAffineDynamics dyn, std::vector<SafetyConstraint> constraints,
                     std::shared_ptr<BackupController> backup, double horizon, double dt_b,
                     int stride, bool include_local_minima, ActuationLimits limits);

 private:
  FilterOutcome apply(const Vector& x, const Vector& u_des, double t) override;

  ControlAffineDynamics dyn_;
  std::vector<SafetyConstraint> constraints_;
  std::shared_ptr<BackupController> backup_;
  double horizon_;
  double dt_b_;
  int stride_;
  bool include_local_minima_;
};

// Standardized wrapper: converts the system state to the filter's state
// (identity by default), runs the core, and remembers the last outcome.
class RtaModule {
 public:
  using StateConverter = std::function<Vector(const Vector&)>;

  RtaModule() = default;
  explicit RtaModule(std::shared_ptr<RtaFilter> core, StateConverter converter = {});

  Vector filter(const Vector& x_sys, const Vector& u_des, double t = 0.0);

  bool intervening() const { return last_.intervened; }
  const FilterOutcome& last_outcome() const { return last_; }
  RtaFilter& core() { return *core_; }
  const RtaFilter& core() const { return *core_; }

 private:
  std::shared_ptr<RtaFilter> core_;
  StateConverter converter_;
  FilterOutcome last_;
};

// Sequential cascade: module k+1 filters module k's output; the last module
// has the final say (highest priority).
Vector cascaded_filter(std::vector<RtaModule>& modules, const Vector& x_sys, const Vector& u_des,
                       double t = 0.0);

// Cascade packaged as a filter core, so an RtaModule can wrap a pipeline.
class CascadeFilter final : public RtaFilter {
 public:
  CascadeFilter(int state_dim, ActuationLimits limits, std::vector<RtaModule> stages);

 private:
  FilterOutcome apply(const Vector& x, const Vector& u_des, double t) override;

  std::vector<RtaModule> stages_;
};

}  // namespace rta

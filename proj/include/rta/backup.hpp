#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rta/dual.hpp"
#include "rta/dynamics.hpp"
#include "rta/types.hpp"

// Backup controllers and backup-trajectory generation.
//
// A BackupController pairs a differentiable control law with a mutable map of
// named internal states (set points, integral errors). The law reads the map
// as frozen parameters; a separate update hook mutates it once per live
// control evaluation, so differentiation never sees the mutation.

namespace rta {

class BackupController {
 public:
  using StateMap = std::map<std::string, Vector>;
  using UpdateFn = std::function<void(const Vector& x, double t, StateMap& state)>;

  BackupController() = default;

  // law: generic callable VectorX<S>(const VectorX<S>& x, double t,
  // const StateMap&) for S in {double, Dual}. Output is saturated to
  // [u_lo, u_hi] componentwise (differentiably, ties keep the law's tangent).
  template <typename Law>
  BackupController(int state_dim, int control_dim, UpdateFn update, Law law, Vector u_lo,
                   Vector u_hi)
      : state_dim_(state_dim),
        control_dim_(control_dim),
        update_(std::move(update)),
        law0_(law),
        law1_(std::move(law)),
        u_lo_(std::move(u_lo)),
        u_hi_(std::move(u_hi)) {
    if (u_lo_.size() != control_dim_ || u_hi_.size() != control_dim_)
      throw std::invalid_argument("backup controller: saturation bounds size != control_dim");
  }

  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  const Vector& lower_limits() const { return u_lo_; }
  const Vector& upper_limits() const { return u_hi_; }

  // Live evaluation: runs the update hook, then the saturated law.
  Vector control(const Vector& x, double t) {
    if (x.size() != state_dim_)
      throw std::invalid_argument("backup controller: state size mismatch");
    if (update_) update_(x, t, state_);
    return law_at<double>(x, t);
  }

  // Differentiable evaluation with the internal state held fixed.
  template <typename S>
  VectorX<S> law_at(const VectorX<S>& x, double t) const {
    static_assert(ad::nest_depth_v<S> <= 1, "backup law supports one differentiation level");
    const auto& law = detail::pick_slot<S>(law0_, law1_, law1_, law1_);
    if (!law) throw std::logic_error("backup controller: no law configured");
    VectorX<S> u = law(x, t, state_);
    if (u.size() != control_dim_)
      throw std::runtime_error("backup controller: law output size != control_dim");
    for (int i = 0; i < control_dim_; ++i) u[i] = ad::clamp(u[i], u_lo_[i], u_hi_[i]);
    return u;
  }

  StateMap& internal_state() { return state_; }
  const StateMap& internal_state() const { return state_; }

  void save_state() { saved_ = state_; }
  void restore_state() {
    if (!saved_) throw std::logic_error("backup controller: restore_state without save_state");
    state_ = *saved_;
  }
  bool has_saved_state() const { return saved_.has_value(); }

 private:
  int state_dim_ = 0;
  int control_dim_ = 0;
  UpdateFn update_;
  std::function<VectorX<ad::D0>(const VectorX<ad::D0>&, double, const StateMap&)> law0_;
  std::function<VectorX<ad::D1>(const VectorX<ad::D1>&, double, const StateMap&)> law1_;
  Vector u_lo_;
  Vector u_hi_;
  StateMap state_;
  std::optional<StateMap> saved_;
};

struct BackupTrajectory {
  double dt = 0.0;
  std::vector<Vector> states;    // states[j] at t = j*dt from engagement
  std::vector<Vector> controls;  // controls[j] applied on [j*dt, (j+1)*dt)
  // Internal controller state as of each control evaluation, so sensitivity
  // integration can differentiate the law the trajectory actually used.
  std::vector<BackupController::StateMap> episode_states;

  int steps() const { return static_cast<int>(controls.size()); }
  double horizon() const { return dt * steps(); }
};

// Simulates the backup law forward from x0 as a fresh engagement: the live
// internal state is stashed, cleared for the episode (lazy set-point captures
// rerun from x0), and restored afterwards, so the live controller is
// unperturbed and repeated calls from the same x0 are identical.
BackupTrajectory compute_backup_trajectory(const ControlAffineDynamics& dyn,
                                           BackupController& ctrl, const Vector& x0,
                                           double horizon, double dt_b);

// Sensitivity of each trajectory point to the engagement state: D_0 = I,
// D' = J_cl(x(t)) D, integrated by RK4 with the Jacobian held over each
// trajectory interval. One substep resolves orbital-rate closed loops to
// ~1e-10 over hundreds of steps; raise it for stiffer dynamics. Returns one
// matrix per trajectory state.
std::vector<Matrix> sensitivity_matrices(const ControlAffineDynamics& dyn,
                                         BackupController& ctrl, const BackupTrajectory& traj,
                                         int substeps = 1);

// Zero-order-hold discretization of x' = A x + B u at step dt.
std::pair<Matrix, Matrix> zoh_discretize(const Matrix& A, const Matrix& B, double dt);

// Discrete algebraic Riccati fixed point; returns the stabilizing gain K for
// u = -K x. Throws on non-convergence.
Matrix dare_gain(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

// Backup law for the inspection scenario: on engagement, captures a zero
// velocity set point at the controlled deputy's current position and tracks
// it with a deliberately sluggish LQR (Q = I, R = lqr_r * I), saturated to
// [-u_max, u_max]^3.
BackupController lqr_backup(const CwParams& params, double u_max, double discretize_dt = 1.0,
                            double lqr_r = 1e3);

}  // namespace rta

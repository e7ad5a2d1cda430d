#pragma once

#include <functional>
#include <stdexcept>

#include "rta/derivatives.hpp"
#include "rta/field.hpp"
#include "rta/types.hpp"

// Control-affine dynamics x' = f(x) + g(x) u, with fixed-step RK4 propagation
// and the Clohessy-Wiltshire relative-motion model used by the inspection
// scenario.

namespace rta {

class BackupController;

// Optional external propagator: x_next = p(x, u, dt). Lets a black-box
// simulator replace the built-in RK4 integration; never differentiated.
using Propagator = std::function<Vector(const Vector&, const Vector&, double)>;

class ControlAffineDynamics {
 public:
  ControlAffineDynamics() = default;
  ControlAffineDynamics(VectorField f, MatrixField g);

  int state_dim() const { return f_.input_dim(); }
  int control_dim() const { return g_.cols(); }

  const VectorField& drift() const { return f_; }
  const MatrixField& input_map() const { return g_; }

  Vector state_derivative(const Vector& x, const Vector& u) const;

  // Classic RK4 with substeps capped at kMaxSubstep seconds, or the custom
  // propagator when one is set. Propagation is never differentiated.
  Vector propagate(const Vector& x, const Vector& u, double dt) const;

  void set_propagator(Propagator p) { propagator_ = std::move(p); }
  bool has_custom_propagator() const { return static_cast<bool>(propagator_); }

  static constexpr double kMaxSubstep = 1.0;

 private:
  VectorField f_;
  MatrixField g_;
  Propagator propagator_;
};

struct CwParams {
  double mean_motion = 0.001027;  // chief orbit rate, rad/s
  double mass = 12.0;             // deputy mass, kg
  int num_deputies = 1;
  int controlled_index = 0;  // which deputy's block g feeds
};

// Hill-frame linearized relative motion about a circular chief orbit.
Matrix cw_state_matrix(double mean_motion);
Matrix cw_control_matrix(double mass);

// Stacked N-deputy system: state [p_0 v_0 ... p_{N-1} v_{N-1}] in R^{6N},
// drift block-diagonal in the CW matrix, control mapped into the controlled
// deputy's block only.
ControlAffineDynamics cw_system(const CwParams& params);

// Jacobian of the closed-loop field f(x) + g(x) u_b(x, t) with the backup
// controller's internal state frozen at its current values.
Matrix closed_loop_jacobian(const ControlAffineDynamics& dyn, const BackupController& ctrl,
                            const Vector& x, double t = 0.0);

}  // namespace rta

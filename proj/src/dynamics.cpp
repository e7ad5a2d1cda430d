#include "rta/dynamics.hpp"

#include <cmath>
#include <string>

#include "rta/backup.hpp"

namespace rta {

namespace {

void check_finite_state(const Vector& x, const std::string& what) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      throw std::runtime_error(what + ": non-finite state component at index " +
                               std::to_string(i));
}

}  // namespace

ControlAffineDynamics::ControlAffineDynamics(VectorField f, MatrixField g)
    : f_(std::move(f)), g_(std::move(g)) {
  if (f_.input_dim() != f_.output_dim())
    throw std::invalid_argument("dynamics: drift must map the state to itself");
  if (g_.input_dim() != f_.input_dim() || g_.rows() != f_.input_dim())
    throw std::invalid_argument("dynamics: input map shape does not match the state dimension");
}

Vector ControlAffineDynamics::state_derivative(const Vector& x, const Vector& u) const {
  if (x.size() != state_dim())
    throw std::invalid_argument("dynamics: state size " + std::to_string(x.size()) +
                                " != " + std::to_string(state_dim()));
  if (u.size() != control_dim())
    throw std::invalid_argument("dynamics: control size " + std::to_string(u.size()) +
                                " != " + std::to_string(control_dim()));
  return f_(x) + g_(x) * u;
}

Vector ControlAffineDynamics::propagate(const Vector& x, const Vector& u, double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  if (propagator_) {
    Vector out = propagator_(x, u, dt);
    if (out.size() != state_dim())
      throw std::runtime_error("propagate: custom propagator returned wrong state size");
    check_finite_state(out, "propagate (custom)");
    return out;
  }

  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / kMaxSubstep - 1e-12)));
  const double h = dt / substeps;
  Vector s = x;
  for (int k = 0; k < substeps; ++k) {
    const Vector k1 = state_derivative(s, u);
    const Vector k2 = state_derivative(s + (0.5 * h) * k1, u);
    const Vector k3 = state_derivative(s + (0.5 * h) * k2, u);
    const Vector k4 = state_derivative(s + h * k3, u);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  check_finite_state(s, "propagate");
  return s;
}

Matrix cw_state_matrix(double mean_motion) {
  const double n = mean_motion;
  Matrix A = Matrix::Zero(6, 6);
  A(0, 3) = 1.0;
  A(1, 4) = 1.0;
  A(2, 5) = 1.0;
  A(3, 0) = 3.0 * n * n;
  A(3, 4) = 2.0 * n;
  A(4, 3) = -2.0 * n;
  A(5, 2) = -n * n;
  return A;
}

Matrix cw_control_matrix(double mass) {
  Matrix B = Matrix::Zero(6, 3);
  B(3, 0) = 1.0 / mass;
  B(4, 1) = 1.0 / mass;
  B(5, 2) = 1.0 / mass;
  return B;
}

ControlAffineDynamics cw_system(const CwParams& params) {
  if (!(params.mean_motion > 0.0)) throw std::invalid_argument("cw_system: mean_motion must be positive");
  if (!(params.mass > 0.0)) throw std::invalid_argument("cw_system: mass must be positive");
  if (params.num_deputies < 1) throw std::invalid_argument("cw_system: need at least one deputy");
  if (params.controlled_index < 0 || params.controlled_index >= params.num_deputies)
    throw std::invalid_argument("cw_system: controlled_index out of range");

  const int N = params.num_deputies;
  const int dim = 6 * N;
  const Matrix A = cw_state_matrix(params.mean_motion);

  VectorField f(dim, dim, [A, N](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    VectorX<S> out(6 * N);
    for (int i = 0; i < N; ++i)
      out.template segment<6>(6 * i) = A * x.template segment<6>(6 * i);
    return out;
  });

  Matrix G = Matrix::Zero(dim, 3);
  G.block<6, 3>(6 * params.controlled_index, 0) = cw_control_matrix(params.mass);
  MatrixField g(dim, dim, 3, [G](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    (void)x;
    return MatrixX<S>(G.template cast<S>());
  });

  return ControlAffineDynamics(std::move(f), std::move(g));
}

Matrix closed_loop_jacobian(const ControlAffineDynamics& dyn, const BackupController& ctrl,
                            const Vector& x, double t) {
  if (ctrl.state_dim() != dyn.state_dim() || ctrl.control_dim() != dyn.control_dim())
    throw std::invalid_argument("closed_loop_jacobian: controller/dynamics dimension mismatch");
  const int n = dyn.state_dim();
  VectorField closed = VectorField::with_depth<1>(n, n, [&dyn, &ctrl, t](const auto& xs) {
    using S = typename std::decay_t<decltype(xs)>::Scalar;
    VectorX<S> u = ctrl.template law_at<S>(xs, t);
    return VectorX<S>(dyn.drift().eval<S>(xs) + dyn.input_map().eval<S>(xs) * u);
  });
  return jacobian(closed, x);
}

}  // namespace rta

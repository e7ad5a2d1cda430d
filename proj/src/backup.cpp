#include "rta/backup.hpp"

#include <cmath>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

namespace rta {

namespace {

int integral_step_count(double horizon, double dt, const char* what) {
  if (!(horizon > 0.0)) throw std::invalid_argument(std::string(what) + ": horizon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument(std::string(what) + ": dt must be positive");
  const double ratio = horizon / dt;
  const auto steps = static_cast<long long>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(std::string(what) +
                                ": horizon must be a positive integer multiple of dt");
  return static_cast<int>(steps);
}

}  // namespace

BackupTrajectory compute_backup_trajectory(const ControlAffineDynamics& dyn,
                                           BackupController& ctrl, const Vector& x0,
                                           double horizon, double dt_b) {
  if (x0.size() != dyn.state_dim())
    throw std::invalid_argument("backup trajectory: initial state size mismatch");
  if (ctrl.state_dim() != dyn.state_dim() || ctrl.control_dim() != dyn.control_dim())
    throw std::invalid_argument("backup trajectory: controller/dynamics dimension mismatch");
  const int steps = integral_step_count(horizon, dt_b, "backup trajectory");

  // Fresh engagement: stash the live internal state, clear it for the
  // episode, and restore it afterwards no matter what.
  BackupController::StateMap live = ctrl.internal_state();
  ctrl.internal_state().clear();

  BackupTrajectory traj;
  traj.dt = dt_b;
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps);
  traj.episode_states.reserve(steps);
  traj.states.push_back(x0);

  try {
    Vector x = x0;
    for (int j = 0; j < steps; ++j) {
      Vector u = ctrl.control(x, j * dt_b);
      traj.episode_states.push_back(ctrl.internal_state());
      traj.controls.push_back(std::move(u));
      x = dyn.propagate(x, traj.controls.back(), dt_b);
      traj.states.push_back(x);
    }
  } catch (const std::exception& e) {
    ctrl.internal_state() = std::move(live);
    throw std::runtime_error("backup trajectory aborted at step " +
                             std::to_string(traj.controls.size()) + " of " +
                             std::to_string(steps) + ": " + e.what());
  }

  ctrl.internal_state() = std::move(live);
  return traj;
}

std::vector<Matrix> sensitivity_matrices(const ControlAffineDynamics& dyn, BackupController& ctrl,
                                         const BackupTrajectory& traj, int substeps) {
  if (traj.states.empty()) throw std::invalid_argument("sensitivity: empty trajectory");
  if (traj.episode_states.size() != traj.controls.size() ||
      traj.states.size() != traj.controls.size() + 1)
    throw std::invalid_argument("sensitivity: inconsistent trajectory record");
  if (substeps < 1) throw std::invalid_argument("sensitivity: substeps must be >= 1");

  const int n = dyn.state_dim();
  std::vector<Matrix> out;
  out.reserve(traj.states.size());
  out.push_back(Matrix::Identity(n, n));

  BackupController::StateMap live = ctrl.internal_state();
  try {
    Matrix D = Matrix::Identity(n, n);
    const double h = traj.dt / substeps;
    for (int j = 0; j < traj.steps(); ++j) {
      ctrl.internal_state() = traj.episode_states[j];
      const Matrix J = closed_loop_jacobian(dyn, ctrl, traj.states[j], j * traj.dt);
      for (int s = 0; s < substeps; ++s) {
        const Matrix k1 = J * D;
        const Matrix k2 = J * (D + (0.5 * h) * k1);
        const Matrix k3 = J * (D + (0.5 * h) * k2);
        const Matrix k4 = J * (D + h * k3);
        D += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      if (!D.allFinite())
        throw std::runtime_error("sensitivity matrix became non-finite at trajectory index " +
                                 std::to_string(j + 1));
      out.push_back(D);
    }
  } catch (...) {
    ctrl.internal_state() = std::move(live);
    throw;
  }

  ctrl.internal_state() = std::move(live);
  return out;
}

std::pair<Matrix, Matrix> zoh_discretize(const Matrix& A, const Matrix& B, double dt) {
  if (A.rows() != A.cols()) throw std::invalid_argument("zoh_discretize: A must be square");
  if (B.rows() != A.rows()) throw std::invalid_argument("zoh_discretize: B row count mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("zoh_discretize: dt must be positive");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = A * dt;
  aug.topRightCorner(n, m) = B * dt;
  const Matrix E = aug.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

Matrix dare_gain(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw std::invalid_argument("dare_gain: inconsistent matrix dimensions");

  Matrix P = Q;
  constexpr int kMaxIters = 1000000;
  for (int it = 0; it < kMaxIters; ++it) {
    const Matrix BtP = B.transpose() * P;
    const Matrix S = R + BtP * B;
    const Matrix K = S.ldlt().solve(BtP * A);
    const Matrix P_next = Q + A.transpose() * P * (A - B * K);
    const double delta = (P_next - P).norm();
    P = P_next;
    if (delta <= 1e-13 * std::max(1.0, P.norm())) {
      const Matrix S_final = R + B.transpose() * P * B;
      return S_final.ldlt().solve(B.transpose() * P * A);
    }
  }
  throw std::runtime_error("dare_gain: Riccati iteration did not converge");
}

BackupController lqr_backup(const CwParams& params, double u_max, double discretize_dt,
                            double lqr_r) {
  if (!(u_max > 0.0)) throw std::invalid_argument("lqr_backup: u_max must be positive");
  if (!(lqr_r > 0.0)) throw std::invalid_argument("lqr_backup: lqr_r must be positive");
  const auto [Ad, Bd] = zoh_discretize(cw_state_matrix(params.mean_motion),
                                       cw_control_matrix(params.mass), discretize_dt);
  const Matrix K = dare_gain(Ad, Bd, Matrix::Identity(6, 6), lqr_r * Matrix::Identity(3, 3));

  const int block = 6 * params.controlled_index;
  const int dim = 6 * params.num_deputies;

  // Engagement captures a zero-velocity set point at the current position;
  // the law then tracks it. The set point is a named internal state so it
  // survives across calls and save/restore.
  auto update = [block](const Vector& x, double, BackupController::StateMap& state) {
    if (state.find("target") == state.end()) {
      Vector target = Vector::Zero(6);
      target.head<3>() = x.segment<3>(block);
      state["target"] = std::move(target);
    }
  };

  auto law = [K, block](const auto& x, double, const BackupController::StateMap& state) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    auto it = state.find("target");
    if (it == state.end())
      throw std::runtime_error("lqr backup law: no engagement set point captured");
    VectorX<S> err(6);
    for (int i = 0; i < 6; ++i) err[i] = x[block + i] - it->second[i];
    return VectorX<S>(-(K * err));
  };

  return BackupController(dim, 3, std::move(update), std::move(law),
                          Vector::Constant(3, -u_max), Vector::Constant(3, u_max));
}

}  // namespace rta

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rta/backup.hpp"
#include "rta/constraints.hpp"
#include "rta/dynamics.hpp"
#include "rta/filters.hpp"
#include "rta/types.hpp"

// The multi-agent inspection experiment: N deputy spacecraft under aggressive
// LQR primaries inspect a chief, each wrapped in its own RTA instance
// enforcing seven safety constraints (chief collision, deputy separation,
// dynamic speed limit, sun-pointing exclusion, per-axis velocity caps).

namespace rta {

enum class FilterKind {
  none,  // saturation only: the unfiltered baseline
  explicit_simplex,
  implicit_simplex,
  explicit_asif,
  implicit_asif,
};

std::string to_string(FilterKind k);
FilterKind filter_kind_from_string(const std::string& s);

// Per-constraint enforcement tuning: barrier relative degree (>1 routes the
// constraint through the higher-order transform) and strengthening exponents.
struct ConstraintTuning {
  int rel_degree = 1;
  double alpha_a = -2.0;
  double alpha_b = -2.0;
};

struct InspectionConfig {
  // Plant and environment.
  double u_max = 1.0;            // N, per-axis thrust limit
  double mass = 12.0;            // kg
  double mean_motion = 0.001027; // rad/s
  Eigen::Vector3d e_sun{1.0, 0.0, 0.0};

  // Constraint parameters.
  double r_d = 5.0;     // deputy collision radius, m
  double r_c = 5.0;     // chief collision radius, m
  double nu0 = 0.2;     // m/s, speed floor of the dynamic limit
  double nu1 = -1.0;    // 1/s; negative means "derive as 4 * mean_motion"
  double theta_s = 0.5235987755982988;  // rad, sun exclusion full angle
  double v_max = 2.0;   // m/s, per-axis cap

  // Experiment shape.
  int deputies = 5;
  double duration = 2000.0;  // s
  double dt = 1.0;           // s
  std::uint64_t seed = 7;
  FilterKind filter = FilterKind::explicit_asif;

  // Enforcement tuning, indexed phi_1..phi_7. Position-only constraints
  // (phi_1, phi_2, phi_4) default to relative degree 2: their raw forms have
  // no direct control influence, so degree-1 barrier rows would be
  // degenerate.
  std::array<ConstraintTuning, 7> tuning{
      ConstraintTuning{2, -2.0, -2.0}, ConstraintTuning{2, -2.0, -2.0},
      ConstraintTuning{1, -2.0, -2.0}, ConstraintTuning{2, -2.0, -2.0},
      ConstraintTuning{1, -2.0, -2.0}, ConstraintTuning{1, -2.0, -2.0},
      ConstraintTuning{1, -2.0, -2.0}};

  // Backup controller / implicit-method settings.
  double backup_horizon = 500.0;  // s
  double backup_dt = 1.0;         // s
  double backup_lqr_r = 1e3;
  int implicit_stride = 5;
  bool local_minima_rows = true;

  // Primary controller. The R weight trades transit speed against actuation
  // violence; at 1e4 the unfiltered primary still reaches 4-6 m/s (violating
  // the velocity constraints), while near constraint boundaries its commands
  // stay small enough that the one-step enforcement gap is negligible.
  double primary_lqr_r = 1e4;

  // Fills derived fields (nu1 from mean_motion when unset).
  void finalize();
};

// Paper parameters with derived fields filled in.
InspectionConfig default_config();

// Throws std::invalid_argument naming the offending field.
void validate_config(const InspectionConfig& cfg);

// The raw constraint set phi_1..phi_7 for one deputy over the stacked 6N
// state: phi_2 instantiated once per other deputy, so 6 + (N-1) constraints,
// ordered phi_1, phi_2 vs each other deputy, phi_3..phi_7.
std::vector<SafetyConstraint> make_constraints(const InspectionConfig& cfg, int deputy_index);

// The set the configured filter enforces: raw constraints with rel_degree 1,
// higher-order transforms otherwise, sparsity hints attached (the stacked CW
// drift is block-diagonal, so differentiation stays within each constraint's
// deputy blocks).
std::vector<SafetyConstraint> make_enforced_constraints(const InspectionConfig& cfg,
                                                        int deputy_index,
                                                        const ControlAffineDynamics& dyn);

ControlAffineDynamics make_dynamics(const InspectionConfig& cfg, int deputy_index);
std::shared_ptr<BackupController> make_backup(const InspectionConfig& cfg, int deputy_index);
RtaModule make_rta_module(const InspectionConfig& cfg, int deputy_index);

// Aggressive tracking LQR on the discretized single-deputy model; output is
// deliberately unsaturated (actuation limits are the RTA layer's job).
class LqrPrimary {
 public:
  LqrPrimary() = default;
  LqrPrimary(Matrix gain, Vector target, int deputy_index);

  Vector control(const Vector& x_stacked) const;
  const Matrix& gain() const { return gain_; }
  const Vector& target() const { return target_; }

 private:
  Matrix gain_;   // 3x6
  Vector target_; // 6
  int deputy_index_ = 0;
};

// Deputy targets sit on a ring around the anti-sun axis at 50 m from the
// chief: aggressive (well inside the speed-constraint region on approach)
// yet mutually separated.
Vector primary_target(const InspectionConfig& cfg, int deputy_index);
LqrPrimary make_primary(const InspectionConfig& cfg, int deputy_index);

// Seeded initial conditions: radius U[100, 800] m, direction uniform on the
// sphere outside the sun cone, velocity uniform in the half-scaled
// phi_3-feasible ball; resampled until deputies are separated and every
// enforced constraint clears a small margin.
Vector sample_initial_states(const InspectionConfig& cfg, std::mt19937_64& rng);

struct LogRow {
  double time = 0.0;
  int deputy = 0;
  Eigen::Matrix<double, 6, 1> state;  // deputy block at `time`
  Eigen::Vector3d u_des;
  Eigen::Vector3d u_act;
  bool intervening = false;
  std::array<double, 7> phi{};  // phi[1] = min over the other deputies
  std::string qp_status;        // "optimal", "relaxed", "infeasible_box", "na"
};

struct SimulationLog {
  std::vector<LogRow> rows;
  double wall_clock_seconds = 0.0;
};

struct SummaryStats {
  std::array<double, 7> min_phi{};
  double min_overall = 0.0;
  std::int64_t interventions = 0;
  std::int64_t qp_relaxations = 0;
  std::size_t rows = 0;
  bool safe(double tol = 1e-6) const { return min_overall >= -tol; }
};

SummaryStats summarize(const SimulationLog& log);

SimulationLog run_simulation(const InspectionConfig& cfg);

// Deterministic uniform draw on [lo, hi) from the engine's raw bits (the
// standard distributions are implementation-defined, which would break
// bitwise log reproducibility across toolchains).
double uniform_real(std::mt19937_64& rng, double lo, double hi);

}  // namespace rta

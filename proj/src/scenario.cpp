#include "rta/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rta {

std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::none: return "none";
    case FilterKind::explicit_simplex: return "explicit-simplex";
    case FilterKind::implicit_simplex: return "implicit-simplex";
    case FilterKind::explicit_asif: return "explicit-asif";
    case FilterKind::implicit_asif: return "implicit-asif";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "none") return FilterKind::none;
  if (s == "explicit-simplex") return FilterKind::explicit_simplex;
  if (s == "implicit-simplex") return FilterKind::implicit_simplex;
  if (s == "explicit-asif") return FilterKind::explicit_asif;
  if (s == "implicit-asif") return FilterKind::implicit_asif;
  throw std::invalid_argument(
      "unknown filter kind '" + s +
      "' (expected none, explicit-simplex, implicit-simplex, explicit-asif, implicit-asif)");
}

void InspectionConfig::finalize() {
  if (nu1 < 0.0) nu1 = 4.0 * mean_motion;
}

InspectionConfig default_config() {
  InspectionConfig cfg;
  cfg.finalize();
  return cfg;
}

void validate_config(const InspectionConfig& cfg) {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("config: ") + field + " must be positive");
  };
  positive(cfg.u_max, "scenario.u_max");
  positive(cfg.mass, "scenario.mass");
  positive(cfg.mean_motion, "scenario.mean_motion");
  positive(cfg.r_d, "scenario.r_d");
  positive(cfg.r_c, "scenario.r_c");
  positive(cfg.nu0, "scenario.nu0");
  positive(cfg.nu1, "scenario.nu1");
  positive(cfg.v_max, "scenario.v_max");
  positive(cfg.duration, "scenario.duration");
  positive(cfg.dt, "scenario.dt");
  positive(cfg.backup_horizon, "backup.horizon");
  positive(cfg.backup_dt, "backup.dt_b");
  positive(cfg.backup_lqr_r, "backup.lqr_r");
  positive(cfg.primary_lqr_r, "scenario.primary_lqr_r");

  if (std::abs(cfg.e_sun.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("config: scenario.e_sun must be unit length (to 1e-12)");
  if (!(cfg.theta_s > 0.0) || !(cfg.theta_s < std::numbers::pi))
    throw std::invalid_argument("config: scenario.theta_s must lie in (0, pi)");
  if (cfg.deputies < 1) throw std::invalid_argument("config: scenario.deputies must be >= 1");
  if (cfg.implicit_stride < 1)
    throw std::invalid_argument("config: filter.implicit_stride must be >= 1");

  auto integral_ratio = [](double total, double step) {
    const double ratio = total / step;
    return std::abs(ratio - std::llround(ratio)) <= 1e-9 * std::max(1.0, ratio) &&
           std::llround(ratio) >= 1;
  };
  if (!integral_ratio(cfg.duration, cfg.dt))
    throw std::invalid_argument("config: scenario.duration must be an integer multiple of dt");
  if (!integral_ratio(cfg.backup_horizon, cfg.backup_dt))
    throw std::invalid_argument("config: backup.horizon must be an integer multiple of dt_b");

  for (std::size_t k = 0; k < cfg.tuning.size(); ++k) {
    const ConstraintTuning& t = cfg.tuning[k];
    const std::string field = "filter.phi" + std::to_string(k + 1);
    if (t.rel_degree < 1 || t.rel_degree > 3)
      throw std::invalid_argument("config: " + field + "_rel_degree must be in [1, 3]");
    auto exponent_ok = [](double e) { return e >= -3.0 && e <= -1.0; };
    if (!exponent_ok(t.alpha_a) || !exponent_ok(t.alpha_b))
      throw std::invalid_argument("config: " + field + "_alpha exponents must lie in [-3, -1]");
  }
}

namespace {

int block_of(int deputy) { return 6 * deputy; }

std::vector<int> block_dims(std::initializer_list<int> deputies, bool positions_only) {
  std::vector<int> dims;
  for (int d : deputies)
    for (int k = 0; k < (positions_only ? 3 : 6); ++k) dims.push_back(block_of(d) + k);
  return dims;
}

// phi index (0-based) of the constraint at `list_pos` in make_constraints
// order: phi_1, (N-1) x phi_2, phi_3..phi_7.
int phi_of_position(int list_pos, int deputies) {
  if (list_pos == 0) return 0;
  if (list_pos <= deputies - 1) return 1;
  return list_pos - (deputies - 1) + 1;
}

}  // namespace

std::vector<SafetyConstraint> make_constraints(const InspectionConfig& cfg, int deputy_index) {
  if (cfg.deputies < 1) throw std::invalid_argument("make_constraints: deputies must be >= 1");
  if (deputy_index < 0 || deputy_index >= cfg.deputies)
    throw std::invalid_argument("make_constraints: deputy_index out of range");

  const int N = cfg.deputies;
  const int dim = 6 * N;
  const int i = deputy_index;
  const int bi = block_of(i);

  auto alpha_for = [&cfg](int phi) {
    return StrengtheningFn(cfg.tuning[static_cast<std::size_t>(phi)].alpha_a,
                           cfg.tuning[static_cast<std::size_t>(phi)].alpha_b);
  };

  std::vector<SafetyConstraint> cs;
  cs.reserve(6 + static_cast<std::size_t>(N - 1));

  {  // phi_1: chief collision, ||p_i|| >= r_d + r_c
    const double r_sum = cfg.r_d + cfg.r_c;
    ScalarField h(dim, [bi, r_sum](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      Eigen::Matrix<S, 3, 1> p = x.template segment<3>(bi);
      return S(ad::norm(p) - r_sum);
    });
    h.set_active_dims(block_dims({i}, true));
    cs.push_back({std::move(h), alpha_for(0), "phi_1"});
  }

  for (int j = 0; j < N; ++j) {  // phi_2: deputy separation, ||p_i - p_j|| >= 2 r_d
    if (j == i) continue;
    const int bj = block_of(j);
    const double two_rd = 2.0 * cfg.r_d;
    ScalarField h(dim, [bi, bj, two_rd](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      Eigen::Matrix<S, 3, 1> d = x.template segment<3>(bi) - x.template segment<3>(bj);
      return S(ad::norm(d) - two_rd);
    });
    h.set_active_dims(block_dims({i, j}, true));
    cs.push_back({std::move(h), alpha_for(1), "phi_2_vs_" + std::to_string(j)});
  }

  {  // phi_3: dynamic speed limit, ||v_i|| <= nu0 + nu1 ||p_i||
    const double nu0 = cfg.nu0;
    const double nu1 = cfg.nu1;
    ScalarField h(dim, [bi, nu0, nu1](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      Eigen::Matrix<S, 3, 1> p = x.template segment<3>(bi);
      Eigen::Matrix<S, 3, 1> v = x.template segment<3>(bi + 3);
      return S(nu0 + nu1 * ad::norm(p) - ad::norm(v));
    });
    h.set_active_dims(block_dims({i}, false));
    cs.push_back({std::move(h), alpha_for(2), "phi_3"});
  }

  {  // phi_4: sun exclusion, angle(p_i, e_sun) >= theta_s / 2
    const Eigen::Vector3d e_sun = cfg.e_sun;
    const double cos_half = std::cos(cfg.theta_s / 2.0);
    ScalarField h(dim, [bi, e_sun, cos_half](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      Eigen::Matrix<S, 3, 1> p = x.template segment<3>(bi);
      return S(-(ad::dot(p, e_sun) / ad::norm(p)) + cos_half);
    });
    h.set_active_dims(block_dims({i}, true));
    cs.push_back({std::move(h), alpha_for(3), "phi_4"});
  }

  const char* axis_names[3] = {"phi_5", "phi_6", "phi_7"};
  for (int axis = 0; axis < 3; ++axis) {  // per-axis speed caps
    const double vmax2 = cfg.v_max * cfg.v_max;
    const int dim_index = bi + 3 + axis;
    ScalarField h(dim, [dim_index, vmax2](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      S w = x[dim_index];
      return S(vmax2 - w * w);
    });
    h.set_active_dims({dim_index});
    cs.push_back({std::move(h), alpha_for(4 + axis), axis_names[axis]});
  }
  return cs;
}

std::vector<SafetyConstraint> make_enforced_constraints(const InspectionConfig& cfg,
                                                        int deputy_index,
                                                        const ControlAffineDynamics& dyn) {
  std::vector<SafetyConstraint> raw = make_constraints(cfg, deputy_index);
  std::vector<SafetyConstraint> out;
  out.reserve(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const int phi = phi_of_position(static_cast<int>(k), cfg.deputies);
    const ConstraintTuning& t = cfg.tuning[static_cast<std::size_t>(phi)];
    if (t.rel_degree == 1) {
      out.push_back(std::move(raw[k]));
      continue;
    }
    // The recursion's dependency set grows from positions to the involved
    // deputies' full blocks (the stacked drift is block-diagonal), so the
    // transformed field gets the widened hint.
    std::vector<int> hint;
    if (phi == 1) {
      const int j = static_cast<int>(k) - 1 >= deputy_index ? static_cast<int>(k)
                                                            : static_cast<int>(k) - 1;
      hint = block_dims({deputy_index, j}, false);
    } else {
      hint = block_dims({deputy_index}, false);
    }
    const std::vector<StrengtheningFn> alphas(static_cast<std::size_t>(t.rel_degree - 1),
                                              raw[k].alpha);
    SafetyConstraint transformed = hocbf_transform(raw[k], dyn, t.rel_degree, alphas);
    transformed.h.set_active_dims(std::move(hint));
    out.push_back(std::move(transformed));
  }
  return out;
}

ControlAffineDynamics make_dynamics(const InspectionConfig& cfg, int deputy_index) {
  CwParams p;
  p.mean_motion = cfg.mean_motion;
  p.mass = cfg.mass;
  p.num_deputies = cfg.deputies;
  p.controlled_index = deputy_index;
  return cw_system(p);
}

std::shared_ptr<BackupController> make_backup(const InspectionConfig& cfg, int deputy_index) {
  CwParams p;
  p.mean_motion = cfg.mean_motion;
  p.mass = cfg.mass;
  p.num_deputies = cfg.deputies;
  p.controlled_index = deputy_index;
  return std::make_shared<BackupController>(
      lqr_backup(p, cfg.u_max, cfg.backup_dt, cfg.backup_lqr_r));
}

RtaModule make_rta_module(const InspectionConfig& cfg, int deputy_index) {
  ControlAffineDynamics dyn = make_dynamics(cfg, deputy_index);
  const ActuationLimits lim = ActuationLimits::symmetric(cfg.u_max, 3);
  const int dim = dyn.state_dim();
  std::shared_ptr<RtaFilter> core;
  switch (cfg.filter) {
    case FilterKind::none:
      core = std::make_shared<PassthroughFilter>(dim, lim);
      break;
    case FilterKind::explicit_simplex: {
      auto cs = make_enforced_constraints(cfg, deputy_index, dyn);
      core = std::make_shared<ExplicitSimplexFilter>(dyn, std::move(cs),
                                                     make_backup(cfg, deputy_index), cfg.dt, lim);
      break;
    }
    case FilterKind::implicit_simplex:
      core = std::make_shared<ImplicitSimplexFilter>(
          dyn, make_constraints(cfg, deputy_index), make_backup(cfg, deputy_index), cfg.dt,
          cfg.backup_horizon, cfg.backup_dt, lim);
      break;
    case FilterKind::explicit_asif: {
      auto cs = make_enforced_constraints(cfg, deputy_index, dyn);
      core = std::make_shared<ExplicitAsifFilter>(dyn, std::move(cs), lim);
      break;
    }
    case FilterKind::implicit_asif:
      core = std::make_shared<ImplicitAsifFilter>(
          dyn, make_constraints(cfg, deputy_index), make_backup(cfg, deputy_index),
          cfg.backup_horizon, cfg.backup_dt, cfg.implicit_stride, cfg.local_minima_rows, lim);
      break;
  }
  return RtaModule(std::move(core));
}

LqrPrimary::LqrPrimary(Matrix gain, Vector target, int deputy_index)
    : gain_(std::move(gain)), target_(std::move(target)), deputy_index_(deputy_index) {
  if (gain_.rows() != 3 || gain_.cols() != 6 || target_.size() != 6)
    throw std::invalid_argument("lqr primary: gain must be 3x6 and target length 6");
}

Vector LqrPrimary::control(const Vector& x_stacked) const {
  const Eigen::Index b = 6 * deputy_index_;
  if (x_stacked.size() < b + 6)
    throw std::invalid_argument("lqr primary: stacked state too small for deputy index");
  return -(gain_ * (x_stacked.segment<6>(b) - target_));
}

Vector primary_target(const InspectionConfig& cfg, int deputy_index) {
  const Eigen::Vector3d e = cfg.e_sun;
  const Eigen::Vector3d helper =
      std::abs(e.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d q1 = e.cross(helper).normalized();
  const Eigen::Vector3d q2 = e.cross(q1).normalized();
  const double angle = 2.0 * std::numbers::pi * deputy_index / cfg.deputies;

  constexpr double kStandoff = 50.0;   // m from the chief, anti-sun side
  constexpr double kRingRadius = 15.0; // m, keeps neighboring targets separated
  Vector target = Vector::Zero(6);
  target.head<3>() =
      -kStandoff * e + kRingRadius * (std::cos(angle) * q1 + std::sin(angle) * q2);
  return target;
}

LqrPrimary make_primary(const InspectionConfig& cfg, int deputy_index) {
  const auto [Ad, Bd] = zoh_discretize(cw_state_matrix(cfg.mean_motion),
                                       cw_control_matrix(cfg.mass), cfg.dt);
  const Matrix K =
      dare_gain(Ad, Bd, Matrix::Identity(6, 6), cfg.primary_lqr_r * Matrix::Identity(3, 3));
  return LqrPrimary(K, primary_target(cfg, deputy_index), deputy_index);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Vector sample_initial_states(const InspectionConfig& cfg, std::mt19937_64& rng) {
  const int N = cfg.deputies;
  const double cos_margin = std::cos(cfg.theta_s / 2.0) - 0.05;

  std::vector<ControlAffineDynamics> dyns;
  std::vector<std::vector<SafetyConstraint>> enforced;
  for (int i = 0; i < N; ++i) {
    dyns.push_back(make_dynamics(cfg, i));
    enforced.push_back(make_enforced_constraints(cfg, i, dyns.back()));
  }

  // The margin gate below rejects most attempts when several deputies must
  // clear it at once (roughly 3% acceptance at five), so the budget is sized
  // for that worst case rather than for the single-deputy one.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector x = Vector::Zero(6 * N);
    bool placed_all = true;

    for (int i = 0; i < N && placed_all; ++i) {
      bool placed = false;
      for (int tries = 0; tries < 10000; ++tries) {
        const double r = uniform_real(rng, 100.0, 800.0);
        const double z = uniform_real(rng, -1.0, 1.0);
        const double az = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Eigen::Vector3d dir(s * std::cos(az), s * std::sin(az), z);
        if (dir.dot(cfg.e_sun) > cos_margin) continue;  // inside (or near) the sun cone

        const Eigen::Vector3d p = r * dir;
        bool separated = true;
        for (int j = 0; j < i; ++j)
          if ((p - x.segment<3>(6 * j)).norm() <= 2.0 * cfg.r_d + 10.0) separated = false;
        if (!separated) continue;

        const double cap = 0.5 * (cfg.nu0 + cfg.nu1 * r);
        Eigen::Vector3d ball;
        do {
          ball = Eigen::Vector3d(uniform_real(rng, -1.0, 1.0), uniform_real(rng, -1.0, 1.0),
                                 uniform_real(rng, -1.0, 1.0));
        } while (ball.norm() > 1.0 || cap * ball.norm() < 0.01);

        x.segment<3>(6 * i) = p;
        x.segment<3>(6 * i + 3) = cap * ball;
        placed = true;
        break;
      }
      if (!placed) placed_all = false;
    }
    if (!placed_all) continue;

    bool margins_ok = true;
    for (int i = 0; i < N && margins_ok; ++i)
      for (const SafetyConstraint& c : enforced[static_cast<std::size_t>(i)])
        if (evaluate(c, x) < 0.02) {
          margins_ok = false;
          break;
        }
    if (margins_ok) return x;
  }
  throw std::runtime_error("initial-condition sampling failed to find an in-set placement");
}

SummaryStats summarize(const SimulationLog& log) {
  SummaryStats s;
  s.min_phi.fill(std::numeric_limits<double>::infinity());
  s.rows = log.rows.size();
  for (const LogRow& row : log.rows) {
    for (int k = 0; k < 7; ++k)
      s.min_phi[static_cast<std::size_t>(k)] =
          std::min(s.min_phi[static_cast<std::size_t>(k)], row.phi[static_cast<std::size_t>(k)]);
    if (row.intervening) ++s.interventions;
    if (row.qp_status == "relaxed") ++s.qp_relaxations;
  }
  s.min_overall = std::numeric_limits<double>::infinity();
  for (double v : s.min_phi)
    if (std::isfinite(v)) s.min_overall = std::min(s.min_overall, v);
  if (!std::isfinite(s.min_overall)) s.min_overall = 0.0;  // empty log or N=1 with no rows
  return s;
}

SimulationLog run_simulation(const InspectionConfig& cfg) {
  validate_config(cfg);
  const int N = cfg.deputies;
  const auto steps = static_cast<int>(std::llround(cfg.duration / cfg.dt));

  const auto t_start = std::chrono::steady_clock::now();

  std::mt19937_64 rng(cfg.seed);
  Vector x = sample_initial_states(cfg, rng);

  std::vector<std::vector<SafetyConstraint>> raw;
  std::vector<RtaModule> modules;
  std::vector<LqrPrimary> primaries;
  for (int i = 0; i < N; ++i) {
    raw.push_back(make_constraints(cfg, i));
    modules.push_back(make_rta_module(cfg, i));
    primaries.push_back(make_primary(cfg, i));
  }

  CwParams single;
  single.mean_motion = cfg.mean_motion;
  single.mass = cfg.mass;
  const ControlAffineDynamics block_dyn = cw_system(single);

  SimulationLog log;
  log.rows.reserve(static_cast<std::size_t>(steps) * static_cast<std::size_t>(N));

  std::vector<Vector> u_des(static_cast<std::size_t>(N));
  std::vector<Vector> u_act(static_cast<std::size_t>(N));

  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg.dt;

    // Every filter sees the same frozen pre-step state.
    for (int i = 0; i < N; ++i) {
      u_des[static_cast<std::size_t>(i)] = primaries[static_cast<std::size_t>(i)].control(x);
      try {
        u_act[static_cast<std::size_t>(i)] = modules[static_cast<std::size_t>(i)].filter(
            x, u_des[static_cast<std::size_t>(i)], t);
      } catch (const std::exception& e) {
        throw std::runtime_error("simulation step " + std::to_string(k) + ", deputy " +
                                 std::to_string(i) + ": " + e.what());
      }
    }

    for (int i = 0; i < N; ++i) {
      const auto& module = modules[static_cast<std::size_t>(i)];
      LogRow row;
      row.time = t;
      row.deputy = i;
      row.state = x.segment<6>(6 * i);
      row.u_des = u_des[static_cast<std::size_t>(i)].head<3>();
      row.u_act = u_act[static_cast<std::size_t>(i)].head<3>();
      row.intervening = module.intervening();
      row.qp_status = module.last_outcome().qp_status
                          ? to_string(*module.last_outcome().qp_status)
                          : "na";

      const auto& cs = raw[static_cast<std::size_t>(i)];
      row.phi[0] = evaluate(cs[0], x);
      double phi2 = std::numeric_limits<double>::infinity();
      for (int j = 0; j < N - 1; ++j)
        phi2 = std::min(phi2, evaluate(cs[static_cast<std::size_t>(1 + j)], x));
      row.phi[1] = phi2;
      for (int k5 = 0; k5 < 5; ++k5)
        row.phi[static_cast<std::size_t>(2 + k5)] =
            evaluate(cs[static_cast<std::size_t>(N + k5)], x);
      log.rows.push_back(std::move(row));
    }

    for (int i = 0; i < N; ++i)
      x.segment<6>(6 * i) = block_dyn.propagate(x.segment<6>(6 * i),
                                                u_act[static_cast<std::size_t>(i)], cfg.dt);
  }

  log.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return log;
}

}  // namespace rta

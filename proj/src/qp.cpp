#include "rta/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

namespace rta {

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::relaxed: return "relaxed";
    case QpStatus::infeasible_box: return "infeasible_box";
  }
  return "unknown";
}

namespace {

struct Halfspace {
  Vector a;  // a . v >= b
  double b = 0.0;
};

// All inequalities of a problem instance over decision vector v: barrier rows
// first, then finite box bounds as +/- unit rows.
std::vector<Halfspace> stack_constraints(const std::vector<const BarrierRow*>& rows,
                                         const Vector& lower, const Vector& upper,
                                         int extra_dims) {
  const Eigen::Index n = lower.size() + extra_dims;
  std::vector<Halfspace> cons;
  cons.reserve(rows.size() + 2 * static_cast<std::size_t>(lower.size()) + extra_dims);
  for (const BarrierRow* r : rows) {
    Halfspace h;
    h.a = Vector::Zero(n);
    h.a.head(r->coeff.size()) = r->coeff;
    if (extra_dims > 0) h.a[n - 1] = 1.0;  // shared slack enters every row
    h.b = r->offset;
    cons.push_back(std::move(h));
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    Halfspace lo;
    lo.a = Vector::Zero(n);
    lo.a[i] = 1.0;
    lo.b = lower[i];
    cons.push_back(std::move(lo));
    Halfspace hi;
    hi.a = Vector::Zero(n);
    hi.a[i] = -1.0;
    hi.b = -upper[i];
    cons.push_back(std::move(hi));
  }
  if (extra_dims > 0) {
    Halfspace s;  // slack >= 0
    s.a = Vector::Zero(n);
    s.a[n - 1] = 1.0;
    s.b = 0.0;
    cons.push_back(std::move(s));
  }
  return cons;
}

bool feasible_at(const std::vector<Halfspace>& cons, const Vector& v, double tol) {
  for (const Halfspace& h : cons)
    if (h.a.dot(v) < h.b - tol) return false;
  return true;
}

// Scaling an inequality never moves the feasible set or the optimum, so the
// iterative solver always sees unit normals: violations become geometric
// distances, multipliers stay at problem scale, and working-set Gram matrices
// stay well conditioned even when row magnitudes span many decades (rows from
// a contracting sensitivity propagation shrink exponentially along the
// horizon).
std::vector<Halfspace> normalized(std::vector<Halfspace> cons) {
  for (Halfspace& h : cons) {
    const double s = h.a.norm();
    if (s > 0.0) {
      h.a /= s;
      h.b /= s;
    }
  }
  return cons;
}

// Exact interval classification of each row against the box, no tolerances:
// a row the box minimum already satisfies binds nothing and is dropped; a row
// the box maximum still misses cannot be met by any admissible control, so it
// forces the relaxed program outright. Without this split a near-zero row
// (e.g. fully contracted sensitivities) with a violated offset drives the
// dual method into steps of size gap / |coeff|^2.
struct RowSplit {
  std::vector<const BarrierRow*> regular;
  std::vector<const BarrierRow*> impossible;
};

RowSplit split_rows(const std::vector<BarrierRow>& rows, const Vector& lower,
                    const Vector& upper) {
  RowSplit s;
  for (const BarrierRow& r : rows) {
    double lo = 0.0;
    double hi = 0.0;
    for (Eigen::Index i = 0; i < r.coeff.size(); ++i) {
      const double c = r.coeff[i];
      hi += c * (c >= 0.0 ? upper[i] : lower[i]);
      lo += c * (c >= 0.0 ? lower[i] : upper[i]);
    }
    if (lo >= r.offset) continue;  // holds everywhere in the box
    if (hi < r.offset)
      s.impossible.push_back(&r);
    else
      s.regular.push_back(&r);
  }
  return s;
}

// Round-off in a KKT candidate grows with the multiplier magnitude (the
// relaxed program pushes multipliers to ~kSlackWeight), so acceptance gates
// scale with it instead of staying absolute. The cap keeps a runaway
// multiplier from widening the gate until real violations pass as feasible.
double feasibility_tol(double lam_scale) {
  return std::max(1e-9,
                  std::min(1e-6, 50.0 * std::numeric_limits<double>::epsilon() * lam_scale));
}

double negativity_tol(double lam_scale) {
  return std::max(1e-10,
                  std::min(1e-6, 5.0 * std::numeric_limits<double>::epsilon() * lam_scale));
}

// Exact minimizer of 0.5 (v - v0)' W (v - v0) over the halfspace intersection
// by enumerating candidate active sets in order of size. Any KKT-consistent
// candidate (nonnegative multipliers, primal feasible) is the global optimum
// of this strictly convex program, so the first hit wins. Returns nullopt if
// no subset produces a feasible KKT point (primal infeasible).
std::optional<Vector> active_set_enumerate(const Vector& v0, const Vector& W,
                                           const std::vector<Halfspace>& cons) {
  const Eigen::Index n = v0.size();
  const int m = static_cast<int>(cons.size());
  const Vector Winv = W.cwiseInverse();

  if (feasible_at(cons, v0, 1e-12)) return v0;

  std::vector<int> idx;
  // Enumerate subsets of each cardinality k = 1..n.
  for (int k = 1; k <= n && k <= m; ++k) {
    idx.assign(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      Matrix G(k, n);
      Vector b(k);
      for (int i = 0; i < k; ++i) {
        G.row(i) = cons[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].a;
        b[i] = cons[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].b;
      }
      // Stationarity W(v - v0) = G' lambda with G v = b gives
      // (G Winv G') lambda = b - G v0.
      const Matrix M = G * Winv.asDiagonal() * G.transpose();
      Eigen::FullPivLU<Matrix> lu(M);
      if (lu.isInvertible()) {
        const Vector rhs = b - G * v0;
        Vector lambda = lu.solve(rhs);
        // One refinement pass: slack multipliers reach ~kSlackWeight, where a
        // single solve's backward error would trip the feasibility gate below.
        lambda += lu.solve(rhs - M * lambda);
        const double scale = lambda.lpNorm<Eigen::Infinity>();
        if ((lambda.array() >= -negativity_tol(scale)).all()) {
          const Vector v = v0 + Winv.asDiagonal() * (G.transpose() * lambda);
          if (feasible_at(cons, v, feasibility_tol(scale))) return v;
        }
      }
      // Next k-combination in lexicographic order.
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - k + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < k; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return std::nullopt;
}

// Dual active-set method (Goldfarb-Idnani) for the same program. Starts at
// the unconstrained optimum and repeatedly picks the most violated
// constraint: each inner step moves along the primal direction z (the
// constraint normal projected off the working set in the W^-1 metric) up to
// the nearer of full satisfaction (t2) and the first working-set multiplier
// hitting zero (t1, that blocker is dropped). The dual objective strictly
// increases, so termination is finite, and the working set stays linearly
// independent because admission requires a nonzero projected normal. Returns
// the optimum, or infeasible{} when a violated constraint's normal lies in
// the cone of the working set with no admissible dual step (a Farkas
// certificate that the constraints are mutually unsatisfiable), or bail{} on
// a defensive limit (never observed; callers fall back to enumeration).
struct DualResult {
  std::optional<Vector> v;
  bool infeasible = false;
};

DualResult dual_active_set(const Vector& v0, const Vector& W,
                           const std::vector<Halfspace>& cons) {
  const Eigen::Index n = v0.size();
  const int m = static_cast<int>(cons.size());
  const Vector Winv = W.cwiseInverse();

  Vector v = v0;
  std::vector<int> active;
  std::vector<double> lambda;

  const auto lam_scale = [&lambda]() {
    double s = 0.0;
    for (double l : lambda) s = std::max(s, std::abs(l));
    return s;
  };

  int pivots = 0;
  const int max_pivots = 200 + 20 * m;
  while (true) {
    // Most violated constraint outside the working set.
    int p = -1;
    double worst = -feasibility_tol(lam_scale());
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double gap = cons[static_cast<std::size_t>(i)].a.dot(v) -
                         cons[static_cast<std::size_t>(i)].b;
      if (gap < worst) {
        worst = gap;
        p = i;
      }
    }
    if (p < 0) return {v, false};

    const Vector& ap = cons[static_cast<std::size_t>(p)].a;
    double lam_p = 0.0;
    while (true) {
      if (++pivots > max_pivots) return {std::nullopt, false};

      const int k = static_cast<int>(active.size());
      // With k == n independent normals in the working set the projection of
      // a_p off their span is zero by construction; computing it would only
      // produce rounding noise that can masquerade as a usable direction.
      const bool spanned = (k == static_cast<int>(n));
      Vector r(k);
      Vector z;
      double azp = 0.0;
      if (k > 0) {
        Matrix N(n, k);
        for (int j = 0; j < k; ++j)
          N.col(j) = cons[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])].a;
        const Matrix M = N.transpose() * Winv.asDiagonal() * N;
        Eigen::FullPivLU<Matrix> lu(M);
        if (!lu.isInvertible()) return {std::nullopt, false};
        const Vector rhs = N.transpose() * (Winv.asDiagonal() * ap);
        r = lu.solve(rhs);
        // Refinement: relaxed-program multipliers reach ~kSlackWeight, where
        // one solve's backward error is enough to misdirect the ratio tests.
        r += lu.solve(rhs - M * r);
        if (!spanned) {
          z = Winv.asDiagonal() * (ap - N * r);
          azp = ap.dot(z);
        }
      } else {
        z = Winv.asDiagonal() * ap;
        azp = ap.dot(z);
      }

      // Blocker scan over working-set multipliers that shrink along r. The
      // gate is relative to r's own magnitude so round-off in a large-scale
      // solve cannot fabricate a blocking direction.
      const double r_gate = 1e-12 * std::max(1.0, k > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0);
      double t1 = std::numeric_limits<double>::infinity();
      int blocker = -1;
      for (int j = 0; j < k; ++j)
        if (r[j] > r_gate) {
          const double t = lambda[static_cast<std::size_t>(j)] / r[j];
          if (t < t1) {
            t1 = t;
            blocker = j;
          }
        }

      // azp is the squared W^-1 norm of a_p's residual off the working set's
      // span; compared against a_p's own squared norm it separates genuine
      // directions from pure round-off.
      const double span_scale = ap.cwiseProduct(Winv).dot(ap);
      if (spanned || azp <= 1e-12 * span_scale) {
        // No primal progress possible along this constraint.
        if (blocker < 0) return {std::nullopt, true};  // infeasible
        for (int j = 0; j < k; ++j) lambda[static_cast<std::size_t>(j)] -= t1 * r[j];
        lam_p += t1;
        lambda.erase(lambda.begin() + blocker);
        active.erase(active.begin() + blocker);
        continue;
      }

      const double t2 = (cons[static_cast<std::size_t>(p)].b - ap.dot(v)) / azp;
      const double t = std::min(t1, t2);
      v += t * z;
      for (int j = 0; j < k; ++j) lambda[static_cast<std::size_t>(j)] -= t * r[j];
      lam_p += t;

      if (t2 <= t1) {
        active.push_back(p);
        lambda.push_back(lam_p);
        break;  // next outer scan
      }
      lambda.erase(lambda.begin() + blocker);
      active.erase(active.begin() + blocker);
    }
  }
}

// Dual active-set with the exhaustive enumeration as a correctness fallback
// for its defensive bail paths. Enumeration is combinatorial in the row
// count, so the fallback is gated; bailing on a large stack raises instead of
// silently burning time (not observed in practice: the dual method's bails
// guard against degeneracy that admission rules already prevent).
std::optional<Vector> active_set_solve(const Vector& v0, const Vector& W,
                                       const std::vector<Halfspace>& cons) {
  const DualResult res = dual_active_set(v0, W, cons);
  if (res.v) return res.v;
  if (res.infeasible) return std::nullopt;
  if (cons.size() > 64)
    throw std::runtime_error("qp: dual active-set solver failed on a stack too large for "
                             "exhaustive fallback");
  return active_set_enumerate(v0, W, cons);
}

void check_problem(const QpProblem& p) {
  const Eigen::Index n = p.u_des.size();
  if (n == 0) throw std::invalid_argument("qp: empty problem");
  if (p.lower.size() != n || p.upper.size() != n)
    throw std::invalid_argument("qp: bound sizes do not match u_des");
  if (!p.u_des.allFinite() || !p.lower.allFinite() || !p.upper.allFinite())
    throw std::invalid_argument("qp: non-finite u_des or bounds");
  for (const BarrierRow& r : p.rows) {
    if (r.coeff.size() != n)
      throw std::invalid_argument("qp: row '" + r.source + "' has wrong coefficient size");
    if (!r.coeff.allFinite() || !std::isfinite(r.offset))
      throw std::invalid_argument("qp: row '" + r.source + "' has non-finite entries");
  }
}

}  // namespace

QpSolution solve_qp(const QpProblem& p) {
  check_problem(p);
  const Eigen::Index n = p.u_des.size();

  QpSolution sol;
  if ((p.lower.array() > p.upper.array()).any()) {
    sol.u = p.u_des;
    sol.status = QpStatus::infeasible_box;
    return sol;
  }

  // Fast path: the box projection of u_des already satisfies every row. It is
  // then the optimum (projection onto a superset landing inside the set), and
  // a feasible u_des passes through bitwise.
  Vector clamped = p.u_des.cwiseMax(p.lower).cwiseMin(p.upper);
  bool rows_ok = true;
  for (const BarrierRow& r : p.rows)
    if (r.coeff.dot(clamped) < r.offset - 1e-12) {
      rows_ok = false;
      break;
    }
  if (rows_ok) {
    sol.u = std::move(clamped);
    sol.status = QpStatus::optimal;
    return sol;
  }

  // Rows no admissible control can satisfy (split.impossible) must not steer:
  // letting them into a softened program makes the optimizer chase their
  // coefficient direction to a box corner for a microscopic slack saving,
  // trampling every row that was achievable. They are reported through the
  // relaxed status and the slack value instead, while u is decided by the
  // rows control can actually influence.
  const RowSplit split = split_rows(p.rows, p.lower, p.upper);

  const auto worst_impossible_gap = [&split](const Vector& u) {
    double worst = 0.0;
    for (const BarrierRow* r : split.impossible)
      worst = std::max(worst, r->offset - r->coeff.dot(u));
    return worst;
  };

  const std::vector<Halfspace> cons =
      normalized(stack_constraints(split.regular, p.lower, p.upper, 0));
  std::optional<Vector> u_exact;
  const DualResult direct = dual_active_set(p.u_des, Vector::Ones(n), cons);
  if (direct.v) {
    u_exact = direct.v;
  } else if (!direct.infeasible) {
    // Defensive bail without an infeasibility certificate: settle exactly
    // while the stack is small enough to enumerate (enumeration is
    // exhaustive, so nullopt from it means the regular rows conflict, same
    // as the certificate).
    if (cons.size() > 64)
      throw std::runtime_error(
          "qp: dual active-set solver failed on a stack too large for exhaustive fallback");
    u_exact = active_set_enumerate(p.u_des, Vector::Ones(n), cons);
  }

  if (u_exact) {
    sol.u = u_exact->cwiseMax(p.lower).cwiseMin(p.upper);
    if (split.impossible.empty()) {
      sol.status = QpStatus::optimal;
      return sol;
    }
    sol.status = QpStatus::relaxed;
    sol.slack = worst_impossible_gap(sol.u);
    return sol;
  }

  // The achievable rows are mutually unsatisfiable inside the box. Soften
  // them with one shared slack s >= 0 (rows become c . u + s >= d) under a
  // stiff quadratic penalty; box bounds stay hard. The slack trades off in
  // each row's native units, so the softened stack keeps the original
  // coefficients (the solver still normalizes its own copy; the slack column
  // bounds every normalizer away from zero).
  const std::vector<Halfspace> cons_slack =
      normalized(stack_constraints(split.regular, p.lower, p.upper, 1));
  Vector v0(n + 1);
  v0.head(n) = p.u_des;
  v0[n] = 0.0;
  // Minimizing ||u - u_des||^2 + kSlackWeight s^2 is, after halving,
  // 0.5 (v-v0)' diag(1,..,1, kSlackWeight) (v-v0).
  Vector W = Vector::Ones(n + 1);
  W[n] = kSlackWeight;
  std::optional<Vector> v = active_set_solve(v0, W, cons_slack);
  if (!v) throw std::runtime_error("qp: relaxed problem unexpectedly infeasible");

  sol.u = v->head(n).cwiseMax(p.lower).cwiseMin(p.upper);
  sol.status = QpStatus::relaxed;
  sol.slack = std::max({0.0, (*v)[n], worst_impossible_gap(sol.u)});
  return sol;
}

double verify_kkt(const QpProblem& p, const Vector& u) {
  check_problem(p);
  const Eigen::Index n = p.u_des.size();
  if (u.size() != n) throw std::invalid_argument("verify_kkt: u size mismatch");

  // The certificate is computed against the full stack in native units.
  std::vector<const BarrierRow*> all;
  all.reserve(p.rows.size());
  for (const BarrierRow& r : p.rows) all.push_back(&r);
  const std::vector<Halfspace> cons = stack_constraints(all, p.lower, p.upper, 0);

  double primal_violation = 0.0;
  std::vector<int> active;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const double gap = cons[i].a.dot(u) - cons[i].b;
    primal_violation += std::max(0.0, -gap);
    if (std::abs(gap) <= 1e-7) active.push_back(static_cast<int>(i));
  }

  // Best stationarity residual over nonnegative multipliers on the active
  // set: least-squares fit, negatives clamped away.
  const Vector grad = u - p.u_des;  // (1/2)||u-u_des||^2 gradient
  Vector residual = grad;
  if (!active.empty()) {
    Matrix At(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k)
      At.col(static_cast<Eigen::Index>(k)) = cons[static_cast<std::size_t>(active[k])].a;
    Vector lambda = At.completeOrthogonalDecomposition().solve(grad);
    lambda = lambda.cwiseMax(0.0);
    residual = grad - At * lambda;
  }
  return residual.lpNorm<Eigen::Infinity>() + primal_violation;
}

}  // namespace rta

#pragma once

#include <string>
#include <vector>

#include "rta/types.hpp"

// The ASIF quadratic program: minimize ||u - u_des||^2 subject to hard box
// bounds and linear barrier rows c . u >= d. Solved exactly by a dual
// active-set method (the problems are tiny in the variable count; implicit
// filters can stack hundreds of rows), with exhaustive active-set
// enumeration as a fallback on small stacks.
//
// Infeasibility degrades in two layers, both reported as `relaxed`. A row no
// control in the box can satisfy (its box-maximum of c . u still misses d,
// e.g. a barrier condition on a far future event the actuators cannot reach)
// is excluded from steering entirely: u is decided by the remaining rows and
// the unmet gap is reported as the slack. Rows that are individually
// satisfiable but mutually conflicting are certified infeasible by the dual
// method and softened with one shared slack under a stiff quadratic penalty.

namespace rta {

struct BarrierRow {
  Vector coeff;        // c, length m_ctrl
  double offset = 0;   // d, row reads c . u >= d
  std::string source;  // constraint name (+ trajectory index for implicit rows)
};

enum class QpStatus {
  optimal,         // all rows and bounds met, KKT residual <= 1e-8
  relaxed,         // some rows unmet (beyond authority or conflicting); bounds still hard
  infeasible_box,  // lower > upper somewhere; no solution attempted
};

std::string to_string(QpStatus s);

struct QpProblem {
  Vector u_des;
  Vector lower;
  Vector upper;
  std::vector<BarrierRow> rows;
};

struct QpSolution {
  Vector u;
  QpStatus status = QpStatus::optimal;
  double slack = 0.0;  // worst unmet row gap when status == relaxed
};

// Weight on the shared quadratic slack when barrier rows must be softened.
inline constexpr double kSlackWeight = 1e6;

QpSolution solve_qp(const QpProblem& p);

// Independent optimality check: sum of primal violations plus the best-case
// stationarity residual over nonnegative multipliers on the active set.
// Optimal solutions from solve_qp score <= 1e-8.
double verify_kkt(const QpProblem& p, const Vector& u);

}  // namespace rta

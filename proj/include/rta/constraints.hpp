#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rta/dual.hpp"
#include "rta/dynamics.hpp"
#include "rta/field.hpp"

// Safety constraints h(x) >= 0, class-kappa strengthening functions, and the
// higher-order barrier transform for constraints whose relative degree
// exceeds one.

namespace rta {

// alpha(z) = 10^a z + 10^b z^3 (strictly increasing, alpha(0) = 0). The
// polynomial family is the shipped default; custom() accepts any class-kappa
// callable evaluable on dual scalars.
class StrengtheningFn {
 public:
  StrengtheningFn() : StrengtheningFn(-2.0, -2.0) {}

  StrengtheningFn(double a, double b) : a_(a), b_(b), polynomial_(true) {
    const double ca = std::pow(10.0, a);
    const double cb = std::pow(10.0, b);
    assign([ca, cb](const auto& z) { return ca * z + cb * z * z * z; });
  }

  template <typename F>
  static StrengtheningFn custom(F f) {
    StrengtheningFn s;
    s.polynomial_ = false;
    s.assign(std::move(f));
    return s;
  }

  template <typename S>
  S operator()(const S& z) const {
    const auto& slot = detail::pick_slot<S>(k0_, k1_, k2_, k3_);
    if (!slot) throw std::logic_error("strengthening function: empty");
    return slot(z);
  }

  bool polynomial() const { return polynomial_; }
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  template <typename F>
  void assign(F f) {
    k0_ = f;
    k1_ = f;
    k2_ = f;
    k3_ = std::move(f);
  }

  double a_ = -2.0;
  double b_ = -2.0;
  bool polynomial_ = true;
  std::function<ad::D0(const ad::D0&)> k0_;
  std::function<ad::D1(const ad::D1&)> k1_;
  std::function<ad::D2(const ad::D2&)> k2_;
  std::function<ad::D3(const ad::D3&)> k3_;
};

struct SafetyConstraint {
  ScalarField h;          // h(x) >= 0 when satisfied
  StrengtheningFn alpha;  // applied by barrier-row builders
  std::string name;
};

// h(x), with evaluation errors rethrown carrying the constraint name.
double evaluate(const SafetyConstraint& c, const Vector& x);

struct SetMembership {
  bool inside = true;
  Vector values;  // one h value per constraint, in input order
};

// Membership in the allowable set: every h_i(x) >= -tol.
SetMembership in_allowable_set(const std::vector<SafetyConstraint>& cs, const Vector& x,
                               double tol = 1e-9);

// Higher-order barrier recursion: Psi_0 = h, Psi_i = grad(Psi_{i-1}) . f +
// alpha_i(Psi_{i-1}), returning the constraint whose field is
// Psi_{rel_degree-1}. alphas supplies alpha_1 .. alpha_{rel_degree-1}; the
// final strengthening stays the constraint's own and is applied by the
// barrier-row builders. rel_degree == 1 returns the constraint unchanged.
// Any active-dims hint is dropped from the result (dynamics may widen the
// dependency set); callers that know the coupling structure may reattach one.
SafetyConstraint hocbf_transform(const SafetyConstraint& c, const ControlAffineDynamics& dyn,
                                 int rel_degree, const std::vector<StrengtheningFn>& alphas);

}  // namespace rta

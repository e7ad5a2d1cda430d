#include "rta/constraints.hpp"

#include "rta/derivatives.hpp"

namespace rta {

double evaluate(const SafetyConstraint& c, const Vector& x) {
  if (x.size() != c.h.input_dim())
    throw std::invalid_argument("constraint '" + c.name + "': state size " +
                                std::to_string(x.size()) + " != " +
                                std::to_string(c.h.input_dim()));
  try {
    return c.h(x);
  } catch (const std::exception& e) {
    throw std::runtime_error("constraint '" + c.name + "': " + e.what());
  }
}

SetMembership in_allowable_set(const std::vector<SafetyConstraint>& cs, const Vector& x,
                               double tol) {
  SetMembership m;
  m.values.resize(static_cast<Eigen::Index>(cs.size()));
  for (std::size_t i = 0; i < cs.size(); ++i) {
    m.values[static_cast<Eigen::Index>(i)] = evaluate(cs[i], x);
    if (!(m.values[static_cast<Eigen::Index>(i)] >= -tol)) m.inside = false;
  }
  return m;
}

namespace {

// One recursion level: Psi(x) = grad(prev) . f(x) + alpha(prev(x)). Consumes
// one differentiation level of `prev`.
ScalarField lie_derivative_plus_alpha(const ScalarField& prev, const VectorField& f,
                                      const StrengtheningFn& alpha) {
  auto fn = [prev, f, alpha](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    VectorX<S> grad = gradient_at<S>(prev, x);
    VectorX<S> fx = f.eval<S>(x);
    return S(ad::dot(grad, fx) + alpha(prev.eval<S>(x)));
  };
  ScalarField out = ScalarField::with_depth<ad::kMaxNest - 1>(prev.input_dim(), std::move(fn));
  out.restrict_nest(prev.max_nest() - 1);
  return out;
}

}  // namespace

SafetyConstraint hocbf_transform(const SafetyConstraint& c, const ControlAffineDynamics& dyn,
                                 int rel_degree, const std::vector<StrengtheningFn>& alphas) {
  if (rel_degree < 1)
    throw std::invalid_argument("hocbf_transform('" + c.name + "'): rel_degree must be >= 1");
  if (static_cast<int>(alphas.size()) != rel_degree - 1)
    throw std::invalid_argument("hocbf_transform('" + c.name + "'): need rel_degree-1 = " +
                                std::to_string(rel_degree - 1) + " strengthening functions, got " +
                                std::to_string(alphas.size()));
  if (c.h.input_dim() != dyn.state_dim())
    throw std::invalid_argument("hocbf_transform('" + c.name +
                                "'): constraint/dynamics dimension mismatch");
  if (rel_degree > c.h.max_nest())
    throw std::invalid_argument(
        "hocbf_transform('" + c.name + "'): relative degree " + std::to_string(rel_degree) +
        " exceeds the supported differentiation depth (" + std::to_string(c.h.max_nest()) +
        "): the recursion uses rel_degree-1 levels and barrier rows one more");

  if (rel_degree == 1) return c;

  // Inner gradients keep c.h's own hint (structural zeros of grad h hold
  // regardless of dynamics); the composed field gets none.
  ScalarField psi = c.h;
  for (int i = 0; i < rel_degree - 1; ++i)
    psi = lie_derivative_plus_alpha(psi, dyn.drift(), alphas[static_cast<std::size_t>(i)]);
  return SafetyConstraint{std::move(psi), c.alpha, c.name};
}

}  // namespace rta

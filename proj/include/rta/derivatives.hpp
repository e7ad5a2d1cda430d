#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rta/field.hpp"

// Derivative drivers: gradient, Jacobian, Jacobian-vector product. All run
// one forward pass per seeded input direction; fields with an active-dims
// hint are only seeded along those directions (the rest are structural
// zeros).

namespace rta {

// Gradient at an arbitrary scalar depth, so composed fields can take
// gradients of gradients. Consumes one differentiation level of `field`.
template <typename S>
VectorX<S> gradient_at(const ScalarField& field, const VectorX<S>& x) {
  using D = ad::Dual<S>;
  const Eigen::Index n = x.size();
  VectorX<D> xd(n);
  for (Eigen::Index i = 0; i < n; ++i) xd[i] = D(x[i]);
  VectorX<S> grad(n);
  for (Eigen::Index i = 0; i < n; ++i) grad[i] = S(0.0);

  auto seeded = [&](Eigen::Index i) {
    xd[i].tangent = S(1.0);
    D out = field.eval<D>(xd);
    xd[i].tangent = S(0.0);
    return out.tangent;
  };

  if (field.active_dims()) {
    for (int i : *field.active_dims()) grad[i] = seeded(i);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) grad[i] = seeded(i);
  }
  return grad;
}

namespace detail {

inline void check_finite(const Vector& v, const std::string& what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw std::runtime_error(what + ": non-finite derivative at index " + std::to_string(i));
}

}  // namespace detail

inline Vector gradient(const ScalarField& field, const Vector& x) {
  if (x.size() != field.input_dim())
    throw std::invalid_argument("gradient: state size " + std::to_string(x.size()) +
                                " != field input_dim " + std::to_string(field.input_dim()));
  Vector g = gradient_at<double>(field, x);
  detail::check_finite(g, "gradient");
  return g;
}

// Directional derivative in one forward pass.
inline Vector jvp(const VectorField& field, const Vector& x, const Vector& v) {
  if (x.size() != field.input_dim() || v.size() != field.input_dim())
    throw std::invalid_argument("jvp: size mismatch with field input_dim");
  using D = ad::D1;
  VectorX<D> xd(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) xd[i] = D(x[i], v[i]);
  VectorX<D> out = field.eval<D>(xd);
  Vector t(out.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) t[i] = out[i].tangent;
  detail::check_finite(t, "jvp");
  return t;
}

inline Matrix jacobian(const VectorField& field, const Vector& x) {
  if (x.size() != field.input_dim())
    throw std::invalid_argument("jacobian: state size mismatch with field input_dim");
  using D = ad::D1;
  const Eigen::Index n = x.size();
  VectorX<D> xd(n);
  for (Eigen::Index i = 0; i < n; ++i) xd[i] = D(x[i]);
  Matrix J(field.output_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xd[i].tangent = 1.0;
    VectorX<D> out = field.eval<D>(xd);
    if (out.size() != field.output_dim())
      throw std::runtime_error("jacobian: field output size changed between calls");
    for (Eigen::Index r = 0; r < out.size(); ++r) {
      double t = out[r].tangent;
      if (!std::isfinite(t))
        throw std::runtime_error("jacobian: non-finite derivative at row " + std::to_string(r) +
                                 ", column " + std::to_string(i));
      J(r, i) = t;
    }
    xd[i].tangent = 0.0;
  }
  return J;
}

}  // namespace rta

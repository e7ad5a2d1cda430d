#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rta/dual.hpp"
#include "rta/types.hpp"

// Type-erased differentiable fields.
//
// A field wraps one generic callable, instantiated at every supported scalar
// depth (double, Dual, Dual^2, Dual^3). Erasing per-depth lets composed fields
// (Lie derivatives, barrier recursions) be built at run time while each
// composition step still re-differentiates the previous one. max_nest() says
// how many differentiation passes the field still supports; evaluating past
// that throws std::logic_error.

namespace rta {

namespace detail {

template <typename S, typename F0, typename F1, typename F2, typename F3>
const auto& pick_slot(const F0& f0, const F1& f1, const F2& f2, const F3& f3) {
  if constexpr (std::is_same_v<S, ad::D0>) return f0;
  else if constexpr (std::is_same_v<S, ad::D1>) return f1;
  else if constexpr (std::is_same_v<S, ad::D2>) return f2;
  else if constexpr (std::is_same_v<S, ad::D3>) return f3;
  else static_assert(sizeof(S) == 0, "unsupported scalar type for field evaluation");
}

}  // namespace detail

class ScalarField {
 public:
  ScalarField() = default;

  // f: generic callable, S f(const VectorX<S>&) for S in {double, Dual..Dual^3}.
  template <typename F>
  ScalarField(int input_dim, F f) {
    assign<ad::kMaxNest>(input_dim, std::move(f));
  }

  // Same, but instantiated only up to MaxNest differentiation levels. Needed
  // by callables that internally consume depth (e.g. Lie-derivative wrappers).
  template <int MaxNest, typename F>
  static ScalarField with_depth(int input_dim, F f) {
    ScalarField out;
    out.assign<MaxNest>(input_dim, std::move(f));
    return out;
  }

  bool empty() const { return max_nest_ < 0; }
  int input_dim() const { return input_dim_; }
  int max_nest() const { return max_nest_; }

  // Declares the field's remaining depth smaller than what is instantiated
  // (used when a wrapped field exhausts an inner field's depth).
  void restrict_nest(int n) { if (n < max_nest_) max_nest_ = n; }

  // Optional sparsity hint: input indices the field may depend on. Gradients
  // skip the rest. A wrong hint silently zeroes entries, so hints are only
  // set where structure guarantees them (and tests pin each use).
  const std::optional<std::vector<int>>& active_dims() const { return active_dims_; }
  void set_active_dims(std::vector<int> dims) { active_dims_ = std::move(dims); }
  void clear_active_dims() { active_dims_.reset(); }

  template <typename S>
  S eval(const VectorX<S>& x) const {
    const auto& slot = detail::pick_slot<S>(f0_, f1_, f2_, f3_);
    if (!slot)
      throw std::logic_error("scalar field: differentiation depth exhausted (max_nest=" +
                             std::to_string(max_nest_) + ")");
    return slot(x);
  }

  double operator()(const Vector& x) const { return eval<double>(x); }

 private:
  template <int MaxNest, typename F>
  void assign(int input_dim, F f) {
    static_assert(0 <= MaxNest && MaxNest <= ad::kMaxNest);
    input_dim_ = input_dim;
    max_nest_ = MaxNest;
    f0_ = f;
    if constexpr (MaxNest >= 1) f1_ = f;
    if constexpr (MaxNest >= 2) f2_ = f;
    if constexpr (MaxNest >= 3) f3_ = std::move(f);
  }

  int input_dim_ = 0;
  int max_nest_ = -1;
  std::function<ad::D0(const VectorX<ad::D0>&)> f0_;
  std::function<ad::D1(const VectorX<ad::D1>&)> f1_;
  std::function<ad::D2(const VectorX<ad::D2>&)> f2_;
  std::function<ad::D3(const VectorX<ad::D3>&)> f3_;
  std::optional<std::vector<int>> active_dims_;
};

class VectorField {
 public:
  VectorField() = default;

  template <typename F>
  VectorField(int input_dim, int output_dim, F f) {
    assign<ad::kMaxNest>(input_dim, output_dim, std::move(f));
  }

  template <int MaxNest, typename F>
  static VectorField with_depth(int input_dim, int output_dim, F f) {
    VectorField out;
    out.assign<MaxNest>(input_dim, output_dim, std::move(f));
    return out;
  }

  bool empty() const { return max_nest_ < 0; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int max_nest() const { return max_nest_; }

  template <typename S>
  VectorX<S> eval(const VectorX<S>& x) const {
    const auto& slot = detail::pick_slot<S>(f0_, f1_, f2_, f3_);
    if (!slot)
      throw std::logic_error("vector field: differentiation depth exhausted (max_nest=" +
                             std::to_string(max_nest_) + ")");
    return slot(x);
  }

  Vector operator()(const Vector& x) const { return eval<double>(x); }

 private:
  template <int MaxNest, typename F>
  void assign(int input_dim, int output_dim, F f) {
    static_assert(0 <= MaxNest && MaxNest <= ad::kMaxNest);
    input_dim_ = input_dim;
    output_dim_ = output_dim;
    max_nest_ = MaxNest;
    f0_ = f;
    if constexpr (MaxNest >= 1) f1_ = f;
    if constexpr (MaxNest >= 2) f2_ = f;
    if constexpr (MaxNest >= 3) f3_ = std::move(f);
  }

  int input_dim_ = 0;
  int output_dim_ = 0;
  int max_nest_ = -1;
  std::function<VectorX<ad::D0>(const VectorX<ad::D0>&)> f0_;
  std::function<VectorX<ad::D1>(const VectorX<ad::D1>&)> f1_;
  std::function<VectorX<ad::D2>(const VectorX<ad::D2>&)> f2_;
  std::function<VectorX<ad::D3>(const VectorX<ad::D3>&)> f3_;
};

// Matrix-valued field (control input map). One differentiation level is
// enough: nothing in the library re-differentiates through g twice.
class MatrixField {
 public:
  MatrixField() = default;

  template <typename F>
  MatrixField(int input_dim, int rows, int cols, F f)
      : input_dim_(input_dim), rows_(rows), cols_(cols), f0_(f), f1_(std::move(f)) {}

  bool empty() const { return !f0_; }
  int input_dim() const { return input_dim_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  template <typename S>
  MatrixX<S> eval(const VectorX<S>& x) const {
    if constexpr (ad::nest_depth_v<S> <= 1) {
      const auto& slot = detail::pick_slot<S>(f0_, f1_, f1_, f1_);
      if (!slot) throw std::logic_error("matrix field: empty");
      return slot(x);
    } else {
      throw std::logic_error("matrix field: only one differentiation level is supported");
    }
  }

  Matrix operator()(const Vector& x) const { return eval<double>(x); }

 private:
  int input_dim_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::function<MatrixX<ad::D0>(const VectorX<ad::D0>&)> f0_;
  std::function<MatrixX<ad::D1>(const VectorX<ad::D1>&)> f1_;
};

}  // namespace rta

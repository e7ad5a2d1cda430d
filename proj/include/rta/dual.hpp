#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include <Eigen/Core>

// Forward-mode automatic differentiation on dual numbers.
//
// A Dual<T> carries a value and a tangent; arithmetic propagates the tangent
// by the chain rule. Nesting (Dual<Dual<double>>, ...) gives higher-order
// derivatives: each extra level supports one more differentiation pass.
//
// Conventions:
//   * min/max return the first argument on ties, tangent included.
//   * sqrt/log at a non-positive value and norms at zero throw domain_error
//     instead of emitting NaN tangents.

namespace rta::ad {

template <typename T>
struct Dual {
  T value{};
  T tangent{};

  constexpr Dual() = default;
  constexpr Dual(double v) : value(v), tangent(0.0) {}  // NOLINT: implicit lift
  constexpr Dual(T v, T t) : value(std::move(v)), tangent(std::move(t)) {}

  // Lift one level: Dual<Dual<..>> from its value type.
  template <typename U = T, typename = std::enable_if_t<!std::is_same_v<U, double>>>
  constexpr Dual(const T& v) : value(v), tangent(0.0) {}  // NOLINT

  Dual& operator+=(const Dual& o) { value += o.value; tangent += o.tangent; return *this; }
  Dual& operator-=(const Dual& o) { value -= o.value; tangent -= o.tangent; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator-(const Dual& a) { return {-a.value, -a.tangent}; }
  friend Dual operator+(const Dual& a) { return a; }

  friend Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.tangent + b.tangent}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.tangent - b.tangent}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.tangent * b.value + a.value * b.tangent};
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    return {a.value / b.value, (a.tangent * b.value - a.value * b.tangent) / (b.value * b.value)};
  }

  friend Dual operator+(const Dual& a, double b) { return {a.value + b, a.tangent}; }
  friend Dual operator+(double a, const Dual& b) { return {a + b.value, b.tangent}; }
  friend Dual operator-(const Dual& a, double b) { return {a.value - b, a.tangent}; }
  friend Dual operator-(double a, const Dual& b) { return {a - b.value, -b.tangent}; }
  friend Dual operator*(const Dual& a, double b) { return {a.value * b, a.tangent * b}; }
  friend Dual operator*(double a, const Dual& b) { return {a * b.value, a * b.tangent}; }
  friend Dual operator/(const Dual& a, double b) { return {a.value / b, a.tangent / b}; }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

  friend bool operator<(const Dual& a, const Dual& b) { return a.value < b.value; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.value > b.value; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.value <= b.value; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.value >= b.value; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.value == b.value; }
  friend bool operator!=(const Dual& a, const Dual& b) { return a.value != b.value; }
};

using D0 = double;
using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

// Depth of nesting: how many times a scalar type can still be differentiated.
template <typename S>
struct nest_depth : std::integral_constant<int, 0> {};
template <typename T>
struct nest_depth<Dual<T>> : std::integral_constant<int, 1 + nest_depth<T>::value> {};
template <typename S>
inline constexpr int nest_depth_v = nest_depth<S>::value;

inline constexpr int kMaxNest = 3;

template <int K>
struct nested_dual { using type = Dual<typename nested_dual<K - 1>::type>; };
template <>
struct nested_dual<0> { using type = double; };
template <int K>
using nested_dual_t = typename nested_dual<K>::type;

inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& x) { return value_of(x.value); }

inline double tangent_of(double) { return 0.0; }
template <typename T>
double tangent_of(const Dual<T>& x) { return value_of(x.tangent); }

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  if (value_of(a.value) <= 0.0)
    throw std::domain_error("dual sqrt at a non-positive value has no derivative");
  T r = sqrt(a.value);
  return {r, a.tangent / (2.0 * r)};
}

template <typename T>
Dual<T> sin(const Dual<T>& a) { return {sin(a.value), a.tangent * cos(a.value)}; }

template <typename T>
Dual<T> cos(const Dual<T>& a) { return {cos(a.value), -(a.tangent * sin(a.value))}; }

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.value);
  return {e, a.tangent * e};
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  if (value_of(a.value) <= 0.0)
    throw std::domain_error("dual log at a non-positive value has no derivative");
  return {log(a.value), a.tangent / a.value};
}

template <typename T>
Dual<T> pow(const Dual<T>& a, double p) {
  T v = pow(a.value, p);
  return {v, a.tangent * (p * pow(a.value, p - 1.0))};
}

// Ties take the first argument, tangent included.
template <typename T>
Dual<T> min(const Dual<T>& a, const Dual<T>& b) { return a.value <= b.value ? a : b; }
template <typename T>
Dual<T> max(const Dual<T>& a, const Dual<T>& b) { return a.value >= b.value ? a : b; }
template <typename T>
Dual<T> min(const Dual<T>& a, double b) { return min(a, Dual<T>(b)); }
template <typename T>
Dual<T> min(double a, const Dual<T>& b) { return min(Dual<T>(a), b); }
template <typename T>
Dual<T> max(const Dual<T>& a, double b) { return max(a, Dual<T>(b)); }
template <typename T>
Dual<T> max(double a, const Dual<T>& b) { return max(Dual<T>(a), b); }

inline double min(double a, double b) { return a <= b ? a : b; }
inline double max(double a, double b) { return a >= b ? a : b; }

using std::abs;
template <typename T>
Dual<T> abs(const Dual<T>& a) { return value_of(a.value) < 0.0 ? -a : a; }

// Dot product and Euclidean norm over any scalar the AD types support.
// norm() refuses to differentiate through zero length.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dot(const Eigen::MatrixBase<DerivedA>& a,
                              const Eigen::MatrixBase<DerivedB>& b) {
  using S = typename DerivedA::Scalar;
  S acc(0.0);
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename Derived>
typename Derived::Scalar squared_norm(const Eigen::MatrixBase<Derived>& v) {
  return dot(v, v);
}

inline double norm_impl(double s2) { return std::sqrt(s2); }
template <typename T>
Dual<T> norm_impl(const Dual<T>& s2) {
  if (value_of(s2.value) == 0.0)
    throw std::domain_error("dual norm at the zero vector has no derivative");
  return sqrt(s2);
}

template <typename Derived>
typename Derived::Scalar norm(const Eigen::MatrixBase<Derived>& v) {
  return norm_impl(squared_norm(v));
}

template <typename T>
Dual<T> clamp(const Dual<T>& x, double lo, double hi) { return min(max(x, lo), hi); }
inline double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

}  // namespace rta::ad

namespace Eigen {

template <typename T>
struct NumTraits<rta::ad::Dual<T>> : NumTraits<double> {
  using Real = rta::ad::Dual<T>;
  using NonInteger = rta::ad::Dual<T>;
  using Nested = rta::ad::Dual<T>;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost,
  };
  static inline Real epsilon() { return NumTraits<double>::epsilon(); }
  static inline Real dummy_precision() { return NumTraits<double>::dummy_precision(); }
  static inline Real highest() { return NumTraits<double>::highest(); }
  static inline Real lowest() { return NumTraits<double>::lowest(); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

template <typename T, typename BinOp>
struct ScalarBinaryOpTraits<double, rta::ad::Dual<T>, BinOp> {
  using ReturnType = rta::ad::Dual<T>;
};
template <typename T, typename BinOp>
struct ScalarBinaryOpTraits<rta::ad::Dual<T>, double, BinOp> {
  using ReturnType = rta::ad::Dual<T>;
};

}  // namespace Eigen

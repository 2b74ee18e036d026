#pragma once

#include <cmath>
#include <ostream>

namespace topt::nlp {

// First-order dual number: value plus one directional derivative, propagated
// exactly through arithmetic. Comparisons act on the value part so generic
// code with branches (min/max, clamping) works for both double and Dual.
struct Dual {
  double val = 0.0;
  double dot = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double v, double d) : val(v), dot(d) {}

  Dual& operator+=(const Dual& r) {
    val += r.val;
    dot += r.dot;
    return *this;
  }
  Dual& operator-=(const Dual& r) {
    val -= r.val;
    dot -= r.dot;
    return *this;
  }
  Dual& operator*=(const Dual& r) {
    dot = dot * r.val + val * r.dot;
    val *= r.val;
    return *this;
  }
  Dual& operator/=(const Dual& r) {
    dot = (dot * r.val - val * r.dot) / (r.val * r.val);
    val /= r.val;
    return *this;
  }

  Dual operator-() const { return {-val, -dot}; }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }

inline bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
inline bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.val <= b.val; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.val >= b.val; }
inline bool operator==(const Dual& a, const Dual& b) { return a.val == b.val; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.val != b.val; }

inline Dual sin(const Dual& x) { return {std::sin(x.val), x.dot * std::cos(x.val)}; }
inline Dual cos(const Dual& x) { return {std::cos(x.val), -x.dot * std::sin(x.val)}; }
inline Dual tan(const Dual& x) {
  const double c = std::cos(x.val);
  return {std::tan(x.val), x.dot / (c * c)};
}
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.val);
  return {e, x.dot * e};
}
inline Dual log(const Dual& x) { return {std::log(x.val), x.dot / x.val}; }
inline Dual sqrt(const Dual& x) {
  const double r = std::sqrt(x.val);
  return {r, x.dot / (2.0 * r)};
}
// |x| with the zero subgradient at the kink.
inline Dual abs(const Dual& x) {
  const double s = x.val > 0.0 ? 1.0 : (x.val < 0.0 ? -1.0 : 0.0);
  return {std::abs(x.val), s * x.dot};
}
inline Dual pow(const Dual& x, double p) {
  return {std::pow(x.val, p), x.dot * p * std::pow(x.val, p - 1.0)};
}
inline const Dual& min(const Dual& a, const Dual& b) { return b < a ? b : a; }
inline const Dual& max(const Dual& a, const Dual& b) { return a < b ? b : a; }

inline bool isfinite(const Dual& x) { return std::isfinite(x.val) && std::isfinite(x.dot); }

inline std::ostream& operator<<(std::ostream& os, const Dual& x) {
  return os << x.val << "+" << x.dot << "e";
}

}  // namespace topt::nlp

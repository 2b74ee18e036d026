#pragma once

#include <array>
#include <cmath>

namespace topt::nlp {

// Forward-mode scalar carrying a fixed-width bundle of directional
// derivatives; one evaluation of a constraint block with one seeded slot per
// local variable yields the whole local Jacobian row set. Width 12 covers
// every block the transcriptions emit; wider blocks fall back to chunked
// passes.
inline constexpr int kDualPackWidth = 12;

struct DualPack {
  double val = 0.0;
  std::array<double, kDualPackWidth> dot{};

  constexpr DualPack() = default;
  constexpr DualPack(double v) : val(v) {}  // NOLINT(google-explicit-constructor)

  DualPack& operator+=(const DualPack& r) {
    val += r.val;
    for (int i = 0; i < kDualPackWidth; ++i) dot[i] += r.dot[i];
    return *this;
  }
  DualPack& operator-=(const DualPack& r) {
    val -= r.val;
    for (int i = 0; i < kDualPackWidth; ++i) dot[i] -= r.dot[i];
    return *this;
  }
  DualPack& operator*=(const DualPack& r) {
    for (int i = 0; i < kDualPackWidth; ++i) {
      dot[i] = dot[i] * r.val + val * r.dot[i];
    }
    val *= r.val;
    return *this;
  }
  DualPack& operator/=(const DualPack& r) {
    const double inv = 1.0 / r.val;
    for (int i = 0; i < kDualPackWidth; ++i) {
      dot[i] = (dot[i] - val * inv * r.dot[i]) * inv;
    }
    val *= inv;
    return *this;
  }
  DualPack operator-() const {
    DualPack out(-val);
    for (int i = 0; i < kDualPackWidth; ++i) out.dot[i] = -dot[i];
    return out;
  }
};

inline DualPack operator+(DualPack a, const DualPack& b) { return a += b; }
inline DualPack operator-(DualPack a, const DualPack& b) { return a -= b; }
inline DualPack operator*(DualPack a, const DualPack& b) { return a *= b; }
inline DualPack operator/(DualPack a, const DualPack& b) { return a /= b; }

inline bool operator<(const DualPack& a, const DualPack& b) { return a.val < b.val; }
inline bool operator>(const DualPack& a, const DualPack& b) { return a.val > b.val; }
inline bool operator<=(const DualPack& a, const DualPack& b) { return a.val <= b.val; }
inline bool operator>=(const DualPack& a, const DualPack& b) { return a.val >= b.val; }
inline bool operator==(const DualPack& a, const DualPack& b) { return a.val == b.val; }
inline bool operator!=(const DualPack& a, const DualPack& b) { return a.val != b.val; }

inline DualPack sin(const DualPack& x) {
  DualPack out(std::sin(x.val));
  const double c = std::cos(x.val);
  for (int i = 0; i < kDualPackWidth; ++i) out.dot[i] = c * x.dot[i];
  return out;
}
inline DualPack cos(const DualPack& x) {
  DualPack out(std::cos(x.val));
  const double s = -std::sin(x.val);
  for (int i = 0; i < kDualPackWidth; ++i) out.dot[i] = s * x.dot[i];
  return out;
}
inline DualPack exp(const DualPack& x) {
  const double e = std::exp(x.val);
  DualPack out(e);
  for (int i = 0; i < kDualPackWidth; ++i) out.dot[i] = e * x.dot[i];
  return out;
}
inline DualPack sqrt(const DualPack& x) {
  const double r = std::sqrt(x.val);
  DualPack out(r);
  const double s = 0.5 / r;
  for (int i = 0; i < kDualPackWidth; ++i) out.dot[i] = s * x.dot[i];
  return out;
}
inline DualPack abs(const DualPack& x) {
  const double sign = x.val > 0.0 ? 1.0 : (x.val < 0.0 ? -1.0 : 0.0);
  DualPack out(std::abs(x.val));
  for (int i = 0; i < kDualPackWidth; ++i) out.dot[i] = sign * x.dot[i];
  return out;
}
inline const DualPack& min(const DualPack& a, const DualPack& b) { return b < a ? b : a; }
inline const DualPack& max(const DualPack& a, const DualPack& b) { return a < b ? b : a; }

inline bool isfinite(const DualPack& x) {
  if (!std::isfinite(x.val)) return false;
  for (int i = 0; i < kDualPackWidth; ++i) {
    if (!std::isfinite(x.dot[i])) return false;
  }
  return true;
}

}  // namespace topt::nlp

#pragma once

#include <algorithm>
#include <array>

#include "qss/polytraj.hpp"

namespace qss {

// Truncated Taylor series with up to four coefficients.  Models evaluate
// their right-hand sides over this type so the engine receives the time
// derivatives of f along the quantized trajectories without symbolic work.
class Taylor {
 public:
  Taylor() = default;
  Taylor(double v) : c_{v, 0.0, 0.0, 0.0}, n_(1) {}  // NOLINT(google-explicit-constructor)
  Taylor(const Coeffs& c, int n) : c_(c), n_(n) {
    for (int k = n; k < 4; ++k) c_[k] = 0.0;
  }

  // Independent variable value + tau, kept to n coefficients.
  static Taylor variable(double v, int n) { return Taylor(Coeffs{v, 1.0, 0.0, 0.0}, n); }

  double operator[](int k) const { return c_[k]; }
  double value() const { return c_[0]; }
  int size() const { return n_; }
  const Coeffs& coeffs() const { return c_; }

  Taylor& operator+=(const Taylor& o) {
    for (int k = 0; k < 4; ++k) c_[k] += o.c_[k];
    n_ = std::max(n_, o.n_);
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int k = 0; k < 4; ++k) c_[k] -= o.c_[k];
    n_ = std::max(n_, o.n_);
    return *this;
  }
  Taylor& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  Taylor& operator/=(double s) {
    for (double& v : c_) v /= s;
    return *this;
  }

  friend Taylor operator-(Taylor a) {
    for (double& v : a.c_) v = -v;
    return a;
  }
  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator+(Taylor a, double b) {
    a.c_[0] += b;
    return a;
  }
  friend Taylor operator+(double a, Taylor b) { return b + a; }
  friend Taylor operator-(Taylor a, double b) {
    a.c_[0] -= b;
    return a;
  }
  friend Taylor operator-(double a, const Taylor& b) { return -b + a; }
  friend Taylor operator*(Taylor a, double s) { return a *= s; }
  friend Taylor operator*(double s, Taylor a) { return a *= s; }
  friend Taylor operator/(Taylor a, double s) { return a /= s; }

  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor r;
    r.n_ = std::max(a.n_, b.n_);
    for (int k = 0; k < r.n_; ++k) {
      double s = 0.0;
      for (int j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }

 private:
  Coeffs c_{};
  int n_ = 1;
};

}  // namespace qss

#pragma once

#include <cmath>
#include <complex>
#include <ostream>

namespace qdiff {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// A point on the Riemann sphere: a finite complex coordinate or the point
// at infinity. Finite coordinates are exact; use close_to() for proximity.
class SpherePoint {
 public:
  SpherePoint() : inf_(false), z_(0.0) {}

  static SpherePoint finite(Complex z) {
    SpherePoint p;
    p.inf_ = false;
    p.z_ = z;
    return p;
  }
  static SpherePoint infinity() {
    SpherePoint p;
    p.inf_ = true;
    p.z_ = Complex(0.0);
    return p;
  }

  bool is_infinity() const { return inf_; }
  Complex value() const { return z_; }

  // Exact equality (infinity compares equal to infinity only).
  friend bool operator==(const SpherePoint& a, const SpherePoint& b) {
    if (a.inf_ != b.inf_) return false;
    return a.inf_ || a.z_ == b.z_;
  }
  friend bool operator!=(const SpherePoint& a, const SpherePoint& b) {
    return !(a == b);
  }

  // Proximity in the chart where the point is finite: |z - q| for finite
  // points, |1/q| for infinity. tol is an absolute radius in that chart.
  bool close_to(const SpherePoint& q, double tol) const {
    if (inf_ && q.inf_) return true;
    if (inf_ != q.inf_) {
      const Complex v = inf_ ? q.z_ : z_;
      // the other point is at infinity: compare 1/|v|
      return std::abs(v) > 1.0 / tol;
    }
    return std::abs(z_ - q.z_) <= tol;
  }

  // Lexicographic order by (Re, Im) with infinity sorted last. Used for all
  // canonical orderings of critical points.
  friend bool operator<(const SpherePoint& a, const SpherePoint& b) {
    if (a.inf_ != b.inf_) return !a.inf_;
    if (a.inf_) return false;
    if (a.z_.real() != b.z_.real()) return a.z_.real() < b.z_.real();
    return a.z_.imag() < b.z_.imag();
  }

  friend std::ostream& operator<<(std::ostream& os, const SpherePoint& p) {
    if (p.inf_) return os << "inf";
    return os << p.z_;
  }

 private:
  bool inf_;
  Complex z_;
};

}  // namespace qdiff

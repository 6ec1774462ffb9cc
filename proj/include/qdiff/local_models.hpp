#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qdiff/differential.hpp"
#include "qdiff/errors.hpp"

namespace qdiff {

enum class PoleRegime { Radial, Circular, Spiral };

// Local data of a double pole b^2 z^-2 dz^2. The trajectory picture near the
// pole is rays (b real), concentric circles (b imaginary) or logarithmic
// spirals (all other b).
struct DoublePoleData {
  SpherePoint pole;
  Complex b;
  PoleRegime regime = PoleRegime::Radial;
};

inline PoleRegime classify_regime(Complex b, double tol = 1e-9) {
  const double m = std::abs(b);
  if (std::abs(b.real()) <= tol * m) return PoleRegime::Circular;
  if (std::abs(b.imag()) <= tol * m) return PoleRegime::Radial;
  return PoleRegime::Spiral;
}

// Phase-theta critical directions of C z^n dz^2 at the origin:
// alpha_k = (2*pi*theta - arg C + 2*pi*k) / (n+2), one per sector boundary.
// Valid for any order n != -2 (poles of order >= 3 give |n+2| directions).
inline std::vector<double> critical_directions(int n, Complex C,
                                               double theta = 0.0) {
  const int count = std::abs(n + 2);
  std::vector<double> out;
  out.reserve(count);
  const double argc = std::arg(C);
  for (int k = 0; k < count; ++k) {
    double a = (2.0 * kPi * theta - argc + 2.0 * kPi * k) / (n + 2);
    a = std::fmod(a, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    // fold exact wraparounds back to zero
    if (a >= 2.0 * kPi) a -= 2.0 * kPi;
    out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Primitive of z^{n/2} on the principal branch: W(z) = (2/(n+2)) z^{(n+2)/2},
// with the cut along the negative real axis. side > 0 evaluates on the upper
// lip of the cut, side < 0 on the lower lip.
inline Complex model_primitive(int n, Complex z, int side = 0) {
  if (n == -2) throw WrongOrder("model_primitive: n = -2 has no power primitive");
  if (z.imag() == 0.0 && z.real() < 0.0) {
    if (side == 0) throw BranchCut("model_primitive: z on the branch cut");
    const double arg = side > 0 ? kPi : -kPi;
    const double e = 0.5 * (n + 2);
    const Complex p = std::pow(std::abs(z), e) *
                      Complex(std::cos(e * arg), std::sin(e * arg));
    return 2.0 / (n + 2) * p;
  }
  return 2.0 / (n + 2) * std::pow(z, 0.5 * (n + 2));
}

// Residue data of a double pole: b^2 is the leading Laurent coefficient of f,
// b normalized to Re(b) > 0 (ties broken by Im(b) > 0).
inline DoublePoleData double_pole_residue(const QuadraticDifferential& phi,
                                          const SpherePoint& pole,
                                          double regime_tol = 1e-9) {
  const DivisorEntry* e = phi.find(pole, phi.tol() * 10.0);
  if (e == nullptr || e->order != -2)
    throw WrongOrder("double_pole_residue: pole order is not -2");
  const Complex b = detail::double_pole_b(phi, *e);
  return DoublePoleData{e->point, b, classify_regime(b, regime_tol)};
}

}  // namespace qdiff

#pragma once

#include <utility>
#include <vector>

#include "qdiff/complex_poly.hpp"
#include "qdiff/errors.hpp"
#include "qdiff/sphere_point.hpp"

namespace qdiff {

// Rational function on the sphere, normalized so the denominator is monic
// and numerator/denominator share no root (common roots are cancelled at
// construction via root matching).
class RationalMap {
 public:
  RationalMap() : num_(ComplexPoly::constant(Complex(1.0))), den_(ComplexPoly::constant(Complex(1.0))) {
    finish(1e-8);
  }

  RationalMap(ComplexPoly num, ComplexPoly den, double tol = 1e-8)
      : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw InconsistentDivisor("RationalMap: zero denominator");
    if (!num_.is_zero()) cancel_common(tol);
    finish(tol);
  }

  const ComplexPoly& num() const { return num_; }
  const ComplexPoly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }

  // deg num - deg den; order of growth at infinity.
  int map_degree() const { return num_.degree() - den_.degree(); }

  Complex eval(Complex z) const { return num_.eval(z) / den_.eval(z); }

  const std::vector<PolyRoot>& zeros() const { return zeros_; }
  const std::vector<PolyRoot>& poles() const { return poles_; }

  // Vanishing order at p: positive at zeros, negative at poles, 0 elsewhere.
  // At infinity this is -(deg num - deg den).
  int order_at(const SpherePoint& p, double tol = 1e-8) const {
    if (is_zero()) throw InconsistentDivisor("order_at: zero map");
    if (p.is_infinity()) return -map_degree();
    return multiplicity_at(zeros_, p.value(), tol) -
           multiplicity_at(poles_, p.value(), tol);
  }

  friend RationalMap operator*(Complex s, const RationalMap& f) {
    return RationalMap(s * f.num_, f.den_);
  }

 private:
  void cancel_common(double tol) {
    std::vector<PolyRoot> nr = roots(num_, tol);
    std::vector<PolyRoot> dr = roots(den_, tol);
    bool cancelled = false;
    for (PolyRoot& d : dr) {
      for (PolyRoot& n : nr) {
        if (n.multiplicity == 0 || d.multiplicity == 0) continue;
        if (std::abs(n.z - d.z) <= tol * (1.0 + std::abs(d.z))) {
          const int k = std::min(n.multiplicity, d.multiplicity);
          n.multiplicity -= k;
          d.multiplicity -= k;
          cancelled = true;
        }
      }
    }
    if (!cancelled) return;
    std::vector<Complex> nz, dz;
    for (const PolyRoot& n : nr)
      for (int i = 0; i < n.multiplicity; ++i) nz.push_back(n.z);
    for (const PolyRoot& d : dr)
      for (int i = 0; i < d.multiplicity; ++i) dz.push_back(d.z);
    num_ = ComplexPoly::from_roots(nz, num_.lead());
    den_ = ComplexPoly::from_roots(dz, den_.lead());
  }

  void finish(double tol) {
    const Complex dl = den_.lead();
    den_ = (Complex(1.0) / dl) * den_;
    num_ = (Complex(1.0) / dl) * num_;
    if (!num_.is_zero()) {
      zeros_ = roots(num_, tol);
      poles_ = roots(den_, tol);
    } else {
      zeros_.clear();
      poles_ = den_.degree() > 0 ? roots(den_, tol) : std::vector<PolyRoot>{};
    }
  }

  ComplexPoly num_, den_;
  std::vector<PolyRoot> zeros_, poles_;
};

}  // namespace qdiff

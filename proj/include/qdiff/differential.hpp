#pragma once

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qdiff/errors.hpp"
#include "qdiff/rational_map.hpp"

namespace qdiff {

struct DivisorEntry {
  SpherePoint point;
  int order = 0;        // positive at zeros, negative at poles
  Complex leading;      // leading local coefficient of f in the chart at point
};

// Zeros and poles of f(z)dz^2 including the point at infinity, where the
// w = 1/z chart contributes w^-4. Orders sum to -4 on the sphere.
inline std::vector<DivisorEntry> divisor_of(const RationalMap& f,
                                            double tol = 1e-8) {
  if (f.is_zero()) throw InconsistentDivisor("divisor_of: zero map");
  std::vector<DivisorEntry> div;
  for (const PolyRoot& z : f.zeros()) {
    Complex rem;
    ComplexPoly defl = f.num();
    for (int i = 0; i < z.multiplicity; ++i) defl = defl.deflate(z.z, &rem);
    div.push_back({SpherePoint::finite(z.z), z.multiplicity,
                   defl.eval(z.z) / f.den().eval(z.z)});
  }
  for (const PolyRoot& p : f.poles()) {
    Complex rem;
    ComplexPoly defl = f.den();
    for (int i = 0; i < p.multiplicity; ++i) defl = defl.deflate(p.z, &rem);
    div.push_back({SpherePoint::finite(p.z), -p.multiplicity,
                   f.num().eval(p.z) / defl.eval(p.z)});
  }
  const int inf_order = -4 - f.map_degree();
  if (inf_order != 0)
    div.push_back({SpherePoint::infinity(), inf_order,
                   f.num().lead() / f.den().lead()});
  std::sort(div.begin(), div.end(),
            [](const DivisorEntry& a, const DivisorEntry& b) {
              return a.point < b.point;
            });
  return div;
}

struct GmnReport {
  bool is_gmn = false;
  bool has_only_double_poles = false;
  std::vector<std::string> failures;
  std::vector<int> purely_imaginary_residue_poles;  // warnings, pole ids
};

// N = 6g - 6 + sum(m_i) + m, the rank of the hat homology group.
inline int hat_rank(int genus, const std::vector<int>& polar_type) {
  if (polar_type.empty())
    throw InvalidConfiguration("hat_rank: empty polar type");
  const int sum = std::accumulate(polar_type.begin(), polar_type.end(), 0);
  const int n = 6 * genus - 6 + sum + static_cast<int>(polar_type.size());
  if (n <= 0)
    throw InvalidConfiguration("hat_rank: polar type admits no GMN differential");
  return n;
}

inline int holomorphic_quadratic_dimension(int genus) {
  if (genus == 0) return 0;
  if (genus == 1) return 1;
  return 3 * genus - 3;
}

// A quadratic differential f(z)dz^2 on the sphere with its divisor, polar
// type and per-critical-point leading coefficients precomputed.
class QuadraticDifferential {
 public:
  explicit QuadraticDifferential(RationalMap f, double tol = 1e-8)
      : f_(std::move(f)), tol_(tol), divisor_(divisor_of(f_, tol)) {
    for (const DivisorEntry& e : divisor_) {
      if (e.order < 0) {
        polar_type_.push_back(-e.order);
        poles_.push_back(e);
      } else {
        zeros_.push_back(e);
      }
    }
    std::sort(polar_type_.begin(), polar_type_.end());
    // w = 1/z chart: g(w) = f(1/w) / w^4.
    const int e = f_.den().degree() - f_.num().degree() - 4;
    ComplexPoly gn = f_.num().reversed();
    ComplexPoly gd = f_.den().reversed();
    if (e >= 0)
      gn = gn.shifted_up(e);
    else
      gd = gd.shifted_up(-e);
    chart_w_ = RationalMap(gn, gd, tol);
  }

  const RationalMap& f() const { return f_; }
  const RationalMap& chart_w() const { return chart_w_; }
  double tol() const { return tol_; }

  const std::vector<DivisorEntry>& divisor() const { return divisor_; }
  const std::vector<DivisorEntry>& zeros() const { return zeros_; }
  const std::vector<DivisorEntry>& poles() const { return poles_; }
  const std::vector<int>& polar_type() const { return polar_type_; }

  int zero_count() const { return static_cast<int>(zeros_.size()); }
  int pole_count() const { return static_cast<int>(poles_.size()); }

  int order_at(const SpherePoint& p) const {
    for (const DivisorEntry& e : divisor_)
      if (e.point.close_to(p, tol_ * 100.0)) return e.order;
    return 0;
  }

  const DivisorEntry* find(const SpherePoint& p, double tol) const {
    for (const DivisorEntry& e : divisor_)
      if (e.point.close_to(p, tol)) return &e;
    return nullptr;
  }

  int pole_id(const SpherePoint& p, double tol) const {
    for (size_t i = 0; i < poles_.size(); ++i)
      if (poles_[i].point.close_to(p, tol)) return static_cast<int>(i);
    return -1;
  }

  int zero_id(const SpherePoint& p, double tol) const {
    for (size_t i = 0; i < zeros_.size(); ++i)
      if (zeros_[i].point.close_to(p, tol)) return static_cast<int>(i);
    return -1;
  }

  double max_finite_critical_radius() const {
    double r = 0.0;
    for (const DivisorEntry& e : divisor_)
      if (!e.point.is_infinity()) r = std::max(r, std::abs(e.point.value()));
    return r;
  }

  // Minimum pairwise distance between finite critical points; falls back to
  // the chart radius scale when fewer than two exist.
  double min_critical_separation() const {
    double m = 2.0 * (1.0 + max_finite_critical_radius()) / 2.0;
    bool found = false;
    for (size_t i = 0; i < divisor_.size(); ++i) {
      if (divisor_[i].point.is_infinity()) continue;
      for (size_t j = i + 1; j < divisor_.size(); ++j) {
        if (divisor_[j].point.is_infinity()) continue;
        const double d =
            std::abs(divisor_[i].point.value() - divisor_[j].point.value());
        if (!found || d < m) m = d;
        found = true;
      }
    }
    return m;
  }

 private:
  RationalMap f_;
  double tol_;
  std::vector<DivisorEntry> divisor_;
  std::vector<DivisorEntry> zeros_, poles_;
  std::vector<int> polar_type_;
  RationalMap chart_w_;
};

namespace detail {
inline Complex double_pole_b(const QuadraticDifferential& phi,
                             const DivisorEntry& pole) {
  // b is the square root of the (z-p)^-2 coefficient, normalized to
  // Re(b) > 0, or Re(b) = 0 and Im(b) > 0.
  Complex b = std::sqrt(pole.leading);
  if (b.real() < 0.0 || (b.real() == 0.0 && b.imag() < 0.0)) b = -b;
  (void)phi;
  return b;
}
}  // namespace detail

inline GmnReport validate_gmn(const QuadraticDifferential& phi,
                              double residue_tol = 1e-9) {
  GmnReport rep;
  bool simple = true;
  for (const DivisorEntry& z : phi.zeros())
    if (z.order > 1) {
      simple = false;
      std::ostringstream os;
      os << "non-simple zero of order " << z.order << " at " << z.point;
      rep.failures.push_back(os.str());
    }
  if (phi.pole_count() == 0) rep.failures.push_back("no pole");
  bool finite_crit = phi.zero_count() > 0;
  for (const DivisorEntry& p : phi.poles())
    if (p.order == -1) finite_crit = true;
  if (!finite_crit) rep.failures.push_back("no finite critical point");
  rep.has_only_double_poles =
      phi.pole_count() > 0 &&
      std::all_of(phi.polar_type().begin(), phi.polar_type().end(),
                  [](int m) { return m == 2; });
  rep.is_gmn = rep.failures.empty();
  // A double pole with purely imaginary residue b surrounds itself with
  // closed trajectories; the ring domain boundary forces saddles.
  for (size_t i = 0; i < phi.poles().size(); ++i) {
    const DivisorEntry& p = phi.poles()[i];
    if (p.order != -2) continue;
    const Complex b = detail::double_pole_b(phi, p);
    if (std::abs(b.real()) <= residue_tol * std::abs(b))
      rep.purely_imaginary_residue_poles.push_back(static_cast<int>(i));
  }
  (void)simple;
  return rep;
}

}  // namespace qdiff

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "qdiff/errors.hpp"
#include "qdiff/sphere_point.hpp"

namespace qdiff {

// Dense polynomial over C, coefficients stored in ascending degree order.
// The zero polynomial is the empty coefficient list and has degree() == -1.
class ComplexPoly {
 public:
  ComplexPoly() = default;

  explicit ComplexPoly(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {
    trim();
  }

  static ComplexPoly zero() { return ComplexPoly(); }
  static ComplexPoly constant(Complex a) { return ComplexPoly({a}); }

  // Monic polynomial with the given roots, scaled by `lead`.
  static ComplexPoly from_roots(const std::vector<Complex>& roots,
                                Complex lead = Complex(1.0)) {
    std::vector<Complex> c{lead};
    for (Complex r : roots) {
      c.push_back(Complex(0.0));
      for (int k = static_cast<int>(c.size()) - 1; k > 0; --k)
        c[k] = c[k - 1] - r * c[k];
      c[0] *= -r;
    }
    return ComplexPoly(std::move(c));
  }

  bool is_zero() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  const std::vector<Complex>& coeffs() const { return c_; }

  Complex coeff(int k) const {
    if (k < 0 || k >= static_cast<int>(c_.size())) return Complex(0.0);
    return c_[k];
  }

  Complex lead() const { return c_.empty() ? Complex(0.0) : c_.back(); }

  double coeff_scale() const {
    double m = 0.0;
    for (const Complex& a : c_) m = std::max(m, std::abs(a));
    return m;
  }

  Complex eval(Complex z) const {
    Complex acc(0.0);
    for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k)
      acc = acc * z + c_[k];
    return acc;
  }

  ComplexPoly derivative() const {
    if (c_.size() <= 1) return ComplexPoly();
    std::vector<Complex> d(c_.size() - 1);
    for (size_t k = 1; k < c_.size(); ++k)
      d[k - 1] = static_cast<double>(k) * c_[k];
    return ComplexPoly(std::move(d));
  }

  // Synthetic division by (z - r): returns the quotient, and the remainder
  // p(r) through `rem`.
  ComplexPoly deflate(Complex r, Complex* rem = nullptr) const {
    if (c_.empty()) {
      if (rem) *rem = Complex(0.0);
      return ComplexPoly();
    }
    std::vector<Complex> q(c_.size() > 1 ? c_.size() - 1 : 0);
    Complex carry = c_.back();
    for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) {
      q[k] = carry;
      carry = c_[k] + carry * r;
    }
    if (rem) *rem = carry;
    return ComplexPoly(std::move(q));
  }

  // Reversed coefficients: rev(p)(w) = w^deg · p(1/w). Used for the w = 1/z
  // chart at infinity.
  ComplexPoly reversed() const {
    std::vector<Complex> r(c_.rbegin(), c_.rend());
    return ComplexPoly(std::move(r));
  }

  ComplexPoly shifted_up(int k) const {  // multiply by z^k
    if (c_.empty() || k == 0) return *this;
    std::vector<Complex> r(c_.size() + static_cast<size_t>(k), Complex(0.0));
    std::copy(c_.begin(), c_.end(), r.begin() + k);
    return ComplexPoly(std::move(r));
  }

  friend ComplexPoly operator*(const ComplexPoly& a, const ComplexPoly& b) {
    if (a.is_zero() || b.is_zero()) return ComplexPoly();
    std::vector<Complex> r(a.c_.size() + b.c_.size() - 1, Complex(0.0));
    for (size_t i = 0; i < a.c_.size(); ++i)
      for (size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return ComplexPoly(std::move(r));
  }

  friend ComplexPoly operator*(Complex s, const ComplexPoly& p) {
    std::vector<Complex> r = p.c_;
    for (Complex& a : r) a *= s;
    return ComplexPoly(std::move(r));
  }

  friend ComplexPoly operator+(const ComplexPoly& a, const ComplexPoly& b) {
    std::vector<Complex> r(std::max(a.c_.size(), b.c_.size()), Complex(0.0));
    for (size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
    for (size_t i = 0; i < b.c_.size(); ++i) r[i] += b.c_[i];
    return ComplexPoly(std::move(r));
  }

  friend ComplexPoly operator-(const ComplexPoly& a, const ComplexPoly& b) {
    return a + (Complex(-1.0) * b);
  }

  friend bool operator==(const ComplexPoly& a, const ComplexPoly& b) {
    return a.c_ == b.c_;
  }

 private:
  void trim() {
    // Strip leading coefficients that are negligible against the largest one.
    double m = coeff_scale();
    const double cut = m * 1e-300;  // only exact/underflow zeros
    while (!c_.empty() && std::abs(c_.back()) <= cut) c_.pop_back();
    if (m == 0.0) c_.clear();
  }

  std::vector<Complex> c_;
};

struct PolyRoot {
  Complex z;
  int multiplicity = 1;
};

namespace detail {

// Newton refinement of a root of multiplicity m, run on the (m-1)-th
// derivative where the root is simple.
inline Complex refine_cluster(const ComplexPoly& p, Complex z0, int m) {
  ComplexPoly q = p;
  for (int i = 1; i < m; ++i) q = q.derivative();
  ComplexPoly dq = q.derivative();
  Complex z = z0;
  for (int it = 0; it < 80; ++it) {
    Complex f = q.eval(z);
    Complex df = dq.eval(z);
    if (std::abs(df) == 0.0) break;
    Complex step = f / df;
    z -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
  }
  // Guard against Newton wandering off the cluster.
  if (std::abs(z - z0) > 1e-2 * (1.0 + std::abs(z0))) return z0;
  return z;
}

}  // namespace detail

// All roots of p with multiplicities. Simultaneous (Aberth) iteration;
// clusters within tol·(1+|z|) merge into one root with summed multiplicity
// and are re-polished on the appropriate derivative.
inline std::vector<PolyRoot> roots(const ComplexPoly& p, double tol = 1e-8) {
  if (p.is_zero()) throw NonConvergence("roots: zero polynomial");
  const int n = p.degree();
  std::vector<Complex> z;
  if (n == 0) {
    // fallthrough: no roots
  } else if (n == 1) {
    z.push_back(-p.coeff(0) / p.coeff(1));
  } else if (n == 2) {
    const Complex a = p.coeff(2), b = p.coeff(1), c = p.coeff(0);
    Complex d = std::sqrt(b * b - 4.0 * a * c);
    if (std::real(std::conj(b) * d) < 0.0) d = -d;
    const Complex q = -0.5 * (b + d);
    z.push_back(q / a);
    z.push_back(std::abs(q) > 0.0 ? c / q : -b / a - q / a);
  } else {
    // Aberth-Ehrlich from staggered points on a Cauchy-bound circle.
    const Complex an = p.lead();
    double r = 0.0;
    for (int k = 0; k < n; ++k) r = std::max(r, std::abs(p.coeff(k) / an));
    r = 1.0 + r;
    const Complex center = -p.coeff(n - 1) / (static_cast<double>(n) * an);
    z.resize(n);
    for (int j = 0; j < n; ++j) {
      const double a = 2.0 * kPi * j / n + 0.7 + 0.05 * j / n;
      z[j] = center + r * (0.8 + 0.1 * j / n) * Complex(std::cos(a), std::sin(a));
    }
    const ComplexPoly dp = p.derivative();
    bool converged = false;
    for (int it = 0; it < 400 && !converged; ++it) {
      converged = true;
      for (int j = 0; j < n; ++j) {
        const Complex pv = p.eval(z[j]);
        const Complex dv = dp.eval(z[j]);
        Complex nj;
        if (std::abs(dv) == 0.0) {
          nj = Complex(tol, tol);
        } else {
          nj = pv / dv;
        }
        Complex s(0.0);
        for (int k = 0; k < n; ++k) {
          if (k == j) continue;
          Complex d = z[j] - z[k];
          if (std::abs(d) == 0.0) d = Complex(1e-12, 1e-12);
          s += 1.0 / d;
        }
        const Complex denom = 1.0 - nj * s;
        const Complex w = std::abs(denom) > 0.0 ? nj / denom : nj;
        z[j] -= w;
        if (std::abs(w) > 1e-14 * (1.0 + std::abs(z[j]))) converged = false;
      }
    }
  }

  // Cluster nearby approximations (union-find on pairwise proximity).
  // A root of multiplicity m only converges to ~eps^(1/m), so the radius
  // around each approximation grows with its Newton correction |p/p'|.
  const int m = static_cast<int>(z.size());
  const ComplexPoly pd = p.derivative();
  std::vector<double> reach(m);
  for (int i = 0; i < m; ++i) {
    const Complex dv = pd.eval(z[i]);
    const double newton =
        std::abs(dv) > 0.0 ? std::abs(p.eval(z[i]) / dv) : 0.0;
    reach[i] = std::max(tol * (1.0 + std::abs(z[i])), 4.0 * newton);
  }
  std::vector<int> parent(m);
  for (int i = 0; i < m; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      if (std::abs(z[i] - z[j]) <= std::max(reach[i], reach[j]))
        parent[find(i)] = find(j);
    }

  std::vector<PolyRoot> out;
  std::vector<char> seen(m, 0);
  for (int i = 0; i < m; ++i) {
    const int ri = find(i);
    if (seen[ri]) continue;
    seen[ri] = 1;
    Complex c(0.0);
    int mult = 0;
    for (int j = 0; j < m; ++j)
      if (find(j) == ri) {
        c += z[j];
        ++mult;
      }
    c /= static_cast<double>(mult);
    if (mult > 1) c = detail::refine_cluster(p, c, mult);
    out.push_back({c, mult});
  }

  // Residual validation against the coefficient scale.
  const double scale = p.coeff_scale();
  for (const PolyRoot& root : out) {
    const double bound =
        std::max(tol, 1e-6) * scale * std::pow(1.0 + std::abs(root.z), n);
    if (std::abs(p.eval(root.z)) > bound)
      throw NonConvergence("roots: residual tolerance not reached");
  }

  std::sort(out.begin(), out.end(), [](const PolyRoot& a, const PolyRoot& b) {
    if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
    return a.z.imag() < b.z.imag();
  });
  return out;
}

// Multiplicity of `pt` as a root of p, by proximity to the computed roots.
inline int multiplicity_at(const std::vector<PolyRoot>& rs, Complex pt,
                           double tol) {
  for (const PolyRoot& r : rs)
    if (std::abs(r.z - pt) <= tol * (1.0 + std::abs(pt))) return r.multiplicity;
  return 0;
}

}  // namespace qdiff

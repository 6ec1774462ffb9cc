#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

// Directions alpha where the ray r*e^{i alpha} is a phase-theta leaf of
// C z^n dz^2, found by brute-force minimization of the angular defect of
// Im(e^{-i pi theta} sqrt(C) (2/(n+2)) z^{(n+2)/2}) over a fine grid.
inline std::vector<double> ray_directions_bruteforce(int n, Complex C,
                                                     double theta) {
  auto defect = [&](double a) {
    const double e = 0.5 * (n + 2);
    const Complex ang = std::exp(Complex(0.0, e * a));
    const Complex v = std::exp(Complex(0.0, -kPi * theta)) * std::sqrt(C) *
                      (2.0 / (n + 2)) * ang;
    return std::abs(v.imag());
  };
  const int grid = 20001;  // odd, so minima cannot straddle the wrap seam
  std::vector<double> found;
  for (int i = 0; i < grid; ++i) {
    const double prev = 2.0 * kPi * (i - 1) / grid;
    const double here = 2.0 * kPi * i / grid;
    const double next = 2.0 * kPi * (i + 1) / grid;
    if (defect(here) <= defect(prev) && defect(here) <= defect(next) &&
        defect(here) < 1e-2) {
      double lo = prev, hi = next;
      for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (defect(m1) < defect(m2))
          hi = m2;
        else
          lo = m1;
      }
      double a = 0.5 * (lo + hi);
      a = std::fmod(a + 2.0 * kPi, 2.0 * kPi);
      bool dup = false;
      for (double b : found)
        if (std::abs(a - b) < 1e-4 || std::abs(std::abs(a - b) - 2.0 * kPi) < 1e-4)
          dup = true;
      if (!dup) found.push_back(a);
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

// Central finite difference of a complex map.
template <typename F>
Complex central_diff(F f, Complex z, double h = 1e-6) {
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

inline std::mt19937& rng() {
  static std::mt19937 gen(20260811u);
  return gen;
}

inline Complex random_unit_disc(std::mt19937& gen, double radius = 1.0) {
  std::uniform_real_distribution<double> u(-radius, radius);
  return Complex(u(gen), u(gen));
}

}  // namespace oracle

#include <catch2/catch_amalgamated.hpp>

#include "qdiff/local_models.hpp"
#include "../support/oracles.hpp"

using namespace qdiff;

TEST_CASE("critical directions of z dz^2") {
  auto dirs = critical_directions(1, Complex(1.0), 0.0);
  REQUIRE(dirs.size() == 3);
  CHECK(std::abs(dirs[0] - 0.0) < 1e-12);
  CHECK(std::abs(dirs[1] - 2.0 * kPi / 3.0) < 1e-12);
  CHECK(std::abs(dirs[2] - 4.0 * kPi / 3.0) < 1e-12);
}

TEST_CASE("single ray at a simple pole") {
  auto dirs = critical_directions(-1, Complex(1.0), 0.0);
  REQUIRE(dirs.size() == 1);
  CHECK(std::abs(dirs[0]) < 1e-12);
}

TEST_CASE("directions for C = -1 match the brute-force oracle") {
  auto dirs = critical_directions(1, Complex(-1.0), 0.0);
  auto want = oracle::ray_directions_bruteforce(1, Complex(-1.0), 0.0);
  REQUIRE(dirs.size() == want.size());
  for (size_t i = 0; i < dirs.size(); ++i)
    CHECK(std::abs(dirs[i] - want[i]) < 1e-6);
  // and the closed forms
  CHECK(std::abs(dirs[0] - kPi / 3.0) < 1e-12);
  CHECK(std::abs(dirs[1] - kPi) < 1e-12);
  CHECK(std::abs(dirs[2] - 5.0 * kPi / 3.0) < 1e-12);
}

TEST_CASE("directions of higher-order poles") {
  // z^-4 dz^2 has |n+2| = 2 rays at {0, pi}
  auto dirs = critical_directions(-4, Complex(1.0), 0.0);
  REQUIRE(dirs.size() == 2);
  CHECK(std::abs(dirs[0] - 0.0) < 1e-12);
  CHECK(std::abs(dirs[1] - kPi) < 1e-12);
}

TEST_CASE("consecutive directions differ by 2 pi / (n+2)") {
  auto& gen = oracle::rng();
  for (int n : {-1, 0, 1, 2, 3, 5}) {
    const Complex C = oracle::random_unit_disc(gen, 1.0) + Complex(1.5);
    auto dirs = critical_directions(n, C, 0.37);
    REQUIRE(static_cast<int>(dirs.size()) == n + 2);
    for (size_t i = 0; i + 1 < dirs.size(); ++i)
      CHECK(std::abs(dirs[i + 1] - dirs[i] - 2.0 * kPi / (n + 2)) < 1e-10);
  }
}

TEST_CASE("rotating C rotates the directions") {
  const int n = 1;
  const double beta = 0.83;
  auto base = critical_directions(n, Complex(2.0, 0.5), 0.0);
  auto rot = critical_directions(
      n, Complex(2.0, 0.5) * std::exp(Complex(0.0, beta)), 0.0);
  const double period = 2.0 * kPi / (n + 2);
  for (size_t i = 0; i < base.size(); ++i) {
    double diff = std::fmod(base[i] - beta / (n + 2) - rot[0] + 10.0 * kPi, period);
    diff = std::min(diff, period - diff);
    bool matches_some = false;
    for (double r : rot) {
      double d = std::fmod(std::abs(base[i] - beta / (n + 2) - r), 2.0 * kPi);
      d = std::min(d, 2.0 * kPi - d);
      if (d < 1e-9) matches_some = true;
    }
    CHECK(matches_some);
    (void)diff;
  }
}

TEST_CASE("model primitive values") {
  CHECK(std::abs(model_primitive(1, Complex(1.0)) - Complex(2.0 / 3.0)) < 1e-15);
  // n = 0: identity primitive
  const Complex w(0.3, -0.8);
  CHECK(std::abs(model_primitive(0, w) - w) < 1e-15);
}

TEST_CASE("model primitive differentiates to z^{n/2}") {
  auto& gen = oracle::rng();
  for (int n : {-1, 0, 1, 2, 3}) {
    for (int t = 0; t < 5; ++t) {
      Complex z = oracle::random_unit_disc(gen, 1.0) + Complex(2.0, 0.5);
      auto f = [&](Complex x) { return model_primitive(n, x); };
      const Complex d = oracle::central_diff(f, z);
      const Complex want = std::pow(z, 0.5 * n);
      CHECK(std::abs(d - want) < 1e-7 * (1.0 + std::abs(want)));
    }
  }
}

TEST_CASE("model primitive is real on the separatrix rays") {
  // phase-theta rays of z dz^2 carry Im(e^{-i pi theta} W) = 0
  for (double theta : {0.0, 0.25, 0.8}) {
    auto dirs = critical_directions(1, Complex(1.0), theta);
    for (double a : dirs) {
      for (double r : {0.1, 0.5, 1.0, 2.0}) {
        const Complex z = r * std::exp(Complex(0.0, a));
        const Complex w = std::exp(Complex(0.0, -kPi * theta)) *
                          model_primitive(1, z, a > kPi ? -1 : 1);
        CHECK(std::abs(w.imag()) < 1e-12 * std::max(1.0, std::abs(w)));
      }
    }
  }
}

TEST_CASE("branch cut is reported") {
  CHECK_THROWS_AS(model_primitive(1, Complex(-1.0, 0.0)), BranchCut);
  CHECK_NOTHROW(model_primitive(1, Complex(-1.0, 0.0), +1));
}

namespace {
QuadraticDifferential pole_with(Complex b2) {
  return QuadraticDifferential(RationalMap(
      ComplexPoly::constant(b2), ComplexPoly({0.0, 0.0, Complex(1.0)})));
}
}  // namespace

TEST_CASE("double pole residues and regimes") {
  auto circ = double_pole_residue(pole_with(Complex(-1.0)),
                                  SpherePoint::finite(Complex(0.0)));
  CHECK(std::abs(circ.b - Complex(0.0, 1.0)) < 1e-12);
  CHECK(circ.regime == PoleRegime::Circular);

  auto rad = double_pole_residue(pole_with(Complex(1.0)),
                                 SpherePoint::finite(Complex(0.0)));
  CHECK(std::abs(rad.b - Complex(1.0)) < 1e-12);
  CHECK(rad.regime == PoleRegime::Radial);

  auto spi = double_pole_residue(pole_with(Complex(1.0, 1.0) * Complex(1.0, 1.0)),
                                 SpherePoint::finite(Complex(0.0)));
  CHECK(std::abs(spi.b - Complex(1.0, 1.0)) < 1e-12);
  CHECK(spi.regime == PoleRegime::Spiral);
}

TEST_CASE("wrong pole order raises") {
  QuadraticDifferential phi(RationalMap(
      ComplexPoly::constant(Complex(1.0)),
      ComplexPoly({0.0, 0.0, 0.0, Complex(1.0)})));
  CHECK_THROWS_AS(
      double_pole_residue(phi, SpherePoint::finite(Complex(0.0))), WrongOrder);
}

TEST_CASE("residue squared scales exactly with the differential") {
  auto& gen = oracle::rng();
  const Complex c2 = oracle::random_unit_disc(gen, 1.0) + Complex(2.0, 1.0);
  const Complex b2(0.7, 0.4);
  auto base = double_pole_residue(pole_with(b2), SpherePoint::finite(Complex(0.0)));
  auto scaled =
      double_pole_residue(pole_with(c2 * b2), SpherePoint::finite(Complex(0.0)));
  CHECK(std::abs(scaled.b * scaled.b - c2 * base.b * base.b) <
        1e-12 * std::abs(c2 * b2));
}

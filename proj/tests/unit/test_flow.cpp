#include <catch2/catch_amalgamated.hpp>

#include "qdiff/flow.hpp"
#include "../support/oracles.hpp"

using namespace qdiff;

namespace {

QuadraticDifferential from_coeffs(std::vector<Complex> num,
                                  std::vector<Complex> den) {
  return QuadraticDifferential(
      RationalMap(ComplexPoly(std::move(num)), ComplexPoly(std::move(den))));
}

QuadraticDifferential z_power(int n) {
  // z^n dz^2 for n of either sign
  if (n >= 0) {
    std::vector<Complex> num(n + 1, Complex(0.0));
    num.back() = Complex(1.0);
    return from_coeffs(std::move(num), {Complex(1.0)});
  }
  std::vector<Complex> den(-n + 1, Complex(0.0));
  den.back() = Complex(1.0);
  return from_coeffs({Complex(1.0)}, std::move(den));
}

double conservation_defect(const TrajectorySample& s) {
  const Complex rot = std::exp(Complex(0.0, -kPi * s.theta));
  const double im0 = (rot * s.vertices.front().W).imag();
  double worst = 0.0;
  for (const auto& v : s.vertices)
    worst = std::max(worst, std::abs((rot * v.W).imag() - im0));
  return worst / std::max(1.0, s.metric_length);
}

}  // namespace

TEST_CASE("dz^2 traces a horizontal line with W = t") {
  QuadraticDifferential one = z_power(0);
  auto c = TraceControls::defaults_for(one);
  c.length_cap = 5.0;
  auto s = trace(one, SpherePoint::finite(Complex(0.0)), 1, 0.0, c);
  CHECK(s.terminal.kind == TerminalKind::Kind::LengthCapped);
  for (const auto& v : s.vertices) {
    const Complex z = TrajectorySample::z_of(v);
    CHECK(std::abs(z.imag()) < 1e-9);
    CHECK(std::abs(v.W - z) < 1e-9 * (1.0 + std::abs(z)));
  }
}

TEST_CASE("dz^2 at theta = 1/2 traces a vertical line") {
  QuadraticDifferential one = z_power(0);
  auto c = TraceControls::defaults_for(one);
  c.length_cap = 5.0;
  auto s = trace(one, SpherePoint::finite(Complex(0.0)), 1, 0.5, c);
  double last = -1.0;
  for (const auto& v : s.vertices) {
    CHECK(std::abs(TrajectorySample::z_of(v).real()) < 1e-9);
    CHECK(std::abs(v.W.real()) < 1e-9);
    // Re(e^{-i pi/2} W) = Im(W) increases
    CHECK(v.W.imag() >= last - 1e-12);
    last = v.W.imag();
  }
}

TEST_CASE("z dz^2 separatrix ray runs into the zero on a level set") {
  QuadraticDifferential zq = z_power(1);
  const Complex seed = 0.5 * std::exp(Complex(0.0, 2.0 * kPi / 3.0));
  auto s = trace(zq, SpherePoint::finite(seed), 1, 0.0);
  REQUIRE(s.terminal.kind == TerminalKind::Kind::HitZero);
  CHECK(s.terminal.target == 0);
  CHECK(s.terminal.final_distance < TraceControls::defaults_for(zq).delta_zero);
  for (const auto& v : s.vertices) {
    const Complex z = TrajectorySample::z_of(v);
    const Complex w = 2.0 / 3.0 * std::pow(z, 1.5);
    CHECK(std::abs(w.imag()) <= 1e-8);
  }
}

TEST_CASE("radial double pole pulls the trajectory in") {
  QuadraticDifferential ip = z_power(-2);  // f = 1/z^2, b = 1
  auto s = trace(ip, SpherePoint::finite(Complex(1.0)), -1, 0.0);
  REQUIRE(s.terminal.kind == TerminalKind::Kind::HitPole);
  CHECK(s.terminal.target == 0);
  for (const auto& v : s.vertices) {
    const Complex z = TrajectorySample::z_of(v);
    CHECK(std::abs(z.imag()) < 1e-9 * (1.0 + std::abs(z)));
  }
  // outward the ray converges to the double pole at infinity
  auto so = trace(ip, SpherePoint::finite(Complex(1.0)), 1, 0.0);
  REQUIRE(so.terminal.kind == TerminalKind::Kind::HitPole);
  CHECK(so.terminal.target == 1);
}

TEST_CASE("circular double pole gives a closed orbit") {
  QuadraticDifferential circ = from_coeffs({Complex(-1.0)},
                                           {0.0, 0.0, Complex(1.0)});
  auto s = trace(circ, SpherePoint::finite(Complex(1.0)), 1, 0.0);
  REQUIRE(s.terminal.kind == TerminalKind::Kind::Closed);
  // the stop radius delta_zero bounds the length overshoot
  CHECK(std::abs(s.metric_length - 2.0 * kPi) < 5e-6);
  for (const auto& v : s.vertices)
    CHECK(std::abs(std::abs(TrajectorySample::z_of(v)) - 1.0) <= 1e-6);
}

TEST_CASE("spiral double pole winds into the origin") {
  const Complex b(1.0, 1.0);
  QuadraticDifferential spi = from_coeffs({b * b}, {0.0, 0.0, Complex(1.0)});
  auto c = TraceControls::defaults_for(spi);
  c.delta_pole = 1e-3;  // let it wind a few turns before the basin stops it
  auto s = trace(spi, SpherePoint::finite(Complex(1.0)), -1, 0.0, c);
  REQUIRE(s.terminal.kind == TerminalKind::Kind::HitPole);
  CHECK(s.terminal.target == 0);
  // winding: the argument sweeps more than a half turn on the way in
  double total = 0.0;
  for (size_t i = 0; i + 1 < s.vertices.size(); ++i) {
    if (s.vertices[i].w_chart || s.vertices[i + 1].w_chart) continue;
    total += std::arg(s.vertices[i + 1].u / s.vertices[i].u);
  }
  CHECK(std::abs(total) > kPi);
}

TEST_CASE("conservation holds across models and phases") {
  for (int n : {-6, -5, -4, -3, -1, 1, 2}) {
    QuadraticDifferential phi = z_power(n);
    auto c = TraceControls::defaults_for(phi);
    c.length_cap = 30.0;
    for (double theta : {0.0, 0.37}) {
      for (double ang : {0.3, 2.1, 4.4}) {
        const Complex seed = 0.7 * std::exp(Complex(0.0, ang));
        auto s = trace(phi, SpherePoint::finite(seed), 1, theta, c);
        CHECK(conservation_defect(s) <= 1e-6);
      }
    }
  }
}

TEST_CASE("unit speed: Re(e^{-i pi theta} W) is monotone and matches length") {
  QuadraticDifferential phi = z_power(1);
  auto c = TraceControls::defaults_for(phi);
  c.length_cap = 10.0;
  const double theta = 0.21;
  auto s = trace(phi, SpherePoint::finite(Complex(0.9, 0.4)), 1, theta, c);
  const Complex rot = std::exp(Complex(0.0, -kPi * theta));
  for (size_t i = 0; i + 1 < s.vertices.size(); ++i) {
    const double dre = (rot * (s.vertices[i + 1].W - s.vertices[i].W)).real();
    const double dlen = s.vertices[i + 1].s - s.vertices[i].s;
    CHECK(dre > -1e-12);
    CHECK(std::abs(dre - dlen) <= 1e-6 * std::max(1.0, dlen));
  }
}

TEST_CASE("sheet involution: reversed direction on the other sheet") {
  QuadraticDifferential phi = z_power(1);
  auto c = TraceControls::defaults_for(phi);
  c.length_cap = 8.0;
  Tracer t(phi, 0.0, c);
  Tracer::Start a{SpherePoint::finite(Complex(1.0, 0.5)), 1, 1, std::nullopt};
  Tracer::Start b{SpherePoint::finite(Complex(1.0, 0.5)), -1, -1, std::nullopt};
  auto sa = t.run(a);
  auto sb = t.run(b);
  REQUIRE(sa.vertices.size() == sb.vertices.size());
  for (size_t i = 0; i < sa.vertices.size(); ++i) {
    CHECK(std::abs(sa.vertices[i].u - sb.vertices[i].u) < 1e-12);
    CHECK(std::abs(sa.vertices[i].W + sb.vertices[i].W) < 1e-12);
  }
}

TEST_CASE("phase shift equals rotating the differential") {
  const double theta = 0.23;
  QuadraticDifferential phi = z_power(1);
  QuadraticDifferential rotated(
      RationalMap(std::exp(Complex(0.0, -2.0 * kPi * theta)) *
                      ComplexPoly({Complex(0.0), Complex(1.0)}),
                  ComplexPoly::constant(Complex(1.0))));
  auto c = TraceControls::defaults_for(phi);
  c.length_cap = 6.0;
  auto s1 = trace(phi, SpherePoint::finite(Complex(1.0, 0.3)), 1, theta, c);
  auto s2 = trace(rotated, SpherePoint::finite(Complex(1.0, 0.3)), 1, 0.0, c);
  CHECK(s1.terminal.kind == s2.terminal.kind);
  REQUIRE(s1.vertices.size() == s2.vertices.size());
  for (size_t i = 0; i < s1.vertices.size(); i += 7)
    CHECK(std::abs(s1.vertices[i].u - s2.vertices[i].u) < 1e-7);
}

TEST_CASE("metric length diverges into a double pole") {
  QuadraticDifferential ip = z_power(-2);
  auto c = TraceControls::defaults_for(ip);
  c.delta_pole = 1e-6;  // let the trace run deep into the pole
  auto s = trace(ip, SpherePoint::finite(Complex(1.0)), -1, 0.0, c);
  REQUIRE(s.terminal.kind == TerminalKind::Kind::HitPole);
  // model length is |b| log(r0/r) = log(1e6) ~ 13.8
  CHECK(s.metric_length > 10.0);
}

TEST_CASE("seed preconditions") {
  QuadraticDifferential zq = z_power(1);
  CHECK_THROWS_AS(trace(zq, SpherePoint::finite(Complex(0.0)), 1, 0.0),
                  SeedTooCritical);
  auto c = TraceControls::defaults_for(zq);
  CHECK_THROWS_AS(
      trace(zq, SpherePoint::finite(Complex(c.delta_zero * 0.5, 0.0)), 1, 0.0, c),
      SeedTooCritical);
}

TEST_CASE("primitive along a straight segment of the trivial differential") {
  QuadraticDifferential one = z_power(0);
  auto r = primitive_along(one, {Complex(0.0), Complex(3.0, 4.0)}, 1);
  CHECK(std::abs(r.W - Complex(3.0, 4.0)) < 1e-12);
  CHECK(r.final_branch == 1);
}

TEST_CASE("quadrature recovers pi/2 with endpoint refinement") {
  QuadraticDifferential omz = from_coeffs({Complex(1.0), Complex(0.0), Complex(-1.0)},
                                          {Complex(1.0)});
  const double eps = 1e-4;
  const Complex a(-1.0 + eps), b(1.0 - eps);
  auto mid = primitive_along(omz, {a, b}, 1);
  const Complex sa = std::sqrt(omz.f().eval(a));
  const Complex sb =
      static_cast<double>(mid.final_branch) * std::sqrt(omz.f().eval(b));
  const Complex total = 2.0 / 3.0 * sa * (a - Complex(-1.0)) + mid.W +
                        2.0 / 3.0 * sb * (Complex(1.0) - b);
  CHECK(std::abs(total - Complex(kPi / 2.0)) < 1e-8);
}

TEST_CASE("monodromy around a simple zero flips the sheet") {
  QuadraticDifferential zq = z_power(1);
  std::vector<Complex> loop;
  for (int i = 0; i <= 48; ++i)
    loop.push_back(std::exp(Complex(0.0, 2.0 * kPi * i / 48.0)));
  auto r = primitive_along(zq, loop, 1);
  CHECK(r.final_branch == -1);
  // the closed-form loop integral of sqrt(z) dz is -4/3
  CHECK(std::abs(r.W - Complex(-4.0 / 3.0)) < 1e-9);
}

TEST_CASE("randomized loops always flip the sheet") {
  // zero at 0, other critical points kept at distance 2
  QuadraticDifferential f = QuadraticDifferential(RationalMap(
      ComplexPoly::from_roots({Complex(0.0), Complex(2.0), Complex(0.0, -2.0)}),
      ComplexPoly::constant(Complex(1.0))));
  auto& gen = oracle::rng();
  std::uniform_real_distribution<double> radius(0.4, 1.1);
  std::uniform_int_distribution<int> sides(5, 12);
  int flips = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const int k = sides(gen);
    std::vector<Complex> loop;
    for (int i = 0; i < k; ++i)
      loop.push_back(radius(gen) *
                     std::exp(Complex(0.0, 2.0 * kPi * i / k)));
    loop.push_back(loop.front());
    auto r = primitive_along(f, loop, 1);
    if (r.final_branch == -1) ++flips;
  }
  CHECK(flips == trials);
}

TEST_CASE("paths near critical points are rejected") {
  QuadraticDifferential zq = z_power(1);
  CHECK_THROWS_AS(
      primitive_along(zq, {Complex(-1.0, 1e-9), Complex(1.0, 1e-9)}, 1),
      PathTooClose);
}

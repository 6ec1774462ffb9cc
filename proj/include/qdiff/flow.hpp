#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "qdiff/differential.hpp"
#include "qdiff/errors.hpp"
#include "qdiff/local_models.hpp"

namespace qdiff {

// Tolerances and radii used by the tracer. Defaults are derived from the
// differential's critical geometry; tests override individual fields.
struct TraceControls {
  double rtol = 1e-9;
  double r_switch = 4.0;      // chart switch radius, hysteresis band x1.25
  double delta_zero = 4e-6;   // stop radius at finite critical points
  double delta_pole = 0.1;    // basin radius at infinite critical points
  double delta_path = 4e-6;   // clearance required of quadrature paths
  double length_cap = 400.0;  // metric length before LengthCapped
  double max_step_scale = 1.0;  // tighten to refine recorded polylines
  bool record = true;

  static TraceControls defaults_for(const QuadraticDifferential& phi) {
    TraceControls c;
    c.r_switch = 2.0 * (1.0 + phi.max_finite_critical_radius());
    c.delta_zero = 1e-6 * c.r_switch;
    c.delta_pole = 0.1 * phi.min_critical_separation();
    c.delta_path = c.delta_zero;
    c.length_cap = 100.0 * c.r_switch;
    return c;
  }
};

struct TerminalKind {
  enum class Kind { HitZero, HitPole, ChartEscape, LengthCapped, Closed, ObserverStop };
  Kind kind = Kind::LengthCapped;
  int target = -1;             // zero id / pole id where applicable
  double final_distance = 0.0; // distance at a HitZero stop
  double cap = 0.0;            // the cap that fired for LengthCapped

  bool hit_zero() const { return kind == Kind::HitZero; }
  bool hit_pole() const { return kind == Kind::HitPole; }
};

struct TraceVertex {
  bool w_chart = false;
  Complex u;       // coordinate in the active chart
  int branch = 1;  // sheet of sqrt(f) relative to the principal branch
  Complex W;       // accumulated primitive of sqrt(f) dz
  double s = 0.0;  // metric length so far
};

struct TrajectorySample {
  std::vector<TraceVertex> vertices;
  TerminalKind terminal;
  double metric_length = 0.0;
  double theta = 0.0;

  static Complex z_of(const TraceVertex& v) {
    return v.w_chart ? Complex(1.0) / v.u : v.u;
  }
};

// Per-step information handed to an observer; z0/z1 are the step endpoints
// in the z chart (valid when finite).
struct TraceStep {
  bool w_chart = false;
  Complex u0, u1;
  Complex z0, z1;
  Complex velocity;  // du/ds at the end of the step
  Complex W;
  int branch = 1;
  double s = 0.0;
};

using TraceObserver = std::function<bool(const TraceStep&)>;

namespace detail {

inline double point_segment_distance(Complex p, Complex a, Complex b) {
  const Complex ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  double t = std::real(std::conj(ab) * (p - a)) / len2;
  t = std::max(0.0, std::min(1.0, t));
  return std::abs(p - (a + t * ab));
}

struct CriticalSite {
  bool at_infinity = false;
  Complex z;           // finite coordinate (unused when at infinity)
  int order = 0;
  int id = -1;         // index into zeros() or poles() of the differential
  bool finite_type = false;  // zero or simple pole: finite critical point
  PoleRegime regime = PoleRegime::Radial;  // double poles, at the trace phase
  double stop_radius = 0.0;
};

inline Complex sqrt_continued(Complex value, Complex ref, bool* ambiguous) {
  Complex s = std::sqrt(value);
  const double dplus = std::abs(s - ref);
  const double dminus = std::abs(s + ref);
  if (dminus < dplus) s = -s;
  if (ambiguous != nullptr) {
    const double dot = std::real(s * std::conj(ref));
    const double mag = std::abs(s) * std::abs(ref);
    *ambiguous = mag > 0.0 && dot < 0.3 * mag;
  }
  return s;
}

// Shared tracer state for one quadratic differential at one phase.
class FlowField {
 public:
  FlowField(const QuadraticDifferential& phi, double theta,
            const TraceControls& controls)
      : phi_(phi), theta_(theta), c_(controls),
        dir_phase_(std::exp(Complex(0.0, kPi * theta))) {
    const Complex rot = std::exp(Complex(0.0, -kPi * theta));
    for (const DivisorEntry& e : phi.divisor()) {
      CriticalSite s;
      s.at_infinity = e.point.is_infinity();
      s.z = s.at_infinity ? Complex(0.0) : e.point.value();
      s.order = e.order;
      s.id = e.order > 0 ? phi.zero_id(e.point, 1e-9)
                         : phi.pole_id(e.point, 1e-9);
      s.finite_type = e.order > 0 || e.order == -1;
      if (e.order == -2) {
        // effective residue at this phase: b^2 scales by e^{-2 pi i theta}
        Complex b = std::sqrt(rot * rot * e.leading);
        s.regime = classify_regime(b);
      }
      if (s.finite_type) {
        s.stop_radius = c_.delta_zero;
      } else {
        s.stop_radius = s.at_infinity
                            ? std::min(c_.delta_pole, 0.3 / c_.r_switch)
                            : c_.delta_pole;
      }
      sites_.push_back(s);
    }
  }

  const QuadraticDifferential& phi() const { return phi_; }
  double theta() const { return theta_; }
  const TraceControls& controls() const { return c_; }
  Complex phase() const { return dir_phase_; }
  const std::vector<CriticalSite>& sites() const { return sites_; }

  const RationalMap& map(bool w_chart) const {
    return w_chart ? phi_.chart_w() : phi_.f();
  }

  // Distance from u to the nearest critical site visible in this chart.
  // Finite sites live in the z chart; infinity lives at w = 0.
  double nearest_site(bool w_chart, Complex u, const CriticalSite** out) const {
    double best = 1e300;
    if (out) *out = nullptr;
    for (const CriticalSite& s : sites_) {
      if (s.at_infinity != w_chart) continue;
      const double d = std::abs(u - s.z);
      if (d < best) {
        best = d;
        if (out) *out = &s;
      }
    }
    return best;
  }

 private:
  const QuadraticDifferential& phi_;
  double theta_;
  TraceControls c_;
  Complex dir_phase_;
  std::vector<CriticalSite> sites_;
};

}  // namespace detail

// Numerically integrated phase-theta trajectory through `seed`.
//
// The field is dz/ds = dir * e^{i pi theta} |sqrt f| / sqrt f, i.e. unit
// speed in the chart coordinate, with sqrt f continued analytically along
// the polyline; W accumulates the primitive of sqrt(f) dz alongside, inside
// the same embedded Dormand-Prince 5(4) step so both share error control.
class Tracer {
 public:
  Tracer(const QuadraticDifferential& phi, double theta,
         const TraceControls& controls)
      : field_(phi, theta, controls) {}

  struct Start {
    SpherePoint seed;
    int direction = 1;
    // sheet at the seed: +1/-1 relative to the principal sqrt, or an
    // explicit continued value overriding it
    int branch = 1;
    std::optional<Complex> sqrt_value;
    // override of the initial step size; keeps early chords short when the
    // seed hugs a feature the caller probes with segment tests
    double initial_step = -1.0;
  };

  TrajectorySample run(const Start& start, TraceObserver observer = nullptr) const {
    const TraceControls& c = field_.controls();
    const QuadraticDifferential& phi = field_.phi();

    bool w_chart = start.seed.is_infinity() ||
                   std::abs(start.seed.value()) > 1.25 * c.r_switch;
    Complex u = w_chart
                    ? (start.seed.is_infinity() ? Complex(0.0)
                                                : Complex(1.0) / start.seed.value())
                    : start.seed.value();

    {
      const detail::CriticalSite* site = nullptr;
      const double d = field_.nearest_site(w_chart, u, &site);
      if (site != nullptr && d <= c.delta_zero)
        throw SeedTooCritical("trace: seed within delta_zero of a critical point");
    }

    Complex beta;
    int branch = start.branch;
    {
      const Complex principal = std::sqrt(field_.map(w_chart).eval(u));
      if (std::abs(principal) == 0.0)
        throw SeedTooCritical("trace: f vanishes at seed");
      if (start.sqrt_value) {
        beta = detail::sqrt_continued(principal * principal, *start.sqrt_value,
                                      nullptr);
        branch = std::abs(beta - principal) <= std::abs(beta + principal) ? 1 : -1;
        beta = static_cast<double>(branch) * principal;
      } else {
        beta = static_cast<double>(branch) * principal;
      }
    }

    const double dir = start.direction >= 0 ? 1.0 : -1.0;
    TrajectorySample out;
    out.theta = field_.theta();

    Complex W(0.0);
    double s_metric = 0.0;
    const bool seed_w_chart = w_chart;
    const Complex seed_u = u;
    const int seed_branch = branch;
    Complex v0 = velocity(dir, beta);
    bool left_seed = false;
    const double h_floor = 1e-13 * c.r_switch;
    double h = start.initial_step > 0.0 ? start.initial_step : 0.01 * c.r_switch;

    if (c.record) out.vertices.push_back({w_chart, u, branch, W, 0.0});

    const long max_steps = 20000000;
    for (long step = 0; step < max_steps; ++step) {
      // clamp the step against nearby critical points and the chart scale;
      // also against the seed once left, so a closed orbit lands on it
      {
        const double dist = field_.nearest_site(w_chart, u, nullptr);
        const double lim = std::max(0.25 * dist, 0.5 * c.delta_zero);
        h = std::min(h, lim);
        h = std::min(h, c.max_step_scale *
                            (w_chart ? 0.2 / c.r_switch : 0.05 * c.r_switch));
        if (left_seed && w_chart == seed_w_chart)
          h = std::min(h, std::max(0.25 * std::abs(u - seed_u), 0.5 * c.delta_zero));
      }
      if (h < h_floor)
        throw StepCollapse("trace: adaptive step underflow");

      Complex nu, nW, nbeta;
      double err = 0.0;
      const bool ok = dp45_step(w_chart, u, W, beta, dir, h, &nu, &nW, &nbeta, &err);
      const double tol = c.rtol * (1.0 + std::abs(u));
      if (!ok || err > tol) {
        h *= ok ? std::max(0.2, 0.9 * std::pow(tol / err, 0.2)) : 0.5;
        continue;
      }

      const double ds_metric = std::abs(nW - W);
      const Complex principal = std::sqrt(field_.map(w_chart).eval(nu));
      branch = std::abs(nbeta - principal) <= std::abs(nbeta + principal) ? 1 : -1;
      nbeta = static_cast<double>(branch) * principal;

      const Complex prev_u = u;
      u = nu;
      W = nW;
      beta = nbeta;
      s_metric += ds_metric;

      if (c.record) out.vertices.push_back({w_chart, u, branch, W, s_metric});

      const Complex v = velocity(dir, beta);
      if (observer) {
        TraceStep st;
        st.w_chart = w_chart;
        st.u0 = prev_u;
        st.u1 = u;
        st.z0 = w_chart ? Complex(1.0) / prev_u : prev_u;
        st.z1 = w_chart ? Complex(1.0) / u : u;
        st.velocity = v;
        st.W = W;
        st.branch = branch;
        st.s = s_metric;
        if (!observer(st)) {
          out.terminal.kind = TerminalKind::Kind::ObserverStop;
          break;
        }
      }

      // termination against critical sites
      {
        const detail::CriticalSite* site = nullptr;
        const double d = field_.nearest_site(w_chart, u, &site);
        if (site != nullptr && d < site->stop_radius) {
          const bool inward = std::real(std::conj(u - site->z) * v) < 0.0;
          if (site->finite_type) {
            out.terminal.kind = site->order > 0 ? TerminalKind::Kind::HitZero
                                                : TerminalKind::Kind::HitPole;
            out.terminal.target = site->id;
            out.terminal.final_distance = d;
            break;
          }
          const bool circular = site->order == -2 &&
                                site->regime == PoleRegime::Circular;
          if (!circular && inward) {
            out.terminal.kind = TerminalKind::Kind::HitPole;
            out.terminal.target = site->id;
            out.terminal.final_distance = d;
            break;
          }
        }
      }

      // closed trajectory: the step segment passes the seed on the same
      // sheet and heading, after having once left the seed neighborhood
      if (!left_seed && (w_chart != seed_w_chart ||
                         std::abs(u - seed_u) > 10.0 * c.delta_zero))
        left_seed = true;
      if (left_seed && w_chart == seed_w_chart &&
          std::abs(u - seed_u) < c.delta_zero && branch == seed_branch &&
          std::real(std::conj(v0) * v) > 0.0) {
        out.terminal.kind = TerminalKind::Kind::Closed;
        break;
      }

      if (s_metric >= c.length_cap) {
        out.terminal.kind = TerminalKind::Kind::LengthCapped;
        out.terminal.cap = c.length_cap;
        break;
      }

      // chart hysteresis
      if (!w_chart && std::abs(u) > 1.25 * c.r_switch) {
        switch_chart(&w_chart, &u, &beta, &branch);
        if (c.record) out.vertices.push_back({w_chart, u, branch, W, s_metric});
      } else if (w_chart && std::abs(u) > 1.0 / c.r_switch) {
        switch_chart(&w_chart, &u, &beta, &branch);
        if (c.record) out.vertices.push_back({w_chart, u, branch, W, s_metric});
      }

      h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2)));
      if (step + 1 == max_steps)
        throw StepCollapse("trace: step budget exhausted");
    }

    out.metric_length = s_metric;
    if (!c.record)
      out.vertices.push_back({w_chart, u, branch, W, s_metric});
    return out;
  }

 private:
  Complex velocity(double dir, Complex beta) const {
    return dir * field_.phase() * std::abs(beta) / beta;
  }

  void switch_chart(bool* w_chart, Complex* u, Complex* beta, int* branch) const {
    // w = 1/z carries sqrt(f) dz to sqrt(g) dw with sqrt(g) = -sqrt(f) z^2.
    const Complex uu = *u;
    const Complex nu = Complex(1.0) / uu;
    const Complex nbeta = -(*beta) * uu * uu;
    *w_chart = !*w_chart;
    *u = nu;
    const Complex principal = std::sqrt(field_.map(*w_chart).eval(nu));
    *branch = std::abs(nbeta - principal) <= std::abs(nbeta + principal) ? 1 : -1;
    *beta = static_cast<double>(*branch) * principal;
  }

  // One embedded Dormand-Prince step of the joint state (u, W). Returns
  // false when a stage lands on a critical value or the sqrt continuation
  // becomes ambiguous, which rejects the step.
  bool dp45_step(bool w_chart, Complex u, Complex W, Complex beta, double dir,
                 double h, Complex* nu, Complex* nW, Complex* nbeta,
                 double* err) const {
    static const double a[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static const double b5[7] = {35.0 / 384,      0.0,         500.0 / 1113,
                                 125.0 / 192,     -2187.0 / 6784, 11.0 / 84, 0.0};
    static const double b4[7] = {5179.0 / 57600,  0.0,           7571.0 / 16695,
                                 393.0 / 640,     -92097.0 / 339200,
                                 187.0 / 2100,    1.0 / 40};

    const RationalMap& map = field_.map(w_chart);
    Complex ku[7], kW[7];
    for (int i = 0; i < 7; ++i) {
      Complex ui = u;
      for (int j = 0; j < i; ++j) ui += h * a[i][j] * ku[j];
      const Complex fv = map.eval(ui);
      if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag()) ||
          std::abs(fv) == 0.0)
        return false;
      bool ambiguous = false;
      const Complex bi = detail::sqrt_continued(fv, beta, &ambiguous);
      if (ambiguous) return false;
      ku[i] = dir * field_.phase() * std::abs(bi) / bi;
      kW[i] = dir * field_.phase() * std::abs(bi);
    }
    Complex u5 = u, u4 = u, W5 = W, W4 = W;
    for (int i = 0; i < 7; ++i) {
      u5 += h * b5[i] * ku[i];
      u4 += h * b4[i] * ku[i];
      W5 += h * b5[i] * kW[i];
      W4 += h * b4[i] * kW[i];
    }
    bool ambiguous = false;
    const Complex bend = detail::sqrt_continued(map.eval(u5), beta, &ambiguous);
    if (ambiguous || std::abs(bend) == 0.0) return false;
    *nu = u5;
    *nW = W5;
    *nbeta = bend;
    *err = std::max(std::abs(u5 - u4), std::abs(W5 - W4));
    return true;
  }

  detail::FlowField field_;
};

inline TrajectorySample trace(const QuadraticDifferential& phi,
                              const SpherePoint& seed, int direction_sign,
                              double theta, const TraceControls& controls) {
  Tracer t(phi, theta, controls);
  Tracer::Start s;
  s.seed = seed;
  s.direction = direction_sign;
  return t.run(s);
}

inline TrajectorySample trace(const QuadraticDifferential& phi,
                              const SpherePoint& seed, int direction_sign = 1,
                              double theta = 0.0) {
  return trace(phi, seed, direction_sign, theta,
               TraceControls::defaults_for(phi));
}

struct PrimitiveResult {
  Complex W;
  int final_branch = 1;
};

namespace detail {

// Gauss-Kronrod 7-15 pair on one segment with sequential branch
// continuation through the nodes; splits until the error estimate and the
// branch step are both under control.
class SegmentQuadrature {
 public:
  SegmentQuadrature(const RationalMap& f) : f_(f) {}

  // integrates sqrt(f) dz over [a, b]; ref is the continued sqrt at a and
  // is updated to the continued sqrt at b.
  Complex integrate(Complex a, Complex b, Complex* ref, double tol, int depth) {
    static const double xk[15] = {
        -0.991455371120813, -0.949107912342759, -0.864864423359769,
        -0.741531185599394, -0.586087235467691, -0.405845151377397,
        -0.207784955007898, 0.0,
        0.207784955007898,  0.405845151377397,  0.586087235467691,
        0.741531185599394,  0.864864423359769,  0.949107912342759,
        0.991455371120813};
    static const double wk[15] = {
        0.022935322010529, 0.063092092629979, 0.104790010322250,
        0.140653259715525, 0.169004726639267, 0.190350578064785,
        0.204432940075298, 0.209482141084728,
        0.204432940075298, 0.190350578064785, 0.169004726639267,
        0.140653259715525, 0.104790010322250, 0.063092092629979,
        0.022935322010529};
    static const double wg[4] = {0.129484966168870, 0.279705391489277,
                                 0.381830050505119, 0.417959183673469};

    const Complex mid = 0.5 * (a + b);
    const Complex half = 0.5 * (b - a);

    Complex vals[15];
    Complex run = *ref;
    bool need_split = false;
    for (int i = 0; i < 15; ++i) {
      bool ambiguous = false;
      const Complex fv = f_.eval(mid + xk[i] * half);
      if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag())) {
        need_split = true;
        break;
      }
      run = sqrt_continued(fv, run, &ambiguous);
      if (ambiguous) {
        need_split = true;
        break;
      }
      vals[i] = run;
    }
    // endpoint continuity: the continued value at b seen from a directly
    if (!need_split) {
      bool ambiguous = false;
      sqrt_continued(f_.eval(b), vals[14], &ambiguous);
      if (ambiguous) need_split = true;
    }

    Complex ik(0.0), ig(0.0);
    if (!need_split) {
      for (int i = 0; i < 15; ++i) ik += wk[i] * vals[i];
      // Gauss nodes are the odd Kronrod indices 1,3,...,13
      ig = wg[0] * (vals[1] + vals[13]) + wg[1] * (vals[3] + vals[11]) +
           wg[2] * (vals[5] + vals[9]) + wg[3] * vals[7];
      ik *= half;
      ig *= half;
      if (std::abs(ik - ig) <= tol || depth >= 48) {
        bool ambiguous = false;
        *ref = sqrt_continued(f_.eval(b), vals[14], &ambiguous);
        return ik;
      }
    }
    if (depth >= 48) {
      // give up splitting; accept the Kronrod value
      bool ambiguous = false;
      *ref = sqrt_continued(f_.eval(b), *ref, &ambiguous);
      return ik;
    }
    const Complex left = integrate(a, mid, ref, 0.5 * tol, depth + 1);
    const Complex right = integrate(mid, b, ref, 0.5 * tol, depth + 1);
    return left + right;
  }

 private:
  const RationalMap& f_;
};

}  // namespace detail

// Integral of the chosen branch of sqrt(f) along a z-chart polyline.
// final_branch reports the sheet at the endpoint relative to the principal
// square root there.
inline PrimitiveResult primitive_along(const QuadraticDifferential& phi,
                                       const std::vector<Complex>& path,
                                       int initial_branch,
                                       const TraceControls& controls) {
  if (path.size() < 2) return {Complex(0.0), initial_branch};
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    for (const DivisorEntry& e : phi.divisor()) {
      if (e.point.is_infinity()) continue;
      if (detail::point_segment_distance(e.point.value(), path[i], path[i + 1]) <
          controls.delta_path)
        throw PathTooClose("primitive_along: path too close to a critical point");
    }
  }

  double total_len = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i)
    total_len += std::abs(path[i + 1] - path[i]);
  if (total_len == 0.0) return {Complex(0.0), initial_branch};

  detail::SegmentQuadrature quad(phi.f());
  auto run_pass = [&](double tol_total) {
    Complex ref = static_cast<double>(initial_branch) *
                  std::sqrt(phi.f().eval(path[0]));
    Complex acc(0.0);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      const double seg = std::abs(path[i + 1] - path[i]);
      if (seg == 0.0) continue;
      acc += quad.integrate(path[i], path[i + 1], &ref,
                            tol_total * seg / total_len, 0);
    }
    return std::make_pair(acc, ref);
  };

  auto [coarse, ref1] = run_pass(1e-9);
  auto [fine, ref] = run_pass(1e-12 * std::max(1.0, std::abs(coarse)));

  const Complex principal = std::sqrt(phi.f().eval(path.back()));
  const int fb = std::abs(ref - principal) <= std::abs(ref + principal) ? 1 : -1;
  return {fine, fb};
}

inline PrimitiveResult primitive_along(const QuadraticDifferential& phi,
                                       const std::vector<Complex>& path,
                                       int initial_branch = 1) {
  return primitive_along(phi, path, initial_branch,
                         TraceControls::defaults_for(phi));
}

}  // namespace qdiff

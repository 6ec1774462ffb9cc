#pragma once

#include <map>
#include <optional>
#include <vector>

#include "qdiff/flow.hpp"

namespace qdiff {

struct Separatrix {
  int zero_id = -1;
  int ray_index = 0;      // 0..2 at a simple zero, sorted by launch angle
  double launch_angle = 0.0;
  TrajectorySample sample;
  TerminalKind terminal;
  bool from_infinity = false;  // launch chart (zero at infinity)
};

struct SaddleEvent {
  double theta = 0.0;
  int zero_from = -1;
  int zero_to = -1;
  double miss_distance = 0.0;
};

struct ScanControls {
  int grid = 720;
  double epsilon_saddle = 0.0;   // 0: derive 1e-7 * r_switch
  double theta_resolution = 1e-12;
  double dedup_theta = 1e-6;
};

namespace detail {

struct LaunchSpec {
  SpherePoint seed;
  Complex sqrt_value;  // continued sqrt at the seed, in the seed's chart
  double angle = 0.0;
  bool w_chart = false;
};

// Launch point and sheet for ray k of the zero, at phase theta. The sheet is
// chosen so the velocity leaves the zero along the ray.
inline LaunchSpec launch_for(const QuadraticDifferential& phi,
                             const DivisorEntry& zero, double angle,
                             double theta, double delta_launch) {
  LaunchSpec out;
  out.angle = angle;
  out.w_chart = zero.point.is_infinity();
  const Complex e = std::exp(Complex(0.0, angle));
  const Complex phase = std::exp(Complex(0.0, -kPi * theta));
  if (!out.w_chart) {
    const Complex p = zero.point.value() + delta_launch * e;
    out.seed = SpherePoint::finite(p);
    Complex beta = std::sqrt(phi.f().eval(p));
    if (std::real(phase * beta * e) < 0.0) beta = -beta;
    out.sqrt_value = beta;
  } else {
    const Complex w = delta_launch * e;
    out.seed = SpherePoint::finite(Complex(1.0) / w);
    Complex beta = std::sqrt(phi.chart_w().eval(w));
    if (std::real(phase * beta * e) < 0.0) beta = -beta;
    out.sqrt_value = beta;
  }
  return out;
}

// Launch angle of ray k at phase theta by the local model formula, without
// sorting, so the ray keeps its identity as theta varies.
inline double ray_angle(const DivisorEntry& zero, int k, double theta) {
  return (2.0 * kPi * theta - std::arg(zero.leading) + 2.0 * kPi * k) /
         (zero.order + 2);
}

}  // namespace detail

// The 3 Z critical trajectories at phase theta, launched a short hop along
// each critical direction of each (simple) zero.
inline std::vector<Separatrix> separatrices(const QuadraticDifferential& phi,
                                            double theta,
                                            const TraceControls& controls) {
  std::vector<Separatrix> out;
  Tracer tracer(phi, theta, controls);
  const double delta_launch = 10.0 * controls.delta_zero;
  for (size_t zi = 0; zi < phi.zeros().size(); ++zi) {
    const DivisorEntry& zero = phi.zeros()[zi];
    const int rays = zero.order + 2;
    std::vector<std::pair<double, int>> angles;
    for (int k = 0; k < rays; ++k) {
      double a = std::fmod(detail::ray_angle(zero, k, theta), 2.0 * kPi);
      if (a < 0.0) a += 2.0 * kPi;
      angles.push_back({a, k});
    }
    std::sort(angles.begin(), angles.end());
    for (int idx = 0; idx < rays; ++idx) {
      const auto spec =
          detail::launch_for(phi, zero, angles[idx].first, theta, delta_launch);
      Tracer::Start start;
      start.seed = spec.seed;
      start.direction = 1;
      start.sqrt_value = spec.sqrt_value;
      Separatrix s;
      s.zero_id = static_cast<int>(zi);
      s.ray_index = idx;
      s.launch_angle = spec.angle;
      s.from_infinity = spec.w_chart;
      s.sample = tracer.run(start);
      s.terminal = s.sample.terminal;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::vector<Separatrix> separatrices(const QuadraticDifferential& phi,
                                            double theta = 0.0) {
  return separatrices(phi, theta, TraceControls::defaults_for(phi));
}

namespace detail {

struct Approach {
  double dist = 1e300;
  Complex at;        // z position of closest approach
  Complex velocity;  // du/ds there
};

// Trace one ray and record the closest approach to every zero. The launch
// zero only counts after the trajectory has left its neighborhood.
inline std::vector<Approach> ray_approaches(const QuadraticDifferential& phi,
                                            const Tracer& tracer,
                                            const DivisorEntry& zero,
                                            int k, double theta,
                                            const TraceControls& controls) {
  const double delta_launch = 10.0 * controls.delta_zero;
  const auto spec = launch_for(phi, zero, ray_angle(zero, k, theta), theta,
                               delta_launch);
  std::vector<Approach> best(phi.zeros().size());
  const Complex home = zero.point.is_infinity() ? Complex(0.0)
                                                : zero.point.value();
  bool departed = false;
  auto observer = [&](const TraceStep& st) {
    if (!st.w_chart) {
      if (!departed && std::abs(st.z1 - home) > 5.0 * delta_launch)
        departed = true;
      for (size_t zi = 0; zi < phi.zeros().size(); ++zi) {
        const Complex target = phi.zeros()[zi].point.value();
        if (!departed && std::abs(target - home) < controls.delta_zero)
          continue;  // still holding onto the launch zero
        const double d = point_segment_distance(target, st.z0, st.z1);
        if (d < best[zi].dist) {
          best[zi].dist = d;
          best[zi].at = st.z1;
          best[zi].velocity = st.velocity;
        }
      }
    }
    return true;
  };
  Tracer::Start start;
  start.seed = spec.seed;
  start.direction = 1;
  start.sqrt_value = spec.sqrt_value;
  TrajectorySample sample = tracer.run(start, observer);
  if (sample.terminal.hit_zero() && sample.terminal.target >= 0) {
    Approach& a = best[sample.terminal.target];
    if (sample.terminal.final_distance < a.dist) {
      a.dist = sample.terminal.final_distance;
      const TraceVertex& v = sample.vertices.back();
      a.at = TrajectorySample::z_of(v);
    }
  }
  return best;
}

// Side of the target zero relative to the passing trajectory; flips exactly
// at the saddle phase.
inline double approach_side(const Approach& a, Complex target) {
  return std::imag(std::conj(a.velocity) * (target - a.at)) >= 0.0 ? 1.0 : -1.0;
}

}  // namespace detail

// Scan phases over a uniform grid for saddle connections and refine each
// candidate by bisection on the side the ray passes its target zero.
inline std::vector<SaddleEvent> scan_saddle_phases(
    const QuadraticDifferential& phi, const ScanControls& scan,
    const TraceControls& base) {
  TraceControls controls = base;
  const double eps = scan.epsilon_saddle > 0.0 ? scan.epsilon_saddle
                                               : 1e-7 * controls.r_switch;
  controls.delta_zero = std::min(controls.delta_zero, 0.4 * eps);
  controls.record = false;

  const int G = scan.grid;
  const size_t Z = phi.zeros().size();
  std::vector<SaddleEvent> events;

  for (size_t zi = 0; zi < Z; ++zi) {
    const DivisorEntry& zero = phi.zeros()[zi];
    const int rays = zero.order + 2;
    // distance and side curves over the phase grid: [ray][target][gi].
    // Rays relabel across theta -> theta + 1 (ray k at theta+1 is ray k+1
    // at theta), so grid wraparound moves to the adjacent ray's curve.
    std::vector<std::vector<std::vector<double>>> dist(
        rays, std::vector<std::vector<double>>(Z, std::vector<double>(G, 1e300)));
    auto side = dist;
    for (int gi = 0; gi < G; ++gi) {
      const double theta = static_cast<double>(gi) / G;
      Tracer tracer(phi, theta, controls);
      for (int k = 0; k < rays; ++k) {
        auto best = detail::ray_approaches(phi, tracer, zero, k, theta, controls);
        for (size_t t = 0; t < Z; ++t) {
          dist[k][t][gi] = best[t].dist;
          side[k][t][gi] =
              detail::approach_side(best[t], phi.zeros()[t].point.value());
        }
      }
    }
    auto curve = [&](int k, size_t t, int gi) {
      if (gi < 0) return std::make_pair(dist[(k + rays - 1) % rays][t][gi + G],
                                        side[(k + rays - 1) % rays][t][gi + G]);
      if (gi >= G) return std::make_pair(dist[(k + 1) % rays][t][gi - G],
                                         side[(k + 1) % rays][t][gi - G]);
      return std::make_pair(dist[k][t][gi], side[k][t][gi]);
    };
    // Candidates: a grid point already inside the hit radius, or a side
    // flip between consecutive grid points with a plausible approach. The
    // final miss check rejects spurious flips (side is noise for rays that
    // pass far away or jump basins).
    const double gate = 0.5 * controls.r_switch;
    for (int k = 0; k < rays; ++k) {
      for (size_t t = 0; t < Z; ++t) {
        for (int gi = 0; gi < G; ++gi) {
          if (dist[k][t][gi] <= eps) {
            SaddleEvent ev;
            ev.theta = static_cast<double>(gi) / G;
            ev.zero_from = static_cast<int>(zi);
            ev.zero_to = static_cast<int>(t);
            ev.miss_distance = dist[k][t][gi];
            events.push_back(ev);
          }
          const auto c0 = curve(k, t, gi);
          const auto c1 = curve(k, t, gi + 1);
          if (c0.second == c1.second) continue;
          if (std::min(c0.first, c1.first) > gate) continue;
          // bisect on the side sign; theta stays unwrapped so ray k keeps
          // its identity across the seam
          double lo = static_cast<double>(gi) / G;
          double hi = static_cast<double>(gi + 1) / G;
          const double slo = c0.second;
          auto eval = [&](double th) {
            Tracer tracer(phi, th, controls);
            return detail::ray_approaches(phi, tracer, zero, k, th, controls)[t];
          };
          while (hi - lo > scan.theta_resolution) {
            const double mid = 0.5 * (lo + hi);
            auto a = eval(mid);
            const double s =
                detail::approach_side(a, phi.zeros()[t].point.value());
            if (s == slo)
              lo = mid;
            else
              hi = mid;
          }
          const double theta_star = 0.5 * (lo + hi);
          auto a = eval(theta_star);
          if (a.dist < eps) {
            SaddleEvent ev;
            ev.theta = theta_star - std::floor(theta_star);
            if (std::abs(ev.theta - 1.0) < scan.theta_resolution) ev.theta = 0.0;
            ev.zero_from = static_cast<int>(zi);
            ev.zero_to = static_cast<int>(t);
            ev.miss_distance = a.dist;
            events.push_back(ev);
          }
        }
      }
    }
  }

  // dedup by (pair, theta mod 1)
  std::vector<SaddleEvent> unique;
  for (const SaddleEvent& e : events) {
    bool dup = false;
    for (SaddleEvent& u : unique) {
      double dt = std::abs(e.theta - u.theta);
      dt = std::min(dt, 1.0 - dt);
      if (u.zero_from == e.zero_from && u.zero_to == e.zero_to &&
          dt < scan.dedup_theta) {
        if (e.miss_distance < u.miss_distance) u = e;
        dup = true;
      }
    }
    if (!dup) unique.push_back(e);
  }
  std::sort(unique.begin(), unique.end(),
            [](const SaddleEvent& a, const SaddleEvent& b) {
              if (a.theta != b.theta) return a.theta < b.theta;
              if (a.zero_from != b.zero_from) return a.zero_from < b.zero_from;
              return a.zero_to < b.zero_to;
            });
  return unique;
}

inline std::vector<SaddleEvent> scan_saddle_phases(
    const QuadraticDifferential& phi, int grid = 720) {
  ScanControls sc;
  sc.grid = grid;
  return scan_saddle_phases(phi, sc, TraceControls::defaults_for(phi));
}

}  // namespace qdiff

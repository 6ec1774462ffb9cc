#pragma once
#include <cstdlib>
#include <cstdio>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdiff/separatrix.hpp"

namespace qdiff {

// One of the three angular sectors at a simple zero, bounded by cyclically
// adjacent separatrix rays. The canonical sheet maps the sector into the
// upper half-plane of the local primitive.
struct Sector {
  int zero_id = -1;
  int index = 0;             // 0..2, ccw by launch angle
  int right_ray = -1;        // global separatrix id at the ccw start
  int left_ray = -1;         // global separatrix id at the ccw end
  double bisector_angle = 0.0;
  Complex witness_seed;      // in the zero's chart (w when the zero is at infinity)
  Complex canonical_sqrt;    // continued sqrt at the seed, upper-half-plane sheet
};

// A horizontal strip: a bottom and a top sector (possibly at the same zero,
// the folded case), four boundary separatrix sides, and the poles its
// generic trajectories run into.
struct Strip {
  int id = -1;
  int bottom_sector = -1;    // global sector index = 3*zero + index
  int top_sector = -1;
  int pole_left = -1;
  int pole_right = -1;
  TrajectorySample witness_fwd;   // generic witness, increasing Re(W)
  TrajectorySample witness_bwd;   // same leaf, decreasing Re(W)
  std::vector<Complex> crossing_path;  // bottom zero -> top zero, z chart
  std::vector<Complex> crossing_path_alt;  // top zero -> bottom zero
  // boundary sides in order BL, BR, TL, TR as (separatrix id, side),
  // side +1 = left of the oriented ray, -1 = right
  std::array<std::pair<int, int>, 4> sides{};
  double height = 0.0;       // vertical rise measured by the pairing shoot
  bool folded = false;

  std::vector<Complex> witness_polyline() const {
    std::vector<Complex> out;
    for (auto it = witness_bwd.vertices.rbegin(); it != witness_bwd.vertices.rend(); ++it)
      out.push_back(TrajectorySample::z_of(*it));
    for (size_t i = 1; i < witness_fwd.vertices.size(); ++i)
      out.push_back(TrajectorySample::z_of(witness_fwd.vertices[i]));
    return out;
  }
};

struct StripDecomposition {
  QuadraticDifferential phi;
  TraceControls controls;
  std::vector<Separatrix> separatrices;  // 3 per zero, global id = 3*zero + ray
  std::vector<Sector> sectors;           // global index = 3*zero + index
  std::vector<Strip> strips;             // sorted by bottom sector
  std::vector<std::string> warnings;

  int strip_of_sector(int sector) const {
    for (const Strip& s : strips)
      if (s.bottom_sector == sector || s.top_sector == sector) return s.id;
    return -1;
  }
};

struct Triangulation {
  struct Arc {
    int id = -1;
    int strip = -1;
    int from_pole = -1;
    int to_pole = -1;
  };
  struct FaceSide {
    int arc = -1;
    bool at_bottom = true;  // which end of the strip faces this triangle
  };
  struct Face {
    int zero = -1;
    std::array<FaceSide, 3> sides;
  };
  std::vector<int> vertices;  // pole ids
  std::vector<Arc> arcs;
  std::vector<Face> faces;

  int euler_characteristic() const {
    return static_cast<int>(vertices.size()) - static_cast<int>(arcs.size()) +
           static_cast<int>(faces.size());
  }
};

namespace detail {

// Curve store for crossing queries, keeping one set of segments per chart.
// Curves and query steps are compared in the chart they were traced in;
// segments inside the hysteresis band are mirrored into the other chart so
// traces that switched at different radii still see each other.
class SegmentIndex {
 public:
  explicit SegmentIndex(double r_switch) : r_switch_(r_switch) {}

  void add_sample(int id, const TrajectorySample& sample,
                  std::optional<std::pair<bool, Complex>> prepend) {
    std::vector<std::pair<bool, Complex>> pts;
    if (prepend) pts.push_back(*prepend);
    for (const TraceVertex& v : sample.vertices) pts.push_back({v.w_chart, v.u});
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      const auto& [wa, a] = pts[i];
      const auto& [wb, b] = pts[i + 1];
      if (wa != wb) continue;  // chart switch duplicates the point
      if (a == b) continue;
      push(wa, id, a, b);
      // mirror band segments into the other chart
      if (!wa && std::max(std::abs(a), std::abs(b)) >= 0.7 * r_switch_ &&
          std::abs(a) > 0.0 && std::abs(b) > 0.0)
        push(true, id, Complex(1.0) / a, Complex(1.0) / b);
      if (wa && std::max(std::abs(a), std::abs(b)) >= 0.7 / r_switch_ &&
          std::abs(a) > 0.0 && std::abs(b) > 0.0)
        push(false, id, Complex(1.0) / a, Complex(1.0) / b);
    }
    finish(false);
    finish(true);
  }

  struct Hit {
    int polyline = -1;
    Complex at;       // in the query chart
    Complex tangent;  // crossed segment direction, query chart
    double t = 2.0;   // parameter along the query segment
  };

  // first transversal crossing of [a, b] in the given chart
  std::optional<Hit> first_crossing(bool w_chart, Complex a, Complex b) const {
    std::optional<Hit> best;
    const auto& chunks = w_chart ? chunks_w_ : chunks_z_;
    const double lox = std::min(a.real(), b.real()), hix = std::max(a.real(), b.real());
    const double loy = std::min(a.imag(), b.imag()), hiy = std::max(a.imag(), b.imag());
    for (const Chunk& c : chunks) {
      if (c.lo.real() > hix || c.hi.real() < lox || c.lo.imag() > hiy ||
          c.hi.imag() < loy)
        continue;
      for (const auto& [id, p, q] : c.segs) {
        const double d1 = cross(b - a, p - a);
        const double d2 = cross(b - a, q - a);
        if ((d1 > 0.0) == (d2 > 0.0)) continue;
        const double d3 = cross(q - p, a - p);
        const double d4 = cross(q - p, b - p);
        if ((d3 > 0.0) == (d4 > 0.0)) continue;
        const double t = d3 / (d3 - d4);
        if (!best || t < best->t) {
          Hit h;
          h.polyline = id;
          h.at = a + t * (b - a);
          h.tangent = q - p;
          h.t = t;
          best = h;
        }
      }
    }
    return best;
  }

 private:
  struct Seg {
    int id;
    Complex p, q;
  };
  struct Chunk {
    Complex lo, hi;
    std::vector<std::tuple<int, Complex, Complex>> segs;
  };
  static double cross(Complex u, Complex v) {
    return u.real() * v.imag() - u.imag() * v.real();
  }
  void push(bool w_chart, int id, Complex a, Complex b) {
    (w_chart ? pending_w_ : pending_z_).push_back({id, a, b});
  }
  void finish(bool w_chart) {
    auto& pending = w_chart ? pending_w_ : pending_z_;
    auto& chunks = w_chart ? chunks_w_ : chunks_z_;
    const size_t chunk = 32;
    for (size_t i = 0; i < pending.size(); i += chunk) {
      Chunk c;
      c.lo = Complex(1e300, 1e300);
      c.hi = Complex(-1e300, -1e300);
      const size_t end = std::min(pending.size(), i + chunk);
      for (size_t j = i; j < end; ++j) {
        for (Complex p : {pending[j].p, pending[j].q}) {
          c.lo = Complex(std::min(c.lo.real(), p.real()),
                         std::min(c.lo.imag(), p.imag()));
          c.hi = Complex(std::max(c.hi.real(), p.real()),
                         std::max(c.hi.imag(), p.imag()));
        }
        c.segs.push_back({pending[j].id, pending[j].p, pending[j].q});
      }
      chunks.push_back(std::move(c));
    }
    pending.clear();
  }

  double r_switch_;
  std::vector<Seg> pending_z_, pending_w_;
  std::vector<Chunk> chunks_z_, chunks_w_;
};

inline std::vector<Complex> separatrix_z_polyline(const QuadraticDifferential& phi,
                                                  const Separatrix& s) {
  std::vector<Complex> pts;
  const DivisorEntry& zero = phi.zeros()[s.zero_id];
  if (!zero.point.is_infinity()) pts.push_back(zero.point.value());
  for (const TraceVertex& v : s.sample.vertices)
    pts.push_back(TrajectorySample::z_of(v));
  return pts;
}

}  // namespace detail

// Horizontal-strip decomposition of a GMN differential with only double
// poles and no horizontal saddle trajectories. Sectors are paired into
// strips by shooting the transverse (phase theta + 1/2) flow upward from
// each sector and identifying the first separatrix side it crosses.
inline StripDecomposition decompose(const QuadraticDifferential& phi,
                                    const TraceControls& base) {
  StripDecomposition dec{phi, base, {}, {}, {}, {}};
  const double theta = 0.0;

  GmnReport gmn = validate_gmn(phi);
  if (!gmn.is_gmn || !gmn.has_only_double_poles)
    throw InvalidConfiguration(
        "decompose: requires a GMN differential with only double poles");
  for (int pid : gmn.purely_imaginary_residue_poles)
    dec.warnings.push_back("pole " + std::to_string(pid) +
                           " has purely imaginary residue (ring domain)");

  const double eps_saddle = 1e-7 * base.r_switch;
  TraceControls sep_controls = base;
  sep_controls.delta_zero = std::min(base.delta_zero, 0.4 * eps_saddle);
  // run the rays deeper into the poles than the transverse shoots go, so
  // crossings near a basin still find polyline segments to hit
  sep_controls.delta_pole = 0.5 * base.delta_pole;

  // Separatrix preflight: trace all rays, watch for saddles and closeness.
  {
    Tracer tracer(dec.phi, theta, sep_controls);
    const double delta_launch = 10.0 * base.delta_zero;
    for (size_t zi = 0; zi < dec.phi.zeros().size(); ++zi) {
      const DivisorEntry& zero = dec.phi.zeros()[zi];
      if (zero.order != 1)
        throw InvalidConfiguration("decompose: non-simple zero");
      std::vector<std::pair<double, int>> angles;
      for (int k = 0; k < 3; ++k) {
        double a = std::fmod(detail::ray_angle(zero, k, theta), 2.0 * kPi);
        if (a < 0.0) a += 2.0 * kPi;
        angles.push_back({a, k});
      }
      std::sort(angles.begin(), angles.end());
      for (int idx = 0; idx < 3; ++idx) {
        const auto spec = detail::launch_for(dec.phi, zero, angles[idx].first,
                                             theta, delta_launch);
        const Complex home =
            zero.point.is_infinity() ? Complex(0.0) : zero.point.value();
        std::vector<double> min_dist(dec.phi.zeros().size(), 1e300);
        bool departed = false;
        auto observer = [&](const TraceStep& st) {
          if (st.w_chart) return true;
          if (!departed && std::abs(st.z1 - home) > 5.0 * delta_launch)
            departed = true;
          for (size_t t = 0; t < dec.phi.zeros().size(); ++t) {
            if (t == zi && !departed) continue;
            const double d = detail::point_segment_distance(
                dec.phi.zeros()[t].point.value(), st.z0, st.z1);
            min_dist[t] = std::min(min_dist[t], d);
          }
          return true;
        };
        Tracer::Start start;
        start.seed = spec.seed;
        start.direction = 1;
        start.sqrt_value = spec.sqrt_value;
        Separatrix s;
        s.zero_id = static_cast<int>(zi);
        s.ray_index = idx;
        s.launch_angle = spec.angle;
        s.from_infinity = spec.w_chart;
        s.sample = tracer.run(start, observer);
        s.terminal = s.sample.terminal;
        if (s.terminal.hit_zero())
          throw SaddlePresent("decompose: saddle trajectory from zero " +
                              std::to_string(zi) + " to zero " +
                              std::to_string(s.terminal.target));
        if (s.terminal.kind == TerminalKind::Kind::Closed)
          throw RingDomainSuspected("decompose: closed separatrix continuation");
        if (!s.terminal.hit_pole())
          throw PairingFailure("decompose: separatrix did not reach a pole");
        for (size_t t = 0; t < dec.phi.zeros().size(); ++t)
          if (min_dist[t] >= eps_saddle && min_dist[t] < 100.0 * eps_saddle)
            dec.warnings.push_back("near-saddle: ray " + std::to_string(idx) +
                                   " of zero " + std::to_string(zi) +
                                   " passes zero " + std::to_string(t) +
                                   " at distance " + std::to_string(min_dist[t]));
        dec.separatrices.push_back(std::move(s));
      }
    }
  }

  // Sectors with canonical sheets and witness seeds.
  const double delta_launch = 10.0 * base.delta_zero;
  const Complex phase = std::exp(Complex(0.0, -kPi * theta));
  for (size_t zi = 0; zi < dec.phi.zeros().size(); ++zi) {
    const DivisorEntry& zero = dec.phi.zeros()[zi];
    const bool at_inf = zero.point.is_infinity();
    for (int i = 0; i < 3; ++i) {
      const Separatrix& right = dec.separatrices[3 * zi + i];
      const Separatrix& left = dec.separatrices[3 * zi + (i + 1) % 3];
      Sector sec;
      sec.zero_id = static_cast<int>(zi);
      sec.index = i;
      sec.right_ray = static_cast<int>(3 * zi + i);
      sec.left_ray = static_cast<int>(3 * zi + (i + 1) % 3);
      double gap = left.launch_angle - right.launch_angle;
      if (gap <= 0.0) gap += 2.0 * kPi;
      sec.bisector_angle = right.launch_angle + 0.5 * gap;
      const Complex e = std::exp(Complex(0.0, sec.bisector_angle));
      const Complex center = at_inf ? Complex(0.0) : zero.point.value();
      sec.witness_seed = center + 5.0 * delta_launch * e;
      const RationalMap& map = at_inf ? dec.phi.chart_w() : dec.phi.f();
      Complex beta = std::sqrt(map.eval(sec.witness_seed));
      if (std::imag(phase * beta * e) < 0.0) beta = -beta;
      sec.canonical_sqrt = beta;
      dec.sectors.push_back(sec);
    }
  }

  // Crossing index over all separatrix polylines, each closed up to its
  // zero so nothing slips through the launch gap.
  detail::SegmentIndex index(base.r_switch);
  for (size_t si = 0; si < dec.separatrices.size(); ++si) {
    const Separatrix& s = dec.separatrices[si];
    const DivisorEntry& z = dec.phi.zeros()[s.zero_id];
    std::optional<std::pair<bool, Complex>> prepend;
    if (z.point.is_infinity())
      prepend = {true, Complex(0.0)};
    else
      prepend = {false, z.point.value()};
    index.add_sample(static_cast<int>(si), s.sample, prepend);
  }

  // Per-sector witness leaves (the strip's generic trajectory seen from
  // that sector), traced on the canonical sheet.
  std::vector<TrajectorySample> wit_fwd(dec.sectors.size());
  std::vector<TrajectorySample> wit_bwd(dec.sectors.size());
  {
    Tracer tracer(dec.phi, theta, base);
    for (size_t si = 0; si < dec.sectors.size(); ++si) {
      const Sector& sec = dec.sectors[si];
      const bool at_inf = dec.phi.zeros()[sec.zero_id].point.is_infinity();
      Tracer::Start start;
      start.seed = at_inf
                       ? SpherePoint::finite(Complex(1.0) / sec.witness_seed)
                       : SpherePoint::finite(sec.witness_seed);
      start.sqrt_value = sec.canonical_sqrt;
      start.direction = 1;
      wit_fwd[si] = tracer.run(start);
      start.direction = -1;
      wit_bwd[si] = tracer.run(start);
      if (wit_fwd[si].terminal.kind == TerminalKind::Kind::Closed ||
          wit_bwd[si].terminal.kind == TerminalKind::Kind::Closed)
        throw RingDomainSuspected("decompose: closed generic trajectory");
      if (!wit_fwd[si].terminal.hit_pole() || !wit_bwd[si].terminal.hit_pole())
        throw PairingFailure("decompose: witness trajectory did not reach poles");
    }
  }

  // One upward transverse shoot: from a point on the witness leaf, climb
  // until a separatrix side is crossed. The crossing can be lost inside a
  // pole basin (the polylines stop there), so callers try several launch
  // points along the leaf.
  struct ShootResult {
    int partner_sector = -1;
    int crossed_ray = -1;
    int crossed_side = 0;
    Complex crossing_point;
    double rise = 0.0;
    std::vector<Complex> path;  // z-chart polyline, launch point first
  };
  auto vertical_shoot = [&](Complex z_pos, Complex sqrt_val,
                            Complex home_z) -> std::optional<ShootResult> {
    ShootResult res;
    Tracer tracer(dec.phi, theta + 0.5, base);
    Tracer::Start start;
    start.seed = SpherePoint::finite(z_pos);
    start.direction = 1;
    start.sqrt_value = sqrt_val;
    start.initial_step = 1e-5 * base.r_switch;
    std::optional<detail::SegmentIndex::Hit> hit;
    bool abandoned = false;
    double rise = 0.0;
    std::vector<Complex> path{z_pos};
    const Complex rot = std::exp(Complex(0.0, -kPi * theta));
    auto observer = [&](const TraceStep& st) {
      rise = (rot * st.W).imag();
      path.push_back(st.z1);
      // near a pole both the climb and the boundary rays wind together and
      // chord crossings become unreliable; give up and relaunch elsewhere
      for (const DivisorEntry& p : dec.phi.poles()) {
        if (p.point.is_infinity()) {
          if (st.w_chart &&
              std::abs(st.u1) < 2.0 * std::min(base.delta_pole, 0.3 / base.r_switch)) {
            abandoned = true;
            return false;
          }
        } else if (!st.w_chart &&
                   std::abs(st.z1 - p.point.value()) < 2.0 * base.delta_pole) {
          abandoned = true;
          return false;
        }
      }
      const Complex qa = st.w_chart ? st.u0 : st.z0;
      const Complex qb = st.w_chart ? st.u1 : st.z1;
      auto h = index.first_crossing(st.w_chart, qa, qb);
      if (h) {
        const Complex at_z = st.w_chart ? Complex(1.0) / h->at : h->at;
        // a chord can cut the launch fan right at a zero, or graze the
        // boundary the launch leaf hugs; the transverse leaf itself never
        // re-crosses its own level-0 rays
        if (std::abs(at_z - home_z) < 50.0 * base.delta_zero) return true;
        if (std::abs(at_z - z_pos) < 50.0 * base.delta_zero) return true;
        hit = h;
        res.crossing_point = at_z;
        const double c = std::imag(std::conj(h->tangent) * (qb - qa));
        res.crossed_side = c > 0.0 ? -1 : +1;  // side facing the strip
        return false;
      }
      return true;
    };
    TrajectorySample sample = tracer.run(start, observer);
    if (abandoned) return std::nullopt;
    res.rise = rise;
    res.path = std::move(path);
    if (hit) {
      res.crossed_ray = hit->polyline;
      const Separatrix& sep = dec.separatrices[res.crossed_ray];
      const int rho = sep.ray_index;
      const int sector_index =
          res.crossed_side > 0 ? rho : (rho + 2) % 3;  // +1: ray is its right ray
      res.partner_sector = 3 * sep.zero_id + sector_index;
      res.path.back() = res.crossing_point;
      return res;
    }
    if (sample.terminal.hit_zero()) {
      // ran straight into the top zero: classify by the approach angle
      const int zb = sample.terminal.target;
      const Complex center = dec.phi.zeros()[zb].point.value();
      const Complex at = TrajectorySample::z_of(sample.vertices.back());
      double a = std::arg(at - center);
      if (a < 0.0) a += 2.0 * kPi;
      for (int i = 0; i < 3; ++i) {
        const Sector& sec = dec.sectors[3 * zb + i];
        const double r = dec.separatrices[sec.right_ray].launch_angle;
        double span = dec.separatrices[sec.left_ray].launch_angle - r;
        if (span <= 0.0) span += 2.0 * kPi;
        double off = a - r;
        if (off < 0.0) off += 2.0 * kPi;
        if (off <= span) {
          res.partner_sector = 3 * zb + i;
          return res;  // crossed_ray stays -1: the climb ends at the zero
        }
      }
    }
    if (sample.terminal.kind == TerminalKind::Kind::Closed)
      throw RingDomainSuspected("decompose: closed transverse trajectory");
    return std::nullopt;
  };

  // Launch candidates along a witness leaf: the seed, then vertices spread
  // along both directions, kept clear of pole basins and the far chart.
  auto launch_candidates = [&](size_t si) {
    std::vector<std::pair<Complex, Complex>> out;  // (z position, sqrt there)
    const Sector& sec = dec.sectors[si];
    const bool at_inf = dec.phi.zeros()[sec.zero_id].point.is_infinity();
    if (!at_inf) out.push_back({sec.witness_seed, sec.canonical_sqrt});
    auto add_from = [&](const TrajectorySample& s) {
      const size_t n = s.vertices.size();
      for (int frac = 1; frac <= 8; ++frac) {
        const size_t i = n * frac / 9;
        if (i >= n) continue;
        const TraceVertex& v = s.vertices[i];
        if (v.w_chart) continue;
        if (std::abs(v.u) > base.r_switch) continue;
        bool clear = true;
        for (const DivisorEntry& p : dec.phi.poles()) {
          if (p.point.is_infinity()) continue;
          if (std::abs(v.u - p.point.value()) < 3.0 * base.delta_pole)
            clear = false;
        }
        if (!clear) continue;
        const Complex principal = std::sqrt(dec.phi.f().eval(v.u));
        out.push_back({v.u, static_cast<double>(v.branch) * principal});
      }
    };
    add_from(wit_fwd[si]);
    add_from(wit_bwd[si]);
    return out;
  };

  // Pair all sectors.
  std::vector<ShootResult> shot(dec.sectors.size());
  for (size_t si = 0; si < dec.sectors.size(); ++si) {
    const Sector& sec = dec.sectors[si];
    const DivisorEntry& zero = dec.phi.zeros()[sec.zero_id];
    const Complex home_z = zero.point.is_infinity() ? Complex(1e18)
                                                    : zero.point.value();
    bool paired = false;
    for (const auto& [pos, sq] : launch_candidates(si)) {
      auto r = vertical_shoot(pos, sq, home_z);
      if (std::getenv("QDIFF_DEBUG_PAIRING") != nullptr)
        std::fprintf(stderr,
                     "  sector %zu launch (%.4f,%.4f) sq=(%.4f,%.4f) -> %s%d\n",
                     si, pos.real(), pos.imag(), sq.real(), sq.imag(),
                     r ? "partner " : "missed ", r ? r->partner_sector : -1);
      if (r && r->partner_sector >= 0) {
        shot[si] = *r;
        paired = true;
        break;
      }
    }
    if (!paired)
      throw PairingFailure("decompose: transverse flow missed the strip boundary");
  }
  if (std::getenv("QDIFF_DEBUG_PAIRING") != nullptr) {
    for (size_t si = 0; si < dec.sectors.size(); ++si)
      std::fprintf(stderr,
                   "sector %zu (zero %d idx %d bis %.3f) -> partner %d via ray %d "
                   "side %+d at (%.3f,%.3f) rise %.4f\n",
                   si, dec.sectors[si].zero_id, dec.sectors[si].index,
                   dec.sectors[si].bisector_angle, shot[si].partner_sector,
                   shot[si].crossed_ray, shot[si].crossed_side,
                   shot[si].crossing_point.real(), shot[si].crossing_point.imag(),
                   shot[si].rise);
  }
  for (size_t si = 0; si < dec.sectors.size(); ++si) {
    const int p = shot[si].partner_sector;
    if (p == static_cast<int>(si) || shot[p].partner_sector != static_cast<int>(si))
      throw PairingFailure("decompose: sector pairing is not an involution");
  }

  // Build strips: canonical bottom is the smaller sector key.
  std::vector<char> used(dec.sectors.size(), 0);
  for (size_t si = 0; si < dec.sectors.size(); ++si) {
    if (used[si]) continue;
    const int ti = shot[si].partner_sector;
    used[si] = used[ti] = 1;
    Strip strip;
    strip.bottom_sector = static_cast<int>(si);
    strip.top_sector = ti;
    strip.folded = dec.sectors[si].zero_id == dec.sectors[ti].zero_id;
    strip.height = shot[si].rise;
    const Sector& bottom = dec.sectors[si];
    const Sector& top = dec.sectors[ti];
    strip.sides[0] = {bottom.left_ray, -1};  // BL
    strip.sides[1] = {bottom.right_ray, +1}; // BR
    strip.sides[2] = {top.right_ray, +1};    // TL
    strip.sides[3] = {top.left_ray, -1};     // TR
    strip.witness_fwd = wit_fwd[si];
    strip.witness_bwd = wit_bwd[si];
    strip.pole_right = wit_fwd[si].terminal.target;
    strip.pole_left = wit_bwd[si].terminal.target;
    dec.strips.push_back(std::move(strip));
  }
  std::sort(dec.strips.begin(), dec.strips.end(),
            [](const Strip& a, const Strip& b) {
              return a.bottom_sector < b.bottom_sector;
            });
  for (size_t i = 0; i < dec.strips.size(); ++i)
    dec.strips[i].id = static_cast<int>(i);

  const int expected = hat_rank(0, phi.polar_type());
  if (static_cast<int>(dec.strips.size()) != expected)
    throw PairingFailure("decompose: strip count " +
                         std::to_string(dec.strips.size()) +
                         " does not match the rank " + std::to_string(expected));

  // every separatrix side belongs to exactly one strip
  {
    std::map<std::pair<int, int>, int> claims;
    for (const Strip& s : dec.strips)
      for (const auto& side : s.sides) claims[side]++;
    if (claims.size() != 4 * dec.strips.size())
      throw PairingFailure("decompose: separatrix side claimed twice");
    for (const auto& [key, n] : claims)
      if (n != 1) throw PairingFailure("decompose: separatrix side claimed twice");
  }

  // Crossing paths: bottom zero -> hop to the witness seed -> along the
  // witness leaf to the successful launch point -> the transverse climb ->
  // the crossed ray walked back to the top zero. A second, independent
  // path does the same from the top sector and is stored reversed.
  auto build_path = [&](const Strip& strip, bool from_bottom)
      -> std::vector<Complex> {
    const int si = from_bottom ? strip.bottom_sector : strip.top_sector;
    const Sector& sec = dec.sectors[si];
    const DivisorEntry& zero = dec.phi.zeros()[sec.zero_id];
    if (zero.point.is_infinity())
      throw PairingFailure("decompose: zero at infinity unsupported for paths");
    const ShootResult& sr = shot[si];
    std::vector<Complex> path;
    path.push_back(zero.point.value());
    path.push_back(sec.witness_seed);
    // witness leaf from the seed to the launch point of the shoot
    const Complex launch = sr.path.front();
    if (std::abs(launch - sec.witness_seed) > 1e-14) {
      auto walk = [&](const TrajectorySample& s) -> bool {
        std::vector<Complex> acc;
        for (const TraceVertex& v : s.vertices) {
          if (v.w_chart) {
            acc.push_back(TrajectorySample::z_of(v));
            continue;
          }
          acc.push_back(v.u);
          if (std::abs(v.u - launch) < 1e-14) {
            for (const Complex& p : acc) path.push_back(p);
            return true;
          }
        }
        return false;
      };
      if (!walk(wit_fwd[si]) && !walk(wit_bwd[si]))
        throw PairingFailure("decompose: launch point not on the witness leaf");
    }
    for (size_t i = 1; i < sr.path.size(); ++i) path.push_back(sr.path[i]);
    const DivisorEntry& far_zero =
        dec.phi.zeros()[dec.sectors[sr.partner_sector].zero_id];
    if (far_zero.point.is_infinity())
      throw PairingFailure("decompose: zero at infinity unsupported for paths");
    if (sr.crossed_ray < 0) {
      // the climb ran straight into the far zero
      path.push_back(far_zero.point.value());
      return path;
    }
    // walk the crossed separatrix back from the crossing point to its zero
    const Separatrix& crossed = dec.separatrices[sr.crossed_ray];
    std::vector<Complex> ray_pts = detail::separatrix_z_polyline(dec.phi, crossed);
    size_t j = 0;
    double best = 1e300;
    for (size_t i = 0; i + 1 < ray_pts.size(); ++i) {
      const double d = detail::point_segment_distance(sr.crossing_point,
                                                      ray_pts[i], ray_pts[i + 1]);
      if (d < best) {
        best = d;
        j = i;
      }
    }
    for (size_t i = j; i > 0; --i) path.push_back(ray_pts[i]);
    path.push_back(ray_pts[0]);  // the far zero itself
    return path;
  };
  for (Strip& strip : dec.strips) {
    strip.crossing_path = build_path(strip, true);
    strip.crossing_path_alt = build_path(strip, false);
  }

  return dec;
}

inline StripDecomposition decompose(const QuadraticDifferential& phi) {
  return decompose(phi, TraceControls::defaults_for(phi));
}

// WKB ideal triangulation: one vertex per pole, one arc per strip (its
// generic trajectory), one triangular face per zero whose sides are the
// arcs of the three strips around it in ccw order.
inline Triangulation wkb_triangulation(const StripDecomposition& dec) {
  Triangulation tri;
  for (size_t p = 0; p < dec.phi.poles().size(); ++p)
    tri.vertices.push_back(static_cast<int>(p));
  for (const Strip& s : dec.strips)
    tri.arcs.push_back({s.id, s.id, s.pole_left, s.pole_right});
  for (size_t zi = 0; zi < dec.phi.zeros().size(); ++zi) {
    Triangulation::Face face;
    face.zero = static_cast<int>(zi);
    for (int i = 0; i < 3; ++i) {
      const int sector = static_cast<int>(3 * zi) + i;
      const int strip = dec.strip_of_sector(sector);
      face.sides[i].arc = strip;
      face.sides[i].at_bottom = dec.strips[strip].bottom_sector == sector;
    }
    tri.faces.push_back(face);
  }
  // each arc side is used by exactly one face
  std::map<std::pair<int, bool>, int> uses;
  for (const auto& f : tri.faces)
    for (const auto& s : f.sides) uses[{s.arc, s.at_bottom}]++;
  if (uses.size() != 2 * tri.arcs.size())
    throw PairingFailure("triangulation: arc side usage mismatch");
  for (const auto& [k, n] : uses)
    if (n != 1) throw PairingFailure("triangulation: arc side usage mismatch");
  if (tri.euler_characteristic() != 2)
    throw PairingFailure("triangulation: Euler characteristic is not 2");
  return tri;
}

}  // namespace qdiff

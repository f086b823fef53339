// Continuous embedding of a line instance into [-1,2]^{4m} and the piecewise
// displacement field over it: per-edge segment chains with cut corners, the
// descent from the top face, terminal blends at nontrivial line endpoints, and
// the 64-member local family driven by announced (T,S,P) triples.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardnash/bits.hpp"
#include "hardnash/codec.hpp"
#include "hardnash/lineworld.hpp"
#include "hardnash/report.hpp"

namespace hardnash {

using Point = std::vector<double>;

// Normalized 2-norm and inner product: averages over the dimension.
inline double norm2(std::span<const double> a) {
  double s = 0;
  for (double v : a) s += v * v;
  return std::sqrt(s / double(a.size()));
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s / double(a.size()));
}

inline double dot2(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / double(a.size());
}

enum class Profile { demo, strict };

struct GeometryParams {
  double h = 0.01;
  double delta = 1e-6;  // strict construction wants delta <= h^3
  Profile profile = Profile::demo;

  static GeometryParams demo_profile() { return GeometryParams{0.01, 1e-6, Profile::demo}; }
  static GeometryParams strict_profile(double h) {
    return GeometryParams{h, h * h * h, Profile::strict};
  }
  double sqrt_h() const { return std::sqrt(h); }
};

struct Segment {
  Point a, b;
  Point dir;          // (b-a)/len, unit in the normalized norm
  double len = 0;     // normalized length
  Point cut1, cut2;   // points at arc distance sqrt(h) from a resp. b
  bool descent = false;
  int edge = -1;      // index into BrouwerField::edges for non-descent segments
  int path = -1;
};

struct EdgeRef {
  Vertex v, w;
};

struct BrouwerField {
  const LineInstance* instance = nullptr;
  BinaryCode code;
  GeometryParams params;
  std::optional<GridSpec> grid;
  int m = 0;
  int dim = 0;

  std::vector<Segment> segments;
  std::vector<std::vector<int>> paths;  // ordered segment indices per embedded line
  std::vector<EdgeRef> edges;
  Point default_disp;  // delta * (0_{3m}, 1_m)
  Point z_top;         // (0_{3m}, 2*1_m)
  Point z_half;        // (0_{3m}, 1/2*1_m)

  Point embed_codeword(const BitWord& cw) const {
    Point t(m);
    for (int i = 0; i < m; ++i) t[i] = cw.get(i) ? 1.0 : 0.0;
    return t;
  }
  BitWord codeword_of(const Vertex& v) const {
    return encode(code, packed_id(v, instance->n));
  }
  // The embedded vertex (E(v), E(v), 0_m, 0_m).
  Point anchor_point(const Vertex& v) const {
    Point t = embed_codeword(codeword_of(v));
    Point p(dim, 0.0);
    std::copy(t.begin(), t.end(), p.begin());
    std::copy(t.begin(), t.end(), p.begin() + m);
    return p;
  }
  double theta_mean(std::span<const double> x) const {
    double s = 0;
    for (int i = 3 * m; i < dim; ++i) s += x[i];
    return s / double(m);
  }
  double total_arc() const {
    double s = 0;
    for (const auto& sg : segments) s += sg.len;
    return s;
  }
};

namespace detail {

inline Segment make_segment(Point a, Point b, double sqrt_h) {
  Segment s;
  s.len = dist2(a, b);
  if (s.len <= 0) throw std::logic_error("degenerate segment");
  s.dir.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s.dir[i] = (b[i] - a[i]) / s.len;
  s.cut1.resize(a.size());
  s.cut2.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.cut1[i] = a[i] + sqrt_h * s.dir[i];
    s.cut2[i] = b[i] - sqrt_h * s.dir[i];
  }
  s.a = std::move(a);
  s.b = std::move(b);
  return s;
}

}  // namespace detail

inline BrouwerField build_field(const LineInstance& inst, BinaryCode code, GeometryParams params,
                                std::optional<GridSpec> grid = std::nullopt) {
  if (code.kappa != packed_width(inst.n))
    throw std::invalid_argument("build_field: code message width != packed id width");
  BrouwerField f;
  f.instance = &inst;
  f.code = std::move(code);
  f.params = params;
  f.grid = grid;
  f.m = f.code.m;
  f.dim = 4 * f.m;
  const int m = f.m;
  const double sqh = params.sqrt_h();

  f.default_disp.assign(f.dim, 0.0);
  for (int i = 3 * m; i < f.dim; ++i) f.default_disp[i] = params.delta;
  f.z_top.assign(f.dim, 0.0);
  for (int i = 3 * m; i < f.dim; ++i) f.z_top[i] = 2.0;
  f.z_half.assign(f.dim, 0.0);
  for (int i = 3 * m; i < f.dim; ++i) f.z_half[i] = 0.5;

  auto tuple_point = [&](const Point& t1, const Point& t2, double third) {
    Point p(f.dim, 0.0);
    std::copy(t1.begin(), t1.end(), p.begin());
    std::copy(t2.begin(), t2.end(), p.begin() + m);
    for (int i = 2 * m; i < 3 * m; ++i) p[i] = third;
    return p;
  };

  for (std::size_t li = 0; li < inst.lines.size(); ++li) {
    const auto& line = inst.lines[li];
    std::vector<int> path;
    if (li == 0) {
      Point origin(f.dim, 0.0);
      path.push_back(int(f.segments.size()));
      Segment d = detail::make_segment(f.z_top, origin, sqh);
      d.descent = true;
      d.path = int(li);
      f.segments.push_back(std::move(d));
    }
    for (std::size_t j = 0; j + 1 < line.size(); ++j) {
      const Vertex &v = line[j], &w = line[j + 1];
      int ei = int(f.edges.size());
      f.edges.push_back(EdgeRef{v, w});
      Point ev = f.embed_codeword(f.codeword_of(v));
      Point ew = f.embed_codeword(f.codeword_of(w));
      Point x1 = tuple_point(ev, ev, 0.0);
      Point x2 = tuple_point(ev, ev, 1.0);
      Point x3 = tuple_point(ev, ew, 1.0);
      Point x4 = tuple_point(ev, ew, 0.0);
      Point x5 = tuple_point(ew, ew, 0.0);
      const Point* pts[5] = {&x1, &x2, &x3, &x4, &x5};
      for (int leg = 0; leg < 4; ++leg) {
        Segment s = detail::make_segment(*pts[leg], *pts[leg + 1], sqh);
        s.edge = ei;
        s.path = int(li);
        path.push_back(int(f.segments.size()));
        f.segments.push_back(std::move(s));
      }
    }
    f.paths.push_back(std::move(path));
  }
  return f;
}

// --- region resolution --------------------------------------------------------

enum class RegionType { outside, fallback, interior, corner, terminal_end, terminal_start };

struct Context {
  RegionType type = RegionType::fallback;
  int seg = -1;   // interior / terminal: the segment; corner: incoming segment
  int seg2 = -1;  // corner: outgoing segment
};

inline double arc_pos(const Segment& s, std::span<const double> x) {
  double acc = 0;
  for (std::size_t i = 0; i < s.dir.size(); ++i) acc += s.dir[i] * (x[i] - s.a[i]);
  return acc / double(s.dir.size());
}

inline double radial_dist(const Segment& s, double sigma, std::span<const double> x) {
  double acc = 0;
  for (std::size_t i = 0; i < s.dir.size(); ++i) {
    double d = x[i] - (s.a[i] + sigma * s.dir[i]);
    acc += d * d;
  }
  return std::sqrt(acc / double(s.dir.size()));
}

// Region priority: outside picture, then corners, then segment interiors, then
// terminal blends at line endpoints, then the default displacement.
inline Context resolve_context(const BrouwerField& f, std::span<const double> x) {
  const double h = f.params.h;
  const double sqh = f.params.sqrt_h();
  if (f.theta_mean(x) >= 0.5) return Context{RegionType::outside};

  for (const auto& path : f.paths) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const Segment& s1 = f.segments[path[i]];
      const Segment& s2 = f.segments[path[i + 1]];
      double d1 = arc_pos(s1, x) - (s1.len - sqh);
      double d2 = sqh - arc_pos(s2, x);
      if (d1 < 0 || d2 < 0 || d1 + d2 <= 0) continue;
      double tau = d2 / (d1 + d2);
      double r = 0;
      {
        double acc = 0;
        for (std::size_t c = 0; c < s1.cut2.size(); ++c) {
          double z = tau * s1.cut2[c] + (1 - tau) * s2.cut1[c];
          double d = x[c] - z;
          acc += d * d;
        }
        r = std::sqrt(acc / double(s1.cut2.size()));
      }
      if (r < 3 * h) return Context{RegionType::corner, path[i], path[i + 1]};
    }
  }

  for (const auto& path : f.paths) {
    for (int si : path) {
      const Segment& s = f.segments[si];
      double sigma = arc_pos(s, x);
      if (sigma < sqh || sigma > s.len - sqh) continue;
      if (radial_dist(s, sigma, x) < 3 * h) return Context{RegionType::interior, si};
    }
  }

  for (std::size_t pi = 0; pi < f.paths.size(); ++pi) {
    const auto& path = f.paths[pi];
    const Segment& last = f.segments[path.back()];
    double sig_last = arc_pos(last, x);
    if (sig_last > last.len - sqh && radial_dist(last, sig_last, x) < 3 * h)
      return Context{RegionType::terminal_end, path.back()};
    if (pi > 0) {
      const Segment& first = f.segments[path.front()];
      double sig_first = arc_pos(first, x);
      if (sig_first < sqh && radial_dist(first, sig_first, x) < 3 * h)
        return Context{RegionType::terminal_start, path.front()};
    }
  }

  return Context{RegionType::fallback};
}

namespace detail {

// The four-knot radial rule around a closest point z: tangent row on the
// segment, inward pull at h, reversed tangent at 2h, default at 3h and beyond.
inline void radial_rows(const BrouwerField& f, std::span<const double> tangent,
                        std::span<const double> z, std::span<const double> x, Point& out) {
  const double h = f.params.h;
  const double delta = f.params.delta;
  double r = dist2(x, z);
  if (r >= 3 * h) {
    std::copy(f.default_disp.begin(), f.default_disp.end(), out.begin());
    return;
  }
  if (r <= h) {
    double w = r / h;
    for (int i = 0; i < f.dim; ++i)
      out[i] = (1 - w) * delta * tangent[i] + w * (delta / h) * (z[i] - x[i]);
  } else if (r <= 2 * h) {
    double w = r / h - 1;
    for (int i = 0; i < f.dim; ++i)
      out[i] = (1 - w) * (delta / h) * (z[i] - x[i]) + w * (-delta) * tangent[i];
  } else {
    double w = r / h - 2;
    for (int i = 0; i < f.dim; ++i)
      out[i] = (1 - w) * (-delta) * tangent[i] + w * f.default_disp[i];
  }
}

inline void segment_rows(const BrouwerField& f, const Segment& s, std::span<const double> x,
                         Point& out, Point& scratch_z) {
  double sigma = arc_pos(s, x);
  for (int i = 0; i < f.dim; ++i) scratch_z[i] = s.a[i] + sigma * s.dir[i];
  radial_rows(f, s.dir, scratch_z, x, out);
}

// Rule near the top face: pushes down at the top center and toward the
// boundary-crossing point of the descent everywhere else.
inline void top_rows(const BrouwerField& f, std::span<const double> x, Point& out) {
  const double h = f.params.h;
  const double delta = f.params.delta;
  double r = dist2(x, f.z_top);
  if (r >= h) {
    for (int i = 0; i < f.dim; ++i) out[i] = (delta / h) * (f.z_half[i] - x[i]);
  } else {
    double w = r / h;
    for (int i = 0; i < f.dim; ++i) {
      double down = i >= 3 * f.m ? -delta : 0.0;
      out[i] = (1 - w) * down + w * (delta / h) * (f.z_half[i] - x[i]);
    }
  }
}

}  // namespace detail

// Untruncated displacement for a resolved region.
inline Point displacement(const BrouwerField& f, const Context& ctx, std::span<const double> x) {
  const double sqh = f.params.sqrt_h();
  Point out(f.dim);
  Point z(f.dim);

  switch (ctx.type) {
    case RegionType::fallback:
      std::copy(f.default_disp.begin(), f.default_disp.end(), out.begin());
      return out;

    case RegionType::outside: {
      double lam = (f.theta_mean(x) - 0.5) / 1.5;
      lam = std::clamp(lam, 0.0, 1.0);
      Point gd(f.dim), gt(f.dim);
      detail::segment_rows(f, f.segments[f.paths[0][0]], x, gd, z);
      detail::top_rows(f, x, gt);
      for (int i = 0; i < f.dim; ++i) out[i] = (1 - lam) * gd[i] + lam * gt[i];
      return out;
    }

    case RegionType::interior:
      detail::segment_rows(f, f.segments[ctx.seg], x, out, z);
      return out;

    case RegionType::corner: {
      const Segment& s1 = f.segments[ctx.seg];
      const Segment& s2 = f.segments[ctx.seg2];
      double d1 = arc_pos(s1, x) - (s1.len - sqh);
      double d2 = sqh - arc_pos(s2, x);
      double tau = d2 / (d1 + d2);
      Point tangent(f.dim);
      for (int i = 0; i < f.dim; ++i) {
        tangent[i] = tau * s1.dir[i] + (1 - tau) * s2.dir[i];
        z[i] = tau * s1.cut2[i] + (1 - tau) * s2.cut1[i];
      }
      detail::radial_rows(f, tangent, z, x, out);
      return out;
    }

    case RegionType::terminal_end:
    case RegionType::terminal_start: {
      const Segment& s = f.segments[ctx.seg];
      double sigma = arc_pos(s, x);
      double mu = ctx.type == RegionType::terminal_end ? (sigma - (s.len - sqh)) / sqh
                                                       : (sqh - sigma) / sqh;
      mu = std::clamp(mu, 0.0, 1.0);
      Point rows(f.dim);
      detail::segment_rows(f, s, x, rows, z);
      for (int i = 0; i < f.dim; ++i) out[i] = (1 - mu) * rows[i] + mu * f.default_disp[i];
      return out;
    }
  }
  return out;
}

inline void check_in_cube(const BrouwerField& f, std::span<const double> x) {
  if ((int)x.size() != f.dim) throw std::invalid_argument("point dimension mismatch");
  for (double v : x)
    if (!(v >= -1.0 - 1e-9 && v <= 2.0 + 1e-9)) throw std::invalid_argument("point outside cube");
}

inline Point eval_f(const BrouwerField& f, std::span<const double> x) {
  check_in_cube(f, x);
  Context ctx = resolve_context(f, x);
  Point g = displacement(f, ctx, x);
  Point out(f.dim);
  for (int i = 0; i < f.dim; ++i) out[i] = std::clamp(x[i] + g[i], -1.0, 2.0);
  return out;
}

// --- local family ---------------------------------------------------------------

namespace detail {

// Per-tuple consistency checks against the context edge (v', w'): a tuple that
// sits within 8*sqrt(h) of an endpoint's codeword and decodes to that endpoint
// must announce T=1 and the matching successor/predecessor bit.
inline bool edge_checks(const BrouwerField& f, const EdgeRef& e, const LineInfo& i1,
                        const LineInfo& i2, std::span<const double> x) {
  const int n = f.instance->n;
  const double radius = 8 * f.params.sqrt_h();
  std::uint64_t idv = packed_id(e.v, n), idw = packed_id(e.w, n);
  const BitWord cv = f.code.codebook[idv];
  const BitWord cw = f.code.codebook[idw];

  for (int t = 0; t < 2; ++t) {
    Tuple which = t == 0 ? Tuple::first : Tuple::second;
    const LineInfo& info = t == 0 ? i1 : i2;
    bool near_v = tuple_distance(x, which, cv) <= radius;
    bool near_w = tuple_distance(x, which, cw) <= radius;
    if (!near_v && !near_w) continue;
    // The triple describes the vertex the tuple decodes to; when that is a
    // third vertex the announcement says nothing about this edge.
    std::uint64_t dec = decode_point_tuple(x, which, f.code).msg.to_uint();
    if (near_v && dec == idv) {
      if (info.t != 1) return false;
      if (neighbor(e.v, Dir::succ, info.s, n) != e.w) return false;
    } else if (near_w && dec == idw) {
      if (info.t != 1) return false;
      if (neighbor(e.w, Dir::pred, info.p, n) != e.v) return false;
    }
  }
  return true;
}

// Consolidated rule inside the 2*sqrt(2)*sqrt(h) ball of an embedded line
// vertex: both tuples decode to the same vertex, so the two announcements must
// agree and match the claimed neighbors.
inline bool anchor_checks(const BrouwerField& f, const Vertex& v, const Vertex* pred_of_v,
                          const Vertex* succ_of_v, const LineInfo& i1, const LineInfo& i2) {
  const int n = f.instance->n;
  if (i1.t != 1 || i2.t != 1) return false;
  if (i1.s != i2.s || i1.p != i2.p) return false;
  if (pred_of_v && neighbor(v, Dir::pred, i1.p, n) != *pred_of_v) return false;
  if (succ_of_v && neighbor(v, Dir::succ, i1.s, n) != *succ_of_v) return false;
  return true;
}

}  // namespace detail

// Resolves the same region as eval_f and then validates it against the two
// announced triples; any failed check falls back to the default displacement.
// Regions that do not touch the lines (outside picture, default, the descent
// and its junction at the origin anchor) ignore the announcements.
inline Context resolve_context_local(const BrouwerField& f, const LineInfo& i1, const LineInfo& i2,
                                     std::span<const double> x) {
  Context ctx = resolve_context(f, x);
  const Context fallback{RegionType::fallback};
  const double ball = 2.0 * std::sqrt(2.0) * f.params.sqrt_h();

  switch (ctx.type) {
    case RegionType::outside:
    case RegionType::fallback:
      return ctx;

    case RegionType::interior: {
      const Segment& s = f.segments[ctx.seg];
      if (s.descent) return ctx;
      return detail::edge_checks(f, f.edges[s.edge], i1, i2, x) ? ctx : fallback;
    }

    case RegionType::corner: {
      const Segment& s1 = f.segments[ctx.seg];
      const Segment& s2 = f.segments[ctx.seg2];
      if (s1.descent) return ctx;  // junction at the origin anchor
      if (s1.edge == s2.edge)
        return detail::edge_checks(f, f.edges[s1.edge], i1, i2, x) ? ctx : fallback;
      const EdgeRef& in = f.edges[s1.edge];
      const EdgeRef& outE = f.edges[s2.edge];
      return detail::anchor_checks(f, in.w, &in.v, &outE.w, i1, i2) ? ctx : fallback;
    }

    case RegionType::terminal_end: {
      const EdgeRef& e = f.edges[f.segments[ctx.seg].edge];
      if (dist2(x, f.anchor_point(e.w)) <= ball)
        return detail::anchor_checks(f, e.w, &e.v, nullptr, i1, i2) ? ctx : fallback;
      return detail::edge_checks(f, e, i1, i2, x) ? ctx : fallback;
    }

    case RegionType::terminal_start: {
      const EdgeRef& e = f.edges[f.segments[ctx.seg].edge];
      if (dist2(x, f.anchor_point(e.v)) <= ball)
        return detail::anchor_checks(f, e.v, nullptr, &e.w, i1, i2) ? ctx : fallback;
      return detail::edge_checks(f, e, i1, i2, x) ? ctx : fallback;
    }
  }
  return ctx;
}

inline Point eval_f_local(const BrouwerField& f, const LineInfo& i1, const LineInfo& i2,
                          std::span<const double> x) {
  check_in_cube(f, x);
  Context ctx = resolve_context_local(f, i1, i2, x);
  Point g = displacement(f, ctx, x);
  Point out(f.dim);
  for (int i = 0; i < f.dim; ++i) out[i] = std::clamp(x[i] + g[i], -1.0, 2.0);
  return out;
}

// True local information for a point: the triples of the vertices its two
// tuples decode to. This is what a truthful announcer would say.
inline std::pair<LineInfo, LineInfo> true_local_info(const BrouwerField& f,
                                                     std::span<const double> x) {
  std::uint64_t dv = decode_point_tuple(x, Tuple::first, f.code).msg.to_uint();
  std::uint64_t dw = decode_point_tuple(x, Tuple::second, f.code).msg.to_uint();
  return {f.instance->info(unpack_id(dv, f.instance->n)),
          f.instance->info(unpack_id(dw, f.instance->n))};
}

// --- geometry validation ---------------------------------------------------------

namespace detail {

// Exact min distance between two segments: the unconstrained stationary point
// plus the four clamped edge minimizers of the box-constrained quadratic.
inline double segment_segment_dist(const Segment& s1, const Segment& s2) {
  std::size_t dim = s1.a.size();
  std::vector<double> d1(dim), d2(dim), r(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    d1[i] = s1.b[i] - s1.a[i];
    d2[i] = s2.b[i] - s2.a[i];
    r[i] = s1.a[i] - s2.a[i];
  }
  double A = 0, B = 0, C = 0, D = 0, E = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    A += d1[i] * d1[i];
    B += d1[i] * d2[i];
    C += d2[i] * d2[i];
    D += d1[i] * r[i];
    E += d2[i] * r[i];
  }
  auto q = [&](double t, double u) {
    double acc = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      double v = r[i] + t * d1[i] - u * d2[i];
      acc += v * v;
    }
    return acc;
  };
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  double best = std::min(std::min(q(0, clamp01(E / C)), q(1, clamp01((E + B) / C))),
                         std::min(q(clamp01(-D / A), 0), q(clamp01((B - D) / A), 1)));
  double det = A * C - B * B;
  if (det > 1e-12 * A * C) {
    double t = (B * E - C * D) / det;
    double u = (B * t + E) / C;
    if (t >= 0 && t <= 1 && u >= 0 && u <= 1) best = std::min(best, q(t, u));
  }
  return std::sqrt(best / double(dim));
}

}  // namespace detail

// Measured geometric margins. Check (iii) binds only in the strict profile but
// is always reported.
inline Report validate_geometry(const BrouwerField& f) {
  Report rep;
  rep.command = "geometry";
  rep.config_kv("h", fmt_double(f.params.h));
  rep.config_kv("delta", fmt_double(f.params.delta));
  rep.config_kv("profile", f.params.profile == Profile::demo ? "demo" : "strict");
  rep.config_kv("m", std::to_string(f.m));
  const double h = f.params.h;
  const double sqh = f.params.sqrt_h();

  // (i) Brouwer vertices are pairwise farther than 2*sqrt(h).
  std::vector<const Point*> verts;
  for (const auto& s : f.segments) {
    verts.push_back(&s.a);
    verts.push_back(&s.b);
  }
  double min_vert = 1e300;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j) {
      if (*verts[i] == *verts[j]) continue;
      min_vert = std::min(min_vert, dist2(*verts[i], *verts[j]));
    }
  rep.add(CheckEntry::num("brouwer-vertex-separation", min_vert, 2 * sqh, min_vert > 2 * sqh));

  // (ii) Non-consecutive segments farther than 6h. Segments sharing an
  // endpoint are the consecutive ones.
  double min_seg = 1e300;
  for (std::size_t i = 0; i < f.segments.size(); ++i)
    for (std::size_t j = i + 1; j < f.segments.size(); ++j) {
      const Segment &s1 = f.segments[i], &s2 = f.segments[j];
      if (s1.a == s2.a || s1.a == s2.b || s1.b == s2.a || s1.b == s2.b) continue;
      min_seg = std::min(min_seg, detail::segment_segment_dist(s1, s2));
    }
  rep.add(CheckEntry::num("segment-separation", min_seg, 6 * h, min_seg > 6 * h));

  // (iii) Codeword embeddings farther than 24*sqrt(h) in the per-tuple norm.
  double code_sep = std::sqrt(f.code.rel_dist());
  bool iii_pass = code_sep > 24 * sqh;
  rep.add(CheckEntry{"codeword-separation", fmt_double(code_sep), fmt_double(24 * sqh), iii_pass,
                     f.params.profile == Profile::demo ? "advisory-in-demo" : ""});

  // (iv) delta <= h^3.
  rep.add(CheckEntry::num("delta-le-h-cubed", f.params.delta, h * h * h,
                          f.params.delta <= h * h * h));

  if (f.grid) {
    // (v) eps <= delta/4, (vi) 3/eps integral (by GridSpec construction).
    double eps = f.grid->eps();
    rep.add(CheckEntry::num("grid-eps-le-quarter-delta", eps, f.params.delta / 4,
                            eps <= f.params.delta / 4));
    rep.add(CheckEntry::num("grid-three-over-eps-integer", double(f.grid->q), 1.0, f.grid->q >= 1));
  }
  return rep;
}

// Overall verdict for a geometry report under the field's profile: the demo
// profile treats codeword separation as advisory.
inline bool geometry_pass(const BrouwerField& f, const Report& rep) {
  for (const auto& c : rep.checks) {
    if (c.pass) continue;
    if (f.params.profile == Profile::demo && c.name == "codeword-separation") continue;
    return false;
  }
  return true;
}

// --- path following ----------------------------------------------------------------

struct FollowResult {
  Point point;
  std::uint64_t steps = 0;
  double residual = 0;
  bool converged = false;
};

// Normalized displacement walk from the top anchor; the step shrinks with the
// residual so the terminal zero is approached geometrically instead of being
// orbited at a fixed radius.
inline FollowResult follow_path(const BrouwerField& f, double step, double tol,
                                std::uint64_t budget = 0) {
  if (step > f.params.h / 4) throw std::invalid_argument("follow_path: step > h/4");
  if (budget == 0)
    budget = std::uint64_t(f.total_arc() / step * 3.0) + 200000;
  Point x = f.z_top;
  FollowResult best;
  best.point = x;
  best.residual = 1e300;
  for (std::uint64_t t = 0; t < budget; ++t) {
    Point fx = eval_f(f, x);
    double r = dist2(fx, x);
    if (r < best.residual) {
      best.residual = r;
      best.point = x;
      best.steps = t;
    }
    if (r <= tol) {
      best.converged = true;
      best.steps = t;
      best.point = x;
      best.residual = r;
      return best;
    }
    double eta = std::min(step, 0.5 * r * f.params.h / f.params.delta);
    for (int i = 0; i < f.dim; ++i)
      x[i] = std::clamp(x[i] + eta * (fx[i] - x[i]) / r, -1.0, 2.0);
  }
  best.steps = budget;
  return best;
}

// Grid sized so eps is the largest value with 3/eps integral and eps <= delta/4.
inline GridSpec grid_for_delta(double delta) {
  auto q = std::int64_t(std::ceil(12.0 / delta));
  while (3.0 / double(q) > delta / 4.0) ++q;
  return GridSpec{q};
}

}  // namespace hardnash

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hardnash/brouwer.hpp"
#include "hardnash/codec.hpp"
#include "hardnash/lineworld.hpp"

using namespace hardnash;

namespace {

struct Fixture {
  LineInstance inst;
  BrouwerField field;

  static Fixture demo_n1() {
    Fixture fx;
    fx.inst = make_instance_from_permutation(1, {0, 1}, Kind::EOTL);
    BinaryCode code = build_code(3, 0.5, 42);
    fx.field = build_field(fx.inst, code, GeometryParams::demo_profile(),
                           grid_for_delta(1e-6));
    return fx;
  }

  static Fixture with_params(GeometryParams p) {
    Fixture fx;
    fx.inst = make_instance_from_permutation(1, {0, 1}, Kind::EOTL);
    BinaryCode code = build_code(3, 0.5, 42);
    fx.field = build_field(fx.inst, code, p, grid_for_delta(p.delta));
    return fx;
  }
};

Point point_on(const Segment& s, double sigma) {
  Point x(s.a.size());
  for (std::size_t i = 0; i < s.a.size(); ++i) x[i] = s.a[i] + sigma * s.dir[i];
  return x;
}

// A unit direction orthogonal to the segment, deterministic per seed.
Point perp_dir(const Segment& s, Rng& rng) {
  Point d(s.a.size());
  for (auto& v : d) v = rng.uniform(-1.0, 1.0);
  double c = dot2(d, s.dir);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= c * s.dir[i];
  double nn = norm2(d);
  for (auto& v : d) v /= nn;
  return d;
}

Point offset(const Point& base, const Point& dir, double amount) {
  Point x(base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    x[i] = std::clamp(base[i] + amount * dir[i], -1.0, 2.0);
  return x;
}

}  // namespace

TEST_CASE("field structure for the n=1 line") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  CHECK(f.segments.size() == 9);  // descent + 4 per edge, 2 edges
  CHECK(f.paths.size() == 1);
  CHECK(f.edges.size() == 2);

  // The all-zero vertex embeds at the origin.
  Point zero_anchor = f.anchor_point(Vertex{0, 0, 0});
  for (double v : zero_anchor) CHECK(v == 0.0);

  // Descent has unit length; every other endpoint has a zero last tuple.
  CHECK(f.segments[0].len == doctest::Approx(1.0));
  for (std::size_t i = 1; i < f.segments.size(); ++i)
    for (int c = 3 * f.m; c < f.dim; ++c) {
      CHECK(f.segments[i].a[c] == 0.0);
      CHECK(f.segments[i].b[c] == 0.0);
    }

  // Cut points sit at arc distance sqrt(h) resp. len - sqrt(h) from the start.
  double sqh = f.params.sqrt_h();
  for (const auto& s : f.segments) {
    CHECK(dist2(s.a, s.cut1) == doctest::Approx(sqh).epsilon(1e-9));
    CHECK(dist2(s.a, s.cut2) == doctest::Approx(s.len - sqh).epsilon(1e-9));
    CHECK(dist2(s.b, s.cut2) == doctest::Approx(sqh).epsilon(1e-9));
  }

  // Consecutive segments are exactly orthogonal: their direction supports are
  // disjoint coordinate blocks.
  for (const auto& path : f.paths)
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      CHECK(dot2(f.segments[path[i]].dir, f.segments[path[i + 1]].dir) == 0.0);
}

TEST_CASE("default displacement has norm exactly half delta") {
  Fixture fx = Fixture::demo_n1();
  CHECK(norm2(fx.field.default_disp) ==
        doctest::Approx(fx.field.params.delta / 2).epsilon(1e-12));
}

TEST_CASE("far interior points receive the default displacement") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  Point x(f.dim, -0.9);
  Point fy = eval_f(f, x);
  for (int i = 0; i < f.dim; ++i) {
    double want = x[i] + (i >= 3 * f.m ? f.params.delta : 0.0);
    CHECK(fy[i] == want);
  }
}

TEST_CASE("segment interiors displace along the tangent") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  const Segment& s = f.segments[2];  // second leg of the first edge
  Point x = point_on(s, s.len / 2);
  Point fy = eval_f(f, x);
  for (int i = 0; i < f.dim; ++i)
    CHECK(std::abs(fy[i] - (x[i] + f.params.delta * s.dir[i])) <= 1e-15);
}

TEST_CASE("the top corner displaces straight down") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  Point fy = eval_f(f, f.z_top);
  for (int i = 0; i < f.dim; ++i)
    CHECK(fy[i] == f.z_top[i] + (i >= 3 * f.m ? -f.params.delta : 0.0));
}

TEST_CASE("geometry report verdicts in the demo profile") {
  Fixture fx = Fixture::demo_n1();
  Report rep = validate_geometry(fx.field);
  for (const auto& c : rep.checks) {
    if (c.name == "codeword-separation")
      CHECK(!c.pass);  // 24*sqrt(h) exceeds the codeword separation at h=0.01
    else
      CHECK(c.pass);
  }
  CHECK(geometry_pass(fx.field, rep));
}

TEST_CASE("strict profile passes all checks at small h") {
  Fixture fx = Fixture::with_params(GeometryParams::strict_profile(5e-4));
  Report rep = validate_geometry(fx.field);
  for (const auto& c : rep.checks) CHECK(c.pass);
  CHECK(geometry_pass(fx.field, rep));
}

TEST_CASE("delta above h cubed fails the magnitude check") {
  GeometryParams p = GeometryParams::demo_profile();
  p.delta = p.h * p.h;  // h^2 > h^3
  Fixture fx = Fixture::with_params(p);
  Report rep = validate_geometry(fx.field);
  bool iv_failed = false;
  for (const auto& c : rep.checks)
    if (c.name == "delta-le-h-cubed" && !c.pass) iv_failed = true;
  CHECK(iv_failed);
}

TEST_CASE("locality: true information reproduces the field bit for bit") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  Rng rng(2025);
  int checked = 0;
  for (int t = 0; t < 4000; ++t) {
    const Segment& s = f.segments[1 + rng.below(f.segments.size() - 1)];
    double sigma = rng.uniform(0.0, s.len);
    Point base = point_on(s, sigma);
    Point dir = perp_dir(s, rng);
    Point x = offset(base, dir, rng.uniform(0.0, 2 * f.params.sqrt_h()));
    auto [i1, i2] = true_local_info(f, x);
    Point a = eval_f(f, x);
    Point b = eval_f_local(f, i1, i2, x);
    CHECK(a == b);
    ++checked;
  }
  CHECK(checked == 4000);
}

TEST_CASE("locality: far points ignore the announcements") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  Point x(f.dim, -0.95);
  Point want = eval_f(f, x);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      LineInfo i1{std::uint8_t((a >> 2) & 1), std::uint8_t((a >> 1) & 1), std::uint8_t(a & 1)};
      LineInfo i2{std::uint8_t((b >> 2) & 1), std::uint8_t((b >> 1) & 1), std::uint8_t(b & 1)};
      CHECK(eval_f_local(f, i1, i2, x) == want);
    }
}

TEST_CASE("locality: corrupted announcements flip to the default displacement") {
  // Small h so the 8*sqrt(h) check radius stays selective.
  Fixture fx = Fixture::with_params(GeometryParams::strict_profile(1e-3));
  const BrouwerField& f = fx.field;

  auto default_image = [&](const Point& x) {
    Point out(f.dim);
    for (int i = 0; i < f.dim; ++i)
      out[i] = std::clamp(x[i] + f.default_disp[i], -1.0, 2.0);
    return out;
  };

  // Interior of the second leg (first tuple pinned at the edge's tail vertex).
  const Segment& s = f.segments[2];
  Point x = point_on(s, s.len / 2);
  auto [i1, i2] = true_local_info(f, x);
  REQUIRE(eval_f_local(f, i1, i2, x) == eval_f(f, x));

  SUBCASE("absent line bit") {
    LineInfo bad = i1;
    bad.t = 0;
    CHECK(eval_f_local(f, bad, i2, x) == default_image(x));
  }
  SUBCASE("wrong successor") {
    LineInfo bad = i1;
    bad.s ^= 1;
    CHECK(eval_f_local(f, bad, i2, x) == default_image(x));
  }
  SUBCASE("wrong predecessor flips on the incoming leg") {
    // Fourth leg of the first edge: the first tuple approaches the head
    // vertex, so the predecessor check is the active one.
    const Segment& s4 = f.segments[4];
    Point y = point_on(s4, 0.8 * s4.len);
    REQUIRE(resolve_context(f, y).type == RegionType::interior);
    auto [j1, j2] = true_local_info(f, y);
    REQUIRE(eval_f_local(f, j1, j2, y) == eval_f(f, y));
    LineInfo bad = j1;
    bad.p ^= 1;
    CHECK(eval_f_local(f, bad, j2, y) == default_image(y));
  }
  SUBCASE("second tuple far from all codewords accepts any second announcement") {
    // Mid second leg: the second tuple is halfway between two codewords,
    // farther than the check radius from every codeword.
    const Segment& mid = f.segments[2];
    Point z = point_on(mid, mid.len / 2);
    double radius = 8 * f.params.sqrt_h();
    for (const auto& cw : f.code.codebook)
      REQUIRE(tuple_distance(z, Tuple::second, cw) > radius);
    auto [k1, k2] = true_local_info(f, z);
    Point want = eval_f(f, z);
    for (int b = 0; b < 8; ++b) {
      LineInfo any{std::uint8_t((b >> 2) & 1), std::uint8_t((b >> 1) & 1), std::uint8_t(b & 1)};
      CHECK(eval_f_local(f, k1, any, z) == want);
    }
  }
}

TEST_CASE("region interfaces are continuous") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  const double h = f.params.h;
  const double lip_budget = 1.1;  // generous stand-in for the recorded constant
  Rng rng(7);

  auto check_pair = [&](const Point& xp, const Point& xm) {
    double dx = dist2(xp, xm);
    double df = dist2(eval_f(f, xp), eval_f(f, xm));
    CHECK(df <= lip_budget * dx + 1e-15);
  };

  for (int t = 0; t < 400; ++t) {
    const Segment& s = f.segments[rng.below(f.segments.size())];
    double sigma = rng.uniform(2 * f.params.sqrt_h(), s.len - 2 * f.params.sqrt_h());
    Point base = point_on(s, sigma);
    Point dir = perp_dir(s, rng);
    for (double ring : {h, 2 * h, 3 * h}) {
      check_pair(offset(base, dir, ring + 1e-9), offset(base, dir, ring - 1e-9));
    }
  }

  // Corner slab boundaries: crossing the cut hyperplane of a junction.
  for (int t = 0; t < 200; ++t) {
    const auto& path = f.paths[0];
    std::size_t j = rng.below(path.size() - 1);
    const Segment& s1 = f.segments[path[j]];
    Point base = point_on(s1, s1.len - f.params.sqrt_h());  // tau = 1 boundary
    Point dir = perp_dir(s1, rng);
    Point shifted = offset(base, dir, rng.uniform(0.0, 2 * h));
    Point xp = offset(shifted, s1.dir, 1e-9);
    Point xm = offset(shifted, s1.dir, -1e-9);
    check_pair(xp, xm);
  }

  // Picture boundary, both far from and near the descent tube.
  for (int t = 0; t < 200; ++t) {
    Point x(f.dim);
    for (int i = 0; i < 3 * f.m; ++i) x[i] = rng.uniform(-1.0, 2.0);
    double level = 0.5;
    if (t % 2 == 0) {
      // park the first three tuples near the descent axis
      for (int i = 0; i < 3 * f.m; ++i) x[i] = rng.uniform(-2 * h, 2 * h);
    }
    for (int i = 3 * f.m; i < f.dim; ++i) x[i] = level;
    Point xp = x, xm = x;
    for (int i = 3 * f.m; i < f.dim; ++i) {
      xp[i] += 1e-9;
      xm[i] -= 1e-9;
    }
    check_pair(xp, xm);
  }
}

TEST_CASE("sampled Lipschitz ratio stays near one") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  Rng rng(31337);
  double worst = 0;
  for (int t = 0; t < 20000; ++t) {
    Point x(f.dim);
    if (t % 2 == 0) {
      for (auto& v : x) v = rng.uniform(-1.0, 2.0);
    } else {
      const Segment& s = f.segments[rng.below(f.segments.size())];
      Point base = point_on(s, rng.uniform(0.0, s.len));
      Point dir = perp_dir(s, rng);
      x = offset(base, dir, rng.uniform(0.0, 4 * f.params.h));
    }
    Point d(f.dim);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
    double nn = norm2(d);
    double rad = rng.uniform(1e-6, f.params.h);
    Point y(f.dim);
    for (int i = 0; i < f.dim; ++i) y[i] = std::clamp(x[i] + d[i] / nn * rad, -1.0, 2.0);
    double dx = dist2(x, y);
    if (dx == 0) continue;
    worst = std::max(worst, dist2(eval_f(f, x), eval_f(f, y)) / dx);
  }
  CHECK(worst <= 1.01);
  CHECK(worst >= 0.9);  // f is close to the identity plus a small field
}

TEST_CASE("path following lands on the embedded solution") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  FollowResult fr = follow_path(f, f.params.h / 4, f.params.delta / 10);
  REQUIRE(fr.converged);
  CHECK(fr.residual <= f.params.delta / 10);
  std::uint64_t dv = decode_point_tuple(fr.point, Tuple::first, f.code).msg.to_uint();
  REQUIRE(fx.inst.solution_list.size() == 1);
  CHECK(unpack_id(dv, 1) == fx.inst.solution_list[0].first);
}

TEST_CASE("a huge tolerance terminates immediately at the start") {
  Fixture fx = Fixture::demo_n1();
  FollowResult fr = follow_path(fx.field, fx.field.params.h / 4, 10.0);
  CHECK(fr.converged);
  CHECK(fr.steps == 0);
  CHECK(fr.point == fx.field.z_top);
}

TEST_CASE("displacement floor away from the solution edge") {
  Fixture fx = Fixture::demo_n1();
  const BrouwerField& f = fx.field;
  const double sqh = f.params.sqrt_h();
  // Segments of the final edge embed the solution edge.
  const auto& path = f.paths[0];
  std::vector<int> solution_segs(path.end() - 4, path.end());
  auto far_from_solution = [&](const Point& x) {
    for (int si : solution_segs) {
      const Segment& s = f.segments[si];
      double sig = std::clamp(arc_pos(s, x), 0.0, s.len);
      if (radial_dist(s, sig, x) < 2 * sqh) return false;
    }
    return true;
  };
  Rng rng(555);
  double floor = 1e300;
  int used = 0;
  for (int t = 0; t < 20000; ++t) {
    Point x(f.dim);
    if (t % 2 == 0) {
      for (auto& v : x) v = rng.uniform(-1.0, 2.0);
    } else {
      int si = int(rng.below(5));  // descent and the first edge only
      const Segment& s = f.segments[path[si]];
      Point base = point_on(s, rng.uniform(0.0, s.len));
      Point dir = perp_dir(s, rng);
      x = offset(base, dir, rng.uniform(0.0, 4 * f.params.h));
    }
    if (!far_from_solution(x)) continue;
    floor = std::min(floor, dist2(eval_f(f, x), x));
    ++used;
  }
  CHECK(used > 15000);
  CHECK(floor >= 0.2 * f.params.delta);
}

namespace {

struct YFixture {
  LineInstance inst;
  BrouwerField field;

  static YFixture make() {
    YFixture fx;
    fx.inst = make_instance_from_permutation(2, {0, 2, 1, 3}, Kind::Y, 2);
    BinaryCode code = build_code(6, 0.25, 42);
    fx.field = build_field(fx.inst, code, GeometryParams::demo_profile(), grid_for_delta(1e-6));
    return fx;
  }
};

}  // namespace

TEST_CASE("a two-line instance embeds as two paths") {
  YFixture fx = YFixture::make();
  const BrouwerField& f = fx.field;
  REQUIRE(f.paths.size() == 2);
  // path 0: descent + 4 segments per edge of the first line
  CHECK(f.paths[0].size() == 1 + 4 * (fx.inst.lines[0].size() - 1));
  CHECK(f.paths[1].size() == 4 * (fx.inst.lines[1].size() - 1));
  // The second path starts at the embedded start vertex of the second line.
  const Segment& first = f.segments[f.paths[1].front()];
  CHECK(first.a == f.anchor_point(fx.inst.lines[1].front()));
  CHECK(geometry_pass(f, validate_geometry(f)));
}

TEST_CASE("the second line's start carries its own terminal region") {
  YFixture fx = YFixture::make();
  const BrouwerField& f = fx.field;
  const Segment& s = f.segments[f.paths[1].front()];
  Rng rng(99);

  // Inside the start cut the context is the terminal blend, and true
  // announcements reproduce it bit for bit.
  for (int t = 0; t < 200; ++t) {
    Point base = point_on(s, rng.uniform(0.0, 0.9 * f.params.sqrt_h()));
    Point dir = perp_dir(s, rng);
    Point x = offset(base, dir, rng.uniform(0.0, 2 * f.params.h));
    Context ctx = resolve_context(f, x);
    REQUIRE(ctx.type == RegionType::terminal_start);
    auto [i1, i2] = true_local_info(f, x);
    CHECK(eval_f_local(f, i1, i2, x) == eval_f(f, x));

    // A coordinated successor flip claims a different outgoing edge: default.
    LineInfo c1 = i1, c2 = i2;
    c1.s ^= 1;
    c2.s ^= 1;
    Point want(f.dim);
    for (int i = 0; i < f.dim; ++i)
      want[i] = std::clamp(x[i] + f.default_disp[i], -1.0, 2.0);
    CHECK(eval_f_local(f, c1, c2, x) == want);
  }
}

TEST_CASE("path following on a cut instance still reaches a solution") {
  YFixture fx = YFixture::make();
  FollowResult fr = follow_path(fx.field, fx.field.params.h / 4, fx.field.params.delta / 10);
  REQUIRE(fr.converged);
  std::uint64_t dv = decode_point_tuple(fr.point, Tuple::first, fx.field.code).msg.to_uint();
  bool sol = false;
  for (const auto& [v, role] : fx.inst.solution_list)
    if (v == unpack_id(dv, 2)) sol = true;
  CHECK(sol);
}

TEST_CASE("follow rejects oversized steps") {
  Fixture fx = Fixture::demo_n1();
  CHECK_THROWS_AS(follow_path(fx.field, fx.field.params.h, 1e-7), std::invalid_argument);
}

TEST_CASE("field construction rejects mismatched codes") {
  LineInstance inst = make_instance_from_permutation(1, {0, 1}, Kind::EOTL);
  BinaryCode wrong = build_code(4, 0.4, 4);  // message width 4 != packed width 3
  CHECK_THROWS_AS(build_field(inst, wrong, GeometryParams::demo_profile()),
                  std::invalid_argument);
}

TEST_CASE("out-of-cube points are rejected") {
  Fixture fx = Fixture::demo_n1();
  Point x(fx.field.dim, 0.0);
  x[0] = 2.5;
  CHECK_THROWS_AS(eval_f(fx.field, x), std::invalid_argument);
}

TEST_CASE("path following converges for every kind at n=2") {
  for (Kind kind : {Kind::EOTL, Kind::X, Kind::Z, Kind::Y}) {
    LineInstance inst = gen_instance(kind, 2, 17);
    BinaryCode code = build_code(6, 0.25, 42);
    BrouwerField f = build_field(inst, code, GeometryParams::demo_profile());
    FollowResult fr = follow_path(f, f.params.h / 4, f.params.delta / 10);
    REQUIRE(fr.converged);
    std::uint64_t dv = decode_point_tuple(fr.point, Tuple::first, f.code).msg.to_uint();
    bool sol = false;
    for (const auto& [v, role] : inst.solution_list)
      if (v == unpack_id(dv, 2)) sol = true;
    CHECK(sol);
  }
}

TEST_CASE("path following is robust across seeds and kinds") {
  for (Kind kind : {Kind::EOTL, Kind::Y}) {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
      LineInstance inst = gen_instance(kind, 2, seed);
      BinaryCode code = build_code(6, 0.25, 42);
      BrouwerField f = build_field(inst, code, GeometryParams::demo_profile());
      FollowResult fr = follow_path(f, f.params.h / 4, f.params.delta / 10);
      REQUIRE(fr.converged);
      std::uint64_t dv = decode_point_tuple(fr.point, Tuple::first, f.code).msg.to_uint();
      bool sol = false;
      for (const auto& [v, role] : inst.solution_list)
        if (v == unpack_id(dv, 2)) sol = true;
      CHECK(sol);
    }
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hardnash/arena2p.hpp"

using namespace hardnash;

namespace {

struct Fixture {
  LineInstance inst;
  BrouwerField field;
  SimEoalInput split;

  // eps = 0 selects the fine grid tied to delta; a positive eps pins a coarse
  // grid with exactly representable values for arithmetic-sensitive tests.
  static Fixture make(double eps = 0) {
    Fixture fx;
    fx.inst = make_instance_from_permutation(1, {0, 1}, Kind::EOTL);
    BinaryCode code = build_code(3, 0.5, 42);
    GridSpec grid = eps > 0 ? GridSpec::from_eps(eps) : grid_for_delta(1e-6);
    fx.field = build_field(fx.inst, code, GeometryParams::demo_profile(), grid);
    fx.split = split_instance(fx.inst, 16, 1234);
    fx.split.instance = &fx.inst;
    fx.field.instance = &fx.inst;
    return fx;
  }
};

}  // namespace

TEST_CASE("utility values at matching and mismatching profiles") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Point x(g.dim(), 0.0);
  auto [a, b] = profile_at(g, x);

  CHECK(utility(g, PlayerRole::alice, a, b) == 2.0);
  CHECK(utility(g, PlayerRole::bob, a, b) > 1.9);  // guesses right, tiny quadratic loss

  SUBCASE("one-coordinate offset costs the squared step") {
    BobAction b2 = b;
    b2.y_idx[0] += 1;
    double eps = g.grid.eps();
    double u = utility(g, PlayerRole::alice, a, b2);
    CHECK(u == doctest::Approx(2.0 - eps * eps / double(g.dim())).epsilon(1e-12));
  }

  SUBCASE("a wrong vertex guess loses its indicator") {
    BobAction bad = b;
    bad.vB = b.vB ^ 1u;
    bad.betaV = g.input->beta_at(bad.vB);
    double clean = utility(g, PlayerRole::bob, a, b);
    double broken = utility(g, PlayerRole::bob, a, bad);
    CHECK(clean - broken == 1.0);
  }

  SUBCASE("a wrong beta triple alone also zeroes the indicator") {
    BobAction bad = b;
    bad.betaV.t = (bad.betaV.t + 1) % g.input->M;
    CHECK(utility(g, PlayerRole::bob, a, b) - utility(g, PlayerRole::bob, a, bad) == 1.0);
  }
}

TEST_CASE("alice best response to a point mass imitates and decodes") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Point y = fx.field.anchor_point(fx.inst.lines[0][1]);
  auto [a0, b0] = profile_at(g, y);
  auto br = best_response_alice(g, Mixed<BobAction>::pure(b0));
  CHECK(br.action.x_idx == b0.y_idx);
  CHECK(br.action.iv == g.input->decomp(b0.vB, b0.betaV));
  CHECK(br.action.iw == g.input->decomp(b0.wB, b0.betaW));
  CHECK(br.value == 2.0);
}

TEST_CASE("alice x-part ties round toward -1 on a 50/50 mix") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Point base(g.dim(), 0.0);
  auto [a0, b0] = profile_at(g, base);
  BobAction b1 = b0;
  b1.y_idx[0] += 1;  // exactly one eps step; the mean lands on the half point
  Mixed<BobAction> B{{{b0, 0.5}, {b1, 0.5}}};
  auto br = best_response_alice(g, B);
  CHECK(br.action.x_idx[0] == b0.y_idx[0]);  // tie resolved toward -1
  for (int i = 1; i < g.dim(); ++i) CHECK(br.action.x_idx[i] == b0.y_idx[i]);
}

TEST_CASE("bob best response rounds the field image and announces the decode") {
  Fixture fx = Fixture::make();
  GameHandle2P g = make_game2p(fx.field, fx.split);
  const Segment& s = fx.field.segments[2];
  Point mid(g.dim());
  for (int i = 0; i < g.dim(); ++i)
    mid[i] = g.grid.round_value(s.a[i] + (s.len / 2) * s.dir[i]);
  auto [a, b_unused] = profile_at(g, mid);
  auto br = best_response_bob(g, Mixed<AliceAction>::pure(a));
  Point x = g.values(a.x_idx);
  Point fxp = eval_f(fx.field, x);
  CHECK(br.action.y_idx == g.indices(fxp));
  CHECK(br.action.vB == decode_point_tuple(x, Tuple::first, fx.field.code).msg.to_uint());
  CHECK(br.action.betaV == g.input->beta_at(br.action.vB));
}

TEST_CASE("candidate profile passes exact verification and decodes the solution") {
  Fixture fx = Fixture::make();
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Candidate2P cand = candidate_equilibrium(g);

  Report rep = verify_equilibrium(g, cand.alice, cand.bob, VerifyMode2P::exact);
  CHECK(rep.all_pass());
  // Both regrets are reported exactly zero.
  for (const auto& c : rep.checks)
    if (c.name == "alice-regret" || c.name == "bob-regret") CHECK(c.measured == "0");

  CHECK(decodes_to_solution(g, cand.decoded_vertex));
  Point fxp = eval_f(fx.field, cand.x);
  for (int i = 0; i < g.dim(); ++i)
    CHECK(g.grid.round_index(fxp[i]) == g.grid.round_index(cand.x[i]));

  SUBCASE("construction is deterministic") {
    Candidate2P again = candidate_equilibrium(g);
    CHECK(again.alice.atoms[0].first == cand.alice.atoms[0].first);
    CHECK(again.bob.atoms[0].first == cand.bob.atoms[0].first);
  }

  SUBCASE("corrupting the vertex guess is rejected with unit regret") {
    Mixed<BobAction> bad = cand.bob;
    bad.atoms[0].first.vB ^= 1u;
    bad.atoms[0].first.betaV = g.input->beta_at(bad.atoms[0].first.vB);
    Report r2 = verify_equilibrium(g, cand.alice, bad, VerifyMode2P::ane, 0.5);
    CHECK(!r2.all_pass());
    double ub = expected_utility(g, PlayerRole::bob, cand.alice, bad);
    double br = best_response_bob(g, cand.alice).value;
    CHECK(br - ub >= 0.9);
  }

  SUBCASE("a path-interior grid point is not a candidate") {
    const Segment& s = fx.field.segments[2];
    Point mid(g.dim());
    for (int i = 0; i < g.dim(); ++i)
      mid[i] = g.grid.round_value(s.a[i] + (s.len / 2) * s.dir[i]);
    auto [a, b] = profile_at(g, mid);
    Report r3 = verify_equilibrium(g, Mixed<AliceAction>::pure(a), Mixed<BobAction>::pure(b),
                                   VerifyMode2P::exact);
    CHECK(!r3.all_pass());
  }

  SUBCASE("pure profiles make the numeric modes agree") {
    Report r_ane = verify_equilibrium(g, cand.alice, cand.bob, VerifyMode2P::ane, 1e-9);
    Report r_wsne = verify_equilibrium(g, cand.alice, cand.bob, VerifyMode2P::wsne, 1e-9);
    CHECK(r_ane.all_pass());
    CHECK(r_wsne.all_pass());
  }
}

TEST_CASE("candidate construction requires the fine grid") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  CHECK_THROWS_AS(candidate_equilibrium(g), std::invalid_argument);
}

TEST_CASE("utilities touch only the owning side's data") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Point x(g.dim(), 0.25);
  auto [a, b] = profile_at(g, x);

  fx.split.reset_traces();
  utility(g, PlayerRole::alice, a, b);
  CHECK(fx.split.alpha_reads > 0);
  CHECK(fx.split.beta_reads == 0);

  fx.split.reset_traces();
  utility(g, PlayerRole::bob, a, b);
  CHECK(fx.split.beta_reads > 0);
  CHECK(fx.split.alpha_reads == 0);
}

TEST_CASE("structured best responses dominate sampled action slices") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Rng rng(5150);

  auto random_bob = [&]() {
    BobAction b;
    b.y_idx.resize(g.dim());
    for (auto& k : b.y_idx) k = std::int64_t(rng.below(std::uint64_t(g.grid.q + 1)));
    b.vB = rng.below(vertex_count(1));
    b.wB = rng.below(vertex_count(1));
    b.betaV = g.input->beta_at(b.vB);
    b.betaW = g.input->beta_at(b.wB);
    return b;
  };
  auto random_alice = [&]() {
    AliceAction a;
    a.x_idx.resize(g.dim());
    for (auto& k : a.x_idx) k = std::int64_t(rng.below(std::uint64_t(g.grid.q + 1)));
    int iv = int(rng.below(8)), iw = int(rng.below(8));
    a.iv = LineInfo{std::uint8_t(iv >> 2 & 1), std::uint8_t(iv >> 1 & 1), std::uint8_t(iv & 1)};
    a.iw = LineInfo{std::uint8_t(iw >> 2 & 1), std::uint8_t(iw >> 1 & 1), std::uint8_t(iw & 1)};
    return a;
  };

  // 100 random sparse opponents; the slice holding the structured argmax plus
  // a thousand random actions never beats it.
  for (int trial = 0; trial < 100; ++trial) {
    int support = 1 + int(rng.below(3));
    if (trial % 2 == 0) {
      Mixed<BobAction> B;
      for (int i = 0; i < support; ++i) B.atoms.emplace_back(random_bob(), 1.0 / support);
      auto br = best_response_alice(g, B);
      double best = br.value;
      CHECK(expected_utility(g, PlayerRole::alice, Mixed<AliceAction>::pure(br.action), B) ==
            doctest::Approx(best).epsilon(1e-12));
      bool dominated = true;
      for (int k = 0; k < 1000; ++k)
        dominated &= expected_utility(g, PlayerRole::alice,
                                      Mixed<AliceAction>::pure(random_alice()), B) <= best + 1e-12;
      CHECK(dominated);
    } else {
      Mixed<AliceAction> A;
      for (int i = 0; i < support; ++i) A.atoms.emplace_back(random_alice(), 1.0 / support);
      auto brb = best_response_bob(g, A);
      double bestb = brb.value;
      CHECK(expected_utility(g, PlayerRole::bob, A, Mixed<BobAction>::pure(brb.action)) ==
            doctest::Approx(bestb).epsilon(1e-12));
      bool dominated = true;
      for (int k = 0; k < 1000; ++k)
        dominated &= expected_utility(g, PlayerRole::bob, A,
                                      Mixed<BobAction>::pure(random_bob())) <= bestb + 1e-12;
      CHECK(dominated);
    }
  }
}

TEST_CASE("strategy files round trip") {
  Fixture fx = Fixture::make();
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Candidate2P cand = candidate_equilibrium(g);
  auto [A, B] = deserialize_profile2p(serialize_profile2p(cand.alice, cand.bob));
  CHECK(A.atoms[0].first == cand.alice.atoms[0].first);
  CHECK(B.atoms[0].first == cand.bob.atoms[0].first);
}

TEST_CASE("mixed strategies verify numerically") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Point base(g.dim(), 0.0);
  auto [a0, b0] = profile_at(g, base);
  AliceAction a1 = a0;
  a1.x_idx[0] += 1;
  BobAction b1 = b0;
  b1.y_idx[0] += 1;

  Mixed<AliceAction> A{{{a0, 0.5}, {a1, 0.5}}};
  Mixed<BobAction> B{{{b0, 0.5}, {b1, 0.5}}};
  double eps = g.grid.eps();

  // Against this mix each player loses at most one eps step per coordinate:
  // regret is bounded by eps^2 and the profile is an ANE at that threshold.
  Report loose = verify_equilibrium(g, A, B, VerifyMode2P::ane, eps * eps);
  CHECK(loose.all_pass());
  // But it is not exact: the x-part best response is a single grid point.
  Report strict = verify_equilibrium(g, A, B, VerifyMode2P::ane, 1e-18);
  CHECK(!strict.all_pass());

  // WSNE at the same loose threshold also passes: both support actions sit
  // within one step of the rounded mean.
  Report wsne = verify_equilibrium(g, A, B, VerifyMode2P::wsne, eps * eps);
  CHECK(wsne.all_pass());
}

TEST_CASE("strategy validation rejects malformed mixtures") {
  Fixture fx = Fixture::make(0.25);
  GameHandle2P g = make_game2p(fx.field, fx.split);
  Point base(g.dim(), 0.0);
  auto [a0, b0] = profile_at(g, base);
  Mixed<BobAction> empty;
  CHECK_THROWS_AS(best_response_alice(g, empty), std::invalid_argument);
  Mixed<BobAction> off{{{b0, 0.6}}};
  CHECK_THROWS_AS(best_response_alice(g, off), std::invalid_argument);
  Mixed<BobAction> neg{{{b0, 1.5}, {b0, -0.5}}};
  CHECK_THROWS_AS(best_response_alice(g, neg), std::invalid_argument);

  BobAction out_of_range = b0;
  out_of_range.betaV.t = 99;
  CHECK_THROWS_AS(utility(g, PlayerRole::alice, a0, out_of_range), std::invalid_argument);
}

// Two-player imitation/guessing game over the embedded field: utility
// oracles bound to one side's private data, exact structured best responses,
// equilibrium verifiers, and the candidate profile built from a followed
// fixed point.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardnash/brouwer.hpp"
#include "hardnash/codec.hpp"
#include "hardnash/commsim.hpp"
#include "hardnash/report.hpp"

namespace hardnash {

struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AliceAction {
  std::vector<std::int64_t> x_idx;  // grid indices, one per coordinate
  LineInfo iv, iw;

  bool operator==(const AliceAction& o) const {
    return x_idx == o.x_idx && iv == o.iv && iw == o.iw;
  }
  auto order_key() const { return std::tuple(x_idx, iv.as_int(), iw.as_int()); }
};

struct BobAction {
  std::vector<std::int64_t> y_idx;
  std::uint64_t vB = 0, wB = 0;  // packed vertex ids
  BetaTriple betaV, betaW;

  bool operator==(const BobAction& o) const {
    return y_idx == o.y_idx && vB == o.vB && wB == o.wB && betaV == o.betaV && betaW == o.betaW;
  }
  auto order_key() const {
    return std::tuple(y_idx, vB, wB, betaV.t, betaV.s, betaV.p, betaW.t, betaW.s, betaW.p);
  }
};

template <typename A>
struct Mixed {
  std::vector<std::pair<A, double>> atoms;

  static Mixed pure(A a) { return Mixed{{{std::move(a), 1.0}}}; }
  bool is_pure() const { return atoms.size() == 1; }
  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("empty strategy support");
    if (atoms.size() > 10000) throw std::invalid_argument("strategy support too large");
    double s = 0;
    for (const auto& [a, p] : atoms) {
      if (!(p > 0)) throw std::invalid_argument("nonpositive probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
  }
};

enum class PlayerRole { alice, bob };

struct GameHandle2P {
  const BrouwerField* field = nullptr;
  GridSpec grid;
  const SimEoalInput* input = nullptr;

  int dim() const { return field->dim; }
  Point values(const std::vector<std::int64_t>& idx) const {
    Point p(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) p[i] = grid.value(idx[i]);
    return p;
  }
  std::vector<std::int64_t> indices(std::span<const double> x) const {
    std::vector<std::int64_t> k(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) k[i] = grid.round_index(x[i]);
    return k;
  }
  void check_actions(const AliceAction& a, const BobAction& b) const {
    if ((int)a.x_idx.size() != dim() || (int)b.y_idx.size() != dim())
      throw std::invalid_argument("action dimension mismatch");
    for (auto k : a.x_idx)
      if (k < 0 || k > grid.q) throw std::invalid_argument("x index out of grid");
    for (auto k : b.y_idx)
      if (k < 0 || k > grid.q) throw std::invalid_argument("y index out of grid");
    std::uint64_t nv = id_space(field->instance->n);
    if (b.vB >= nv || b.wB >= nv) throw std::invalid_argument("vertex id out of range");
    for (int v : {b.betaV.t, b.betaV.s, b.betaV.p, b.betaW.t, b.betaW.s, b.betaW.p})
      if (v < 0 || v >= input->M) throw std::invalid_argument("beta index out of range");
  }
};

inline GameHandle2P make_game2p(const BrouwerField& field, const SimEoalInput& input) {
  if (!field.grid) throw std::invalid_argument("game needs a field with an attached grid");
  return GameHandle2P{&field, *field.grid, &input};
}

// Alice reads only the vector side (through decomp); Bob reads only the index
// side plus the public announcements.
inline double utility(const GameHandle2P& g, PlayerRole role, const AliceAction& a,
                      const BobAction& b) {
  g.check_actions(a, b);
  Point x = g.values(a.x_idx);
  Point y = g.values(b.y_idx);
  if (role == PlayerRole::alice) {
    double d = dist2(x, y);
    double u = -d * d;
    if (g.input->decomp(b.vB, b.betaV) == a.iv) u += 1.0;
    if (g.input->decomp(b.wB, b.betaW) == a.iw) u += 1.0;
    return u;
  }
  Point fx = eval_f_local(*g.field, a.iv, a.iw, x);
  double d = dist2(fx, y);
  double u = -d * d;
  std::uint64_t dv = decode_point_tuple(x, Tuple::first, g.field->code).msg.to_uint();
  std::uint64_t dw = decode_point_tuple(x, Tuple::second, g.field->code).msg.to_uint();
  if (b.vB == dv && b.betaV == g.input->beta_at(dv)) u += 1.0;
  if (b.wB == dw && b.betaW == g.input->beta_at(dw)) u += 1.0;
  return u;
}

template <typename A>
struct BestResponse {
  A action;
  double value = 0;
};

namespace detail {

// Mode of a discrete distribution with ties to the smallest key.
template <typename K>
K modal_key(const std::map<K, double>& mass) {
  K best{};
  double best_p = -1;
  for (const auto& [k, p] : mass)
    if (p > best_p + 1e-15) {
      best_p = p;
      best = k;
    }
  return best;
}

}  // namespace detail

// Exact structured best responses from additive separability: the point part
// rounds the opponent's mean, the guess parts take the modal target.
inline BestResponse<AliceAction> best_response_alice(const GameHandle2P& g,
                                                     const Mixed<BobAction>& B) {
  B.validate();
  const int dim = g.dim();
  std::vector<double> ey(dim, 0.0);
  std::vector<Point> ys;
  ys.reserve(B.atoms.size());
  std::map<int, double> mv, mw;
  for (const auto& [b, p] : B.atoms) {
    ys.push_back(g.values(b.y_idx));
    for (int i = 0; i < dim; ++i) ey[i] += p * ys.back()[i];
    mv[g.input->decomp(b.vB, b.betaV).as_int()] += p;
    mw[g.input->decomp(b.wB, b.betaW).as_int()] += p;
  }
  AliceAction a;
  a.x_idx.resize(dim);
  for (int i = 0; i < dim; ++i) a.x_idx[i] = g.grid.round_index(ey[i]);
  Point xv = g.values(a.x_idx);
  double imit = 0;
  for (std::size_t k = 0; k < B.atoms.size(); ++k) {
    double d = dist2(xv, ys[k]);
    imit += B.atoms[k].second * d * d;
  }
  int kv = detail::modal_key(mv), kw = detail::modal_key(mw);
  a.iv = LineInfo{std::uint8_t((kv >> 2) & 1), std::uint8_t((kv >> 1) & 1), std::uint8_t(kv & 1)};
  a.iw = LineInfo{std::uint8_t((kw >> 2) & 1), std::uint8_t((kw >> 1) & 1), std::uint8_t(kw & 1)};
  return {a, -imit + mv[kv] + mw[kw]};
}

inline BestResponse<BobAction> best_response_bob(const GameHandle2P& g,
                                                 const Mixed<AliceAction>& A) {
  A.validate();
  const int dim = g.dim();
  std::vector<double> ef(dim, 0.0);
  std::vector<Point> fxs;
  fxs.reserve(A.atoms.size());
  using Guess = std::tuple<std::uint64_t, int, int, int>;
  std::map<Guess, double> mv, mw;
  for (const auto& [a, p] : A.atoms) {
    Point x = g.values(a.x_idx);
    fxs.push_back(eval_f_local(*g.field, a.iv, a.iw, x));
    for (int i = 0; i < dim; ++i) ef[i] += p * fxs.back()[i];
    std::uint64_t dv = decode_point_tuple(x, Tuple::first, g.field->code).msg.to_uint();
    std::uint64_t dw = decode_point_tuple(x, Tuple::second, g.field->code).msg.to_uint();
    BetaTriple tv = g.input->beta_at(dv), tw = g.input->beta_at(dw);
    mv[Guess{dv, tv.t, tv.s, tv.p}] += p;
    mw[Guess{dw, tw.t, tw.s, tw.p}] += p;
  }
  BobAction b;
  b.y_idx.resize(dim);
  for (int i = 0; i < dim; ++i) b.y_idx[i] = g.grid.round_index(ef[i]);
  Point yv = g.values(b.y_idx);
  double brw = 0;
  for (std::size_t k = 0; k < A.atoms.size(); ++k) {
    double d = dist2(fxs[k], yv);
    brw += A.atoms[k].second * d * d;
  }
  Guess gv = detail::modal_key(mv), gw = detail::modal_key(mw);
  b.vB = std::get<0>(gv);
  b.betaV = BetaTriple{std::get<1>(gv), std::get<2>(gv), std::get<3>(gv)};
  b.wB = std::get<0>(gw);
  b.betaW = BetaTriple{std::get<1>(gw), std::get<2>(gw), std::get<3>(gw)};
  return {b, -brw + mv[gv] + mw[gw]};
}

inline double expected_utility(const GameHandle2P& g, PlayerRole role, const Mixed<AliceAction>& A,
                               const Mixed<BobAction>& B) {
  if (A.atoms.size() * B.atoms.size() > 1000000)
    throw std::invalid_argument("joint support too large");
  double u = 0;
  for (const auto& [a, pa] : A.atoms)
    for (const auto& [b, pb] : B.atoms) u += pa * pb * utility(g, role, a, b);
  return u;
}

enum class VerifyMode2P { ane, wsne, exact };

// exact mode certifies a pure profile by structural equality with the exact
// best response, immune to floating-point regret noise; numeric modes compare
// expected utilities against the best-response value.
inline Report verify_equilibrium(const GameHandle2P& g, const Mixed<AliceAction>& A,
                                 const Mixed<BobAction>& B, VerifyMode2P mode,
                                 double eps_prime = 0.0) {
  A.validate();
  B.validate();
  Report rep;
  rep.command = "game2p-verify";
  rep.config_kv("mode", mode == VerifyMode2P::ane    ? "ane"
                        : mode == VerifyMode2P::wsne ? "wsne"
                                                     : "exact");
  rep.config_kv("eps_prime", fmt_double(eps_prime));

  BestResponse<AliceAction> bra = best_response_alice(g, B);
  BestResponse<BobAction> brb = best_response_bob(g, A);
  double ua = expected_utility(g, PlayerRole::alice, A, B);
  double ub = expected_utility(g, PlayerRole::bob, A, B);
  double regret_a = bra.value - ua;
  double regret_b = brb.value - ub;
  rep.add(CheckEntry{"alice-regret", fmt_double(regret_a), fmt_double(eps_prime),
                     mode == VerifyMode2P::exact || regret_a <= eps_prime, ""});
  rep.add(CheckEntry{"bob-regret", fmt_double(regret_b), fmt_double(eps_prime),
                     mode == VerifyMode2P::exact || regret_b <= eps_prime, ""});

  if (mode == VerifyMode2P::wsne) {
    bool ok = true;
    for (const auto& [a, p] : A.atoms)
      if (expected_utility(g, PlayerRole::alice, Mixed<AliceAction>::pure(a), B) <
          bra.value - eps_prime)
        ok = false;
    for (const auto& [b, p] : B.atoms)
      if (expected_utility(g, PlayerRole::bob, A, Mixed<BobAction>::pure(b)) <
          brb.value - eps_prime)
        ok = false;
    rep.add(CheckEntry::flag("support-actions-near-best", ok));
  }
  if (mode == VerifyMode2P::exact) {
    bool pure = A.is_pure() && B.is_pure();
    rep.add(CheckEntry::flag("profile-pure", pure));
    bool alice_argmax = pure && A.atoms[0].first == bra.action;
    bool bob_argmax = pure && B.atoms[0].first == brb.action;
    rep.add(CheckEntry::flag("alice-argmax-equality", alice_argmax));
    rep.add(CheckEntry::flag("bob-argmax-equality", bob_argmax));
  }
  return rep;
}

// The truthful pure profile anchored at a grid point: both players play the
// point, Bob announces the decoded vertices with their true index triples,
// Alice announces the matching decompositions.
inline std::pair<AliceAction, BobAction> profile_at(const GameHandle2P& g,
                                                    std::span<const double> x_on_grid) {
  AliceAction a;
  BobAction b;
  a.x_idx = g.indices(x_on_grid);
  b.y_idx = a.x_idx;
  Point x = g.values(a.x_idx);
  b.vB = decode_point_tuple(x, Tuple::first, g.field->code).msg.to_uint();
  b.wB = decode_point_tuple(x, Tuple::second, g.field->code).msg.to_uint();
  b.betaV = g.input->beta_at(b.vB);
  b.betaW = g.input->beta_at(b.wB);
  a.iv = g.input->decomp(b.vB, b.betaV);
  a.iw = g.input->decomp(b.wB, b.betaW);
  return {a, b};
}

struct Candidate2P {
  Mixed<AliceAction> alice;
  Mixed<BobAction> bob;
  Point x;                 // the common grid point
  std::uint64_t decoded_vertex = 0;
  double residual = 0;     // ||f(x) - x|| at the grid point
};

// Follows the displacement field to a fixed point, snaps to the grid, and
// requires the snap to be a rounding fixed point of f.
inline Candidate2P candidate_equilibrium(const GameHandle2P& g) {
  const BrouwerField& f = *g.field;
  if (g.grid.eps() > f.params.delta / 4)
    throw std::invalid_argument("candidate needs grid eps <= delta/4");

  FollowResult fr = follow_path(f, f.params.h / 4, f.params.delta * 1e-6);
  if (!fr.converged && fr.residual > f.params.delta / 10)
    throw NotFound("no approximate fixed point found; best residual " + fmt_double(fr.residual));

  auto try_point = [&](const std::vector<std::int64_t>& idx, double& out_res) {
    Point xg = g.values(idx);
    Point fx = eval_f(f, xg);
    out_res = dist2(fx, xg);
    for (int i = 0; i < f.dim; ++i)
      if (g.grid.round_index(fx[i]) != idx[i]) return false;
    return true;
  };

  std::vector<std::int64_t> idx = g.indices(fr.point);
  double res = 0;
  bool ok = try_point(idx, res);
  double best_res = res;
  if (!ok) {
    // Nudge the coordinates whose images land in a different cell.
    Point xg = g.values(idx);
    Point fx = eval_f(f, xg);
    std::vector<int> off;
    for (int i = 0; i < f.dim && (int)off.size() <= 4; ++i)
      if (g.grid.round_index(fx[i]) != idx[i]) off.push_back(i);
    if (off.size() <= 4) {
      std::vector<std::int64_t> cand = idx;
      for (std::uint32_t massk = 1; massk < (1u << (2 * off.size())); ++massk) {
        cand = idx;
        for (std::size_t k = 0; k < off.size(); ++k) {
          int mv = int((massk >> (2 * k)) & 3u) - 1;  // -1, 0, +1
          cand[off[k]] = std::clamp<std::int64_t>(idx[off[k]] + mv, 0, g.grid.q);
        }
        if (try_point(cand, res)) {
          idx = cand;
          ok = true;
          break;
        }
        best_res = std::min(best_res, res);
      }
    }
  }
  if (!ok)
    throw NotFound("no grid rounding fixed point near the followed point; best residual " +
                   fmt_double(best_res));

  Point xg = g.values(idx);
  auto [a, b] = profile_at(g, xg);
  Candidate2P cand;
  cand.alice = Mixed<AliceAction>::pure(std::move(a));
  cand.bob = Mixed<BobAction>::pure(std::move(b));
  cand.x = std::move(xg);
  cand.decoded_vertex = cand.bob.atoms[0].first.vB;
  cand.residual = dist2(eval_f(f, cand.x), cand.x);
  return cand;
}

inline bool decodes_to_solution(const GameHandle2P& g, std::uint64_t vid) {
  Vertex v = unpack_id(vid, g.field->instance->n);
  for (const auto& [s, role] : g.field->instance->solution_list)
    if (s == v) return true;
  return false;
}

// --- strategy files ----------------------------------------------------------------

inline nlohmann::json alice_to_json(const AliceAction& a) {
  return nlohmann::json{{"x", a.x_idx},
                        {"iv", {a.iv.t, a.iv.s, a.iv.p}},
                        {"iw", {a.iw.t, a.iw.s, a.iw.p}}};
}

inline nlohmann::json bob_to_json(const BobAction& b) {
  return nlohmann::json{{"y", b.y_idx},
                        {"v", b.vB},
                        {"w", b.wB},
                        {"beta_v", {b.betaV.t, b.betaV.s, b.betaV.p}},
                        {"beta_w", {b.betaW.t, b.betaW.s, b.betaW.p}}};
}

inline AliceAction alice_from_json(const nlohmann::json& j) {
  AliceAction a;
  a.x_idx = j.at("x").get<std::vector<std::int64_t>>();
  auto iv = j.at("iv"), iw = j.at("iw");
  a.iv = LineInfo{iv[0].get<std::uint8_t>(), iv[1].get<std::uint8_t>(), iv[2].get<std::uint8_t>()};
  a.iw = LineInfo{iw[0].get<std::uint8_t>(), iw[1].get<std::uint8_t>(), iw[2].get<std::uint8_t>()};
  return a;
}

inline BobAction bob_from_json(const nlohmann::json& j) {
  BobAction b;
  b.y_idx = j.at("y").get<std::vector<std::int64_t>>();
  b.vB = j.at("v").get<std::uint64_t>();
  b.wB = j.at("w").get<std::uint64_t>();
  auto bv = j.at("beta_v"), bw = j.at("beta_w");
  b.betaV = BetaTriple{bv[0].get<int>(), bv[1].get<int>(), bv[2].get<int>()};
  b.betaW = BetaTriple{bw[0].get<int>(), bw[1].get<int>(), bw[2].get<int>()};
  return b;
}

template <typename A>
nlohmann::json mixed_to_json(const Mixed<A>& s,
                             nlohmann::json (*conv)(const A&)) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& [a, p] : s.atoms) atoms.push_back({{"action", conv(a)}, {"p", p}});
  return atoms;
}

inline std::string serialize_profile2p(const Mixed<AliceAction>& A, const Mixed<BobAction>& B) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["alice"] = mixed_to_json(A, alice_to_json);
  j["bob"] = mixed_to_json(B, bob_to_json);
  return j.dump(2) + "\n";
}

inline std::pair<Mixed<AliceAction>, Mixed<BobAction>> deserialize_profile2p(
    const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format_version").get<std::string>() != kFormatVersion)
    throw std::runtime_error("unsupported profile format version");
  Mixed<AliceAction> A;
  Mixed<BobAction> B;
  for (const auto& atom : j.at("alice"))
    A.atoms.emplace_back(alice_from_json(atom.at("action")), atom.at("p").get<double>());
  for (const auto& atom : j.at("bob"))
    B.atoms.emplace_back(bob_from_json(atom.at("action")), atom.at("p").get<double>());
  A.validate();
  B.validate();
  return {std::move(A), std::move(B)};
}

}  // namespace hardnash

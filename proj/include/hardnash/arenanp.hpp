// Binary-action population game: unary point populations with realized
// numbers, code-hardened guessing populations for vertices, index triples and
// announced line information, per-player utilities, profile lifting from
// two-player actions, and the weak equilibrium verifier.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardnash/arena2p.hpp"
#include "hardnash/brouwer.hpp"
#include "hardnash/codec.hpp"
#include "hardnash/commsim.hpp"
#include "hardnash/report.hpp"

namespace hardnash {

enum class PlayerKind { x, y, v, w, beta_v, beta_w, info_v, info_w };

inline const char* kind_name(PlayerKind k) {
  switch (k) {
    case PlayerKind::x: return "x";
    case PlayerKind::y: return "y";
    case PlayerKind::v: return "v";
    case PlayerKind::w: return "w";
    case PlayerKind::beta_v: return "beta_v";
    case PlayerKind::beta_w: return "beta_w";
    case PlayerKind::info_v: return "info_v";
    case PlayerKind::info_w: return "info_w";
  }
  return "?";
}

struct PlayerId {
  PlayerKind kind;
  int index;  // x/y: coordinate*q + slot; others: bit position in [0, mprime)

  int coord(std::int64_t q) const { return int(index / q); }
  std::int64_t slot(std::int64_t q) const { return index % q; }
};

struct GameHandleNP {
  const BrouwerField* field = nullptr;
  const SimEoalInput* input = nullptr;
  GridSpec grid;  // population grid; each coordinate has q slots below 2 plus a dummy at 2
  int mprime = 0;
  int beta_msg_bits = 0;  // 3 * ceil(log2 M)
  BinaryCode code_u, code_beta, code_info;

  int dim() const { return field->dim; }
  std::int64_t slots() const { return grid.q; }
  int players_per_kind() const { return mprime; }
  int total_players() const { return 8 * mprime; }

  PlayerId player(int flat) const {
    return PlayerId{PlayerKind(flat / mprime), flat % mprime};
  }
};

// All three guessing codes share block length m' = 4m * q so every kind has
// the same population size.
inline GameHandleNP make_gamenp(const BrouwerField& field, const SimEoalInput& input,
                                const GridSpec& grid, std::uint64_t seed,
                                double code_target = 0.25) {
  GameHandleNP g;
  g.field = &field;
  g.input = &input;
  g.grid = grid;
  g.mprime = int(std::int64_t(field.dim) * grid.q);
  g.beta_msg_bits = 3 * bits_for_index(input.M);
  if (g.mprime <= g.beta_msg_bits)
    throw std::invalid_argument("population size must exceed the beta message width");
  int kappa_u = packed_width(field.instance->n);
  g.code_u = build_code_fixed(kappa_u, g.mprime, code_target, seed ^ 0xa1);
  g.code_beta = build_code_fixed(g.beta_msg_bits, g.mprime, code_target, seed ^ 0xa2);
  g.code_info = build_code_fixed(3, g.mprime, code_target, seed ^ 0xa3);
  return g;
}

// Pure action profile. x/y bits: position i*q+k, 1 means the player at slot k
// of coordinate i plays its own value, 0 means value(k+1). Guessing kinds
// store the announced bit per position. The per-coordinate dummy at value 2 is
// implicit and fixed.
struct ProfileNP {
  std::vector<std::uint8_t> x_bits, y_bits;
  std::vector<std::uint8_t> v_bits, w_bits, beta_v_bits, beta_w_bits, info_v_bits, info_w_bits;

  std::vector<std::uint8_t>& of(PlayerKind k) {
    switch (k) {
      case PlayerKind::x: return x_bits;
      case PlayerKind::y: return y_bits;
      case PlayerKind::v: return v_bits;
      case PlayerKind::w: return w_bits;
      case PlayerKind::beta_v: return beta_v_bits;
      case PlayerKind::beta_w: return beta_w_bits;
      case PlayerKind::info_v: return info_v_bits;
      case PlayerKind::info_w: return info_w_bits;
    }
    throw std::logic_error("bad kind");
  }
  const std::vector<std::uint8_t>& of(PlayerKind k) const {
    return const_cast<ProfileNP*>(this)->of(k);
  }
};

// Independent per-player mixtures: probability of bit 1 per position.
struct MixedProfileNP {
  std::vector<double> x_p, y_p, v_p, w_p, beta_v_p, beta_w_p, info_v_p, info_w_p;

  static MixedProfileNP from_pure(const ProfileNP& p) {
    auto conv = [](const std::vector<std::uint8_t>& b) {
      std::vector<double> out(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] ? 1.0 : 0.0;
      return out;
    };
    return MixedProfileNP{conv(p.x_bits),      conv(p.y_bits),      conv(p.v_bits),
                          conv(p.w_bits),      conv(p.beta_v_bits), conv(p.beta_w_bits),
                          conv(p.info_v_bits), conv(p.info_w_bits)};
  }
  const std::vector<double>& of(PlayerKind k) const {
    switch (k) {
      case PlayerKind::x: return x_p;
      case PlayerKind::y: return y_p;
      case PlayerKind::v: return v_p;
      case PlayerKind::w: return w_p;
      case PlayerKind::beta_v: return beta_v_p;
      case PlayerKind::beta_w: return beta_w_p;
      case PlayerKind::info_v: return info_v_p;
      case PlayerKind::info_w: return info_w_p;
    }
    throw std::logic_error("bad kind");
  }
};

// Realized number of one coordinate's column: the minimal slot whose player
// plays its own value; the dummy guarantees 2.
inline std::int64_t realized_index(const GameHandleNP& g, const std::vector<std::uint8_t>& bits,
                                   int coord) {
  const std::int64_t q = g.slots();
  for (std::int64_t k = 0; k < q; ++k)
    if (bits[std::size_t(coord) * q + k]) return k;
  return q;
}

inline Point realized_point(const GameHandleNP& g, const std::vector<std::uint8_t>& bits) {
  Point p(g.dim());
  for (int i = 0; i < g.dim(); ++i) p[i] = g.grid.value(realized_index(g, bits, i));
  return p;
}

inline BitWord bits_to_word(const std::vector<std::uint8_t>& bits) {
  BitWord w(int(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) w.set(int(i), bits[i] != 0);
  return w;
}

inline BetaTriple beta_from_msg(std::uint64_t msg, int idx_bits) {
  int mask = (1 << idx_bits) - 1;
  return BetaTriple{int(msg & mask), int((msg >> idx_bits) & mask),
                    int((msg >> (2 * idx_bits)) & mask)};
}

inline std::uint64_t beta_to_msg(const BetaTriple& b, int idx_bits) {
  return std::uint64_t(b.t) | (std::uint64_t(b.s) << idx_bits) |
         (std::uint64_t(b.p) << (2 * idx_bits));
}

// Everything a player's utility can depend on besides that player's own bit.
// No utility depends on its own player's action through this state, so a
// single evaluation serves both actions of every player.
struct DerivedNP {
  std::vector<std::int64_t> rx_idx, ry_idx;
  Point rx, ry;
  std::uint64_t dec_v = 0, dec_w = 0;  // decoded vertices of the realized x-point
  BitWord target_v, target_w;          // E_u images of the decoded vertices
  BitWord target_beta_v, target_beta_w;
  std::uint64_t vbar = 0, wbar = 0;    // decoded announcements of the v/w populations
  BetaTriple beta_v_bar, beta_w_bar;   // decoded announcements of the beta populations
  BitWord target_info_v, target_info_w;
  LineInfo info_v_bar, info_w_bar;     // decoded announcements of the info populations
  Point f_target;
};

inline DerivedNP derive_np(const GameHandleNP& g, const ProfileNP& prof) {
  DerivedNP d;
  const int dim = g.dim();
  d.rx_idx.resize(dim);
  d.ry_idx.resize(dim);
  d.rx.resize(dim);
  d.ry.resize(dim);
  for (int i = 0; i < dim; ++i) {
    d.rx_idx[i] = realized_index(g, prof.x_bits, i);
    d.ry_idx[i] = realized_index(g, prof.y_bits, i);
    d.rx[i] = g.grid.value(d.rx_idx[i]);
    d.ry[i] = g.grid.value(d.ry_idx[i]);
  }
  const int idx_bits = bits_for_index(g.input->M);
  d.dec_v = decode_point_tuple(d.rx, Tuple::first, g.field->code).msg.to_uint();
  d.dec_w = decode_point_tuple(d.rx, Tuple::second, g.field->code).msg.to_uint();
  d.target_v = encode(g.code_u, d.dec_v);
  d.target_w = encode(g.code_u, d.dec_w);
  d.target_beta_v = encode(g.code_beta, beta_to_msg(g.input->beta_at(d.dec_v), idx_bits));
  d.target_beta_w = encode(g.code_beta, beta_to_msg(g.input->beta_at(d.dec_w), idx_bits));

  d.vbar = decode(g.code_u, bits_to_word(prof.v_bits)).msg.to_uint();
  d.wbar = decode(g.code_u, bits_to_word(prof.w_bits)).msg.to_uint();
  d.beta_v_bar = beta_from_msg(decode(g.code_beta, bits_to_word(prof.beta_v_bits)).msg.to_uint(),
                               idx_bits);
  d.beta_w_bar = beta_from_msg(decode(g.code_beta, bits_to_word(prof.beta_w_bits)).msg.to_uint(),
                               idx_bits);
  LineInfo iv = g.input->decomp(d.vbar, d.beta_v_bar);
  LineInfo iw = g.input->decomp(d.wbar, d.beta_w_bar);
  d.target_info_v = encode(g.code_info, std::uint64_t(iv.as_int()));
  d.target_info_w = encode(g.code_info, std::uint64_t(iw.as_int()));

  auto dec_info = [&](const std::vector<std::uint8_t>& bits) {
    auto m = decode(g.code_info, bits_to_word(bits)).msg.to_uint();
    return LineInfo{std::uint8_t((m >> 2) & 1), std::uint8_t((m >> 1) & 1), std::uint8_t(m & 1)};
  };
  d.info_v_bar = dec_info(prof.info_v_bits);
  d.info_w_bar = dec_info(prof.info_w_bits);
  d.f_target = eval_f_local(*g.field, d.info_v_bar, d.info_w_bar, d.rx);
  return d;
}

// Utility of one player's chosen bit against the derived state of the others.
inline double np_utility_with(const GameHandleNP& g, const DerivedNP& d, PlayerId pid, bool bit) {
  const std::int64_t q = g.slots();
  switch (pid.kind) {
    case PlayerKind::x: {
      int coord = int(pid.index / q);
      std::int64_t slot = pid.index % q;
      double a = g.grid.value(bit ? slot : slot + 1);
      double diff = a - d.ry[coord];
      return -diff * diff;
    }
    case PlayerKind::y: {
      int coord = int(pid.index / q);
      std::int64_t slot = pid.index % q;
      double b = g.grid.value(bit ? slot : slot + 1);
      double diff = b - d.f_target[coord];
      return -diff * diff;
    }
    case PlayerKind::v: return bit == d.target_v.get(pid.index) ? 1.0 : 0.0;
    case PlayerKind::w: return bit == d.target_w.get(pid.index) ? 1.0 : 0.0;
    case PlayerKind::beta_v: return bit == d.target_beta_v.get(pid.index) ? 1.0 : 0.0;
    case PlayerKind::beta_w: return bit == d.target_beta_w.get(pid.index) ? 1.0 : 0.0;
    case PlayerKind::info_v: return bit == d.target_info_v.get(pid.index) ? 1.0 : 0.0;
    case PlayerKind::info_w: return bit == d.target_info_w.get(pid.index) ? 1.0 : 0.0;
  }
  throw std::logic_error("bad player kind");
}

// Single-player oracle. Each kind evaluates only its own dependency chain, so
// the x/info kinds never touch the index side and the y/v/w/beta kinds never
// touch the vector side.
inline double np_utility(const GameHandleNP& g, PlayerId pid, const ProfileNP& prof) {
  const std::int64_t q = g.slots();
  const bool bit = prof.of(pid.kind)[pid.index] != 0;
  const int idx_bits = bits_for_index(g.input->M);

  auto dec_info = [&](const std::vector<std::uint8_t>& bits) {
    auto m = decode(g.code_info, bits_to_word(bits)).msg.to_uint();
    return LineInfo{std::uint8_t((m >> 2) & 1), std::uint8_t((m >> 1) & 1), std::uint8_t(m & 1)};
  };

  switch (pid.kind) {
    case PlayerKind::x: {
      int coord = int(pid.index / q);
      double a = g.grid.value(bit ? pid.index % q : pid.index % q + 1);
      double r = g.grid.value(realized_index(g, prof.y_bits, coord));
      return -(a - r) * (a - r);
    }
    case PlayerKind::y: {
      int coord = int(pid.index / q);
      double b = g.grid.value(bit ? pid.index % q : pid.index % q + 1);
      Point rx = realized_point(g, prof.x_bits);
      Point ft = eval_f_local(*g.field, dec_info(prof.info_v_bits), dec_info(prof.info_w_bits), rx);
      return -(b - ft[coord]) * (b - ft[coord]);
    }
    case PlayerKind::v:
    case PlayerKind::w: {
      Point rx = realized_point(g, prof.x_bits);
      Tuple which = pid.kind == PlayerKind::v ? Tuple::first : Tuple::second;
      std::uint64_t dec = decode_point_tuple(rx, which, g.field->code).msg.to_uint();
      return bit == encode(g.code_u, dec).get(pid.index) ? 1.0 : 0.0;
    }
    case PlayerKind::beta_v:
    case PlayerKind::beta_w: {
      Point rx = realized_point(g, prof.x_bits);
      Tuple which = pid.kind == PlayerKind::beta_v ? Tuple::first : Tuple::second;
      std::uint64_t dec = decode_point_tuple(rx, which, g.field->code).msg.to_uint();
      BitWord target = encode(g.code_beta, beta_to_msg(g.input->beta_at(dec), idx_bits));
      return bit == target.get(pid.index) ? 1.0 : 0.0;
    }
    case PlayerKind::info_v:
    case PlayerKind::info_w: {
      const auto& vpop = pid.kind == PlayerKind::info_v ? prof.v_bits : prof.w_bits;
      const auto& bpop = pid.kind == PlayerKind::info_v ? prof.beta_v_bits : prof.beta_w_bits;
      std::uint64_t vbar = decode(g.code_u, bits_to_word(vpop)).msg.to_uint();
      BetaTriple bbar =
          beta_from_msg(decode(g.code_beta, bits_to_word(bpop)).msg.to_uint(), idx_bits);
      LineInfo target = g.input->decomp(vbar, bbar);
      return bit == encode(g.code_info, std::uint64_t(target.as_int())).get(pid.index) ? 1.0 : 0.0;
    }
  }
  throw std::logic_error("bad player kind");
}

// Unary threshold encoding of two-player actions: realized_point(lift(x)) = x
// exactly, and every guessing population carries the relevant encoding.
inline ProfileNP lift_profile(const GameHandleNP& g, const AliceAction& alice,
                              const BobAction& bob) {
  const std::int64_t q = g.slots();
  const int dim = g.dim();
  if ((int)alice.x_idx.size() != dim || (int)bob.y_idx.size() != dim)
    throw std::invalid_argument("lift_profile: action dimension mismatch");
  ProfileNP p;
  p.x_bits.assign(std::size_t(dim) * q, 0);
  p.y_bits.assign(std::size_t(dim) * q, 0);
  for (int i = 0; i < dim; ++i) {
    if (alice.x_idx[i] < 0 || alice.x_idx[i] > q || bob.y_idx[i] < 0 || bob.y_idx[i] > q)
      throw std::invalid_argument("lift_profile: index outside the population grid");
    for (std::int64_t k = 0; k < q; ++k) {
      p.x_bits[std::size_t(i) * q + k] = k >= alice.x_idx[i];
      p.y_bits[std::size_t(i) * q + k] = k >= bob.y_idx[i];
    }
  }
  const int idx_bits = bits_for_index(g.input->M);
  auto fill = [&](std::vector<std::uint8_t>& bits, const BitWord& w) {
    bits.resize(g.mprime);
    for (int i = 0; i < g.mprime; ++i) bits[i] = w.get(i);
  };
  fill(p.v_bits, encode(g.code_u, bob.vB));
  fill(p.w_bits, encode(g.code_u, bob.wB));
  fill(p.beta_v_bits, encode(g.code_beta, beta_to_msg(bob.betaV, idx_bits)));
  fill(p.beta_w_bits, encode(g.code_beta, beta_to_msg(bob.betaW, idx_bits)));
  fill(p.info_v_bits, encode(g.code_info, std::uint64_t(alice.iv.as_int())));
  fill(p.info_w_bits, encode(g.code_info, std::uint64_t(alice.iw.as_int())));
  return p;
}

struct WeakNashStats {
  double max_regret = 0;
  double violating_fraction = 0;
  std::uint64_t players = 0;
  std::uint64_t violators = 0;
};

// Exact exhaustive per-player deviation check for pure profiles: one derived
// state serves every player because no utility depends on its own bit through
// the derived data.
inline WeakNashStats weaknash_stats_pure(const GameHandleNP& g, const ProfileNP& prof,
                                         double eps_bar) {
  DerivedNP d = derive_np(g, prof);
  WeakNashStats st;
  st.players = std::uint64_t(g.total_players());
  for (int flat = 0; flat < g.total_players(); ++flat) {
    PlayerId pid = g.player(flat);
    bool played = prof.of(pid.kind)[pid.index] != 0;
    double u0 = np_utility_with(g, d, pid, played);
    double u1 = np_utility_with(g, d, pid, !played);
    double regret = std::max(0.0, u1 - u0);
    st.max_regret = std::max(st.max_regret, regret);
    if (regret > eps_bar) ++st.violators;
  }
  st.violating_fraction = double(st.violators) / double(st.players);
  return st;
}

inline Report verify_weaknash(const GameHandleNP& g, const ProfileNP& prof, double eps_bar) {
  WeakNashStats st = weaknash_stats_pure(g, prof, eps_bar);
  Report rep;
  rep.command = "gamenp-verify";
  rep.config_kv("eps_bar", fmt_double(eps_bar));
  rep.config_kv("players", std::to_string(st.players));
  rep.config_kv("mode", "pure-exact");
  rep.add(CheckEntry::num("max-player-regret", st.max_regret, eps_bar,
                          st.max_regret <= eps_bar || st.violating_fraction <= eps_bar));
  rep.add(CheckEntry::num("violating-fraction", st.violating_fraction, eps_bar,
                          st.violating_fraction <= eps_bar));
  return rep;
}

// Monte Carlo verifier for independent mixtures. Per sample of the others,
// max(u0,u1) - E_own[u] upper-bounds the player's deviation gain; its mean is
// a conservative regret estimate and its empirical standard error gives the
// widening radius (zero for degenerate mixtures, where the bound is exact).
inline Report verify_weaknash_mixed(const GameHandleNP& g, const MixedProfileNP& mix,
                                    double eps_bar, int samples, std::uint64_t seed) {
  if (samples < 100) throw std::invalid_argument("verify_weaknash: need at least 100 samples");
  const int nplayers = g.total_players();
  std::vector<double> acc(nplayers, 0.0), acc_sq(nplayers, 0.0);
  Rng rng(seed ^ 0x3ea14a54d11ull);

  for (int s = 0; s < samples; ++s) {
    ProfileNP prof;
    auto draw = [&](const std::vector<double>& p, std::vector<std::uint8_t>& bits) {
      bits.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) bits[i] = rng.uniform01() < p[i];
    };
    draw(mix.x_p, prof.x_bits);
    draw(mix.y_p, prof.y_bits);
    draw(mix.v_p, prof.v_bits);
    draw(mix.w_p, prof.w_bits);
    draw(mix.beta_v_p, prof.beta_v_bits);
    draw(mix.beta_w_p, prof.beta_w_bits);
    draw(mix.info_v_p, prof.info_v_bits);
    draw(mix.info_w_p, prof.info_w_bits);
    DerivedNP d = derive_np(g, prof);
    for (int flat = 0; flat < nplayers; ++flat) {
      PlayerId pid = g.player(flat);
      double u0 = np_utility_with(g, d, pid, false);
      double u1 = np_utility_with(g, d, pid, true);
      double p1 = mix.of(pid.kind)[pid.index];
      double gain = std::max(u0, u1) - (p1 * u1 + (1 - p1) * u0);
      acc[flat] += gain;
      acc_sq[flat] += gain * gain;
    }
  }

  std::uint64_t violators = 0;
  double max_regret = 0;
  for (int flat = 0; flat < nplayers; ++flat) {
    double mean = acc[flat] / samples;
    double var = std::max(0.0, acc_sq[flat] / samples - mean * mean);
    double conf = 3.0 * std::sqrt(var / samples);
    max_regret = std::max(max_regret, mean);
    if (mean + conf > eps_bar) ++violators;
  }
  double frac = double(violators) / double(nplayers);

  Report rep;
  rep.command = "gamenp-verify";
  rep.config_kv("eps_bar", fmt_double(eps_bar));
  rep.config_kv("samples", std::to_string(samples));
  
  rep.config_kv("mode", "mixed-montecarlo");
  rep.add(CheckEntry::num("max-player-regret", max_regret, eps_bar, frac <= eps_bar));
  rep.add(CheckEntry::num("widened-violating-fraction", frac, eps_bar, frac <= eps_bar));
  return rep;
}

// --- profile files ---------------------------------------------------------------

inline std::string serialize_profile_np(const GameHandleNP& g, const ProfileNP& p) {
  auto hex = [](const std::vector<std::uint8_t>& bits) {
    BitWord w(int(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) w.set(int(i), bits[i] != 0);
    return w.to_hex();
  };
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["mprime"] = g.mprime;
  j["q"] = g.grid.q;
  j["dim"] = g.dim();
  std::vector<std::int64_t> xt(g.dim()), yt(g.dim());
  for (int i = 0; i < g.dim(); ++i) {
    xt[i] = realized_index(g, p.x_bits, i);
    yt[i] = realized_index(g, p.y_bits, i);
  }
  j["x_thresholds"] = xt;
  j["y_thresholds"] = yt;
  j["x_bits"] = hex(p.x_bits);
  j["y_bits"] = hex(p.y_bits);
  j["v_bits"] = hex(p.v_bits);
  j["w_bits"] = hex(p.w_bits);
  j["beta_v_bits"] = hex(p.beta_v_bits);
  j["beta_w_bits"] = hex(p.beta_w_bits);
  j["info_v_bits"] = hex(p.info_v_bits);
  j["info_w_bits"] = hex(p.info_w_bits);
  return j.dump(2) + "\n";
}

inline ProfileNP deserialize_profile_np(const GameHandleNP& g, const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format_version").get<std::string>() != kFormatVersion)
    throw std::runtime_error("unsupported profile format version");
  if (j.at("mprime").get<int>() != g.mprime || j.at("q").get<std::int64_t>() != g.grid.q ||
      j.at("dim").get<int>() != g.dim())
    throw std::runtime_error("profile shape does not match the game");
  auto unhex = [](const std::string& s, int nbits) {
    BitWord w = BitWord::from_hex(s, nbits);
    std::vector<std::uint8_t> bits(nbits);
    for (int i = 0; i < nbits; ++i) bits[i] = w.get(i);
    return bits;
  };
  ProfileNP p;
  int colbits = int(g.dim() * g.grid.q);
  p.x_bits = unhex(j.at("x_bits").get<std::string>(), colbits);
  p.y_bits = unhex(j.at("y_bits").get<std::string>(), colbits);
  p.v_bits = unhex(j.at("v_bits").get<std::string>(), g.mprime);
  p.w_bits = unhex(j.at("w_bits").get<std::string>(), g.mprime);
  p.beta_v_bits = unhex(j.at("beta_v_bits").get<std::string>(), g.mprime);
  p.beta_w_bits = unhex(j.at("beta_w_bits").get<std::string>(), g.mprime);
  p.info_v_bits = unhex(j.at("info_v_bits").get<std::string>(), g.mprime);
  p.info_w_bits = unhex(j.at("info_w_bits").get<std::string>(), g.mprime);
  return p;
}

}  // namespace hardnash

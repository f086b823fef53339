// The index/vector input split and a two-party runner with exact bit
// accounting: local function evaluation and a line-walking baseline.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hardnash/bits.hpp"
#include "hardnash/brouwer.hpp"
#include "hardnash/lineworld.hpp"

namespace hardnash {

struct BetaTriple {
  int t = 0, s = 0, p = 0;
  bool operator==(const BetaTriple& o) const { return t == o.t && s == o.s && p == o.p; }
  bool operator!=(const BetaTriple& o) const { return !(*this == o); }
};

// One side holds three index-selected bit vectors per vertex, the other the
// three indices; the composition reproduces the oracle answers. Access
// counters trace which side a computation touched.
struct SimEoalInput {
  int M = 0;
  const LineInstance* instance = nullptr;

  struct AlphaTriple {
    std::vector<std::uint8_t> t, s, p;
  };
  std::unordered_map<std::uint64_t, AlphaTriple> alpha;
  std::unordered_map<std::uint64_t, BetaTriple> beta;
  mutable std::uint64_t alpha_reads = 0;
  mutable std::uint64_t beta_reads = 0;

  std::uint8_t alpha_bit(std::uint64_t vid, int kind, int idx) const {
    ++alpha_reads;
    const AlphaTriple& a = alpha.at(vid);
    const auto& vec = kind == 0 ? a.t : kind == 1 ? a.s : a.p;
    return vec.at(std::size_t(idx));
  }

  BetaTriple beta_at(std::uint64_t vid) const {
    ++beta_reads;
    return beta.at(vid);
  }

  // Alpha-side decomposition of an announced (vertex, index-triple) pair.
  LineInfo decomp(std::uint64_t vid, const BetaTriple& announced) const {
    LineInfo li;
    li.t = alpha_bit(vid, 0, announced.t);
    li.s = alpha_bit(vid, 1, announced.s);
    li.p = alpha_bit(vid, 2, announced.p);
    return li;
  }

  void reset_traces() const { alpha_reads = beta_reads = 0; }
};

// Filler for the alpha positions the beta indices never select. The seeded
// default is uniform; an adversarial filler can be swapped in.
using AlphaFiller = std::function<std::uint8_t(std::uint64_t vid, int kind, int idx)>;

// Seeded split: beta indices uniform, alpha vectors filled except the true
// bit at the beta position. The composition is re-checked over every id
// before returning.
inline SimEoalInput split_instance(const LineInstance& inst, int M, std::uint64_t seed,
                                   const AlphaFiller& filler = {}) {
  if (M < 2) throw std::invalid_argument("split_instance: M must be >= 2");
  SimEoalInput in;
  in.M = M;
  in.instance = &inst;
  Rng rng(seed ^ 0x51a7e0a1ull);
  const std::uint64_t nvert = id_space(inst.n);
  in.alpha.reserve(nvert);
  in.beta.reserve(nvert);
  for (std::uint64_t vid = 0; vid < nvert; ++vid) {
    LineInfo li = inst.info(unpack_id(vid, inst.n));
    BetaTriple b{int(rng.below(M)), int(rng.below(M)), int(rng.below(M))};
    SimEoalInput::AlphaTriple a;
    const std::uint8_t bits[3] = {li.t, li.s, li.p};
    const int idx[3] = {b.t, b.s, b.p};
    std::vector<std::uint8_t>* vecs[3] = {&a.t, &a.s, &a.p};
    for (int k = 0; k < 3; ++k) {
      vecs[k]->resize(M);
      for (int i = 0; i < M; ++i)
        (*vecs[k])[i] = filler ? filler(vid, k, i) : std::uint8_t(rng.bit());
      (*vecs[k])[idx[k]] = bits[k];
    }
    in.alpha.emplace(vid, std::move(a));
    in.beta.emplace(vid, b);
  }
  for (std::uint64_t vid = 0; vid < nvert; ++vid) {
    BetaTriple b = in.beta.at(vid);
    LineInfo got{in.alpha.at(vid).t[b.t], in.alpha.at(vid).s[b.s], in.alpha.at(vid).p[b.p]};
    if (got != inst.info(unpack_id(vid, inst.n)))
      throw std::logic_error("split_instance: composition check failed");
  }
  in.reset_traces();
  return in;
}

// Party-typed windows; each side's protocol code receives only its own view.
class AliceView {
 public:
  explicit AliceView(const SimEoalInput& in) : in_(&in) {}
  int M() const { return in_->M; }
  std::uint8_t alpha(std::uint64_t vid, int kind, int idx) const {
    return in_->alpha_bit(vid, kind, idx);
  }

 private:
  const SimEoalInput* in_;
};

class BobView {
 public:
  explicit BobView(const SimEoalInput& in) : in_(&in) {}
  int M() const { return in_->M; }
  BetaTriple beta(std::uint64_t vid) const { return in_->beta_at(vid); }

 private:
  const SimEoalInput* in_;
};

struct Transcript {
  struct Entry {
    std::uint8_t sender;  // 0 = Alice, 1 = Bob
    std::uint8_t bit;
  };
  std::vector<Entry> entries;

  std::size_t total_bits() const { return entries.size(); }
  void send(int sender, bool bit) { entries.push_back({std::uint8_t(sender), std::uint8_t(bit)}); }
  bool at(std::size_t i) const { return entries.at(i).bit; }

  std::string bit_string() const {
    std::string s;
    for (const auto& e : entries) {
      s.push_back(e.sender ? 'B' : 'A');
      s.push_back(e.bit ? '1' : '0');
    }
    return s;
  }
};

inline int bits_for_index(int M) {
  int b = 0;
  while ((1 << b) < M) ++b;
  return b;
}

// Vertices whose announced triples the evaluation point needs: the decoded
// vertex of each tuple when that tuple sits within the 8*sqrt(h) check radius.
// Depends only on the point, the code, and the fixed geometry parameters.
inline std::vector<std::uint64_t> protocol_targets(const BrouwerField& f,
                                                   std::span<const double> x) {
  std::vector<std::uint64_t> out;
  if (f.theta_mean(x) >= 0.5) return out;
  const double radius = 8 * f.params.sqrt_h();
  for (Tuple which : {Tuple::first, Tuple::second}) {
    std::uint64_t dec = decode_point_tuple(x, which, f.code).msg.to_uint();
    if (tuple_distance(x, which, f.code.codebook[dec]) <= radius) {
      if (out.empty() || out[0] != dec) out.push_back(dec);
    }
  }
  return out;
}

struct EvalfRun {
  Point answer;
  Transcript transcript;
};

// Both parties derive the needed vertices from the public point; Bob sends a
// 2-bit count header and the index triples, Alice answers with the three
// selected bits per vertex, and both evaluate the local function on the
// announced triples. The runner cross-checks that the two sides agree.
inline EvalfRun run_evalf(const SimEoalInput& input, const BrouwerField& field,
                          std::span<const double> x) {
  AliceView alice(input);
  BobView bob(input);
  Transcript tr;
  const int idx_bits = bits_for_index(input.M);

  std::vector<std::uint64_t> targets = protocol_targets(field, x);  // public
  tr.send(1, targets.size() & 1);
  tr.send(1, (targets.size() >> 1) & 1);

  // Bob announces the index triples of the needed vertices.
  std::size_t beta_start = tr.total_bits();
  for (std::uint64_t vid : targets) {
    BetaTriple b = bob.beta(vid);
    for (int v : {b.t, b.s, b.p})
      for (int k = 0; k < idx_bits; ++k) tr.send(1, (v >> k) & 1);
  }

  // Alice reads the triples off the transcript and answers the selected bits.
  std::size_t cursor = beta_start;
  std::vector<LineInfo> announced;
  for (std::uint64_t vid : targets) {
    int idx[3];
    for (int k3 = 0; k3 < 3; ++k3) {
      int v = 0;
      for (int k = 0; k < idx_bits; ++k) v |= int(tr.at(cursor++)) << k;
      idx[k3] = v;
    }
    LineInfo li;
    li.t = alice.alpha(vid, 0, idx[0]);
    li.s = alice.alpha(vid, 1, idx[1]);
    li.p = alice.alpha(vid, 2, idx[2]);
    announced.push_back(li);
    tr.send(0, li.t);
    tr.send(0, li.s);
    tr.send(0, li.p);
  }

  // Both sides bind announced triples to tuples and evaluate.
  auto bind = [&](Tuple which) {
    std::uint64_t dec = decode_point_tuple(x, which, field.code).msg.to_uint();
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (targets[i] == dec) return announced[i];
    return LineInfo{};
  };
  LineInfo i1 = bind(Tuple::first);
  LineInfo i2 = bind(Tuple::second);
  Point alice_out = eval_f_local(field, i1, i2, x);
  Point bob_out = eval_f_local(field, i1, i2, x);
  if (alice_out != bob_out) throw std::logic_error("evalf: party outputs diverged");
  return EvalfRun{std::move(alice_out), std::move(tr)};
}

struct LinewalkRun {
  bool answer = false;
  Vertex end_vertex;
  std::uint64_t vertices_visited = 0;
  Transcript transcript;
};

enum class Protocol { evalf, linewalk };

struct ProtocolRun {
  Transcript transcript;
  Point point_answer;       // evalf
  bool bit_answer = false;  // linewalk
  Vertex end_vertex;        // linewalk
  std::uint64_t vertices_visited = 0;
};

// Joint walk from the origin vertex: each visited vertex costs Bob the three
// indices and Alice the three selected bits; the walk ends at the first probe
// whose T bit is 0 and answers the previous vertex's first bit.
inline LinewalkRun run_linewalk(const SimEoalInput& input) {
  AliceView alice(input);
  BobView bob(input);
  const int n = input.instance->n;
  const int idx_bits = bits_for_index(input.M);
  Transcript tr;
  LinewalkRun run;

  Vertex cur{0, 0, 0};
  Vertex prev = cur;
  bool have_prev = false;
  for (std::uint64_t guard = 0; guard <= vertex_count(n) + 1; ++guard) {
    std::uint64_t vid = packed_id(cur, n);
    BetaTriple b = bob.beta(vid);
    std::size_t beta_start = tr.total_bits();
    for (int v : {b.t, b.s, b.p})
      for (int k = 0; k < idx_bits; ++k) tr.send(1, (v >> k) & 1);
    std::size_t cursor = beta_start;
    int idx[3];
    for (int k3 = 0; k3 < 3; ++k3) {
      int v = 0;
      for (int k = 0; k < idx_bits; ++k) v |= int(tr.at(cursor++)) << k;
      idx[k3] = v;
    }
    std::uint8_t t = alice.alpha(vid, 0, idx[0]);
    std::uint8_t s = alice.alpha(vid, 1, idx[1]);
    std::uint8_t p = alice.alpha(vid, 2, idx[2]);
    (void)p;
    tr.send(0, t);
    tr.send(0, s);
    tr.send(0, p);
    ++run.vertices_visited;

    if (!t) {
      if (!have_prev) throw std::runtime_error("linewalk: origin is off every line");
      run.answer = first_bit(prev.v1);
      run.end_vertex = prev;
      run.transcript = std::move(tr);
      return run;
    }
    prev = cur;
    have_prev = true;
    cur = neighbor(cur, Dir::succ, s, n);
  }
  throw std::runtime_error("linewalk: walk exceeded the vertex count");
}

// Dispatcher over the two protocols. evalf needs the field and a point.
inline ProtocolRun run_protocol(Protocol which, const SimEoalInput& input,
                                const BrouwerField* field = nullptr,
                                std::span<const double> x = {}) {
  ProtocolRun run;
  if (which == Protocol::evalf) {
    if (!field || x.empty()) throw std::invalid_argument("evalf needs a field and a point");
    EvalfRun er = run_evalf(input, *field, x);
    run.transcript = std::move(er.transcript);
    run.point_answer = std::move(er.answer);
    return run;
  }
  LinewalkRun lw = run_linewalk(input);
  run.transcript = std::move(lw.transcript);
  run.bit_answer = lw.answer;
  run.end_vertex = lw.end_vertex;
  run.vertices_visited = lw.vertices_visited;
  return run;
}

}  // namespace hardnash

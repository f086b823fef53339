// Layered successor graph over {0,1}^n x {0,1}^n x {0..n} and the line
// instances drawn on it: the single conditioned line (EOTL, X, Z) and the
// two-line cut family (Y), plus a counting query oracle, solution finding,
// validation, and text serialization.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hardnash/bits.hpp"
#include "hardnash/report.hpp"

namespace hardnash {

struct NoAdmissiblePermutation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int ceil_log2(int x) {
  int b = 0;
  while ((1 << b) < x) ++b;
  return b;
}

// Width of a packed vertex id: v1 and v2 take n bits each, the layer takes
// ceil(log2(n+1)) bits.
inline int packed_width(int n) { return 2 * n + ceil_log2(n + 1); }

// A graph vertex. v1/v2 hold coordinate c in bit c-1; k is the layer.
struct Vertex {
  std::uint32_t v1 = 0;
  std::uint32_t v2 = 0;
  int k = 0;

  bool operator==(const Vertex& o) const { return v1 == o.v1 && v2 == o.v2 && k == o.k; }
  bool operator!=(const Vertex& o) const { return !(*this == o); }
};

inline std::uint64_t packed_id(const Vertex& v, int n) {
  return std::uint64_t(v.v1) | (std::uint64_t(v.v2) << n) | (std::uint64_t(v.k) << (2 * n));
}

inline Vertex unpack_id(std::uint64_t id, int n) {
  Vertex v;
  v.v1 = std::uint32_t(id & ((1u << n) - 1));
  v.v2 = std::uint32_t((id >> n) & ((1u << n) - 1));
  v.k = int(id >> (2 * n));
  return v;
}

inline BitWord packed_bits(const Vertex& v, int n) {
  return BitWord::from_uint(packed_id(v, n), packed_width(n));
}

inline std::uint64_t vertex_count(int n) { return (std::uint64_t(1) << (2 * n)) * (n + 1); }

// The packed-id space {0,1}^kappa. When n+1 is not a power of two it strictly
// contains the vertex set; the padding ids answer (0,0,0) and never carry
// lines, but decoders can land on them, so id-keyed inputs cover all of it.
inline std::uint64_t id_space(int n) { return std::uint64_t(1) << packed_width(n); }

inline bool first_bit(std::uint32_t v1) { return v1 & 1u; }

enum class Dir { succ, pred };

// Total neighbor map. Layers below n have two successors selected by `bit`
// (coordinate k+1 of v2 is overwritten); the top layer has the single swap
// successor (v2, v1, 0). Predecessors mirror this, with the layer-0 swap
// predecessor (v2, v1, n). Swap edges ignore `bit`.
inline Vertex neighbor(const Vertex& v, Dir dir, bool bit, int n) {
  Vertex r = v;
  std::uint32_t mask;
  if (dir == Dir::succ) {
    if (v.k < n) {
      mask = 1u << v.k;  // coordinate k+1
      r.v2 = bit ? (v.v2 | mask) : (v.v2 & ~mask);
      r.k = v.k + 1;
    } else {
      r.v1 = v.v2;
      r.v2 = v.v1;
      r.k = 0;
    }
  } else {
    if (v.k >= 1) {
      mask = 1u << (v.k - 1);  // coordinate k
      r.v2 = bit ? (v.v2 | mask) : (v.v2 & ~mask);
      r.k = v.k - 1;
    } else {
      r.v1 = v.v2;
      r.v2 = v.v1;
      r.k = n;
    }
  }
  return r;
}

struct LineInfo {
  std::uint8_t t = 0;
  std::uint8_t s = 0;
  std::uint8_t p = 0;

  bool operator==(const LineInfo& o) const { return t == o.t && s == o.s && p == o.p; }
  bool operator!=(const LineInfo& o) const { return !(*this == o); }
  int as_int() const { return (int(t) << 2) | (int(s) << 1) | int(p); }
};

enum class Kind { EOTL, X, Y, Z };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::EOTL: return "EOTL";
    case Kind::X: return "X";
    case Kind::Y: return "Y";
    case Kind::Z: return "Z";
  }
  return "?";
}

inline Kind kind_from_name(const std::string& s) {
  if (s == "EOTL") return Kind::EOTL;
  if (s == "X") return Kind::X;
  if (s == "Y") return Kind::Y;
  if (s == "Z") return Kind::Z;
  throw std::runtime_error("unknown kind: " + s);
}

enum class Role { end, start };

struct LineInstance {
  int n = 0;
  Kind kind = Kind::EOTL;
  std::uint64_t seed = 0;
  std::vector<std::vector<Vertex>> lines;                     // ordered vertex sequences
  std::unordered_map<std::uint64_t, LineInfo> info_map;       // on-line vertices only
  std::vector<std::pair<Vertex, Role>> solution_list;         // nontrivial ends/starts

  LineInfo info(const Vertex& v) const {
    auto it = info_map.find(packed_id(v, n));
    return it == info_map.end() ? LineInfo{} : it->second;
  }
  bool on_line(const Vertex& v) const { return info_map.count(packed_id(v, n)) != 0; }
  std::size_t total_edges() const {
    std::size_t e = 0;
    for (const auto& l : lines) e += l.size() - 1;
    return e;
  }
};

// Pure answers, one mutable counter.
class QueryOracle {
 public:
  explicit QueryOracle(const LineInstance& inst) : inst_(&inst) {}
  LineInfo query(const Vertex& v) {
    ++count_;
    return inst_->info(v);
  }
  std::uint64_t count() const { return count_; }

 private:
  const LineInstance* inst_;
  std::uint64_t count_ = 0;
};

namespace detail {

// Walks the per-step template: anchor(pi[i]) -> set coordinates 1..n of v2 to
// pi[i+1] -> top-layer swap -> anchor(pi[i+1]).
inline std::vector<Vertex> walk_from_permutation(const std::vector<std::uint32_t>& pi, int n) {
  std::vector<Vertex> w;
  w.reserve((pi.size() - 1) * (n + 1) + 1);
  Vertex cur{0, 0, 0};
  w.push_back(cur);
  for (std::size_t i = 0; i + 1 < pi.size(); ++i) {
    for (int c = 0; c < n; ++c) {
      cur = neighbor(cur, Dir::succ, (pi[i + 1] >> c) & 1u, n);
      w.push_back(cur);
    }
    cur = neighbor(cur, Dir::succ, false, n);
    w.push_back(cur);
  }
  return w;
}

// Recomputes the stored (T,S,P) bits from the vertex sequences alone. S of a
// non-final layer-<n vertex is the overwritten coordinate of its successor; P
// of a layer->=1 vertex is the overwritten coordinate of its predecessor. Swap
// edges and the trivial start store 0. A line end stores the S bit whose
// successor is off every line, and a nontrivial start stores the analogous P
// bit (its true-predecessor bit would point at the previous line's end).
inline void assign_info(LineInstance& inst) {
  inst.info_map.clear();
  for (const auto& line : inst.lines)
    for (const Vertex& v : line) inst.info_map[packed_id(v, inst.n)] = LineInfo{1, 0, 0};

  auto on_line = [&](const Vertex& v) { return inst.info_map.count(packed_id(v, inst.n)) != 0; };

  for (const auto& line : inst.lines) {
    for (std::size_t j = 0; j < line.size(); ++j) {
      const Vertex& v = line[j];
      LineInfo& li = inst.info_map[packed_id(v, inst.n)];
      if (j + 1 < line.size()) {
        const Vertex& w = line[j + 1];
        if (v.k < inst.n) li.s = (w.v2 >> v.k) & 1u;
      } else if (v.k < inst.n) {
        // Line end: pick the S whose successor is off-line (0 first).
        li.s = on_line(neighbor(v, Dir::succ, false, inst.n)) ? 1 : 0;
      }
      if (j > 0) {
        const Vertex& u = line[j - 1];
        if (v.k >= 1) li.p = (u.v2 >> (v.k - 1)) & 1u;
      } else if (v.k >= 1) {
        // Nontrivial line start: pick the P whose predecessor is off-line.
        li.p = on_line(neighbor(v, Dir::pred, false, inst.n)) ? 1 : 0;
      }
    }
  }
}

inline void compute_solutions(LineInstance& inst) {
  inst.solution_list.clear();
  const Vertex zero{0, 0, 0};
  for (const auto& line : inst.lines) {
    for (const Vertex& v : line) {
      LineInfo li = inst.info(v);
      if (inst.info(neighbor(v, Dir::succ, li.s, inst.n)).t == 0 && v != zero)
        inst.solution_list.emplace_back(v, Role::end);
      if (inst.info(neighbor(v, Dir::pred, li.p, inst.n)).t == 0 && v != zero)
        inst.solution_list.emplace_back(v, Role::start);
    }
  }
}

}  // namespace detail

// Builds an instance from an explicit permutation over {0,1}^n (pi[0] must be
// 0). For Y, cut_index picks the consecutive pair (pi[cut], pi[cut+1]) and the
// cut removes the edge leaving anchor(pi[cut]).
inline LineInstance make_instance_from_permutation(int n, const std::vector<std::uint32_t>& pi,
                                                   Kind kind, int cut_index = -1,
                                                   std::uint64_t seed = 0) {
  if (pi.empty() || pi[0] != 0) throw std::logic_error("permutation must start at 0");
  LineInstance inst;
  inst.n = n;
  inst.kind = kind;
  inst.seed = seed;
  std::vector<Vertex> walk = detail::walk_from_permutation(pi, n);
  if (kind == Kind::Y) {
    if (cut_index < 1 || std::size_t(cut_index) + 1 >= pi.size())
      throw std::logic_error("bad cut index");
    std::size_t pos = std::size_t(cut_index) * (n + 1);  // anchor(pi[cut]) in the walk
    inst.lines.emplace_back(walk.begin(), walk.begin() + pos + 1);
    inst.lines.emplace_back(walk.begin() + pos + 1, walk.end());
  } else {
    inst.lines.push_back(std::move(walk));
  }
  detail::assign_info(inst);
  detail::compute_solutions(inst);
  return inst;
}

inline constexpr int kPermutationRejectionCap = 1000000;

// Seeded generator: Fisher-Yates permutations rejection-sampled until the
// kind's first-bit conditioning holds. EOTL and X condition the final element
// on first bit 1, Z on first bit 0; Y additionally needs a consecutive pair
// with both first bits 1 and cuts at a uniformly chosen such pair.
inline LineInstance gen_instance(Kind kind, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  Rng rng(seed ^ 0x6c696e65776f726cull);
  std::vector<std::uint32_t> base(std::size_t(1) << n);
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = std::uint32_t(i);

  for (int attempt = 0; attempt < kPermutationRejectionCap; ++attempt) {
    std::vector<std::uint32_t> pi(base.begin() + 1, base.end());
    fisher_yates(pi, rng);
    pi.insert(pi.begin(), 0);

    bool last_bit = first_bit(pi.back());
    if (kind == Kind::Z) {
      if (last_bit) continue;
      return make_instance_from_permutation(n, pi, kind, -1, seed);
    }
    if (!last_bit) continue;  // EOTL, X, Y all condition on 1
    if (kind != Kind::Y) return make_instance_from_permutation(n, pi, kind, -1, seed);

    std::vector<int> pairs;
    for (std::size_t i = 1; i + 1 < pi.size(); ++i)
      if (first_bit(pi[i]) && first_bit(pi[i + 1])) pairs.push_back(int(i));
    if (pairs.empty()) continue;
    int cut = pairs[rng.below(pairs.size())];
    return make_instance_from_permutation(n, pi, kind, cut, seed);
  }
  throw NoAdmissiblePermutation(std::string("no admissible permutation for kind ") +
                                kind_name(kind) + " at n=" + std::to_string(n));
}

inline std::vector<std::pair<Vertex, Role>> solutions(const LineInstance& inst) {
  return inst.solution_list;
}

// Re-checks every instance invariant; failures become report entries with a
// counterexample vertex.
inline Report validate_instance(const LineInstance& inst) {
  Report rep;
  rep.command = "validate";
  rep.config_kv("n", std::to_string(inst.n));
  rep.config_kv("kind", kind_name(inst.kind));
  rep.config_kv("seed", std::to_string(inst.seed));
  const int n = inst.n;

  bool disjoint = true;
  std::string dis_note;
  {
    std::unordered_map<std::uint64_t, int> seen;
    for (const auto& line : inst.lines)
      for (const Vertex& v : line)
        if (++seen[packed_id(v, n)] > 1) {
          disjoint = false;
          dis_note = "vertex " + packed_bits(v, n).to_hex();
        }
  }
  rep.add(CheckEntry::flag("lines-vertex-disjoint", disjoint, dis_note));

  rep.add(CheckEntry::flag("first-line-starts-at-zero",
                           !inst.lines.empty() && !inst.lines[0].empty() &&
                               inst.lines[0][0] == Vertex{0, 0, 0}));

  // The info map must be exactly the line vertices, all with T=1.
  bool cover = true;
  std::string cover_note;
  {
    std::size_t nvert = 0;
    for (const auto& line : inst.lines) nvert += line.size();
    if (inst.info_map.size() != nvert) {
      cover = false;
      cover_note = "info map size " + std::to_string(inst.info_map.size()) + " vs " +
                   std::to_string(nvert) + " line vertices";
    }
    for (const auto& line : inst.lines)
      for (const Vertex& v : line)
        if (inst.info(v).t != 1) {
          cover = false;
          cover_note = "T=0 on line at " + packed_bits(v, n).to_hex();
        }
  }
  rep.add(CheckEntry::flag("on-line-T-cover", cover, cover_note));

  bool chain = true;
  std::string chain_note;
  for (const auto& line : inst.lines) {
    for (std::size_t j = 0; j + 1 < line.size(); ++j) {
      const Vertex &v = line[j], &w = line[j + 1];
      if (neighbor(v, Dir::succ, inst.info(v).s, n) != w ||
          neighbor(w, Dir::pred, inst.info(w).p, n) != v) {
        chain = false;
        chain_note = "at " + packed_bits(v, n).to_hex();
      }
    }
  }
  rep.add(CheckEntry::flag("chain-consistency", chain, chain_note));

  // Endpoint S/P bits must point off-line so solutions are detectable.
  bool endpoints = true;
  std::string ep_note;
  for (std::size_t li = 0; li < inst.lines.size(); ++li) {
    const auto& line = inst.lines[li];
    const Vertex& last = line.back();
    if (inst.info(neighbor(last, Dir::succ, inst.info(last).s, n)).t != 0) {
      endpoints = false;
      ep_note = "end " + packed_bits(last, n).to_hex();
    }
    const Vertex& first = line.front();
    if (inst.info(neighbor(first, Dir::pred, inst.info(first).p, n)).t != 0) {
      endpoints = false;
      ep_note = "start " + packed_bits(first, n).to_hex();
    }
  }
  rep.add(CheckEntry::flag("endpoint-bits-off-line", endpoints, ep_note));

  // Solution count and first-bit signature per kind.
  std::size_t want_count = inst.kind == Kind::Y ? 3 : 1;
  bool want_bit = inst.kind != Kind::Z;
  bool sig = inst.solution_list.size() == want_count;
  for (const auto& [v, role] : inst.solution_list)
    if (first_bit(v.v1) != want_bit) sig = false;
  rep.add(CheckEntry::num("solution-signature", double(inst.solution_list.size()),
                          double(want_count), sig));

  // Total walk edges: (n+1)(2^n - 1) for one line, one less for the cut pair.
  std::size_t want_edges = std::size_t(n + 1) * ((std::size_t(1) << n) - 1);
  if (inst.kind == Kind::Y) want_edges -= 1;
  rep.add(CheckEntry::num("walk-edge-count", double(inst.total_edges()), double(want_edges),
                          inst.total_edges() == want_edges));

  // Off-line vertices answer (0,0,0): exhaustive at small n, sampled above.
  bool offline_ok = true;
  std::string off_note;
  std::uint64_t nvertices = (std::uint64_t(1) << (2 * n)) * (n + 1);
  if (nvertices <= 1u << 16) {
    for (std::uint64_t id = 0; id < nvertices; ++id) {
      Vertex v = unpack_id(id, n);
      if (!inst.on_line(v) && inst.info(v) != LineInfo{}) {
        offline_ok = false;
        off_note = packed_bits(v, n).to_hex();
      }
    }
  } else {
    Rng rng(inst.seed ^ 0x0ff11e5eedull);
    for (int i = 0; i < 4096; ++i) {
      Vertex v{std::uint32_t(rng.below(1u << n)), std::uint32_t(rng.below(1u << n)),
               int(rng.below(n + 1))};
      if (!inst.on_line(v) && inst.info(v) != LineInfo{}) offline_ok = false;
    }
  }
  rep.add(CheckEntry::flag("off-line-zero-info", offline_ok, off_note));

  return rep;
}

// --- serialization -----------------------------------------------------------

inline std::string serialize_instance(const LineInstance& inst) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["n"] = inst.n;
  j["kind"] = kind_name(inst.kind);
  j["seed"] = inst.seed;
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& line : inst.lines) {
    nlohmann::json l = nlohmann::json::array();
    for (const Vertex& v : line) l.push_back(packed_bits(v, inst.n).to_hex());
    lines.push_back(std::move(l));
  }
  j["lines"] = std::move(lines);
  return j.dump(2) + "\n";
}

// T/S/P are recomputed from the lines and the reconstructed instance is
// re-validated; a corrupt document throws.
inline LineInstance deserialize_instance(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format_version").get<std::string>() != kFormatVersion)
    throw std::runtime_error("unsupported instance format version");
  LineInstance inst;
  inst.n = j.at("n").get<int>();
  inst.kind = kind_from_name(j.at("kind").get<std::string>());
  inst.seed = j.at("seed").get<std::uint64_t>();
  int width = packed_width(inst.n);
  for (const auto& l : j.at("lines")) {
    std::vector<Vertex> line;
    for (const auto& hex : l)
      line.push_back(unpack_id(BitWord::from_hex(hex.get<std::string>(), width).to_uint(), inst.n));
    inst.lines.push_back(std::move(line));
  }
  detail::assign_info(inst);
  detail::compute_solutions(inst);
  Report rep = validate_instance(inst);
  if (!rep.all_pass()) throw std::runtime_error("instance file failed cross-check");
  return inst;
}

}  // namespace hardnash

// Binary codes with exhaustively verified minimum distance, the [-1,2] grid,
// and the point-tuple decoders used by the embedding and both games.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardnash/bits.hpp"
#include "hardnash/report.hpp"

namespace hardnash {

struct ConstructionFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear code given by kappa generator rows of m bits each. The codebook is
// materialized (2^kappa words) and d_min is the exact minimum over it; the
// zero message maps to the zero codeword by linearity.
struct BinaryCode {
  int kappa = 0;
  int m = 0;
  std::vector<BitWord> gen_rows;
  std::vector<BitWord> codebook;
  int d_min = 0;

  double rel_dist() const { return double(d_min) / double(m); }
  int correctable() const { return (d_min - 1) / 2; }
};

namespace detail {

inline std::vector<BitWord> expand_codebook(const std::vector<BitWord>& rows, int kappa, int m) {
  std::vector<BitWord> book(std::size_t(1) << kappa, BitWord(m));
  for (std::uint32_t msg = 1; msg < book.size(); ++msg) {
    // Gray-order incremental fill would work too; direct xor keeps it obvious.
    BitWord w(m);
    for (int r = 0; r < kappa; ++r)
      if ((msg >> r) & 1u) w.xor_with(rows[r]);
    book[msg] = std::move(w);
  }
  return book;
}

// Exact minimum distance. Linearity makes the minimum pairwise distance equal
// the minimum nonzero weight; both routes are exhaustive over the codebook and
// the pairwise route double-checks small books.
inline int exact_min_distance(const std::vector<BitWord>& book) {
  int dmin = book.empty() ? 0 : book[0].size();
  for (std::size_t i = 1; i < book.size(); ++i) dmin = std::min(dmin, book[i].popcount());
  if (book.size() <= 256) {
    for (std::size_t i = 0; i < book.size(); ++i)
      for (std::size_t j = i + 1; j < book.size(); ++j)
        dmin = std::min(dmin, book[i].hamming(book[j]));
  }
  return dmin;
}

inline bool try_build_at_length(int kappa, int m, double target_rel, Rng& rng, int attempts,
                                BinaryCode& out) {
  for (int a = 0; a < attempts; ++a) {
    std::vector<BitWord> rows;
    rows.reserve(kappa);
    for (int r = 0; r < kappa; ++r) {
      BitWord row(m);
      for (int i = 0; i < m; ++i) row.set(i, rng.bit());
      rows.push_back(std::move(row));
    }
    std::vector<BitWord> book = expand_codebook(rows, kappa, m);
    int dmin = exact_min_distance(book);
    if (dmin >= 1 && double(dmin) >= target_rel * double(m)) {
      out.kappa = kappa;
      out.m = m;
      out.gen_rows = std::move(rows);
      out.codebook = std::move(book);
      out.d_min = dmin;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline constexpr int kCodeAttemptsPerLength = 400;

// Rejection-sampled random linear code; block length grows geometrically from
// 2*kappa until the exhaustive distance check clears the target.
inline BinaryCode build_code(int kappa, double target_rel_dist, std::uint64_t seed) {
  if (kappa < 1 || kappa > 12) throw std::invalid_argument("build_code: kappa out of range");
  if (!(target_rel_dist > 0.0 && target_rel_dist <= 1.0))
    throw std::invalid_argument("build_code: bad target relative distance");
  Rng rng(seed ^ 0xc0dec0dec0dec0deull);
  BinaryCode code;
  for (int m = std::max(2, 2 * kappa); m <= 8192; m = m + (m + 1) / 2) {
    if (detail::try_build_at_length(kappa, m, target_rel_dist, rng, kCodeAttemptsPerLength, code))
      return code;
  }
  throw ConstructionFailed("build_code: no code found for kappa=" + std::to_string(kappa) +
                           " target=" + fmt_double(target_rel_dist));
}

// Same construction at a pinned block length (the n-player populations need
// all three codes to share block length m').
// Message widths up to 16 keep the exhaustive min-weight verification cheap
// even though the growth-search builder caps at 12.
inline BinaryCode build_code_fixed(int kappa, int m, double target_rel_dist, std::uint64_t seed) {
  if (kappa < 1 || kappa > 16) throw std::invalid_argument("build_code_fixed: kappa out of range");
  if (m <= kappa) throw std::invalid_argument("build_code_fixed: m too small");
  Rng rng(seed ^ 0xf17edc0deull);
  BinaryCode code;
  if (detail::try_build_at_length(kappa, m, target_rel_dist, rng, 40 * kCodeAttemptsPerLength,
                                  code))
    return code;
  throw ConstructionFailed("build_code_fixed: no code at m=" + std::to_string(m));
}

inline BitWord encode(const BinaryCode& code, const BitWord& msg) {
  if (msg.size() != code.kappa) throw std::invalid_argument("encode: message length mismatch");
  return code.codebook[msg.to_uint()];
}

inline BitWord encode(const BinaryCode& code, std::uint64_t msg) {
  return code.codebook[msg];
}

struct DecodeResult {
  BitWord msg;
  int dist = 0;
};

// Nearest codeword, ties to the smallest message value.
inline DecodeResult decode(const BinaryCode& code, const BitWord& word) {
  if (word.size() != code.m) throw std::invalid_argument("decode: word length mismatch");
  std::uint64_t best = 0;
  int best_d = code.codebook[0].hamming(word);
  for (std::uint64_t msg = 1; msg < code.codebook.size(); ++msg) {
    int d = code.codebook[msg].hamming(word);
    if (d < best_d) {
      best_d = d;
      best = msg;
    }
  }
  return DecodeResult{BitWord::from_uint(best, code.kappa), best_d};
}

// --- grid ---------------------------------------------------------------------

// The discretization of [-1,2]: values -1 + 3k/q for k = 0..q, with q = 3/eps
// integral by construction.
struct GridSpec {
  std::int64_t q = 0;

  static GridSpec from_eps(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("grid eps must be positive");
    double qd = 3.0 / eps;
    std::int64_t q = std::llround(qd);
    if (q < 1 || std::abs(qd - double(q)) > 1e-6 * qd)
      throw std::invalid_argument("3/eps must be an integer");
    return GridSpec{q};
  }

  double eps() const { return 3.0 / double(q); }
  std::int64_t num_values() const { return q + 1; }
  double value(std::int64_t k) const { return -1.0 + (3.0 * double(k)) / double(q); }

  // Nearest grid index; exact halfway ties round toward -1.
  std::int64_t round_index(double x) const {
    if (x < -1.0 - 1e-9 || x > 2.0 + 1e-9) throw std::invalid_argument("round_eps: out of range");
    double t = (x + 1.0) * (double(q) / 3.0);
    auto k = std::int64_t(std::ceil(t - 0.5));
    if (k < 0) k = 0;
    if (k > q) k = q;
    return k;
  }

  double round_value(double x) const { return value(round_index(x)); }
};

inline std::vector<double> round_eps(std::span<const double> x, const GridSpec& grid) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = grid.round_value(x[i]);
  return out;
}

// --- point decoders -------------------------------------------------------------

enum class Tuple { first, second };

// Rounds the designated m-tuple of a 4m-dimensional point to bits (threshold
// 1/2, ties to 0) and nearest-codeword decodes it.
inline DecodeResult decode_point_tuple(std::span<const double> x, Tuple which,
                                       const BinaryCode& code) {
  if (x.size() != std::size_t(4) * code.m)
    throw std::invalid_argument("decode_point_tuple: point dimension mismatch");
  std::size_t off = which == Tuple::first ? 0 : code.m;
  BitWord w(code.m);
  for (int i = 0; i < code.m; ++i) w.set(i, x[off + i] > 0.5);
  return decode(code, w);
}

// Normalized 2-norm distance between an m-tuple of x and a codeword, in the
// tuple's own dimension.
inline double tuple_distance(std::span<const double> x, Tuple which, const BitWord& codeword) {
  std::size_t m = codeword.size();
  std::size_t off = which == Tuple::first ? 0 : m;
  double s = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double d = x[off + i] - (codeword.get(int(i)) ? 1.0 : 0.0);
    s += d * d;
  }
  return std::sqrt(s / double(m));
}

// --- serialization ----------------------------------------------------------------

inline std::string serialize_code(const BinaryCode& code) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["kappa"] = code.kappa;
  j["m"] = code.m;
  j["d_min"] = code.d_min;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : code.gen_rows) rows.push_back(r.to_hex());
  j["generator_rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

// Re-verifies the recorded d_min against the expanded codebook.
inline BinaryCode deserialize_code(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format_version").get<std::string>() != kFormatVersion)
    throw std::runtime_error("unsupported code format version");
  BinaryCode code;
  code.kappa = j.at("kappa").get<int>();
  code.m = j.at("m").get<int>();
  for (const auto& hex : j.at("generator_rows"))
    code.gen_rows.push_back(BitWord::from_hex(hex.get<std::string>(), code.m));
  if ((int)code.gen_rows.size() != code.kappa) throw std::runtime_error("generator row count");
  code.codebook = detail::expand_codebook(code.gen_rows, code.kappa, code.m);
  code.d_min = detail::exact_min_distance(code.codebook);
  if (code.d_min != j.at("d_min").get<int>())
    throw std::runtime_error("recorded d_min failed re-verification");
  return code;
}

}  // namespace hardnash

// Packed bit vectors, deterministic PRNG, and hex helpers shared by all modules.
#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardnash {

// Fixed-width bit vector packed into 64-bit words. Bit 0 is the first bit.
class BitWord {
 public:
  BitWord() = default;
  explicit BitWord(int nbits) : nbits_(nbits), w_((nbits + 63) / 64, 0) {}

  static BitWord from_uint(std::uint64_t value, int nbits) {
    BitWord b(nbits);
    for (int i = 0; i < nbits && i < 64; ++i) b.set(i, (value >> i) & 1u);
    return b;
  }

  int size() const { return nbits_; }

  bool get(int i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }

  void set(int i, bool v) {
    std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      w_[i >> 6] |= mask;
    else
      w_[i >> 6] &= ~mask;
  }

  void flip(int i) { w_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::uint64_t to_uint() const {
    if (nbits_ > 64) throw std::logic_error("BitWord::to_uint: too wide");
    return w_.empty() ? 0 : w_[0];
  }

  void xor_with(const BitWord& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
  }

  int popcount() const {
    int c = 0;
    for (std::uint64_t x : w_) c += __builtin_popcountll(x);
    return c;
  }

  int hamming(const BitWord& o) const {
    int c = 0;
    for (std::size_t i = 0; i < w_.size(); ++i) c += __builtin_popcountll(w_[i] ^ o.w_[i]);
    return c;
  }

  bool operator==(const BitWord& o) const { return nbits_ == o.nbits_ && w_ == o.w_; }
  bool operator!=(const BitWord& o) const { return !(*this == o); }

  // Hex serialization, low nibble first so width round-trips exactly.
  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    int nibbles = (nbits_ + 3) / 4;
    for (int i = 0; i < nibbles; ++i) {
      int v = 0;
      for (int b = 0; b < 4; ++b) {
        int idx = 4 * i + b;
        if (idx < nbits_ && get(idx)) v |= 1 << b;
      }
      s.push_back(digits[v]);
    }
    return s;
  }

  static BitWord from_hex(const std::string& s, int nbits) {
    BitWord b(nbits);
    int nibbles = (nbits + 3) / 4;
    if ((int)s.size() != nibbles) throw std::runtime_error("BitWord::from_hex: length mismatch");
    for (int i = 0; i < nibbles; ++i) {
      char c = s[i];
      int v;
      if (c >= '0' && c <= '9')
        v = c - '0';
      else if (c >= 'a' && c <= 'f')
        v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F')
        v = c - 'A' + 10;
      else
        throw std::runtime_error("BitWord::from_hex: bad digit");
      for (int bit = 0; bit < 4; ++bit) {
        int idx = 4 * i + bit;
        if (idx < nbits) b.set(idx, (v >> bit) & 1);
      }
    }
    return b;
  }

 private:
  int nbits_ = 0;
  std::vector<std::uint64_t> w_;
};

// SplitMix64-based PRNG. Self-contained so streams are identical on every
// platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) by rejection; bound >= 1.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::logic_error("Rng::below(0)");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    for (;;) {
      std::uint64_t x = next_u64();
      if (x < limit || limit == 0) return x % bound;
    }
  }

  bool bit() { return next_u64() & 1u; }

  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [a, b].
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Derive an independent stream for a named sub-task.
  Rng split(std::uint64_t tag) {
    std::uint64_t s = next_u64();
    return Rng(s ^ (tag * 0x9e3779b97f4a7c15ull) ^ 0x5851f42d4c957f2dull);
  }

 private:
  std::uint64_t state_;
};

template <typename T>
void fisher_yates(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

}  // namespace hardnash

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace qup {

// Bit vector over GF(2), packed into 64-bit words.
struct F2Vec {
  int nbits = 0;
  std::vector<uint64_t> w;

  F2Vec() = default;
  explicit F2Vec(int n) : nbits(n), w((n + 63) / 64, 0) {}

  bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  void set(int i, bool v = true) {
    if (v)
      w[i >> 6] |= uint64_t(1) << (i & 63);
    else
      w[i >> 6] &= ~(uint64_t(1) << (i & 63));
  }
  void flip(int i) { w[i >> 6] ^= uint64_t(1) << (i & 63); }
  void operator^=(const F2Vec& o) {
    for (size_t k = 0; k < w.size(); ++k) w[k] ^= o.w[k];
  }
  bool zero() const {
    for (uint64_t x : w)
      if (x) return false;
    return true;
  }
  int lowest_set() const {
    for (size_t k = 0; k < w.size(); ++k)
      if (w[k]) return int(k) * 64 + __builtin_ctzll(w[k]);
    return -1;
  }
};

// Incrementally built row space in reduced row echelon-ish form keyed by pivot.
class F2Space {
 public:
  explicit F2Space(int nbits) : nbits_(nbits) {}

  // Reduce v by the current basis; returns the residual.
  F2Vec reduce(F2Vec v) const {
    for (const auto& row : rows_) {
      int p = row.lowest_set();
      if (p >= 0 && v.get(p)) v ^= row;
    }
    return v;
  }

  bool contains(const F2Vec& v) const { return reduce(v).zero(); }

  // Returns true if v was independent (rank grew).
  bool add(const F2Vec& v) {
    F2Vec r = reduce(v);
    if (r.zero()) return false;
    rows_.push_back(r);
    return true;
  }

  int rank() const { return static_cast<int>(rows_.size()); }
  int nbits() const { return nbits_; }

 private:
  int nbits_;
  std::vector<F2Vec> rows_;
};

inline bool f2_dot(const F2Vec& a, const F2Vec& b) {
  uint64_t acc = 0;
  for (size_t k = 0; k < a.w.size(); ++k) acc ^= a.w[k] & b.w[k];
  return __builtin_parityll(acc);
}

// Gauss-Jordan solve of {rows[i] . v = rhs[i]} over GF(2). Returns the
// solution with all free variables zeroed, or nullopt if inconsistent.
inline std::optional<F2Vec> f2_solve(int nbits, const std::vector<F2Vec>& rows_in,
                                     const std::vector<uint8_t>& rhs_in) {
  std::vector<F2Vec> rows;
  std::vector<uint8_t> rhs;
  std::vector<int> pivot;
  for (size_t i = 0; i < rows_in.size(); ++i) {
    F2Vec r = rows_in[i];
    uint8_t b = rhs_in[i];
    for (size_t k = 0; k < rows.size(); ++k)
      if (r.get(pivot[k])) {
        r ^= rows[k];
        b ^= rhs[k];
      }
    if (r.zero()) {
      if (b) return std::nullopt;
      continue;
    }
    int p = r.lowest_set();
    for (size_t k = 0; k < rows.size(); ++k)
      if (rows[k].get(p)) {
        rows[k] ^= r;
        rhs[k] ^= b;
      }
    rows.push_back(r);
    rhs.push_back(b);
    pivot.push_back(p);
  }
  F2Vec v(nbits);
  for (size_t k = 0; k < rows.size(); ++k)
    if (rhs[k]) v.set(pivot[k]);
  return v;
}

}  // namespace qup

#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <algorithm>

#include "qrex/types.hpp"

namespace qrex {

// Best rational approximation with denominator <= max_den.
std::pair<std::int64_t, std::int64_t> snap_rational(double x, std::int64_t max_den = 1000000);

struct StreamExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bits from a finite vector, for tests and replay.
class VectorBits {
 public:
  explicit VectorBits(std::vector<int> b) : bits_(std::move(b)) {}
  int bit() {
    if (pos_ >= bits_.size()) throw StreamExhausted("uniform bit stream exhausted");
    return bits_[pos_++];
  }

 private:
  std::vector<int> bits_;
  std::size_t pos_ = 0;
};

// Unsigned multi-limb integer with just the operations the interval algorithm needs.
// Capacity is fixed; callers bound the size through the restart period.
class SmallNat {
 public:
  static constexpr int kLimbs = 96;
  SmallNat() = default;
  SmallNat(const SmallNat& o) { *this = o; }
  SmallNat& operator=(const SmallNat& o) {
    n_ = o.n_;
    std::copy(o.v_, o.v_ + n_, v_);
    return *this;
  }
  void set(std::uint64_t x) {
    n_ = x ? 1 : 0;
    v_[0] = x;
  }
  int bits() const { return n_ ? 64 * (n_ - 1) + 64 - __builtin_clzll(v_[n_ - 1]) : 0; }
  // out = this * m
  void mul(std::uint64_t m, SmallNat& out) const {
    unsigned __int128 c = 0;
    for (int i = 0; i < n_; ++i) {
      c += static_cast<unsigned __int128>(v_[i]) * m;
      out.v_[i] = static_cast<std::uint64_t>(c);
      c >>= 64;
    }
    out.n_ = n_;
    if (c) out.v_[out.n_++] = static_cast<std::uint64_t>(c);
    out.trim();
  }
  void shl1() {
    std::uint64_t carry = 0;
    for (int i = 0; i < n_; ++i) {
      std::uint64_t nc = v_[i] >> 63;
      v_[i] = (v_[i] << 1) | carry;
      carry = nc;
    }
    if (carry) v_[n_++] = carry;
  }
  void add(const SmallNat& o) {
    int m = std::max(n_, o.n_);
    unsigned __int128 c = 0;
    for (int i = 0; i < m; ++i) {
      c += static_cast<unsigned __int128>(i < n_ ? v_[i] : 0) + (i < o.n_ ? o.v_[i] : 0);
      v_[i] = static_cast<std::uint64_t>(c);
      c >>= 64;
    }
    n_ = m;
    if (c) v_[n_++] = static_cast<std::uint64_t>(c);
  }
  // requires this >= o
  void sub(const SmallNat& o) {
    std::uint64_t borrow = 0;
    for (int i = 0; i < n_; ++i) {
      std::uint64_t b = i < o.n_ ? o.v_[i] : 0;
      std::uint64_t d = v_[i] - b - borrow;
      borrow = (v_[i] < b || (v_[i] == b && borrow)) ? 1 : 0;
      v_[i] = d;
    }
    trim();
  }
  static int cmp(const SmallNat& a, const SmallNat& b) {
    if (a.n_ != b.n_) return a.n_ < b.n_ ? -1 : 1;
    for (int i = a.n_ - 1; i >= 0; --i)
      if (a.v_[i] != b.v_[i]) return a.v_[i] < b.v_[i] ? -1 : 1;
    return 0;
  }
  // compares a + b with c
  static int cmp_sum(const SmallNat& a, const SmallNat& b, const SmallNat& c) {
    // a + b has at most max(n) + 1 limbs; only equal lengths need the full sum
    int m = std::max(a.n_, b.n_);
    if (m + 1 < c.n_) return -1;
    if (m > c.n_) return 1;
    std::uint64_t s[kLimbs];
    unsigned __int128 carry = 0;
    for (int i = 0; i < m; ++i) {
      carry += static_cast<unsigned __int128>(i < a.n_ ? a.v_[i] : 0) + (i < b.n_ ? b.v_[i] : 0);
      s[i] = static_cast<std::uint64_t>(carry);
      carry >>= 64;
    }
    int n = m;
    if (carry) s[n++] = static_cast<std::uint64_t>(carry);
    if (n != c.n_) return n < c.n_ ? -1 : 1;
    for (int i = n - 1; i >= 0; --i)
      if (s[i] != c.v_[i]) return s[i] < c.v_[i] ? -1 : 1;
    return 0;
  }

 private:
  void trim() {
    while (n_ && !v_[n_ - 1]) --n_;
  }
  std::uint64_t v_[kLimbs];
  int n_ = 0;
};

// Han-Hoshi interval algorithm for a Bernoulli(num/den) source fed by fair bits, in exact
// integer arithmetic. The uniform real U is known to lie in [A/Q, (A+W)/Q); each emitted
// symbol rescales the chosen subinterval back to [0, 1). State is discarded every
// `restart` symbols to keep the integers bounded, costing at most a few bits per restart.
class IntervalSampler {
 public:
  IntervalSampler(std::int64_t num, std::int64_t den, int restart = 512);

  template <class Bits>
  int next(Bits& src) {
    if (emitted_ >= restart_ || Q_.bits() > 64 * (SmallNat::kLimbs - 4)) reset();
    // AD = A den, WD = W den, KQ = Q k0; reading a bit maps A -> 2A + bit W, Q -> 2Q
    A_.mul(den_, AD_);
    W_.mul(den_, WD_);
    Q_.mul(k0_, KQ_);
    for (;;) {
      if (SmallNat::cmp_sum(AD_, WD_, KQ_) <= 0) {
        A_ = AD_;
        W_ = WD_;
        Q_ = KQ_;
        ++emitted_;
        return 0;
      }
      if (SmallNat::cmp(AD_, KQ_) >= 0) {
        AD_.sub(KQ_);
        A_ = AD_;
        W_ = WD_;
        Q_.mul(num_, KQ_);
        Q_ = KQ_;
        ++emitted_;
        return 1;
      }
      int b = src.bit();
      ++consumed_;
      Q_.shl1();
      KQ_.shl1();
      AD_.shl1();
      if (b) AD_.add(WD_);
    }
  }

  std::int64_t bits_consumed() const { return consumed_; }
  void reset();

 private:
  std::uint64_t num_, den_, k0_;
  int restart_;
  int emitted_ = 0;
  std::int64_t consumed_ = 0;
  SmallNat A_, W_, Q_, AD_, KQ_, WD_;
};

struct InputTriple {
  int t, x, y;
};

// t ~ Bernoulli(gamma) by the interval algorithm; on test rounds x takes two fresh fair
// bits and y = y(x); generation rounds use (x, y) = (0, 1).
class InputSampler {
 public:
  explicit InputSampler(double gamma, int restart = 512);
  template <class Bits>
  InputTriple next(Bits& src) {
    int t = iv_.next(src);
    if (!t) return {0, 0, 1};
    int x = src.bit() << 1;
    x |= src.bit();
    extra_ += 2;
    return {1, x, x < 2 ? 0 : 1};
  }
  std::int64_t bits_consumed() const { return iv_.bits_consumed() + extra_; }
  std::pair<std::int64_t, std::int64_t> gamma_rational() const { return g_; }

 private:
  std::pair<std::int64_t, std::int64_t> g_;
  IntervalSampler iv_;
  std::int64_t extra_ = 0;
};

struct SampledInputs {
  std::vector<InputTriple> rounds;
  std::int64_t bits_consumed = 0;
};

// Throws StreamExhausted when the bits run out.
template <class Bits>
SampledInputs sample_inputs(std::int64_t n, double gamma, Bits& src) {
  InputSampler s(gamma);
  SampledInputs out;
  out.rounds.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out.rounds.push_back(s.next(src));
  out.bits_consumed = s.bits_consumed();
  return out;
}

}  // namespace qrex

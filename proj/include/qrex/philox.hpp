#pragma once

#include <array>
#include <cstdint>

namespace qrex {

// Philox4x32-10 counter-based generator (Salmon et al.). Not security randomness.
struct Philox4x32 {
  typedef std::array<std::uint32_t, 4> Ctr;
  typedef std::array<std::uint32_t, 2> Key;

  static Ctr block(Ctr c, Key k) {
    for (int r = 0; r < 10; ++r) {
      std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
      std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
      c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
           std::uint32_t(p0)};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return c;
  }
};

// Sequential stream over the counter space of one (seed, block, lane) substream.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t block, std::uint32_t lane)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, ctr_{0, lane, std::uint32_t(block), std::uint32_t(block >> 32)} {}

  std::uint32_t next32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }
  std::uint64_t next64() {
    std::uint64_t hi = next32();
    return (hi << 32) | next32();
  }
  // uniform on [0, 1) with 53 random bits
  double uniform() { return (next64() >> 11) * 0x1.0p-53; }

  int bit() {
    if (nbits_ == 0) {
      bits_ = next32();
      nbits_ = 32;
    }
    --nbits_;
    return (bits_ >> nbits_) & 1u;
  }

 private:
  void refill() {
    buf_ = Philox4x32::block(ctr_, key_);
    ++ctr_[0];
    pos_ = 0;
  }
  Philox4x32::Key key_;
  Philox4x32::Ctr ctr_;
  Philox4x32::Ctr buf_{};
  int pos_ = 4;
  std::uint32_t bits_ = 0;
  int nbits_ = 0;
};

}  // namespace qrex

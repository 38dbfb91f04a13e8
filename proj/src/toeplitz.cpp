#include "qrex/toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>

#include <unsupported/Eigen/FFT>

#include "qrex/types.hpp"

namespace qrex {

std::int64_t seed_length(std::int64_t input_len, std::int64_t out_len) {
  if (out_len < 1 || input_len < 0) throw DomainError("seed_length: out_len must be at least 1");
  return input_len + out_len - 1;
}

namespace {

void check(const Bits& r, const Bits& seed, std::int64_t out_len) {
  if (out_len < 0) throw DomainError("extract: negative output length");
  if (out_len > 0 && static_cast<std::int64_t>(seed.size()) != seed_length(static_cast<std::int64_t>(r.size()), out_len))
    throw DomainError("extract: seed length must be len(r) + l - 1");
}

}  // namespace

Bits extract_naive(const Bits& r, const Bits& seed, std::int64_t out_len) {
  check(r, seed, out_len);
  const std::int64_t n = static_cast<std::int64_t>(r.size());
  Bits z(static_cast<std::size_t>(out_len), 0);
  for (std::int64_t i = 0; i < out_len; ++i) {
    std::uint8_t acc = 0;
    for (std::int64_t j = 0; j < n; ++j) acc ^= seed[j - i + out_len - 1] & r[j];
    z[i] = acc;
  }
  return z;
}

Bits extract(const Bits& r, const Bits& seed, std::int64_t out_len, std::int64_t block) {
  check(r, seed, out_len);
  if (block < 1) throw DomainError("extract: block must be positive");
  const std::int64_t n = static_cast<std::int64_t>(r.size()), ns = static_cast<std::int64_t>(seed.size());
  Bits z(static_cast<std::size_t>(out_len), 0);
  if (out_len == 0 || n == 0) return z;
  Eigen::FFT<double> fft;
  std::vector<double> a, b, c;
  std::vector<std::complex<double>> fa, fb;
  for (std::int64_t i0 = 0; i0 < out_len; i0 += block) {
    const std::int64_t bi = std::min(block, out_len - i0);
    for (std::int64_t j0 = 0; j0 < n; j0 += block) {
      const std::int64_t bj = std::min(block, n - j0);
      // corr[w] = sum_u seg[u + w] r[j0 + u], w = bi - 1 - (i - i0)
      const std::int64_t base = j0 - i0 - bi + out_len, len = bj + bi - 1;
      std::int64_t size = 1;
      while (size < len + bj) size <<= 1;
      a.assign(size, 0.0);
      b.assign(size, 0.0);
      bool any = false;
      for (std::int64_t t = 0; t < len; ++t) {
        std::int64_t k = base + t;
        if (k >= 0 && k < ns) a[t] = seed[k];
      }
      for (std::int64_t u = 0; u < bj; ++u)
        if (r[j0 + u]) {
          b[bj - 1 - u] = 1;
          any = true;
        }
      if (!any) continue;
      fft.fwd(fa, a);
      fft.fwd(fb, b);
      for (std::size_t q = 0; q < fa.size(); ++q) fa[q] *= fb[q];
      fft.inv(c, fa);
      for (std::int64_t v = 0; v < bi; ++v) {
        std::int64_t w = bi - 1 - v;
        long long cnt = std::llround(c[w + bj - 1]);
        z[i0 + v] ^= static_cast<std::uint8_t>(cnt & 1);
      }
    }
  }
  return z;
}

Bits finalize_output(const Bits& z, const Bits& seed) {
  Bits k = z;
  k.insert(k.end(), seed.begin(), seed.end());
  return k;
}

std::pair<Bits, Bits> split_output(const Bits& k, std::int64_t out_len) {
  if (out_len < 0 || out_len > static_cast<std::int64_t>(k.size())) throw DomainError("split_output: bad length");
  return {Bits(k.begin(), k.begin() + out_len), Bits(k.begin() + out_len, k.end())};
}

std::vector<std::uint8_t> pack_bits(const Bits& b) {
  std::vector<std::uint8_t> out((b.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) out[i / 8] |= std::uint8_t(0x80u >> (i % 8));
  return out;
}

Bits unpack_bits(const std::vector<std::uint8_t>& bytes, std::int64_t nbits) {
  if (nbits < 0) nbits = static_cast<std::int64_t>(bytes.size()) * 8;
  if (nbits > static_cast<std::int64_t>(bytes.size()) * 8) throw DomainError("unpack_bits: not enough bytes");
  Bits b(static_cast<std::size_t>(nbits));
  for (std::int64_t i = 0; i < nbits; ++i) b[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return b;
}

void write_bit_file(const std::string& path, const Bits& b) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  auto bytes = pack_bits(b);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("write failed: " + path);
}

Bits read_bit_file(const std::string& path, std::int64_t nbits) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (nbits > static_cast<std::int64_t>(bytes.size()) * 8) throw ConfigError("bit file shorter than expected: " + path);
  return unpack_bits(bytes, nbits);
}

}  // namespace qrex

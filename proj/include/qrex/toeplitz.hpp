#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qrex {

// One bit per element (0 or 1).
typedef std::vector<std::uint8_t> Bits;

// Toeplitz hashing over GF(2): T[i][j] = s[j - i + l - 1] for an l x n matrix, so s[l-1-i]
// runs down the first column and s[l-1 .. l+n-2] along the first row.
std::int64_t seed_length(std::int64_t input_len, std::int64_t out_len);

Bits extract_naive(const Bits& r, const Bits& seed, std::int64_t out_len);
// Blocked FFT convolution with parity reduction; block size does not affect the result.
Bits extract(const Bits& r, const Bits& seed, std::int64_t out_len, std::int64_t block = 1 << 18);

// K = Z || S
Bits finalize_output(const Bits& z, const Bits& seed);
std::pair<Bits, Bits> split_output(const Bits& k, std::int64_t out_len);

// Byte packing, most significant bit first; the tail of the last byte is zero.
std::vector<std::uint8_t> pack_bits(const Bits& b);
Bits unpack_bits(const std::vector<std::uint8_t>& bytes, std::int64_t nbits);
void write_bit_file(const std::string& path, const Bits& b);
// nbits < 0 reads every bit in the file
Bits read_bit_file(const std::string& path, std::int64_t nbits = -1);

}  // namespace qrex

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "fixture.hpp"
#include "qrex/toeplitz.hpp"
#include "qrex/types.hpp"

using namespace qrex;

namespace {

Bits from_string(const std::string& s) {
  Bits b;
  for (char c : s) b.push_back(static_cast<std::uint8_t>(c - '0'));
  return b;
}

Bits random_bits(std::mt19937_64& rng, std::size_t n) {
  Bits b(n);
  for (auto& v : b) v = rng() & 1;
  return b;
}

}  // namespace

TEST_CASE("seed length") {
  CHECK(seed_length(3, 2) == 4);
  CHECK(seed_length(1, 1) == 1);
  CHECK(seed_length(7000, 50) == 7049);
  CHECK_THROWS_AS(seed_length(3, 0), DomainError);
}

TEST_CASE("reference vectors") {
  auto v = load_fixture("extractor_vectors.json");
  for (auto& e : v["vectors"]) {
    Bits r = from_string(e["r"]), s = from_string(e["seed"]), z = from_string(e["z"]);
    std::int64_t l = e["out_len"];
    CHECK(extract_naive(r, s, l) == z);
    CHECK(extract(r, s, l) == z);
    CHECK(extract(r, s, l, 3) == z);
  }
}

TEST_CASE("linearity and zero input") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    std::size_t n = 1 + rng() % 60, l = 1 + rng() % 20;
    Bits s = random_bits(rng, n + l - 1), r1 = random_bits(rng, n), r2 = random_bits(rng, n), r3(n);
    for (std::size_t i = 0; i < n; ++i) r3[i] = r1[i] ^ r2[i];
    Bits z1 = extract(r1, s, l), z2 = extract(r2, s, l), z3 = extract(r3, s, l);
    for (std::size_t i = 0; i < l; ++i) CHECK(z3[i] == (z1[i] ^ z2[i]));
  }
  std::mt19937_64 r0(1);
  Bits s = random_bits(r0, 109);
  CHECK(extract(Bits(100, 0), s, 10) == Bits(10, 0));
  CHECK_THROWS_AS(extract(Bits(5, 1), Bits(5, 1), 2), DomainError);
}

TEST_CASE("fast path matches the naive product") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 1 + rng() % 3000, l = 1 + rng() % 300;
    Bits r = random_bits(rng, n), s = random_bits(rng, n + l - 1);
    std::int64_t block = 1 + static_cast<std::int64_t>(rng() % 700);
    CHECK(extract(r, s, l, block) == extract_naive(r, s, l));
  }
}

TEST_CASE("output framing and files") {
  Bits z = {1, 0, 1}, s = {0, 0, 1, 1, 0};
  Bits k = finalize_output(z, s);
  CHECK(k.size() == 8);
  auto [z2, s2] = split_output(k, 3);
  CHECK(z2 == z);
  CHECK(s2 == s);
  CHECK(finalize_output({}, s) == s);

  CHECK(pack_bits({1, 0, 0, 0, 0, 0, 0, 1, 1}) == std::vector<std::uint8_t>{0x81, 0x80});
  CHECK(unpack_bits({0x81, 0x80}, 9) == Bits{1, 0, 0, 0, 0, 0, 0, 1, 1});

  auto path = (std::filesystem::temp_directory_path() / "qrex_bits_test.bin").string();
  std::mt19937_64 rng(3);
  Bits b = random_bits(rng, 1001);
  write_bit_file(path, b);
  CHECK(read_bit_file(path, 1001) == b);
  CHECK(read_bit_file(path).size() == 1008);
  CHECK_THROWS_AS(read_bit_file(path, 2000), ConfigError);
  std::remove(path.c_str());
}

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qrex/model.hpp"

namespace qrex {

struct RoundRecord {
  std::uint8_t t = 0, x = 0, y = 1;
  std::int8_t b = 1;   // signed bin
  int score = -1;      // category, -1 for generation rounds
};

struct DeviationModel {
  enum class Kind { Honest, EfficiencyShift, AmplitudeShift, PhaseMisalignment, FixedOutcome };
  Kind kind = Kind::Honest;
  double shift = 0;  // delta eta, delta amplitude or delta theta (rad)
  int bin = 1;       // signed bin for FixedOutcome

  static DeviationModel honest() { return {}; }
  static DeviationModel efficiency(double d) { return {Kind::EfficiencyShift, d, 1}; }
  static DeviationModel amplitude(double d) { return {Kind::AmplitudeShift, d, 1}; }
  static DeviationModel phase(double d) { return {Kind::PhaseMisalignment, d, 1}; }
  static DeviationModel fixed(int b) { return {Kind::FixedOutcome, 0, b}; }
  static DeviationModel parse(const std::string& kind, double shift, int bin);
  std::string name() const;
};

struct SimOptions {
  bool keep_records = false;  // false: streaming, O(1) memory in n
  int workers = 1;
  std::int64_t block_rounds = 25000000;
  int interval_restart = 512;
};

struct RunTranscript {
  ProtocolParams params;
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  DeviationModel deviation;
  std::vector<RoundRecord> records;  // empty in streaming mode
  std::vector<std::int64_t> counts;  // per category
  std::int64_t test_rounds = 0;
  std::int64_t input_bits = 0;       // uniform bits consumed by input sampling
  ScoreDistribution freq;            // omega, delta of the target plus observed f
  Verdict verdict;
  std::vector<std::uint8_t> raw_bits;  // packed R, MSB first; empty in streaming mode
  std::int64_t raw_bit_length = 0;
};

// Per-(x, y) cumulative bin probabilities of the device under a deviation.
struct DeviceTables {
  std::array<std::array<std::vector<double>, 2>, 4> cdf;
  int nb[2];
};
DeviceTables device_tables(const ProtocolParams& p, const DeviationModel& dev);

// target supplies omega and delta for the accept test.
RunTranscript simulate_run(const ProtocolParams& p, const ScoreDistribution& target, std::int64_t n,
                           const DeviationModel& dev, std::uint64_t seed, const SimOptions& opt = {});

// Round code, MSB first: B (bits_for_b), T, X (2 bits), Y. B is coded as
// b + m_max for b < 0 and b + m_max - 1 for b > 0, i.e. -m_max..-1, +1..+m_max -> 0..2 m_max - 1.
int bits_for_b(const ProtocolParams& p);
int round_bits(const ProtocolParams& p);
std::uint32_t encode_round(const RoundRecord& r, int m_max);
RoundRecord decode_round(std::uint32_t code, int m_max);
std::vector<std::uint8_t> pack_raw_bits(const std::vector<RoundRecord>& rounds, const ProtocolParams& p);
std::vector<RoundRecord> unpack_raw_bits(const std::vector<std::uint8_t>& bits, std::int64_t n,
                                         const ProtocolParams& p);

std::string transcript_summary_json(const RunTranscript& t);

}  // namespace qrex

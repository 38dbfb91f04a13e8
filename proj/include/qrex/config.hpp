#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrex/completeness.hpp"
#include "qrex/eat.hpp"
#include "qrex/model.hpp"
#include "qrex/sdp.hpp"

namespace qrex {

struct RunConfig {
  ProtocolParams protocol;
  std::string aggregation = "standard";  // "standard" or "fine"
  ErrorBudget budget;

  struct Sdp {
    int level = 1;
    SdpOptions solver;
    double residual_cap = 1e-6;
  } sdp;

  Allocation allocation = Allocation::Equal;

  struct Sweep {
    std::vector<double> eta, amp, gamma, n;
  } sweep;

  struct Simulation {
    std::int64_t n = 1000000;
    std::uint64_t seed = 1;
    std::string deviation = "honest";
    double shift = 0;
    int bin = 1;
    std::int64_t block_rounds = 25000000;
    bool keep_records = false;
    std::string transcript;  // optional raw-bit file to ingest instead of simulating
  } simulation;

  struct Extract {
    std::string input;      // packed raw bits
    std::int64_t input_bits = -1;
    std::string seed_file;  // empty: seed drawn from the run's generator
    std::int64_t out_len = -1;  // -1: use the rate report
    std::string output = "K.bin";
  } extract;

  struct Device {
    std::vector<double> ratios = {0.2, 0.4, 0.6, 0.8, 1.0};
    double loss_fraction = 0.35;
    double phi_max = 1.5 * M_PI;
    int samples = 201;
    double target_range = M_PI / 2;
  } device;

  struct Paths {
    std::string out_dir = "out";
    std::string cache_dir;  // empty disables the certificate cache
  } paths;

  int workers = 1;

  // Re-derives the layout from the bin counts and aggregation, then checks every section.
  void finalize();
};

// Unknown keys and out-of-range values raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& c);

// QREX_WORKERS overrides the configured worker count when set.
int resolve_workers(int configured);

}  // namespace qrex

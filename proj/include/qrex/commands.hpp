#pragma once

#include <iosfwd>
#include <mutex>
#include <string>

#include "qrex/certificate.hpp"
#include "qrex/config.hpp"
#include "qrex/eat.hpp"
#include "qrex/sim.hpp"
#include "qrex/toeplitz.hpp"

namespace qrex {

enum ExitCode : int { kExitOk = 0, kExitAbort = 2, kExitNonpositive = 3, kExitConfig = 4, kExitNumerical = 5 };

// Certificates on disk, one JSON file per params hash. An empty directory disables it.
class CertificateCache {
 public:
  explicit CertificateCache(std::string dir) : dir_(std::move(dir)) {}
  bool load(const std::string& hash, DualCertificate& out) const;
  void store(const DualCertificate& c) const;

 private:
  std::string dir_;
};

struct RatePoint {
  ProtocolParams params;
  double n = 0;
  ScoreDistribution omega;  // honest omega with calibrated delta
  DualCertificate cert;
  double pguess = 1;  // alpha + lambda . omega
  RateReport report;
  bool from_cache = false;
};

// omega -> delta at eps_com -> certificate (cached or solved) -> tilde omega -> optimal beta.
RatePoint compute_rate_point(const RunConfig& cfg, const ProtocolParams& p, double n,
                             const CertificateCache* cache = nullptr);

std::string rate_csv_header();
std::string rate_csv_row(const RatePoint& r);

// Writes text to path through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& text);

int cmd_rate(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_certify(const RunConfig& cfg, std::ostream& log);
int cmd_extract(const RunConfig& cfg, std::ostream& log);
int cmd_device(const RunConfig& cfg, std::ostream& log);
int cmd_calibrate_delta(const RunConfig& cfg, std::ostream& log);

// Extractor seed for certify when no seed file is given: a Philox substream of the run seed
// disjoint from the ones the simulation uses.
Bits derived_seed_bits(std::uint64_t seed, std::int64_t nbits);

}  // namespace qrex

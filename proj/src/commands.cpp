#include "qrex/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qrex/device.hpp"
#include "qrex/moment.hpp"
#include "qrex/philox.hpp"

namespace qrex {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.paths.out_dir);
  return (fs::path(cfg.paths.out_dir) / name).string();
}

PguessOptions pguess_options(const RunConfig& cfg) {
  PguessOptions o;
  o.sdp = cfg.sdp.solver;
  o.residual_cap = cfg.sdp.residual_cap;
  return o;
}

// Honest target with delta calibrated for n rounds.
ScoreDistribution target_distribution(const RunConfig& cfg, const ProtocolParams& p, double n) {
  ScoreDistribution d = honest_score_distribution(p);
  d.delta = calibrate_delta(n, p.gamma, d, cfg.budget.eps_com_target, cfg.allocation);
  return d;
}

}  // namespace

bool CertificateCache::load(const std::string& hash, DualCertificate& out) const {
  if (dir_.empty()) return false;
  std::ifstream f(fs::path(dir_) / (hash + ".json"));
  if (!f) return false;
  std::stringstream ss;
  ss << f.rdbuf();
  DualCertificate c = certificate_from_json(ss.str());
  if (c.params_hash != hash) return false;
  out = c;
  return true;
}

void CertificateCache::store(const DualCertificate& c) const {
  if (dir_.empty()) return;
  fs::create_directories(dir_);
  write_file_atomic((fs::path(dir_) / (c.params_hash + ".json")).string(), certificate_to_json(c));
}

void write_file_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp" + std::to_string(std::hash<std::thread::id>()(std::this_thread::get_id()));
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + tmp);
    f << text;
    if (!f) throw ConfigError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

RatePoint compute_rate_point(const RunConfig& cfg, const ProtocolParams& p, double n, const CertificateCache* cache) {
  p.validate();
  RatePoint r;
  r.params = p;
  r.n = n;
  r.omega = target_distribution(cfg, p, n);
  const std::string hash = params_hash(p, cfg.sdp.level);
  if (cache && cache->load(hash, r.cert)) {
    r.from_cache = true;
  } else {
    MomentProblem P = build_moment_problem(p, cfg.sdp.level);
    r.cert = solve_pguess(r.omega.omega, P, pguess_options(cfg)).cert;
    if (cache) cache->store(r.cert);
  }
  if (r.cert.lambda.size() != r.omega.size()) throw NumericalError("certificate does not match the score layout");
  r.pguess = std::min(1.0, r.cert.evaluate(r.omega.omega));
  ScoreDistribution tilde;
  RateContext ctx = make_rate_context(n, r.cert, r.omega, p, cfg.budget, &tilde);
  r.report = optimize_beta(ctx);
  r.report.tilde_omega = tilde;
  return r;
}

std::string rate_csv_header() { return "eta,amp,gamma,n,beta,h,r_net,ell,ell_in,pguess\n"; }

std::string rate_csv_row(const RatePoint& r) {
  const RateReport& q = r.report;
  return fmt(r.params.eta) + "," + fmt(r.params.amp) + "," + fmt(r.params.gamma) + "," + fmt(r.n) + "," +
         fmt(q.beta) + "," + fmt(q.h) + "," + fmt(q.r_net) + "," + fmt(q.ell_out) + "," + fmt(q.ell_in) + "," +
         fmt(r.pguess) + "\n";
}

int cmd_rate(const RunConfig& cfg, std::ostream& log) {
  CertificateCache cache(cfg.paths.cache_dir);
  RatePoint r = compute_rate_point(cfg, cfg.protocol, cfg.protocol.n_rounds, &cache);
  ordered_json j = ordered_json::parse(rate_report_json(r.report));
  j["pguess"] = r.pguess;
  j["certificate"] = ordered_json::parse(certificate_to_json(r.cert));
  write_file_atomic(out_path(cfg, "rate.json"), j.dump(2));
  write_file_atomic(out_path(cfg, "rate.csv"), rate_csv_header() + rate_csv_row(r));
  log << "pguess " << fmt(r.pguess) << "  h " << fmt(r.report.h) << "  r_net " << fmt(r.report.r_net) << "\n";
  if (r.report.nonpositive_h || r.report.nonpositive_ell || r.report.r_net <= 0) return kExitNonpositive;
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  auto or_default = [](const std::vector<double>& v, double d) { return v.empty() ? std::vector<double>{d} : v; };
  const auto etas = or_default(cfg.sweep.eta, cfg.protocol.eta), amps = or_default(cfg.sweep.amp, cfg.protocol.amp),
             gammas = or_default(cfg.sweep.gamma, cfg.protocol.gamma),
             ns = or_default(cfg.sweep.n, cfg.protocol.n_rounds);
  struct Point {
    ProtocolParams p;
    double n;
  };
  std::vector<Point> grid;
  for (double e : etas)
    for (double a : amps)
      for (double g : gammas)
        for (double n : ns) {
          ProtocolParams p = cfg.protocol;
          p.eta = e;
          p.amp = a;
          p.gamma = g;
          grid.push_back({p, n});
        }

  CertificateCache cache(cfg.paths.cache_dir);
  const std::string dir = out_path(cfg, "sweep");
  fs::create_directories(dir);
  std::vector<std::string> rows(grid.size());
  std::vector<std::string> errors(grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        RatePoint r = compute_rate_point(cfg, grid[i].p, grid[i].n, &cache);
        rows[i] = rate_csv_row(r);
        write_file_atomic((fs::path(dir) / ("point_" + std::to_string(i) + ".csv")).string(),
                          rate_csv_header() + rows[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int nw = std::max(1, std::min<int>(resolve_workers(cfg.workers), static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::string csv = rate_csv_header();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!errors[i].empty()) throw NumericalError("sweep point " + std::to_string(i) + ": " + errors[i]);
    csv += rows[i];
  }
  write_file_atomic(out_path(cfg, "sweep.csv"), csv);
  log << grid.size() << " points written\n";
  return kExitOk;
}

namespace {

SimOptions sim_options(const RunConfig& cfg, bool keep) {
  SimOptions o;
  o.keep_records = keep;
  o.workers = resolve_workers(cfg.workers);
  o.block_rounds = cfg.simulation.block_rounds;
  return o;
}

DeviationModel deviation(const RunConfig& cfg) {
  return DeviationModel::parse(cfg.simulation.deviation, cfg.simulation.shift, cfg.simulation.bin);
}

// Transcript from a packed raw-bit file: records, counts and verdict, no simulation.
RunTranscript ingest_transcript(const RunConfig& cfg, const ScoreDistribution& target) {
  const ProtocolParams& p = cfg.protocol;
  const std::int64_t n = cfg.simulation.n;
  std::ifstream f(cfg.simulation.transcript, std::ios::binary);
  if (!f) throw ConfigError("cannot open transcript: " + cfg.simulation.transcript);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  RunTranscript t;
  t.params = p;
  t.seed = cfg.simulation.seed;
  t.n = n;
  try {
    t.records = unpack_raw_bits(bytes, n, p);
  } catch (const DomainError&) {
    throw ConfigError("transcript shorter than simulation.n rounds");
  }
  t.counts.assign(p.layout.size(), 0);
  for (const auto& r : t.records) {
    if (r.score >= 0) ++t.counts[r.score];
    t.test_rounds += r.t;
  }
  t.freq = target;
  Vec fr(p.layout.size());
  for (int c = 0; c < fr.size(); ++c) fr(c) = static_cast<double>(t.counts[c]) / static_cast<double>(n);
  t.freq.freq = fr;
  t.verdict = accept_counts(t.counts, target, p.gamma, static_cast<double>(n));
  t.raw_bits = std::move(bytes);
  t.raw_bits.resize(static_cast<std::size_t>((n * round_bits(p) + 7) / 8));
  t.raw_bit_length = n * round_bits(p);
  return t;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const double n = static_cast<double>(cfg.simulation.n);
  ScoreDistribution target = target_distribution(cfg, cfg.protocol, n);
  RunTranscript t = simulate_run(cfg.protocol, target, cfg.simulation.n, deviation(cfg), cfg.simulation.seed,
                                 sim_options(cfg, cfg.simulation.keep_records));
  write_file_atomic(out_path(cfg, "transcript.json"), transcript_summary_json(t));
  if (cfg.simulation.keep_records)
    write_file_atomic(out_path(cfg, "raw.bin"), std::string(t.raw_bits.begin(), t.raw_bits.end()));
  log << (t.verdict.accept ? "accept" : "abort") << "\n";
  return t.verdict.accept ? kExitOk : kExitAbort;
}

Bits derived_seed_bits(std::uint64_t seed, std::int64_t nbits) {
  // block index 2^63 lies beyond any block the simulation can reach
  PhiloxStream s(seed, std::uint64_t(1) << 63, 2);
  Bits b(static_cast<std::size_t>(nbits));
  for (auto& v : b) v = static_cast<std::uint8_t>(s.bit());
  return b;
}

int cmd_certify(const RunConfig& cfg, std::ostream& log) {
  const ProtocolParams& p = cfg.protocol;
  const double n = static_cast<double>(cfg.simulation.n);
  ScoreDistribution target = target_distribution(cfg, p, n);
  RunTranscript t = cfg.simulation.transcript.empty()
                        ? simulate_run(p, target, cfg.simulation.n, deviation(cfg), cfg.simulation.seed,
                                       sim_options(cfg, true))
                        : ingest_transcript(cfg, target);

  ordered_json v;
  v["verdict"] = t.verdict.accept ? "accept" : "abort";
  write_file_atomic(out_path(cfg, "transcript.json"), transcript_summary_json(t));
  const std::string kpath = out_path(cfg, cfg.extract.output);
  fs::remove(kpath);
  if (!t.verdict.accept) {
    write_file_atomic(out_path(cfg, "verdict.json"), v.dump(2));
    log << "abort\n";
    return kExitAbort;
  }

  CertificateCache cache(cfg.paths.cache_dir);
  RatePoint r = compute_rate_point(cfg, p, n, &cache);
  v["rate"] = ordered_json::parse(rate_report_json(r.report));
  std::int64_t ell = cfg.extract.out_len >= 0 ? cfg.extract.out_len : static_cast<std::int64_t>(r.report.ell_out);
  v["ell"] = ell;
  if (ell <= 0) {
    write_file_atomic(out_path(cfg, "verdict.json"), v.dump(2));
    log << "accept, nonpositive output length\n";
    return kExitNonpositive;
  }

  Bits raw = unpack_bits(t.raw_bits, t.raw_bit_length);
  const std::int64_t s_len = seed_length(t.raw_bit_length, ell);
  Bits seed = cfg.extract.seed_file.empty() ? derived_seed_bits(cfg.simulation.seed, s_len)
                                            : read_bit_file(cfg.extract.seed_file, s_len);
  Bits k = finalize_output(extract(raw, seed, ell), seed);
  auto packed = pack_bits(k);
  write_file_atomic(kpath, std::string(packed.begin(), packed.end()));
  v["seed_bits"] = s_len;
  v["k_bits"] = static_cast<std::int64_t>(k.size());
  write_file_atomic(out_path(cfg, "verdict.json"), v.dump(2));
  log << "accept, " << ell << " output bits\n";
  return kExitOk;
}

int cmd_extract(const RunConfig& cfg, std::ostream& log) {
  const auto& e = cfg.extract;
  if (e.input.empty() || e.seed_file.empty() || e.out_len < 1)
    throw ConfigError("extract needs extract.input, extract.seed_file and extract.out_len >= 1");
  Bits r = read_bit_file(e.input, e.input_bits);
  Bits seed = read_bit_file(e.seed_file, seed_length(static_cast<std::int64_t>(r.size()), e.out_len));
  Bits k = finalize_output(extract(r, seed, e.out_len), seed);
  auto packed = pack_bits(k);
  write_file_atomic(out_path(cfg, e.output), std::string(packed.begin(), packed.end()));
  log << k.size() << " bits written\n";
  return kExitOk;
}

int cmd_device(const RunConfig& cfg, std::ostream& log) {
  const auto& d = cfg.device;
  std::string curves = "r,phi1,intensity,phase\n";
  std::string summary = "r,bias,phi1_start,phi1_end,endpoint_intensity,mean_intensity,ripple\n";
  double best_r = NAN, best_i = -1;
  for (double ratio : d.ratios) {
    MzmConfig m;
    m.ratio = ratio;
    m.loss_slope = calibrated_loss_slope(d.loss_fraction);
    WorkingPoint w;
    bool found = true;
    try {
      w = find_working_point(m, d.target_range);
    } catch (const DomainError&) {
      found = false;
    }
    m.bias = found ? w.bias : 0;
    std::vector<double> phi, I, ph;
    mzm_sweep(m, 0, d.phi_max, d.samples, phi, I, ph);
    for (std::size_t i = 0; i < phi.size(); ++i)
      curves += fmt(ratio) + "," + fmt(phi[i]) + "," + fmt(I[i]) + "," + fmt(ph[i]) + "\n";
    if (found) {
      summary += fmt(ratio) + "," + fmt(w.bias) + "," + fmt(w.phi1_start) + "," + fmt(w.phi1_end) + "," +
                 fmt(w.endpoint_intensity) + "," + fmt(w.mean_intensity) + "," + fmt(w.max_intensity_ripple) + "\n";
      if (w.endpoint_intensity > best_i) {
        best_i = w.endpoint_intensity;
        best_r = ratio;
      }
    } else {
      summary += fmt(ratio) + ",nan,nan,nan,nan,nan,nan\n";
    }
  }
  write_file_atomic(out_path(cfg, "device_curves.csv"), curves);
  write_file_atomic(out_path(cfg, "device_summary.csv"), summary);
  log << "best ratio " << fmt(best_r) << " (endpoint intensity " << fmt(best_i) << ")\n";
  return kExitOk;
}

int cmd_calibrate_delta(const RunConfig& cfg, std::ostream& log) {
  const ProtocolParams& p = cfg.protocol;
  ScoreDistribution d = target_distribution(cfg, p, p.n_rounds);
  CompletenessReport rep = completeness_report(p.n_rounds, p.gamma, d);
  ordered_json j;
  j["n"] = p.n_rounds;
  j["gamma"] = p.gamma;
  j["eps_com_target"] = cfg.budget.eps_com_target;
  j["eps_com"] = rep.total;
  ordered_json cats = ordered_json::array();
  for (int c = 0; c < d.size(); ++c)
    cats.push_back({{"label", d.labels[c].name},
                    {"omega", d.omega(c)},
                    {"delta", d.delta(c)},
                    {"eps_com", rep.per_category(c)}});
  j["categories"] = cats;
  write_file_atomic(out_path(cfg, "delta.json"), j.dump(2));
  log << "eps_com " << fmt(rep.total) << "\n";
  return kExitOk;
}

}  // namespace qrex

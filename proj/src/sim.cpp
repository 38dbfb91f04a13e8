#include "qrex/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "qrex/interval.hpp"
#include "qrex/philox.hpp"

namespace qrex {

DeviationModel DeviationModel::parse(const std::string& kind, double shift, int bin) {
  if (kind == "honest") return honest();
  if (kind == "efficiency_shift") return efficiency(shift);
  if (kind == "amplitude_shift") return amplitude(shift);
  if (kind == "phase_misalignment") return phase(shift);
  if (kind == "fixed_outcome") {
    if (bin == 0) throw ConfigError("fixed_outcome: bin must be a nonzero signed index");
    return fixed(bin);
  }
  throw ConfigError("unknown deviation kind: " + kind);
}

std::string DeviationModel::name() const {
  switch (kind) {
    case Kind::Honest: return "honest";
    case Kind::EfficiencyShift: return "efficiency_shift";
    case Kind::AmplitudeShift: return "amplitude_shift";
    case Kind::PhaseMisalignment: return "phase_misalignment";
    case Kind::FixedOutcome: return "fixed_outcome";
  }
  return "?";
}

DeviceTables device_tables(const ProtocolParams& p, const DeviationModel& dev) {
  ProtocolParams q = p;
  double dtheta = 0;
  switch (dev.kind) {
    case DeviationModel::Kind::EfficiencyShift: q.eta = std::clamp(p.eta + dev.shift, 0.0, 1.0); break;
    case DeviationModel::Kind::AmplitudeShift: q.amp = std::abs(p.amp + dev.shift); break;
    case DeviationModel::Kind::PhaseMisalignment: dtheta = dev.shift; break;
    default: break;
  }
  DeviceTables T;
  T.nb[0] = p.bins_x;
  T.nb[1] = p.bins_p;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 2; ++y) {
      int nb = T.nb[y];
      Vec pr(nb);
      if (dev.kind == DeviationModel::Kind::FixedOutcome) {
        int m = nb / 2;
        int b = std::clamp(dev.bin, -m, m);
        if (b == 0) b = 1;
        pr.setZero();
        pr(bin_of_signed_index(b, nb)) = 1;
      } else {
        pr = bin_probabilities(x, (y == 0 ? 0.0 : M_PI / 2) + dtheta, q, nb);
      }
      auto& c = T.cdf[x][y];
      c.resize(nb);
      double s = 0;
      for (int i = 0; i < nb; ++i) c[i] = (s += pr(i));
      c[nb - 1] = 2;  // absorb rounding so every draw lands in a bin
    }
  return T;
}

int bits_for_b(const ProtocolParams& p) {
  int m = std::max(p.bins_x, p.bins_p);
  int bits = 0;
  while ((1 << bits) < m) ++bits;
  return bits;
}

int round_bits(const ProtocolParams& p) { return bits_for_b(p) + 4; }

std::uint32_t encode_round(const RoundRecord& r, int m_max) {
  std::uint32_t bc = static_cast<std::uint32_t>(r.b < 0 ? r.b + m_max : r.b + m_max - 1);
  return (bc << 4) | (std::uint32_t(r.t) << 3) | (std::uint32_t(r.x) << 1) | r.y;
}

RoundRecord decode_round(std::uint32_t code, int m_max) {
  RoundRecord r;
  r.y = code & 1;
  r.x = (code >> 1) & 3;
  r.t = (code >> 3) & 1;
  int bc = static_cast<int>(code >> 4);
  r.b = static_cast<std::int8_t>(bc < m_max ? bc - m_max : bc - m_max + 1);
  return r;
}

namespace {

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void put(std::uint32_t v, int nbits) {
    for (int i = nbits - 1; i >= 0; --i) {
      if (pos_ % 8 == 0) out_.push_back(0);
      if ((v >> i) & 1u) out_.back() |= std::uint8_t(0x80u >> (pos_ % 8));
      ++pos_;
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::int64_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> pack_raw_bits(const std::vector<RoundRecord>& rounds, const ProtocolParams& p) {
  const int m_max = std::max(p.bins_x, p.bins_p) / 2, w = round_bits(p);
  std::vector<std::uint8_t> out;
  out.reserve((rounds.size() * w + 7) / 8);
  BitWriter bw(out);
  for (auto& r : rounds) bw.put(encode_round(r, m_max), w);
  return out;
}

std::vector<RoundRecord> unpack_raw_bits(const std::vector<std::uint8_t>& bits, std::int64_t n,
                                         const ProtocolParams& p) {
  const int m_max = std::max(p.bins_x, p.bins_p) / 2, w = round_bits(p);
  if (static_cast<std::int64_t>(bits.size()) * 8 < n * w) throw DomainError("unpack_raw_bits: buffer too short");
  std::vector<RoundRecord> out(static_cast<std::size_t>(n));
  std::int64_t pos = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::uint32_t v = 0;
    for (int k = 0; k < w; ++k, ++pos) v = (v << 1) | ((bits[pos / 8] >> (7 - pos % 8)) & 1u);
    RoundRecord r = decode_round(v, m_max);
    r.score = assign_score(r.t, r.x, r.y, r.b, p.layout);
    out[i] = r;
  }
  return out;
}

RunTranscript simulate_run(const ProtocolParams& p, const ScoreDistribution& target, std::int64_t n,
                           const DeviationModel& dev, std::uint64_t seed, const SimOptions& opt) {
  p.validate();
  if (n <= 0) throw DomainError("simulate_run: n must be positive");
  if (target.size() != p.layout.size() || target.delta.size() != target.omega.size())
    throw DomainError("simulate_run: target distribution does not match the layout");
  if (opt.block_rounds <= 0) throw DomainError("simulate_run: block_rounds must be positive");
  const DeviceTables T = device_tables(p, dev);
  const int C = p.layout.size();

  // category lookup per (x, bin of the state's own basis)
  std::array<std::vector<int>, 4> cat;
  for (int x = 0; x < 4; ++x) {
    int y = basis_of_state(x);
    for (int i = 0; i < T.nb[y]; ++i) cat[x].push_back(assign_score(1, x, y, signed_index_of_bin(i, T.nb[y]), p.layout));
  }

  RunTranscript tr;
  tr.params = p;
  tr.seed = seed;
  tr.n = n;
  tr.deviation = dev;
  tr.counts.assign(C, 0);
  if (opt.keep_records) tr.records.resize(static_cast<std::size_t>(n));

  const std::int64_t nblocks = (n + opt.block_rounds - 1) / opt.block_rounds;
  std::atomic<std::int64_t> next{0};
  std::mutex mu;

  auto work = [&]() {
    for (;;) {
      std::int64_t k = next.fetch_add(1);
      if (k >= nblocks) return;
      std::int64_t lo = k * opt.block_rounds, hi = std::min(n, lo + opt.block_rounds);
      PhiloxStream in_bits(seed, static_cast<std::uint64_t>(k), 0), dev_rng(seed, static_cast<std::uint64_t>(k), 1);
      InputSampler inputs(p.gamma, opt.interval_restart);
      std::vector<std::int64_t> cnt(C, 0);
      std::int64_t tests = 0;
      for (std::int64_t i = lo; i < hi; ++i) {
        InputTriple in = inputs.next(in_bits);
        const auto& cdf = T.cdf[in.x][in.y];
        double u = dev_rng.uniform();
        int bin = 0;
        while (u >= cdf[bin]) ++bin;
        int score = -1;
        if (in.t) {
          score = cat[in.x][bin];
          ++cnt[score];
          ++tests;
        }
        if (opt.keep_records) {
          RoundRecord& r = tr.records[static_cast<std::size_t>(i)];
          r.t = static_cast<std::uint8_t>(in.t);
          r.x = static_cast<std::uint8_t>(in.x);
          r.y = static_cast<std::uint8_t>(in.y);
          r.b = static_cast<std::int8_t>(signed_index_of_bin(bin, T.nb[in.y]));
          r.score = score;
        }
      }
      std::lock_guard<std::mutex> g(mu);
      for (int c = 0; c < C; ++c) tr.counts[c] += cnt[c];
      tr.test_rounds += tests;
      tr.input_bits += inputs.bits_consumed();
    }
  };
  int nw = std::max(1, std::min<int>(opt.workers, static_cast<int>(std::min<std::int64_t>(nblocks, 256))));
  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  tr.freq = target;
  Vec f(C);
  for (int c = 0; c < C; ++c) f(c) = static_cast<double>(tr.counts[c]) / static_cast<double>(n);
  tr.freq.freq = f;
  tr.verdict = accept_counts(tr.counts, target, p.gamma, static_cast<double>(n));
  if (opt.keep_records) {
    tr.raw_bits = pack_raw_bits(tr.records, p);
    tr.raw_bit_length = n * round_bits(p);
  }
  return tr;
}

std::string transcript_summary_json(const RunTranscript& t) {
  nlohmann::ordered_json j;
  j["seed"] = t.seed;
  j["n"] = t.n;
  j["deviation"] = {{"kind", t.deviation.name()}, {"shift", t.deviation.shift}, {"bin", t.deviation.bin}};
  j["test_rounds"] = t.test_rounds;
  j["input_bits"] = t.input_bits;
  nlohmann::ordered_json cats = nlohmann::ordered_json::array();
  for (int c = 0; c < t.freq.size(); ++c)
    cats.push_back({{"label", t.freq.labels[c].name},
                    {"count", t.counts[c]},
                    {"f", (*t.freq.freq)(c)},
                    {"omega", t.freq.omega(c)},
                    {"delta", t.freq.delta(c)}});
  j["categories"] = cats;
  j["verdict"] = t.verdict.accept ? "accept" : "abort";
  nlohmann::ordered_json v = nlohmann::ordered_json::array();
  for (int c : t.verdict.violated) v.push_back(t.freq.labels[c].name);
  j["violated"] = v;
  j["raw_bit_length"] = t.raw_bit_length;
  return j.dump(2);
}

}  // namespace qrex

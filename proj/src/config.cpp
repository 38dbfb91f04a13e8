#include "qrex/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrex/sim.hpp"

namespace qrex {

using nlohmann::ordered_json;

namespace {

// Reads the keys of one object and rejects anything it was not asked about.
class Section {
 public:
  Section(const ordered_json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key: " + name_ + "." + it.key());
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const ordered_json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return name_ + "." + key; }

 private:
  const ordered_json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void RunConfig::finalize() {
  if (aggregation == "standard")
    protocol.layout = ScoreLayout::standard(protocol.bins_x, protocol.bins_p);
  else if (aggregation == "fine")
    protocol.layout = ScoreLayout::fine(protocol.bins_x, protocol.bins_p);
  else
    throw ConfigError("protocol.aggregation must be \"standard\" or \"fine\"");
  try {
    protocol.validate();
    budget.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  require(sdp.level == 1 || sdp.level == 2, "sdp.level must be 1 or 2");
  require(sdp.solver.max_iterations > 0, "sdp.max_iterations must be positive");
  require(sdp.solver.gap_tol > 0 && sdp.solver.feas_tol > 0, "sdp tolerances must be positive");
  require(sdp.residual_cap > 0, "sdp.residual_cap must be positive");
  for (double v : sweep.eta) require(v >= 0 && v <= 1, "sweep.eta entries must lie in [0, 1]");
  for (double v : sweep.amp) require(v > 0, "sweep.amp entries must be positive");
  for (double v : sweep.gamma) require(v > 0 && v < 1, "sweep.gamma entries must lie in (0, 1)");
  for (double v : sweep.n) require(v >= 1, "sweep.n entries must be >= 1");
  require(simulation.n > 0, "simulation.n must be positive");
  require(simulation.block_rounds > 0, "simulation.block_rounds must be positive");
  DeviationModel::parse(simulation.deviation, simulation.shift, simulation.bin);
  require(extract.out_len >= -1, "extract.out_len must be >= -1");
  for (double r : device.ratios) require(r > 0 && r <= 1, "device.ratios entries must lie in (0, 1]");
  require(device.loss_fraction >= 0 && device.loss_fraction < 1, "device.loss_fraction must lie in [0, 1)");
  require(device.phi_max > 0, "device.phi_max must be positive");
  require(device.samples >= 2, "device.samples must be >= 2");
  require(device.target_range >= 0, "device.target_range must be >= 0");
  require(workers >= 1, "workers must be >= 1");
}

RunConfig parse_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Section root(j, "config");
    if (root.has("protocol")) {
      Section s(root.at("protocol"), "protocol");
      auto& p = c.protocol;
      s.get("gamma", p.gamma);
      s.get("amp", p.amp);
      s.get("eta", p.eta);
      s.get("bins_x", p.bins_x);
      s.get("bins_p", p.bins_p);
      s.get("bin_half_range", p.bin_half_range);
      s.get("n", p.n_rounds);
      s.get("aggregation", c.aggregation);
    }
    if (root.has("budget")) {
      Section s(root.at("budget"), "budget");
      auto& b = c.budget;
      s.get("eps_s", b.eps_s);
      bool split = !s.has("eps_1") && !s.has("eps_2");
      s.get("eps_1", b.eps_1);
      s.get("eps_2", b.eps_2);
      if (split) b.eps_1 = b.eps_2 = b.eps_s / 4;
      s.get("eps_EA", b.eps_EA);
      s.get("eps_ext", b.eps_ext);
      s.get("eps_com", b.eps_com_target);
    }
    if (root.has("sdp")) {
      Section s(root.at("sdp"), "sdp");
      s.get("level", c.sdp.level);
      s.get("max_iterations", c.sdp.solver.max_iterations);
      s.get("gap_tol", c.sdp.solver.gap_tol);
      s.get("feas_tol", c.sdp.solver.feas_tol);
      s.get("residual_cap", c.sdp.residual_cap);
    }
    if (root.has("delta")) {
      Section s(root.at("delta"), "delta");
      std::string a = "equal";
      s.get("allocation", a);
      if (a == "equal")
        c.allocation = Allocation::Equal;
      else if (a == "proportional")
        c.allocation = Allocation::Proportional;
      else
        throw ConfigError("delta.allocation must be \"equal\" or \"proportional\"");
    }
    if (root.has("sweep")) {
      Section s(root.at("sweep"), "sweep");
      s.get("eta", c.sweep.eta);
      s.get("amp", c.sweep.amp);
      s.get("gamma", c.sweep.gamma);
      s.get("n", c.sweep.n);
    }
    if (root.has("simulation")) {
      Section s(root.at("simulation"), "simulation");
      auto& m = c.simulation;
      s.get("n", m.n);
      s.get("seed", m.seed);
      s.get("deviation", m.deviation);
      s.get("shift", m.shift);
      s.get("bin", m.bin);
      s.get("block_rounds", m.block_rounds);
      s.get("keep_records", m.keep_records);
      s.get("transcript", m.transcript);
    }
    if (root.has("extract")) {
      Section s(root.at("extract"), "extract");
      s.get("input", c.extract.input);
      s.get("input_bits", c.extract.input_bits);
      s.get("seed_file", c.extract.seed_file);
      s.get("out_len", c.extract.out_len);
      s.get("output", c.extract.output);
    }
    if (root.has("device")) {
      Section s(root.at("device"), "device");
      s.get("ratios", c.device.ratios);
      s.get("loss_fraction", c.device.loss_fraction);
      s.get("phi_max", c.device.phi_max);
      s.get("samples", c.device.samples);
      s.get("target_range", c.device.target_range);
    }
    if (root.has("paths")) {
      Section s(root.at("paths"), "paths");
      s.get("out_dir", c.paths.out_dir);
      s.get("cache_dir", c.paths.cache_dir);
    }
    root.get("workers", c.workers);
  }
  c.finalize();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  const auto& p = c.protocol;
  j["protocol"] = {{"gamma", p.gamma},   {"amp", p.amp},
                   {"eta", p.eta},       {"bins_x", p.bins_x},
                   {"bins_p", p.bins_p}, {"bin_half_range", p.bin_half_range},
                   {"n", p.n_rounds},    {"aggregation", c.aggregation}};
  const auto& b = c.budget;
  j["budget"] = {{"eps_s", b.eps_s},   {"eps_1", b.eps_1},     {"eps_2", b.eps_2},
                 {"eps_EA", b.eps_EA}, {"eps_ext", b.eps_ext}, {"eps_com", b.eps_com_target}};
  j["sdp"] = {{"level", c.sdp.level},
              {"max_iterations", c.sdp.solver.max_iterations},
              {"gap_tol", c.sdp.solver.gap_tol},
              {"feas_tol", c.sdp.solver.feas_tol},
              {"residual_cap", c.sdp.residual_cap}};
  j["delta"] = {{"allocation", c.allocation == Allocation::Equal ? "equal" : "proportional"}};
  j["sweep"] = {{"eta", c.sweep.eta}, {"amp", c.sweep.amp}, {"gamma", c.sweep.gamma}, {"n", c.sweep.n}};
  const auto& m = c.simulation;
  j["simulation"] = {{"n", m.n},
                     {"seed", m.seed},
                     {"deviation", m.deviation},
                     {"shift", m.shift},
                     {"bin", m.bin},
                     {"block_rounds", m.block_rounds},
                     {"keep_records", m.keep_records},
                     {"transcript", m.transcript}};
  j["extract"] = {{"input", c.extract.input},
                  {"input_bits", c.extract.input_bits},
                  {"seed_file", c.extract.seed_file},
                  {"out_len", c.extract.out_len},
                  {"output", c.extract.output}};
  j["device"] = {{"ratios", c.device.ratios},
                 {"loss_fraction", c.device.loss_fraction},
                 {"phi_max", c.device.phi_max},
                 {"samples", c.device.samples},
                 {"target_range", c.device.target_range}};
  j["paths"] = {{"out_dir", c.paths.out_dir}, {"cache_dir", c.paths.cache_dir}};
  j["workers"] = c.workers;
  return j.dump(2);
}

int resolve_workers(int configured) {
  if (const char* s = std::getenv("QREX_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end == s || *end || v < 1 || v > 1024) throw ConfigError("QREX_WORKERS must be an integer in [1, 1024]");
    return static_cast<int>(v);
  }
  return configured;
}

}  // namespace qrex

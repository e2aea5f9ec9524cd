// percoflow command line: flow, nu, rate, cutset, phi-omega, selftest.
//
// Every flag mirrors a config key (--lambda-fraction <-> "lambda_fraction").
// A --config file supplies defaults; flags given on the command line win.
// Exit status: 0 ok, 1 runtime failure, 2 configuration error.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "percoflow/percoflow.hpp"

#ifndef PERCOFLOW_VERSION
#define PERCOFLOW_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace percoflow;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FlagType { integer, unsigned_integer, real, integer_list, real_list, json, text };

struct FlagSpec {
  const char* key;
  FlagType type;
  const char* help;
};

const std::map<std::string, FlagSpec>& flag_specs() {
  static const std::map<std::string, FlagSpec> specs{
      {"domain", {"domain", FlagType::text, "domain JSON file, or inline JSON object"}},
      {"law", {"law", FlagType::json, "capacity law, e.g. '{\"kind\":\"bernoulli\",\"p\":0.6}'"}},
      {"n", {"n", FlagType::integer, "mesh n (lattice spacing 1/n)"}},
      {"meshes", {"meshes", FlagType::integer_list, "comma separated meshes, increasing"}},
      {"replicas", {"replicas", FlagType::unsigned_integer, "replicas per mesh"}},
      {"seed", {"seed", FlagType::unsigned_integer, "master seed"}},
      {"out", {"out", FlagType::text, "output directory for artifacts"}},
      {"workers", {"workers", FlagType::unsigned_integer, "worker threads (default: all cores)"}},
      {"lambda", {"lambda", FlagType::real, "deviation level λ for P[φ_n <= λ n^{d-1}]"}},
      {"lambda-fraction",
       {"lambda_fraction", FlagType::real, "λ as a fraction of the estimated ν(e_1)"}},
      {"nu-meshes", {"nu_meshes", FlagType::integer_list, "meshes for the ν(e_1) estimate"}},
      {"nu-replicas", {"nu_replicas", FlagType::unsigned_integer, "replicas for the ν(e_1) estimate"}},
      {"betas", {"betas", FlagType::real_list, "comma separated β thresholds"}},
      {"d", {"d", FlagType::integer, "dimension (nu without a domain)"}},
      {"direction", {"direction", FlagType::real_list, "single direction v (normalized)"}},
      {"side", {"side", FlagType::real, "side length of the cylinder base A"}},
      {"h", {"h", FlagType::real, "cylinder half height"}},
      {"nu-table", {"nu_table", FlagType::text, "nu_table.json from a previous nu run"}},
      {"steps", {"steps", FlagType::integer, "offsets per direction in the φ_Ω search"}},
  };
  return specs;
}

Json parse_flag(const std::string& name, FlagType type, const std::string& text) {
  auto fail = [&](const char* what) -> Json {
    throw ConfigError("--" + name + ": expected " + what + ", got '" + text + "'");
  };
  auto number = [&](const std::string& s) -> Json {
    try {
      std::size_t used = 0;
      if (type == FlagType::integer || type == FlagType::integer_list) {
        const long long v = std::stoll(s, &used);
        if (used != s.size()) return fail("an integer");
        return v;
      }
      if (type == FlagType::unsigned_integer) {
        if (!s.empty() && s[0] == '-') return fail("a nonnegative integer");
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) return fail("a nonnegative integer");
        return v;
      }
      const double v = std::stod(s, &used);
      if (used != s.size()) return fail("a number");
      return v;
    } catch (const std::logic_error&) {
      return fail("a number");
    }
  };
  switch (type) {
    case FlagType::integer:
    case FlagType::unsigned_integer:
    case FlagType::real:
      return number(text);
    case FlagType::integer_list:
    case FlagType::real_list: {
      Json out = Json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(number(item));
      if (out.empty()) return fail("a comma separated list");
      return out;
    }
    case FlagType::json:
      try {
        return Json::parse(text);
      } catch (const Json::parse_error& e) {
        throw ConfigError("--" + name + ": invalid JSON at column " + std::to_string(e.byte) + ": " +
                          text);
      }
    case FlagType::text:
      return text;
  }
  return text;
}

// Effective configuration: file values overlaid with flags, plus where each
// value came from so errors can point at it.
class Config {
 public:
  void load_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    text_ = ss.str();
    path_ = path;
    try {
      json_ = Json::parse(text_);
    } catch (const Json::parse_error& e) {
      const auto [line, col] = line_column(text_, e.byte ? e.byte - 1 : 0);
      throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                        ": invalid JSON: " + strip_nlohmann(e.what()));
    }
    if (!json_.is_object()) throw ConfigError(path.string() + ":1: config must be a JSON object");
    for (const auto& [k, v] : json_.items()) {
      bool known = k == "command" || k == "schema";
      for (const auto& [flag, spec] : flag_specs()) known = known || k == spec.key;
      if (!known) throw ConfigError(where(k) + ": unknown key '" + k + "'");
    }
  }

  void set_flag(const std::string& flag, const FlagSpec& spec, const std::string& text) {
    json_[spec.key] = parse_flag(flag, spec.type, text);
    from_flag_[spec.key] = flag;
  }

  bool has(const std::string& key) const { return json_.contains(key) && !json_[key].is_null(); }

  std::string where(const std::string& key) const {
    if (auto it = from_flag_.find(key); it != from_flag_.end()) return "--" + it->second;
    if (!path_.empty()) {
      const auto line = key_line(text_, key);
      return path_.string() + ":" + std::to_string(line ? line : 1);
    }
    return "config";
  }

  [[noreturn]] void bad(const std::string& key, const std::string& what) const {
    throw ConfigError(where(key) + ": '" + key + "' " + what);
  }

  const Json& require(const std::string& key) const {
    if (!has(key)) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      throw ConfigError("missing required '" + key + "' (set --" + flag + " or \"" + key +
                        "\" in the config)");
    }
    return json_[key];
  }

  std::int64_t integer(const std::string& key) const {
    const Json& j = require(key);
    if (!j.is_number_integer()) bad(key, "must be an integer");
    return j.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const Json& j = require(key);
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used == s.size() && s[0] != '-') return v;
      } catch (const std::logic_error&) {
      }
      bad(key, "must be a nonnegative integer");
    }
    if (!j.is_number_unsigned()) bad(key, "must be a nonnegative integer");
    return j.get<std::uint64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? unsigned_integer(key) : fallback;
  }

  double real(const std::string& key) const {
    const Json& j = require(key);
    if (!j.is_number()) bad(key, "must be a number");
    return j.get<double>();
  }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  std::vector<std::int64_t> meshes(const std::string& key) const {
    const Json& j = require(key);
    if (!j.is_array() || j.empty()) bad(key, "must be a nonempty list of integers");
    std::vector<std::int64_t> out;
    for (const auto& x : j) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 1) bad(key, "entries must be integers >= 1");
      out.push_back(x.get<std::int64_t>());
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (out[i] <= out[i - 1]) bad(key, "must be strictly increasing");
    }
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    const Json& j = require(key);
    if (!j.is_array() || j.empty()) bad(key, "must be a nonempty list of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
      if (!x.is_number()) bad(key, "entries must be numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::string text(const std::string& key) const {
    const Json& j = require(key);
    if (!j.is_string()) bad(key, "must be a string");
    return j.get<std::string>();
  }

  CapacityLaw law() const {
    const Json& j = require("law");
    try {
      return law_from_json(j);
    } catch (const Error& e) {
      bad("law", std::string("is invalid: ") + e.what());
    } catch (const Json::exception& e) {
      bad("law", std::string("is invalid: ") + strip_nlohmann(e.what()));
    }
  }

  // "domain" is an inline object, inline JSON text, or a path (relative to
  // the config file when it came from there).
  Domain domain() const {
    const Json& j = require("domain");
    Json parsed;
    std::string origin = where("domain");
    if (j.is_object()) {
      parsed = j;
    } else if (j.is_string()) {
      const auto s = j.get<std::string>();
      std::string text = s;
      if (s.find('{') == std::string::npos) {
        fs::path p = s;
        if (p.is_relative() && !from_flag_.count("domain") && !path_.empty()) {
          p = path_.parent_path() / p;
        }
        std::ifstream in(p, std::ios::binary);
        if (!in) bad("domain", "names a file that cannot be opened: " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
        origin = p.string();
      }
      try {
        parsed = Json::parse(text);
      } catch (const Json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte ? e.byte - 1 : 0);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": invalid domain JSON: " + strip_nlohmann(e.what()));
      }
    } else {
      bad("domain", "must be an object or a file name");
    }
    try {
      return domain_from_json(parsed);
    } catch (const Error& e) {
      throw ConfigError(origin + ": invalid domain: " + e.what());
    } catch (const Json::exception& e) {
      throw ConfigError(origin + ": invalid domain: " + strip_nlohmann(e.what()));
    }
  }

  unsigned workers() const {
    const auto w = unsigned_integer("workers", default_workers());
    if (w == 0) bad("workers", "must be at least 1");
    return static_cast<unsigned>(w);
  }

  std::uint64_t seed() const { return unsigned_integer("seed", 1); }

  // Everything that determines results; "out" and "workers" do not.
  Json canonical() const {
    Json c = Json::object();
    for (const auto& [k, v] : json_.items()) {
      if (k != "out" && k != "workers") c[k] = v;
    }
    return c;
  }
  const Json& json() const { return json_; }

  static std::string strip_nlohmann(std::string what) {
    if (what.rfind("[json.exception.", 0) == 0) {
      const auto close = what.find("] ");
      if (close != std::string::npos) what = what.substr(close + 2);
    }
    return what;
  }

 private:
  Json json_ = Json::object();
  std::string text_;
  fs::path path_;
  std::map<std::string, std::string> from_flag_;
};

// ---------------------------------------------------------------------------
// Output.

class Artifacts {
 public:
  Artifacts(const Config& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    if (cfg.has("out")) dir_ = cfg.text("out");
    started_ = std::chrono::steady_clock::now();
    started_wall_ = std::time(nullptr);
  }

  bool enabled() const { return !dir_.empty(); }

  void write(const std::string& name, const std::string& content) {
    if (!enabled()) return;
    write_atomic(dir_ / name, content);
    files_.push_back(name);
  }

  void finish() {
    if (!enabled()) return;
    const Json canon = cfg_.canonical();
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_wall_));
    Json m{{"schema", kSchema},
           {"command", command_},
           {"version", PERCOFLOW_VERSION},
           {"config", canon},
           {"config_hash", hex64(fnv1a64(canon.dump()))},
           {"seed", std::to_string(cfg_.seed())},
           {"workers", cfg_.workers()},
           {"artifacts", files_},
           {"started", stamp},
           {"wall_seconds", seconds()}};
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  }

 private:
  const Config& cfg_;
  std::string command_;
  fs::path dir_;
  std::vector<std::string> files_;
  std::chrono::steady_clock::time_point started_;
  std::time_t started_wall_;
};

// Result JSON files carry the schema, command and seed; timings stay in the
// manifest so that these files are reproducible byte for byte.
Json header(const std::string& command, const Config& cfg) {
  return {{"schema", kSchema}, {"command", command}, {"seed", std::to_string(cfg.seed())}};
}

void emit(const Json& summary) { std::cout << summary.dump(2) << std::endl; }

void progress(const std::string& command, const std::string& msg) {
  std::cerr << "[" << command << "] " << msg << std::endl;
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

Json rate_point_json(const RatePoint& p, std::size_t d) {
  Json j{{"n", p.n},
         {"replicas", p.replicas},
         {"hits", p.hits},
         {"p_hat", p.p_hat},
         {"wilson", {p.wilson.lo, p.wilson.hi}},
         {"r_n", p.rate ? Json(*p.rate) : Json(nullptr)}};
  if (const auto iv = p.rate_interval(d)) j["r_n_interval"] = {iv->first, iv->second};
  return j;
}

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

NuOptions nu_options_from(const Config& cfg, const char* meshes_key, const char* replicas_key) {
  NuOptions opt;
  if (cfg.has(meshes_key)) opt.meshes = cfg.meshes(meshes_key);
  opt.replicas = cfg.unsigned_integer(replicas_key, opt.replicas);
  opt.side = cfg.real("side", opt.side);
  opt.h = cfg.real("h", opt.h);
  if (!(opt.side > 0)) cfg.bad("side", "must be positive");
  if (!(opt.h > 0)) cfg.bad("h", "must be positive");
  opt.seed = cfg.seed();
  opt.workers = cfg.workers();
  return opt;
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_flow(const Config& cfg) {
  const Domain domain = cfg.domain();
  const CapacityLaw law = cfg.law();
  const auto n = cfg.integer("n");
  if (n < 1) cfg.bad("n", "must be >= 1");
  const auto seed = cfg.seed();
  cfg.workers();
  Artifacts out(cfg, "flow");

  const PhiInstance inst = make_phi_instance(domain, n);
  progress("flow", "n=" + std::to_string(n) + ": " + std::to_string(inst.graph.num_vertices()) +
                       " vertices, " + std::to_string(inst.graph.num_edges()) + " edges");
  const PhiRun run = run_phi(inst, law, seed);
  Json summary = header("flow", cfg);
  summary["n"] = n;
  summary["d"] = domain.dim();
  summary["law"] = law_to_json(law);
  summary["phi_n"] = run.real_value();
  summary["phi_n_over_scale"] = run.real_value() / surface_scale(n, domain.dim());
  summary["cut_size"] = run.cut_size;
  summary["structural_zero"] = run.structural_zero;
  summary["vertices"] = inst.graph.num_vertices();
  summary["edges"] = inst.graph.num_edges();
  summary["gamma1"] = inst.sources.size();
  summary["gamma2"] = inst.sinks.size();
  if (!run.structural_zero) {
    const ClusterSummary c = source_cluster(inst, run, domain);
    summary["cluster"] = {{"vertices", c.vertices.size()},
                          {"boundary_size", c.boundary_size},
                          {"boundary_is_cutset", c.boundary_is_cut},
                          {"perimeter", c.perimeter},
                          {"volume", format_rational(c.volume)}};
  }
  summary["cutset_rule"] = "source-side canonical cut";
  out.write("vertices.csv", vertices_csv(inst.discrete));
  out.write("cut.csv", cut_csv(inst.graph, run.flow.cut.edges, run.caps));
  out.write("flow.json", summary.dump(2) + "\n");
  out.finish();
  emit(summary);
  return 0;
}

int cmd_nu(const Config& cfg) {
  const CapacityLaw law = cfg.law();
  std::size_t d = 0;
  if (cfg.has("d")) {
    d = static_cast<std::size_t>(cfg.integer("d"));
  } else if (cfg.has("domain")) {
    d = cfg.domain().dim();
  } else if (cfg.has("direction")) {
    d = cfg.reals("direction").size();
  } else {
    cfg.require("d");
  }
  if (d < 2 || d > kMaxDim) cfg.bad("d", "must be between 2 and " + std::to_string(kMaxDim));
  const NuOptions opt = nu_options_from(cfg, "meshes", "replicas");
  Artifacts out(cfg, "nu");

  std::vector<UnitVector> grid;
  if (cfg.has("direction")) {
    const auto v = cfg.reals("direction");
    if (v.size() != d) cfg.bad("direction", "must have d components");
    try {
      grid.push_back(UnitVector::normalized(v));
    } catch (const Error&) {
      cfg.bad("direction", "must be nonzero");
    }
  } else {
    grid = direction_grid(d);
  }
  std::vector<NuEstimate> entries;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    entries.push_back(estimate_nu(grid[i], law, opt));
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    progress("nu", "direction " + std::to_string(i + 1) + "/" + std::to_string(grid.size()) +
                       ": nu_hat=" + fmt(entries.back().nu_hat) + " (" + fmt_seconds(s) + ")");
  }
  const NuTable table(d, std::move(entries));
  Json summary = header("nu", cfg);
  summary["d"] = d;
  summary["law"] = law_to_json(law);
  const LawReport report = law_checks(law, d);
  summary["law_checks"] = {{"atom0", report.atom0},
                           {"threshold", 1.0 - bond_percolation_threshold(d)},
                           {"subcritical", report.subcritical},
                           {"has_exp_moment", report.has_exp_moment}};
  summary["directions"] = table.entries().size();
  summary["nu_min"] = table.nu_min();
  summary["nu_max"] = table.nu_max();
  summary["stderr_max"] = table.stderr_max();
  if (table.entries().size() == 1) summary["estimate"] = nu_estimate_to_json(table.entries()[0]);
  bool low = false;
  for (const auto& e : table.entries()) low = low || e.low_replicas;
  if (low) summary["warning"] = "fewer than 30 replicas per mesh";
  out.write("nu_table.json", nu_table_to_json(table).dump(2) + "\n");
  out.write("nu.csv", nu_csv(table));
  out.finish();
  emit(summary);
  return 0;
}

int cmd_rate(const Config& cfg) {
  const Domain domain = cfg.domain();
  const CapacityLaw law = cfg.law();
  const auto meshes = cfg.meshes("meshes");
  const auto replicas = cfg.unsigned_integer("replicas", 1000);
  const auto seed = cfg.seed();
  const auto workers = cfg.workers();
  const std::size_t d = domain.dim();
  if (cfg.has("lambda") == cfg.has("lambda_fraction")) {
    throw ConfigError("give exactly one of 'lambda' and 'lambda_fraction'");
  }
  Json summary = header("rate", cfg);
  double lambda = 0.0;
  if (cfg.has("lambda")) {
    lambda = cfg.real("lambda");
    if (lambda < 0) cfg.bad("lambda", "must be >= 0");
  } else {
    const double frac = cfg.real("lambda_fraction");
    if (frac < 0) cfg.bad("lambda_fraction", "must be >= 0");
    const NuOptions nopt = nu_options_from(cfg, "nu_meshes", "nu_replicas");
    const auto t0 = std::chrono::steady_clock::now();
    const NuEstimate e1 = estimate_nu(UnitVector::axis(d, 0, 1.0), law, nopt);
    lambda = frac * e1.nu_hat;
    progress("rate", "nu_hat(e1)=" + fmt(e1.nu_hat) + " +- " + fmt(e1.stderr_nu) + ", lambda=" +
                         fmt(lambda) + " (" +
                         fmt_seconds(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) +
                         ")");
    summary["nu_e1"] = nu_estimate_to_json(e1);
    summary["lambda_fraction"] = frac;
  }
  Artifacts out(cfg, "rate");

  RateEstimate est;
  est.lambda = lambda;
  est.dim = d;
  for (auto n : meshes) {
    const auto t0 = std::chrono::steady_clock::now();
    const PhiInstance inst = make_phi_instance(domain, n);
    const auto samples = phi_samples(inst, law, seed, replicas, workers);
    est.points.push_back(rate_point(n, d, samples, lambda));
    const auto& p = est.points.back();
    progress("rate", "n=" + std::to_string(n) + ": " + std::to_string(p.hits) + "/" +
                         std::to_string(p.replicas) + " hits (" +
                         fmt_seconds(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) +
                         ")");
  }
  est.verdict = rate_verdict(est.points, d);
  summary["d"] = d;
  summary["law"] = law_to_json(law);
  summary["lambda"] = lambda;
  summary["points"] = Json::array();
  for (const auto& p : est.points) summary["points"].push_back(rate_point_json(p, d));
  summary["verdict"] = {{"all_positive", est.verdict.all_positive},
                        {"monotone_beyond_noise", est.verdict.monotone_beyond_noise},
                        {"points_with_hits", est.verdict.points_with_hits},
                        {"first_rate", optional_json(est.verdict.first_rate)},
                        {"last_rate", optional_json(est.verdict.last_rate)},
                        {"first_half_width", optional_json(est.verdict.first_half_width)}};
  out.write("rate.csv", rate_csv(est));
  out.write("rate.json", summary.dump(2) + "\n");
  out.finish();
  emit(summary);
  return 0;
}

int cmd_cutset(const Config& cfg) {
  const Domain domain = cfg.domain();
  const CapacityLaw law = cfg.law();
  CutsetOptions opt;
  opt.meshes = cfg.meshes("meshes");
  opt.betas = cfg.has("betas") ? cfg.reals("betas") : std::vector<double>{1, 1.5, 2, 3, 4, 6, 8};
  opt.replicas = cfg.unsigned_integer("replicas", 1000);
  opt.seed = cfg.seed();
  opt.workers = cfg.workers();
  Artifacts out(cfg, "cutset");
  progress("cutset", "running " + std::to_string(opt.meshes.size()) + " meshes x " +
                         std::to_string(opt.replicas) + " replicas");
  const CutsetStats s = cutset_tail(domain, law, opt);
  Json summary = header("cutset", cfg);
  summary["d"] = domain.dim();
  summary["law"] = law_to_json(law);
  summary["betas"] = s.betas;
  summary["per_mesh"] = Json::array();
  for (const auto& m : s.per_mesh) {
    summary["per_mesh"].push_back({{"n", m.n},
                                   {"replicas", m.replicas},
                                   {"q50", m.q50},
                                   {"q90", m.q90},
                                   {"q99", m.q99},
                                   {"tails", m.tails}});
  }
  summary["beta_star"] = s.beta_star;
  summary["tail_at_beta_star"] = s.tail_at_beta_star;
  summary["tails_monotone_in_beta"] = s.tails_monotone_in_beta;
  summary["tail_shrinks"] = s.tail_shrinks;
  summary["cutset_rule"] = "source-side canonical cut";
  out.write("cutset.csv", cutset_csv(s));
  out.write("cutset.json", summary.dump(2) + "\n");
  out.finish();
  emit(summary);
  return 0;
}

int cmd_phi_omega(const Config& cfg) {
  const Domain domain = cfg.domain();
  const std::size_t d = domain.dim();
  const auto steps = cfg.integer("steps", 20);
  if (steps < 1) cfg.bad("steps", "must be >= 1");
  Artifacts out(cfg, "phi-omega");
  NuTable table;
  if (cfg.has("nu_table")) {
    const auto path = cfg.text("nu_table");
    std::ifstream in(path, std::ios::binary);
    if (!in) cfg.bad("nu_table", "cannot be opened: " + path);
    try {
      table = nu_table_from_json(Json::parse(in));
    } catch (const std::exception& e) {
      throw ConfigError(path + ": invalid nu table: " + Config::strip_nlohmann(e.what()));
    }
    if (table.dim() != d) cfg.bad("nu_table", "has the wrong dimension");
  } else {
    const CapacityLaw law = cfg.law();
    const NuOptions opt = nu_options_from(cfg, "nu_meshes", "nu_replicas");
    progress("phi-omega", "estimating nu on " + std::to_string(direction_grid(d).size()) + " directions");
    table = build_nu_table(d, law, opt);
    out.write("nu_table.json", nu_table_to_json(table).dump(2) + "\n");
    out.write("nu.csv", nu_csv(table));
  }
  const auto result =
      phi_omega_search(domain, table, CutFamily::regular(direction_grid(d), static_cast<int>(steps)));
  auto cand_json = [](const Candidate& c) {
    return Json{{"kind", to_string(c.kind)},
                {"v", c.v},
                {"c", c.c},
                {"energy", c.energy.value},
                {"interior", c.energy.interior},
                {"sink", c.energy.sink},
                {"source", c.energy.source},
                {"stderr", c.energy.stderr_value}};
  };
  std::ostringstream trace;
  for (std::size_t k = 0; k < d; ++k) trace << 'v' << k << ',';
  trace << "kind,c,energy,stderr\n";
  for (const auto& c : result.trace) {
    for (std::size_t k = 0; k < d; ++k) trace << (c.v.size() == d ? fmt(c.v[k]) : "") << ',';
    trace << to_string(c.kind) << ',' << fmt(c.c) << ',' << fmt(c.energy.value) << ','
          << fmt(c.energy.stderr_value) << '\n';
  }
  Json summary = header("phi-omega", cfg);
  summary["d"] = d;
  summary["phi_omega_hat"] = result.phi_omega_hat;
  summary["argmin"] = cand_json(result.argmin);
  summary["candidates"] = result.trace.size();
  summary["nu_min"] = table.nu_min();
  summary["nu_max"] = table.nu_max();
  out.write("phi_omega.csv", trace.str());
  out.write("phi_omega.json", summary.dump(2) + "\n");
  out.finish();
  emit(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: brute-force oracles against the solver.

Capacity brute_min_cut(const Graph& g, const std::vector<VertexId>& src,
                       const std::vector<VertexId>& snk, const std::vector<Capacity>& caps) {
  std::vector<int> role(g.num_vertices, 0);
  for (auto s : src) role[s] = 1;
  for (auto s : snk) role[s] = 2;
  std::vector<VertexId> free;
  for (VertexId v = 0; v < g.num_vertices; ++v) {
    if (!role[v]) free.push_back(v);
  }
  Capacity best = std::numeric_limits<Capacity>::max();
  for (std::uint32_t mask = 0; mask < (1u << free.size()); ++mask) {
    std::vector<char> side(g.num_vertices, 0);
    for (auto s : src) side[s] = 1;
    for (std::size_t i = 0; i < free.size(); ++i) side[free[i]] = (mask >> i) & 1u;
    Capacity c = 0;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      if (side[g.edges[e][0]] != side[g.edges[e][1]]) c += caps[e];
    }
    best = std::min(best, c);
  }
  return best;
}

int cmd_selftest(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed());
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cerr << (ok ? "PASS " : "FAIL ") << name << std::endl;
    failures += ok ? 0 : 1;
  };
  std::size_t duality_bad = 0, stream_bad = 0;
  for (int t = 0; t < 300; ++t) {
    Graph g;
    g.num_vertices = 2 + static_cast<std::uint32_t>(rng() % 7);
    const std::size_t m = 1 + rng() % 12;
    for (std::size_t i = 0; i < m; ++i) {
      const auto a = static_cast<VertexId>(rng() % g.num_vertices);
      auto b = static_cast<VertexId>(rng() % (g.num_vertices - 1));
      if (b >= a) ++b;
      g.edges.push_back({std::min(a, b), std::max(a, b)});
    }
    std::vector<Capacity> caps;
    for (std::size_t i = 0; i < m; ++i) caps.push_back(static_cast<Capacity>(rng() % 10));
    const std::vector<VertexId> src{0}, snk{static_cast<VertexId>(g.num_vertices - 1)};
    const FlowResult r = max_flow(g, src, snk, caps);
    duality_bad += r.value != brute_min_cut(g, src, snk, caps);
    stream_bad += !verify_stream(r.stream, g, src, snk, caps, r.value);
  }
  check("max flow equals exhaustive min cut (300 instances)", duality_bad == 0);
  check("streams are valid (300 instances)", stream_bad == 0);
  const Domain square = unit_cube_domain(2);
  bool exact = true;
  for (std::int64_t n : {2, 4, 8}) {
    const PhiRun run = run_phi(square, CapacityLaw::constant(1), n, 1);
    exact = exact && run.value == (n + 1) * kQuantScale && run.cut_size == static_cast<std::size_t>(n + 1);
    const auto inst = build_cylinder_instance(
        Hyperrectangle({0.5, 0.0}, UnitVector({0.0, 1.0}), {1.0}), 0.5, n);
    exact = exact && tau(inst, CapacityField(CapacityLaw::constant(1), 1)) == (n + 1) * kQuantScale;
  }
  check("constant(1) square: phi_n = tau_n = n+1", exact);
  const PhiInstance inst = make_phi_instance(square, 6);
  bool cluster = true;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const PhiRun run = run_phi(inst, CapacityLaw::bernoulli(0.6), s);
    cluster = cluster && source_cluster(inst, run, square).boundary_is_cut;
  }
  check("source cluster boundary equals the cutset (50 runs)", cluster);
  Json summary{{"schema", kSchema}, {"command", "selftest"}, {"failures", failures}};
  emit(summary);
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"percoflow: maximal flows through random lattice capacities"};
  // "--h" is the cylinder half height, so help is long-form only.
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", PERCOFLOW_VERSION);
  app.require_subcommand(1);
  app.footer(
      "Artifacts (with --out DIR):\n"
      "  flow       vertices.csv (z0..,omega,gamma,gamma1,gamma2), cut.csv (z0..,axis,capacity), flow.json\n"
      "  nu         nu.csv (direction,area,h,n,replicas,mean,stderr), nu_table.json\n"
      "  rate       rate.csv (n,replicas,hits,p_hat,wilson_lo,wilson_hi,r_n), rate.json\n"
      "  cutset     cutset.csv (n,beta,tail), cutset.json\n"
      "  phi-omega  phi_omega.csv (v0..,kind,c,energy,stderr), phi_omega.json\n"
      "  every run  manifest.json (config echo, config_hash, version, wall time)\n"
      "Exit status: 0 ok, 1 runtime failure, 2 configuration error.");

  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> flags;
  };
  const std::vector<Sub> subs{
      {"flow", "one maximal flow φ_n between Γ¹ and Γ² with its cutset",
       {"domain", "law", "n", "seed", "out", "workers"}},
      {"nu", "estimate the flow constant ν on one direction or the direction grid",
       {"domain", "d", "direction", "law", "meshes", "replicas", "side", "h", "seed", "out", "workers"}},
      {"rate", "lower deviation probabilities P[φ_n <= λ n^{d-1}] and rates r_n",
       {"domain", "law", "meshes", "replicas", "seed", "lambda", "lambda-fraction", "nu-meshes",
        "nu-replicas", "side", "h", "out", "workers"}},
      {"cutset", "tails of card(cutset)/n^{d-1}",
       {"domain", "law", "meshes", "replicas", "betas", "seed", "out", "workers"}},
      {"phi-omega", "minimize the surface energy over flat candidate sets",
       {"domain", "nu-table", "law", "nu-meshes", "nu-replicas", "side", "h", "steps", "seed", "out",
        "workers"}},
      {"selftest", "brute-force oracle checks of the solver", {"seed"}},
  };

  std::string config_path;
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::map<std::string, CLI::App*> apps;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    apps[s.name] = sub;
    sub->add_option("--config", config_path, "JSON config; keys mirror the flags")->type_name("FILE");
    for (const auto& f : s.flags) {
      const auto& spec = flag_specs().at(f);
      static const std::map<FlagType, const char*> type_names{
          {FlagType::integer, "INT"},       {FlagType::unsigned_integer, "UINT"},
          {FlagType::real, "NUM"},          {FlagType::integer_list, "INT,..."},
          {FlagType::real_list, "NUM,..."}, {FlagType::json, "JSON"},
          {FlagType::text, "TEXT"}};
      options[s.name][f] =
          sub->add_option("--" + f, values[s.name][f], spec.help)->type_name(type_names.at(spec.type));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string command;
  for (const auto& s : subs) {
    if (apps[s.name]->parsed()) command = s.name;
  }
  try {
    Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (cfg.has("command") && cfg.json()["command"] != command) {
      cfg.bad("command", "does not match the subcommand '" + command + "'");
    }
    for (const auto& [flag, opt] : options[command]) {
      if (opt->count() > 0) cfg.set_flag(flag, flag_specs().at(flag), values[command][flag]);
    }
    if (command == "flow") return cmd_flow(cfg);
    if (command == "nu") return cmd_nu(cfg);
    if (command == "rate") return cmd_rate(cfg);
    if (command == "cutset") return cmd_cutset(cfg);
    if (command == "phi-omega") return cmd_phi_omega(cfg);
    if (command == "selftest") return cmd_selftest(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "percoflow " << command << ": config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "percoflow " << command << ": error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}

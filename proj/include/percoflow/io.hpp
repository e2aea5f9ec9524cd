#pragma once

// JSON and CSV serialization (schema "percoflow/1") and atomic file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "percoflow/capacities.hpp"
#include "percoflow/deviations.hpp"
#include "percoflow/energy.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/lattice.hpp"
#include "percoflow/nu.hpp"

namespace percoflow {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "percoflow/1";

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

// Shortest round-trip decimal for doubles, so CSVs are stable byte for byte.
inline std::string fmt(double x) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

// Writes to a temporary sibling and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Domains.

inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) {
    // Decimal numbers are read through their shortest text form, so 0.1 is
    // exactly 1/10.
    return parse_rational(fmt(j.get<double>()));
  }
  throw Error(ErrorKind::ParseError, "expected a rational (\"p/q\" or number)");
}

inline FaceTag face_tag_from_string(std::string_view s) {
  if (s == "source") return FaceTag::source;
  if (s == "sink") return FaceTag::sink;
  if (s == "neutral") return FaceTag::neutral;
  throw Error(ErrorKind::ParseError, "unknown face tag '" + std::string(s) + "'");
}

// {"d":2, "boxes":[[[lo,hi],[lo,hi]], ...],
//  "faces":[{"box":0, "normal":[-1,0], "tag":"source"}, ...]}
// Faces not listed are neutral.
inline Domain domain_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "domain must be an object");
  if (!j.contains("d") || !j["d"].is_number_integer()) {
    throw Error(ErrorKind::ParseError, "domain needs integer \"d\"");
  }
  const auto d = j["d"].get<std::size_t>();
  if (!j.contains("boxes") || !j["boxes"].is_array() || j["boxes"].empty()) {
    throw Error(ErrorKind::ParseError, "domain needs a nonempty \"boxes\" array");
  }
  std::vector<Box> boxes;
  for (const auto& jb : j["boxes"]) {
    if (!jb.is_array() || jb.size() != d) {
      throw Error(ErrorKind::ParseError, "each box needs d intervals");
    }
    Box box;
    for (const auto& iv : jb) {
      if (!iv.is_array() || iv.size() != 2) {
        throw Error(ErrorKind::ParseError, "interval must be [lo, hi]");
      }
      box.axes.push_back({rational_from_json(iv[0]), rational_from_json(iv[1])});
      if (!(box.axes.back().lo < box.axes.back().hi)) {
        throw Error(ErrorKind::EmptyBox, "interval [" + format_rational(box.axes.back().lo) +
                                             "," + format_rational(box.axes.back().hi) +
                                             "] is empty");
      }
    }
    boxes.push_back(std::move(box));
  }
  std::vector<Facet> facets;
  if (j.contains("faces")) {
    for (const auto& jf : j["faces"]) {
      Facet f;
      f.box = jf.at("box").get<std::size_t>();
      if (f.box >= boxes.size()) throw Error(ErrorKind::ParseError, "face box index out of range");
      const auto& normal = jf.at("normal");
      if (!normal.is_array() || normal.size() != d) {
        throw Error(ErrorKind::ParseError, "face normal must have d components");
      }
      std::size_t nonzero = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const auto c = normal[k].get<int>();
        if (c == 0) continue;
        if (c != 1 && c != -1) throw Error(ErrorKind::ParseError, "face normal must be ±e_k");
        ++nonzero;
        f.axis = k;
        f.upper = c > 0;
      }
      if (nonzero != 1) throw Error(ErrorKind::ParseError, "face normal must be ±e_k");
      f.tag = face_tag_from_string(jf.at("tag").get<std::string>());
      facets.push_back(f);
    }
  }
  return Domain(d, std::move(boxes), std::move(facets));
}

inline Json domain_to_json(const Domain& domain) {
  Json j;
  j["d"] = domain.dim();
  j["boxes"] = Json::array();
  for (const auto& b : domain.boxes()) {
    Json jb = Json::array();
    for (const auto& iv : b.axes) jb.push_back({format_rational(iv.lo), format_rational(iv.hi)});
    j["boxes"].push_back(jb);
  }
  j["faces"] = Json::array();
  for (const auto& f : domain.facets()) {
    std::vector<int> normal(domain.dim(), 0);
    normal[f.axis] = f.upper ? 1 : -1;
    j["faces"].push_back({{"box", f.box}, {"normal", normal}, {"tag", to_string(f.tag)}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Capacity laws.

inline CapacityLaw law_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw Error(ErrorKind::ParseError, "law needs a \"kind\"");
  }
  const auto kind = j["kind"].get<std::string>();
  auto num = [&](const char* key, std::optional<double> fallback = std::nullopt) {
    if (j.contains(key)) {
      if (!j[key].is_number()) throw Error(ErrorKind::ParseError, std::string("law field '") + key + "' must be a number");
      return j[key].get<double>();
    }
    if (fallback) return *fallback;
    throw Error(ErrorKind::ParseError, "law '" + kind + "' needs field '" + key + "'");
  };
  if (kind == "constant") return CapacityLaw::constant(num("a"));
  if (kind == "bernoulli") return CapacityLaw::bernoulli(num("p"), num("a", 1.0));
  if (kind == "two_point") return CapacityLaw::two_point(num("p"), num("a"), num("b"));
  if (kind == "uniform_int") {
    return CapacityLaw::uniform_int(static_cast<std::int64_t>(num("lo")),
                                    static_cast<std::int64_t>(num("hi")));
  }
  if (kind == "exponential") return CapacityLaw::exponential(num("rate"));
  throw Error(ErrorKind::ParseError, "unknown law kind '" + kind + "'");
}

inline Json law_to_json(const CapacityLaw& law) {
  using K = CapacityLaw::Kind;
  switch (law.kind()) {
    case K::constant: return {{"kind", "constant"}, {"a", law.a()}};
    case K::bernoulli: return {{"kind", "bernoulli"}, {"p", law.p()}, {"a", law.a()}};
    case K::two_point:
      return {{"kind", "two_point"}, {"p", law.p()}, {"a", law.a()}, {"b", law.b()}};
    case K::uniform_int: return {{"kind", "uniform_int"}, {"lo", law.lo()}, {"hi", law.hi()}};
    case K::exponential:
      return {{"kind", "exponential"}, {"rate", law.rate()}, {"truncation", law.truncation()}};
  }
  return {};
}

// ---------------------------------------------------------------------------
// ν tables.

inline Json nu_estimate_to_json(const NuEstimate& e) {
  Json meshes = Json::array();
  for (const auto& m : e.per_mesh) {
    meshes.push_back({{"n", m.n}, {"replicas", m.replicas}, {"mean", m.mean},
                      {"stddev", m.stddev}, {"stderr", m.stderr_mean}});
  }
  return {{"v", e.v},
          {"nu_hat", e.nu_hat},
          {"stderr", e.stderr_nu},
          {"trend_slope", e.trend_slope},
          {"meshes", meshes},
          {"replicas", e.replicas},
          {"A", {{"side", e.side}}},
          {"h", e.h},
          {"law", law_to_json(e.law)},
          {"seed", std::to_string(e.seed)}};
}

inline NuEstimate nu_estimate_from_json(const Json& j) {
  NuEstimate e;
  e.v = j.at("v").get<Vec>();
  e.nu_hat = j.at("nu_hat").get<double>();
  e.stderr_nu = j.value("stderr", 0.0);
  e.trend_slope = j.value("trend_slope", 0.0);
  if (j.contains("meshes")) {
    for (const auto& m : j["meshes"]) {
      e.per_mesh.push_back({m.at("n").get<std::int64_t>(), m.value("replicas", std::size_t{0}),
                            m.value("mean", 0.0), m.value("stddev", 0.0), m.value("stderr", 0.0)});
    }
  }
  e.replicas = j.value("replicas", std::size_t{0});
  if (j.contains("A")) e.side = j["A"].value("side", 1.0);
  e.h = j.value("h", 0.5);
  if (j.contains("law")) e.law = law_from_json(j["law"]);
  if (j.contains("seed")) {
    e.seed = j["seed"].is_string() ? std::stoull(j["seed"].get<std::string>())
                                   : j["seed"].get<std::uint64_t>();
  }
  return e;
}

inline Json nu_table_to_json(const NuTable& t) {
  Json entries = Json::array();
  for (const auto& e : t.entries()) entries.push_back(nu_estimate_to_json(e));
  return {{"schema", kSchema},
          {"d", t.dim()},
          {"nu_min", t.nu_min()},
          {"nu_max", t.nu_max()},
          {"entries", entries}};
}

inline NuTable nu_table_from_json(const Json& j) {
  std::vector<NuEstimate> entries;
  for (const auto& e : j.at("entries")) entries.push_back(nu_estimate_from_json(e));
  return NuTable(j.at("d").get<std::size_t>(), std::move(entries));
}

// ---------------------------------------------------------------------------
// CSV.

inline std::string vertices_csv(const DiscreteDomain& dd) {
  auto sorted_contains = [](const std::vector<LatticePoint>& v, const LatticePoint& p) {
    return std::binary_search(v.begin(), v.end(), p);
  };
  std::vector<LatticePoint> gamma = dd.gamma, g1 = dd.gamma1, g2 = dd.gamma2;
  std::sort(gamma.begin(), gamma.end());
  std::sort(g1.begin(), g1.end());
  std::sort(g2.begin(), g2.end());
  std::ostringstream out;
  for (std::size_t k = 0; k < dd.dim; ++k) out << 'z' << k << ',';
  out << "omega,gamma,gamma1,gamma2\n";
  for (const auto& z : dd.omega) {
    for (std::size_t k = 0; k < dd.dim; ++k) out << z[k] << ',';
    out << 1 << ',' << sorted_contains(gamma, z) << ',' << sorted_contains(g1, z) << ','
        << sorted_contains(g2, z) << '\n';
  }
  return out.str();
}

inline std::string cut_csv(const LatticeGraph& graph, std::span<const EdgeId> cut,
                           std::span<const Capacity> caps) {
  std::ostringstream out;
  for (std::size_t k = 0; k < graph.dim(); ++k) out << 'z' << k << ',';
  out << "axis,capacity\n";
  for (EdgeId e : cut) {
    const auto& edge = graph.edges()[e];
    for (std::size_t k = 0; k < graph.dim(); ++k) out << edge.lower[k] << ',';
    out << static_cast<int>(edge.axis) << ',' << fmt(dequantize(caps[e])) << '\n';
  }
  return out.str();
}

inline std::string rate_csv(const RateEstimate& r) {
  std::ostringstream out;
  out << "n,replicas,hits,p_hat,wilson_lo,wilson_hi,r_n\n";
  for (const auto& p : r.points) {
    out << p.n << ',' << p.replicas << ',' << p.hits << ',' << fmt(p.p_hat) << ','
        << fmt(p.wilson.lo) << ',' << fmt(p.wilson.hi) << ',' << (p.rate ? fmt(*p.rate) : "")
        << '\n';
  }
  return out.str();
}

inline std::string cutset_csv(const CutsetStats& s) {
  std::ostringstream out;
  out << "n,beta,tail\n";
  for (const auto& m : s.per_mesh) {
    for (std::size_t i = 0; i < s.betas.size(); ++i) {
      out << m.n << ',' << fmt(s.betas[i]) << ',' << fmt(m.tails[i]) << '\n';
    }
  }
  return out.str();
}

inline std::string nu_csv(const NuTable& t) {
  std::ostringstream out;
  out << "direction,area,h,n,replicas,mean,stderr\n";
  for (const auto& e : t.entries()) {
    std::string dir;
    for (std::size_t k = 0; k < e.v.size(); ++k) dir += (k ? " " : "") + fmt(e.v[k]);
    const double area = std::pow(e.side, static_cast<double>(e.v.size() - 1));
    for (const auto& m : e.per_mesh) {
      out << dir << ',' << fmt(area) << ',' << fmt(e.h) << ',' << m.n << ',' << m.replicas << ','
          << fmt(m.mean) << ',' << fmt(m.stderr_mean) << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Config diagnostics.

// 1-based line and column of byte `offset` in `text`.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Line of the first occurrence of "key" in a JSON text, or 0.
inline std::size_t key_line(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string_view::npos) return 0;
  return line_column(text, pos).first;
}

}  // namespace percoflow

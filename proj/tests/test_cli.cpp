#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "percoflow/percoflow.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr folded into /dev/null unless asked for.
Result run(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string(PERCOFLOW_CLI) + " " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("percoflow_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string square = std::string(PERCOFLOW_CONFIGS) + "/square.json";

}  // namespace

TEST(Cli, FlowConstantSquare) {
  const auto r = run("flow --domain " + square + " --law '{\"kind\":\"constant\",\"a\":1}' --n 8 --seed 1");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto j = percoflow::Json::parse(r.out);
  EXPECT_EQ(j["phi_n"].get<double>(), 9.0);
  EXPECT_EQ(j["cut_size"].get<int>(), 9);
  EXPECT_EQ(j["seed"], "1");
  EXPECT_EQ(j["schema"], "percoflow/1");
}

TEST(Cli, MissingMeshIsConfigError) {
  const auto r = run("flow --domain " + square + " --law '{\"kind\":\"constant\",\"a\":1}'", true);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("'n'"), std::string::npos) << r.out;
}

TEST(Cli, BadValuesAreConfigErrors) {
  EXPECT_EQ(run("flow --domain " + square + " --law '{\"kind\":\"constant\",\"a\":1}' --n x").status, 2);
  EXPECT_EQ(run("flow --domain " + square + " --law '{\"kind\":\"gamma\"}' --n 4").status, 2);
  EXPECT_EQ(run("flow --domain /nonexistent.json --law '{\"kind\":\"constant\",\"a\":1}' --n 4").status, 2);
  EXPECT_EQ(run("flow --bogus 1").status, 2);
  EXPECT_EQ(run("").status, 2);
}

TEST(Cli, ConfigErrorsNameTheLine) {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "bad.json") << "{\n  \"domain\": \"" << square << "\",\n  \"law\": {\"kind\": \"constant\", \"a\": 1},\n  \"n\": \"eight\"\n}\n";
  const auto r = run("flow --config " + (dir / "bad.json").string(), true);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("bad.json:4"), std::string::npos) << r.out;

  std::ofstream(dir / "broken.json") << "{\n  \"n\": 4,\n  \"law\": {,}\n}\n";
  const auto b = run("flow --config " + (dir / "broken.json").string(), true);
  EXPECT_EQ(b.status, 2);
  EXPECT_NE(b.out.find("broken.json:3:"), std::string::npos) << b.out;

  std::ofstream(dir / "unknown.json") << "{\n  \"n\": 4,\n  \"mesh\": 4\n}\n";
  const auto u = run("flow --config " + (dir / "unknown.json").string(), true);
  EXPECT_EQ(u.status, 2);
  EXPECT_NE(u.out.find("unknown.json:3"), std::string::npos) << u.out;
}

TEST(Cli, FlagsOverrideConfig) {
  const auto dir = scratch("override");
  std::ofstream(dir / "c.json") << "{\"domain\": \"" << square
                                << "\", \"law\": {\"kind\": \"constant\", \"a\": 1}, \"n\": 4}";
  const auto a = run("flow --config " + (dir / "c.json").string());
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(percoflow::Json::parse(a.out)["phi_n"].get<double>(), 5.0);
  const auto b = run("flow --config " + (dir / "c.json").string() + " --n 6");
  ASSERT_EQ(b.status, 0);
  EXPECT_EQ(percoflow::Json::parse(b.out)["phi_n"].get<double>(), 7.0);
}

TEST(Cli, Selftest) {
  const auto r = run("selftest");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(percoflow::Json::parse(r.out)["failures"].get<int>(), 0);
}

TEST(Cli, RateArtifactsAreReproducible) {
  const auto a = scratch("rate_a"), b = scratch("rate_b");
  const std::string args = "rate --domain " + square +
                           " --law '{\"kind\":\"bernoulli\",\"p\":0.6}' --meshes 4,6 --replicas 300"
                           " --lambda 0.4 --seed 5 --out ";
  ASSERT_EQ(run(args + a.string() + " --workers 1").status, 0);
  ASSERT_EQ(run(args + b.string() + " --workers 3").status, 0);
  const std::string csv = slurp(a / "rate.csv");
  EXPECT_EQ(csv.rfind("n,replicas,hits,p_hat,wilson_lo,wilson_hi,r_n\n", 0), 0u);
  EXPECT_EQ(csv, slurp(b / "rate.csv"));
  EXPECT_EQ(slurp(a / "rate.json"), slurp(b / "rate.json"));
  const auto ma = percoflow::Json::parse(slurp(a / "manifest.json"));
  const auto mb = percoflow::Json::parse(slurp(b / "manifest.json"));
  EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
  EXPECT_TRUE(ma.contains("wall_seconds"));
  EXPECT_TRUE(ma.contains("version"));
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_NE(e.path().extension(), ".tmp");
  }
}

TEST(Cli, RateNeedsExactlyOneLambda) {
  const std::string base = "rate --domain " + square + " --law '{\"kind\":\"constant\",\"a\":1}' --meshes 4 --replicas 10";
  EXPECT_EQ(run(base).status, 2);
  EXPECT_EQ(run(base + " --lambda 1 --lambda-fraction 0.5").status, 2);
  EXPECT_EQ(run(base + " --lambda 1").status, 0);
}

TEST(Cli, CutsetAndPhiOmega) {
  const auto dir = scratch("misc");
  const auto c = run("cutset --domain " + square +
                     " --law '{\"kind\":\"constant\",\"a\":1}' --meshes 2,4 --replicas 5 --betas 1,2 --out " +
                     dir.string());
  ASSERT_EQ(c.status, 0);
  EXPECT_EQ(slurp(dir / "cutset.csv"), "n,beta,tail\n2,1,1\n2,2,0\n4,1,1\n4,2,0\n");

  const auto n = run("nu --d 2 --law '{\"kind\":\"constant\",\"a\":1}' --meshes 8 --replicas 30 --out " +
                     dir.string());
  ASSERT_EQ(n.status, 0);
  const auto p = run("phi-omega --domain " + square + " --nu-table " + (dir / "nu_table.json").string() +
                     " --steps 10");
  ASSERT_EQ(p.status, 0);
  // Oblique cuts can undercut the vertical one on a mesh-8 table, so compare
  // against the library run on the same table.
  const auto table = percoflow::nu_table_from_json(percoflow::Json::parse(slurp(dir / "nu_table.json")));
  const auto want = percoflow::phi_omega_search(percoflow::unit_cube_domain(2), table,
                                                percoflow::CutFamily::regular(percoflow::direction_grid(2), 10));
  const double got = percoflow::Json::parse(p.out)["phi_omega_hat"].get<double>();
  EXPECT_DOUBLE_EQ(got, want.phi_omega_hat);
  EXPECT_LE(got, 1.125 + 1e-12);
}

TEST(Cli, HelpDocumentsCsvColumns) {
  const auto r = run("--help");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("n,replicas,hits,p_hat,wilson_lo,wilson_hi,r_n"), std::string::npos);
  EXPECT_NE(r.out.find("n,beta,tail"), std::string::npos);
}

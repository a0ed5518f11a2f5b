#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wmfc/cli.hpp"

using namespace wmfc;
namespace fs = std::filesystem;

namespace {

const char* kToy = R"(model.kind = toy
jumps.marks = [[0.2, 1.0], [-0.15, 0.5]]
grid.M = 8
mc.N = 400
optimizer.iters = 2
)";

const char* kLQ = R"(model.kind = lq
model.lq.b11 = -0.3
model.lq.b12 = 0.2
model.lq.b13 = -0.2
model.lq.sigma11 = 0.2
model.lq.sigma12 = 0.1
model.lq.sigma13 = 0.5
model.lq.alpha = 0.05
model.lq.beta = 0.4
model.lq.R1 = 1
model.lq.Phi = 1
grid.M = 8
mc.N = 2000
)";

std::string fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("wmfc_cli_" + tag);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Ran {
  RunResult r;
  std::string out, err;
};

Ran go(const std::string& sub, const std::string& text, const std::string& dir, std::vector<std::string> ov = {},
       int threads = 1) {
  RunOptions o;
  o.subcommand = sub;
  o.config_text = text;
  o.overrides = std::move(ov);
  o.out_dir = dir;
  o.threads = threads;
  o.timestamp = "T0";
  std::ostringstream out, err;
  Ran g;
  g.r = run(o, out, err);
  g.out = out.str();
  g.err = err.str();
  return g;
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  const std::string p = (fs::path(dir) / name).string();
  std::ofstream(p) << text;
  return p;
}

int call_main(std::vector<std::string> args) {
  std::vector<char*> argv;
  static std::string prog = "wmfc";
  argv.push_back(prog.data());
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("exit code 0 on a passing run, summary columns") {
  const std::string dir = fresh_dir("pass");
  const Ran g = go("rho", kToy, dir, {"rho.mu1=[[1.0, 0.0]]", "rho.mu2=[[1.0, 0.5]]"});
  CHECK(g.r.exit_code == 0);
  const std::string sum = slurp(dir + "/rho_T0.csv");
  CHECK(sum.rfind("check,value,target,tol,pass\n", 0) == 0);
  CHECK(g.out.find("PASS") != std::string::npos);
  CHECK(g.err.empty());
}

TEST_CASE("exit code 2 on config errors") {
  const std::string dir = fresh_dir("cfg");
  const Ran unknown = go("simulate", std::string(kToy) + "grid.Mx = 3\n", dir);
  CHECK(unknown.r.exit_code == 2);
  CHECK(unknown.err.find("grid.Mx") != std::string::npos);

  const Ran bad_sub = go("frobnicate", kToy, dir);
  CHECK(bad_sub.r.exit_code == 2);

  // structural condition of the weighted LQ
  const Ran structural = go("simulate", kLQ, dir, {"model.lq.b13=1.0"});
  CHECK(structural.r.exit_code == 2);
  CHECK(structural.err.find("b13 + beta*sigma13") != std::string::npos);

  const Ran bad_value = go("simulate", kToy, dir, {"mc.N=\"many\""});
  CHECK(bad_value.r.exit_code == 2);
}

TEST_CASE("exit code 1 when a check fails, with a reason line") {
  const std::string dir = fresh_dir("fail");
  // picard cannot meet an impossible tolerance in one iteration
  const Ran g = go("picard", kToy, dir, {"picard.tol=1e-300", "picard.max_iter=1"});
  CHECK(g.r.exit_code == 1);
  CHECK(g.err.find("FAIL") != std::string::npos);
  CHECK(g.out.find("FAIL") != std::string::npos);
}

TEST_CASE("every subcommand writes a summary and a manifest") {
  const std::string dir = fresh_dir("all");
  for (const auto& sub : subcommands()) {
    const Ran g = go(sub, sub == "lq-verify" ? kLQ : kToy, dir);
    INFO(sub << "\n" << g.out << g.err);
    CHECK(g.r.exit_code != 2);
    CHECK(fs::exists(dir + "/" + sub + "_T0.csv"));
    const std::string man = dir + "/manifest_" + sub + "_T0.json";
    REQUIRE(fs::exists(man));
    const auto j = nlohmann::json::parse(slurp(man));
    for (const char* key : {"config_hash", "seed", "threads", "timestamp", "versions", "artifacts"})
      CHECK(j.contains(key));
    CHECK(j["timestamp"] == "T0");
  }
}

TEST_CASE("artifacts are byte-identical across thread counts") {
  const std::string d1 = fresh_dir("t1"), d4 = fresh_dir("t4");
  for (const char* sub : {"simulate", "adjoint", "optimize"}) {
    const Ran a = go(sub, kToy, d1, {}, 1);
    const Ran b = go(sub, kToy, d4, {}, 4);
    REQUIRE(a.r.artifacts.size() == b.r.artifacts.size());
    for (std::size_t i = 0; i < a.r.artifacts.size(); ++i) {
      const std::string& p = a.r.artifacts[i];
      if (p.find(".csv") == std::string::npos) continue;
      INFO(p);
      CHECK(slurp(p) == slurp(b.r.artifacts[i]));
    }
  }
}

TEST_CASE("seed precedence: flag over environment over config") {
  const std::string dir = fresh_dir("seed");
  const std::string cfg = write_file(dir, "s.cfg", std::string(kToy) + "mc.seed = 5\n");
  auto seed_of = [&](const std::string& ts) {
    return nlohmann::json::parse(slurp(dir + "/manifest_simulate_" + ts + ".json"))["seed"].get<std::uint64_t>();
  };
  unsetenv("WMFC_SEED");
  CHECK(call_main({"simulate", cfg, "--out", dir, "--timestamp", "a"}) == 0);
  CHECK(seed_of("a") == 5);
  setenv("WMFC_SEED", "17", 1);
  CHECK(call_main({"simulate", cfg, "--out", dir, "--timestamp", "b"}) == 0);
  CHECK(seed_of("b") == 17);
  CHECK(call_main({"simulate", cfg, "--out", dir, "--timestamp", "c", "--seed", "23"}) == 0);
  CHECK(seed_of("c") == 23);
  setenv("WMFC_SEED", "junk", 1);
  CHECK(call_main({"simulate", cfg, "--out", dir, "--timestamp", "d"}) == 2);
  unsetenv("WMFC_SEED");
}

TEST_CASE("flag aliases become config overrides") {
  const std::string dir = fresh_dir("alias");
  const std::string cfg = write_file(dir, "o.cfg", kToy);
  CHECK(call_main({"optimize", "--model", cfg, "--out", dir, "--timestamp", "x", "--iters", "1", "--step", "0.25"}) != 2);
  const std::string trace = slurp(dir + "/optimize_trace_x.csv");
  CHECK(trace.rfind("iter,J,stderr,Hu_norm,step\n", 0) == 0);
  std::istringstream is(trace);
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);  // header, iteration 0, iteration 1
  CHECK(call_main({"optimize", "--out", dir}) == 2);  // no config
  CHECK(call_main({"optimize", cfg, "--out", dir, "--threads", "0"}) == 2);
}

TEST_CASE("config hash follows the resolved values") {
  const std::string dir = fresh_dir("hash");
  auto hash_of = [&](std::vector<std::string> ov, const std::string& ts) {
    RunOptions o;
    o.subcommand = "rho";
    o.config_text = kToy;
    o.overrides = std::move(ov);
    o.out_dir = dir;
    o.timestamp = ts;
    std::ostringstream out, err;
    run(o, out, err);
    return nlohmann::json::parse(slurp(dir + "/manifest_rho_" + ts + ".json"))["config_hash"].get<std::string>();
  };
  CHECK(hash_of({}, "p") == hash_of({"grid.M=8"}, "q"));
  CHECK(hash_of({}, "p") != hash_of({"grid.M=16"}, "r"));
}

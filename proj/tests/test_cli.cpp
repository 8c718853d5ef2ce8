#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "pomcpshield/shield.hpp"
#include "pomcpshield/tiger.hpp"
#include "pomcpshield/xes.hpp"
#include "test_util.hpp"

using namespace pomcpshield;

namespace {

std::string g_cli;
std::string g_templates;
std::filesystem::path g_dir;

struct CmdResult {
  int code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string log = (g_dir / "cmd.log").string();
  const std::string cmd = g_cli + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string path_of(const std::string& name) { return (g_dir / name).string(); }

// A hand-made log whose optimal thresholds are known exactly: listening up to
// 0.85 confidence, opening from 0.97.
void write_micro_trace(const std::string& path) {
  TigerModel tiger;
  Trace t;
  t.domain = "tiger";
  t.particles = 4;
  t.c = 110.0;
  t.seed = 1;
  Step s0;
  s0.beliefs = {{0.5, 0.5}};
  s0.action = TigerModel::kListen;
  s0.observation = TigerModel::kHearRight;
  Step s1;
  s1.beliefs = {{0.15, 0.85}};
  s1.action = TigerModel::kListen;
  s1.observation = TigerModel::kHearRight;
  Step s2;
  s2.beliefs = {{0.03, 0.97}};
  s2.action = TigerModel::kOpenRight;
  s2.observation = TigerModel::kHearLeft;
  t.runs.push_back({s0, s1, s2});
  write_xes_file(t, tiger, path);
}

}  // namespace

TEST_CASE("run plays episodes and writes a parseable log") {
  CmdResult r = run_cli("run --domain tiger --particles 128 --runs 3 --max-steps 4 --seed 7 --out " +
                        path_of("t.xes"));
  CHECK(r.code == 0);
  CHECK(r.output.find("completed 3/3") != std::string::npos);
  CHECK(r.output.find("wrote " + path_of("t.xes")) != std::string::npos);

  TigerModel tiger;
  Trace t = read_xes_file(path_of("t.xes"), tiger);
  CHECK(t.domain == "tiger");
  CHECK(t.particles == 128);
  CHECK(t.c == 110.0);
  CHECK(t.seed == 7);
  CHECK(t.runs.size() == 3);
}

TEST_CASE("learn recovers the thresholds of a clean log") {
  write_micro_trace(path_of("micro.xes"));
  CmdResult r = run_cli("learn --domain tiger --trace " + path_of("micro.xes") + " --template " +
                        g_templates + "/tiger.rules --out " + path_of("learned.rules"));
  CHECK(r.code == 0);
  CHECK(r.output.find("cost 0") != std::string::npos);
  CHECK(r.output.find("x1 = 0.85") != std::string::npos);
  CHECK(r.output.find("x3 = 0.97") != std::string::npos);

  TigerModel tiger;
  RuleTemplate learned = parse_template(slurp(path_of("learned.rules")), &tiger);
  CHECK(learned.free_vars.empty());
  CHECK(learned.action_rules.size() == 3);
}

TEST_CASE("mkshield samples representatives into a loadable file") {
  CmdResult r = run_cli("mkshield --domain tiger --template " + path_of("learned.rules") +
                        " --tau 0.1 --reps 50 --safe-action Listen --seed 5 --out " +
                        path_of("s.shield"));
  CHECK(r.code == 0);
  CHECK(r.output.find("3 rules") != std::string::npos);

  TigerModel tiger;
  Shield shield = Shield::load_file(path_of("s.shield"), tiger);
  CHECK(shield.tau() == 0.1);
  REQUIRE(shield.safe_action().has_value());
  CHECK(*shield.safe_action() == TigerModel::kListen);
  REQUIRE(shield.rules().size() == 3);
  for (const ShieldRule& rule : shield.rules()) {
    CHECK(rule.representatives.size() == 50);
  }
}

TEST_CASE("eval writes byte-identical CSVs across invocations") {
  const std::string common = "eval --domain tiger --shield " + path_of("s.shield") +
                             " --c 110 --c 40 --particles 64 --runs 3 --max-steps 3 --seed 2";
  CmdResult r1 = run_cli(common + " --out " + path_of("r1.csv"));
  CmdResult r2 = run_cli(common + " --out " + path_of("r2.csv"));
  CHECK(r1.code == 0);
  CHECK(r2.code == 0);

  const std::string csv = slurp(path_of("r1.csv"));
  CHECK(csv == slurp(path_of("r2.csv")));
  CHECK(csv.rfind("c,pairs,", 0) == 0);
  CHECK(csv.find("time") == std::string::npos);
  CHECK(csv.find("\n110,") != std::string::npos);
  CHECK(csv.find("\n40,") != std::string::npos);
}

TEST_CASE("config files fill unset options and flags override them") {
  {
    std::ofstream cfg(path_of("cfg.json"));
    cfg << "{\"domain\":\"tiger\",\"particles\":32,\"runs\":2,\"max_steps\":3,"
        << "\"seed\":11,\"out\":\"" << path_of("cfg_trace.xes") << "\"}";
  }
  CmdResult r = run_cli("run --config " + path_of("cfg.json") + " --runs 4");
  CHECK(r.code == 0);
  CHECK(r.output.find("completed 4/4") != std::string::npos);

  TigerModel tiger;
  Trace t = read_xes_file(path_of("cfg_trace.xes"), tiger);
  CHECK(t.particles == 32);
  CHECK(t.seed == 11);
  CHECK(t.runs.size() == 4);
  for (const Run& run : t.runs) CHECK(run.size() <= 3);
}

TEST_CASE("bad invocations fail with a diagnostic") {
  CmdResult unknown = run_cli("run --domain venus --out " + path_of("x.xes"));
  CHECK(unknown.code == 1);
  CHECK(unknown.output.find("unknown domain 'venus'") != std::string::npos);

  CmdResult no_shield = run_cli("eval --domain tiger --runs 1");
  CHECK(no_shield.code == 1);
  CHECK(no_shield.output.find("eval needs --shield") != std::string::npos);

  CmdResult bad_backend = run_cli("learn --trace " + path_of("micro.xes") + " --template " +
                                  g_templates + "/tiger.rules --backend quantum");
  CHECK(bad_backend.code == 1);
  CHECK(bad_backend.output.find("--backend must be internal or smtlib") != std::string::npos);

  CmdResult missing = run_cli("learn --template " + g_templates + "/tiger.rules");
  CHECK(missing.code != 0);

  CmdResult no_sub = run_cli("");
  CHECK(no_sub.code != 0);
}

int main(int argc, char** argv) {
  g_cli = testutil::take_arg(argc, argv, "cli");
  g_templates = testutil::take_arg(argc, argv, "templates");
  if (g_cli.empty() || g_templates.empty()) {
    std::fprintf(stderr, "usage: test_cli --cli=<binary> --templates=<dir> [doctest args]\n");
    return 1;
  }
  g_dir = testutil::fresh_dir("pomcpshield-cli");
  doctest::Context ctx(argc, argv);
  const int rc = ctx.run();
  std::filesystem::remove_all(g_dir);
  return rc;
}

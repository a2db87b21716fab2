#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "pulse/cli.hpp"
#include "pulse/config.hpp"
#include "support/suite.hpp"

using namespace pulse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "pulse");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("pulse-cli-" + std::to_string(::getpid()) + "-" + std::to_string(next()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    auto p = (path_ / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }

 private:
  static int next() {
    static int n = 0;
    return n++;
  }
  fs::path path_;
};

std::string corpus(const std::string& name) { return testsupport::data_path("corpus/" + name + ".sp"); }

}  // namespace

TEST(Config, ParsesKeysSectionsAndComments) {
  std::istringstream in(
      "# run settings\n"
      "world_size = 4\n"
      "passes = \"reorder,bypass\"\n"
      "short_circuit = false   # off\n"
      "sync_mode = legacy\n"
      "[cost]\n"
      "get_epoch = 99\n");
  auto cfg = parse_config(in);
  EXPECT_EQ(cfg.world.world_size, 4);
  EXPECT_EQ(cfg.passes, parse_pass_set("reorder,bypass"));
  EXPECT_FALSE(cfg.world.short_circuit);
  EXPECT_EQ(cfg.world.sync_mode, runtime::SyncMode::Legacy);
  EXPECT_EQ(cfg.world.cost.get_epoch, 99u);
}

TEST(Config, ErrorsNameTheLine) {
  auto fails_at = [](const std::string& text, const std::string& line) {
    std::istringstream in(text);
    try {
      parse_config(in);
    } catch (const ConfigError& e) {
      return std::string(e.what()).rfind(line, 0) == 0;
    }
    return false;
  };
  EXPECT_TRUE(fails_at("world_size = 2\nspeed = 3\n", "line 2"));
  EXPECT_TRUE(fails_at("world_size = -1\n", "line 1"));
  EXPECT_TRUE(fails_at("\n\nshort_circuit = maybe\n", "line 3"));
  EXPECT_TRUE(fails_at("[cost\n", "line 1"));
  EXPECT_TRUE(fails_at("world_size 3\n", "line 1"));
  EXPECT_TRUE(fails_at("world_size = 0\n", "line 1"));
}

TEST(Diff, LineDiffMarksAddedAndRemovedLines) {
  auto d = cli::line_diff("a\nb\nc\n", "a\nx\nc\n");
  EXPECT_EQ(d, "  a\n+ x\n- b\n  c\n");
  EXPECT_EQ(cli::line_diff("a\n", "a\n"), "  a\n");
}

TEST(Cli, CompilePrintsOptimizedProgramAndNotes) {
  auto r = cli_run({"compile", "sssp"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("while (g.local_frontier())"), std::string::npos);
  EXPECT_NE(r.err.find("note: cache did not fire"), std::string::npos);

  auto none = cli_run({"--passes", "none", "compile", "sssp"});
  EXPECT_EQ(none.out.find("local_frontier"), std::string::npos);
  EXPECT_EQ(none.err, "");
}

TEST(Cli, EmitDiffAndPlan) {
  auto r = cli_run({"--emit-diff", "--emit-plan", "compile", corpus("edge_traversal")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("=== reorder (1 site)\n", 0), 0u);
  EXPECT_NE(r.out.find("+     Edge e = g.get_edge_i(v, _t1);"), std::string::npos);
  EXPECT_NE(r.out.find("for v in owned(rank)"), std::string::npos);
}

TEST(Cli, DiagnosticsCarryFileLineAndColumn) {
  TempDir t;
  auto bad = t.file("bad.sp", "propNodes<int> x = 0;\nint y = ;\n");
  auto r = cli_run({"compile", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind(bad + ":2:9: ", 0), 0u) << r.err;

  auto comp = cli_run({"run", corpus("composite_color"), "path:8"});
  EXPECT_EQ(comp.code, 1);
  EXPECT_EQ(comp.err.rfind(corpus("composite_color") + ":5:5: ", 0), 0u) << comp.err;

  auto missing = cli_run({"compile", t.file("nope.sp")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("cannot open program"), std::string::npos);
}

TEST(Cli, BadArgumentsAreUserErrors) {
  EXPECT_EQ(cli_run({}).code, 1);
  EXPECT_EQ(cli_run({"frobnicate"}).code, 1);
  EXPECT_EQ(cli_run({"--np", "0", "run", "sssp", "path:8"}).code, 1);
  EXPECT_EQ(cli_run({"--np", "9", "run", "sssp", "path:8"}).code, 1);
  EXPECT_EQ(cli_run({"--passes", "fast", "compile", "sssp"}).code, 1);
  EXPECT_EQ(cli_run({"run", "sssp", "bogus:1"}).code, 1);
  EXPECT_EQ(cli_run({"--help"}).code, 0);
}

TEST(Cli, RunWritesResultsAndMetrics) {
  TempDir t;
  auto res = t.file("dist.txt"), met = t.file("m.json");
  auto r = cli_run({"--np", "2", "run", "sssp", "path:6", "-o", res, "--metrics", met});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(testsupport::read_file(res), "0 0\n1 1\n2 2\n3 3\n4 4\n5 5\n");
  auto m = nlohmann::json::parse(testsupport::read_file(met));
  EXPECT_GT(m["sync_rounds"].get<int>(), 0);
  EXPECT_TRUE(m.contains("pulses"));

  auto src = cli_run({"run", "sssp", "path:6", "--source", "4"});
  EXPECT_EQ(src.out, "0 INF\n1 INF\n2 INF\n3 INF\n4 0\n5 1\n");

  auto js = cli_run({"--format", "json", "run", "degree", "star:9"});
  auto j = nlohmann::json::parse(js.out);
  EXPECT_EQ(j["queued_updates"].get<int>() + j["short_circuited_updates"].get<int>(), 8);
}

TEST(Cli, ConfigFileThenFlags) {
  TempDir t;
  auto conf = t.file("run.toml", "world_size = 3\npasses = none\n");
  auto r = cli_run({"--config", conf, "run", "sssp", "path:9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("R=3, passes=none"), std::string::npos) << r.err;
  auto o = cli_run({"--config", conf, "--np", "2", "--passes", "all", "run", "sssp", "path:9"});
  EXPECT_NE(o.err.find("R=2, passes=reorder,pulses,bypass,cache"), std::string::npos) << o.err;
  auto bad = cli_run({"--config", t.file("bad.toml", "colour = red\n"), "run", "sssp", "path:9"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("unknown config key 'colour'"), std::string::npos);
}

TEST(Cli, NonTerminationHasItsOwnExitCode) {
  TempDir t;
  auto conf = t.file("tight.toml", "max_pulses = 3\n");
  auto r = cli_run({"--config", conf, "--passes", "none", "run", "sssp", "path:40"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("non-termination"), std::string::npos);
}

TEST(Cli, VerifyAgainstOraclesAndExpectedFiles) {
  auto ok = cli_run({"--np", "4", "verify", "sssp", "ur:500:3000"});
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out.rfind("PASS sssp vs dijkstra", 0), 0u) << ok.out;
  auto cc = cli_run({"verify", "cc", "two-triangles"});
  EXPECT_NE(cc.out.find("2 components"), std::string::npos);
  auto user = cli_run({"--np", "3", "verify", corpus("neighbor_pull"), "rmat:6:4"});
  EXPECT_EQ(user.code, 0);
  EXPECT_NE(user.out.find("vs reference"), std::string::npos);

  TempDir t;
  auto want = t.file("want.txt", "0 0\n1 1\n2 7\n3 3\n");
  auto bad = cli_run({"verify", "sssp", "path:4", "--expected", want});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("vertex 2: got 2, expected 7"), std::string::npos) << bad.out;
}

TEST(Cli, GraphFilesByExtension) {
  TempDir t;
  auto el = t.file("g.txt", "# 4 3\n0 1 2\n1 2 2\n2 3 2\n");
  auto r = cli_run({"run", "sssp", el});
  EXPECT_EQ(r.out, "0 0\n1 2\n2 4\n3 6\n");
  auto mtx = t.file("g.mtx", "%%MatrixMarket matrix coordinate integer general\n3 3 2\n1 2 4\n2 3 4\n");
  auto m = cli_run({"run", "sssp", mtx});
  EXPECT_EQ(m.out, "0 0\n1 4\n2 8\n");
  auto bin = t.file("g.bin");
  {
    std::ofstream out(bin, std::ios::binary);
    save_binary(out, path_graph(3, 5));
  }
  EXPECT_EQ(cli_run({"run", "sssp", bin}).out, "0 0\n1 5\n2 10\n");
}

TEST(Cli, BenchReportsRowsAndRatios) {
  auto r = cli_run({"--format", "json", "bench", "--programs", "sssp,degree", "--graphs", "ur:200:1000",
                    "--ranks", "1,4", "--pass-set", "none", "--pass-set", "all"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["rows"].size(), 2u * 2u * 3u);
  EXPECT_TRUE(j["all_verified"].get<bool>());
  EXPECT_EQ(j["ratios"].size(), 4u);
  auto md = cli_run({"bench", "--programs", "cc", "--graphs", "path:16", "--ranks", "2", "--no-legacy"});
  EXPECT_EQ(md.code, 0);
  EXPECT_NE(md.out.find("| cc | path:16 | 2 | none | bulk | PASS"), std::string::npos) << md.out;
}

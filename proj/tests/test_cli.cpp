#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "ovp/cli.hpp"
#include "ovp/io.hpp"

using namespace ovp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("ovp_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string file(const std::string& name, const std::string& text) const {
    write_file(dir / name, text);
    return (dir / name).string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    n += e.path().filename().string().rfind(prefix, 0) == 0;
  }
  return n;
}

}  // namespace

TEST_CASE("solve writes fields and a manifest") {
  Scratch tmp("solve");
  const auto sc = tmp.file("eik.json", testing::eikonal_json());
  const auto r = run({"solve", "--scenario", sc, "--nx", "81", "--nt", "100", "--out", tmp.path("f")});
  CHECK(r.code == kExitOk);
  CHECK(count_files(tmp.path("f"), "W_0_k") == 101);
  CHECK(count_files(tmp.path("f"), "W_1_k") == 101);
  CHECK(fs::exists(tmp.dir / "f" / "manifest.json"));
  std::ifstream csv(tmp.dir / "f" / "W_0_k0.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "x1,x2,value");
}

TEST_CASE("usage and input errors map to exit codes") {
  Scratch tmp("errors");
  CHECK(run({"solve", "--out", tmp.path("f")}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  const auto bad = tmp.file("bad.json", R"({"dimension": 2, "targets": []})");
  const auto r = run({"solve", "--scenario", bad, "--out", tmp.path("f")});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(run({"solve", "--scenario", tmp.path("missing.json"), "--out", tmp.path("f")}).code == kExitInput);
  const auto sc = tmp.file("eik.json", testing::eikonal_json());
  CHECK(run({"solve", "--scenario", sc, "--nx", "81", "--out", tmp.path("f"), "--memory-cap-mb", "0.01"}).code ==
        kExitResource);
}

TEST_CASE("reference manifest lists all four levels") {
  Scratch tmp("manifest");
  const auto sc = tmp.file("two.json", testing::two_balls_json());
  REQUIRE(run({"solve", "--scenario", sc, "--nx", "21", "--nt", "20", "--out", tmp.path("f")}).code == 0);
  const auto m = nlohmann::json::parse(read_file(tmp.dir / "f" / "manifest.json"));
  REQUIRE(m.at("timings").size() == 4);
  std::vector<std::string> states;
  for (const auto& t : m.at("timings")) {
    CHECK(t.at("seconds").get<double>() >= 0.0);
    states.push_back(t.at("state"));
  }
  CHECK(states == std::vector<std::string>{"11", "01", "10", "00"});
  CHECK(m.at("scenario_digest").get<std::string>() == scenario_digest(testing::two_balls()));
  CHECK(m.at("grid").at("nodes") == nlohmann::json::array({21, 21}));
  CHECK(m.at("version") == kToolVersion);
}

TEST_CASE("simulate") {
  Scratch tmp("simulate");
  const auto sc = tmp.file("two.json", testing::two_balls_json());
  auto r = run({"simulate", "--scenario", sc, "--x0", "0.05,0.9", "--control", "0,0", "--dt", "0.25"});
  REQUIRE(r.code == 0);
  CHECK(r.out ==
        "time,x_1,x_2,memory,event,running_cost_so_far,total_discounted_cost\n"
        "0,0.05,0.9,00,,0,0\n"
        "0.25,0.05,0.9,00,,0.25,0.25\n"
        "0.5,0.05,0.9,00,,0.5,0.5\n"
        "0.75,0.05,0.9,00,,0.75,0.75\n"
        "1,0.05,0.9,00,,1,1\n");

  const auto ctl = tmp.file("ctl.txt", "# right then stop\n1,0\n0.5,0.5\n");
  r = run({"simulate", "--scenario", sc, "--x0", "0.05,0.9", "--controls", ctl});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("admissible") != std::string::npos);

  r = run({"simulate", "--scenario", sc, "--x0", "0.05,0.5", "--control", "1,0", "--dt", "0.01"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find(",touch:1,") != std::string::npos);
  CHECK(r.out.find(",touch:2,") != std::string::npos);

  r = run({"simulate", "--scenario", sc, "--x0", "0.05,0.5", "--control", "1,0", "--mode", "switching",
           "--switch-times", "0.1,0.2", "--via", "01", "--out", tmp.path("sw.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("final_memory=11 cost=", 0) == 0);
  CHECK(read_file(tmp.path("sw.csv")).find("switch:01->11") != std::string::npos);

  r = run({"simulate", "--scenario", sc, "--x0", "0.05,0.5", "--mode", "switching",
           "--switch-times", "0.1,0.2", "--via", "11"});
  CHECK(r.code == kExitInput);
}

TEST_CASE("plan") {
  Scratch tmp("plan");
  const auto eik = tmp.file("eik.json", testing::eikonal_json());
  REQUIRE(run({"solve", "--scenario", eik, "--nx", "21", "--nt", "20", "--out", tmp.path("e")}).code == 0);
  auto r = run({"plan", "--scenario", eik, "--fields", tmp.path("e"), "--x0", "0.1,0.1", "--out",
                tmp.path("p.csv")});
  REQUIRE(r.code == 0);
  const std::string csv = read_file(tmp.path("p.csv"));
  std::size_t switches = 0;
  for (std::size_t pos = csv.find(",switch:"); pos != std::string::npos; pos = csv.find(",switch:", pos + 1)) ++switches;
  CHECK(switches == 1);
  std::smatch m;
  const std::regex line(R"(predicted=(\S+) achieved=(\S+) gap=(\S+)\n)");
  REQUIRE(std::regex_match(r.out, m, line));
  CHECK(std::abs(std::stod(m[3])) <= 1e-9);

  CHECK(run({"plan", "--scenario", eik, "--fields", tmp.path("nope"), "--x0", "0.1,0.1"}).code == kExitInput);

  const auto two = tmp.file("two.json", testing::two_balls_json());
  REQUIRE(run({"solve", "--scenario", two, "--nx", "21", "--nt", "20", "--out", tmp.path("t")}).code == 0);
  r = run({"plan", "--scenario", two, "--fields", tmp.path("t"), "--x0", "0.05,0.5", "--out", tmp.path("q.csv")});
  REQUIRE(r.code == 0);
  REQUIRE(std::regex_match(r.out, m, line));
  CHECK(std::stod(m[1]) > 0.0);
  CHECK(std::stod(m[2]) >= std::stod(m[1]) - 0.5);

  // Fields solved for a different scenario are refused.
  r = run({"plan", "--scenario", eik, "--fields", tmp.path("t"), "--x0", "0.1,0.1"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("digest mismatch") != std::string::npos);
}

TEST_CASE("check") {
  Scratch tmp("check");
  const auto eik = tmp.file("eik.json", testing::eikonal_json());
  REQUIRE(run({"solve", "--scenario", eik, "--nx", "21", "--nt", "20", "--out", tmp.path("e")}).code == 0);
  auto r = run({"check", "--scenario", eik, "--fields", tmp.path("e"), "--mode", "obstacle"});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).at("pass") == true);
  r = run({"check", "--scenario", eik, "--fields", tmp.path("e"), "--mode", "dpp", "--samples", "50", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).at("samples") == 50);

  const auto c1d = tmp.file("c1d.json", testing::coarse_1d_json());
  REQUIRE(run({"solve", "--scenario", c1d, "--nx", "11", "--nt", "8", "--out", tmp.path("c")}).code == 0);
  r = run({"check", "--scenario", c1d, "--fields", tmp.path("c"), "--mode", "equivalence", "--samples", "4",
           "--tol", "0.1", "--seed", "2"});
  CHECK(r.code == 0);
  const auto rep = nlohmann::json::parse(r.out);
  CHECK(rep.at("pass") == true);
  CHECK(rep.at("probes").size() == 4);
  CHECK(rep.at("max_cascade_gap").get<double>() <= 1e-9);

  // Raise one interior value above the obstacle.
  const fs::path victim = tmp.dir / "e" / "W_0_k5.csv";
  std::string text = read_file(victim);
  const auto pos = text.find("\n0.5,0.5,");
  REQUIRE(pos != std::string::npos);
  const auto end = text.find('\n', pos + 1);
  text.replace(pos, end - pos, "\n0.5,0.5,7");
  write_file(victim, text);
  r = run({"check", "--scenario", eik, "--fields", tmp.path("e"), "--mode", "obstacle"});
  CHECK(r.code == kExitCheckFailed);
  CHECK(nlohmann::json::parse(r.out).at("pass") == false);

  write_file(victim, "x1,x2,value\n0,0,garbage\n");
  CHECK(run({"check", "--scenario", eik, "--fields", tmp.path("e")}).code != 0);
}

TEST_CASE("export is canonical and stable") {
  Scratch tmp("export");
  const auto sc = tmp.file("two.json", testing::two_balls_json());
  const auto r = run({"export", "--scenario", sc});
  REQUIRE(r.code == 0);
  CHECK(r.out == export_scenario(testing::two_balls()));
  const auto again = tmp.file("again.json", r.out);
  CHECK(run({"export", "--scenario", again}).out == r.out);
}

TEST_CASE("repeated solve and plan runs are byte-identical") {
  Scratch tmp("determinism");
  const auto sc = tmp.file("two.json", testing::two_balls_json());
  for (const char* d : {"a", "b"}) {
    REQUIRE(run({"solve", "--scenario", sc, "--nx", "21", "--nt", "10", "--out", tmp.path(d)}).code == 0);
    REQUIRE(run({"plan", "--scenario", sc, "--fields", tmp.path(d), "--x0", "0.05,0.5", "--out",
                 tmp.path(std::string(d) + ".csv")}).code == 0);
  }
  for (const auto& e : fs::directory_iterator(tmp.dir / "a")) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    CHECK(read_file(e.path()) == read_file(tmp.dir / "b" / name));
  }
  CHECK(read_file(tmp.path("a.csv")) == read_file(tmp.path("b.csv")));
}

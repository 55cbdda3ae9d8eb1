#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "scenfuzz/table/error_table.hpp"
#include "support/check.hpp"

namespace fs = std::filesystem;
using namespace scenfuzz;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// The environment overrides the binaries built alongside the tests.
std::string binary(const char* env, const char* built) {
  const char* v = std::getenv(env);
  return v ? v : built;
}

// Runs the CLI with stderr folded into stdout.
Run cli(const std::string& args) {
  const std::string exe = binary("SCENFUZZ_CLI", SCENFUZZ_CLI_PATH);
  const std::string cmd = fmt::format("'{}' {} 2>&1", exe, args);
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return fmt::format("'{}'", p.string()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string following() { return q(testing::scenario_path("02_vehicle_following.scn")); }

// A road with nothing on it but the ego: no violations are possible.
fs::path write_empty_road(const fs::path& dir) {
  const fs::path p = dir / "empty.scn";
  std::ofstream(p) << fmt::format(
      "scenario empty_road\n"
      "map \"{}\"\n"
      "param start = uniform(10, 40)\n"
      "ego = car on lane \"L0\" at start, speed 8, behavior FollowLane(speed=8)\n"
      "terminate after 5\n",
      testing::map_path("oneway.map").string());
  return p;
}

// Half of the parameter space fails the requirement.
fs::path write_half_feasible(const fs::path& dir) {
  const fs::path p = dir / "half.scn";
  std::ofstream(p) << fmt::format(
      "scenario half_feasible\n"
      "map \"{}\"\n"
      "param gap = uniform(0, 40)\n"
      "ego = car on lane \"L0\" at 20, speed 10, behavior FollowLane(speed=10)\n"
      "agent lead = car on lane \"L0\" at 30 + gap, speed 0, behavior FollowLane(speed=0)\n"
      "require gap > 20\n"
      "terminate after 5\n",
      testing::map_path("oneway.map").string());
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit code reflects whether violations were found") {
    testing::TempDir tmp("cli");
    Run hit = cli(fmt::format("falsify --scenario {} --seed 0 --max-samples 20 --out {}", following(), q(tmp / "a")));
    CHECK_MESSAGE(hit.code == 0, hit.out);
    Run clean = cli(fmt::format("falsify --scenario {} --max-samples 5 --out {}", q(write_empty_road(tmp.path())),
                                q(tmp / "b")));
    CHECK_MESSAGE(clean.code == 1, clean.out);
    CHECK(table::ErrorTable::open(tmp / "b").size() == 5);
  }

  TEST_CASE("zero budget is a configuration error that writes nothing") {
    testing::TempDir tmp("cli");
    Run r = cli(fmt::format("falsify --scenario {} --max-samples 0 --out {}", following(), q(tmp / "c")));
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(tmp / "c"));
  }

  TEST_CASE("unknown options and missing arguments are usage errors") {
    CHECK(cli("report").code == 2);
    CHECK(cli("falsify --scenario x.scn").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("falsify --scenario /nonexistent.scn --max-samples 1 --out /tmp/never").code == 2);
  }

  TEST_CASE("a budget of n samples yields exactly n rows") {
    testing::TempDir tmp("cli");
    for (const char* sampler : {"random", "halton", "mab"}) {
      const fs::path out = tmp / sampler;
      Run r = cli(fmt::format("falsify --scenario {} --sampler {} --max-samples 13 --out {}", following(), sampler, q(out)));
      CHECK_MESSAGE(r.code <= 1, r.out);
      table::ErrorTable t = table::ErrorTable::open(out);
      CHECK(t.size() == 13);
      for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.row(i).row == i);
    }
  }

  TEST_CASE("identical invocations write identical tables") {
    testing::TempDir tmp("cli");
    for (const char* sampler : {"halton", "mab"}) {
      const std::string base = fmt::format("falsify --scenario {} --sampler {} --seed 3 --max-samples 12 --batch 3 --workers 3 --out ",
                                           following(), sampler);
      cli(base + q(tmp / fmt::format("{}1", sampler)));
      cli(base + q(tmp / fmt::format("{}2", sampler)));
      const std::string a = slurp(tmp / fmt::format("{}1", sampler) / "rows.jsonl");
      CHECK(!a.empty());
      CHECK(a == slurp(tmp / fmt::format("{}2", sampler) / "rows.jsonl"));
    }
  }

  TEST_CASE("a resumed campaign matches an uninterrupted one") {
    testing::TempDir tmp("cli");
    for (const char* sampler : {"random", "mab"}) {
      const std::string base = fmt::format("falsify --scenario {} --sampler {} --seed 5 ", following(), sampler);
      const fs::path whole = tmp / fmt::format("{}whole", sampler);
      const fs::path split = tmp / fmt::format("{}split", sampler);
      cli(base + "--max-samples 10 --out " + q(whole));
      cli(base + "--max-samples 4 --out " + q(split));
      Run r = cli(base + "--max-samples 10 --resume --out " + q(split));
      CHECK_MESSAGE(r.code <= 1, r.out);
      CHECK(slurp(whole / "rows.jsonl") == slurp(split / "rows.jsonl"));
    }
  }

  TEST_CASE("replay reproduces a violating row") {
    testing::TempDir tmp("cli");
    cli(fmt::format("falsify --scenario {} --seed 0 --max-samples 20 --out {}", following(), q(tmp / "a")));
    table::ErrorTable t = table::ErrorTable::open(tmp / "a");
    std::optional<std::size_t> bad;
    for (const auto& row : t.rows()) {
      if (row.rho && row.rho->any_violation()) {
        bad = row.row;
        break;
      }
    }
    REQUIRE(bad.has_value());
    Run r = cli(fmt::format("replay {} {} --trace-out {}", q(tmp / "a"), *bad, q(tmp / "trace.jsonl")));
    CHECK_MESSAGE(r.code == 0, r.out);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["matches"] == true);
    CHECK(j["rho"] == j["stored_rho"]);
    CHECK(fs::file_size(tmp / "trace.jsonl") > 0);
  }

  TEST_CASE("replay of an infeasible row reports the failed requirement") {
    testing::TempDir tmp("cli");
    cli(fmt::format("falsify --scenario {} --max-samples 8 --out {}", q(write_half_feasible(tmp.path())), q(tmp / "a")));
    table::ErrorTable t = table::ErrorTable::open(tmp / "a");
    std::optional<std::size_t> infeasible;
    std::size_t feasible = 0;
    for (const auto& row : t.rows()) {
      if (!row.feasible && !infeasible) infeasible = row.row;
      if (row.feasible) {
        ++feasible;
        CHECK(row.point.continuous[0] > 20);
      }
    }
    CHECK(feasible > 0);
    REQUIRE(infeasible.has_value());
    Run r = cli(fmt::format("replay {} {}", q(tmp / "a"), *infeasible));
    CHECK(r.code == 0);
    CHECK(r.out.find("InfeasibleSample") != std::string::npos);
  }

  TEST_CASE("replay refuses an edited scenario") {
    testing::TempDir tmp("cli");
    const fs::path scn = write_empty_road(tmp.path());
    cli(fmt::format("falsify --scenario {} --max-samples 2 --out {}", q(scn), q(tmp / "a")));
    std::ofstream(scn, std::ios::app) << "# edited\n";
    Run r = cli(fmt::format("replay {} 0", q(tmp / "a")));
    CHECK(r.code == 2);
    CHECK(r.out.find("hash mismatch") != std::string::npos);
    Run resume = cli(fmt::format("falsify --scenario {} --max-samples 4 --resume --out {}", q(scn), q(tmp / "a")));
    CHECK(resume.code == 2);
  }

  TEST_CASE("report renders one row per campaign") {
    testing::TempDir tmp("cli");
    cli(fmt::format("falsify --scenario {} --max-samples 6 --out {}", following(), q(tmp / "a")));
    cli(fmt::format("falsify --scenario {} --sampler mab --max-samples 6 --out {}", following(), q(tmp / "b")));
    Run r = cli(fmt::format("report {} {} --coverage --out {}", q(tmp / "a"), q(tmp / "b"), q(tmp / "rep")));
    CHECK_MESSAGE(r.code == 0, r.out);
    CHECK(r.out.find("| vehicle_following | Halton | 6 |") != std::string::npos);
    CHECK(r.out.find("|  | MAB | 6 |") != std::string::npos);
    CHECK(slurp(tmp / "rep" / "report.md") == r.out);
    CHECK(fs::exists(tmp / "rep" / "scatter_0.csv"));
    CHECK(fs::exists(tmp / "rep" / "scatter_1.csv"));
  }

  TEST_CASE("an external SUT over stdio drives the ego") {
    const std::string echo = binary("SCENFUZZ_ECHO_SUT", SCENFUZZ_ECHO_SUT_PATH);
    testing::TempDir tmp("cli");
    Run r = cli(fmt::format("falsify --scenario {} --sut 'stdio:{}' --max-samples 4 --keep-all-traces --out {}",
                            q(write_empty_road(tmp.path())), echo, q(tmp / "a")));
    CHECK_MESSAGE(r.code == 1, r.out);
    table::ErrorTable t = table::ErrorTable::open(tmp / "a");
    REQUIRE(t.size() == 4);
    CHECK(t.row(0).feasible);
  }

  TEST_CASE("an unreachable SUT is a configuration error") {
    testing::TempDir tmp("cli");
    Run r = cli(fmt::format("falsify --scenario {} --sut tcp://127.0.0.1:1 --max-samples 2 --out {}", following(),
                            q(tmp / "a")));
    CHECK(r.code == 2);
  }

  TEST_CASE("validate accepts every bundled scenario") {
    std::string files;
    for (const auto& e : fs::directory_iterator(testing::source_dir() / "scenarios")) {
      if (e.path().extension() == ".scn") files += " " + q(e.path());
    }
    Run r = cli("validate" + files);
    CHECK_MESSAGE(r.code == 0, r.out);
  }
}

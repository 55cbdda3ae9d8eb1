// Same seed, same bytes: rows.jsonl is identical across runs and worker counts.
#include <chrono>
#include <fstream>
#include <sstream>

#include "scenfuzz/engine/engine.hpp"
#include "support/check.hpp"

using namespace scenfuzz;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string run(const std::filesystem::path& out, int workers) {
  engine::CampaignConfig cfg;
  cfg.scenario = testing::scenario_path("02_vehicle_following.scn");
  cfg.max_samples = 100;
  cfg.seed = 7;
  cfg.workers = workers;
  cfg.out = out;
  engine::falsify(cfg);
  return slurp(out / "rows.jsonl");
}

}  // namespace

int main() {
  testing::Report report("campaign_determinism");
  const auto start = std::chrono::steady_clock::now();
  testing::TempDir tmp("determinism");
  const std::string a = run(tmp / "a", 1);
  const std::string b = run(tmp / "b", 1);
  report.check(!a.empty() && a == b, "two runs give byte-identical rows.jsonl", fmt::format("{} bytes", a.size()));
  const std::string c = run(tmp / "c", 3);
  report.check(a == c, "three workers give the same bytes as one");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.check(secs < 300.0, "runtime under 5 min", fmt::format("{:.2f} s", secs));
  return report.finish();
}

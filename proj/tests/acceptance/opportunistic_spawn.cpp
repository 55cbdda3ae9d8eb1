// Agents of an opportunistic sub-scenario are alive only while the ego is
// inside the intersection, from its entry until its exit.
#include <chrono>

#include "scenfuzz/dsl/instantiate.hpp"
#include "scenfuzz/engine/engine.hpp"
#include "support/check.hpp"

using namespace scenfuzz;

int main() {
  testing::Report report("opportunistic_spawn");
  const auto start = std::chrono::steady_clock::now();
  const engine::LoadedScenario scenario = engine::load_scenario(testing::scenario_path("composed_intersection.scn"));
  const sim::Region region = scenario.map.intersection_region("I0");
  sim::RolloutConfig rollout;
  rollout.map_ref = "fourway.map";

  int entered = 0, spawned = 0, exited = 0, bad = 0;
  std::string first_bad;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    sampling::SamplerState st = sampling::make_sampler(sampling::SamplerKind::Random, seed, scenario.space);
    const SamplePoint point = sampling::next_point(std::move(st), scenario.space).first;
    const sim::ConcreteScene scene = dsl::instantiate(scenario.program, point, scenario.map);
    sim::Autopilot sut(scenario.map);
    const sim::Trace trace = sim::run_rollout(scene, sut, scenario.map, rollout, seed);

    std::optional<std::size_t> entry, exit;
    bool ok = true;
    bool any_alive = false;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const auto& w = trace.steps[i];
      const bool inside = scenario.map.contains(region, w.ego().position());
      if (inside && !entry) entry = i;
      if (!inside && entry && !exit) exit = i;
      for (std::size_t j = 0; j < scene.agents.size(); ++j) {
        if (scene.agents[j].group < 0 || !w.agents[j].alive) continue;
        any_alive = true;
        // Alive only inside the region, and never before entry or after exit.
        if (!inside || !entry || exit) ok = false;
      }
      // At the entry step the whole group is present.
      if (entry && *entry == i) {
        for (std::size_t j = 0; j < scene.agents.size(); ++j) {
          if (scene.agents[j].group >= 0 && !w.agents[j].alive) ok = false;
        }
      }
    }
    entered += entry ? 1 : 0;
    exited += exit ? 1 : 0;
    spawned += any_alive ? 1 : 0;
    if (!ok) {
      ++bad;
      if (first_bad.empty()) first_bad = fmt::format(", first at seed {}", seed);
    }
  }
  report.check(bad == 0, "sub-scenario agents live exactly within the ego's stay in the intersection",
               fmt::format("{} of 50 seeds broke the window{}", bad, first_bad));
  report.check(entered == 50 && spawned == entered, "every seed enters the intersection and spawns the group",
               fmt::format("{} entered, {} spawned, {} exited", entered, spawned, exited));
  report.check(exited > 0, "despawn observed after the ego leaves", fmt::format("{} seeds exited", exited));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.check(secs < 120.0, "runtime under 2 min", fmt::format("{:.2f} s", secs));
  return report.finish();
}

// Halton covers the unit square better than uniform random and than a bandit
// whose reward is concentrated in one quadrant.
#include <chrono>

#include "scenfuzz/coverage/coverage.hpp"
#include "scenfuzz/sampling/sampler.hpp"
#include "support/check.hpp"

using namespace scenfuzz;

namespace {

constexpr int kPoints = 256;

FeatureSpace unit_square() {
  FeatureSpace s;
  s.continuous = {{"x", 0.0, 1.0}, {"y", 0.0, 1.0}};
  return s;
}

double epsilon_of(const std::vector<coverage::Point>& pts) {
  coverage::CoverageQuery q;
  q.points = pts;
  return coverage::epsilon_coverage(q).epsilon;
}

std::vector<coverage::Point> passive(sampling::SamplerKind kind, std::uint64_t seed) {
  const FeatureSpace space = unit_square();
  sampling::SamplerState st = sampling::make_sampler(kind, seed, space);
  std::vector<coverage::Point> pts;
  for (int i = 0; i < kPoints; ++i) {
    auto [p, next] = sampling::next_point(std::move(st), space);
    st = std::move(next);
    pts.push_back(p.unit);
  }
  return pts;
}

// Reward is high only in the lower-left quadrant.
std::vector<coverage::Point> bandit(std::uint64_t seed) {
  const FeatureSpace space = unit_square();
  sampling::SamplerState st = sampling::make_sampler(sampling::SamplerKind::Mab, seed, space);
  std::vector<coverage::Point> pts;
  for (int i = 0; i < kPoints; ++i) {
    auto [p, next] = sampling::next_point(std::move(st), space);
    st = std::move(next);
    const bool hot = p.unit[0] < 0.5 && p.unit[1] < 0.5;
    sampling::Feedback fb;
    fb.point = p;
    fb.rho = hot ? std::vector<double>{-1.0, -1.0, 1.0, 1.0} : std::vector<double>{1.0, 1.0, 1.0, 1.0};
    st = sampling::observe(std::move(st), fb);
    pts.push_back(p.unit);
  }
  return pts;
}

}  // namespace

int main() {
  testing::Report report("sampler_coverage_order");
  const auto start = std::chrono::steady_clock::now();

  const double halton = epsilon_of(passive(sampling::SamplerKind::Halton, 0));
  double random_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) random_sum += epsilon_of(passive(sampling::SamplerKind::Random, seed));
  const double random_mean = random_sum / 20.0;
  report.check(halton < random_mean, "Halton below mean uniform random",
               fmt::format("Halton {:.4f}, random mean over 20 seeds {:.4f}", halton, random_mean));

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const double mab = epsilon_of(bandit(seed));
    report.check(halton < mab, fmt::format("Halton below quadrant-rewarded bandit, seed {}", seed),
                 fmt::format("Halton {:.4f}, bandit {:.4f}", halton, mab));
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.check(secs < 120.0, "runtime under 2 min", fmt::format("{:.2f} s", secs));
  return report.finish();
}

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "scenfuzz/feature_space.hpp"

namespace scenfuzz::sampling {

enum class SamplerKind { Random, Halton, Mab };

std::string_view to_string(SamplerKind kind);
std::optional<SamplerKind> sampler_kind_from_string(std::string_view s);

struct MabConfig {
  int bins = 5;
  double exploration = 1.0;  // multiplies the UCB1 bonus sqrt(2 ln N / n)
  int batch = 1;             // draws allowed before feedback is required
  friend bool operator==(const MabConfig&, const MabConfig&) = default;
};

struct ArmStats {
  std::uint64_t pulls = 0;
  double reward = 0.0;
  friend bool operator==(const ArmStats&, const ArmStats&) = default;
};

struct SamplerState {
  SamplerKind kind = SamplerKind::Random;
  std::uint64_t seed = 0;
  std::uint64_t campaign = 0;
  std::uint64_t draws = 0;  // the next Halton index is draws + 1
  MabConfig mab;
  std::vector<std::vector<ArmStats>> arms;          // per dimension, continuous first
  std::vector<std::vector<std::size_t>> pending;    // arm choices awaiting feedback
  friend bool operator==(const SamplerState&, const SamplerState&) = default;
};

struct Feedback {
  SamplePoint point;
  std::vector<double> rho;  // one entry per active metric
  bool feasible = true;
};

// Radical inverse of `index` in `base`.
double halton_value(std::uint64_t index, std::uint64_t base);

// The n-th prime, n >= 0.
std::uint64_t nth_prime(std::size_t n);

SamplerState make_sampler(SamplerKind kind, std::uint64_t seed, const FeatureSpace& space, MabConfig mab = {},
                          std::optional<std::uint64_t> campaign = std::nullopt);

std::pair<SamplePoint, SamplerState> next_point(SamplerState state, const FeatureSpace& space);

// Passive samplers return the state unchanged. Throws StaleFeedback when the
// point carries another campaign's tag or was never drawn by this sampler.
SamplerState observe(SamplerState state, const Feedback& fb);

// Bin a unit coordinate falls in under k equal bins.
std::size_t bin_of(double unit, int bins);

void to_json(nlohmann::json& j, const SamplerState& s);
void from_json(const nlohmann::json& j, SamplerState& s);

}  // namespace scenfuzz::sampling

#include "scenfuzz/sampling/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "scenfuzz/errors.hpp"
#include "scenfuzz/rng.hpp"

namespace scenfuzz::sampling {

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Random: return "random";
    case SamplerKind::Halton: return "halton";
    case SamplerKind::Mab: return "mab";
  }
  return "random";
}

std::optional<SamplerKind> sampler_kind_from_string(std::string_view s) {
  if (s == "random") return SamplerKind::Random;
  if (s == "halton") return SamplerKind::Halton;
  if (s == "mab") return SamplerKind::Mab;
  return std::nullopt;
}

double halton_value(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0;
  const double inv = 1.0 / static_cast<double>(base);
  while (index > 0) {
    f *= inv;
    result += f * static_cast<double>(index % base);
    index /= base;
  }
  return result;
}

std::uint64_t nth_prime(std::size_t n) {
  std::size_t found = 0;
  for (std::uint64_t c = 2;; ++c) {
    bool prime = true;
    for (std::uint64_t d = 2; d * d <= c; ++d) {
      if (c % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime && found++ == n) return c;
  }
}

std::size_t bin_of(double unit, int bins) {
  const auto k = static_cast<std::size_t>(bins);
  const auto b = static_cast<std::size_t>(std::floor(std::clamp(unit, 0.0, 1.0) * static_cast<double>(k)));
  return std::min(b, k - 1);
}

namespace {

std::size_t choice_index(double v, std::size_t n) {
  return std::min(static_cast<std::size_t>(std::floor(v * static_cast<double>(n))), n - 1);
}

std::vector<std::size_t> arms_of(const SamplePoint& p, int bins) {
  std::vector<std::size_t> arms;
  for (double u : p.unit) arms.push_back(bin_of(u, bins));
  for (std::size_t d : p.discrete) arms.push_back(d);
  return arms;
}

std::size_t select_arm(const std::vector<ArmStats>& stats, const std::vector<std::size_t>& virtual_pulls, double c) {
  double total = 0.0;
  for (std::size_t a = 0; a < stats.size(); ++a) total += static_cast<double>(stats[a].pulls + virtual_pulls[a]);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < stats.size(); ++a) {
    const double n = static_cast<double>(stats[a].pulls + virtual_pulls[a]);
    double score = std::numeric_limits<double>::infinity();
    if (n > 0.0) {
      const double mean = stats[a].pulls > 0 ? stats[a].reward / static_cast<double>(stats[a].pulls) : 0.0;
      score = mean + c * std::sqrt(2.0 * std::log(total) / n);
    }
    if (score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

}  // namespace

SamplerState make_sampler(SamplerKind kind, std::uint64_t seed, const FeatureSpace& space, MabConfig mab,
                          std::optional<std::uint64_t> campaign) {
  if (mab.bins < 1) throw ConfigError("MAB needs at least one bin per dimension");
  if (mab.batch < 1) throw ConfigError("MAB batch size must be at least 1");
  if (!(mab.exploration >= 0.0)) throw ConfigError("MAB exploration constant must be non-negative");
  SamplerState s;
  s.kind = kind;
  s.seed = seed;
  s.campaign = campaign ? *campaign : mix_seed(seed, static_cast<std::uint64_t>(kind) + 1);
  s.mab = mab;
  if (kind == SamplerKind::Mab) {
    for (std::size_t i = 0; i < space.continuous.size(); ++i) s.arms.emplace_back(mab.bins);
    for (const auto& d : space.discrete) s.arms.emplace_back(d.choices.size());
  }
  return s;
}

std::pair<SamplePoint, SamplerState> next_point(SamplerState state, const FeatureSpace& space) {
  const std::size_t nc = space.continuous.size();
  const std::size_t nd = space.discrete.size();
  Rng rng(mix_seed(state.seed, state.draws));
  std::vector<double> unit(nc);
  std::vector<std::size_t> discrete(nd);

  switch (state.kind) {
    case SamplerKind::Random:
      for (auto& u : unit) u = uniform01(rng);
      for (std::size_t j = 0; j < nd; ++j) discrete[j] = choice_index(uniform01(rng), space.discrete[j].choices.size());
      break;
    case SamplerKind::Halton: {
      const std::uint64_t index = state.draws + 1;
      for (std::size_t i = 0; i < nc; ++i) unit[i] = halton_value(index, nth_prime(i));
      for (std::size_t j = 0; j < nd; ++j) {
        discrete[j] = choice_index(halton_value(index, nth_prime(nc + j)), space.discrete[j].choices.size());
      }
      break;
    }
    case SamplerKind::Mab: {
      if (state.arms.size() != nc + nd) throw std::invalid_argument("sampler state does not match the feature space");
      if (!space.empty() && state.pending.size() >= static_cast<std::size_t>(state.mab.batch)) {
        throw std::logic_error("MAB sampler needs feedback before the next draw");
      }
      std::vector<std::size_t> chosen(nc + nd);
      for (std::size_t dim = 0; dim < nc + nd; ++dim) {
        std::vector<std::size_t> virtual_pulls(state.arms[dim].size(), 0);
        for (const auto& p : state.pending) ++virtual_pulls[p[dim]];
        chosen[dim] = select_arm(state.arms[dim], virtual_pulls, state.mab.exploration);
      }
      const double k = static_cast<double>(state.mab.bins);
      for (std::size_t i = 0; i < nc; ++i) unit[i] = (static_cast<double>(chosen[i]) + uniform01(rng)) / k;
      for (std::size_t j = 0; j < nd; ++j) discrete[j] = chosen[nc + j];
      if (!space.empty()) state.pending.push_back(chosen);
      break;
    }
  }
  ++state.draws;
  SamplePoint p = point_from_unit(space, std::move(unit), std::move(discrete));
  p.campaign = state.campaign;
  return {std::move(p), std::move(state)};
}

SamplerState observe(SamplerState state, const Feedback& fb) {
  if (fb.point.campaign != state.campaign) {
    throw StaleFeedback("feedback refers to a point from a different campaign");
  }
  if (state.kind != SamplerKind::Mab || state.arms.empty()) return state;
  const std::vector<std::size_t> arms = arms_of(fb.point, state.mab.bins);
  auto it = std::find(state.pending.begin(), state.pending.end(), arms);
  if (it == state.pending.end()) throw StaleFeedback("feedback refers to a point this sampler has no pending draw for");
  state.pending.erase(it);
  double reward = 0.0;
  if (fb.feasible && !fb.rho.empty()) {
    const auto violated = std::count_if(fb.rho.begin(), fb.rho.end(), [](double r) { return r < 0.0; });
    reward = static_cast<double>(violated) / static_cast<double>(fb.rho.size());
  }
  for (std::size_t dim = 0; dim < arms.size(); ++dim) {
    ArmStats& a = state.arms[dim].at(arms[dim]);
    a.pulls += 1;
    a.reward += reward;
  }
  return state;
}

void to_json(nlohmann::json& j, const SamplerState& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"seed", s.seed},
                     {"campaign", s.campaign},
                     {"draws", s.draws},
                     {"mab", {{"bins", s.mab.bins}, {"exploration", s.mab.exploration}, {"batch", s.mab.batch}}}};
  if (s.kind == SamplerKind::Mab) {
    nlohmann::json arms = nlohmann::json::array();
    for (const auto& dim : s.arms) {
      nlohmann::json d = nlohmann::json::array();
      for (const auto& a : dim) d.push_back({a.pulls, a.reward});
      arms.push_back(std::move(d));
    }
    j["arms"] = std::move(arms);
    j["pending"] = s.pending;
  }
}

void from_json(const nlohmann::json& j, SamplerState& s) {
  auto kind = sampler_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("unknown sampler kind in saved state");
  s.kind = *kind;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.campaign = j.at("campaign").get<std::uint64_t>();
  s.draws = j.at("draws").get<std::uint64_t>();
  const auto& m = j.at("mab");
  s.mab.bins = m.at("bins").get<int>();
  s.mab.exploration = m.at("exploration").get<double>();
  s.mab.batch = m.at("batch").get<int>();
  s.arms.clear();
  s.pending.clear();
  if (j.contains("arms")) {
    for (const auto& d : j.at("arms")) {
      std::vector<ArmStats> dim;
      for (const auto& a : d) dim.push_back({a.at(0).get<std::uint64_t>(), a.at(1).get<double>()});
      s.arms.push_back(std::move(dim));
    }
  }
  if (j.contains("pending")) s.pending = j.at("pending").get<std::vector<std::vector<std::size_t>>>();
}

}  // namespace scenfuzz::sampling

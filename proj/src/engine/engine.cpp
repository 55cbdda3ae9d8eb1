#include "scenfuzz/engine/engine.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "scenfuzz/dsl/feature_space.hpp"
#include "scenfuzz/dsl/instantiate.hpp"
#include "scenfuzz/dsl/parser.hpp"
#include "scenfuzz/errors.hpp"
#include "scenfuzz/rng.hpp"

namespace scenfuzz::engine {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kPassiveWindow = 64;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_diagnostics(const fs::path& file, const std::vector<dsl::Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) out += fmt::format("{}:{}\n", file.string(), d.format());
  if (!out.empty()) out.pop_back();
  return out;
}

sim::RolloutConfig rollout_config(double dt, std::optional<double> horizon, const fs::path& map_path) {
  sim::RolloutConfig rc;
  rc.dt = dt;
  rc.horizon = horizon;
  rc.map_ref = map_path.filename().string();
  return rc;
}

std::vector<std::string> labels_of(const FeatureSpace& space, const SamplePoint& p) {
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < space.discrete.size(); ++j) {
    labels.push_back(scalar_label(space.discrete[j].choices.at(p.discrete.at(j))));
  }
  return labels;
}

struct Job {
  std::size_t row;
  SamplePoint point;
  std::uint64_t seed;
};

// Rollout workers, each owning one SUT connection. Results are collected by row.
class WorkerPool {
 public:
  WorkerPool(int n, const LoadedScenario& scenario, const sim::SutFactory& factory, const sim::RolloutConfig& rollout,
             const monitor::Thresholds& thresholds)
      : scenario_(scenario), factory_(factory), rollout_(rollout), thresholds_(thresholds) {
    for (int i = 0; i < n; ++i) threads_.emplace_back([this] { run(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void submit(Job job) {
    {
      std::lock_guard lock(mu_);
      jobs_.push_back(std::move(job));
    }
    cv_.notify_all();
  }

  Outcome wait_for(std::size_t row) {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return results_.count(row) || error_; });
    if (error_) std::rethrow_exception(error_);
    Outcome o = std::move(results_.at(row));
    results_.erase(row);
    return o;
  }

 private:
  void run() {
    std::unique_ptr<sim::Sut> sut;
    while (true) {
      Job job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
        if (stop_) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      try {
        if (!sut) sut = factory_();
        Outcome o = evaluate_point(scenario_, job.point, *sut, rollout_, thresholds_, job.seed);
        std::lock_guard lock(mu_);
        results_.emplace(job.row, std::move(o));
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
      }
      done_cv_.notify_all();
    }
  }

  const LoadedScenario& scenario_;
  const sim::SutFactory& factory_;
  sim::RolloutConfig rollout_;
  monitor::Thresholds thresholds_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::deque<Job> jobs_;
  std::map<std::size_t, Outcome> results_;
  std::exception_ptr error_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

sampling::Feedback feedback_of(const table::ErrorTableRow& row) {
  sampling::Feedback fb;
  fb.point = row.point;
  fb.feasible = row.feasible;
  if (row.rho) fb.rho.assign(row.rho->rho.begin(), row.rho->rho.end());
  return fb;
}

}  // namespace

LoadedScenario load_scenario(const fs::path& scenario, const std::optional<fs::path>& map_override) {
  LoadedScenario out;
  out.scenario_path = fs::absolute(scenario);
  const std::string source = read_text(out.scenario_path);
  dsl::ParseResult parsed = dsl::parse(source);
  if (!parsed.ok()) throw ConfigError(join_diagnostics(scenario, parsed.diagnostics));
  out.program = std::move(*parsed.program);
  if (map_override) {
    out.map_path = fs::absolute(*map_override);
  } else if (out.program.map_path) {
    out.map_path = fs::absolute(out.scenario_path.parent_path() / *out.program.map_path);
  } else {
    throw ConfigError(fmt::format("{}: no map line and no --map given", scenario.string()));
  }
  try {
    out.map = sim::load_map(out.map_path);
  } catch (const MapError& e) {
    throw ConfigError(e.what());
  }
  if (auto diags = dsl::check_against_map(out.program, out.map); !diags.empty()) {
    throw ConfigError(join_diagnostics(scenario, diags));
  }
  out.space = dsl::extract_feature_space(out.program);
  return out;
}

std::uint64_t rollout_seed(std::uint64_t campaign_seed, std::size_t row) { return mix_seed(campaign_seed, row); }

Outcome evaluate_point(const LoadedScenario& scenario, const SamplePoint& point, sim::Sut& sut,
                       const sim::RolloutConfig& rollout, const monitor::Thresholds& thresholds, std::uint64_t seed) {
  Outcome o;
  sim::ConcreteScene scene;
  try {
    scene = dsl::instantiate(scenario.program, point, scenario.map);
  } catch (const InfeasibleSample& e) {
    o.feasible = false;
    o.note = e.what();
    return o;
  }
  sim::Trace trace = sim::run_rollout(scene, sut, scenario.map, rollout, seed);
  o.rho = monitor::evaluate(trace, scenario.map, thresholds);
  o.trace = std::move(trace);
  return o;
}

CampaignSummary falsify(const CampaignConfig& cfg) {
  if (cfg.max_samples && *cfg.max_samples == 0) throw ConfigError("--max-samples must be positive");
  if (!cfg.max_samples && !cfg.max_seconds) throw ConfigError("at least one budget bound is required");
  if (cfg.max_seconds && !(*cfg.max_seconds > 0.0)) throw ConfigError("--max-seconds must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("--dt must be positive");
  if (cfg.horizon && !(*cfg.horizon >= cfg.dt)) throw ConfigError("--horizon must be at least one timestep");
  if (cfg.workers < 1) throw ConfigError("--workers must be at least 1");
  if (cfg.out.empty()) throw ConfigError("--out is required");

  const LoadedScenario scenario = load_scenario(cfg.scenario, cfg.map);
  sim::SutOptions sut_opts;
  sut_opts.autopilot = cfg.autopilot;
  sut_opts.deadline = cfg.sut_deadline;
  const sim::SutFactory factory = sim::make_sut_factory(cfg.sut, scenario.map, sut_opts);
  const std::string scenario_hash = table::sha256_file(scenario.scenario_path);
  const std::string map_hash = table::sha256_file(scenario.map_path);

  std::optional<table::ErrorTable> tbl;
  if (cfg.resume && fs::exists(cfg.out / "campaign.json")) {
    tbl = table::ErrorTable::open(cfg.out);
    const auto& rec = tbl->record();
    if (rec.scenario_hash != scenario_hash || rec.map_hash != map_hash) {
      throw HashMismatch("scenario or map changed since the campaign started");
    }
    if (rec.sampler != cfg.sampler || rec.seed != cfg.seed) {
      throw ConfigError("resume must use the campaign's sampler and seed");
    }
  } else {
    table::CampaignRecord rec;
    rec.scenario_path = scenario.scenario_path.string();
    rec.scenario_name = scenario.program.name;
    rec.scenario_hash = scenario_hash;
    rec.map_path = scenario.map_path.string();
    rec.map_hash = map_hash;
    rec.sampler = cfg.sampler;
    rec.mab = cfg.mab;
    rec.seed = cfg.seed;
    rec.campaign_id = fmt::format("{:016x}", mix_seed(cfg.seed, std::hash<std::string>{}(scenario_hash)));
    rec.dt = cfg.dt;
    rec.horizon = cfg.horizon;
    rec.thresholds = cfg.thresholds;
    rec.sut = cfg.sut;
    rec.keep_all_traces = cfg.keep_all_traces;
    rec.max_samples = cfg.max_samples;
    rec.max_seconds = cfg.max_seconds;
    rec.space = scenario.space;
    rec.start_time = table::utc_timestamp();
    tbl = table::ErrorTable::create(cfg.out, rec);
  }
  table::ErrorTable& table = *tbl;
  const table::CampaignRecord& rec = table.record();

  sampling::SamplerState state;
  if (table.size() > 0) {
    state = table.rows().back().sampler_state.get<sampling::SamplerState>();
  } else {
    state = sampling::make_sampler(rec.sampler, rec.seed, scenario.space, rec.mab,
                                   std::stoull(rec.campaign_id, nullptr, 16));
  }

  const bool active = rec.sampler == sampling::SamplerKind::Mab;
  const int workers = active ? std::min(cfg.workers, rec.mab.batch) : cfg.workers;
  // Draws allowed ahead of feedback. MAB draws depend on earlier feedback; the
  // passive window is fixed so rows do not depend on the worker count.
  const std::size_t window = active ? static_cast<std::size_t>(rec.mab.batch) : kPassiveWindow;

  const sim::RolloutConfig rollout = rollout_config(rec.dt, rec.horizon, scenario.map_path);
  WorkerPool pool(workers, scenario, factory, rollout, rec.thresholds);

  const auto start = Clock::now();
  auto time_left = [&] {
    if (!cfg.max_seconds) return true;
    return std::chrono::duration<double>(Clock::now() - start).count() < *cfg.max_seconds;
  };
  std::size_t drawn = table.size();
  std::size_t observed = table.size() > 0 ? table.rows().back().observed : 0;
  std::map<std::size_t, std::pair<SamplePoint, std::pair<nlohmann::json, std::size_t>>> in_flight;

  while (true) {
    while ((!cfg.max_samples || drawn < *cfg.max_samples) && drawn - observed < window && time_left()) {
      auto [point, next] = sampling::next_point(std::move(state), scenario.space);
      state = std::move(next);
      in_flight.emplace(drawn, std::make_pair(point, std::make_pair(nlohmann::json(state), observed)));
      pool.submit(Job{drawn, point, rollout_seed(rec.seed, drawn)});
      ++drawn;
    }
    if (observed < table.size()) {
      state = sampling::observe(std::move(state), feedback_of(table.row(observed)));
      ++observed;
      continue;
    }
    if (in_flight.empty()) break;
    // Out of time: unfinished draws are dropped; resume redraws them from the last row's state.
    if (!time_left()) break;

    const std::size_t r = table.size();
    Outcome o = pool.wait_for(r);
    auto node = in_flight.extract(r);
    const auto& [point, meta] = node.mapped();
    table::ErrorTableRow row;
    row.row = r;
    row.point = point;
    row.labels = labels_of(scenario.space, point);
    row.feasible = o.feasible;
    row.note = o.note;
    row.rho = o.rho;
    row.seed = rollout_seed(rec.seed, r);
    row.sampler_state = meta.first;
    row.observed = meta.second;
    if (o.trace) {
      row.termination = o.trace->termination;
      if (rec.keep_all_traces || (o.rho && o.rho->any_violation())) {
        sim::write_trace(table.trace_path(r), *o.trace);
        row.trace = table::ErrorTable::trace_ref(r);
      }
    }
    table.append(row);
  }

  table.record().end_time = table::utc_timestamp();
  table.save_record();
  write_campaign_report(table);

  CampaignSummary summary;
  summary.dir = cfg.out;
  summary.rows = table.size();
  for (const auto& row : table.rows()) summary.violating_rows += row.any_violation() ? 1 : 0;
  return summary;
}

ReplayResult replay(const fs::path& dir, std::size_t row_index) {
  const table::ErrorTable table = table::ErrorTable::open(dir);
  const table::CampaignRecord& rec = table.record();
  const table::ErrorTableRow& row = table.row(row_index);
  if (!fs::exists(rec.scenario_path) || table::sha256_file(rec.scenario_path) != rec.scenario_hash) {
    throw HashMismatch(fmt::format("{} changed since the campaign ran", rec.scenario_path));
  }
  if (!fs::exists(rec.map_path) || table::sha256_file(rec.map_path) != rec.map_hash) {
    throw HashMismatch(fmt::format("{} changed since the campaign ran", rec.map_path));
  }
  const LoadedScenario scenario = load_scenario(rec.scenario_path, fs::path(rec.map_path));
  sim::SutOptions opts;
  const sim::SutFactory factory = sim::make_sut_factory(rec.sut, scenario.map, opts);
  auto sut = factory();

  ReplayResult result;
  result.row = row;
  result.outcome = evaluate_point(scenario, row.point, *sut, rollout_config(rec.dt, rec.horizon, scenario.map_path),
                                  rec.thresholds, row.seed);
  result.matches = result.outcome.feasible == row.feasible && result.outcome.rho == row.rho;
  return result;
}

std::vector<std::string> validate_bundle(const fs::path& scenario, const std::optional<fs::path>& map_override) {
  std::vector<std::string> problems;
  try {
    const LoadedScenario loaded = load_scenario(scenario, map_override);
    const SamplePoint mid = dsl::midpoint(loaded.space);
    sim::ConcreteScene scene;
    try {
      scene = dsl::instantiate(loaded.program, mid, loaded.map);
    } catch (const InfeasibleSample& e) {
      problems.push_back(fmt::format("{}: midpoint is infeasible: {}", scenario.string(), e.what()));
      return problems;
    }
    sim::Autopilot autopilot(loaded.map);
    sim::RolloutConfig rc = rollout_config(0.1, 5.0, loaded.map_path);
    const sim::Trace trace = sim::run_rollout(scene, autopilot, loaded.map, rc, 0);
    if (trace.steps.size() < 2) problems.push_back(fmt::format("{}: smoke rollout produced too few steps", scenario.string()));
    monitor::evaluate(trace, loaded.map);
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }
  return problems;
}

void write_campaign_report(const table::ErrorTable& table, bool coverage, bool raw_units) {
  table::SummaryOptions opts;
  opts.coverage = coverage;
  opts.raw_units = raw_units;
  const std::string md = table::render_report({table::summarize(table, opts)});
  std::ofstream(table.dir() / "report.md", std::ios::binary | std::ios::trunc) << md;
  std::ofstream scatter(table.dir() / "scatter.csv", std::ios::binary | std::ios::trunc);
  table::export_scatter(table, {}, scatter);
}

}  // namespace scenfuzz::engine

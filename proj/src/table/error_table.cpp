#include "scenfuzz/table/error_table.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "scenfuzz/coverage/coverage.hpp"
#include "scenfuzz/errors.hpp"

namespace scenfuzz::table {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json scalar_to_json(const Scalar& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

Scalar scalar_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  return j.get<std::string>();
}

json thresholds_to_json(const monitor::Thresholds& t) {
  return json{{"distance", t.distance},     {"ttc", t.ttc},   {"ttc_radius", t.ttc_radius},
              {"progress", t.progress},     {"lane", t.lane}, {"cap", t.cap},
              {"include_pedestrians", t.include_pedestrians}};
}

monitor::Thresholds thresholds_from_json(const json& j) {
  monitor::Thresholds t;
  t.distance = j.value("distance", t.distance);
  t.ttc = j.value("ttc", t.ttc);
  t.ttc_radius = j.value("ttc_radius", t.ttc_radius);
  t.progress = j.value("progress", t.progress);
  t.lane = j.value("lane", t.lane);
  t.cap = j.value("cap", t.cap);
  t.include_pedestrians = j.value("include_pedestrians", t.include_pedestrians);
  return t;
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageFull(fmt::format("cannot write {}: {}", path.string(), std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

void write_file_durably(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageFull(fmt::format("cannot create {}: {}", tmp.string(), std::strerror(errno)));
  try {
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) throw StorageFull(fmt::format("cannot sync {}", tmp.string()));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

json record_to_json(const CampaignRecord& r) {
  json cont = json::array();
  for (const auto& d : r.space.continuous) cont.push_back({{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}});
  json disc = json::array();
  for (const auto& d : r.space.discrete) {
    json choices = json::array();
    for (const auto& c : d.choices) choices.push_back(scalar_to_json(c));
    disc.push_back({{"name", d.name}, {"choices", std::move(choices)}});
  }
  json j{{"campaign", r.campaign_id},
         {"scenario", r.scenario_path},
         {"scenario_name", r.scenario_name},
         {"scenario_hash", r.scenario_hash},
         {"map", r.map_path},
         {"map_hash", r.map_hash},
         {"sampler",
          {{"kind", sampling::to_string(r.sampler)},
           {"bins", r.mab.bins},
           {"exploration", r.mab.exploration},
           {"batch", r.mab.batch}}},
         {"seed", r.seed},
         {"dt", r.dt},
         {"horizon", r.horizon ? json(*r.horizon) : json()},
         {"thresholds", thresholds_to_json(r.thresholds)},
         {"sut", r.sut},
         {"keep_all_traces", r.keep_all_traces},
         {"max_samples", r.max_samples ? json(*r.max_samples) : json()},
         {"max_seconds", r.max_seconds ? json(*r.max_seconds) : json()},
         {"feature_space", {{"continuous", std::move(cont)}, {"discrete", std::move(disc)}}},
         {"start_time", r.start_time},
         {"end_time", r.end_time}};
  return j;
}

CampaignRecord record_from_json(const json& j) {
  CampaignRecord r;
  try {
    r.campaign_id = j.at("campaign").get<std::string>();
    r.scenario_path = j.at("scenario").get<std::string>();
    r.scenario_name = j.value("scenario_name", std::string());
    r.scenario_hash = j.at("scenario_hash").get<std::string>();
    r.map_path = j.value("map", std::string());
    r.map_hash = j.value("map_hash", std::string());
    const auto& s = j.at("sampler");
    auto kind = sampling::sampler_kind_from_string(s.at("kind").get<std::string>());
    if (!kind) throw ConfigError("campaign.json names an unknown sampler");
    r.sampler = *kind;
    r.mab.bins = s.value("bins", r.mab.bins);
    r.mab.exploration = s.value("exploration", r.mab.exploration);
    r.mab.batch = s.value("batch", r.mab.batch);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.dt = j.at("dt").get<double>();
    if (!j.at("horizon").is_null()) r.horizon = j.at("horizon").get<double>();
    r.thresholds = thresholds_from_json(j.at("thresholds"));
    r.sut = j.value("sut", std::string("builtin"));
    r.keep_all_traces = j.value("keep_all_traces", false);
    if (j.contains("max_samples") && !j.at("max_samples").is_null()) r.max_samples = j.at("max_samples").get<std::uint64_t>();
    if (j.contains("max_seconds") && !j.at("max_seconds").is_null()) r.max_seconds = j.at("max_seconds").get<double>();
    for (const auto& d : j.at("feature_space").at("continuous")) {
      r.space.continuous.push_back({d.at("name").get<std::string>(), d.at("lo").get<double>(), d.at("hi").get<double>()});
    }
    for (const auto& d : j.at("feature_space").at("discrete")) {
      DiscreteDim dim{d.at("name").get<std::string>(), {}};
      for (const auto& c : d.at("choices")) dim.choices.push_back(scalar_from_json(c));
      r.space.discrete.push_back(std::move(dim));
    }
    r.start_time = j.value("start_time", std::string());
    r.end_time = j.value("end_time", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed campaign.json: {}", e.what()));
  }
  return r;
}

json row_to_json(const ErrorTableRow& r) {
  json j{{"row", r.row},
         {"unit", r.point.unit},
         {"raw", r.point.continuous},
         {"discrete", r.point.discrete},
         {"labels", r.labels},
         {"feasible", r.feasible},
         {"seed", r.seed},
         {"sampler_state", r.sampler_state},
         {"observed", r.observed},
         {"trace", r.trace ? json(*r.trace) : json()},
         {"termination", r.termination ? json(sim::to_string(*r.termination)) : json()}};
  if (r.rho) {
    json rho = json::object();
    json violations = json::array();
    for (monitor::Metric m : monitor::kMetrics) {
      rho[std::string(monitor::to_string(m))] = (*r.rho)[m];
      if (r.rho->violated(m)) violations.push_back(monitor::to_string(m));
    }
    j["rho"] = std::move(rho);
    j["violations"] = std::move(violations);
  } else {
    j["violations"] = json::array();
  }
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

ErrorTableRow row_from_json(const json& j) {
  ErrorTableRow r;
  r.row = j.at("row").get<std::size_t>();
  r.point.unit = j.at("unit").get<std::vector<double>>();
  r.point.continuous = j.at("raw").get<std::vector<double>>();
  r.point.discrete = j.at("discrete").get<std::vector<std::size_t>>();
  r.labels = j.at("labels").get<std::vector<std::string>>();
  r.feasible = j.at("feasible").get<bool>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.sampler_state = j.at("sampler_state");
  r.point.campaign = r.sampler_state.value("campaign", std::uint64_t{0});
  r.observed = j.value("observed", std::size_t{0});
  if (!j.at("trace").is_null()) r.trace = j.at("trace").get<std::string>();
  if (!j.at("termination").is_null()) {
    r.termination = sim::termination_from_string(j.at("termination").get<std::string>());
  }
  if (j.contains("rho")) {
    monitor::RhoVector rho;
    for (monitor::Metric m : monitor::kMetrics) {
      rho.rho[static_cast<std::size_t>(m)] = j.at("rho").at(std::string(monitor::to_string(m))).get<double>();
    }
    r.rho = rho;
  }
  r.note = j.value("note", std::string());
  return r;
}

ErrorTable ErrorTable::create(const fs::path& dir, const CampaignRecord& record) {
  fs::create_directories(dir / "traces");
  if (fs::exists(dir / "rows.jsonl") && fs::file_size(dir / "rows.jsonl") > 0) {
    throw ConfigError(fmt::format("{} already holds a campaign; use --resume or another directory", dir.string()));
  }
  ErrorTable t;
  t.dir_ = dir;
  t.record_ = record;
  t.save_record();
  write_file_durably(dir / "rows.jsonl", "");
  return t;
}

ErrorTable ErrorTable::open(const fs::path& dir) {
  ErrorTable t;
  t.dir_ = dir;
  const fs::path header = dir / "campaign.json";
  if (!fs::exists(header)) throw ConfigError(fmt::format("{} is not a campaign directory", dir.string()));
  try {
    t.record_ = record_from_json(json::parse(read_file(header)));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed campaign.json: {}", e.what()));
  }

  const fs::path rows_path = dir / "rows.jsonl";
  const std::string text = fs::exists(rows_path) ? read_file(rows_path) : std::string();
  std::size_t good_end = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final line
    const std::string line = text.substr(pos, nl - pos);
    ErrorTableRow row;
    try {
      row = row_from_json(json::parse(line));
    } catch (const std::exception&) {
      if (text.find('\n', nl + 1) == std::string::npos) break;  // damaged last line
      throw ConfigError(fmt::format("{}: row {} is corrupt", rows_path.string(), t.rows_.size()));
    }
    if (row.row != t.rows_.size()) {
      throw IndexGap(fmt::format("{}: expected row {}, found {}", rows_path.string(), t.rows_.size(), row.row));
    }
    t.rows_.push_back(std::move(row));
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end != text.size()) {
    // Recover from a crash mid-append by dropping the partial line.
    if (::truncate(rows_path.c_str(), static_cast<off_t>(good_end)) != 0) {
      throw StorageFull(fmt::format("cannot truncate {}", rows_path.string()));
    }
  }
  return t;
}

const ErrorTableRow& ErrorTable::row(std::size_t i) const {
  if (i >= rows_.size()) throw RowNotFound(fmt::format("row {} not found ({} rows)", i, rows_.size()));
  return rows_[i];
}

void ErrorTable::append(const ErrorTableRow& row) {
  if (row.row != rows_.size()) {
    throw IndexGap(fmt::format("cannot append row {} to a table of {} rows", row.row, rows_.size()));
  }
  if (row.feasible != row.rho.has_value()) throw std::invalid_argument("rho must be present exactly for feasible rows");
  const fs::path path = dir_ / "rows.jsonl";
  const std::string line = row_to_json(row).dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageFull(fmt::format("cannot open {}: {}", path.string(), std::strerror(errno)));
  try {
    write_all(fd, line, path);
    if (::fsync(fd) != 0) throw StorageFull(fmt::format("cannot sync {}", path.string()));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  rows_.push_back(row);
}

void ErrorTable::save_record() const { write_file_durably(dir_ / "campaign.json", record_to_json(record_).dump(2) + "\n"); }

std::string ErrorTable::trace_ref(std::size_t row) { return fmt::format("traces/{}.jsonl", row); }

fs::path ErrorTable::trace_path(std::size_t row) const { return dir_ / trace_ref(row); }

std::string ReportStats::epsilon_label() const { return epsilon ? fmt::format("{:.3f}", *epsilon) : "--"; }

ReportStats summarize(const ErrorTable& table, const SummaryOptions& opts) {
  const CampaignRecord& rec = table.record();
  ReportStats st;
  st.scenario = rec.scenario_name;
  st.sampler = rec.sampler;
  st.total = table.size();
  std::vector<coverage::Point> points;
  for (const auto& row : table.rows()) {
    if (!row.feasible) {
      ++st.infeasible;
      continue;
    }
    for (monitor::Metric m : monitor::kMetrics) {
      if (row.violated(m)) ++st.violations[static_cast<std::size_t>(m)];
    }
    if (!row.point.unit.empty()) points.push_back(row.point.unit);
  }
  if (!opts.coverage || rec.space.continuous.empty() || points.empty()) return st;

  coverage::CoverageQuery q;
  q.tolerance = opts.tolerance;
  if (opts.raw_units) {
    for (const auto& d : rec.space.continuous) q.extents.push_back(d.hi - d.lo);
    for (auto& p : points) {
      for (std::size_t k = 0; k < p.size(); ++k) p[k] *= q.extents[k];
    }
  }
  q.points = std::move(points);
  for (int attempt = 0; attempt < 40; ++attempt) {
    try {
      st.epsilon = coverage::epsilon_coverage(q).epsilon;
      st.tolerance = q.tolerance;
      break;
    } catch (const MeshTooFine&) {
      q.tolerance *= 2.0;
    }
  }
  return st;
}

void export_scatter(const ErrorTable& table, const std::vector<std::string>& dims, std::ostream& out) {
  const FeatureSpace& space = table.record().space;
  struct Column {
    std::string name;
    bool continuous;
    std::size_t index;
  };
  std::vector<Column> cols;
  auto find = [&](const std::string& name) -> Column {
    for (std::size_t i = 0; i < space.continuous.size(); ++i) {
      if (space.continuous[i].name == name) return {name, true, i};
    }
    for (std::size_t i = 0; i < space.discrete.size(); ++i) {
      if (space.discrete[i].name == name) return {name, false, i};
    }
    throw UnknownDimension(fmt::format("no dimension named '{}'", name));
  };
  if (dims.empty()) {
    for (const auto& d : space.continuous) cols.push_back(find(d.name));
  } else {
    for (const auto& d : dims) cols.push_back(find(d));
  }

  std::vector<std::string> header;
  for (const auto& c : cols) header.push_back(csv_field(c.name));
  for (monitor::Metric m : monitor::kMetrics) header.emplace_back(monitor::to_string(m));
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : table.rows()) {
    if (!row.feasible) continue;
    std::vector<std::string> fields;
    for (const auto& c : cols) {
      if (c.continuous) fields.push_back(fmt::format("{}", row.point.continuous.at(c.index)));
      else fields.push_back(csv_field(row.labels.at(c.index)));
    }
    for (monitor::Metric m : monitor::kMetrics) fields.push_back(row.violated(m) ? "1" : "0");
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << "\n";
  }
}

std::string sampler_label(sampling::SamplerKind kind) {
  switch (kind) {
    case sampling::SamplerKind::Halton: return "Halton";
    case sampling::SamplerKind::Mab: return "MAB";
    case sampling::SamplerKind::Random: return "Random";
  }
  return "?";
}

std::string render_report(const std::vector<ReportStats>& stats) {
  std::string out = "| Scenario | Sampler | Total Samples | Progress | Distance | TTC | Lane | ε |\n";
  out += "|---|---|---|---|---|---|---|---|\n";
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReportStats*>> groups;
  for (const auto& s : stats) {
    if (!groups.count(s.scenario)) order.push_back(s.scenario);
    groups[s.scenario].push_back(&s);
  }
  std::size_t infeasible = 0;
  for (const auto& name : order) {
    bool first = true;
    for (const ReportStats* s : groups[name]) {
      out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} |\n", first ? name : "", sampler_label(s->sampler),
                         s->total, s->violations[0], s->violations[1], s->violations[2], s->violations[3],
                         s->epsilon_label());
      infeasible += s->infeasible;
      first = false;
    }
  }
  out += fmt::format(
      "\nTotal Samples includes infeasible samples ({} in this report); violation counts cover feasible samples only.\n",
      infeasible);
  return out;
}

std::string sha256_file(const fs::path& path) {
  const std::string data = read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace scenfuzz::table

#include "v2xtwin/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "v2xtwin/config_text.hpp"
#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

constexpr double kMaxSpeed = 100.0;  // m/s sanity bound

struct Row {
  double t;
  VehicleId id;
  Vec3 position;
  std::optional<Vec3> velocity;
  std::optional<double> heading;
  std::size_t row;
};

}  // namespace

double coherence_time(double speed, double fc) {
  if (!(speed > 0.0)) return std::numeric_limits<double>::infinity();
  return 0.423 * (kSpeedOfLight / fc) / speed;
}

double movement_threshold(const VehicleState& state, const GatingConfig& cfg) {
  const double speed = state.speed();
  const double tau = cfg.coherence_time_override.value_or(coherence_time(speed, cfg.fc));
  // speed 0 with an infinite coherence time contributes nothing
  const double doppler_term = speed > 0.0 ? speed * tau : 0.0;
  return std::max(cfg.delta_d0, doppler_term);
}

bool gate_update(const std::optional<Vec3>& last_synced_pos, const VehicleState& state,
                 const GatingConfig& cfg) {
  if (!last_synced_pos) return true;
  return distance(state.position, *last_synced_pos) > movement_threshold(state, cfg);
}

double angle_difference(double a, double b) {
  double d = std::remainder(a - b, 2.0 * kPi);
  if (d <= -kPi) d += 2.0 * kPi;
  return d;
}

TraceStore TraceStore::from_samples(std::map<VehicleId, std::vector<VehicleState>> samples) {
  TraceStore store;
  store.series_ = std::move(samples);
  return store;
}

std::vector<VehicleId> TraceStore::vehicles() const {
  std::vector<VehicleId> out;
  for (const auto& [id, _] : series_) out.push_back(id);
  return out;
}

bool TraceStore::is_active(VehicleId id, double t) const {
  const auto it = series_.find(id);
  if (it == series_.end() || it->second.empty()) return false;
  return t >= it->second.front().t && t <= it->second.back().t;
}

std::vector<VehicleId> TraceStore::active_at(double t) const {
  std::vector<VehicleId> out;
  for (const auto& [id, s] : series_) {
    if (!s.empty() && t >= s.front().t && t <= s.back().t) out.push_back(id);
  }
  return out;
}

std::optional<VehicleState> TraceStore::state_at(VehicleId id, double t) const {
  const auto it = series_.find(id);
  if (it == series_.end() || it->second.empty()) return std::nullopt;
  const auto& s = it->second;
  if (t < s.front().t || t > s.back().t) return std::nullopt;
  // last sample with time <= t
  auto upper = std::upper_bound(s.begin(), s.end(), t,
                                [](double value, const VehicleState& v) { return value < v.t; });
  const auto& a = *std::prev(upper);
  if (a.t == t || upper == s.end()) return a;
  const auto& b = *upper;
  const double w = (t - a.t) / (b.t - a.t);
  VehicleState out = a;
  out.t = t;
  out.position = a.position + (b.position - a.position) * w;
  out.velocity = a.velocity + (b.velocity - a.velocity) * w;
  out.heading = a.heading + angle_difference(b.heading, a.heading) * w;
  return out;
}

double TraceStore::start_time() const {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& [_, s] : series_) {
    if (!s.empty()) t = std::min(t, s.front().t);
  }
  return t;
}

double TraceStore::end_time() const {
  double t = -std::numeric_limits<double>::infinity();
  for (const auto& [_, s] : series_) {
    if (!s.empty()) t = std::max(t, s.back().t);
  }
  return t;
}

TraceStore parse_trace(std::string_view csv_text) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto names = split(line, ',');
    for (std::size_t i = 0; i < names.size(); ++i) column[names[i]] = i;
    break;
  }
  for (const char* required : {"t", "vehicle_id", "x", "y", "z"}) {
    if (!column.contains(required)) {
      throw ParseError(std::string("trace header lacks column '") + required + "'", line_no);
    }
  }
  const bool has_velocity = column.contains("vx") && column.contains("vy") && column.contains("vz");
  const bool has_heading = column.contains("heading");

  std::map<VehicleId, std::vector<Row>> rows;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    ++data_row;
    const auto cells = split(line, ',');
    if (cells.size() < column.size()) throw ParseError("too few columns", line_no);
    auto cell = [&](const char* name) -> const std::string& { return cells[column.at(name)]; };

    Row r;
    r.row = data_row;
    r.t = parse_number(cell("t"), line_no);
    const double id = parse_number(cell("vehicle_id"), line_no);
    if (id < 0 || id != std::floor(id) || id > 4294967295.0) {
      throw ParseError("vehicle_id must be a non-negative integer", line_no);
    }
    r.id = VehicleId{static_cast<std::uint32_t>(id)};
    r.position = {parse_number(cell("x"), line_no), parse_number(cell("y"), line_no),
                  parse_number(cell("z"), line_no)};
    if (has_velocity && !cell("vx").empty() && !cell("vy").empty() && !cell("vz").empty()) {
      r.velocity = Vec3{parse_number(cell("vx"), line_no), parse_number(cell("vy"), line_no),
                        parse_number(cell("vz"), line_no)};
    }
    if (has_heading && !cell("heading").empty()) r.heading = parse_number(cell("heading"), line_no);
    if (!std::isfinite(r.t) || !r.position.finite()) throw ParseError("non-finite value", line_no);

    auto& series = rows[r.id];
    if (!series.empty() && r.t < series.back().t) throw NonMonotonicTime(r.id.value, r.row);
    series.push_back(r);
  }

  std::map<VehicleId, std::vector<VehicleState>> samples;
  for (auto& [id, series] : rows) {
    auto& out = samples[id];
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& r = series[i];
      VehicleState s;
      s.vehicle_id = id;
      s.t = r.t;
      s.position = r.position;
      if (r.velocity) {
        s.velocity = *r.velocity;
      } else {
        // forward difference to the next distinct timestamp, backward at the end
        std::size_t j = i + 1;
        while (j < series.size() && series[j].t == r.t) ++j;
        if (j < series.size()) {
          s.velocity = (series[j].position - r.position) / (series[j].t - r.t);
        } else {
          std::size_t k = i;
          while (k > 0 && series[k - 1].t == r.t) --k;
          if (k > 0) s.velocity = (r.position - series[k - 1].position) / (r.t - series[k - 1].t);
        }
      }
      if (s.velocity.norm() >= kMaxSpeed) {
        throw ParseError("vehicle " + id.str() + " exceeds the speed sanity bound at row " +
                         std::to_string(r.row));
      }
      if (r.heading) {
        s.heading = *r.heading;
      } else if (std::hypot(s.velocity.x, s.velocity.y) > 1e-9) {
        s.heading = std::atan2(s.velocity.y, s.velocity.x);
      } else {
        s.heading = out.empty() ? 0.0 : out.back().heading;
      }
      out.push_back(s);
    }
  }
  return TraceStore::from_samples(std::move(samples));
}

TraceStore ingest_trace(const std::filesystem::path& trace_file) {
  std::ifstream in(trace_file);
  if (!in) throw ParseError("cannot open trace '" + trace_file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

std::string write_trace(const TraceStore& trace) {
  struct Line {
    double t;
    std::uint32_t id;
    const VehicleState* s;
  };
  std::vector<Line> lines;
  for (const auto& [id, series] : trace.series()) {
    for (const auto& s : series) lines.push_back({s.t, id.value, &s});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.t != b.t ? a.t < b.t : a.id < b.id;
  });
  std::ostringstream out;
  out << "t,vehicle_id,x,y,z,vx,vy,vz,heading\n";
  for (const auto& l : lines) {
    const auto& s = *l.s;
    out << format_double(s.t) << ',' << l.id << ',' << format_double(s.position.x) << ','
        << format_double(s.position.y) << ',' << format_double(s.position.z) << ','
        << format_double(s.velocity.x) << ',' << format_double(s.velocity.y) << ','
        << format_double(s.velocity.z) << ',' << format_double(s.heading) << '\n';
  }
  return out.str();
}

}  // namespace v2xtwin

#include "minicar/export.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "minicar/config_io.hpp"

namespace minicar {

namespace {

// Quotes a CSV field when it holds a separator, a quote or a line break.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string record_csv(const RunRecord& record) {
  std::string out = "tick,t,id,lane,s,x,y,theta,v,psi,lc_progress,accel_cmd,stopped\n";
  out.reserve(out.size() + record.rows.size() * 96);
  char buf[256];
  for (const auto& r : record.rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.4f,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                  r.tick, r.t, r.id, r.lane, r.s, r.x, r.y, r.theta, r.v, r.psi, r.lc_progress,
                  r.accel_cmd, r.stopped ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string spacetime_csv(const RunRecord& record, const Track& track, long stride) {
  if (stride < 1) stride = 1;
  std::string out = "t,id,lane,position,v\n";
  char buf[128];
  for (const auto& r : record.rows) {
    if (r.tick % stride != 0) continue;
    const double position = r.lane == 0 ? r.s : track.map_proportional(r.s, r.lane, 0);
    std::snprintf(buf, sizeof(buf), "%.4f,%d,%d,%.6f,%.6f\n", r.t, r.id, r.lane, position, r.v);
    out += buf;
  }
  return out;
}

std::string events_csv(const RunRecord& record) {
  std::string out = "tick,t,type,vehicle,other,lane,detail\n";
  char buf[128];
  for (const auto& e : record.events) {
    std::snprintf(buf, sizeof(buf), "%ld,%.4f,", e.tick, e.t);
    out += buf;
    out += csv_field(e.type);
    std::snprintf(buf, sizeof(buf), ",%d,%d,%d,", e.vehicle, e.other, e.lane);
    out += buf;
    out += csv_field(e.detail);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json summary_json(const RunRecord& record, const RunSummary& summary) {
  using nlohmann::ordered_json;
  const auto& tp = summary.throughput;
  const auto& m = record.config.metrics;
  ordered_json j;
  j["name"] = record.config.name;
  j["seed"] = record.config.seed;
  j["ticks"] = record.ticks;
  j["duration"] = static_cast<double>(record.ticks) * record.config.dt;
  j["halted"] = record.halted;
  j["throughput"] = {{"mean", tp.mean},
                     {"std", tp.std},
                     {"formatted", format_throughput(tp.mean, tp.std)},
                     {"window", tp.window},
                     {"warmup", m.warmup},
                     {"stride", m.stride},
                     {"windows", tp.samples.size()},
                     {"checkpoint_s", tp.checkpoint_s}};
  j["queue"] = {{"max_queue", summary.queue.max_queue},
                {"max_queue_time", summary.queue.max_queue_time},
                {"stationary_vehicle_seconds", summary.queue.stationary_vehicle_seconds},
                {"waiting_speed", m.waiting_speed}};
  const auto& lc = summary.lane_changes;
  j["lane_changes"] = {{"started", lc.started},
                       {"completed", lc.completed},
                       {"abandoned", lc.abandoned},
                       {"denied", lc.denied},
                       {"intents", lc.intents}};
  j["collisions"] = summary.collisions;
  j["config"] = config_to_json(record.config);
  return j;
}

std::string run_report(const RunRecord& record, const RunSummary& summary) {
  std::ostringstream os;
  const auto& lc = summary.lane_changes;
  char buf[160];
  os << "scenario      " << record.config.name << "\n";
  os << "seed          " << record.config.seed << "\n";
  std::snprintf(buf, sizeof(buf), "simulated     %.2f s (%ld ticks)%s\n",
                static_cast<double>(record.ticks) * record.config.dt, record.ticks,
                record.halted ? ", halted on collision" : "");
  os << buf;
  os << "throughput    " << format_throughput(summary.throughput.mean, summary.throughput.std)
     << " cars/s over " << summary.throughput.samples.size() << " windows\n";
  std::snprintf(buf, sizeof(buf), "max queue     %d waiting vehicles at t=%.2f s\n",
                summary.queue.max_queue, summary.queue.max_queue_time);
  os << buf;
  std::snprintf(buf, sizeof(buf), "stationary    %.2f vehicle-seconds\n",
                summary.queue.stationary_vehicle_seconds);
  os << buf;
  os << "lane changes  " << lc.started << " started, " << lc.completed << " completed, "
     << lc.abandoned << " abandoned, " << lc.denied << " denied\n";
  os << "collisions    " << summary.collisions << "\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ExportError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw ExportError("failed writing " + path.string());
}

std::vector<std::filesystem::path> export_run(const RunRecord& record, const Track& track,
                                              const RunSummary& summary,
                                              const std::filesystem::path& dir,
                                              const ExportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& text) {
    const auto path = dir / name;
    write_text_file(path, text);
    written.push_back(path);
  };
  if (options.write_record) put("record.csv", record_csv(record));
  put("spacetime.csv", spacetime_csv(record, track, options.spacetime_stride));
  put("events.csv", events_csv(record));
  put("summary.json", summary_json(record, summary).dump(2) + "\n");
  put("report.txt", run_report(record, summary));
  return written;
}

}  // namespace minicar

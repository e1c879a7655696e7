#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "minicar/engine.hpp"
#include "minicar/metrics.hpp"

namespace minicar {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Column layouts. Every numeric field is written with a fixed number of
// decimals so identical runs produce identical bytes.
//
//   record.csv     tick,t,id,lane,s,x,y,theta,v,psi,lc_progress,accel_cmd,stopped
//   spacetime.csv  t,id,lane,position,v
//   events.csv     tick,t,type,vehicle,other,lane,detail
std::string record_csv(const RunRecord& record);

/// Space-time dataset for plotting. `position` is the vehicle's arc length
/// carried onto lane 0 by length fraction, so both lanes share one axis.
/// Only every `stride`-th tick is written.
std::string spacetime_csv(const RunRecord& record, const Track& track, long stride = 1);

std::string events_csv(const RunRecord& record);

/// Summary with the metrics and the fully resolved configuration.
nlohmann::ordered_json summary_json(const RunRecord& record, const RunSummary& summary);

/// Short human-readable report.
std::string run_report(const RunRecord& record, const RunSummary& summary);

struct ExportOptions {
  long spacetime_stride{10};
  bool write_record{true};
};

/// Writes record.csv, spacetime.csv, events.csv, summary.json and report.txt
/// into `dir`, creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> export_run(const RunRecord& record, const Track& track,
                                              const RunSummary& summary,
                                              const std::filesystem::path& dir,
                                              const ExportOptions& options = {});

/// Writes `text` to `path`, raising ExportError naming the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace minicar

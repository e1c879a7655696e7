// minicar: command-line front end for the traffic simulator.
//
//   minicar run <config> [--seed N] [--set key=value]... [--out DIR] [--commands LOG]
//   minicar sweep <config> <config>... [--seeds N] [--jobs N] [--out DIR]
//   minicar track-export [config] [--resolution M] [--out FILE]
//   minicar serve <config> [--bind ADDR] [--port P] [--out DIR]
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or config error, 3 a run was
// halted by a collision.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "minicar/config_io.hpp"
#include "minicar/engine.hpp"
#include "minicar/export.hpp"
#include "minicar/metrics.hpp"
#include "minicar/protocol.hpp"
#include "minicar/session.hpp"
#include "minicar/track.hpp"

#ifdef MINICAR_WITH_GATEWAY
#include "minicar/gateway.hpp"
#endif

namespace fs = std::filesystem;
using namespace minicar;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCollision = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_root() {
  if (const char* env = std::getenv("MINICAR_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "minicar_out";
}

std::vector<Override> parse_overrides(const std::vector<std::string>& sets,
                                      std::optional<std::uint64_t> seed) {
  std::vector<Override> out;
  for (const auto& s : sets) out.push_back(parse_override(s));
  if (seed) out.emplace_back("seed", std::to_string(*seed));
  return out;
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string out;
  std::string commands;
  long spacetime_stride{10};
  bool no_record{false};
  bool quiet{false};
};

RunRecord run_with_commands(const ScenarioConfig& cfg, const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw UsageError("command log not found: " + log_path);
  const auto log = parse_command_log(in);
  std::size_t unused = 0;
  RunRecord record;
  try {
    record = replay_scenario(cfg, log, &unused);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (unused > 0) {
    std::cerr << "warning: " << unused << " logged commands lie beyond the end of the run\n";
  }
  return record;
}

int cmd_run(const RunOptions& o) {
  const ScenarioConfig cfg = load_config(o.config, parse_overrides(o.sets, o.seed));
  const RunRecord record = o.commands.empty() ? run_scenario(cfg) : run_with_commands(cfg, o.commands);
  const Track track = build_track(cfg.track);
  const RunSummary summary = summarize(record, track);
  const fs::path dir = o.out.empty() ? default_out_root() / cfg.name : fs::path(o.out);
  ExportOptions eo;
  eo.spacetime_stride = o.spacetime_stride;
  eo.write_record = !o.no_record;
  export_run(record, track, summary, dir, eo);
  if (!o.quiet) {
    std::cout << run_report(record, summary) << "artifacts     " << dir.string() << "\n";
  }
  return record.halted ? kExitCollision : kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  int seeds{1};
  int jobs{0};
  std::string out;
};

struct SweepRun {
  std::size_t scenario{0};
  std::string name;
  std::string policy;
  std::string preset;
  std::uint64_t seed{0};
  RunSummary summary;
  bool halted{false};
};

std::string policy_name(Policy p) { return p == Policy::kCooperative ? "cooperative" : "egocentric"; }

struct SchemeStats {
  double mean{0.0};          // mean over seeds of the per-run window means
  double seed_std{0.0};      // population std of the per-run means
  double window_std{0.0};    // mean over seeds of the per-run window std
  int runs{0};
};

SchemeStats scheme_stats(const std::vector<const SweepRun*>& runs) {
  SchemeStats s;
  s.runs = static_cast<int>(runs.size());
  if (runs.empty()) return s;
  for (const auto* r : runs) {
    s.mean += r->summary.throughput.mean;
    s.window_std += r->summary.throughput.std;
  }
  s.mean /= s.runs;
  s.window_std /= s.runs;
  for (const auto* r : runs) {
    const double d = r->summary.throughput.mean - s.mean;
    s.seed_std += d * d;
  }
  s.seed_std = std::sqrt(s.seed_std / s.runs);
  return s;
}

std::string sweep_table(const std::vector<SweepRun>& runs) {
  std::vector<std::string> presets;
  std::map<std::pair<std::string, std::string>, std::vector<const SweepRun*>> groups;
  for (const auto& r : runs) {
    if (std::find(presets.begin(), presets.end(), r.preset) == presets.end()) presets.push_back(r.preset);
    groups[{r.preset, r.policy}].push_back(&r);
  }
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %-22s %-22s %s\n", "preset", "egocentric", "cooperative",
                "improvement");
  out += buf;
  for (const auto& preset : presets) {
    const auto ego = scheme_stats(groups[{preset, "egocentric"}]);
    const auto coop = scheme_stats(groups[{preset, "cooperative"}]);
    auto cell = [](const SchemeStats& s) {
      return s.runs == 0 ? std::string("-") : format_throughput(s.mean, s.window_std);
    };
    std::string improvement = "-";
    if (ego.runs > 0 && coop.runs > 0 && ego.mean > 0.0) {
      std::snprintf(buf, sizeof(buf), "%+.1f%%", 100.0 * (coop.mean - ego.mean) / ego.mean);
      improvement = buf;
    }
    std::snprintf(buf, sizeof(buf), "%-12s %-22s %-22s %s\n", preset.c_str(), cell(ego).c_str(),
                  cell(coop).c_str(), improvement.c_str());
    out += buf;
  }
  out += "\ncells: mean over seeds ± mean window std (cars/s)\n";
  for (const auto& preset : presets) {
    for (const char* policy : {"egocentric", "cooperative"}) {
      const auto s = scheme_stats(groups[{preset, policy}]);
      if (s.runs == 0) continue;
      std::snprintf(buf, sizeof(buf), "  %-10s %-11s runs %d  std across seeds %.4f  window std %.4f\n",
                    preset.c_str(), policy, s.runs, s.seed_std, s.window_std);
      out += buf;
    }
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRun>& runs) {
  std::string out =
      "scenario,policy,preset,seed,throughput_mean,throughput_std,max_queue,stationary_vehicle_seconds,"
      "lane_changes,collisions,halted\n";
  char buf[256];
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%llu,%.6f,%.6f,%d,%.4f,%d,%d,%d\n", r.name.c_str(),
                  r.policy.c_str(), r.preset.c_str(), static_cast<unsigned long long>(r.seed),
                  r.summary.throughput.mean, r.summary.throughput.std, r.summary.queue.max_queue,
                  r.summary.queue.stationary_vehicle_seconds, r.summary.lane_changes.started,
                  r.summary.collisions, r.halted ? 1 : 0);
    out += buf;
  }
  return out;
}

int cmd_sweep(const SweepOptions& o) {
  if (o.configs.size() < 2) throw UsageError("sweep needs at least two scenarios (nothing to compare)");
  if (o.seeds < 1) throw UsageError("--seeds must be at least 1");

  std::vector<ScenarioConfig> configs;
  for (const auto& path : o.configs) configs.push_back(load_config(path, parse_overrides(o.sets, o.seed)));

  struct Job {
    std::size_t scenario;
    ScenarioConfig config;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (int k = 0; k < o.seeds; ++k) {
      ScenarioConfig c = configs[i];
      c.seed = configs[i].seed + static_cast<std::uint64_t>(k);
      jobs.push_back({i, c});
    }
  }

  const fs::path dir = o.out.empty() ? default_out_root() / "sweep" : fs::path(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create " + dir.string() + ": " + ec.message());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t width = o.jobs > 0 ? static_cast<std::size_t>(o.jobs) : hw;
  std::vector<SweepRun> done;
  std::string failure;
  for (std::size_t start = 0; start < jobs.size() && failure.empty(); start += width) {
    const std::size_t end = std::min(jobs.size(), start + width);
    std::vector<std::future<SweepRun>> batch;
    for (std::size_t j = start; j < end; ++j) {
      batch.push_back(std::async(std::launch::async, [job = jobs[j]] {
        const RunRecord rec = run_scenario(job.config);
        const Track track = build_track(job.config.track);
        SweepRun r;
        r.scenario = job.scenario;
        r.name = job.config.name;
        r.policy = policy_name(job.config.fleet.policy);
        r.preset = job.config.fleet.preset;
        r.seed = job.config.seed;
        r.summary = summarize(rec, track);
        r.halted = rec.halted;
        return r;
      }));
    }
    for (auto& f : batch) {
      try {
        done.push_back(f.get());
      } catch (const std::exception& e) {
        if (failure.empty()) failure = e.what();
      }
    }
  }

  const std::string table = sweep_table(done);
  write_text_file(dir / "sweep.csv", sweep_csv(done));
  write_text_file(dir / "table.txt", table);
  std::cout << table;
  if (!failure.empty()) {
    std::cerr << "error: sweep aborted: " << failure << " (partial results in " << dir.string() << ")\n";
    return kExitRuntime;
  }
  const bool any_halt = std::any_of(done.begin(), done.end(), [](const SweepRun& r) { return r.halted; });
  return any_halt ? kExitCollision : kExitOk;
}

// ---------------------------------------------------------------- track-export

int cmd_track_export(const std::string& config, const std::vector<std::string>& sets, double resolution,
                     const std::string& out) {
  const ScenarioConfig cfg =
      config.empty() ? resolve_config(nlohmann::ordered_json::object(), parse_overrides(sets, std::nullopt))
                     : load_config(config, parse_overrides(sets, std::nullopt));
  if (!(resolution > 0.0)) throw UsageError("--resolution must be positive");
  const Track track = build_track(cfg.track);
  const std::string csv = track_samples_csv(sample_track(track, resolution));
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_text_file(out, csv);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- serve

std::atomic<int> g_signal{0};

extern "C" void on_signal(int sig) { g_signal = sig; }

struct ServeOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string bind{"127.0.0.1"};
  int port{8765};
  double time_scale{1.0};
  std::string out;
};

int cmd_serve(const ServeOptions& o) {
#ifdef MINICAR_WITH_GATEWAY
  const ScenarioConfig cfg = load_config(o.config, parse_overrides(o.sets, o.seed));
  if (cfg.fleet.gamified.empty()) {
    throw ConfigError("fleet.gamified must name at least one played vehicle to serve");
  }
  if (o.port < 0 || o.port > 65535) throw UsageError("--port must be within 0..65535");
  if (!(o.time_scale > 0.0)) throw UsageError("--time-scale must be positive");

  GameSession session(cfg);
  GatewayOptions go;
  go.address = o.bind;
  go.port = static_cast<unsigned short>(o.port);
  Gateway gateway(session, go);
  gateway.start();
  std::cout << "serving " << cfg.name << " on ws://" << o.bind << ":" << gateway.port() << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::atomic<bool> done{false};
  std::jthread runner([&](std::stop_token st) {
    session.run(st, o.time_scale);
    done = true;
  });
  while (!done && g_signal == 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  runner.request_stop();
  runner.join();
  gateway.stop();

  Simulation& sim = session.simulation();
  const fs::path dir = o.out.empty() ? default_out_root() / cfg.name : fs::path(o.out);
  RunRecord record = sim.take_record();
  // Export the run as played so far; replaying commands.jsonl against the
  // same config with `run --set duration=<played>` reproduces it.
  record.config.duration = static_cast<double>(record.ticks) * record.config.dt;
  const Track track = build_track(cfg.track);
  const RunSummary summary = summarize(record, track);
  export_run(record, track, summary, dir);
  write_text_file(dir / "commands.jsonl", command_log_to_jsonl(sim.command_log()));
  std::cout << run_report(record, summary) << "artifacts     " << dir.string() << "\n";
  return record.halted ? kExitCollision : kExitOk;
#else
  (void)o;
  throw UsageError("this build has no gateway; reconfigure with -DMINICAR_BUILD_GATEWAY=ON");
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-lane miniature traffic simulator"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and export its record and summary");
  run_cmd->add_option("config", run.config, "Scenario file (or an exported summary.json)")->required();
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--set", run.sets, "Override a dotted key, e.g. --set idm.v0=0.5");
  run_cmd->add_option("--out", run.out, "Output directory (default $MINICAR_OUT_DIR/<name>)");
  run_cmd->add_option("--commands", run.commands, "Replay a command log (JSON lines)");
  run_cmd->add_option("--spacetime-stride", run.spacetime_stride, "Ticks between space-time samples")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--no-record", run.no_record, "Skip the per-tick record.csv");
  run_cmd->add_flag("-q,--quiet", run.quiet, "Do not print the report");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Compare schemes over several seeds");
  sweep_cmd->add_option("configs", sweep.configs, "Scenario files")->required();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds per scenario, counting up from each seed");
  sweep_cmd->add_option("--seed", sweep.seed, "First seed for every scenario");
  sweep_cmd->add_option("--set", sweep.sets, "Override a dotted key in every scenario");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Parallel runs (default: hardware threads)");
  sweep_cmd->add_option("--out", sweep.out, "Output directory (default $MINICAR_OUT_DIR/sweep)");

  std::string track_config, track_out;
  std::vector<std::string> track_sets;
  double resolution = 0.05;
  auto* track_cmd = app.add_subcommand("track-export", "Write sampled lane centerlines as CSV");
  track_cmd->add_option("config", track_config, "Scenario file (default track when omitted)");
  track_cmd->add_option("--set", track_sets, "Override a dotted key");
  track_cmd->add_option("--resolution", resolution, "Sample spacing in meters");
  track_cmd->add_option("--out", track_out, "Output file (default stdout)");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run a played scenario live over WebSocket");
  serve_cmd->add_option("config", serve.config, "Scenario file with fleet.gamified set")->required();
  serve_cmd->add_option("--seed", serve.seed, "Override the scenario seed");
  serve_cmd->add_option("--set", serve.sets, "Override a dotted key");
  serve_cmd->add_option("--bind", serve.bind, "Bind address");
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks a free one)");
  serve_cmd->add_option("--time-scale", serve.time_scale, "Simulated seconds per wall second");
  serve_cmd->add_option("--out", serve.out, "Output directory (default $MINICAR_OUT_DIR/<name>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*track_cmd) return cmd_track_export(track_config, track_sets, resolution, track_out);
    if (*serve_cmd) return cmd_serve(serve);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProtocolError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

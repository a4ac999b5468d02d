#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <thread>

#include "sono/biosignal.hpp"
#include "sono/csv.hpp"
#include "sono/error.hpp"
#include "sono/net/live_session.hpp"
#include "sono/net/tcp_server.hpp"
#include "sono/net/ws_bridge.hpp"
#include "sono/registration.hpp"
#include "sono/scenario.hpp"
#include "sono/stats.hpp"
#include "sono/svg.hpp"

namespace fs = std::filesystem;
using namespace sono;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("sono");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SONO_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

// Scenario problems are usage errors; everything after parsing is domain.
Scenario scenario_or_usage(const std::string& path) {
  try {
    return load_scenario(path);
  } catch (const Error& e) {
    std::cerr << "error: scenario " << path << ": " << e.what() << '\n';
    std::exit(kExitUsage);
  }
}

std::string force_chart(const std::vector<SessionEvent>& log) {
  svg::Series force{"contact force [N]", {}, {}};
  svg::Series depth{"penetration [mm]", {}, {}};
  for (const auto& e : log) {
    if (const auto* r = std::get_if<RobotStateEvent>(&e.payload)) {
      force.x.push_back(e.timestamp);
      force.y.push_back(r->contact_force);
      depth.x.push_back(e.timestamp);
      depth.y.push_back(r->penetration * 1000.0);
    }
  }
  return svg::line_chart({force, depth}, {"Probe contact", "session time [s]", "N / mm"});
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  Scenario sc = scenario_or_usage(scenario_path);
  if (seed) sc.config.seed = *seed;
  const SessionLog log = run_session(sc.config, sc.utterances, sc.run);
  const auto intervals = phase_intervals(log.events);
  const fs::path out(out_dir);
  fs::create_directories(out);
  csv::write_text(out / "session_log.jsonl", session_log_jsonl(log.events));
  csv::write_text(out / "simulation.csv", simulation_csv(log.events));
  csv::write_text(out / "phase_intervals.csv", phase_intervals_csv(intervals));
  csv::write_text(out / "force.svg", force_chart(log.events));
  const auto& s = log.final_state;
  std::cout << "session " << sc.name << ": " << to_string(s.phase) << " (" << s.end_cause << ") at t="
            << csv::format_double(s.time) << " s, " << log.events.size() << " events -> " << out.string()
            << '\n';
  return 0;
}

int cmd_serve(const std::string& bind, const std::string& ws_bind, const std::string& scenario_path,
              const std::string& out_dir, bool realtime_latency) {
  SessionConfig config = SessionConfig::defaults();
  net::LiveOptions options;
  options.realtime_latency = realtime_latency;
  if (!scenario_path.empty()) {
    const Scenario sc = scenario_or_usage(scenario_path);
    config = sc.config;
    options.setup_s = sc.run.setup_s;
    if (!sc.utterances.empty()) spdlog::info("serve ignores scripted utterances; speech arrives live");
  }

  boost::asio::io_context io;
  net::LiveSession session(config, options);
  auto forward = [&session](const protocol::Message& m) {
    if (auto input = net::to_session_input(m)) session.submit(std::move(*input));
  };
  net::TcpServer tcp(io, net::parse_endpoint(bind), forward);
  net::WsBridge ws(io, net::parse_endpoint(ws_bind), forward);
  session.add_sink([&tcp](const protocol::Message& m) { tcp.broadcast(m); });
  session.add_sink([&ws](const protocol::Message& m) { ws.broadcast(m); });
  spdlog::info("protocol on port {}, console bridge on port {}", tcp.port(), ws.port());
  std::cout << "listening tcp=" << tcp.port() << " ws=" << ws.port() << std::endl;

  auto guard = boost::asio::make_work_guard(io);
  std::thread io_thread([&io] { io.run(); });
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  session.start();
  while (!g_interrupted && !session.finished()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  session.stop();
  tcp.close();
  ws.close();
  guard.reset();
  io.run_for(std::chrono::milliseconds(200));
  io.stop();
  io_thread.join();

  const auto events = session.events();
  const fs::path out(out_dir);
  fs::create_directories(out);
  csv::write_text(out / "session_log.jsonl", session_log_jsonl(events));
  csv::write_text(out / "phase_intervals.csv", phase_intervals_csv(phase_intervals(events)));
  std::cout << "session ended in " << to_string(session.phase()) << "; log written to "
            << out.string() << '\n';
  return 0;
}

int cmd_register(const std::string& points, const std::string& out, const std::string& label,
                 const std::string& created_at) {
  const auto pairs = load_point_capture(points);
  const auto result = kabsch_solve(pairs);
  AnchorRecord anchor;
  anchor.transform = result.transform;
  anchor.label = label;
  anchor.created_at = created_at.empty()
                          ? std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now())
                          : parse_rfc3339(created_at);
  anchor.source_points = pairs;
  save_anchor(anchor, out);
  double worst = 0.0;
  for (const double r : result.per_point_residuals) worst = std::max(worst, r);
  std::cout << "registered " << pairs.size() << " points: rms residual "
            << csv::format_double(result.rms_residual) << " m, max " << csv::format_double(worst)
            << " m -> " << out << '\n';
  return 0;
}

int cmd_hrv(const std::string& ecg_path, const std::string& rr_path, const std::string& intervals_path,
            const std::string& out) {
  const auto intervals = parse_phase_intervals_csv(csv::read_text(intervals_path));
  std::vector<HrvReport> reports;
  if (!ecg_path.empty()) {
    reports = segment_hrv(load_ecg_csv(ecg_path), intervals);
  } else {
    const RrSeries rr = rr_from_intervals(parse_rr_csv(csv::read_text(rr_path)));
    reports = segment_hrv_beats(rr.beat_times, intervals);
  }
  csv::write_text(out, hrv_report_csv(reports));
  std::cout << "hrv:";
  for (const auto& r : reports) {
    std::cout << ' ' << to_string(r.phase) << '=' << (r.rmssd_ms ? csv::format_double(*r.rmssd_ms) : "n/a")
              << "ms(" << r.n_beats << " beats)";
  }
  std::cout << " -> " << out << '\n';
  return 0;
}

int cmd_stats(const std::string& data, const std::string& design, const std::string& out) {
  const auto rows = stats::run_design(stats::parse_long_csv(csv::read_text(data)),
                                      stats::design_from_string(design));
  csv::write_text(out, stats::results_csv(rows));
  const auto& first = rows.front();
  std::cout << rows.size() << " result rows; " << first.method << ": statistic "
            << csv::format_double(first.statistic) << ", p " << csv::format_double(first.p) << " -> "
            << out << '\n';
  return 0;
}

int cmd_synth_ecg(const std::string& intervals_path, const std::string& out, std::uint64_t seed,
                  double fs, double snr_db) {
  const auto intervals = parse_phase_intervals_csv(csv::read_text(intervals_path));
  if (intervals.empty()) fail(ErrorCode::InvalidArgument, "no phase intervals");
  std::vector<RhythmSegment> rhythm;
  for (const auto& iv : intervals) {
    RhythmSegment seg{iv.t_end, 800.0, 20.0};
    if (iv.phase == ProcedurePhase::Resting) seg = {iv.t_end, 820.0, 45.0};
    if (iv.phase == ProcedurePhase::Execution) seg = {iv.t_end, 760.0, 15.0};
    rhythm.push_back(seg);
  }
  const double t0 = intervals.front().t_start;
  const auto beats = synthetic_beat_times(t0, rhythm, seed);
  SyntheticEcgOptions o;
  o.sample_rate = fs;
  o.start_time = t0;
  o.duration_s = intervals.back().t_end - t0;
  o.snr_db = snr_db;
  o.seed = seed;
  csv::write_text(out, ecg_csv(synthesize_ecg(beats, o)));
  std::cout << "synthetic ECG: " << beats.size() << " beats over " << csv::format_double(o.duration_s)
            << " s -> " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Robotic ultrasound session simulator and analysis tools"};
  app.require_subcommand(1);

  std::string scenario, out_dir = "out";
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Run a scripted session and write its logs");
  simulate->add_option("--scenario", scenario, "Scenario JSON file")->required();
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_option("--seed", seed, "Override the scenario seed");

  std::string bind = "127.0.0.1:7400", ws_bind = "127.0.0.1:7401", serve_scenario, serve_out = "serve_out";
  auto* serve = app.add_subcommand("serve", "Run a live session behind the protocol and console bridge");
  serve->add_option("--bind", bind, "Protocol endpoint host:port (port 0 picks a free port)");
  serve->add_option("--ws-bind", ws_bind, "Console bridge endpoint host:port");
  serve->add_option("--scenario", serve_scenario, "Scenario JSON file for the session config");
  serve->add_option("--out", serve_out, "Directory for the session log written on shutdown");
  bool realtime_latency = false;
  serve->add_flag("--realtime-latency", realtime_latency,
                  "Delay agent replies by their sampled speech pipeline latency");

  std::string points, anchor_out = "anchor.json", label = "anchor", created_at;
  auto* reg = app.add_subcommand("register", "Solve a virtual-to-real anchor from point pairs");
  reg->add_option("--points", points, "Point capture CSV (vx,vy,vz,rx,ry,rz)")->required();
  reg->add_option("--out", anchor_out, "Anchor JSON output");
  reg->add_option("--label", label, "Anchor label");
  reg->add_option("--created-at", created_at, "RFC 3339 timestamp (default: now)");

  std::string ecg, rr, intervals, hrv_out = "hrv_report.csv";
  auto* hrv = app.add_subcommand("hrv", "Per-phase RMSSD from an ECG or RR series");
  auto* ecg_opt = hrv->add_option("--ecg", ecg, "ECG CSV (t_s,mv with # fs= comment)");
  auto* rr_opt = hrv->add_option("--rr", rr, "RR CSV (rr_ms)");
  ecg_opt->excludes(rr_opt);
  hrv->add_option("--intervals", intervals, "Phase intervals CSV")->required();
  hrv->add_option("--out", hrv_out, "HRV report CSV");

  std::string data, design, stats_out = "results.csv";
  auto* st = app.add_subcommand("stats", "Nonparametric test battery over long-format data");
  st->add_option("--data", data, "CSV subject,condition,phase,measure,value")->required();
  st->add_option("--design", design, "wilcoxon | kruskal | friedman | shapiro")
      ->required()
      ->check(CLI::IsMember({"wilcoxon", "kruskal", "friedman", "shapiro"}));
  st->add_option("--out", stats_out, "Results CSV");

  std::string synth_intervals, synth_out = "ecg.csv";
  std::uint64_t synth_seed = 0;
  double synth_fs = 250.0, synth_snr = 30.0;
  auto* synth = app.add_subcommand("synth-ecg", "Synthetic ECG following a phase timeline");
  synth->add_option("--intervals", synth_intervals, "Phase intervals CSV")->required();
  synth->add_option("--out", synth_out, "ECG CSV output");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--fs", synth_fs, "Sample rate [Hz]");
  synth->add_option("--snr-db", synth_snr, "Signal-to-noise ratio [dB]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(scenario, out_dir, seed);
    if (*serve) return cmd_serve(bind, ws_bind, serve_scenario, serve_out, realtime_latency);
    if (*reg) return cmd_register(points, anchor_out, label, created_at);
    if (*hrv) {
      if (ecg.empty() && rr.empty()) {
        std::cerr << "error: hrv needs --ecg or --rr\n";
        return kExitUsage;
      }
      return cmd_hrv(ecg, rr, intervals, hrv_out);
    }
    if (*st) return cmd_stats(data, design, stats_out);
    if (*synth) return cmd_synth_ecg(synth_intervals, synth_out, synth_seed, synth_fs, synth_snr);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

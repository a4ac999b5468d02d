#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sono/orchestrator.hpp"
#include "sono/phase.hpp"

namespace sono {

struct EcgRecord {
  double sample_rate = 250.0;  // Hz, in [100, 2000]
  std::vector<double> samples;  // mV
  double start_time = 0.0;      // s

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  double time_of(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
  // Throws InvalidArgument on a bad sample rate or non-finite samples.
  void validate() const;
};

inline constexpr double kMinRecordSeconds = 10.0;
inline constexpr double kMinRrMs = 300.0;
inline constexpr double kMaxRrMs = 2000.0;

// Moving-average threshold detector (0.75 s window, threshold 2% above the
// average plus the record's mean absolute deviation from it, 0.25 s
// refractory). Returns beat times in seconds.
// Throws SignalTooShort below kMinRecordSeconds and FlatSignal for a
// constant record.
std::vector<double> detect_r_peaks(const EcgRecord& ecg);

struct RrSeries {
  std::vector<double> rr_ms;          // kept intervals, each in [300, 2000] ms
  std::vector<double> rr_end_times;   // beat time closing each kept interval
  std::vector<std::size_t> breaks;    // i in breaks: a discarded interval precedes rr_ms[i]
  std::vector<double> beat_times;     // every beat, s

  bool break_before(std::size_t i) const;
};

// Throws TooFewBeats below 3 beats, InvalidArgument for non-increasing times.
RrSeries rr_from_peaks(std::span<const double> beat_times);
// Raw RR input (`rr_ms` CSV): same cleaning, beats reconstructed from t = 0.
RrSeries rr_from_intervals(std::span<const double> rr_ms);

// Successive differences never cross a break. Throws TooFewIntervals when no
// unbroken pair exists.
double rmssd(const RrSeries& rr);
double rmssd(std::span<const double> rr_ms);

struct HrvReport {
  ProcedurePhase phase = ProcedurePhase::Resting;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t n_beats = 0;
  std::optional<double> rmssd_ms;  // empty when the phase has too few beats
  std::string flag;                // "insufficient_beats" when rmssd is empty
};

// One report per Resting/Execution interval. Beats count toward an interval
// when t_start <= t < t_end.
std::vector<HrvReport> segment_hrv(const EcgRecord& ecg, const std::vector<PhaseInterval>& intervals);
std::vector<HrvReport> segment_hrv_beats(std::span<const double> beat_times,
                                         const std::vector<PhaseInterval>& intervals);

std::string hrv_report_csv(const std::vector<HrvReport>& reports);

// --- synthetic data ---------------------------------------------------------

struct RhythmSegment {
  double t_end = 0.0;        // s; the rhythm applies until here
  double mean_rr_ms = 800.0;
  double sd_rr_ms = 0.0;     // beat-to-beat jitter
};

// Beat times from t_start, with RR drawn per segment and clamped to
// [400, 1500] ms.
std::vector<double> synthetic_beat_times(double t_start, std::span<const RhythmSegment> rhythm,
                                         std::uint64_t seed);

struct SyntheticEcgOptions {
  double sample_rate = 250.0;
  double start_time = 0.0;
  double duration_s = 30.0;
  double amplitude_mv = 1.0;
  double width_s = 0.01;  // Gaussian sigma of each R wave
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

// Gaussian R waves centered on the given beat times plus white noise at the
// requested signal-to-noise ratio.
EcgRecord synthesize_ecg(std::span<const double> beat_times, const SyntheticEcgOptions& options);

// --- files ------------------------------------------------------------------

// `# fs=<Hz>` comment, then `t_s,mv`. Without the comment the rate comes from
// the first two timestamps.
EcgRecord parse_ecg_csv(std::string_view text);
EcgRecord load_ecg_csv(const std::filesystem::path& path);
std::string ecg_csv(const EcgRecord& ecg);

std::vector<double> parse_rr_csv(std::string_view text);

}  // namespace sono

#include "sono/biosignal.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sono/csv.hpp"
#include "sono/error.hpp"

namespace sono {

namespace {

constexpr double kMovingAverageS = 0.75;
constexpr double kSmoothingS = 0.04;
constexpr double kThresholdLift = 0.02;
constexpr double kRefractoryS = 0.25;

// Centered moving average with a window of `half` samples on each side,
// truncated at the record edges.
std::vector<double> centered_mean(const std::vector<double>& x, std::size_t half) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

bool in_rr_bounds(double ms) { return ms >= kMinRrMs && ms <= kMaxRrMs; }

RrSeries clean(std::vector<double> beat_times) {
  RrSeries s;
  bool pending_break = false;
  for (std::size_t i = 1; i < beat_times.size(); ++i) {
    const double ms = (beat_times[i] - beat_times[i - 1]) * 1000.0;
    if (!in_rr_bounds(ms)) {
      pending_break = true;
      continue;
    }
    if (pending_break && !s.rr_ms.empty()) s.breaks.push_back(s.rr_ms.size());
    pending_break = false;
    s.rr_ms.push_back(ms);
    s.rr_end_times.push_back(beat_times[i]);
  }
  s.beat_times = std::move(beat_times);
  return s;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (std::uint64_t{words[0]} << 32) | words[1];
  return out;
}

}  // namespace

void EcgRecord::validate() const {
  if (!(sample_rate >= 100.0 && sample_rate <= 2000.0)) {
    fail(ErrorCode::InvalidArgument, "sample rate must lie in [100, 2000] Hz");
  }
  if (!std::all_of(samples.begin(), samples.end(), [](double v) { return std::isfinite(v); })) {
    fail(ErrorCode::InvalidArgument, "ECG samples must be finite");
  }
}

std::vector<double> detect_r_peaks(const EcgRecord& ecg) {
  ecg.validate();
  if (ecg.duration() < kMinRecordSeconds) {
    fail(ErrorCode::SignalTooShort, "ECG record shorter than 10 s");
  }
  const auto [lo, hi] = std::minmax_element(ecg.samples.begin(), ecg.samples.end());
  if (*lo == *hi) fail(ErrorCode::FlatSignal, "ECG record has zero variance");

  const double fs = ecg.sample_rate;
  const auto smooth_half = static_cast<std::size_t>(std::lround(kSmoothingS * fs / 2.0));
  const auto ma_half = static_cast<std::size_t>(std::lround(kMovingAverageS * fs / 2.0));
  const std::vector<double> x = centered_mean(ecg.samples, smooth_half);
  const std::vector<double> ma = centered_mean(x, ma_half);
  // Between widely spaced beats the window average falls to the noise level;
  // the floor keeps noise alone from crossing.
  double spread = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) spread += std::abs(x[k] - ma[k]);
  const double floor = spread / static_cast<double>(x.size());
  std::vector<double> threshold(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) threshold[k] = ma[k] + kThresholdLift * std::abs(ma[k]) + floor;

  struct Peak {
    std::size_t index;
    double value;
  };
  std::vector<Peak> peaks;
  const auto refractory = static_cast<std::size_t>(std::lround(kRefractoryS * fs));
  std::size_t i = 0;
  const std::size_t n = x.size();
  while (i < n) {
    if (x[i] <= threshold[i]) {
      ++i;
      continue;
    }
    Peak best{i, x[i]};
    while (i < n && x[i] > threshold[i]) {
      if (x[i] > best.value) best = {i, x[i]};
      ++i;
    }
    if (!peaks.empty() && best.index - peaks.back().index < refractory) {
      if (best.value > peaks.back().value) peaks.back() = best;
    } else {
      peaks.push_back(best);
    }
  }

  std::vector<double> times;
  times.reserve(peaks.size());
  for (const auto& p : peaks) times.push_back(ecg.time_of(p.index));
  return times;
}

bool RrSeries::break_before(std::size_t i) const {
  return std::binary_search(breaks.begin(), breaks.end(), i);
}

RrSeries rr_from_peaks(std::span<const double> beat_times) {
  if (beat_times.size() < 3) fail(ErrorCode::TooFewBeats, "need at least 3 beats");
  for (std::size_t i = 1; i < beat_times.size(); ++i) {
    if (!(beat_times[i] > beat_times[i - 1])) {
      fail(ErrorCode::InvalidArgument, "beat times must be strictly increasing");
    }
  }
  return clean({beat_times.begin(), beat_times.end()});
}

RrSeries rr_from_intervals(std::span<const double> rr_ms) {
  std::vector<double> beats{0.0};
  for (const double ms : rr_ms) {
    if (!(ms > 0.0) || !std::isfinite(ms)) {
      fail(ErrorCode::InvalidArgument, "RR intervals must be positive");
    }
    beats.push_back(beats.back() + ms / 1000.0);
  }
  return rr_from_peaks(beats);
}

double rmssd(const RrSeries& rr) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i < rr.rr_ms.size(); ++i) {
    if (rr.break_before(i)) continue;
    const double d = rr.rr_ms[i] - rr.rr_ms[i - 1];
    sum += d * d;
    ++count;
  }
  if (count == 0) fail(ErrorCode::TooFewIntervals, "need two consecutive RR intervals");
  return std::sqrt(sum / static_cast<double>(count));
}

double rmssd(std::span<const double> rr_ms) {
  RrSeries s;
  s.rr_ms.assign(rr_ms.begin(), rr_ms.end());
  return rmssd(s);
}

std::vector<HrvReport> segment_hrv_beats(std::span<const double> beat_times,
                                         const std::vector<PhaseInterval>& intervals) {
  std::vector<HrvReport> out;
  for (const auto& iv : intervals) {
    if (iv.phase != ProcedurePhase::Resting && iv.phase != ProcedurePhase::Execution) continue;
    std::vector<double> inside;
    for (const double t : beat_times) {
      if (t >= iv.t_start && t < iv.t_end) inside.push_back(t);
    }
    HrvReport r;
    r.phase = iv.phase;
    r.t_start = iv.t_start;
    r.t_end = iv.t_end;
    r.n_beats = inside.size();
    try {
      r.rmssd_ms = rmssd(rr_from_peaks(inside));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewBeats && e.code() != ErrorCode::TooFewIntervals) throw;
      r.flag = "insufficient_beats";
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<HrvReport> segment_hrv(const EcgRecord& ecg, const std::vector<PhaseInterval>& intervals) {
  const auto beats = detect_r_peaks(ecg);
  return segment_hrv_beats(beats, intervals);
}

std::string hrv_report_csv(const std::vector<HrvReport>& reports) {
  std::ostringstream out;
  out << "phase,t_start,t_end,n_beats,rmssd_ms\n";
  for (const auto& r : reports) {
    out << to_string(r.phase) << ',' << csv::format_double(r.t_start) << ','
        << csv::format_double(r.t_end) << ',' << r.n_beats << ','
        << (r.rmssd_ms ? csv::format_double(*r.rmssd_ms) : std::string("nan")) << '\n';
  }
  return out.str();
}

std::vector<double> synthetic_beat_times(double t_start, std::span<const RhythmSegment> rhythm,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x52));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> beats{t_start};
  double t = t_start;
  for (const auto& seg : rhythm) {
    while (true) {
      const double ms = std::clamp(seg.mean_rr_ms + seg.sd_rr_ms * unit(rng), 400.0, 1500.0);
      const double next = t + ms / 1000.0;
      if (next >= seg.t_end) break;
      beats.push_back(next);
      t = next;
    }
  }
  return beats;
}

EcgRecord synthesize_ecg(std::span<const double> beat_times, const SyntheticEcgOptions& o) {
  EcgRecord ecg;
  ecg.sample_rate = o.sample_rate;
  ecg.start_time = o.start_time;
  const auto n = static_cast<std::size_t>(std::llround(o.duration_s * o.sample_rate));
  ecg.samples.assign(n, 0.0);
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(6.0 * o.width_s * o.sample_rate));
  for (const double bt : beat_times) {
    const auto center = static_cast<std::ptrdiff_t>(std::llround((bt - o.start_time) * o.sample_rate));
    for (std::ptrdiff_t k = center - reach; k <= center + reach; ++k) {
      if (k < 0 || k >= static_cast<std::ptrdiff_t>(n)) continue;
      const double dt = ecg.time_of(static_cast<std::size_t>(k)) - bt;
      ecg.samples[static_cast<std::size_t>(k)] +=
          o.amplitude_mv * std::exp(-0.5 * dt * dt / (o.width_s * o.width_s));
    }
  }
  if (std::isfinite(o.snr_db) && n > 0) {
    double power = 0.0;
    for (const double v : ecg.samples) power += v * v;
    power /= static_cast<double>(n);
    const double sd = std::sqrt(power / std::pow(10.0, o.snr_db / 10.0));
    std::mt19937_64 rng(mix_seed(o.seed, 0x4e));
    std::normal_distribution<double> noise(0.0, sd);
    for (double& v : ecg.samples) v += noise(rng);
  }
  return ecg;
}

EcgRecord parse_ecg_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const auto c_t = table.column("t_s");
  const auto c_mv = table.column("mv");
  EcgRecord ecg;
  std::optional<double> fs;
  for (const auto& comment : table.comments) {
    const auto pos = comment.find("fs=");
    if (pos != std::string::npos) fs = csv::to_double(comment.substr(pos + 3), 0);
  }
  std::vector<double> times;
  for (const auto& row : table.rows) {
    times.push_back(csv::to_double(row.fields[c_t], row.line));
    ecg.samples.push_back(csv::to_double(row.fields[c_mv], row.line));
  }
  if (times.size() < 2) fail(ErrorCode::SignalTooShort, "ECG file has fewer than 2 samples");
  ecg.start_time = times.front();
  ecg.sample_rate = fs ? *fs : 1.0 / (times[1] - times[0]);
  ecg.validate();
  return ecg;
}

EcgRecord load_ecg_csv(const std::filesystem::path& path) { return parse_ecg_csv(csv::read_text(path)); }

std::string ecg_csv(const EcgRecord& ecg) {
  std::ostringstream out;
  out << "# fs=" << csv::format_double(ecg.sample_rate) << "\nt_s,mv\n";
  for (std::size_t i = 0; i < ecg.samples.size(); ++i) {
    out << csv::format_double(ecg.time_of(i)) << ',' << csv::format_double(ecg.samples[i]) << '\n';
  }
  return out.str();
}

std::vector<double> parse_rr_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const auto c = table.column("rr_ms");
  std::vector<double> out;
  for (const auto& row : table.rows) out.push_back(csv::to_double(row.fields[c], row.line));
  return out;
}

}  // namespace sono

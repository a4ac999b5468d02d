#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sono::stats {

struct TestResult {
  std::string method;
  double statistic = 0.0;  // W, H or chi-square
  double p_value = 1.0;
  std::optional<double> df;
  std::optional<double> effect_size;
  std::optional<double> z;  // Wilcoxon normal score, reported next to W
  bool degenerate = false;  // all observations tied; statistic 0, p 1
};

using GroupedSample = std::vector<std::vector<double>>;  // k groups
using BlockedSample = std::vector<std::vector<double>>;  // rows = subjects, cols = conditions

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> ranks_with_ties(std::span<const double> values);

double normal_sf(double z);
double normal_cdf(double z);
// Regularized upper incomplete gamma Q(df/2, x/2). Throws InvalidArgument
// for x < 0 or df < 1.
double chi2_sf(double x, double df);

// Zero differences dropped, W = min(W+, W-). Exact two-sided p for up to
// kExactWilcoxonMax nonzero differences, otherwise normal approximation with
// continuity and tie correction. Throws AllZeroDifferences.
inline constexpr std::size_t kExactWilcoxonMax = 20;
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);
TestResult wilcoxon_signed_rank(std::span<const double> differences);

// Exact P(T <= t) for the signed-rank sum T over 2^m equally likely sign
// assignments of the given (possibly tied) ranks.
double signed_rank_cdf(std::span<const double> ranks, double t);

// Throws DegenerateGroups for fewer than 2 groups, an empty group or
// n < k + 1.
TestResult kruskal_wallis(const GroupedSample& groups);

// Throws TooFewRows below 2 rows, InvalidArgument below 3 conditions or for
// ragged rows.
TestResult friedman(const BlockedSample& rows);

struct PairwiseResult {
  std::size_t first = 0;
  std::size_t second = 0;
  double z = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
};

double sidak_adjust(double p_raw, std::size_t comparisons);

std::vector<PairwiseResult> dunn_sidak(const GroupedSample& groups);
std::vector<PairwiseResult> dunn_sidak_blocked(const BlockedSample& rows);

// Royston's approximation. Throws NOutOfRange outside 3 <= n <= 5000 and
// ZeroVariance for constant input.
TestResult shapiro_wilk(std::span<const double> values);

// Paired: mean(diff) / sd(diff). Two-group: (mean(b) - mean(a)) over the
// pooled sd. Throws ZeroVariance, InvalidArgument below 2 values.
double cohens_d(std::span<const double> differences);
double cohens_d(std::span<const double> a, std::span<const double> b);

// --- questionnaires ---------------------------------------------------------

enum class Instrument { Sus, NasaTlx, HriTrust };

std::string_view to_string(Instrument i);
Instrument instrument_from_string(std::string_view name);

// SUS -> [0, 1]; NASA-TLX raw mean / 100; HRI trust mean on the 1..5 scale.
// Throws WrongItemCount or ItemOutOfRange.
double score_questionnaire(Instrument instrument, std::span<const double> items);

// --- long-format data -------------------------------------------------------

struct Observation {
  std::string subject;
  std::string condition;
  std::string phase;
  std::string measure;
  double value = 0.0;
};

// CSV `subject,condition,phase,measure,value`.
std::vector<Observation> parse_long_csv(std::string_view text);

enum class Design { Wilcoxon, Kruskal, Friedman, Shapiro };

std::string_view to_string(Design d);
Design design_from_string(std::string_view name);

struct ResultRow {
  std::string method;
  double statistic = 0.0;
  std::optional<double> df;
  double p = 1.0;
  std::optional<double> effect_size;
};

// Runs the battery for one design over every measure:
//   wilcoxon: for each condition, the two phases paired by subject;
//   kruskal:  for each phase, conditions as independent groups, then Dunn-Sidak;
//   friedman: for each phase, subjects x conditions, then Dunn-Sidak;
//   shapiro:  for each condition and phase.
std::vector<ResultRow> run_design(const std::vector<Observation>& data, Design design);

// `method,statistic,df,p,effect_size`; absent values are empty fields.
std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace sono::stats

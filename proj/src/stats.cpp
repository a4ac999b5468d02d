#include "sono/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sono/error.hpp"

namespace sono::stats {

namespace {

// Sum of t^3 - t over tie groups.
double tie_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    const auto t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (const double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> unit;
  return boost::math::quantile(unit, p);
}

std::vector<double> within_row_ranks(const std::vector<double>& row) { return ranks_with_ties(row); }

void check_blocked(const BlockedSample& rows) {
  if (rows.size() < 2) fail(ErrorCode::TooFewRows, "need at least 2 subjects");
  const std::size_t k = rows.front().size();
  if (k < 3) fail(ErrorCode::InvalidArgument, "need at least 3 conditions");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != k) {
      fail(ErrorCode::DimensionMismatch, "row " + std::to_string(i) + " has a missing cell");
    }
  }
}

void check_grouped(const GroupedSample& groups) {
  if (groups.size() < 2) fail(ErrorCode::DegenerateGroups, "need at least 2 groups");
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.empty()) fail(ErrorCode::DegenerateGroups, "every group must be non-empty");
    n += g.size();
  }
  if (n < groups.size() + 1) fail(ErrorCode::DegenerateGroups, "need n >= k + 1 observations");
}

}  // namespace

std::vector<double> ranks_with_ties(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double chi2_sf(double x, double df) {
  if (!(x >= 0.0) || !(df >= 1.0)) fail(ErrorCode::InvalidArgument, "chi2_sf needs x >= 0, df >= 1");
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double signed_rank_cdf(std::span<const double> ranks, double t) {
  // Doubling turns average ranks (halves) into integers.
  std::vector<std::size_t> doubled;
  std::size_t total = 0;
  for (const double r : ranks) {
    doubled.push_back(static_cast<std::size_t>(std::llround(2.0 * r)));
    total += doubled.back();
  }
  std::vector<double> count(total + 1, 0.0);
  count[0] = 1.0;
  std::size_t reach = 0;
  for (const std::size_t r : doubled) {
    for (std::size_t s = reach + 1; s-- > 0;) count[s + r] += count[s];
    reach += r;
  }
  const double limit = 2.0 * t + 1e-9;
  double below = 0.0;
  for (std::size_t s = 0; s <= total && static_cast<double>(s) <= limit; ++s) below += count[s];
  return below / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

TestResult wilcoxon_signed_rank(std::span<const double> differences) {
  std::vector<double> d;
  for (const double v : differences) {
    if (v != 0.0) d.push_back(v);
  }
  if (d.empty()) fail(ErrorCode::AllZeroDifferences, "all paired differences are zero");

  std::vector<double> magnitude(d.size());
  std::transform(d.begin(), d.end(), magnitude.begin(), [](double v) { return std::abs(v); });
  const auto ranks = ranks_with_ties(magnitude);
  double w_plus = 0.0;
  double w_minus = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? w_plus : w_minus) += ranks[i];

  const auto m = static_cast<double>(d.size());
  const double w = std::min(w_plus, w_minus);
  const double mu = m * (m + 1.0) / 4.0;
  const double var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_sum(magnitude) / 48.0;

  TestResult r;
  r.statistic = w;
  r.z = var > 0.0 ? std::min(0.0, (w - mu + 0.5) / std::sqrt(var)) : 0.0;
  if (d.size() <= kExactWilcoxonMax) {
    r.method = "wilcoxon_exact";
    r.p_value = clamp01(2.0 * signed_rank_cdf(ranks, w));
  } else {
    r.method = "wilcoxon_normal";
    r.p_value = clamp01(2.0 * normal_cdf(*r.z));
  }
  if (differences.size() >= 2) {
    try {
      r.effect_size = cohens_d(differences);
    } catch (const Error&) {
    }
  }
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (a.empty()) fail(ErrorCode::InvalidArgument, "paired sample is empty");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return wilcoxon_signed_rank(d);
}

TestResult kruskal_wallis(const GroupedSample& groups) {
  check_grouped(groups);
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const auto ranks = ranks_with_ties(pooled);
  const auto n = static_cast<double>(pooled.size());
  const auto k = static_cast<double>(groups.size());

  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rsum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rsum += ranks[offset + i];
    sum += rsum * rsum / static_cast<double>(g.size());
    offset += g.size();
  }
  TestResult r;
  r.method = "kruskal_wallis";
  r.df = k - 1.0;
  const double correction = 1.0 - tie_sum(pooled) / (n * n * n - n);
  if (correction <= 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.degenerate = true;
  } else {
    const double h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    r.statistic = std::max(0.0, h);
    r.p_value = chi2_sf(r.statistic, *r.df);
  }
  r.effect_size = (r.statistic - k + 1.0) / (n - k);
  return r;
}

TestResult friedman(const BlockedSample& rows) {
  check_blocked(rows);
  const auto n = static_cast<double>(rows.size());
  const std::size_t k = rows.front().size();
  const auto kd = static_cast<double>(k);
  std::vector<double> col(k, 0.0);
  double ties = 0.0;
  for (const auto& row : rows) {
    const auto ranks = within_row_ranks(row);
    for (std::size_t j = 0; j < k; ++j) col[j] += ranks[j];
    ties += tie_sum(row);
  }
  double sum_sq = 0.0;
  for (const double c : col) sum_sq += c * c;

  TestResult r;
  r.method = "friedman";
  r.df = kd - 1.0;
  const double correction = 1.0 - ties / (n * (kd * kd * kd - kd));
  if (correction <= 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.degenerate = true;
    return r;
  }
  const double chi2 = (12.0 / (n * kd * (kd + 1.0)) * sum_sq - 3.0 * n * (kd + 1.0)) / correction;
  r.statistic = std::max(0.0, chi2);
  r.p_value = chi2_sf(r.statistic, *r.df);
  return r;
}

double sidak_adjust(double p_raw, std::size_t comparisons) {
  const double p = clamp01(p_raw);
  if (p == 0.0 || p == 1.0 || comparisons <= 1) return p;
  // 1 - (1 - p)^m, computed without cancellation for small p.
  return clamp01(-std::expm1(static_cast<double>(comparisons) * std::log1p(-p)));
}

std::vector<PairwiseResult> dunn_sidak(const GroupedSample& groups) {
  check_grouped(groups);
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const auto ranks = ranks_with_ties(pooled);
  const auto n = static_cast<double>(pooled.size());
  const std::size_t k = groups.size();
  std::vector<double> mean_rank(k, 0.0);
  std::size_t offset = 0;
  for (std::size_t g = 0; g < k; ++g) {
    for (std::size_t i = 0; i < groups[g].size(); ++i) mean_rank[g] += ranks[offset + i];
    mean_rank[g] /= static_cast<double>(groups[g].size());
    offset += groups[g].size();
  }
  const double spread = n * (n + 1.0) / 12.0 - tie_sum(pooled) / (12.0 * (n - 1.0));
  const std::size_t m = k * (k - 1) / 2;
  std::vector<PairwiseResult> out;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairwiseResult p{a, b};
      const double se = std::sqrt(spread * (1.0 / static_cast<double>(groups[a].size()) +
                                            1.0 / static_cast<double>(groups[b].size())));
      p.z = se > 0.0 ? (mean_rank[a] - mean_rank[b]) / se : 0.0;
      p.p_raw = se > 0.0 ? clamp01(2.0 * normal_sf(std::abs(p.z))) : 1.0;
      p.p_adjusted = sidak_adjust(p.p_raw, m);
      out.push_back(p);
    }
  }
  return out;
}

std::vector<PairwiseResult> dunn_sidak_blocked(const BlockedSample& rows) {
  check_blocked(rows);
  const auto n = static_cast<double>(rows.size());
  const std::size_t k = rows.front().size();
  const auto kd = static_cast<double>(k);
  std::vector<double> mean_rank(k, 0.0);
  double diff_var = 0.0;  // sum over rows of Var(r_i - r_j)
  for (const auto& row : rows) {
    const auto ranks = within_row_ranks(row);
    for (std::size_t j = 0; j < k; ++j) mean_rank[j] += ranks[j] / n;
    const double row_var = (kd * kd - 1.0) / 12.0 - tie_sum(row) / (12.0 * kd);
    diff_var += 2.0 * row_var * kd / (kd - 1.0);
  }
  const double se = std::sqrt(diff_var) / n;
  const std::size_t m = k * (k - 1) / 2;
  std::vector<PairwiseResult> out;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairwiseResult p{a, b};
      p.z = se > 0.0 ? (mean_rank[a] - mean_rank[b]) / se : 0.0;
      p.p_raw = se > 0.0 ? clamp01(2.0 * normal_sf(std::abs(p.z))) : 1.0;
      p.p_adjusted = sidak_adjust(p.p_raw, m);
      out.push_back(p);
    }
  }
  return out;
}

TestResult shapiro_wilk(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3 || n > 5000) fail(ErrorCode::NOutOfRange, "Shapiro-Wilk needs 3 <= n <= 5000");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) fail(ErrorCode::ZeroVariance, "Shapiro-Wilk on constant data");

  const auto nd = static_cast<double>(n);
  std::vector<double> a(n, 0.0);
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[2] = std::sqrt(0.5);
  } else {
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (nd + 0.25));
    }
    double m2 = 0.0;
    for (const double v : m) m2 += v * v;
    const double u = 1.0 / std::sqrt(nd);
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const double an = m[n - 1] / std::sqrt(m2) + poly(c1, u);
    double eps;
    std::size_t fixed;
    if (n > 5) {
      const double an1 = m[n - 2] / std::sqrt(m2) + poly(c2, u);
      eps = (m2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
            (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
      a[n - 2] = an1;
      a[1] = -an1;
      fixed = 2;
    } else {
      eps = (m2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
      fixed = 1;
    }
    a[n - 1] = an;
    a[0] = -an;
    for (std::size_t i = fixed; i < n - fixed; ++i) a[i] = m[i] / std::sqrt(eps);
  }

  const double xm = mean(x);
  double num = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += a[i] * x[i];
    ss += (x[i] - xm) * (x[i] - xm);
  }
  const double w = std::min(1.0, num * num / ss);

  double p;
  if (n == 3) {
    p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75)));
  } else if (n <= 11) {
    const double gamma = 0.459 * nd - 2.273;
    const double mu = 0.5440 - 0.39978 * nd + 0.025054 * nd * nd - 6.714e-4 * nd * nd * nd;
    const double sigma =
        std::exp(1.3822 - 0.77857 * nd + 0.062767 * nd * nd - 0.0020322 * nd * nd * nd);
    const double y = -std::log(gamma - std::log1p(-w));
    p = w >= 1.0 ? 1.0 : normal_sf((y - mu) / sigma);
  } else {
    const double ln = std::log(nd);
    const double mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln + 0.0038915 * ln * ln * ln;
    const double sigma = std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
    p = w >= 1.0 ? 1.0 : normal_sf((std::log1p(-w) - mu) / sigma);
  }
  TestResult r;
  r.method = "shapiro_wilk";
  r.statistic = w;
  r.p_value = clamp01(p);
  return r;
}

double cohens_d(std::span<const double> differences) {
  if (differences.size() < 2) fail(ErrorCode::InvalidArgument, "Cohen's d needs >= 2 values");
  const double var = sample_variance(differences);
  if (!(var > 0.0)) fail(ErrorCode::ZeroVariance, "differences have zero variance");
  return mean(differences) / std::sqrt(var);
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::InvalidArgument, "Cohen's d needs >= 2 values per group");
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  const double pooled =
      ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) fail(ErrorCode::ZeroVariance, "groups have zero pooled variance");
  return (mean(b) - mean(a)) / std::sqrt(pooled);
}

}  // namespace sono::stats

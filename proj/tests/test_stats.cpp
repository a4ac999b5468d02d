#include <doctest.h>

#include <cmath>

#include "sono/error.hpp"
#include "sono/stats.hpp"
#include "support.hpp"

using namespace sono;
using namespace sono::stats;
using sono::testing::Gen;

namespace {

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

// Two-sided exact p by walking all 2^m sign patterns of the nonzero |d| ranks.
double enumeration_p(const std::vector<double>& diffs) {
  std::vector<double> mag;
  for (const double d : diffs)
    if (d != 0.0) mag.push_back(std::abs(d));
  const auto ranks = ranks_with_ties(mag);
  double w_plus = 0.0, total = 0.0;
  std::size_t k = 0;
  for (const double d : diffs) {
    if (d == 0.0) continue;
    if (d > 0) w_plus += ranks[k];
    total += ranks[k];
    ++k;
  }
  const double w = std::min(w_plus, total - w_plus);
  const std::size_t m = mag.size();
  std::size_t hits = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1) s += ranks[i];
    if (s <= w + 1e-9) ++hits;
  }
  return std::min(1.0, 2.0 * static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(m)));
}

// Dunn z scores built from mid-ranks obtained by counting, not sorting.
std::vector<double> dunn_oracle_z(const GroupedSample& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  auto midrank = [&](double v) {
    double below = 0, equal = 0;
    for (const double x : all) {
      below += x < v;
      equal += x == v;
    }
    return below + (equal + 1.0) / 2.0;
  };
  double ties = 0.0;
  for (const double v : all) {
    double t = 0;
    for (const double x : all) t += x == v;
    ties += (t * t * t - t) / t;  // each tie group counted once overall
  }
  std::vector<double> mean_rank;
  for (const auto& g : groups) {
    double s = 0;
    for (const double v : g) s += midrank(v);
    mean_rank.push_back(s / static_cast<double>(g.size()));
  }
  std::vector<double> z;
  for (std::size_t a = 0; a < groups.size(); ++a)
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      const double var = (n * (n + 1) / 12.0 - ties / (12.0 * (n - 1))) *
                         (1.0 / static_cast<double>(groups[a].size()) + 1.0 / static_cast<double>(groups[b].size()));
      z.push_back((mean_rank[a] - mean_rank[b]) / std::sqrt(var));
    }
  return z;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("ranks with ties") {
  CHECK(ranks_with_ties(std::vector<double>{3, 1, 2}) == std::vector<double>{3, 1, 2});
  CHECK(ranks_with_ties(std::vector<double>{1, 1, 2}) == std::vector<double>{1.5, 1.5, 3});
  CHECK(ranks_with_ties(std::vector<double>{}).empty());
}

TEST_CASE("chi-square and normal tails") {
  CHECK(normal_sf(0.0) == 0.5);
  CHECK(close_rel(chi2_sf(26.95, 3), 6.02e-6, 0.02));
  CHECK(close_rel(chi2_sf(16.60, 3), 8.54e-4, 0.02));
  CHECK(std::abs(chi2_sf(3.430, 3) - 0.330) <= 0.005);
  const std::vector<std::tuple<double, double, double>> frozen = {
      {26.95, 3, 6.03117728685448e-06}, {16.60, 3, 8.540366930293645e-4},
      {3.430, 3, 0.32995501075171085},  {42, 3, 4.012126658231684e-09},
      {0.5, 1, 0.47950012218695337},    {10, 7, 0.18857346751344997},
      {55.5, 30, 0.0031147830910325655}, {100, 30, 1.8568023365102314e-09}};
  for (const auto& [x, df, p] : frozen) CHECK(std::abs(chi2_sf(x, df) - p) < 1e-10);
  double prev = 1.0;
  for (double x = 0.0; x <= 100.0; x += 0.25) {
    const double p = chi2_sf(x, 5);
    CHECK(p <= prev);
    prev = p;
  }
  CHECK_THROWS_AS(chi2_sf(-1, 3), Error);
  CHECK_THROWS_AS(chi2_sf(1, 0.5), Error);
}

TEST_CASE("wilcoxon examples") {
  const auto r = wilcoxon_signed_rank(std::vector<double>{1, 2, 3});
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(wilcoxon_signed_rank(std::vector<double>{-1, 1}).p_value == 1.0);
  try {
    wilcoxon_signed_rank(std::vector<double>{0, 0});
    FAIL("all-zero differences accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllZeroDifferences);
  }
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}

TEST_CASE("wilcoxon frozen reference values") {
  const auto exact = wilcoxon_signed_rank(std::vector<double>{1.5, -0.2, 2.3, 0.7, -1.1, 0.9, 1.8, 2.2, -0.4, 1.0, 0.3, 1.6});
  CHECK(exact.method == "wilcoxon_exact");
  CHECK(exact.statistic == 11.0);
  CHECK(std::abs(exact.p_value - 0.02685546875) < 1e-12);

  std::vector<double> lin;
  for (int i = 0; i < 30; ++i) lin.push_back(std::round((-3.0 + 11.0 * i / 29.0) * 10.0) / 10.0);
  const auto approx = wilcoxon_signed_rank(lin);
  CHECK(approx.method == "wilcoxon_normal");
  CHECK(approx.statistic == 64.5);
  CHECK(std::abs(approx.p_value - 0.0009750294846003124) < 1e-10);

  const auto tied = wilcoxon_signed_rank(std::vector<double>{1, 1, 2, 2, 2, 3, -1, 4, 5, -2, 6, 1, 2, 7, 8, 9, -3, 10, 11, 12, 2, 3, 4, -5, 6});
  CHECK(tied.statistic == 38.5);
  CHECK(std::abs(tied.p_value - 0.0008658120036643306) < 1e-10);
}

TEST_CASE("exact wilcoxon equals enumeration") {
  Gen g(101);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> d(static_cast<std::size_t>(g.integer(1, 12)));
    for (auto& v : d) v = g.coin() ? std::round(g.normal(0.5, 2.0)) : g.normal(0.3, 1.0);
    bool any = false;
    for (const double v : d) any |= v != 0.0;
    if (!any) continue;
    CHECK(std::abs(wilcoxon_signed_rank(d).p_value - enumeration_p(d)) < 1e-12);
  }
}

TEST_CASE("kruskal-wallis") {
  const auto a = kruskal_wallis({{1, 2}, {3, 4}, {5, 6}});
  CHECK(std::abs(a.statistic - 4.571428571428569) < 1e-12);
  CHECK(std::abs(a.p_value - 0.10170139230422694) < 1e-10);
  CHECK(*a.df == 2.0);
  const auto b = kruskal_wallis({{1, 2, 2, 3}, {2, 3, 4, 4, 5}, {5, 6, 6}});
  CHECK(std::abs(b.statistic - 8.067655875299765) < 1e-12);
  CHECK(std::abs(b.p_value - 0.017706420985399672) < 1e-10);
  CHECK(*b.effect_size == doctest::Approx((b.statistic - 2.0) / 9.0));
  const auto same = kruskal_wallis({{2, 2}, {2, 2}, {2}});
  CHECK(same.degenerate);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  try {
    kruskal_wallis({{1, 2}, {}});
    FAIL("empty group accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGroups);
  }
  CHECK_THROWS_AS(kruskal_wallis({{1, 2, 3}}), Error);
}

TEST_CASE("kruskal-wallis with two groups tracks the mann-whitney normal approximation") {
  Gen g(102);
  for (int trial = 0; trial < 50; ++trial) {
    const int n1 = g.integer(20, 40), n2 = g.integer(20, 40);
    std::vector<double> x(static_cast<std::size_t>(n1)), y(static_cast<std::size_t>(n2));
    for (auto& v : x) v = g.normal(0.0, 1.0);
    for (auto& v : y) v = g.normal(0.5, 1.0);
    const auto kw = kruskal_wallis({x, y});
    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto r = ranks_with_ties(pooled);
    double r1 = 0;
    for (int i = 0; i < n1; ++i) r1 += r[static_cast<std::size_t>(i)];
    const double u = r1 - n1 * (n1 + 1) / 2.0;
    const double mu = n1 * n2 / 2.0, sd = std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0);
    const double p_mw = 2.0 * normal_sf(std::abs(u - mu) / sd);
    CHECK(close_rel(kw.p_value, p_mw, 0.05));
  }
}

TEST_CASE("friedman") {
  const BlockedSample rows = {{1, 2, 3, 4}, {2, 3, 1, 4}, {3, 3, 2, 1}, {4, 1, 2, 3}, {1, 2, 4, 3}};
  const auto r = friedman(rows);
  CHECK(std::abs(r.statistic - 1.0408163265306083) < 1e-12);
  CHECK(std::abs(r.p_value - 0.7913769444639941) < 1e-10);
  CHECK(*r.df == 3.0);
  const auto maximal = friedman(BlockedSample(14, {1, 2, 3, 4}));
  CHECK(maximal.statistic == doctest::Approx(42.0).epsilon(1e-12));
  CHECK(maximal.p_value < 1e-8);
  const auto flat = friedman(BlockedSample(5, {7, 7, 7}));
  CHECK(flat.statistic == 0.0);
  CHECK(flat.p_value == 1.0);
  try {
    friedman({{1, 2, 3}});
    FAIL("one row accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewRows);
  }
  CHECK_THROWS_AS(friedman({{1, 2, 3}, {1, 2}}), Error);
  CHECK_THROWS_AS(friedman({{1, 2}, {1, 2}}), Error);
}

TEST_CASE("rank tests ignore monotone transforms") {
  Gen g(103);
  auto warp = [](double v) { return std::exp(v) * 3.0 + v * v * v; };
  for (int trial = 0; trial < 100; ++trial) {
    GroupedSample groups(3);
    for (auto& grp : groups) {
      grp.resize(static_cast<std::size_t>(g.integer(3, 8)));
      for (auto& v : grp) v = std::round(g.normal(0, 2) * 2) / 2;
    }
    GroupedSample warped = groups;
    for (auto& grp : warped)
      for (auto& v : grp) v = warp(v);
    const auto a = kruskal_wallis(groups), b = kruskal_wallis(warped);
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
    CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));

    BlockedSample rows(static_cast<std::size_t>(g.integer(2, 10)), std::vector<double>(4));
    for (auto& row : rows)
      for (auto& v : row) v = std::round(g.normal(0, 2));
    BlockedSample wrows = rows;
    for (auto& row : wrows)
      for (auto& v : row) v = warp(v);
    CHECK(friedman(rows).p_value == doctest::Approx(friedman(wrows).p_value).epsilon(1e-12));

  }
}

TEST_CASE("sidak adjustment") {
  CHECK(sidak_adjust(0.01, 6) == doctest::Approx(1.0 - std::pow(0.99, 6)).epsilon(1e-12));
  CHECK(sidak_adjust(0.01, 6) == doctest::Approx(0.0585).epsilon(1e-3));
  CHECK(sidak_adjust(0.0, 6) == 0.0);
  CHECK(sidak_adjust(1.0, 6) == 1.0);
  Gen g(104);
  for (int i = 0; i < 1000; ++i) {
    const double p = g.uniform(0, 1), q = g.uniform(0, 1);
    const auto m = static_cast<std::size_t>(g.integer(1, 20));
    const double a = sidak_adjust(p, m), b = sidak_adjust(q, m);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(a >= p);
    if (p <= q) CHECK(a <= b);
  }
}

TEST_CASE("dunn-sidak against the oracle and frozen values") {
  const GroupedSample g3 = {{1, 2, 2, 3}, {2, 3, 4, 4, 5}, {5, 6, 6}};
  const auto pairs = dunn_sidak(g3);
  REQUIRE(pairs.size() == 3);
  const double z[] = {-1.4572615108864677, -2.8391676122390384, -1.630692390937332};
  const double adj[] = {0.3750705691757771, 0.013508133503280728, 0.2781576858286905};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(pairs[i].z - z[i]) < 1e-12);
    CHECK(std::abs(pairs[i].p_adjusted - adj[i]) < 1e-10);
  }
  Gen g(105);
  for (int trial = 0; trial < 100; ++trial) {
    GroupedSample groups(static_cast<std::size_t>(g.integer(2, 5)));
    for (auto& grp : groups) {
      grp.resize(static_cast<std::size_t>(g.integer(2, 9)));
      for (auto& v : grp) v = std::round(g.normal(0, 3));
    }
    const auto got = dunn_sidak(groups);
    const auto want = dunn_oracle_z(groups);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (std::isfinite(want[i])) CHECK(got[i].z == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("blocked dunn-sidak") {
  const auto pairs = dunn_sidak_blocked(BlockedSample(14, {1, 2, 3, 4}));
  REQUIRE(pairs.size() == 6);
  // Untied rows: SE = sqrt(k(k+1)/(6n)).
  const double se = std::sqrt(4.0 * 5.0 / (6.0 * 14.0));
  CHECK(pairs[0].z == doctest::Approx(-1.0 / se).epsilon(1e-12));
  CHECK(pairs[5].z == doctest::Approx(-1.0 / se).epsilon(1e-12));
  CHECK(pairs[2].z == doctest::Approx(-3.0 / se).epsilon(1e-12));
  for (const auto& p : pairs) CHECK(p.p_adjusted >= p.p_raw);
}

TEST_CASE("shapiro-wilk frozen reference values") {
  const auto a = shapiro_wilk(std::vector<double>{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0, 2.2, 5.1});
  CHECK(std::abs(a.statistic - 0.9525342275448022) < 1e-6);
  CHECK(std::abs(a.p_value - 0.6742780700406323) < 1e-4);
  const auto b = shapiro_wilk(std::vector<double>{148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236});
  CHECK(std::abs(b.statistic - 0.7888146948631716) < 1e-6);
  CHECK(std::abs(b.p_value - 0.006703814061898823) < 1e-4);
  const auto c = shapiro_wilk(std::vector<double>{1, 2, 4});
  CHECK(std::abs(c.statistic - 0.9642857142857142) < 1e-9);
  CHECK(std::abs(c.p_value - 0.6368868450289689) < 1e-6);
  const auto d = shapiro_wilk(std::vector<double>{0.5, 1.2, 1.9, 3.3, 7.8});
  CHECK(std::abs(d.statistic - 0.8492815598363066) < 1e-6);
  CHECK(std::abs(d.p_value - 0.19225829099293074) < 1e-4);
}

TEST_CASE("shapiro-wilk on normal quantiles and skewed data") {
  std::vector<double> q;
  for (int i = 1; i <= 50; ++i) {
    // Inverse normal via bisection on normal_cdf.
    const double target = (i - 0.375) / 50.25;
    double lo = -10, hi = 10;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  const auto normal = shapiro_wilk(q);
  CHECK(normal.statistic > 0.99);
  CHECK(std::abs(normal.statistic - 0.99847) < 1e-4);
  Gen g(106);
  std::vector<double> skew(50);
  for (auto& v : skew) v = std::exp(g.normal(0, 1));
  CHECK(shapiro_wilk(skew).p_value < 0.01);
  try {
    shapiro_wilk(std::vector<double>{1, 2});
    FAIL("n=2 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NOutOfRange);
  }
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{3, 3, 3, 3}), Error);
}

TEST_CASE("cohen's d") {
  try {
    cohens_d(std::vector<double>{0, 0, 0, 0}, std::vector<double>{1, 1, 1, 1});
    FAIL("zero variance accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVariance);
  }
  CHECK(cohens_d(std::vector<double>{0, 1, 2}) == doctest::Approx(1.0).epsilon(1e-15));
  Gen g(107);
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = g.normal(0, 1);
  for (auto& v : b) v = g.normal(1, 1);
  CHECK(std::abs(cohens_d(a, b) - 1.0) < 0.05);
}

TEST_CASE("questionnaires") {
  CHECK(score_questionnaire(Instrument::Sus, std::vector<double>(10, 3)) == 0.5);
  std::vector<double> best = {5, 1, 5, 1, 5, 1, 5, 1, 5, 1};
  CHECK(score_questionnaire(Instrument::Sus, best) == 1.0);
  CHECK(score_questionnaire(Instrument::NasaTlx, std::vector<double>(6, 50)) == 0.5);
  CHECK(score_questionnaire(Instrument::HriTrust, std::vector<double>(14, 5)) == 5.0);
  try {
    score_questionnaire(Instrument::Sus, std::vector<double>(9, 3));
    FAIL("short SUS accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongItemCount);
  }
  try {
    score_questionnaire(Instrument::NasaTlx, std::vector<double>(6, 101));
    FAIL("out-of-range item accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ItemOutOfRange);
  }
  CHECK(instrument_from_string("nasa_tlx") == Instrument::NasaTlx);
}

TEST_CASE("long-format designs") {
  std::string csv = "subject,condition,phase,measure,value\n";
  const double v[5][4] = {{1, 2, 3, 4}, {2, 3, 1, 4}, {3, 3, 2, 1}, {4, 1, 2, 3}, {1, 2, 4, 3}};
  const char* conds[] = {"a", "b", "c", "d"};
  for (int s = 0; s < 5; ++s)
    for (int c = 0; c < 4; ++c)
      csv += "s" + std::to_string(s) + "," + conds[c] + ",post,trust," + std::to_string(v[s][c]) + "\n";
  const auto data = parse_long_csv(csv);
  CHECK(data.size() == 20);
  const auto rows = run_design(data, Design::Friedman);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].method == "friedman[measure=trust;phase=post]");
  CHECK(std::abs(rows[0].statistic - 1.0408163265306083) < 1e-12);
  CHECK(*rows[0].df == 3.0);
  CHECK(rows[1].method == "dunn_sidak[measure=trust;phase=post;pair=a vs b]");
  const auto text = results_csv(rows);
  CHECK(text.rfind("method,statistic,df,p,effect_size\n", 0) == 0);

  const auto kw = run_design(data, Design::Kruskal);
  CHECK(kw[0].method == "kruskal_wallis[measure=trust;phase=post]");
  CHECK(run_design(data, Design::Shapiro).size() == 4);
  CHECK_THROWS_AS(run_design(data, Design::Wilcoxon), Error);

  std::string paired = "subject,condition,phase,measure,value\n";
  for (int s = 0; s < 6; ++s) {
    paired += "s" + std::to_string(s) + ",x,pre,hr," + std::to_string(70 + s) + "\n";
    paired += "s" + std::to_string(s) + ",x,post,hr," + std::to_string(72 + 2 * s) + "\n";
  }
  const auto w = run_design(parse_long_csv(paired), Design::Wilcoxon);
  REQUIRE(w.size() == 2);
  CHECK(w[0].method == "wilcoxon_exact[measure=hr;condition=x;pair=post vs pre]");
  CHECK(w[1].method.rfind("wilcoxon_z[", 0) == 0);
  CHECK_THROWS_AS(run_design(parse_long_csv(csv + "s0,a,post,trust,9\n"), Design::Friedman), Error);
  CHECK_THROWS_AS(design_from_string("anova"), Error);
}

}

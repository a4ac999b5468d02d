#include "sono/registration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "sono/csv.hpp"
#include "sono/error.hpp"
#include "sono/json_io.hpp"

namespace sono {

namespace {

// Second singular value of the cross-covariance below this fraction of the
// first means the points span a line (or less): rotation about it is free.
constexpr double kRankTolerance = 1e-10;

void check_lengths(const PointCorrespondences& c) {
  if (c.virtual_points.size() != c.real_points.size()) {
    fail(ErrorCode::LengthMismatch,
         "virtual/real point counts differ (" + std::to_string(c.virtual_points.size()) +
             " vs " + std::to_string(c.real_points.size()) + ")");
  }
}

Vec3 centroid(const std::vector<Vec3>& pts) {
  Vec3 sum;
  for (const auto& p : pts) sum += p;
  return sum / static_cast<double>(pts.size());
}

}  // namespace

RegistrationResult kabsch_solve(const PointCorrespondences& c) {
  check_lengths(c);
  if (c.size() < 3) {
    fail(ErrorCode::TooFewPoints,
         "need at least 3 correspondences, got " + std::to_string(c.size()));
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.virtual_points[i].finite() || !c.real_points[i].finite()) {
      fail(ErrorCode::InvalidArgument, "non-finite coordinate in pair " + std::to_string(i));
    }
  }

  const Vec3 cv = centroid(c.virtual_points);
  const Vec3 cr = centroid(c.real_points);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < c.size(); ++i) {
    h += (c.virtual_points[i] - cv).eigen() * (c.real_points[i] - cr).eigen().transpose();
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= kRankTolerance * sv(0)) {
    fail(ErrorCode::DegenerateConfiguration,
         "points are collinear or coincident; rotation is not unique");
  }

  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  // Flip the weakest direction if the unconstrained optimum is a reflection.
  Eigen::Vector3d signs(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  const Eigen::Matrix3d r = v * signs.asDiagonal() * u.transpose();

  RegistrationResult result;
  result.transform.rotation = Rotation::from_matrix(r);
  result.transform.translation = cr - result.transform.rotation.rotate(cv);
  auto residual = registration_residual(result.transform, c);
  result.rms_residual = residual.rms;
  result.per_point_residuals = std::move(residual.per_point);
  return result;
}

ResidualReport registration_residual(const RigidTransform& t, const PointCorrespondences& c) {
  check_lengths(c);
  ResidualReport report;
  report.per_point.reserve(c.size());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = distance(t.apply(c.virtual_points[i]), c.real_points[i]);
    report.per_point.push_back(d);
    sum_sq += d * d;
  }
  report.rms = c.size() == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(c.size()));
  return report;
}

PointCorrespondences parse_point_capture(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const std::size_t cols[6] = {table.column("vx"), table.column("vy"), table.column("vz"),
                               table.column("rx"), table.column("ry"), table.column("rz")};
  PointCorrespondences c;
  for (const auto& row : table.rows) {
    double v[6];
    for (int k = 0; k < 6; ++k) v[k] = csv::to_double(row.fields[cols[k]], row.line);
    c.virtual_points.push_back({v[0], v[1], v[2]});
    c.real_points.push_back({v[3], v[4], v[5]});
  }
  return c;
}

PointCorrespondences load_point_capture(const std::filesystem::path& path) {
  return parse_point_capture(csv::read_text(path));
}

std::string format_rfc3339(UtcTime t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

UtcTime parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  auto bad = [&]() -> UtcTime {
    fail(ErrorCode::ParseError, "bad RFC3339 timestamp '" + std::string(s) + "'");
  };
  auto digits = [&](std::size_t pos, std::size_t n) -> int {
    if (pos + n > s.size()) bad();
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9') bad();
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') ||
      s[13] != ':' || s[16] != ':') {
    bad();
  }
  const year_month_day ymd{year{digits(0, 4)}, month{static_cast<unsigned>(digits(5, 2))},
                           day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) bad();
  const int hh = digits(11, 2), mm = digits(14, 2), ss = digits(17, 2);
  if (hh > 23 || mm > 59 || ss > 60) bad();
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  }
  seconds offset{0};
  if (pos == s.size() - 1 && (s[pos] == 'Z' || s[pos] == 'z')) {
  } else if (pos + 6 == s.size() && (s[pos] == '+' || s[pos] == '-') && s[pos + 3] == ':') {
    const int oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
    offset = hours{oh} + minutes{om};
    if (s[pos] == '-') offset = -offset;
  } else {
    bad();
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - offset;
}

std::string anchor_to_json_text(const AnchorRecord& a) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < a.source_points.size(); ++i) {
    points.push_back({{"virtual", vec3_to_json(a.source_points.virtual_points[i])},
                      {"real", vec3_to_json(a.source_points.real_points[i])}});
  }
  nlohmann::json j = {
      {"version", kAnchorFormatVersion},
      {"label", a.label},
      {"created_at", format_rfc3339(a.created_at)},
      {"rotation_wxyz", rotation_to_json(a.transform.rotation)},
      {"translation_m", vec3_to_json(a.transform.translation)},
      {"points", std::move(points)},
  };
  return j.dump(2) + "\n";
}

AnchorRecord anchor_from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("anchor file: ") + e.what());
  }
  try {
    if (!j.is_object()) fail(ErrorCode::ParseError, "anchor file: expected a JSON object");
    if (!j.contains("version") || !j.at("version").is_number_integer()) {
      fail(ErrorCode::ParseError, "anchor file: missing integer 'version'");
    }
    const int version = j.at("version").get<int>();
    if (version != kAnchorFormatVersion) {
      fail(ErrorCode::VersionMismatch,
           "anchor file version " + std::to_string(version) + " is not supported (expected " +
               std::to_string(kAnchorFormatVersion) + ")");
    }
    AnchorRecord a;
    a.label = j.at("label").get<std::string>();
    a.created_at = parse_rfc3339(j.at("created_at").get<std::string>());
    a.transform.rotation = rotation_from_json(j.at("rotation_wxyz"));
    a.transform.translation = vec3_from_json(j.at("translation_m"), "translation_m");
    for (const auto& p : j.at("points")) {
      a.source_points.virtual_points.push_back(vec3_from_json(p.at("virtual"), "virtual"));
      a.source_points.real_points.push_back(vec3_from_json(p.at("real"), "real"));
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("anchor file: ") + e.what());
  }
}

void save_anchor(const AnchorRecord& a, const std::filesystem::path& path) {
  const std::string text = anchor_to_json_text(a);
  auto tmp = path;
  tmp += ".tmp";
  csv::write_text(tmp, text);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot move anchor into place at " + path.string());
  }
}

AnchorRecord load_anchor(const std::filesystem::path& path) {
  return anchor_from_json_text(csv::read_text(path));
}

}  // namespace sono

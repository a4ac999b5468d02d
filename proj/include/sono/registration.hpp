#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sono/spatial.hpp"

namespace sono {

// Ordered pairs P_virtual(i) <-> P_real(i), meters.
struct PointCorrespondences {
  std::vector<Vec3> virtual_points;
  std::vector<Vec3> real_points;

  std::size_t size() const { return virtual_points.size(); }
  bool operator==(const PointCorrespondences&) const = default;
};

struct RegistrationResult {
  RigidTransform transform;  // maps virtual space into real space
  double rms_residual = 0.0;
  std::vector<double> per_point_residuals;
};

struct ResidualReport {
  double rms = 0.0;
  std::vector<double> per_point;
};

/// Least-squares rigid transform taking the virtual points onto the real
/// points (Kabsch). Rotation is solved first from the centered
/// cross-covariance, then translation from the centroids.
///
/// Throws TooFewPoints (< 3 pairs), LengthMismatch, or
/// DegenerateConfiguration when the rotation is not unique (collinear or
/// coincident points).
RegistrationResult kabsch_solve(const PointCorrespondences& c);

/// Per-pair distances |t * virtual(i) - real(i)| and their RMS.
ResidualReport registration_residual(const RigidTransform& t, const PointCorrespondences& c);

/// Reads the point-capture CSV (`vx,vy,vz,rx,ry,rz`).
PointCorrespondences load_point_capture(const std::filesystem::path& path);
PointCorrespondences parse_point_capture(std::string_view text);

using UtcTime = std::chrono::sys_seconds;

std::string format_rfc3339(UtcTime t);
// Accepts `YYYY-MM-DDTHH:MM:SS` followed by `Z` or a `+HH:MM`/`-HH:MM` offset;
// fractional seconds are truncated.
UtcTime parse_rfc3339(std::string_view s);

// Persisted virtual-to-real alignment reused across sessions.
struct AnchorRecord {
  RigidTransform transform;
  std::string label;
  UtcTime created_at{};
  PointCorrespondences source_points;

  bool operator==(const AnchorRecord&) const = default;
};

inline constexpr int kAnchorFormatVersion = 1;

std::string anchor_to_json_text(const AnchorRecord& a);
AnchorRecord anchor_from_json_text(std::string_view text);

// Writes through a temporary file and renames, so a crash never leaves a
// half-written anchor behind.
void save_anchor(const AnchorRecord& a, const std::filesystem::path& path);
AnchorRecord load_anchor(const std::filesystem::path& path);

}  // namespace sono

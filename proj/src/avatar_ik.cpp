#include "sono/avatar_ik.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "sono/error.hpp"

namespace sono {

void AvatarRig::validate() const {
  if (!(upper_arm_length > 0.0) || !(forearm_length > 0.0)) {
    fail(ErrorCode::InvalidArgument, "arm segment lengths must be positive");
  }
  if (!(head_forward_rest.norm() > 0.0)) {
    fail(ErrorCode::InvalidArgument, "head forward direction must be nonzero");
  }
  if (!(reach_engage_radius > 0.0) || reach_engage_radius > arm_length()) {
    fail(ErrorCode::InvalidArgument, "reach engage radius must lie in (0, arm length]");
  }
}

Rotation look_at(const AvatarRig& rig, const Vec3& target) {
  const Vec3 to_target = target - rig.head_position;
  if (to_target.norm() < 1e-12) {
    fail(ErrorCode::DegenerateTarget, "look-at target coincides with the head");
  }
  return Rotation::from_two_vectors(rig.head_forward_rest, to_target);
}

ArmSolution two_bone_ik(const AvatarRig& rig, const Vec3& target, const Vec3& pole_hint) {
  const double upper = rig.upper_arm_length;
  const double fore = rig.forearm_length;
  const Vec3& shoulder = rig.shoulder_position;

  const Vec3 to_target = target - shoulder;
  const double dist = to_target.norm();
  if (dist < 1e-12) {
    fail(ErrorCode::DegenerateTarget, "reach target coincides with the shoulder");
  }
  const Vec3 dir = to_target / dist;
  const Vec3 to_pole = pole_hint - shoulder;
  const Vec3 perp = to_pole - dir * to_pole.dot(dir);
  if (perp.norm() <= 1e-9 * std::max(1.0, to_pole.norm())) {
    fail(ErrorCode::DegeneratePole, "pole hint is collinear with shoulder->target");
  }
  const Vec3 bend = perp.normalized();

  ArmSolution sol;
  if (dist > upper + fore) {
    sol.reachable = false;
    sol.elbow_angle = std::numbers::pi;
    sol.elbow_position = shoulder + dir * upper;
    sol.wrist_position = shoulder + dir * (upper + fore);
  } else if (dist < std::abs(upper - fore)) {
    sol.reachable = false;
    sol.elbow_angle = 0.0;
    sol.elbow_position = shoulder + dir * upper;
    sol.wrist_position = sol.elbow_position - dir * fore;
  } else {
    sol.reachable = true;
    const double cos_elbow = (upper * upper + fore * fore - dist * dist) / (2.0 * upper * fore);
    sol.elbow_angle = std::acos(std::clamp(cos_elbow, -1.0, 1.0));
    const double cos_shoulder = (upper * upper + dist * dist - fore * fore) / (2.0 * upper * dist);
    const double shoulder_angle = std::acos(std::clamp(cos_shoulder, -1.0, 1.0));
    sol.elbow_position =
        shoulder + (dir * std::cos(shoulder_angle) + bend * std::sin(shoulder_angle)) * upper;
    const Vec3 forearm = target - sol.elbow_position;
    const double forearm_norm = forearm.norm();
    sol.wrist_position =
        forearm_norm > 0.0 ? sol.elbow_position + forearm * (fore / forearm_norm) : target;
  }

  const Vec3 x_axis = (sol.elbow_position - shoulder).normalized();
  const Vec3 z_axis = dir.cross(bend).normalized();
  const Vec3 y_axis = z_axis.cross(x_axis);
  Eigen::Matrix3d basis;
  basis.col(0) = x_axis.eigen();
  basis.col(1) = y_axis.eigen();
  basis.col(2) = z_axis.eigen();
  sol.shoulder_rotation = Rotation::from_matrix(basis);
  return sol;
}

ReachUpdate update_reach_behavior(const AvatarRig& rig, const Vec3& probe_position,
                                  bool currently_engaged) {
  const double dist = distance(probe_position, rig.shoulder_position);
  const double limit =
      currently_engaged ? kReachHysteresis * rig.reach_engage_radius : rig.reach_engage_radius;
  ReachUpdate update;
  update.engaged = dist <= limit;
  if (!update.engaged) return update;

  const Vec3 fallbacks[] = {rig.elbow_pole_offset, Vec3::unit_x(), Vec3::unit_y()};
  for (const Vec3& offset : fallbacks) {
    try {
      update.solution = two_bone_ik(rig, probe_position, rig.shoulder_position + offset);
      return update;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateTarget) return update;
      if (e.code() != ErrorCode::DegeneratePole) throw;
    }
  }
  return update;
}

ReachUpdate ReachBehavior::update(const AvatarRig& rig, const Vec3& probe_position) {
  ReachUpdate u = update_reach_behavior(rig, probe_position, engaged_);
  engaged_ = u.engaged;
  return u;
}

}  // namespace sono

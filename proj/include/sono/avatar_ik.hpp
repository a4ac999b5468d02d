#pragma once

#include <optional>

#include "sono/spatial.hpp"

namespace sono {

struct AvatarRig {
  Vec3 head_position{0.5, 0.40, 0.55};
  Vec3 head_forward_rest{0.0, -1.0, 0.0};
  Vec3 shoulder_position{0.5, 0.40, 0.30};
  double upper_arm_length = 0.30;
  double forearm_length = 0.28;
  double reach_engage_radius = 0.58;
  // Point the elbow bends toward, relative to the shoulder.
  Vec3 elbow_pole_offset{0.0, 0.0, -1.0};

  double arm_length() const { return upper_arm_length + forearm_length; }
  // Throws InvalidArgument on non-positive lengths, a zero forward vector,
  // or an engage radius longer than the arm.
  void validate() const;
};

struct ArmSolution {
  // Interior angle between upper arm and forearm: pi when straight.
  double elbow_angle = 0.0;
  // Takes +x onto the upper-arm direction and +z onto the bend-plane normal.
  Rotation shoulder_rotation;
  Vec3 elbow_position;
  Vec3 wrist_position;
  bool reachable = false;
};

/// Minimal-angle (roll-free) rotation turning head_forward_rest toward the
/// target. DegenerateTarget if the target sits on the head.
Rotation look_at(const AvatarRig& rig, const Vec3& target);

/// Two-bone arm solve from the shoulder. `pole_hint` is a world point that
/// selects the bend plane; it must not be collinear with shoulder->target
/// (DegeneratePole). Targets beyond reach yield a straight arm pointing at
/// the target with reachable = false; targets closer than |upper - fore|
/// fold the arm fully, also unreachable.
ArmSolution two_bone_ik(const AvatarRig& rig, const Vec3& target, const Vec3& pole_hint);

inline constexpr double kReachHysteresis = 1.05;

struct ReachUpdate {
  bool engaged = false;
  std::optional<ArmSolution> solution;
};

// Engagement state for the "hand holds the probe" behavior. Engages inside
// the engage radius and lets go only beyond kReachHysteresis times it.
class ReachBehavior {
 public:
  ReachUpdate update(const AvatarRig& rig, const Vec3& probe_position);
  bool engaged() const { return engaged_; }

 private:
  bool engaged_ = false;
};

// Stateless form for callers that own the flag themselves.
ReachUpdate update_reach_behavior(const AvatarRig& rig, const Vec3& probe_position,
                                  bool currently_engaged = false);

}  // namespace sono

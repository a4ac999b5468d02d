#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string_view>
#include <vector>

#include "sono/spatial.hpp"

namespace sono {

enum class JointType { Revolute, Prismatic };

struct Joint {
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::unit_z();     // unit, expressed in the frame after `origin`
  RigidTransform origin;          // fixed offset from the previous frame
};

// Serial chain: base -> origin_1 * motion_1(q_1) -> ... -> tool_offset.
class KinematicChain {
 public:
  // Throws InvalidChain if there are no joints or an axis is not unit length
  // within 1e-9.
  KinematicChain(std::vector<Joint> joints, RigidTransform tool_offset = {});

  const std::vector<Joint>& joints() const { return joints_; }
  const RigidTransform& tool_offset() const { return tool_offset_; }
  std::size_t dof() const { return joints_.size(); }

  // Three prismatic axes (x, y, z) carrying a roll-pitch-yaw wrist whose zero
  // pose points the tool straight down; the probe tip sits `probe_length`
  // along the tool z axis.
  static KinematicChain gantry(double probe_length = 0.12);

 private:
  std::vector<Joint> joints_;
  RigidTransform tool_offset_;
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  static JointState zeros(std::size_t n) {
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  }
};

// Throws LengthMismatch when q does not match the chain.
Pose forward_kinematics(const KinematicChain& chain, const JointState& state);

// 6 x n, rows (v_x, v_y, v_z, w_x, w_y, w_z) in the base frame. Column i is
// the tool twist produced by unit velocity of joint i.
Eigen::MatrixXd geometric_jacobian(const KinematicChain& chain, const JointState& state);

struct IkResult {
  Eigen::VectorXd q;
  bool converged = false;
  int iterations = 0;
  double position_error = 0.0;
  double orientation_error = 0.0;
};

struct IkOptions {
  int max_iterations = 100;
  double position_tolerance = 1e-10;
  double orientation_tolerance = 1e-10;
  double damping = 1e-6;
};

// Damped least squares on the geometric Jacobian, warm-started from q0.
IkResult solve_ik(const KinematicChain& chain, const Pose& target, const Eigen::VectorXd& q0,
                  const IkOptions& options = {});

// Chain definition file: either a JSON list of joints or an object
// {"joints": [...], "tool_offset": {...}}. Each joint is
// {"type": "revolute"|"prismatic", "axis": [x,y,z],
//  "origin": {"rotation_wxyz": [...], "translation_m": [...]}}.
KinematicChain chain_from_json_text(std::string_view text);
KinematicChain load_chain(const std::filesystem::path& path);

}  // namespace sono

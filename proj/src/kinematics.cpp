#include "sono/kinematics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "sono/csv.hpp"
#include "sono/error.hpp"
#include "sono/json_io.hpp"

namespace sono {

namespace {

RigidTransform joint_motion(const Joint& joint, double q) {
  if (joint.type == JointType::Revolute) {
    return RigidTransform::from_rotation(Rotation::from_axis_angle(joint.axis, q));
  }
  return RigidTransform::from_translation(joint.axis * q);
}

void check_state(const KinematicChain& chain, const Eigen::VectorXd& q) {
  if (static_cast<std::size_t>(q.size()) != chain.dof()) {
    fail(ErrorCode::LengthMismatch, "joint state has " + std::to_string(q.size()) +
                                        " entries, chain has " + std::to_string(chain.dof()) +
                                        " joints");
  }
}

}  // namespace

KinematicChain::KinematicChain(std::vector<Joint> joints, RigidTransform tool_offset)
    : joints_(std::move(joints)), tool_offset_(tool_offset) {
  if (joints_.empty()) fail(ErrorCode::InvalidChain, "chain needs at least one joint");
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const double n = joints_[i].axis.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
      fail(ErrorCode::InvalidChain, "joint " + std::to_string(i) + " axis is not unit length");
    }
  }
}

KinematicChain KinematicChain::gantry(double probe_length) {
  const Rotation tool_down = Rotation::from_axis_angle(Vec3::unit_x(), std::numbers::pi);
  std::vector<Joint> joints = {
      {JointType::Prismatic, Vec3::unit_x(), {}},
      {JointType::Prismatic, Vec3::unit_y(), {}},
      {JointType::Prismatic, Vec3::unit_z(), {}},
      {JointType::Revolute, Vec3::unit_z(), RigidTransform::from_rotation(tool_down)},
      {JointType::Revolute, Vec3::unit_y(), {}},
      {JointType::Revolute, Vec3::unit_x(), {}},
  };
  return KinematicChain(std::move(joints),
                        RigidTransform::from_translation({0.0, 0.0, probe_length}));
}

Pose forward_kinematics(const KinematicChain& chain, const JointState& state) {
  check_state(chain, state.q);
  RigidTransform t;
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const Joint& joint = chain.joints()[i];
    t = t * joint.origin * joint_motion(joint, state.q(static_cast<Eigen::Index>(i)));
  }
  return Pose::from_transform(t * chain.tool_offset());
}

Eigen::MatrixXd geometric_jacobian(const KinematicChain& chain, const JointState& state) {
  check_state(chain, state.q);
  const auto n = static_cast<Eigen::Index>(chain.dof());
  std::vector<Vec3> axes(chain.dof());
  std::vector<Vec3> origins(chain.dof());
  RigidTransform t;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Joint& joint = chain.joints()[static_cast<std::size_t>(i)];
    t = t * joint.origin;
    axes[static_cast<std::size_t>(i)] = t.rotation.rotate(joint.axis);
    origins[static_cast<std::size_t>(i)] = t.translation;
    t = t * joint_motion(joint, state.q(i));
  }
  const Vec3 tip = (t * chain.tool_offset()).translation;

  Eigen::MatrixXd jac(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vec3& z = axes[k];
    if (chain.joints()[k].type == JointType::Revolute) {
      jac.block<3, 1>(0, i) = z.cross(tip - origins[k]).eigen();
      jac.block<3, 1>(3, i) = z.eigen();
    } else {
      jac.block<3, 1>(0, i) = z.eigen();
      jac.block<3, 1>(3, i).setZero();
    }
  }
  return jac;
}

IkResult solve_ik(const KinematicChain& chain, const Pose& target, const Eigen::VectorXd& q0,
                  const IkOptions& options) {
  check_state(chain, q0);
  IkResult result;
  result.q = q0;
  JointState state{q0, Eigen::VectorXd::Zero(q0.size())};
  const double lambda2 = options.damping * options.damping;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    state.q = result.q;
    const Pose current = forward_kinematics(chain, state);
    Eigen::Matrix<double, 6, 1> err;
    err.head<3>() = (target.position - current.position).eigen();
    err.tail<3>() = (target.orientation * current.orientation.inverse()).rotation_vector().eigen();
    result.position_error = err.head<3>().norm();
    result.orientation_error = err.tail<3>().norm();
    result.iterations = iter;
    if (result.position_error <= options.position_tolerance &&
        result.orientation_error <= options.orientation_tolerance) {
      result.converged = true;
      break;
    }
    if (iter == options.max_iterations) break;
    const Eigen::MatrixXd jac = geometric_jacobian(chain, state);
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    result.q += jac.transpose() * jjt.ldlt().solve(err);
  }
  return result;
}

KinematicChain chain_from_json_text(std::string_view text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    const nlohmann::json& list = j.is_array() ? j : j.at("joints");
    RigidTransform tool;
    if (j.is_object() && j.contains("tool_offset")) tool = transform_from_json(j.at("tool_offset"));
    std::vector<Joint> joints;
    for (const auto& item : list) {
      Joint joint;
      const auto type = item.at("type").get<std::string>();
      if (type == "revolute") {
        joint.type = JointType::Revolute;
      } else if (type == "prismatic") {
        joint.type = JointType::Prismatic;
      } else {
        fail(ErrorCode::ParseError, "unknown joint type '" + type + "'");
      }
      joint.axis = vec3_from_json(item.at("axis"), "axis");
      if (item.contains("origin")) joint.origin = transform_from_json(item.at("origin"));
      joints.push_back(joint);
    }
    return KinematicChain(std::move(joints), tool);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("chain file: ") + e.what());
  }
}

KinematicChain load_chain(const std::filesystem::path& path) {
  return chain_from_json_text(csv::read_text(path));
}

}  // namespace sono

#include "sono/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "sono/error.hpp"

namespace sono {

namespace {

void check_path(const ScanPath& path) {
  if (!(path.speed > 0.0) || !std::isfinite(path.speed)) {
    fail(ErrorCode::InvalidArgument, "scan speed must be positive");
  }
}

}  // namespace

Pose scan_waypoint(const ScanPath& path, double t) {
  check_path(path);
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "scan time must be >= 0");
  const double length = path.length();
  const double travelled = path.speed * t;
  if (travelled >= length) return path.end_pose;
  const double s = travelled / length;
  return {path.start_pose.position + (path.end_pose.position - path.start_pose.position) * s,
          slerp(path.start_pose.orientation, path.end_pose.orientation, s)};
}

Vec3 scan_velocity(const ScanPath& path, double t) {
  check_path(path);
  const double length = path.length();
  if (t < 0.0 || path.speed * t >= length) return Vec3::zero();
  return (path.end_pose.position - path.start_pose.position) * (path.speed / length);
}

SimState make_initial_state(const SimConfig& config, const Pose& pose, double time) {
  SimState s;
  s.time = time;
  s.probe_pose = pose;
  const auto n = static_cast<Eigen::Index>(config.chain.dof());
  const IkResult ik = solve_ik(config.chain, pose, Eigen::VectorXd::Zero(n));
  s.joint_state = {ik.q, Eigen::VectorXd::Zero(n)};
  s.joint_torque = Eigen::VectorXd::Zero(n);
  return s;
}

SimState step_simulation(const SimState& state, const ImpedanceGains& gains,
                         const TissueModel& tissue, const ScanPath& path, double path_start_time,
                         double dt, const SimConfig& config) {
  if (!(dt > 0.0) || dt > 0.01) {
    fail(ErrorCode::InvalidTimestep, "dt must lie in (0, 0.01] s");
  }
  if (!(config.virtual_mass > 0.0)) {
    fail(ErrorCode::InvalidArgument, "virtual mass must be positive");
  }

  const double desired_force = gains.desired_wrench(2);
  const double stiffness = gains.stiffness(2);
  const double damping = gains.damping(2);

  // Axis of the probe in the world, from the current commanded orientation.
  const Vec3 axis_now = state.probe_pose.orientation.rotate(Vec3::unit_z());
  const Vec3 push{0.0, 0.0, state.contact_force};
  const double accel = (desired_force - stiffness * state.axial_offset -
                        damping * state.axial_velocity + push.dot(axis_now)) /
                       config.virtual_mass;

  SimState next = state;
  next.time = state.time + dt;
  next.axial_velocity = state.axial_velocity + accel * dt;
  next.axial_offset = state.axial_offset + next.axial_velocity * dt;

  const double path_t = std::max(0.0, next.time - path_start_time);
  const Pose waypoint = scan_waypoint(path, path_t);
  const Vec3 axis = waypoint.orientation.rotate(Vec3::unit_z());
  next.probe_pose = {waypoint.position + axis * next.axial_offset, waypoint.orientation};

  const double probe_z = next.probe_pose.position.z;
  const double probe_zdot = scan_velocity(path, path_t).z + axis.z * next.axial_velocity;
  const double penetration = tissue.surface_height - probe_z;
  next.penetration = penetration > 0.0 ? penetration : 0.0;
  next.penetration_rate = penetration > 0.0 ? -probe_zdot : 0.0;
  next.contact_force = contact_force(tissue, probe_z, probe_zdot);

  const IkResult ik = solve_ik(config.chain, next.probe_pose, state.joint_state.q);
  next.joint_state.qdot = (ik.q - state.joint_state.q) / dt;
  next.joint_state.q = ik.q;

  // Axial error is "target minus current": the waypoint sits -x along the axis.
  PoseError err;
  err.e(2) = -next.axial_offset;
  err.edot(2) = -next.axial_velocity;
  const Eigen::MatrixXd jac = to_local(
      next.probe_pose.orientation, geometric_jacobian(config.chain, next.joint_state));
  next.joint_torque = impedance_torque(jac, gains, err);
  return next;
}

}  // namespace sono

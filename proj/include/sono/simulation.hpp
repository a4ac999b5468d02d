#pragma once

#include <Eigen/Core>

#include "sono/impedance.hpp"
#include "sono/kinematics.hpp"
#include "sono/spatial.hpp"

namespace sono {

struct ScanPath {
  Pose start_pose;
  Pose end_pose;
  double speed = 0.01;  // m/s, > 0

  double length() const { return distance(start_pose.position, end_pose.position); }
  double duration() const { return length() / speed; }

  bool operator==(const ScanPath&) const = default;
};

// Constant-speed lerp of position and slerp of orientation; returns exactly
// end_pose once the path is exhausted. Throws InvalidArgument for t < 0 or a
// non-positive speed.
Pose scan_waypoint(const ScanPath& path, double t);

// World velocity of the waypoint at path time t (zero outside the path).
Vec3 scan_velocity(const ScanPath& path, double t);

struct SimConfig {
  KinematicChain chain = KinematicChain::gantry();
  double virtual_mass = 1.0;   // kg, axial
  double force_cap = 20.0;     // N, safety abort threshold
};

// Snapshot of the probe after a step. The axial coordinate measures how far
// the probe sits beyond its commanded waypoint along the tool z axis.
struct SimState {
  double time = 0.0;
  Pose probe_pose;
  double penetration = 0.0;       // m, >= 0
  double penetration_rate = 0.0;  // m/s
  double contact_force = 0.0;     // N
  double axial_offset = 0.0;      // m
  double axial_velocity = 0.0;    // m/s
  JointState joint_state;
  Eigen::VectorXd joint_torque;   // N*m or N, last commanded tau
};

// Places the probe exactly on `pose` at rest and solves the chain for it.
SimState make_initial_state(const SimConfig& config, const Pose& pose, double time = 0.0);

/// Advances one step of length dt (0 < dt <= 0.01, else InvalidTimestep).
///
/// Lateral position and orientation follow scan_waypoint exactly. The axial
/// degree of freedom integrates (semi-implicit Euler) on the virtual mass:
///   a = (F_d - K_m x - D_ax x_dot + f_contact . axis) / m_v
/// with F_d, K_m and D_ax taken from the z entries of the gains (tool frame,
/// z along the probe centerline). Joint torques are evaluated through the
/// impedance law with e_ddot = 0 and stored for logging.
///
/// `path_start_time` is the session time at which `path` began.
SimState step_simulation(const SimState& state, const ImpedanceGains& gains,
                         const TissueModel& tissue, const ScanPath& path, double path_start_time,
                         double dt, const SimConfig& config);

inline bool exceeds_force_cap(const SimState& state, const SimConfig& config) {
  return state.contact_force > config.force_cap;
}

}  // namespace sono

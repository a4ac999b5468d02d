#pragma once

#include <Eigen/Core>

#include "sono/spatial.hpp"

namespace sono {

using Vector6 = Eigen::Matrix<double, 6, 1>;

// Diagonals of the task-space impedance, ordered (x, y, z, rx, ry, rz).
// Units: stiffness N/m and N*m/rad, damping N*s/m and N*m*s/rad,
// inertia kg and kg*m^2, desired wrench N and N*m.
struct ImpedanceGains {
  Vector6 stiffness = Vector6::Zero();
  Vector6 damping = Vector6::Zero();
  Vector6 inertia = Vector6::Zero();
  Vector6 desired_wrench = Vector6::Zero();

  // Throws InvalidArgument on negative/non-finite entries or when both
  // stiffness and damping are zero.
  void validate() const;

  // 8 N along the probe axis, 500 N/m axial stiffness, stiff lateral and
  // rotational position control, axial damping 450 N*s/m.
  static ImpedanceGains probe_defaults();
};

// e, e_dot, e_ddot as 6-vectors: translation error (m) then axis-angle
// orientation error (rad), both "target minus current".
struct PoseError {
  Vector6 e = Vector6::Zero();
  Vector6 edot = Vector6::Zero();
  Vector6 eddot = Vector6::Zero();
};

// Base-frame error taking `current` onto `target`.
Vector6 pose_error(const Pose& current, const Pose& target);

// Re-expresses a base-frame twist/wrench (or Jacobian rows) in the frame
// rotated by `frame`.
Vector6 to_local(const Rotation& frame, const Vector6& v);
Eigen::MatrixXd to_local(const Rotation& frame, const Eigen::MatrixXd& jacobian);

/// Joint torques tau = J^T (F_d + K e + D e_dot + M e_ddot).
/// `jacobian` must be 6 x n and expressed in the same frame as the gains and
/// the error; otherwise DimensionMismatch.
Eigen::VectorXd impedance_torque(const Eigen::MatrixXd& jacobian, const ImpedanceGains& gains,
                                 const PoseError& err);

struct TissueModel {
  double surface_height = 0.0;     // m, world z of the undeformed skin
  double stiffness = 50000.0;      // N/m
  double contact_damping = 0.0;    // N*s/m

  // Throws InvalidArgument unless stiffness > 0 and damping >= 0.
  void validate() const;
};

// Spring contact: k*delta plus damping while pressing in; zero out of contact.
double contact_force(const TissueModel& tissue, double probe_z, double probe_zdot);

struct ContactEquilibrium {
  double penetration = 0.0;  // m
  double force = 0.0;        // N
};

// Static balance F_d - K_m*delta = k_t*delta. Throws NonpositiveStiffness
// when K_m + k_t <= 0 or either is negative.
ContactEquilibrium equilibrium_contact_force(double desired_force, double controller_stiffness,
                                             double tissue_stiffness);

}  // namespace sono

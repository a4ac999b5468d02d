#include "sono/impedance.hpp"

#include <cmath>

#include "sono/error.hpp"

namespace sono {

namespace {

bool all_nonnegative_finite(const Vector6& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) < 0.0) return false;
  }
  return true;
}

}  // namespace

void ImpedanceGains::validate() const {
  if (!all_nonnegative_finite(stiffness) || !all_nonnegative_finite(damping) ||
      !all_nonnegative_finite(inertia)) {
    fail(ErrorCode::InvalidArgument, "impedance diagonals must be finite and >= 0");
  }
  if (!desired_wrench.allFinite()) {
    fail(ErrorCode::InvalidArgument, "desired wrench must be finite");
  }
  if (stiffness.isZero(0.0) && damping.isZero(0.0)) {
    fail(ErrorCode::InvalidArgument, "stiffness and damping cannot both be zero");
  }
}

ImpedanceGains ImpedanceGains::probe_defaults() {
  ImpedanceGains g;
  g.stiffness << 2000.0, 2000.0, 500.0, 200.0, 200.0, 200.0;
  g.damping << 90.0, 90.0, 450.0, 10.0, 10.0, 10.0;
  g.desired_wrench << 0.0, 0.0, 8.0, 0.0, 0.0, 0.0;
  return g;
}

Vector6 pose_error(const Pose& current, const Pose& target) {
  Vector6 e;
  e.head<3>() = (target.position - current.position).eigen();
  e.tail<3>() = (target.orientation * current.orientation.inverse()).rotation_vector().eigen();
  return e;
}

Vector6 to_local(const Rotation& frame, const Vector6& v) {
  const Eigen::Matrix3d rt = frame.matrix().transpose();
  Vector6 out;
  out.head<3>() = rt * v.head<3>();
  out.tail<3>() = rt * v.tail<3>();
  return out;
}

Eigen::MatrixXd to_local(const Rotation& frame, const Eigen::MatrixXd& jacobian) {
  if (jacobian.rows() != 6) {
    fail(ErrorCode::DimensionMismatch, "Jacobian must have 6 rows");
  }
  const Eigen::Matrix3d rt = frame.matrix().transpose();
  Eigen::MatrixXd out(6, jacobian.cols());
  out.topRows<3>() = rt * jacobian.topRows<3>();
  out.bottomRows<3>() = rt * jacobian.bottomRows<3>();
  return out;
}

Eigen::VectorXd impedance_torque(const Eigen::MatrixXd& jacobian, const ImpedanceGains& gains,
                                 const PoseError& err) {
  if (jacobian.rows() != 6 || jacobian.cols() < 1) {
    fail(ErrorCode::DimensionMismatch,
         "Jacobian must be 6 x n, got " + std::to_string(jacobian.rows()) + " x " +
             std::to_string(jacobian.cols()));
  }
  const Vector6 wrench = gains.desired_wrench + gains.stiffness.cwiseProduct(err.e) +
                         gains.damping.cwiseProduct(err.edot) +
                         gains.inertia.cwiseProduct(err.eddot);
  return jacobian.transpose() * wrench;
}

void TissueModel::validate() const {
  if (!std::isfinite(surface_height) || !std::isfinite(stiffness) || !(stiffness > 0.0) ||
      !std::isfinite(contact_damping) || contact_damping < 0.0) {
    fail(ErrorCode::InvalidArgument, "tissue needs stiffness > 0 and damping >= 0");
  }
}

double contact_force(const TissueModel& tissue, double probe_z, double probe_zdot) {
  const double penetration = tissue.surface_height - probe_z;
  if (!(penetration > 0.0)) return 0.0;
  const double pressing_speed = probe_zdot < 0.0 ? -probe_zdot : 0.0;
  return tissue.stiffness * penetration + tissue.contact_damping * pressing_speed;
}

ContactEquilibrium equilibrium_contact_force(double desired_force, double controller_stiffness,
                                             double tissue_stiffness) {
  if (controller_stiffness < 0.0 || tissue_stiffness < 0.0 ||
      !(controller_stiffness + tissue_stiffness > 0.0)) {
    fail(ErrorCode::NonpositiveStiffness, "controller + tissue stiffness must be positive");
  }
  const double penetration = desired_force / (controller_stiffness + tissue_stiffness);
  if (controller_stiffness == 0.0) return {penetration, desired_force};
  return {penetration, tissue_stiffness * penetration};
}

}  // namespace sono

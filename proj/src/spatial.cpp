#include "sono/spatial.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "sono/error.hpp"

namespace sono {

namespace {

// Composition drifts the norm by ~1 ulp per product; only pay for a sqrt
// once the drift is measurable.
constexpr double kRenormalizeThreshold = 1e-12;

}  // namespace

Rotation Rotation::canonical(double w, double x, double y, double z) {
  if (w < 0.0) {
    return Rotation(-w, -x, -y, -z);
  }
  return Rotation(w, x, y, z);
}

Rotation Rotation::from_wxyz(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    fail(ErrorCode::InvalidArgument, "quaternion must be finite and nonzero");
  }
  if (std::abs(n - 1.0) <= 0.5 * kRenormalizeThreshold) {
    return canonical(w, x, y, z);
  }
  return canonical(w / n, x / n, y / n, z / n);
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!std::isfinite(n) || n == 0.0 || !std::isfinite(angle)) {
    fail(ErrorCode::InvalidArgument, "rotation axis must be finite and nonzero");
  }
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return canonical(std::cos(0.5 * angle), u.x * s, u.y * s, u.z * s);
}

Rotation Rotation::from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle == 0.0) {
    return identity();
  }
  return from_axis_angle(v, angle);
}

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
  // Shepperd's method: branch on the largest diagonal combination.
  const double trace = m.trace();
  double w, x, y, z;
  if (trace > m(0, 0) && trace > m(1, 1) && trace > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  return from_wxyz(w, x, y, z);
}

Rotation Rotation::from_two_vectors(const Vec3& from, const Vec3& to) {
  const double nf = from.norm();
  const double nt = to.norm();
  if (nf == 0.0 || nt == 0.0) {
    fail(ErrorCode::InvalidArgument, "from_two_vectors needs nonzero directions");
  }
  const Vec3 a = from / nf;
  const Vec3 b = to / nt;
  const double c = a.dot(b);
  if (c < -1.0 + 1e-12) {
    // Antipodal: any half-turn about an axis perpendicular to `a`.
    const double ax = std::abs(a.x), ay = std::abs(a.y), az = std::abs(a.z);
    const Vec3 helper = (ax <= ay && ax <= az) ? Vec3::unit_x()
                        : (ay <= az)          ? Vec3::unit_y()
                                              : Vec3::unit_z();
    const Vec3 axis = a.cross(helper).normalized();
    return Rotation(0.0, axis.x, axis.y, axis.z);
  }
  const Vec3 axis = a.cross(b);
  return from_wxyz(1.0 + c, axis.x, axis.y, axis.z);
}

Vec3 Rotation::rotate(const Vec3& v) const {
  const Vec3 q{x_, y_, z_};
  const Vec3 t = 2.0 * q.cross(v);
  return v + w_ * t + q.cross(t);
}

Eigen::Matrix3d Rotation::matrix() const {
  return Eigen::Quaterniond(w_, x_, y_, z_).toRotationMatrix();
}

Rotation Rotation::inverse() const { return Rotation(w_, -x_, -y_, -z_); }

Rotation Rotation::operator*(const Rotation& o) const {
  const double w = w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_;
  const double x = w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_;
  const double y = w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_;
  const double z = w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_;
  const double n2 = w * w + x * x + y * y + z * z;
  if (std::abs(n2 - 1.0) > kRenormalizeThreshold) {
    const double n = std::sqrt(n2);
    return canonical(w / n, x / n, y / n, z / n);
  }
  return canonical(w, x, y, z);
}

double Rotation::angle() const {
  const double s = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  return 2.0 * std::atan2(s, w_);
}

Vec3 Rotation::rotation_vector() const {
  const double s = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  if (s < 1e-12) {
    return Vec3{x_, y_, z_} * (2.0 / w_);
  }
  return Vec3{x_, y_, z_} * (2.0 * std::atan2(s, w_) / s);
}

double angular_distance(const Rotation& a, const Rotation& b) {
  return (a.inverse() * b).angle();
}

Rotation slerp(const Rotation& a, const Rotation& b, double s) {
  s = std::clamp(s, 0.0, 1.0);
  if (s == 0.0) return a;
  if (s == 1.0) return b;
  const Eigen::Quaterniond qa(a.w(), a.x(), a.y(), a.z());
  const Eigen::Quaterniond qb(b.w(), b.x(), b.y(), b.z());
  const Eigen::Quaterniond q = qa.slerp(s, qb);
  return Rotation::from_wxyz(q.w(), q.x(), q.y(), q.z());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation.eigen();
  return m;
}

Vec3 transform_point(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

RigidTransform invert(const RigidTransform& t) {
  const Rotation inv = t.rotation.inverse();
  return {inv, -inv.rotate(t.translation)};
}

}  // namespace sono

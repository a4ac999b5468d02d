#pragma once

#include <Eigen/Core>
#include <cmath>

namespace sono {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
  explicit Vec3(const Eigen::Vector3d& v) : x(v.x()), y(v.y()), z(v.z()) {}

  static constexpr Vec3 zero() { return {}; }
  static constexpr Vec3 unit_x() { return {1.0, 0.0, 0.0}; }
  static constexpr Vec3 unit_y() { return {0.0, 1.0, 0.0}; }
  static constexpr Vec3 unit_z() { return {0.0, 0.0, 1.0}; }

  Eigen::Vector3d eigen() const { return {x, y, z}; }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr double squared_norm() const { return dot(*this); }
  Vec3 normalized() const { return *this / norm(); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  bool operator==(const Vec3&) const = default;
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Unit quaternion, stored canonicalized with w >= 0.
class Rotation {
 public:
  Rotation() = default;

  static Rotation identity() { return {}; }
  // Normalizes the input; throws InvalidArgument on a zero or non-finite quaternion.
  static Rotation from_wxyz(double w, double x, double y, double z);
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  // Axis scaled by angle (rad).
  static Rotation from_rotation_vector(const Vec3& v);
  static Rotation from_matrix(const Eigen::Matrix3d& m);
  // Minimal-angle rotation taking direction `from` onto direction `to`.
  static Rotation from_two_vectors(const Vec3& from, const Vec3& to);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  double norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

  Vec3 rotate(const Vec3& v) const;
  Eigen::Matrix3d matrix() const;
  Rotation inverse() const;
  Rotation operator*(const Rotation& o) const;

  double angle() const;
  Vec3 rotation_vector() const;

  bool operator==(const Rotation&) const = default;

 private:
  Rotation(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}
  static Rotation canonical(double w, double x, double y, double z);

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

// Angle (rad) of the relative rotation a^-1 * b.
double angular_distance(const Rotation& a, const Rotation& b);
// Shortest-arc spherical interpolation, s in [0, 1].
Rotation slerp(const Rotation& a, const Rotation& b, double s);

struct RigidTransform {
  Rotation rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Rotation::identity(), t}; }
  static RigidTransform from_rotation(const Rotation& r) { return {r, Vec3::zero()}; }

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  Eigen::Matrix4d matrix() const;

  bool operator==(const RigidTransform&) const = default;
};

struct Pose {
  Vec3 position;
  Rotation orientation;

  RigidTransform as_transform() const { return {orientation, position}; }
  static Pose from_transform(const RigidTransform& t) { return {t.translation, t.rotation}; }

  bool operator==(const Pose&) const = default;
};

Vec3 transform_point(const RigidTransform& t, const Vec3& p);
// Applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

}  // namespace sono

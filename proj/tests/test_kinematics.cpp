#include <doctest.h>

#include <numbers>

#include "sono/kinematics.hpp"
#include "support.hpp"

using namespace sono;
using sono::testing::Gen;

namespace {

KinematicChain planar_two_link() {
  return KinematicChain({{JointType::Revolute, Vec3::unit_z(), {}},
                         {JointType::Revolute, Vec3::unit_z(), RigidTransform::from_translation({1, 0, 0})}},
                        RigidTransform::from_translation({1, 0, 0}));
}

JointState at(std::initializer_list<double> q) {
  JointState s = JointState::zeros(q.size());
  Eigen::Index i = 0;
  for (const double v : q) s.q(i++) = v;
  return s;
}

// Central differences of forward_kinematics; the angular part uses the
// rotation vector of the relative orientation.
Eigen::MatrixXd numeric_jacobian(const KinematicChain& chain, const JointState& s, double h) {
  const auto n = static_cast<Eigen::Index>(chain.dof());
  Eigen::MatrixXd j(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    JointState lo = s, hi = s;
    lo.q(i) -= h;
    hi.q(i) += h;
    const Pose a = forward_kinematics(chain, lo);
    const Pose b = forward_kinematics(chain, hi);
    j.block<3, 1>(0, i) = ((b.position - a.position) / (2 * h)).eigen();
    j.block<3, 1>(3, i) = (b.orientation * a.orientation.inverse()).rotation_vector().eigen() / (2 * h);
  }
  return j;
}

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("planar arm forward kinematics") {
  const auto arm = planar_two_link();
  CHECK(distance(forward_kinematics(arm, at({0, 0})).position, {2, 0, 0}) < 1e-12);
  CHECK(distance(forward_kinematics(arm, at({std::numbers::pi / 2, 0})).position, {0, 2, 0}) < 1e-12);
  CHECK(distance(forward_kinematics(arm, at({0, std::numbers::pi / 2})).position, {1, 1, 0}) < 1e-12);
}

TEST_CASE("prismatic joint forward kinematics and jacobian") {
  const KinematicChain slide({{JointType::Prismatic, Vec3::unit_z(), {}}});
  CHECK(distance(forward_kinematics(slide, at({0.3})).position, {0, 0, 0.3}) < 1e-15);
  const Eigen::MatrixXd j = geometric_jacobian(slide, at({0.3}));
  Eigen::Matrix<double, 6, 1> expected;
  expected << 0, 0, 1, 0, 0, 0;
  CHECK((j.col(0) - expected).norm() == 0.0);
}

TEST_CASE("planar arm analytic jacobian") {
  const Eigen::MatrixXd j = geometric_jacobian(planar_two_link(), at({0, 0}));
  CHECK(j.rows() == 6);
  CHECK(j.cols() == 2);
  CHECK((j.block<3, 1>(0, 0) - Eigen::Vector3d(0, 2, 0)).norm() < 1e-12);
  CHECK((j.block<3, 1>(0, 1) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
  CHECK((j.block<3, 1>(3, 0) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("jacobian agrees with finite differences on random chains") {
  Gen g(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto chain = g.chain(7);
    JointState s = JointState::zeros(chain.dof());
    for (Eigen::Index i = 0; i < s.q.size(); ++i) s.q(i) = g.uniform(-2.0, 2.0);
    const Eigen::MatrixXd j = geometric_jacobian(chain, s);
    const Eigen::MatrixXd fd = numeric_jacobian(chain, s, 1e-6);
    CHECK((j - fd).norm() <= 1e-6 * std::max(1.0, j.norm()));
  }
}

TEST_CASE("gantry zero pose points the tool down") {
  const auto chain = KinematicChain::gantry(0.12);
  const Pose p = forward_kinematics(chain, JointState::zeros(6));
  CHECK(distance(p.position, {0, 0, -0.12}) < 1e-12);
  CHECK(distance(p.orientation.rotate(Vec3::unit_z()), {0, 0, -1}) < 1e-12);
}

TEST_CASE("ik recovers reachable gantry poses") {
  Gen g(32);
  const auto chain = KinematicChain::gantry();
  for (int trial = 0; trial < 50; ++trial) {
    JointState s = JointState::zeros(6);
    for (Eigen::Index i = 0; i < 3; ++i) s.q(i) = g.uniform(-0.5, 0.5);
    for (Eigen::Index i = 3; i < 6; ++i) s.q(i) = g.uniform(-0.6, 0.6);
    const Pose target = forward_kinematics(chain, s);
    const IkResult r = solve_ik(chain, target, Eigen::VectorXd::Zero(6));
    CHECK(r.converged);
    const Pose got = forward_kinematics(chain, {r.q, Eigen::VectorXd::Zero(6)});
    CHECK(distance(got.position, target.position) < 1e-9);
    CHECK(angular_distance(got.orientation, target.orientation) < 1e-9);
  }
}

TEST_CASE("chain validation") {
  CHECK_THROWS_AS(KinematicChain({}), Error);
  try {
    KinematicChain({{JointType::Revolute, Vec3{1, 1, 0}, {}}});
    FAIL("non-unit axis accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidChain);
  }
  const auto arm = planar_two_link();
  try {
    forward_kinematics(arm, at({0}));
    FAIL("short q accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("chain json") {
  const auto chain = chain_from_json_text(R"({"joints": [
      {"type": "revolute", "axis": [0, 0, 1]},
      {"type": "revolute", "axis": [0, 0, 1],
       "origin": {"rotation_wxyz": [1, 0, 0, 0], "translation_m": [1, 0, 0]}}],
    "tool_offset": {"rotation_wxyz": [1, 0, 0, 0], "translation_m": [1, 0, 0]}})");
  CHECK(chain.dof() == 2);
  CHECK(distance(forward_kinematics(chain, at({std::numbers::pi / 2, 0})).position, {0, 2, 0}) < 1e-12);
  const auto bare = chain_from_json_text(R"([{"type": "prismatic", "axis": [0, 1, 0]}])");
  CHECK(distance(forward_kinematics(bare, at({0.2})).position, {0, 0.2, 0}) < 1e-15);
  CHECK_THROWS_AS(chain_from_json_text(R"([{"type": "ball", "axis": [0, 1, 0]}])"), Error);
  CHECK_THROWS_AS(chain_from_json_text("[1,"), Error);
}

}

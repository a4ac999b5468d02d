#include <doctest.h>

#include <Eigen/LU>
#include <filesystem>
#include <numbers>

#include "sono/csv.hpp"
#include "sono/registration.hpp"
#include "support.hpp"

using namespace sono;
using sono::testing::Gen;

namespace {

std::vector<Vec3> cube() {
  std::vector<Vec3> out;
  for (int i = 0; i < 8; ++i) out.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  return out;
}

PointCorrespondences mapped(const std::vector<Vec3>& v, const RigidTransform& t) {
  PointCorrespondences c;
  c.virtual_points = v;
  for (const auto& p : v) c.real_points.push_back(t.apply(p));
  return c;
}

double sse(const RigidTransform& t, const PointCorrespondences& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = distance(t.apply(c.virtual_points[i]), c.real_points[i]);
    s += d * d;
  }
  return s;
}

// Independent oracle: coordinate-wise refinement of the squared-residual
// objective over a rotation-vector and translation parametrization.
RigidTransform refine_by_search(const PointCorrespondences& c, RigidTransform start) {
  Vec3 rv = start.rotation.rotation_vector();
  Vec3 tr = start.translation;
  auto objective = [&](const Vec3& r, const Vec3& t) {
    return sse({Rotation::from_rotation_vector(r), t}, c);
  };
  double best = objective(rv, tr);
  for (double step = 1e-2; step > 1e-12; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int k = 0; k < 6; ++k) {
        for (const double sgn : {1.0, -1.0}) {
          Vec3 r = rv, t = tr;
          double* slot = k < 3 ? (&r.x + k) : (&t.x + (k - 3));
          *slot += sgn * step;
          const double v = objective(r, t);
          if (v < best) {
            best = v;
            rv = r;
            tr = t;
            improved = true;
          }
        }
      }
    }
  }
  return {Rotation::from_rotation_vector(rv), tr};
}

}  // namespace

TEST_SUITE("registration") {

TEST_CASE("identity and pure translation") {
  const auto r0 = kabsch_solve(mapped(cube(), RigidTransform::identity()));
  CHECK(r0.rms_residual < 1e-12);
  CHECK(r0.transform.rotation.angle() < 1e-12);
  const auto r1 = kabsch_solve(mapped(cube(), RigidTransform::from_translation({1, 2, 3})));
  CHECK(distance(r1.transform.translation, {1, 2, 3}) < 1e-12);
  CHECK(r1.transform.rotation.angle() < 1e-12);
}

TEST_CASE("rotZ(90) recovered from 8 random points") {
  Gen g(21);
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(g.vec3());
  const Rotation rz = Rotation::from_axis_angle(Vec3::unit_z(), std::numbers::pi / 2);
  const auto r = kabsch_solve(mapped(pts, RigidTransform::from_rotation(rz)));
  CHECK(angular_distance(r.transform.rotation, rz) < 1e-9);
}

TEST_CASE("random rigid transforms are recovered exactly") {
  Gen g(22);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> pts;
    const int n = g.integer(3, 12);
    for (int i = 0; i < n; ++i) pts.push_back(g.vec3());
    const RigidTransform t{g.rotation(), g.vec3(5.0)};
    const auto r = kabsch_solve(mapped(pts, t));
    CHECK(angular_distance(r.transform.rotation, t.rotation) < 1e-9);
    CHECK(distance(r.transform.translation, t.translation) < 1e-9);
  }
}

TEST_CASE("mirrored point sets still give a proper rotation") {
  Gen g(23);
  for (int trial = 0; trial < 100; ++trial) {
    PointCorrespondences c;
    for (int i = 0; i < 8; ++i) {
      const Vec3 p = g.vec3();
      c.virtual_points.push_back(p);
      c.real_points.push_back({-p.x, p.y, p.z});
    }
    const auto r = kabsch_solve(c);
    CHECK(r.transform.rotation.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("noisy solution matches the search oracle and is locally optimal") {
  Gen g(24);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(g.vec3(0.3));
    const RigidTransform t{g.rotation(), g.vec3(0.5)};
    auto c = mapped(pts, t);
    for (auto& p : c.real_points) p = p + Vec3{g.normal(0, 1e-3), g.normal(0, 1e-3), g.normal(0, 1e-3)};
    const auto r = kabsch_solve(c);
    const auto oracle = refine_by_search(c, t);
    const double rms_oracle = registration_residual(oracle, c).rms;
    CHECK(std::abs(r.rms_residual - rms_oracle) < 1e-6);
    CHECK(r.rms_residual <= rms_oracle + 1e-12);

    const double base = sse(r.transform, c);
    for (const Vec3 axis : {Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()}) {
      for (const double s : {1.0, -1.0}) {
        const Rotation dr = Rotation::from_axis_angle(axis, s * 1e-3);
        CHECK(sse({dr * r.transform.rotation, r.transform.translation}, c) >= base);
        CHECK(sse({r.transform.rotation, r.transform.translation + s * 1e-4 * axis}, c) >= base);
      }
    }
    CHECK(r.rms_residual <= registration_residual(RigidTransform::identity(), c).rms);
  }
}

TEST_CASE("solution does not depend on correspondence order") {
  Gen g(25);
  std::vector<Vec3> pts;
  for (int i = 0; i < 9; ++i) pts.push_back(g.vec3());
  const RigidTransform t{g.rotation(), g.vec3()};
  auto c = mapped(pts, t);
  for (auto& p : c.real_points) p = p + Vec3{g.normal(0, 1e-3), g.normal(0, 1e-3), g.normal(0, 1e-3)};
  const auto a = kabsch_solve(c);
  PointCorrespondences shuffled;
  for (std::size_t i = c.size(); i-- > 0;) {
    shuffled.virtual_points.push_back(c.virtual_points[i]);
    shuffled.real_points.push_back(c.real_points[i]);
  }
  const auto b = kabsch_solve(shuffled);
  CHECK(angular_distance(a.transform.rotation, b.transform.rotation) < 1e-9);
  CHECK(distance(a.transform.translation, b.transform.translation) < 1e-9);
}

TEST_CASE("residual report") {
  const auto c = mapped(cube(), RigidTransform::from_translation({0, 0, 1}));
  const auto rep = registration_residual(RigidTransform::identity(), c);
  for (const double d : rep.per_point) CHECK(d == doctest::Approx(1.0));
  CHECK(rep.rms == doctest::Approx(1.0));
}

TEST_CASE("degenerate inputs are rejected") {
  PointCorrespondences two;
  two.virtual_points = {{0, 0, 0}, {1, 0, 0}};
  two.real_points = two.virtual_points;
  CHECK_THROWS_AS(kabsch_solve(two), Error);
  PointCorrespondences line;
  line.virtual_points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  line.real_points = line.virtual_points;
  try {
    kabsch_solve(line);
    FAIL("collinear points accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateConfiguration);
  }
  PointCorrespondences ragged;
  ragged.virtual_points = cube();
  ragged.real_points = {{0, 0, 0}};
  CHECK_THROWS_AS(kabsch_solve(ragged), Error);
}

TEST_CASE("anchor files round-trip and reject damage") {
  Gen g(26);
  const auto c = mapped(cube(), {Rotation::from_axis_angle(Vec3::unit_z(), std::numbers::pi / 2), {0.1, 0.2, 0.3}});
  AnchorRecord a{kabsch_solve(c).transform, "bench", parse_rfc3339("2024-05-01T12:30:00Z"), c};
  const auto dir = std::filesystem::temp_directory_path() / "sono_anchor_test";
  std::filesystem::create_directories(dir);
  save_anchor(a, dir / "a.json");
  CHECK(load_anchor(dir / "a.json") == a);

  AnchorRecord id{RigidTransform::identity(), "id", parse_rfc3339("2024-01-01T00:00:00+02:00"), {}};
  CHECK(anchor_from_json_text(anchor_to_json_text(id)) == id);
  CHECK(format_rfc3339(id.created_at) == "2023-12-31T22:00:00Z");

  const std::string text = anchor_to_json_text(a);
  try {
    anchor_from_json_text(text.substr(0, text.size() / 2));
    FAIL("truncated anchor accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  std::string bumped = text;
  bumped.replace(bumped.find("\"version\": 1"), 12, "\"version\": 2");
  try {
    anchor_from_json_text(bumped);
    FAIL("wrong version accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
  }
}

TEST_CASE("point capture csv") {
  const auto c = parse_point_capture("vx,vy,vz,rx,ry,rz\n0,0,0,1,2,3\n1,0,0,2,2,3\n0,1,0,1,3,3\n");
  CHECK(c.size() == 3);
  CHECK(c.real_points[1] == Vec3{2, 2, 3});
  try {
    parse_point_capture("vx,vy,vz,rx,ry,rz\n0,0,0,1,2,3\n1,0,x,2,2,3\n");
    FAIL("bad number accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

}

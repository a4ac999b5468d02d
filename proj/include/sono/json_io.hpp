#pragma once

// nlohmann/json conversions for the spatial vocabulary. Doubles are written
// in shortest round-trip form, so save/load reproduces values bit-exactly.

#include <json.hpp>
#include <string>

#include "sono/error.hpp"
#include "sono/simulation.hpp"
#include "sono/spatial.hpp"

namespace sono {

inline nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const nlohmann::json& j, const char* what = "vector") {
  if (!j.is_array() || j.size() != 3) {
    fail(ErrorCode::ParseError, std::string(what) + ": expected array of 3 numbers");
  }
  for (const auto& e : j) {
    if (!e.is_number()) fail(ErrorCode::ParseError, std::string(what) + ": non-numeric entry");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json rotation_to_json(const Rotation& r) {
  return nlohmann::json::array({r.w(), r.x(), r.y(), r.z()});
}

inline Rotation rotation_from_json(const nlohmann::json& j, const char* what = "rotation_wxyz") {
  if (!j.is_array() || j.size() != 4) {
    fail(ErrorCode::ParseError, std::string(what) + ": expected array of 4 numbers");
  }
  for (const auto& e : j) {
    if (!e.is_number()) fail(ErrorCode::ParseError, std::string(what) + ": non-numeric entry");
  }
  try {
    return Rotation::from_wxyz(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                               j[3].get<double>());
  } catch (const Error& e) {
    fail(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

inline nlohmann::json transform_to_json(const RigidTransform& t) {
  return {{"rotation_wxyz", rotation_to_json(t.rotation)},
          {"translation_m", vec3_to_json(t.translation)}};
}

inline RigidTransform transform_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "transform: expected object");
  RigidTransform t;
  if (j.contains("rotation_wxyz")) t.rotation = rotation_from_json(j.at("rotation_wxyz"));
  if (j.contains("translation_m")) t.translation = vec3_from_json(j.at("translation_m"), "translation_m");
  return t;
}

inline nlohmann::json pose_to_json(const Pose& p) {
  return {{"position", vec3_to_json(p.position)},
          {"orientation_wxyz", rotation_to_json(p.orientation)}};
}

inline Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "pose: expected object");
  Pose p;
  if (j.contains("position")) p.position = vec3_from_json(j.at("position"), "position");
  if (j.contains("orientation_wxyz")) {
    p.orientation = rotation_from_json(j.at("orientation_wxyz"), "orientation_wxyz");
  }
  return p;
}

inline nlohmann::json scan_path_to_json(const ScanPath& p) {
  return {{"start_pose", pose_to_json(p.start_pose)},
          {"end_pose", pose_to_json(p.end_pose)},
          {"speed", p.speed}};
}

inline ScanPath scan_path_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "scan path: expected object");
  ScanPath p;
  try {
    p.start_pose = pose_from_json(j.at("start_pose"));
    p.end_pose = pose_from_json(j.at("end_pose"));
    if (j.contains("speed")) p.speed = j.at("speed").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("scan path: ") + e.what());
  }
  if (!(p.speed > 0.0)) fail(ErrorCode::ParseError, "scan path: speed must be positive");
  return p;
}

}  // namespace sono

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sono/error.hpp"
#include "sono/kinematics.hpp"
#include "sono/protocol.hpp"
#include "sono/spatial.hpp"

// Seeded generators shared by the property tests.
namespace sono::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Vec3 vec3(double half_width = 1.0) {
    return {uniform(-half_width, half_width), uniform(-half_width, half_width),
            uniform(-half_width, half_width)};
  }

  Vec3 unit_vec3() {
    while (true) {
      const Vec3 v{normal(), normal(), normal()};
      if (v.norm() > 1e-3) return v.normalized();
    }
  }

  // Uniform over SO(3) via a normalized Gaussian quaternion.
  Rotation rotation() {
    while (true) {
      const double w = normal(), x = normal(), y = normal(), z = normal();
      const double n = std::sqrt(w * w + x * x + y * y + z * z);
      if (n > 1e-3) return Rotation::from_wxyz(w / n, x / n, y / n, z / n);
    }
  }

  std::string word(int max_len = 8) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
    std::string s;
    const int n = integer(1, max_len);
    for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(integer(0, 25))];
    return s;
  }

  // Mixed revolute/prismatic chain with random offsets and unit axes.
  KinematicChain chain(int max_joints) {
    std::vector<Joint> joints;
    const int n = integer(1, max_joints);
    for (int i = 0; i < n; ++i) {
      joints.push_back({coin() || coin() ? JointType::Revolute : JointType::Prismatic, unit_vec3(),
                        RigidTransform{rotation(), vec3(0.5)}});
    }
    return KinematicChain(std::move(joints), RigidTransform{rotation(), vec3(0.2)});
  }

  Pose pose() { return {vec3(2.0), rotation()}; }

  // Any protocol message with its invariants satisfied.
  protocol::Message message() {
    using namespace protocol;
    switch (integer(0, 4)) {
      case 0:
        return RobotStateMsg{uniform(0, 3600), pose(), uniform(0, 25),
                             kAllPhases[static_cast<std::size_t>(integer(0, 5))]};
      case 1: {
        CommandMsg c{static_cast<CommandKind>(integer(0, 2)), std::nullopt};
        if (c.cmd == CommandKind::SetPath) c.path = ScanPath{pose(), pose(), uniform(0.001, 0.1)};
        return c;
      }
      case 2: {
        std::string text = word();
        for (int i = integer(0, 6); i > 0; --i) text += (coin() ? " " : ", ") + word();
        if (coin()) text += " \u00e9\"quoted\"";
        return AgentEventMsg{{coin() ? Speaker::Patient : Speaker::Agent, text, uniform(0, 100)}};
      }
      case 3: {
        UltrasoundFrameMsg f;
        f.seq = static_cast<std::uint32_t>(integer(0, 1 << 30));
        f.t_ms = static_cast<std::uint32_t>(integer(0, 1 << 30));
        f.width = static_cast<std::uint32_t>(integer(0, 24));
        f.height = static_cast<std::uint32_t>(integer(0, 24));
        f.pixels.resize(std::size_t{f.width} * f.height);
        for (auto& px : f.pixels) px = static_cast<std::uint8_t>(integer(0, 255));
        return f;
      }
      default: return HeartbeatMsg{};
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace sono::testing

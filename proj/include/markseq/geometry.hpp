#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace markseq {

// Pinhole model of a rectified camera. u runs along image columns (+x),
// v along rows (+y); the optical axis is camera-frame +z.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool contains(double u, double v) const {
    return u >= 0.0 && u < static_cast<double>(width) && v >= 0.0 &&
           v < static_cast<double>(height);
  }
  void validate() const;
};

// World-from-camera transform.
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  void validate() const;
};

// Road-surface plane: points p with dot(normal, p) == offset.
struct GroundPlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;

  void validate() const;
  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) - offset; }
};

// Canonical marking class token: lowercase, trimmed, no inner whitespace.
class MarkingLabel {
 public:
  MarkingLabel() = default;

  // Trims outer whitespace and lowercases; throws std::invalid_argument when
  // the result is empty or still contains whitespace.
  static MarkingLabel canonical(std::string_view raw);

  const std::string& token() const { return token_; }
  bool empty() const { return token_.empty(); }

  friend bool operator==(const MarkingLabel& a, const MarkingLabel& b) = default;
  friend auto operator<=>(const MarkingLabel& a, const MarkingLabel& b) = default;

 private:
  explicit MarkingLabel(std::string token) : token_(std::move(token)) {}

  std::string token_;
};

// One detector output: a labeled bounding-box centroid in image space.
struct Detection {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  MarkingLabel label;
  double u = 0.0;
  double v = 0.0;
};

// A detection lifted onto the road plane.
struct Observation3D {
  std::int64_t frame_id = 0;
  MarkingLabel label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

// Back-projects a pixel through the camera centre into a world-frame ray.
// Throws std::invalid_argument if the pixel lies outside the image.
Ray pixel_ray(const CameraIntrinsics& intrinsics, const CameraPose& pose, double u, double v);

// Forward ray-plane intersection; empty when the ray is parallel to the plane
// or the hit would lie at t <= 0 (behind the camera).
std::optional<Eigen::Vector3d> intersect_ground(const Ray& ray, const GroundPlane& plane);

// Lifts a detection centroid onto the road plane. Empty when the centroid ray
// misses the ground (at or above the horizon); callers count and drop those.
std::optional<Observation3D> localize_detection(const Detection& detection,
                                                const CameraPose& pose,
                                                const CameraIntrinsics& intrinsics,
                                                const GroundPlane& plane);

}  // namespace markseq

#include "markseq/geometry.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace markseq {

namespace {

constexpr double kParallelTol = 1e-12;
constexpr double kUnitNormTol = 1e-9;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) fail("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width)) fail("intrinsics: cx outside [0, width)");
  if (!(cy >= 0.0 && cy < height)) fail("intrinsics: cy outside [0, height)");
}

void CameraPose::validate() const {
  if (std::abs(orientation.norm() - 1.0) > kUnitNormTol)
    fail("pose: orientation quaternion is not unit-norm");
}

void GroundPlane::validate() const {
  if (std::abs(normal.norm() - 1.0) > kUnitNormTol)
    fail("plane: normal is not unit-norm");
}

MarkingLabel MarkingLabel::canonical(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
  if (begin == end) fail("marking label: empty token");

  std::string token;
  token.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (std::isspace(c)) fail("marking label: internal whitespace in '" + std::string(raw) + "'");
    token.push_back(static_cast<char>(std::tolower(c)));
  }
  return MarkingLabel(std::move(token));
}

Ray pixel_ray(const CameraIntrinsics& intrinsics, const CameraPose& pose, double u, double v) {
  if (!intrinsics.contains(u, v)) fail("pixel_ray: pixel outside image bounds");
  const Eigen::Vector3d dir_cam((u - intrinsics.cx) / intrinsics.fx,
                                (v - intrinsics.cy) / intrinsics.fy, 1.0);
  return Ray{pose.position, (pose.orientation * dir_cam).normalized()};
}

std::optional<Eigen::Vector3d> intersect_ground(const Ray& ray, const GroundPlane& plane) {
  const double denom = plane.normal.dot(ray.direction);
  if (std::abs(denom) < kParallelTol) return std::nullopt;
  const double t = (plane.offset - plane.normal.dot(ray.origin)) / denom;
  if (t <= 0.0) return std::nullopt;
  return ray.origin + t * ray.direction;
}

std::optional<Observation3D> localize_detection(const Detection& detection,
                                                const CameraPose& pose,
                                                const CameraIntrinsics& intrinsics,
                                                const GroundPlane& plane) {
  const Ray ray = pixel_ray(intrinsics, pose, detection.u, detection.v);
  const auto hit = intersect_ground(ray, plane);
  if (!hit) return std::nullopt;
  return Observation3D{detection.frame_id, detection.label, *hit};
}

}  // namespace markseq

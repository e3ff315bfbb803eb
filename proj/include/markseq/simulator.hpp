#pragma once

#include <cstdint>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "markseq/matcher.hpp"
#include "markseq/sequence_db.hpp"

namespace markseq {

// Synthetic driving sessions standing in for real drives: a route polyline,
// lanes carrying labeled markings, optional re-driven stretches, and a noisy
// forward-looking detector. Everything is deterministic in (spec, seed).

struct WorldSpec {
  std::uint64_t seed = 0;
  std::vector<Eigen::Vector2d> route;  // waypoints (m); arc-length parameterized
  int lane_count = 1;
  double lane_spacing = 3.5;
  double marking_spacing_mean = 8.0;
  double marking_spacing_jitter = 2.0;
  std::vector<MarkingLabel> label_alphabet;

  // A stretch [start_arc, end_arc] of the base route that is driven again.
  // Re-drives are appended after the base traversal in list order;
  // revisit_arc records the planned trajectory arc at which the re-drive
  // starts (0 = derive from the plan).
  struct LoopSegment {
    double start_arc = 0.0;
    double end_arc = 0.0;
    double revisit_arc = 0.0;
  };
  std::vector<LoopSegment> loop_segments;

  double frame_step = 1.0;  // metres of travel between consecutive frames

  void validate() const;
};

struct NoiseSpec {
  double position_sigma = 0.0;   // isotropic in-plane ground-point noise (m)
  double miss_prob = 0.0;        // per visible marking per frame
  double label_flip_prob = 0.0;  // misclassification probability
  double clutter_rate = 0.0;     // spurious detections per frame (Poisson mean)

  void validate() const;
};

// Forward-facing rig on the vehicle: camera height and downward pitch, plus
// the ground trapezoid it effectively observes.
struct MountGeometry {
  double height = 1.5;             // m above the road plane
  double pitch_down = 0.2094395102393195;  // rad (12 deg)
  double view_near = 4.0;          // m ahead
  double view_far = 25.0;          // m ahead
  double view_half_lanes = 1.5;    // lateral half-width in lane spacings

  void validate() const;
};

struct CameraRig {
  CameraIntrinsics intrinsics;
  MountGeometry mount;
};

struct TrueMarking {
  std::int64_t id = -1;
  MarkingLabel label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int lane = 0;
  double arc = 0.0;  // base-route arc length of the marking
};

// Arc-length parameterization of a 2D polyline.
class RoutePath {
 public:
  explicit RoutePath(std::vector<Eigen::Vector2d> points);

  double length() const { return cumulative_.back(); }
  Eigen::Vector2d point_at(double s) const;
  Eigen::Vector2d tangent_at(double s) const;

 private:
  std::size_t segment_of(double s) const;

  std::vector<Eigen::Vector2d> points_;
  std::vector<double> cumulative_;
};

struct World {
  WorldSpec spec;
  RoutePath path;
  std::vector<TrueMarking> markings;
  // Driven spans of base-route arc: the full route, then each re-drive.
  std::vector<std::pair<double, double>> drive_spans;

  double plan_length() const;
};

World generate_world(const WorldSpec& spec);

enum class SensorMode {
  kPixels,    // emit image-space detections; ingestion goes through geometry
  kGround3d,  // emit road-plane observations directly
};

struct LoggedDetection {
  std::int64_t frame_id = 0;
  double t = 0.0;
  MarkingLabel label;
  double u = 0.0;  // valid in pixel mode
  double v = 0.0;
  Eigen::Vector3d ground_point = Eigen::Vector3d::Zero();  // noisy road-plane point
  std::int64_t truth_link = -1;  // marking id, or unique negative id for clutter
};

struct SessionFrame {
  std::int64_t frame_id = 0;
  double t = 0.0;
  CameraPose pose;
  std::vector<LoggedDetection> detections;
};

struct SessionLog {
  SensorMode mode = SensorMode::kGround3d;
  CameraIntrinsics intrinsics;
  GroundPlane plane;
  std::vector<SessionFrame> frames;
  std::vector<TrueMarking> truth_markings;
  std::vector<std::pair<std::int64_t, std::int64_t>> visibility;  // (frame, marking), pre-noise
};

// Camera pose of a rig mounted on a vehicle at `position2` heading along
// `tangent2` on the z=0 road plane.
CameraPose mounted_pose(const Eigen::Vector2d& position2, const Eigen::Vector2d& tangent2,
                        const MountGeometry& mount);

// Drives the world's plan once and records what the detector would report.
// `seed_salt` decouples the noise streams of repeated drives of one world.
SessionLog simulate_drive(const World& world, const NoiseSpec& noise, const CameraRig& rig,
                          SensorMode mode, std::uint64_t seed_salt = 0);

// Truth pairs for scoring: an admissible pair of complete sequences is a true
// place match iff both sequences resolve, via the per-instance truth links
// collected during ingestion, to the same ordered tuple of physical marking
// ids. Clutter links are unique, so clutter can never form a true pair.
std::set<std::pair<std::int64_t, std::int64_t>> ground_truth_pairs(
    const DatabaseSnapshot& snapshot,
    const std::unordered_map<std::int64_t, std::int64_t>& instance_to_marking,
    const EngineConfig& config, MatchMode mode);

}  // namespace markseq

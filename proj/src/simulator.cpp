#include "markseq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace markseq {

namespace {

constexpr double kFrameDt = 0.1;  // nominal 10 fps

double lane_offset(int lane, int lane_count, double lane_spacing) {
  return (static_cast<double>(lane) - (static_cast<double>(lane_count) - 1.0) / 2.0) *
         lane_spacing;
}

Eigen::Vector2d right_of(const Eigen::Vector2d& tangent) {
  return Eigen::Vector2d(tangent.y(), -tangent.x());
}

}  // namespace

void WorldSpec::validate() const {
  if (route.size() < 2) throw std::invalid_argument("world: route needs at least two waypoints");
  for (std::size_t i = 0; i + 1 < route.size(); ++i)
    if ((route[i + 1] - route[i]).norm() <= 1e-12)
      throw std::invalid_argument("world: consecutive route waypoints must be distinct");
  if (lane_count < 1) throw std::invalid_argument("world: lane_count must be >= 1");
  if (!(lane_spacing > 0.0)) throw std::invalid_argument("world: lane_spacing must be positive");
  if (!(marking_spacing_mean > 0.0))
    throw std::invalid_argument("world: marking_spacing_mean must be positive");
  if (marking_spacing_jitter < 0.0 || marking_spacing_jitter >= marking_spacing_mean)
    throw std::invalid_argument("world: marking_spacing_jitter must be in [0, spacing_mean)");
  if (label_alphabet.empty()) throw std::invalid_argument("world: label_alphabet is empty");
  if (!(frame_step > 0.0)) throw std::invalid_argument("world: frame_step must be positive");

  double route_length = 0.0;
  for (std::size_t i = 0; i + 1 < route.size(); ++i)
    route_length += (route[i + 1] - route[i]).norm();
  for (const auto& seg : loop_segments) {
    if (!(seg.start_arc >= 0.0 && seg.start_arc < seg.end_arc &&
          seg.end_arc <= route_length + 1e-9))
      throw std::invalid_argument("world: loop segment outside route bounds");
  }
}

void NoiseSpec::validate() const {
  if (position_sigma < 0.0) throw std::invalid_argument("noise: position_sigma must be >= 0");
  if (miss_prob < 0.0 || miss_prob > 1.0)
    throw std::invalid_argument("noise: miss_prob must be in [0, 1]");
  if (label_flip_prob < 0.0 || label_flip_prob > 1.0)
    throw std::invalid_argument("noise: label_flip_prob must be in [0, 1]");
  if (clutter_rate < 0.0) throw std::invalid_argument("noise: clutter_rate must be >= 0");
}

void MountGeometry::validate() const {
  if (!(height > 0.0)) throw std::invalid_argument("mount: height must be positive");
  if (!(pitch_down > 0.0) || pitch_down >= M_PI / 2.0)
    throw std::invalid_argument("mount: pitch_down must be in (0, pi/2)");
  if (!(view_near > 0.0) || !(view_far > view_near))
    throw std::invalid_argument("mount: need 0 < view_near < view_far");
  if (!(view_half_lanes > 0.0)) throw std::invalid_argument("mount: view_half_lanes must be > 0");
}

RoutePath::RoutePath(std::vector<Eigen::Vector2d> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("route: needs at least two waypoints");
  cumulative_.resize(points_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i)
    cumulative_[i] = cumulative_[i - 1] + (points_[i] - points_[i - 1]).norm();
}

std::size_t RoutePath::segment_of(double s) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
  if (idx == 0) return 0;
  if (idx >= points_.size()) return points_.size() - 2;
  return idx - 1;
}

Eigen::Vector2d RoutePath::point_at(double s) const {
  const double clamped = std::clamp(s, 0.0, length());
  const std::size_t i = segment_of(clamped);
  const double seg_len = cumulative_[i + 1] - cumulative_[i];
  const double alpha = seg_len > 0.0 ? (clamped - cumulative_[i]) / seg_len : 0.0;
  return points_[i] + alpha * (points_[i + 1] - points_[i]);
}

Eigen::Vector2d RoutePath::tangent_at(double s) const {
  const double clamped = std::clamp(s, 0.0, length());
  const std::size_t i = segment_of(clamped);
  return (points_[i + 1] - points_[i]).normalized();
}

double World::plan_length() const {
  double total = 0.0;
  for (const auto& [a, b] : drive_spans) total += b - a;
  return total;
}

World generate_world(const WorldSpec& spec) {
  spec.validate();

  RoutePath path(spec.route);
  std::mt19937_64 rng(spec.seed);

  std::vector<TrueMarking> markings;
  std::uniform_real_distribution<double> spacing_dist(
      spec.marking_spacing_mean - spec.marking_spacing_jitter,
      spec.marking_spacing_mean + spec.marking_spacing_jitter);
  std::uniform_int_distribution<std::size_t> label_dist(0, spec.label_alphabet.size() - 1);

  std::int64_t next_id = 0;
  for (int lane = 0; lane < spec.lane_count; ++lane) {
    const double offset = lane_offset(lane, spec.lane_count, spec.lane_spacing);
    double s = 0.0;
    while (s <= path.length() + 1e-9) {
      const Eigen::Vector2d p2 =
          path.point_at(s) + right_of(path.tangent_at(s)) * offset;
      TrueMarking m;
      m.id = next_id++;
      m.label = spec.label_alphabet[label_dist(rng)];
      m.position = Eigen::Vector3d(p2.x(), p2.y(), 0.0);
      m.lane = lane;
      m.arc = s;
      markings.push_back(std::move(m));
      s += spec.marking_spacing_jitter > 0.0 ? spacing_dist(rng) : spec.marking_spacing_mean;
    }
  }

  std::vector<std::pair<double, double>> spans;
  spans.emplace_back(0.0, path.length());
  for (const auto& seg : spec.loop_segments) spans.emplace_back(seg.start_arc, seg.end_arc);

  return World{spec, std::move(path), std::move(markings), std::move(spans)};
}

CameraPose mounted_pose(const Eigen::Vector2d& position2, const Eigen::Vector2d& tangent2,
                        const MountGeometry& mount) {
  const Eigen::Vector3d forward(tangent2.x(), tangent2.y(), 0.0);
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();

  // Optical axis: forward pitched down; image x right of travel, image y down.
  const Eigen::Vector3d cam_z =
      (forward * std::cos(mount.pitch_down) - up * std::sin(mount.pitch_down)).normalized();
  const Eigen::Vector3d cam_x = forward.cross(up).normalized();
  const Eigen::Vector3d cam_y = cam_z.cross(cam_x).normalized();

  Eigen::Matrix3d rot;
  rot.col(0) = cam_x;
  rot.col(1) = cam_y;
  rot.col(2) = cam_z;

  CameraPose pose;
  pose.position = Eigen::Vector3d(position2.x(), position2.y(), mount.height);
  pose.orientation = Eigen::Quaterniond(rot).normalized();
  return pose;
}

SessionLog simulate_drive(const World& world, const NoiseSpec& noise, const CameraRig& rig,
                          SensorMode mode, std::uint64_t seed_salt) {
  noise.validate();
  rig.intrinsics.validate();
  rig.mount.validate();

  const WorldSpec& spec = world.spec;
  std::mt19937_64 rng(spec.seed ^ (0x5851f42d4c957f2dULL + seed_salt));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label_dist(0, spec.label_alphabet.size() - 1);

  SessionLog log;
  log.mode = mode;
  log.intrinsics = rig.intrinsics;
  log.plane = GroundPlane{};
  log.truth_markings = world.markings;

  const double lateral_limit = rig.mount.view_half_lanes * spec.lane_spacing;
  std::int64_t next_clutter_link = -1;

  // Span boundaries in plan-arc coordinates.
  std::vector<double> span_starts;
  double plan_total = 0.0;
  for (const auto& [a, b] : world.drive_spans) {
    span_starts.push_back(plan_total);
    plan_total += b - a;
  }

  const std::int64_t frame_count =
      static_cast<std::int64_t>(std::floor(plan_total / spec.frame_step + 1e-9)) + 1;

  for (std::int64_t frame = 0; frame < frame_count; ++frame) {
    const double plan_arc = static_cast<double>(frame) * spec.frame_step;

    std::size_t span = 0;
    while (span + 1 < world.drive_spans.size() && plan_arc >= span_starts[span + 1] - 1e-9)
      ++span;
    const double route_arc =
        world.drive_spans[span].first + (plan_arc - span_starts[span]);

    const Eigen::Vector2d vehicle2 = world.path.point_at(route_arc);
    const Eigen::Vector2d tangent2 = world.path.tangent_at(route_arc);
    const Eigen::Vector2d right2 = right_of(tangent2);

    SessionFrame out;
    out.frame_id = frame;
    out.t = static_cast<double>(frame) * kFrameDt;
    out.pose = mounted_pose(vehicle2, tangent2, rig.mount);

    for (const auto& marking : world.markings) {
      const Eigen::Vector2d delta(marking.position.x() - vehicle2.x(),
                                  marking.position.y() - vehicle2.y());
      const double ahead = delta.dot(tangent2);
      const double lateral = delta.dot(right2);
      if (ahead < rig.mount.view_near || ahead > rig.mount.view_far) continue;
      if (std::abs(lateral) > lateral_limit) continue;

      log.visibility.emplace_back(frame, marking.id);

      if (noise.miss_prob > 0.0 && unit(rng) < noise.miss_prob) continue;

      MarkingLabel label = marking.label;
      if (noise.label_flip_prob > 0.0 && spec.label_alphabet.size() > 1 &&
          unit(rng) < noise.label_flip_prob) {
        std::size_t pick = label_dist(rng);
        while (spec.label_alphabet[pick] == marking.label) pick = label_dist(rng);
        label = spec.label_alphabet[pick];
      }

      Eigen::Vector3d point = marking.position;
      if (noise.position_sigma > 0.0) {
        point.x() += gauss(rng) * noise.position_sigma;
        point.y() += gauss(rng) * noise.position_sigma;
      }

      LoggedDetection det;
      det.frame_id = frame;
      det.t = out.t;
      det.label = label;
      det.ground_point = point;
      det.truth_link = marking.id;

      if (mode == SensorMode::kPixels) {
        const Eigen::Vector3d cam_point =
            out.pose.orientation.conjugate() * (point - out.pose.position);
        if (cam_point.z() <= 1e-9) continue;
        det.u = rig.intrinsics.fx * cam_point.x() / cam_point.z() + rig.intrinsics.cx;
        det.v = rig.intrinsics.fy * cam_point.y() / cam_point.z() + rig.intrinsics.cy;
        if (!rig.intrinsics.contains(det.u, det.v)) continue;
      }
      out.detections.push_back(std::move(det));
    }

    if (noise.clutter_rate > 0.0) {
      std::poisson_distribution<int> clutter_count(noise.clutter_rate);
      const int extras = clutter_count(rng);
      for (int c = 0; c < extras; ++c) {
        const double ahead =
            rig.mount.view_near + unit(rng) * (rig.mount.view_far - rig.mount.view_near);
        const double lateral = (2.0 * unit(rng) - 1.0) * lateral_limit;
        const Eigen::Vector2d p2 = vehicle2 + ahead * tangent2 + lateral * right2;

        LoggedDetection det;
        det.frame_id = frame;
        det.t = out.t;
        det.label = spec.label_alphabet[label_dist(rng)];
        det.ground_point = Eigen::Vector3d(p2.x(), p2.y(), 0.0);
        det.truth_link = next_clutter_link--;

        if (mode == SensorMode::kPixels) {
          const Eigen::Vector3d cam_point =
              out.pose.orientation.conjugate() * (det.ground_point - out.pose.position);
          if (cam_point.z() <= 1e-9) continue;
          det.u = rig.intrinsics.fx * cam_point.x() / cam_point.z() + rig.intrinsics.cx;
          det.v = rig.intrinsics.fy * cam_point.y() / cam_point.z() + rig.intrinsics.cy;
          if (!rig.intrinsics.contains(det.u, det.v)) continue;
        }
        out.detections.push_back(std::move(det));
      }
    }

    log.frames.push_back(std::move(out));
  }

  return log;
}

std::set<std::pair<std::int64_t, std::int64_t>> ground_truth_pairs(
    const DatabaseSnapshot& snapshot,
    const std::unordered_map<std::int64_t, std::int64_t>& instance_to_marking,
    const EngineConfig& config, MatchMode mode) {
  const auto& sequences = snapshot.sequences();

  auto tuple_of = [&](const MarkingSequence& seq) {
    std::vector<std::int64_t> tuple;
    tuple.reserve(seq.entries.size());
    for (const auto& e : seq.entries) {
      const auto it = instance_to_marking.find(e.instance_id);
      // Unattributed instances get a unique sentinel so they never pair up.
      tuple.push_back(it == instance_to_marking.end()
                          ? std::numeric_limits<std::int64_t>::min() + e.instance_id
                          : it->second);
    }
    return tuple;
  };

  std::vector<std::vector<std::int64_t>> tuples;
  tuples.reserve(sequences.size());
  for (const auto& seq : sequences) tuples.push_back(tuple_of(seq));

  std::set<std::pair<std::int64_t, std::int64_t>> truth;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    for (std::size_t j = i + 1; j < sequences.size(); ++j) {
      if (!admissible_pair(sequences[i], sequences[j], config, mode)) continue;
      bool clean = true;
      for (const std::int64_t id : tuples[i])
        if (id < 0) { clean = false; break; }
      if (!clean) continue;
      if (tuples[i] != tuples[j]) continue;
      truth.emplace(std::min(sequences[i].sequence_id, sequences[j].sequence_id),
                    std::max(sequences[i].sequence_id, sequences[j].sequence_id));
    }
  }
  return truth;
}

}  // namespace markseq

#include "markseq/sequence_db.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace markseq {

namespace {

constexpr double kDirectionTol = 1e-12;

std::vector<double> gaps_from_entries(const std::vector<SequenceEntry>& entries) {
  std::vector<double> gaps;
  gaps.reserve(entries.size() > 0 ? entries.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < entries.size(); ++i)
    gaps.push_back((entries[i + 1].position - entries[i].position).norm());
  return gaps;
}

}  // namespace

void EngineConfig::validate() const {
  if (k < 2) throw std::invalid_argument("config: k must be >= 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be positive");
  if (!(merge_radius > 0.0)) throw std::invalid_argument("config: merge_radius must be positive");
  if (!(lane_width > 0.0)) throw std::invalid_argument("config: lane_width must be positive");
  if (min_separation_frames <= 0)
    throw std::invalid_argument("config: min_separation_frames must be positive");
  if (!(min_separation_distance > 0.0))
    throw std::invalid_argument("config: min_separation_distance must be positive");
}

std::vector<MarkingLabel> MarkingSequence::labels() const {
  std::vector<MarkingLabel> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.label);
  return out;
}

std::string MarkingSequence::signature_key() const {
  std::string key;
  for (const auto& e : entries) {
    key += e.label.token();
    key += '\x1f';
  }
  return key;
}

std::vector<double> sequence_gaps(const MarkingSequence& sequence) {
  if (sequence.entries.size() < 2)
    throw std::invalid_argument("sequence_gaps: sequence has fewer than two entries");
  return gaps_from_entries(sequence.entries);
}

DatabaseSnapshot::DatabaseSnapshot() : state_(std::make_shared<State>()) {}

DatabaseSnapshot::DatabaseSnapshot(std::uint64_t version, EngineConfig config,
                                   std::vector<MarkingSequence> sequences)
    : state_(std::make_shared<State>(State{version, config, std::move(sequences)})) {}

std::size_t SequenceDatabase::CellKeyHash::operator()(const CellKey& c) const {
  auto mix = [](std::uint64_t v) {
    v ^= v >> 33;
    v *= 0xff51afd7ed558ccdULL;
    v ^= v >> 33;
    return v;
  };
  std::uint64_t h = mix(static_cast<std::uint64_t>(c.x));
  h = mix(h ^ static_cast<std::uint64_t>(c.y) * 0x9e3779b97f4a7c15ULL);
  h = mix(h ^ static_cast<std::uint64_t>(c.z) * 0xc2b2ae3d27d4eb4fULL);
  return static_cast<std::size_t>(h);
}

SequenceDatabase::SequenceDatabase(EngineConfig config) : config_(config) {
  config_.validate();
}

int SequenceDatabase::begin_session() {
  ++session_;
  incomplete_.clear();
  tracks_extended_this_frame_.clear();
  current_frame_ = -1;
  has_camera_position_ = false;
  has_travel_direction_ = false;
  return session_;
}

void SequenceDatabase::advance_frame(std::int64_t frame_id) {
  if (frame_id < 0) throw std::invalid_argument("ingest: frame_id must be non-negative");
  if (frame_id < current_frame_)
    throw std::invalid_argument("ingest: out-of-order frame_id " + std::to_string(frame_id) +
                                " after " + std::to_string(current_frame_));
  if (frame_id > current_frame_) {
    current_frame_ = frame_id;
    tracks_extended_this_frame_.clear();
  }
}

void SequenceDatabase::update_motion(const CameraPose& pose) {
  if (has_camera_position_) {
    const Eigen::Vector3d delta = pose.position - last_camera_position_;
    const double len = delta.norm();
    arc_ += len;
    if (len > kDirectionTol) {
      travel_direction_ = delta / len;
      has_travel_direction_ = true;
    }
  }
  last_camera_position_ = pose.position;
  has_camera_position_ = true;
}

SequenceDatabase::CellKey SequenceDatabase::cell_of(const Eigen::Vector3d& p) const {
  const double cell = config_.merge_radius;
  return CellKey{static_cast<std::int64_t>(std::floor(p.x() / cell)),
                 static_cast<std::int64_t>(std::floor(p.y() / cell)),
                 static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

void SequenceDatabase::grid_insert(std::int64_t instance_id, const Eigen::Vector3d& p) {
  grid_[cell_of(p)].push_back(instance_id);
}

void SequenceDatabase::grid_move(std::int64_t instance_id, const Eigen::Vector3d& from,
                                 const Eigen::Vector3d& to) {
  const CellKey a = cell_of(from);
  const CellKey b = cell_of(to);
  if (a == b) return;
  auto& bucket = grid_[a];
  bucket.erase(std::remove(bucket.begin(), bucket.end(), instance_id), bucket.end());
  grid_[b].push_back(instance_id);
}

bool SequenceDatabase::same_pass(const MarkingInstance& instance, std::int64_t frame_id) const {
  // A revisit far enough away in both frames and traveled distance must form
  // new instances, otherwise loop closures could never produce new sequences.
  const bool frames_close = (frame_id - instance.last_frame) < config_.min_separation_frames;
  const bool arc_close = (arc_ - instance.last_arc) < config_.min_separation_distance;
  return frames_close || arc_close;
}

MergeResult SequenceDatabase::merge_observation(const Observation3D& observation) {
  advance_frame(observation.frame_id);

  const CellKey center = cell_of(observation.position);
  std::int64_t best = -1;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const auto it = grid_.find(CellKey{center.x + dx, center.y + dy, center.z + dz});
        if (it == grid_.end()) continue;
        for (const std::int64_t id : it->second) {
          const MarkingInstance& inst = instances_[static_cast<std::size_t>(id)];
          if (inst.session_id != session_) continue;
          if (inst.label != observation.label) continue;
          if ((inst.position - observation.position).norm() > config_.merge_radius) continue;
          if (!same_pass(inst, observation.frame_id)) continue;
          if (best < 0 || id < best) best = id;
        }
      }
    }
  }

  if (best >= 0) {
    MarkingInstance& inst = instances_[static_cast<std::size_t>(best)];
    const Eigen::Vector3d old_position = inst.position;
    inst.obs_count += 1;
    inst.position += (observation.position - inst.position) / static_cast<double>(inst.obs_count);
    inst.last_frame = std::max(inst.last_frame, observation.frame_id);
    inst.last_arc = arc_;
    grid_move(best, old_position, inst.position);
    return MergeResult{best, false};
  }

  MarkingInstance inst;
  inst.instance_id = static_cast<std::int64_t>(instances_.size());
  inst.label = observation.label;
  inst.position = observation.position;
  inst.first_frame = observation.frame_id;
  inst.last_frame = observation.frame_id;
  inst.obs_count = 1;
  inst.session_id = session_;
  inst.created_arc = arc_;
  inst.last_arc = arc_;
  instances_.push_back(inst);
  grid_insert(inst.instance_id, inst.position);
  return MergeResult{inst.instance_id, true};
}

std::int64_t SequenceDatabase::assign_track(std::int64_t instance_id) {
  MarkingInstance& inst = instances_.at(static_cast<std::size_t>(instance_id));
  if (inst.track_id >= 0)
    throw std::logic_error("assign_track: instance already assigned to a track");

  double best_lateral = std::numeric_limits<double>::infinity();
  double best_along = std::numeric_limits<double>::infinity();
  std::int64_t best_track = -1;
  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    const Track& track = tracks_[t];
    if (track.session_id != session_ || track.last_instance < 0) continue;
    const Eigen::Vector3d delta =
        inst.position - instances_[static_cast<std::size_t>(track.last_instance)].position;
    double lateral, along;
    if (has_travel_direction_) {
      along = std::abs(delta.dot(travel_direction_));
      lateral = (delta - delta.dot(travel_direction_) * travel_direction_).norm();
    } else {
      lateral = delta.norm();
      along = lateral;
    }
    if (lateral > config_.lane_width) continue;
    // Among laterally qualifying tracks prefer the one whose head is nearest
    // along the travel direction: that continues the lane's chain instead of
    // bouncing between stub tracks left over from frames that saw several
    // new markings at once. Ties fall back to lateral, then track id.
    if (best_track < 0 || along < best_along ||
        (along == best_along && lateral < best_lateral)) {
      best_along = along;
      best_lateral = lateral;
      best_track = static_cast<std::int64_t>(t);
    }
  }

  // Same-frame exclusivity: a second new instance landing on an already
  // extended track starts a fresh track instead.
  if (best_track >= 0 && tracks_extended_this_frame_.count(best_track) > 0) best_track = -1;

  if (best_track < 0) {
    best_track = static_cast<std::int64_t>(tracks_.size());
    tracks_.push_back(Track{-1, session_});
  }

  inst.track_id = best_track;
  tracks_[static_cast<std::size_t>(best_track)].last_instance = instance_id;
  tracks_extended_this_frame_.insert(best_track);
  return best_track;
}

SequenceEntry SequenceDatabase::capture_entry(const MarkingInstance& instance) const {
  return SequenceEntry{instance.instance_id, instance.label,     instance.position,
                       instance.first_frame, instance.last_frame, instance.created_arc};
}

void SequenceDatabase::grow_track(std::int64_t instance_id,
                                  std::vector<MarkingSequence>& completed_out) {
  const MarkingInstance& inst = instances_[static_cast<std::size_t>(instance_id)];
  auto& list = incomplete_[inst.track_id];

  for (auto& seq : list) {
    // Re-capture live instance state so gaps reflect the latest position means.
    for (auto& entry : seq.entries)
      entry = capture_entry(instances_[static_cast<std::size_t>(entry.instance_id)]);
    seq.entries.push_back(capture_entry(inst));
  }

  MarkingSequence singleton;
  singleton.session_id = session_;
  singleton.track_id = inst.track_id;
  singleton.entries.push_back(capture_entry(inst));
  list.push_back(std::move(singleton));

  auto first_done = std::stable_partition(
      list.begin(), list.end(),
      [this](const MarkingSequence& s) { return static_cast<int>(s.entries.size()) < config_.k; });
  for (auto it = first_done; it != list.end(); ++it) {
    MarkingSequence& seq = *it;
    seq.sequence_id = next_sequence_id_++;
    seq.gaps = gaps_from_entries(seq.entries);
    seq.frame_first = seq.entries.front().first_frame;
    seq.frame_last = 0;
    for (const auto& e : seq.entries) seq.frame_last = std::max(seq.frame_last, e.last_frame);
    seq.arc_first = seq.entries.front().created_arc;
    seq.arc_last = seq.entries.back().created_arc;
    complete_.push_back(seq);
    completed_out.push_back(std::move(seq));
  }
  list.erase(first_done, list.end());
}

std::optional<std::int64_t> SequenceDatabase::process_observation(
    const Observation3D& observation, std::vector<MarkingSequence>& completed_out) {
  const MergeResult merged = merge_observation(observation);
  if (merged.is_new) {
    assign_track(merged.instance_id);
    grow_track(merged.instance_id, completed_out);
  }
  return merged.instance_id;
}

IngestResult SequenceDatabase::ingest_observations(std::int64_t frame_id,
                                                   const std::vector<Observation3D>& observations,
                                                   const CameraPose& pose) {
  for (const auto& obs : observations)
    if (obs.frame_id != frame_id)
      throw std::invalid_argument("ingest: observations must all share the call's frame_id");
  advance_frame(frame_id);
  update_motion(pose);

  IngestResult result;
  result.detection_instances.reserve(observations.size());
  for (const auto& obs : observations)
    result.detection_instances.push_back(process_observation(obs, result.completed));
  return result;
}

IngestResult SequenceDatabase::ingest_frame(std::int64_t frame_id,
                                            const std::vector<Detection>& detections,
                                            const CameraPose& pose,
                                            const CameraIntrinsics& intrinsics,
                                            const GroundPlane& plane) {
  for (const auto& det : detections)
    if (det.frame_id != frame_id)
      throw std::invalid_argument("ingest: detections must all share the call's frame_id");
  advance_frame(frame_id);
  update_motion(pose);

  IngestResult result;
  result.detection_instances.reserve(detections.size());
  for (const auto& det : detections) {
    const auto obs = localize_detection(det, pose, intrinsics, plane);
    if (!obs) {
      // Detection at or above the horizon: drop it and keep going.
      ++result.discarded;
      ++discarded_total_;
      result.detection_instances.push_back(std::nullopt);
      continue;
    }
    result.detection_instances.push_back(process_observation(*obs, result.completed));
  }
  return result;
}

DatabaseSnapshot SequenceDatabase::snapshot() const {
  return DatabaseSnapshot(++snapshot_version_, config_, complete_);
}

std::vector<const MarkingSequence*> SequenceDatabase::incomplete_sequences() const {
  std::vector<const MarkingSequence*> out;
  for (const auto& [track, list] : incomplete_)
    for (const auto& seq : list) out.push_back(&seq);
  return out;
}

std::size_t SequenceDatabase::incomplete_count(std::int64_t track_id) const {
  const auto it = incomplete_.find(track_id);
  return it == incomplete_.end() ? 0 : it->second.size();
}

}  // namespace markseq

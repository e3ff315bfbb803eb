#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "markseq/geometry.hpp"

namespace markseq {

struct EngineConfig {
  int k = 4;                                // search window size (sequence length)
  double epsilon = 1.0;                     // per-gap match tolerance (m)
  double merge_radius = 1.5;                // same-marking dedup radius (m)
  double lane_width = 2.0;                  // lateral track-assignment threshold (m)
  std::int64_t min_separation_frames = 200; // loop-mode frame separation
  double min_separation_distance = 100.0;   // loop-mode arc-length separation (m)

  void validate() const;
};

// One physical road marking, aggregated over every frame that observed it.
struct MarkingInstance {
  std::int64_t instance_id = -1;
  MarkingLabel label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // running mean
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  std::int64_t track_id = -1;
  std::int64_t obs_count = 0;
  int session_id = 0;
  double created_arc = 0.0;  // vehicle path length when first observed
  double last_arc = 0.0;     // vehicle path length at the latest observation
};

// Entry data is captured from the live instance when the sequence grows and
// is frozen once the sequence completes.
struct SequenceEntry {
  std::int64_t instance_id = -1;
  MarkingLabel label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  double created_arc = 0.0;
};

struct MarkingSequence {
  std::int64_t sequence_id = -1;  // assigned when the sequence completes
  int session_id = 0;
  std::int64_t track_id = -1;
  std::vector<SequenceEntry> entries;  // strictly increasing instance_id
  std::vector<double> gaps;            // gaps[i] = |entries[i+1] - entries[i]| (m)
  std::int64_t frame_first = 0;
  std::int64_t frame_last = 0;
  double arc_first = 0.0;
  double arc_last = 0.0;

  std::vector<MarkingLabel> labels() const;
  // Ordered label tuple collapsed to one hashable key.
  std::string signature_key() const;
};

// Recomputes inter-entry distances from entry positions.
// Throws std::invalid_argument for sequences with fewer than two entries.
std::vector<double> sequence_gaps(const MarkingSequence& sequence);

struct MergeResult {
  std::int64_t instance_id = -1;
  bool is_new = false;
};

struct IngestResult {
  std::vector<MarkingSequence> completed;
  // Per input detection: the instance it was merged into or created, or
  // nullopt when the detection was discarded (no ground intersection).
  std::vector<std::optional<std::int64_t>> detection_instances;
  int discarded = 0;
};

// Immutable view of the complete sequences; cheap to copy, safe to read
// concurrently with ongoing ingestion.
class DatabaseSnapshot {
 public:
  DatabaseSnapshot();
  DatabaseSnapshot(std::uint64_t version, EngineConfig config,
                   std::vector<MarkingSequence> sequences);

  std::uint64_t version() const { return state_->version; }
  const EngineConfig& config() const { return state_->config; }
  const std::vector<MarkingSequence>& sequences() const { return state_->sequences; }
  std::size_t size() const { return state_->sequences.size(); }

 private:
  struct State {
    std::uint64_t version = 0;
    EngineConfig config;
    std::vector<MarkingSequence> sequences;
  };
  std::shared_ptr<const State> state_;
};

// Online database of marking sequences:
//  - repeated observations of one physical marking merge into one instance,
//  - each NEW instance extends every incomplete sequence of its track and
//    spawns a fresh singleton, so every consecutive window of the track's
//    instance stream eventually exists as a complete sequence,
//  - sequences reaching k entries are frozen and never mutated again,
//  - at most one new instance per track per frame, so no sequence carries two
//    instances created in the same frame.
//
// Single-writer: ingest_*, begin_session, and snapshot() belong to one logical
// writer thread. DatabaseSnapshot values it hands out are immutable and may be
// copied and read from any number of threads while ingestion continues.
class SequenceDatabase {
 public:
  explicit SequenceDatabase(EngineConfig config);

  // Starts a new session (cross-session place recognition). Incomplete
  // sequences and track state of the previous session are retired; instances
  // never merge across sessions. Returns the new session id.
  int begin_session();

  // Pixel-space entry point: localizes detections onto the plane, then feeds
  // the resulting observations through the normal ingestion path. Detections
  // whose centroid ray misses the ground are counted and dropped.
  // All detections must carry `frame_id`; frame ids must be non-decreasing
  // across calls within a session (throws std::invalid_argument otherwise).
  IngestResult ingest_frame(std::int64_t frame_id, const std::vector<Detection>& detections,
                            const CameraPose& pose, const CameraIntrinsics& intrinsics,
                            const GroundPlane& plane);

  // Direct-3D entry point (observations already on the road surface).
  IngestResult ingest_observations(std::int64_t frame_id,
                                   const std::vector<Observation3D>& observations,
                                   const CameraPose& pose);

  // Merges an observation into an existing instance of the same label within
  // merge_radius (ties to the smallest instance_id) or creates a new one.
  // Exposed for direct testing; ingest_* is the normal entry point.
  MergeResult merge_observation(const Observation3D& observation);

  // Assigns a newly created, untracked instance to the track whose most
  // recent instance lies laterally within lane_width of it (perpendicular to
  // the local travel direction), or to a fresh track.
  std::int64_t assign_track(std::int64_t instance_id);

  DatabaseSnapshot snapshot() const;

  const EngineConfig& config() const { return config_; }
  const std::vector<MarkingInstance>& instances() const { return instances_; }
  const std::vector<MarkingSequence>& complete_sequences() const { return complete_; }
  std::vector<const MarkingSequence*> incomplete_sequences() const;
  std::size_t incomplete_count(std::int64_t track_id) const;
  std::size_t track_count() const { return tracks_.size(); }
  int current_session() const { return session_; }
  std::int64_t discarded_detections() const { return discarded_total_; }
  double traveled_arc() const { return arc_; }

 private:
  struct Track {
    std::int64_t last_instance = -1;
    int session_id = 0;
  };

  struct CellKey {
    std::int64_t x = 0, y = 0, z = 0;
    bool operator==(const CellKey&) const = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& c) const;
  };

  void advance_frame(std::int64_t frame_id);
  void update_motion(const CameraPose& pose);
  CellKey cell_of(const Eigen::Vector3d& p) const;
  void grid_insert(std::int64_t instance_id, const Eigen::Vector3d& p);
  void grid_move(std::int64_t instance_id, const Eigen::Vector3d& from, const Eigen::Vector3d& to);
  bool same_pass(const MarkingInstance& instance, std::int64_t frame_id) const;
  SequenceEntry capture_entry(const MarkingInstance& instance) const;
  // Grows the instance's track: extends incomplete sequences, spawns the
  // singleton, moves finished sequences to the complete list.
  void grow_track(std::int64_t instance_id, std::vector<MarkingSequence>& completed_out);
  std::optional<std::int64_t> process_observation(const Observation3D& observation,
                                                  std::vector<MarkingSequence>& completed_out);

  EngineConfig config_;

  std::vector<MarkingInstance> instances_;
  std::vector<MarkingSequence> complete_;
  std::unordered_map<std::int64_t, std::vector<MarkingSequence>> incomplete_;
  std::vector<Track> tracks_;

  std::unordered_map<CellKey, std::vector<std::int64_t>, CellKeyHash> grid_;

  int session_ = 0;
  std::int64_t current_frame_ = -1;
  std::unordered_set<std::int64_t> tracks_extended_this_frame_;

  double arc_ = 0.0;
  Eigen::Vector3d last_camera_position_ = Eigen::Vector3d::Zero();
  bool has_camera_position_ = false;
  Eigen::Vector3d travel_direction_ = Eigen::Vector3d::UnitX();
  bool has_travel_direction_ = false;

  std::int64_t next_sequence_id_ = 0;
  std::int64_t discarded_total_ = 0;
  mutable std::uint64_t snapshot_version_ = 0;
};

}  // namespace markseq

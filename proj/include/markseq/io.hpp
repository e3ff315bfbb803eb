#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "markseq/evaluation.hpp"
#include "markseq/matcher.hpp"
#include "markseq/simulator.hpp"

namespace markseq::io {

inline constexpr int kSchemaVersion = 1;

struct ParseOptions {
  bool skip_bad_records = false;  // strict by default: malformed lines fail the run
};

// Shortest round-trip decimal rendering of a double.
std::string format_double(double value);

// --- flat key=value config files -------------------------------------------

// `key=value` lines, '#' comments. Every key must be consumed by a reader;
// leftovers are reported as unknown keys.
class FlatConfig {
 public:
  static FlatConfig parse_file(const std::filesystem::path& path);
  static FlatConfig parse_stream(std::istream& in, const std::string& origin);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);

  // Errors out if any key was never read.
  void finish() const;
  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// Typed readers over FlatConfig. Each consumes its keys; call cfg.finish()
// once every section of interest has been read.
EngineConfig read_engine_config(FlatConfig& cfg);
CameraIntrinsics read_intrinsics(FlatConfig& cfg);
GroundPlane read_plane(FlatConfig& cfg);
MountGeometry read_mount(FlatConfig& cfg);
WorldSpec read_world_spec(FlatConfig& cfg);
NoiseSpec read_noise_spec(FlatConfig& cfg);

// --- JSONL session records ---------------------------------------------------

struct PoseRecord {
  std::int64_t frame = 0;
  double t = 0.0;
  CameraPose pose;
};

std::vector<PoseRecord> read_poses_jsonl(const std::filesystem::path& path,
                                         const ParseOptions& options = {});
std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path,
                                             const ParseOptions& options = {});
std::vector<Observation3D> read_observations_jsonl(const std::filesystem::path& path,
                                                   const ParseOptions& options = {});

void write_poses_jsonl(std::ostream& out, const std::vector<PoseRecord>& poses);
void write_detections_jsonl(std::ostream& out, const std::vector<Detection>& detections);
void write_observations_jsonl(std::ostream& out, const std::vector<Observation3D>& observations);

// Session log serialization: poses plus detections (pixel mode) or
// observations (ground3d mode); truth tables as CSV.
void write_session_files(const SessionLog& log, const std::filesystem::path& directory);

// Reassembles a session from files; pixel mode when detections_path is set,
// ground3d when observations_path is set. Truth links are optional (only
// needed for scoring).
SessionLog load_session(const std::filesystem::path& poses_path,
                        const std::optional<std::filesystem::path>& detections_path,
                        const std::optional<std::filesystem::path>& observations_path,
                        const std::optional<std::filesystem::path>& truth_links_path,
                        const CameraIntrinsics& intrinsics, const GroundPlane& plane,
                        const ParseOptions& options = {});

// --- result emitters ----------------------------------------------------------

void write_candidates_csv(std::ostream& out, const MatchReport& report, int k);
void write_candidates_jsonl(std::ostream& out, const MatchReport& report);
void write_sequences_jsonl(std::ostream& out, const std::vector<MarkingSequence>& sequences);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(std::istream& in, const std::string& origin);

void write_latency_csv(std::ostream& out, const std::vector<LatencyReport>& reports);

void write_truth_markings_csv(std::ostream& out, const std::vector<TrueMarking>& markings);
// Truth links keyed by detection ordinal (line number order of the
// detections/observations file).
void write_truth_links_csv(std::ostream& out, const SessionLog& log);

// --- run manifest ---------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config_path;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string mode;
  std::uint64_t seed = 0;
  std::string engine_version;
  int schema = kSchemaVersion;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& directory);

MatchMode parse_mode(const std::string& text);
std::string mode_name(MatchMode mode);

}  // namespace markseq::io

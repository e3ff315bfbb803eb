#include "markseq/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "markseq/version.hpp"

namespace markseq::io {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

[[noreturn]] void fail_at(const std::string& origin, std::size_t line, const std::string& what) {
  fail(origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) fail(context + ": trailing characters in number '" + text + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(context + ": not a number: '" + text + "'");
  } catch (const std::out_of_range&) {
    fail(context + ": number out of range: '" + text + "'");
  }
}

std::int64_t to_int(const std::string& text, const std::string& context) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(context + ": not an integer: '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char delim) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, delim)) parts.push_back(item);
  return parts;
}

double json_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) fail(where + ": missing or non-numeric '" + key + "'");
  return j[key].get<double>();
}

std::int64_t json_integer(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number_integer())
    fail(where + ": missing or non-integer '" + key + "'");
  return j[key].get<std::int64_t>();
}

std::string json_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) fail(where + ": missing or non-string '" + key + "'");
  return j[key].get<std::string>();
}

std::vector<double> json_array(const json& j, const char* key, std::size_t n,
                               const std::string& where) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != n)
    fail(where + ": '" + std::string(key) + "' must be an array of " + std::to_string(n));
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) fail(where + ": non-numeric element in '" + std::string(key) + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

// Walks a jsonl file line by line; `handle` throws std::runtime_error on a bad
// record, which is either rethrown with location or skipped.
template <typename Handler>
void for_each_jsonl(const std::filesystem::path& path, const ParseOptions& options,
                    Handler handle) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
      }
      handle(j);
    } catch (const std::exception& e) {
      if (options.skip_bad_records) continue;
      fail_at(path.string(), line_no, e.what());
    }
  }
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail("format_double: conversion failed");
  return std::string(buf, ptr);
}

// --- FlatConfig ---------------------------------------------------------------

FlatConfig FlatConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config " + path.string());
  return parse_stream(in, path.string());
}

FlatConfig FlatConfig::parse_stream(std::istream& in, const std::string& origin) {
  FlatConfig cfg;
  cfg.origin_ = origin;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) fail_at(origin, line_no, "expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) fail_at(origin, line_no, "empty key");
    if (cfg.values_.count(key)) fail_at(origin, line_no, "duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  if (cfg.has("schema")) {
    const std::int64_t schema = cfg.get_int("schema");
    if (schema != kSchemaVersion)
      fail(origin + ": schema version " + std::to_string(schema) + " unsupported (expected " +
           std::to_string(kSchemaVersion) + ")");
  }
  return cfg;
}

bool FlatConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string FlatConfig::get_string(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(origin_ + ": missing required key '" + key + "'");
  consumed_.insert(key);
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) {
  if (!has(key)) return fallback;
  return get_string(key);
}

double FlatConfig::get_double(const std::string& key) {
  return to_double(get_string(key), origin_ + ": key '" + key + "'");
}

double FlatConfig::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  return get_double(key);
}

std::int64_t FlatConfig::get_int(const std::string& key) {
  return to_int(get_string(key), origin_ + ": key '" + key + "'");
}

std::int64_t FlatConfig::get_int(const std::string& key, std::int64_t fallback) {
  if (!has(key)) return fallback;
  return get_int(key);
}

void FlatConfig::finish() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (consumed_.count(key)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += key;
  }
  if (!unknown.empty()) fail(origin_ + ": unknown keys: " + unknown);
}

EngineConfig read_engine_config(FlatConfig& cfg) {
  EngineConfig defaults;
  EngineConfig out;
  out.k = static_cast<int>(cfg.get_int("k", defaults.k));
  out.epsilon = cfg.get_double("epsilon", defaults.epsilon);
  out.merge_radius = cfg.get_double("merge_radius", defaults.merge_radius);
  out.lane_width = cfg.get_double("lane_width", defaults.lane_width);
  out.min_separation_frames =
      cfg.get_int("min_separation_frames", defaults.min_separation_frames);
  out.min_separation_distance =
      cfg.get_double("min_separation_distance", defaults.min_separation_distance);
  out.validate();
  return out;
}

CameraIntrinsics read_intrinsics(FlatConfig& cfg) {
  CameraIntrinsics intr;
  intr.fx = cfg.get_double("fx", 450.0);
  intr.fy = cfg.get_double("fy", 450.0);
  intr.cx = cfg.get_double("cx", 640.0);
  intr.cy = cfg.get_double("cy", 256.0);
  intr.width = static_cast<int>(cfg.get_int("width", 1280));
  intr.height = static_cast<int>(cfg.get_int("height", 512));
  intr.validate();
  return intr;
}

GroundPlane read_plane(FlatConfig& cfg) {
  GroundPlane plane;
  plane.normal = Eigen::Vector3d(cfg.get_double("plane_normal_x", 0.0),
                                 cfg.get_double("plane_normal_y", 0.0),
                                 cfg.get_double("plane_normal_z", 1.0));
  plane.offset = cfg.get_double("plane_offset", 0.0);
  plane.validate();
  return plane;
}

MountGeometry read_mount(FlatConfig& cfg) {
  MountGeometry mount;
  mount.height = cfg.get_double("mount_height", mount.height);
  mount.pitch_down = cfg.get_double("mount_pitch_deg", 12.0) * M_PI / 180.0;
  mount.view_near = cfg.get_double("view_near", mount.view_near);
  mount.view_far = cfg.get_double("view_far", mount.view_far);
  mount.view_half_lanes = cfg.get_double("view_half_lanes", mount.view_half_lanes);
  mount.validate();
  return mount;
}

WorldSpec read_world_spec(FlatConfig& cfg) {
  WorldSpec spec;
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

  const std::string route = cfg.get_string("route");
  for (const std::string& part : split(route, ';')) {
    const auto xy = split(part, ',');
    if (xy.size() != 2) fail(cfg.origin() + ": route waypoint '" + part + "' is not 'x,y'");
    spec.route.emplace_back(to_double(trim(xy[0]), "route x"), to_double(trim(xy[1]), "route y"));
  }

  spec.lane_count = static_cast<int>(cfg.get_int("lanes", 1));
  spec.lane_spacing = cfg.get_double("lane_spacing", spec.lane_spacing);
  spec.marking_spacing_mean = cfg.get_double("marking_spacing_mean", spec.marking_spacing_mean);
  spec.marking_spacing_jitter =
      cfg.get_double("marking_spacing_jitter", spec.marking_spacing_jitter);

  const std::string labels = cfg.get_string(
      "labels", "straight-arrow,left-arrow,right-arrow,crosswalk,stop-line,speed-30,speed-50,diamond");
  for (const std::string& token : split(labels, ','))
    spec.label_alphabet.push_back(MarkingLabel::canonical(token));

  if (cfg.has("loops")) {
    for (const std::string& part : split(cfg.get_string("loops"), ';')) {
      const auto fields = split(part, ':');
      if (fields.size() != 3)
        fail(cfg.origin() + ": loop segment '" + part + "' is not 'start:end:revisit'");
      spec.loop_segments.push_back(WorldSpec::LoopSegment{
          to_double(trim(fields[0]), "loop start"), to_double(trim(fields[1]), "loop end"),
          to_double(trim(fields[2]), "loop revisit")});
    }
  }

  spec.frame_step = cfg.get_double("frame_step", spec.frame_step);
  spec.validate();
  return spec;
}

NoiseSpec read_noise_spec(FlatConfig& cfg) {
  NoiseSpec noise;
  noise.position_sigma = cfg.get_double("position_sigma", 0.0);
  noise.miss_prob = cfg.get_double("miss_prob", 0.0);
  noise.label_flip_prob = cfg.get_double("label_flip_prob", 0.0);
  noise.clutter_rate = cfg.get_double("clutter_rate", 0.0);
  noise.validate();
  return noise;
}

// --- JSONL session records ------------------------------------------------------

std::vector<PoseRecord> read_poses_jsonl(const std::filesystem::path& path,
                                         const ParseOptions& options) {
  std::vector<PoseRecord> out;
  for_each_jsonl(path, options, [&](const json& j) {
    PoseRecord rec;
    rec.frame = json_integer(j, "frame", "pose");
    if (rec.frame < 0) fail("pose: negative frame id");
    rec.t = json_number(j, "t", "pose");
    const auto p = json_array(j, "p", 3, "pose");
    const auto q = json_array(j, "q", 4, "pose");
    rec.pose.position = Eigen::Vector3d(p[0], p[1], p[2]);
    rec.pose.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);  // w, x, y, z
    const double norm = rec.pose.orientation.norm();
    if (std::abs(norm - 1.0) > 1e-6) fail("pose: quaternion norm deviates from 1");
    rec.pose.orientation.normalize();
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path,
                                             const ParseOptions& options) {
  std::vector<Detection> out;
  for_each_jsonl(path, options, [&](const json& j) {
    Detection det;
    det.frame_id = json_integer(j, "frame", "detection");
    if (det.frame_id < 0) fail("detection: negative frame id");
    det.timestamp = json_number(j, "t", "detection");
    det.label = MarkingLabel::canonical(json_string(j, "label", "detection"));
    det.u = json_number(j, "u", "detection");
    det.v = json_number(j, "v", "detection");
    if (!std::isfinite(det.u) || !std::isfinite(det.v)) fail("detection: non-finite centroid");
    out.push_back(std::move(det));
  });
  return out;
}

std::vector<Observation3D> read_observations_jsonl(const std::filesystem::path& path,
                                                   const ParseOptions& options) {
  std::vector<Observation3D> out;
  for_each_jsonl(path, options, [&](const json& j) {
    Observation3D obs;
    obs.frame_id = json_integer(j, "frame", "observation");
    if (obs.frame_id < 0) fail("observation: negative frame id");
    obs.label = MarkingLabel::canonical(json_string(j, "label", "observation"));
    obs.position = Eigen::Vector3d(json_number(j, "x", "observation"),
                                   json_number(j, "y", "observation"),
                                   json_number(j, "z", "observation"));
    out.push_back(std::move(obs));
  });
  return out;
}

void write_poses_jsonl(std::ostream& out, const std::vector<PoseRecord>& poses) {
  for (const auto& rec : poses) {
    json j;
    j["frame"] = rec.frame;
    j["t"] = rec.t;
    j["p"] = {rec.pose.position.x(), rec.pose.position.y(), rec.pose.position.z()};
    j["q"] = {rec.pose.orientation.w(), rec.pose.orientation.x(), rec.pose.orientation.y(),
              rec.pose.orientation.z()};
    out << j.dump() << '\n';
  }
}

void write_detections_jsonl(std::ostream& out, const std::vector<Detection>& detections) {
  for (const auto& det : detections) {
    json j;
    j["frame"] = det.frame_id;
    j["t"] = det.timestamp;
    j["label"] = det.label.token();
    j["u"] = det.u;
    j["v"] = det.v;
    out << j.dump() << '\n';
  }
}

void write_observations_jsonl(std::ostream& out, const std::vector<Observation3D>& observations) {
  for (const auto& obs : observations) {
    json j;
    j["frame"] = obs.frame_id;
    j["label"] = obs.label.token();
    j["x"] = obs.position.x();
    j["y"] = obs.position.y();
    j["z"] = obs.position.z();
    out << j.dump() << '\n';
  }
}

void write_session_files(const SessionLog& log, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);

  {
    std::ofstream out(directory / "poses.jsonl");
    std::vector<PoseRecord> poses;
    poses.reserve(log.frames.size());
    for (const auto& f : log.frames) poses.push_back(PoseRecord{f.frame_id, f.t, f.pose});
    write_poses_jsonl(out, poses);
  }

  if (log.mode == SensorMode::kPixels) {
    std::ofstream out(directory / "detections.jsonl");
    std::vector<Detection> detections;
    for (const auto& f : log.frames)
      for (const auto& d : f.detections)
        detections.push_back(Detection{d.frame_id, d.t, d.label, d.u, d.v});
    write_detections_jsonl(out, detections);
  } else {
    std::ofstream out(directory / "observations.jsonl");
    std::vector<Observation3D> observations;
    for (const auto& f : log.frames)
      for (const auto& d : f.detections)
        observations.push_back(Observation3D{d.frame_id, d.label, d.ground_point});
    write_observations_jsonl(out, observations);
  }

  {
    std::ofstream out(directory / "truth_markings.csv");
    write_truth_markings_csv(out, log.truth_markings);
  }
  {
    std::ofstream out(directory / "truth_links.csv");
    write_truth_links_csv(out, log);
  }
}

SessionLog load_session(const std::filesystem::path& poses_path,
                        const std::optional<std::filesystem::path>& detections_path,
                        const std::optional<std::filesystem::path>& observations_path,
                        const std::optional<std::filesystem::path>& truth_links_path,
                        const CameraIntrinsics& intrinsics, const GroundPlane& plane,
                        const ParseOptions& options) {
  if (detections_path.has_value() == observations_path.has_value())
    fail("load_session: exactly one of detections/observations must be given");

  SessionLog log;
  log.mode = detections_path ? SensorMode::kPixels : SensorMode::kGround3d;
  log.intrinsics = intrinsics;
  log.plane = plane;

  const auto poses = read_poses_jsonl(poses_path, options);
  std::unordered_map<std::int64_t, std::size_t> frame_index;
  for (const auto& rec : poses) {
    if (!log.frames.empty() && rec.frame <= log.frames.back().frame_id)
      fail(poses_path.string() + ": pose frames must be strictly increasing");
    frame_index[rec.frame] = log.frames.size();
    log.frames.push_back(SessionFrame{rec.frame, rec.t, rec.pose, {}});
  }

  // Optional truth links, keyed by detection ordinal in file order.
  std::unordered_map<std::int64_t, std::int64_t> links;
  if (truth_links_path) {
    std::ifstream in(*truth_links_path);
    if (!in) fail("cannot open " + truth_links_path->string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty() || line_no == 1) continue;  // header
      const auto parts = split(stripped, ',');
      if (parts.size() != 2) fail_at(truth_links_path->string(), line_no, "expected 2 columns");
      links[to_int(trim(parts[0]), "truth ordinal")] = to_int(trim(parts[1]), "truth marking");
    }
  }

  auto attach = [&](std::int64_t frame_id, LoggedDetection det, std::size_t ordinal,
                    const std::string& origin) {
    const auto it = frame_index.find(frame_id);
    if (it == frame_index.end()) {
      if (options.skip_bad_records) return;
      fail_at(origin, ordinal + 1, "detection frame " + std::to_string(frame_id) + " has no pose");
    }
    const auto link = links.find(static_cast<std::int64_t>(ordinal));
    det.truth_link = link == links.end()
                         ? std::numeric_limits<std::int64_t>::min() + static_cast<std::int64_t>(ordinal)
                         : link->second;
    log.frames[it->second].detections.push_back(std::move(det));
  };

  if (log.mode == SensorMode::kPixels) {
    const auto detections = read_detections_jsonl(*detections_path, options);
    for (std::size_t i = 0; i < detections.size(); ++i) {
      const Detection& det = detections[i];
      if (!intrinsics.contains(det.u, det.v)) {
        if (options.skip_bad_records) continue;
        fail_at(detections_path->string(), i + 1, "detection centroid outside image bounds");
      }
      LoggedDetection logged;
      logged.frame_id = det.frame_id;
      logged.t = det.timestamp;
      logged.label = det.label;
      logged.u = det.u;
      logged.v = det.v;
      attach(det.frame_id, std::move(logged), i, detections_path->string());
    }
  } else {
    const auto observations = read_observations_jsonl(*observations_path, options);
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const Observation3D& obs = observations[i];
      LoggedDetection logged;
      logged.frame_id = obs.frame_id;
      logged.label = obs.label;
      logged.ground_point = obs.position;
      attach(obs.frame_id, std::move(logged), i, observations_path->string());
    }
  }

  return log;
}

// --- result emitters --------------------------------------------------------------

void write_candidates_csv(std::ostream& out, const MatchReport& report, int k) {
  out << "seq_a,seq_b,max_residual";
  for (int i = 0; i + 1 < k; ++i) out << ",residual_" << i;
  out << ",a_frame_first,a_frame_last,b_frame_first,b_frame_last\n";
  for (const auto& c : report.candidates) {
    out << c.seq_a << ',' << c.seq_b << ',' << format_double(c.max_residual);
    for (const double r : c.residuals) out << ',' << format_double(r);
    out << ',' << c.a_frame_first << ',' << c.a_frame_last << ',' << c.b_frame_first << ','
        << c.b_frame_last << '\n';
  }
}

void write_candidates_jsonl(std::ostream& out, const MatchReport& report) {
  for (const auto& c : report.candidates) {
    json j;
    j["seq_a"] = c.seq_a;
    j["seq_b"] = c.seq_b;
    j["max_residual"] = c.max_residual;
    j["residuals"] = c.residuals;
    json labels = json::array();
    for (const auto& label : c.label_signature) labels.push_back(label.token());
    j["labels"] = std::move(labels);
    j["a_frames"] = {c.a_frame_first, c.a_frame_last};
    j["b_frames"] = {c.b_frame_first, c.b_frame_last};
    out << j.dump() << '\n';
  }
}

void write_sequences_jsonl(std::ostream& out, const std::vector<MarkingSequence>& sequences) {
  for (const auto& seq : sequences) {
    json j;
    j["sequence_id"] = seq.sequence_id;
    j["session"] = seq.session_id;
    j["track"] = seq.track_id;
    j["frames"] = {seq.frame_first, seq.frame_last};
    j["gaps"] = seq.gaps;
    json instances = json::array();
    json labels = json::array();
    for (const auto& e : seq.entries) {
      instances.push_back(e.instance_id);
      labels.push_back(e.label.token());
    }
    j["instances"] = std::move(instances);
    j["labels"] = std::move(labels);
    out << j.dump() << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "k,num_candidates,pct_correct,pct_incorrect\n";
  for (const auto& row : rows) {
    out << row.k << ',' << row.num_candidates << ',' << format_double(row.pct_correct) << ','
        << format_double(row.pct_incorrect) << '\n';
  }
}

std::vector<SweepRow> parse_sweep_csv(std::istream& in, const std::string& origin) {
  std::vector<SweepRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (line_no == 1) {
      if (stripped != "k,num_candidates,pct_correct,pct_incorrect")
        fail_at(origin, line_no, "unexpected sweep header");
      continue;
    }
    const auto parts = split(stripped, ',');
    if (parts.size() != 4) fail_at(origin, line_no, "expected 4 columns");
    SweepRow row;
    row.k = static_cast<int>(to_int(parts[0], "sweep k"));
    row.num_candidates = static_cast<std::size_t>(to_int(parts[1], "sweep count"));
    row.pct_correct = to_double(parts[2], "sweep pct_correct");
    row.pct_incorrect = to_double(parts[3], "sweep pct_incorrect");
    row.defined = row.num_candidates > 0;
    rows.push_back(row);
  }
  return rows;
}

void write_latency_csv(std::ostream& out, const std::vector<LatencyReport>& reports) {
  out << "db_size,path,mean_s,median_s,p99_s,mean_comparisons,update_mean_s\n";
  for (const auto& r : reports) {
    out << r.db_size << ',' << (r.indexed ? "indexed" : "brute") << ','
        << format_double(r.mean_s) << ',' << format_double(r.median_s) << ','
        << format_double(r.p99_s) << ',' << r.comparisons << ','
        << format_double(r.update_mean_s) << '\n';
  }
}

void write_truth_markings_csv(std::ostream& out, const std::vector<TrueMarking>& markings) {
  out << "id,label,x,y,z\n";
  for (const auto& m : markings) {
    out << m.id << ',' << m.label.token() << ',' << format_double(m.position.x()) << ','
        << format_double(m.position.y()) << ',' << format_double(m.position.z()) << '\n';
  }
}

void write_truth_links_csv(std::ostream& out, const SessionLog& log) {
  out << "detection,marking\n";
  std::int64_t ordinal = 0;
  for (const auto& f : log.frames)
    for (const auto& d : f.detections) out << ordinal++ << ',' << d.truth_link << '\n';
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  json j;
  j["command"] = manifest.command;
  j["argv"] = manifest.argv;
  j["config"] = manifest.config_path;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["mode"] = manifest.mode;
  j["seed"] = manifest.seed;
  j["engine_version"] = manifest.engine_version;
  j["schema"] = manifest.schema;
  j["written_at"] = now_iso8601();
  std::ofstream out(directory / "manifest.json");
  out << j.dump(2) << '\n';
}

MatchMode parse_mode(const std::string& text) {
  if (text == "place") return MatchMode::kPlaceRecognition;
  if (text == "loop") return MatchMode::kLoopDetection;
  fail("unknown mode '" + text + "' (expected 'place' or 'loop')");
}

std::string mode_name(MatchMode mode) {
  return mode == MatchMode::kPlaceRecognition ? "place" : "loop";
}

}  // namespace markseq::io

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "markseq/evaluation.hpp"
#include "markseq/io.hpp"
#include "markseq/matcher.hpp"
#include "markseq/simulator.hpp"
#include "markseq/version.hpp"

namespace fs = std::filesystem;
using namespace markseq;

namespace {

struct SessionArgs {
  std::string poses;
  std::string detections;
  std::string observations;
  std::string truth_links;

  bool present() const { return !poses.empty(); }
};

void add_session_options(CLI::App* cmd, SessionArgs& args, const std::string& suffix,
                         bool required) {
  auto* poses = cmd->add_option("--poses" + suffix, args.poses,
                                "camera pose log (JSONL: {frame,t,p,q})");
  if (required) poses->required();
  cmd->add_option("--detections" + suffix, args.detections,
                  "pixel detections (JSONL: {frame,t,label,u,v})");
  cmd->add_option("--observations" + suffix, args.observations,
                  "road-plane observations (JSONL: {frame,label,x,y,z})");
  cmd->add_option("--truth-links" + suffix, args.truth_links,
                  "per-detection truth links CSV (from simulate)");
}

SessionLog load_session_args(const SessionArgs& args, const CameraIntrinsics& intrinsics,
                             const GroundPlane& plane, const io::ParseOptions& options) {
  if (args.detections.empty() == args.observations.empty())
    throw std::runtime_error("give exactly one of --detections/--observations per session");
  std::optional<fs::path> det =
      args.detections.empty() ? std::nullopt : std::optional<fs::path>(args.detections);
  std::optional<fs::path> obs =
      args.observations.empty() ? std::nullopt : std::optional<fs::path>(args.observations);
  std::optional<fs::path> links =
      args.truth_links.empty() ? std::nullopt : std::optional<fs::path>(args.truth_links);
  return io::load_session(args.poses, det, obs, links, intrinsics, plane, options);
}

std::vector<std::string> collect_argv(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
  return out;
}

int run_simulate(const std::string& world_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override, const std::string& mode_text,
                 int sessions, const std::vector<std::string>& argv) {
  io::FlatConfig cfg = io::FlatConfig::parse_file(world_path);
  WorldSpec spec = io::read_world_spec(cfg);
  NoiseSpec noise = io::read_noise_spec(cfg);
  CameraRig rig{io::read_intrinsics(cfg), io::read_mount(cfg)};
  cfg.finish();

  if (seed_override) spec.seed = *seed_override;
  const SensorMode mode = mode_text == "pixels" ? SensorMode::kPixels : SensorMode::kGround3d;
  if (mode_text != "pixels" && mode_text != "ground3d")
    throw std::runtime_error("unknown sensor mode '" + mode_text + "'");
  if (sessions < 1) throw std::runtime_error("--sessions must be >= 1");

  const World world = generate_world(spec);

  std::vector<std::string> outputs;
  for (int s = 0; s < sessions; ++s) {
    const SessionLog log = simulate_drive(world, noise, rig, mode,
                                          static_cast<std::uint64_t>(s));
    const fs::path dir =
        sessions == 1 ? fs::path(out_dir) : fs::path(out_dir) / ("session_" + std::to_string(s));
    io::write_session_files(log, dir);
    outputs.push_back(dir.string());
    std::cerr << "session " << s << ": " << log.frames.size() << " frames, "
              << log.truth_markings.size() << " markings\n";
  }

  io::RunManifest manifest;
  manifest.command = "simulate";
  manifest.argv = argv;
  manifest.config_path = world_path;
  manifest.outputs = outputs;
  manifest.mode = mode_text;
  manifest.seed = spec.seed;
  manifest.engine_version = kEngineVersion;
  io::write_manifest(manifest, out_dir);
  return 0;
}

int run_ingest(const std::string& config_path, const SessionArgs& session,
               const std::string& out_dir, bool skip_bad, const std::vector<std::string>& argv) {
  io::FlatConfig cfg = io::FlatConfig::parse_file(config_path);
  const EngineConfig engine = io::read_engine_config(cfg);
  const CameraIntrinsics intrinsics = io::read_intrinsics(cfg);
  const GroundPlane plane = io::read_plane(cfg);
  cfg.finish();

  const io::ParseOptions options{skip_bad};
  const SessionLog log = load_session_args(session, intrinsics, plane, options);

  std::vector<SessionLog> logs;
  logs.push_back(log);
  ReplayResult replay = replay_sessions(logs, engine);

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "sequences.jsonl");
    io::write_sequences_jsonl(out, replay.db.complete_sequences());
  }
  {
    nlohmann::json stats;
    stats["instances"] = replay.db.instances().size();
    stats["tracks"] = replay.db.track_count();
    stats["complete_sequences"] = replay.db.complete_sequences().size();
    stats["incomplete_sequences"] = replay.db.incomplete_sequences().size();
    stats["discarded_detections"] = replay.db.discarded_detections();
    std::ofstream out(fs::path(out_dir) / "stats.json");
    out << stats.dump(2) << '\n';
  }

  io::RunManifest manifest;
  manifest.command = "ingest";
  manifest.argv = argv;
  manifest.config_path = config_path;
  manifest.inputs = {session.poses,
                     session.detections.empty() ? session.observations : session.detections};
  manifest.outputs = {(fs::path(out_dir) / "sequences.jsonl").string(),
                      (fs::path(out_dir) / "stats.json").string()};
  manifest.engine_version = kEngineVersion;
  io::write_manifest(manifest, out_dir);

  std::cerr << "ingested " << replay.db.instances().size() << " instances into "
            << replay.db.complete_sequences().size() << " complete sequences ("
            << replay.db.discarded_detections() << " detections discarded)\n";
  return 0;
}

int run_match(const std::string& config_path, const std::string& mode_text,
              const SessionArgs& session_a, const SessionArgs& session_b,
              std::optional<int> k_override, std::optional<double> epsilon_override,
              const std::string& algo, const std::string& out_dir, bool skip_bad,
              const std::vector<std::string>& argv) {
  io::FlatConfig cfg = io::FlatConfig::parse_file(config_path);
  EngineConfig engine = io::read_engine_config(cfg);
  const CameraIntrinsics intrinsics = io::read_intrinsics(cfg);
  const GroundPlane plane = io::read_plane(cfg);
  cfg.finish();

  if (k_override) engine.k = *k_override;
  if (epsilon_override) engine.epsilon = *epsilon_override;
  engine.validate();

  const MatchMode mode = io::parse_mode(mode_text);
  if (mode == MatchMode::kPlaceRecognition && !session_b.present())
    throw std::runtime_error("place mode needs a second session (--poses-b ...)");
  if (mode == MatchMode::kLoopDetection && session_b.present())
    throw std::runtime_error("loop mode takes a single session");

  const io::ParseOptions options{skip_bad};
  std::vector<SessionLog> logs;
  logs.push_back(load_session_args(session_a, intrinsics, plane, options));
  if (session_b.present()) logs.push_back(load_session_args(session_b, intrinsics, plane, options));

  ReplayResult replay = replay_sessions(logs, engine);
  const DatabaseSnapshot snapshot = replay.db.snapshot();

  MatchReport report;
  if (algo == "indexed") {
    report = indexed_match(snapshot, engine, mode);
  } else if (algo == "batch") {
    report = batch_match(snapshot, engine, mode);
  } else {
    throw std::runtime_error("unknown algorithm '" + algo + "' (expected indexed or batch)");
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "candidates.csv");
    io::write_candidates_csv(out, report, engine.k);
  }
  {
    std::ofstream out(fs::path(out_dir) / "candidates.jsonl");
    io::write_candidates_jsonl(out, report);
  }

  io::RunManifest manifest;
  manifest.command = "match";
  manifest.argv = argv;
  manifest.config_path = config_path;
  manifest.inputs = {session_a.poses};
  if (session_b.present()) manifest.inputs.push_back(session_b.poses);
  manifest.outputs = {(fs::path(out_dir) / "candidates.csv").string(),
                      (fs::path(out_dir) / "candidates.jsonl").string()};
  manifest.mode = mode_text;
  manifest.engine_version = kEngineVersion;
  io::write_manifest(manifest, out_dir);

  std::cerr << snapshot.size() << " sequences, " << report.candidates.size() << " candidates, "
            << report.comparisons_performed << " comparisons, "
            << io::format_double(report.query_time) << " s\n";
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& mode_text,
              const SessionArgs& session_a, const SessionArgs& session_b,
              const std::string& k_range, const std::string& out_dir, bool skip_bad,
              const std::vector<std::string>& argv) {
  io::FlatConfig cfg = io::FlatConfig::parse_file(config_path);
  const EngineConfig engine = io::read_engine_config(cfg);
  const CameraIntrinsics intrinsics = io::read_intrinsics(cfg);
  const GroundPlane plane = io::read_plane(cfg);
  cfg.finish();

  const MatchMode mode = io::parse_mode(mode_text);
  const auto colon = k_range.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("--k must be a range like 2:6");
  const int k_min = std::stoi(k_range.substr(0, colon));
  const int k_max = std::stoi(k_range.substr(colon + 1));

  if (mode == MatchMode::kPlaceRecognition && !session_b.present())
    throw std::runtime_error("place mode needs a second session (--poses-b ...)");
  if (session_a.truth_links.empty() ||
      (session_b.present() && session_b.truth_links.empty()))
    throw std::runtime_error("sweep needs --truth-links for every session to score candidates");

  const io::ParseOptions options{skip_bad};
  std::vector<SessionLog> logs;
  logs.push_back(load_session_args(session_a, intrinsics, plane, options));
  if (session_b.present()) logs.push_back(load_session_args(session_b, intrinsics, plane, options));

  const std::vector<SweepRow> rows = sweep_k(logs, k_min, k_max, engine, mode);

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "sweep.csv");
    io::write_sweep_csv(out, rows);
  }

  io::RunManifest manifest;
  manifest.command = "sweep";
  manifest.argv = argv;
  manifest.config_path = config_path;
  manifest.inputs = {session_a.poses};
  if (session_b.present()) manifest.inputs.push_back(session_b.poses);
  manifest.outputs = {(fs::path(out_dir) / "sweep.csv").string()};
  manifest.mode = mode_text;
  manifest.engine_version = kEngineVersion;
  io::write_manifest(manifest, out_dir);

  for (const auto& row : rows)
    std::cerr << "k=" << row.k << ": " << row.num_candidates << " candidates, "
              << io::format_double(row.pct_correct) << "% correct\n";
  return 0;
}

int run_bench(const std::string& config_path, const std::string& sizes_text,
              std::size_t inquiries, std::uint64_t seed, const std::string& out_dir,
              const std::vector<std::string>& argv) {
  EngineConfig engine;
  if (!config_path.empty()) {
    io::FlatConfig cfg = io::FlatConfig::parse_file(config_path);
    engine = io::read_engine_config(cfg);
    io::read_intrinsics(cfg);  // tolerated in shared config files
    io::read_plane(cfg);
    cfg.finish();
  }

  std::vector<std::size_t> sizes;
  std::stringstream parts(sizes_text);
  std::string part;
  while (std::getline(parts, part, ','))
    if (!part.empty()) sizes.push_back(static_cast<std::size_t>(std::stoull(part)));
  if (sizes.empty()) throw std::runtime_error("--sizes must list at least one database size");

  const std::vector<LatencyReport> reports = bench_query(sizes, engine, inquiries, seed);

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "latency.csv");
    io::write_latency_csv(out, reports);
  }

  io::RunManifest manifest;
  manifest.command = "bench";
  manifest.argv = argv;
  manifest.config_path = config_path;
  manifest.outputs = {(fs::path(out_dir) / "latency.csv").string()};
  manifest.seed = seed;
  manifest.engine_version = kEngineVersion;
  io::write_manifest(manifest, out_dir);

  for (const auto& r : reports)
    std::cerr << "N=" << r.db_size << " " << (r.indexed ? "indexed" : "brute")
              << ": median " << io::format_double(r.median_s * 1e3) << " ms, mean "
              << io::format_double(r.mean_s * 1e3) << " ms, " << r.comparisons
              << " comparisons/query\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"markseq: place recognition and loop detection from road-marking sequences"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic driving session");
  std::string sim_world, sim_out, sim_mode = "pixels";
  int sim_sessions = 1;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  sim->add_option("--world", sim_world, "world/noise/camera config file")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--mode", sim_mode, "sensor mode: pixels | ground3d");
  sim->add_option("--sessions", sim_sessions, "number of drives of the same world");
  sim->add_option("--seed", sim_seed, "override the world seed")
      ->each([&](const std::string&) { sim_seed_set = true; });

  // ingest
  auto* ing = app.add_subcommand("ingest", "build a sequence database from logs");
  std::string ing_config, ing_out;
  bool ing_skip = false;
  SessionArgs ing_session;
  ing->add_option("--config", ing_config, "engine config file")->required();
  ing->add_option("--out", ing_out, "output directory")->required();
  ing->add_flag("--skip-bad-records", ing_skip, "skip malformed records instead of failing");
  add_session_options(ing, ing_session, "", true);

  // match
  auto* mat = app.add_subcommand("match", "find place/loop candidates in session logs");
  std::string mat_config, mat_out, mat_mode, mat_algo = "indexed";
  bool mat_skip = false;
  int mat_k = 0;
  double mat_epsilon = 0.0;
  bool mat_k_set = false, mat_eps_set = false;
  SessionArgs mat_a, mat_b;
  mat->add_option("--config", mat_config, "engine config file")->required();
  mat->add_option("--mode", mat_mode, "place | loop")->required();
  mat->add_option("--out", mat_out, "output directory")->required();
  mat->add_option("--algo", mat_algo, "indexed | batch");
  mat->add_option("--k", mat_k, "override search window size")
      ->each([&](const std::string&) { mat_k_set = true; });
  mat->add_option("--epsilon", mat_epsilon, "override gap tolerance (m)")
      ->each([&](const std::string&) { mat_eps_set = true; });
  mat->add_flag("--skip-bad-records", mat_skip, "skip malformed records instead of failing");
  add_session_options(mat, mat_a, "", true);
  add_session_options(mat, mat_b, "-b", false);

  // sweep
  auto* swp = app.add_subcommand("sweep", "k-sweep with truth-based scoring");
  std::string swp_config, swp_out, swp_mode, swp_range = "2:6";
  bool swp_skip = false;
  SessionArgs swp_a, swp_b;
  swp->add_option("--config", swp_config, "engine config file")->required();
  swp->add_option("--mode", swp_mode, "place | loop")->required();
  swp->add_option("--k", swp_range, "k range, e.g. 2:6");
  swp->add_option("--out", swp_out, "output directory")->required();
  swp->add_flag("--skip-bad-records", swp_skip, "skip malformed records instead of failing");
  add_session_options(swp, swp_a, "", true);
  add_session_options(swp, swp_b, "-b", false);

  // bench
  auto* ben = app.add_subcommand("bench", "inquiry latency benchmark");
  std::string ben_config, ben_out, ben_sizes = "100,1000,10000";
  std::size_t ben_inquiries = 200;
  std::uint64_t ben_seed = 1;
  ben->add_option("--config", ben_config, "engine config file (optional)");
  ben->add_option("--sizes", ben_sizes, "comma-separated database sizes");
  ben->add_option("--inquiries", ben_inquiries, "inquiries per size");
  ben->add_option("--seed", ben_seed, "benchmark RNG seed");
  ben->add_option("--out", ben_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> argv_copy = collect_argv(argc, argv);
  try {
    if (app.got_subcommand(sim))
      return run_simulate(sim_world, sim_out,
                          sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt,
                          sim_mode, sim_sessions, argv_copy);
    if (app.got_subcommand(ing))
      return run_ingest(ing_config, ing_session, ing_out, ing_skip, argv_copy);
    if (app.got_subcommand(mat))
      return run_match(mat_config, mat_mode, mat_a, mat_b,
                       mat_k_set ? std::optional<int>(mat_k) : std::nullopt,
                       mat_eps_set ? std::optional<double>(mat_epsilon) : std::nullopt, mat_algo,
                       mat_out, mat_skip, argv_copy);
    if (app.got_subcommand(swp))
      return run_sweep(swp_config, swp_mode, swp_a, swp_b, swp_range, swp_out, swp_skip,
                       argv_copy);
    if (app.got_subcommand(ben))
      return run_bench(ben_config, ben_sizes, ben_inquiries, ben_seed, ben_out, argv_copy);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

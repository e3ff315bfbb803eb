#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "markseq/io.hpp"

using namespace markseq;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "markseq_io_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path path = temp_dir() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("format_double survives a parse round trip") {
  for (const double v : {0.0, 1.0, -1.5, 92.30769230769231, 1e-9, 3.0000000000000004,
                         12345.678901234567}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
}

TEST_CASE("flat config: parsing, typed getters, unknown keys") {
  std::istringstream in(
      "# engine settings\n"
      "k = 4\n"
      "epsilon=0.75\n"
      "name = demo\n");
  io::FlatConfig cfg = io::FlatConfig::parse_stream(in, "test.cfg");

  CHECK(cfg.get_int("k") == 4);
  CHECK(cfg.get_double("epsilon") == 0.75);
  CHECK(cfg.get_double("missing", 2.5) == 2.5);
  CHECK_THROWS(cfg.finish());  // 'name' never consumed
  CHECK(cfg.get_string("name") == "demo");
  CHECK_NOTHROW(cfg.finish());
}

TEST_CASE("flat config: malformed lines and schema mismatches carry locations") {
  std::istringstream bad("k: 4\n");
  CHECK_THROWS_WITH_AS(io::FlatConfig::parse_stream(bad, "bad.cfg"),
                       doctest::Contains("bad.cfg:1"), std::runtime_error);

  std::istringstream dup("k=4\nk=5\n");
  CHECK_THROWS_WITH_AS(io::FlatConfig::parse_stream(dup, "dup.cfg"),
                       doctest::Contains("dup.cfg:2"), std::runtime_error);

  std::istringstream schema("schema=99\n");
  CHECK_THROWS_WITH_AS(io::FlatConfig::parse_stream(schema, "s.cfg"),
                       doctest::Contains("schema"), std::runtime_error);
}

TEST_CASE("engine config reader applies defaults and validates") {
  std::istringstream in("k=3\nepsilon=0.5\n");
  io::FlatConfig cfg = io::FlatConfig::parse_stream(in, "engine.cfg");
  const EngineConfig engine = io::read_engine_config(cfg);
  CHECK(engine.k == 3);
  CHECK(engine.epsilon == 0.5);
  CHECK(engine.merge_radius == 1.5);  // default
  CHECK_NOTHROW(cfg.finish());

  std::istringstream invalid("k=1\n");
  io::FlatConfig bad = io::FlatConfig::parse_stream(invalid, "engine.cfg");
  CHECK_THROWS_AS(io::read_engine_config(bad), std::invalid_argument);
}

TEST_CASE("pose jsonl round trip preserves values; malformed lines carry line numbers") {
  std::vector<io::PoseRecord> poses;
  for (int i = 0; i < 5; ++i) {
    io::PoseRecord rec;
    rec.frame = i;
    rec.t = 0.1 * i;
    rec.pose.position = Eigen::Vector3d(1.25 * i, -0.5, 1.5);
    rec.pose.orientation =
        Eigen::Quaterniond(Eigen::AngleAxisd(0.01 * i, Eigen::Vector3d::UnitY()));
    poses.push_back(rec);
  }

  std::ostringstream out;
  io::write_poses_jsonl(out, poses);
  const fs::path path = write_file("poses.jsonl", out.str());

  const auto loaded = io::read_poses_jsonl(path);
  REQUIRE(loaded.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(loaded[i].frame == poses[i].frame);
    CHECK(loaded[i].pose.position == poses[i].pose.position);
    CHECK(loaded[i].pose.orientation.coeffs() == poses[i].pose.orientation.coeffs());
  }

  const fs::path bad = write_file("bad_poses.jsonl",
                                  out.str() + "{\"frame\": 9, \"t\": 0.9}\n");
  CHECK_THROWS_WITH_AS(io::read_poses_jsonl(bad), doctest::Contains(":6"), std::runtime_error);

  io::ParseOptions skip;
  skip.skip_bad_records = true;
  CHECK(io::read_poses_jsonl(bad, skip).size() == poses.size());
}

TEST_CASE("detection and observation jsonl round trips") {
  std::vector<Detection> detections;
  detections.push_back(Detection{3, 0.3, MarkingLabel::canonical("crosswalk"), 612.5, 300.25});
  detections.push_back(Detection{4, 0.4, MarkingLabel::canonical("speed-30"), 100.0, 400.0});

  std::ostringstream out;
  io::write_detections_jsonl(out, detections);
  const auto loaded = io::read_detections_jsonl(write_file("det.jsonl", out.str()));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].label.token() == "crosswalk");
  CHECK(loaded[0].u == 612.5);
  CHECK(loaded[1].frame_id == 4);

  std::vector<Observation3D> observations;
  observations.push_back(
      Observation3D{7, MarkingLabel::canonical("diamond"), Eigen::Vector3d(1.5, -2.25, 0.0)});
  std::ostringstream out2;
  io::write_observations_jsonl(out2, observations);
  const auto loaded2 = io::read_observations_jsonl(write_file("obs.jsonl", out2.str()));
  REQUIRE(loaded2.size() == 1);
  CHECK(loaded2[0].position == observations[0].position);
}

TEST_CASE("load_session joins poses, detections, and truth links") {
  write_file("s_poses.jsonl",
             "{\"frame\":0,\"t\":0.0,\"p\":[0,0,1.5],\"q\":[1,0,0,0]}\n"
             "{\"frame\":1,\"t\":0.1,\"p\":[1,0,1.5],\"q\":[1,0,0,0]}\n");
  write_file("s_obs.jsonl",
             "{\"frame\":0,\"label\":\"crosswalk\",\"x\":5.0,\"y\":0.0,\"z\":0.0}\n"
             "{\"frame\":1,\"label\":\"diamond\",\"x\":9.0,\"y\":0.0,\"z\":0.0}\n");
  write_file("s_links.csv", "detection,marking\n0,12\n1,-3\n");

  const SessionLog log =
      io::load_session(temp_dir() / "s_poses.jsonl", std::nullopt, temp_dir() / "s_obs.jsonl",
                       temp_dir() / "s_links.csv", CameraIntrinsics{450, 450, 640, 256, 1280, 512},
                       GroundPlane{});
  REQUIRE(log.frames.size() == 2);
  REQUIRE(log.frames[0].detections.size() == 1);
  CHECK(log.frames[0].detections[0].truth_link == 12);
  CHECK(log.frames[1].detections[0].truth_link == -3);
  CHECK(log.mode == SensorMode::kGround3d);

  // a detection whose frame has no pose is an error, unless skipping
  write_file("s_obs_orphan.jsonl",
             "{\"frame\":9,\"label\":\"crosswalk\",\"x\":5.0,\"y\":0.0,\"z\":0.0}\n");
  CHECK_THROWS_WITH_AS(
      io::load_session(temp_dir() / "s_poses.jsonl", std::nullopt,
                       temp_dir() / "s_obs_orphan.jsonl", std::nullopt,
                       CameraIntrinsics{450, 450, 640, 256, 1280, 512}, GroundPlane{}),
      doctest::Contains("no pose"), std::runtime_error);

  io::ParseOptions skip;
  skip.skip_bad_records = true;
  const SessionLog skipped =
      io::load_session(temp_dir() / "s_poses.jsonl", std::nullopt,
                       temp_dir() / "s_obs_orphan.jsonl", std::nullopt,
                       CameraIntrinsics{450, 450, 640, 256, 1280, 512}, GroundPlane{}, skip);
  CHECK(skipped.frames[0].detections.empty());
}

TEST_CASE("out-of-bounds pixel detections are rejected at load time") {
  write_file("b_poses.jsonl", "{\"frame\":0,\"t\":0.0,\"p\":[0,0,1.5],\"q\":[1,0,0,0]}\n");
  write_file("b_det.jsonl",
             "{\"frame\":0,\"t\":0.0,\"label\":\"crosswalk\",\"u\":5000.0,\"v\":100.0}\n");
  CHECK_THROWS_WITH_AS(
      io::load_session(temp_dir() / "b_poses.jsonl", temp_dir() / "b_det.jsonl", std::nullopt,
                       std::nullopt, CameraIntrinsics{450, 450, 640, 256, 1280, 512},
                       GroundPlane{}),
      doctest::Contains("bounds"), std::runtime_error);
}

TEST_CASE("sweep csv round-trips bit-identically") {
  std::vector<SweepRow> rows;
  rows.push_back(SweepRow{2, 20, 35.0, 65.0, true});
  rows.push_back(SweepRow{3, 26, 100.0 * 24.0 / 26.0, 100.0 - 100.0 * 24.0 / 26.0, true});
  rows.push_back(SweepRow{4, 0, 0.0, 0.0, false});

  std::ostringstream first;
  io::write_sweep_csv(first, rows);

  std::istringstream back(first.str());
  const auto parsed = io::parse_sweep_csv(back, "sweep.csv");
  REQUIRE(parsed.size() == rows.size());
  CHECK_FALSE(parsed[2].defined);

  std::ostringstream second;
  io::write_sweep_csv(second, parsed);
  CHECK(first.str() == second.str());
}

TEST_CASE("candidate emitters carry residuals and frame ranges") {
  MatchReport report;
  MatchCandidate c;
  c.seq_a = 3;
  c.seq_b = 17;
  c.residuals = {0.125, 0.5, 0.25};
  c.max_residual = 0.5;
  c.label_signature = {MarkingLabel::canonical("crosswalk"), MarkingLabel::canonical("diamond"),
                       MarkingLabel::canonical("stop-line"), MarkingLabel::canonical("speed-30")};
  c.a_frame_first = 10;
  c.a_frame_last = 16;
  c.b_frame_first = 500;
  c.b_frame_last = 507;
  report.candidates.push_back(c);

  std::ostringstream csv;
  io::write_candidates_csv(csv, report, 4);
  CHECK(csv.str() ==
        "seq_a,seq_b,max_residual,residual_0,residual_1,residual_2,"
        "a_frame_first,a_frame_last,b_frame_first,b_frame_last\n"
        "3,17,0.5,0.125,0.5,0.25,10,16,500,507\n");

  std::ostringstream jsonl;
  io::write_candidates_jsonl(jsonl, report);
  CHECK(jsonl.str().find("\"seq_a\":3") != std::string::npos);
  CHECK(jsonl.str().find("\"labels\":[\"crosswalk\",\"diamond\",\"stop-line\",\"speed-30\"]") !=
        std::string::npos);
}

TEST_CASE("mode names parse both ways") {
  CHECK(io::parse_mode("loop") == MatchMode::kLoopDetection);
  CHECK(io::parse_mode("place") == MatchMode::kPlaceRecognition);
  CHECK_THROWS(io::parse_mode("both"));
  CHECK(io::mode_name(MatchMode::kLoopDetection) == "loop");
  CHECK(io::mode_name(MatchMode::kPlaceRecognition) == "place");
}

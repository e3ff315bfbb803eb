#include "markseq/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace markseq {

namespace {

using Clock = std::chrono::steady_clock;

const std::vector<MarkingLabel>& bench_alphabet() {
  static const std::vector<MarkingLabel> alphabet = {
      MarkingLabel::canonical("straight-arrow"), MarkingLabel::canonical("left-arrow"),
      MarkingLabel::canonical("right-arrow"),    MarkingLabel::canonical("crosswalk"),
      MarkingLabel::canonical("stop-line"),      MarkingLabel::canonical("speed-30"),
      MarkingLabel::canonical("speed-50"),       MarkingLabel::canonical("diamond")};
  return alphabet;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(values.size()))) - 1;
  return values[std::min(idx, values.size() - 1)];
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

ScoreResult score_candidates(const std::vector<MatchCandidate>& candidates,
                             const std::set<std::pair<std::int64_t, std::int64_t>>& truth) {
  ScoreResult result;
  result.num_candidates = candidates.size();
  if (candidates.empty()) return result;

  std::size_t correct = 0;
  for (const auto& c : candidates)
    if (truth.count({c.seq_a, c.seq_b}) > 0) ++correct;

  result.defined = true;
  result.pct_correct = 100.0 * static_cast<double>(correct) /
                       static_cast<double>(candidates.size());
  result.pct_incorrect = 100.0 - result.pct_correct;
  return result;
}

ReplayResult replay_sessions(std::span<const SessionLog> sessions, const EngineConfig& config) {
  ReplayResult result{SequenceDatabase(config), {}, 0};

  // Majority vote of truth links per instance; ties go to the smallest link.
  std::unordered_map<std::int64_t, std::map<std::int64_t, std::int64_t>> votes;

  bool first = true;
  for (const auto& session : sessions) {
    if (!first) result.db.begin_session();
    first = false;

    for (const auto& frame : session.frames) {
      IngestResult ingested;
      if (session.mode == SensorMode::kPixels) {
        std::vector<Detection> detections;
        detections.reserve(frame.detections.size());
        for (const auto& d : frame.detections)
          detections.push_back(Detection{d.frame_id, d.t, d.label, d.u, d.v});
        ingested = result.db.ingest_frame(frame.frame_id, detections, frame.pose,
                                          session.intrinsics, session.plane);
      } else {
        std::vector<Observation3D> observations;
        observations.reserve(frame.detections.size());
        for (const auto& d : frame.detections)
          observations.push_back(Observation3D{d.frame_id, d.label, d.ground_point});
        ingested = result.db.ingest_observations(frame.frame_id, observations, frame.pose);
      }

      result.discarded += ingested.discarded;
      for (std::size_t i = 0; i < frame.detections.size(); ++i) {
        const auto& instance = ingested.detection_instances[i];
        if (instance) votes[*instance][frame.detections[i].truth_link] += 1;
      }
    }
  }

  for (const auto& [instance, links] : votes) {
    std::int64_t best_link = 0;
    std::int64_t best_count = -1;
    for (const auto& [link, count] : links) {
      if (count > best_count) {
        best_count = count;
        best_link = link;
      }
    }
    result.instance_to_marking[instance] = best_link;
  }
  return result;
}

std::vector<SweepRow> sweep_k(std::span<const SessionLog> sessions, int k_min, int k_max,
                              const EngineConfig& config, MatchMode mode) {
  if (k_min < 2) throw std::invalid_argument("sweep_k: k must be >= 2");
  if (k_min > k_max) throw std::invalid_argument("sweep_k: empty k range");

  std::vector<SweepRow> rows;
  for (int k = k_min; k <= k_max; ++k) {
    EngineConfig cfg = config;
    cfg.k = k;
    ReplayResult replay = replay_sessions(sessions, cfg);
    const DatabaseSnapshot snap = replay.db.snapshot();
    const MatchReport report = indexed_match(snap, cfg, mode);
    const auto truth = ground_truth_pairs(snap, replay.instance_to_marking, cfg, mode);
    const ScoreResult score = score_candidates(report.candidates, truth);

    rows.push_back(SweepRow{k, score.num_candidates, score.pct_correct, score.pct_incorrect,
                            score.defined});
  }
  return rows;
}

std::vector<MarkingSequence> make_synthetic_sequences(std::size_t count, int k,
                                                      std::uint64_t seed,
                                                      std::int64_t id_offset) {
  const auto& alphabet = bench_alphabet();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> label_dist(0, alphabet.size() - 1);
  std::uniform_real_distribution<double> gap_dist(5.0, 15.0);

  constexpr std::int64_t kStride = 1000;  // keeps every pair loop-admissible

  std::vector<MarkingSequence> sequences;
  sequences.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    MarkingSequence seq;
    seq.sequence_id = id_offset + static_cast<std::int64_t>(n);
    seq.session_id = 0;
    seq.track_id = 0;

    const std::int64_t base = seq.sequence_id * kStride;
    double x = 0.0;
    for (int i = 0; i < k; ++i) {
      SequenceEntry entry;
      entry.instance_id = base + i;
      entry.label = alphabet[label_dist(rng)];
      entry.position = Eigen::Vector3d(x, 0.0, 0.0);
      entry.first_frame = base + i * 4;
      entry.last_frame = base + i * 4 + 2;
      entry.created_arc = static_cast<double>(base + i * 4);
      seq.entries.push_back(std::move(entry));
      if (i + 1 < k) x += gap_dist(rng);
    }
    seq.gaps = sequence_gaps(seq);
    seq.frame_first = seq.entries.front().first_frame;
    seq.frame_last = seq.entries.back().last_frame;
    seq.arc_first = seq.entries.front().created_arc;
    seq.arc_last = seq.entries.back().created_arc;
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

std::vector<LatencyReport> bench_query(std::span<const std::size_t> db_sizes,
                                       const EngineConfig& config, std::size_t num_inquiries,
                                       std::uint64_t seed) {
  if (num_inquiries == 0) throw std::invalid_argument("bench_query: need at least one inquiry");

  std::vector<LatencyReport> reports;
  for (const std::size_t n : db_sizes) {
    const auto history = make_synthetic_sequences(n, config.k, seed);
    const auto inquiries = make_synthetic_sequences(
        num_inquiries, config.k, seed ^ 0x9e3779b97f4a7c15ULL,
        static_cast<std::int64_t>(n));

    for (const bool indexed : {true, false}) {
      OnlineMatcher matcher(config, MatchMode::kLoopDetection, indexed);
      OnlineMatcher sink(config, MatchMode::kLoopDetection, indexed);
      for (const auto& seq : history) {
        matcher.add(seq);
        sink.add(seq);
      }

      // Inquiries run against the fixed N-sized database; insertion cost is
      // measured separately on the sink so the queried size never drifts.
      std::vector<double> match_times, update_times;
      std::uint64_t comparison_total = 0;
      match_times.reserve(inquiries.size());
      for (const auto& seq : inquiries) {
        const MatchReport report = matcher.match_only(seq);
        const auto t0 = Clock::now();
        sink.add(seq);
        update_times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        match_times.push_back(report.query_time);
        comparison_total += report.comparisons_performed;
      }

      LatencyReport lat;
      lat.db_size = n;
      lat.indexed = indexed;
      lat.mean_s = mean_of(match_times);
      lat.median_s = percentile(match_times, 0.5);
      lat.p99_s = percentile(match_times, 0.99);
      lat.comparisons = comparison_total / inquiries.size();
      lat.update_mean_s = mean_of(update_times);
      reports.push_back(lat);
    }
  }
  return reports;
}

}  // namespace markseq

#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "markseq/matcher.hpp"
#include "markseq/simulator.hpp"

namespace markseq {

struct ScoreResult {
  std::size_t num_candidates = 0;
  double pct_correct = 0.0;
  double pct_incorrect = 0.0;
  bool defined = false;  // false when there are no candidates to score
};

// Fraction of candidates confirmed by the truth set. With zero candidates the
// percentages are undefined and reported as 0 with defined == false.
ScoreResult score_candidates(const std::vector<MatchCandidate>& candidates,
                             const std::set<std::pair<std::int64_t, std::int64_t>>& truth);

struct SweepRow {
  int k = 0;
  std::size_t num_candidates = 0;
  double pct_correct = 0.0;
  double pct_incorrect = 0.0;
  bool defined = false;
};

// Database rebuilt from one or more session logs, with the per-instance truth
// attribution needed for scoring (majority truth link over merged detections).
struct ReplayResult {
  SequenceDatabase db;
  std::unordered_map<std::int64_t, std::int64_t> instance_to_marking;
  std::int64_t discarded = 0;
};

ReplayResult replay_sessions(std::span<const SessionLog> sessions, const EngineConfig& config);

// Rebuilds the database and matches once per k in [k_min, k_max].
// Throws std::invalid_argument when k_min < 2 or k_min > k_max.
std::vector<SweepRow> sweep_k(std::span<const SessionLog> sessions, int k_min, int k_max,
                              const EngineConfig& config, MatchMode mode);

struct LatencyReport {
  std::size_t db_size = 0;
  bool indexed = false;
  double mean_s = 0.0;
  double median_s = 0.0;
  double p99_s = 0.0;
  std::uint64_t comparisons = 0;  // mean comparisons per inquiry
  double update_mean_s = 0.0;     // insertion cost, reported separately
};

// Synthetic complete sequences for matcher benchmarks and tests: random label
// tuples over an 8-token alphabet, collinear entries with gaps in [5, 15] m,
// frame/arc ranges spaced so every pair is loop-admissible under defaults.
std::vector<MarkingSequence> make_synthetic_sequences(std::size_t count, int k,
                                                      std::uint64_t seed,
                                                      std::int64_t id_offset = 0);

// Times one place-recognition inquiry (OnlineMatcher::add_and_match) against
// databases of the given sizes, on both the indexed and brute-force paths.
std::vector<LatencyReport> bench_query(std::span<const std::size_t> db_sizes,
                                       const EngineConfig& config, std::size_t num_inquiries = 200,
                                       std::uint64_t seed = 1);

}  // namespace markseq

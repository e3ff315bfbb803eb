#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "markseq/sequence_db.hpp"

namespace markseq {

enum class MatchMode {
  kPlaceRecognition,  // cross-session: pairs must come from different sessions
  kLoopDetection,     // single-session: pairs must be well separated in frames and path length
};

struct MatchCandidate {
  std::int64_t seq_a = -1;  // always seq_a < seq_b
  std::int64_t seq_b = -1;
  std::vector<double> residuals;  // |gap_a[i] - gap_b[i]| per gap (m)
  double max_residual = 0.0;
  std::vector<MarkingLabel> label_signature;
  std::int64_t a_frame_first = 0, a_frame_last = 0;
  std::int64_t b_frame_first = 0, b_frame_last = 0;
};

struct MatchReport {
  std::vector<MatchCandidate> candidates;  // sorted by (seq_a, seq_b)
  std::uint64_t comparisons_performed = 0;
  double query_time = 0.0;  // seconds, matching phase only
};

// Label + relative-distance predicate: a match iff labels agree position-wise
// and every gap residual is within epsilon. Throws std::invalid_argument on
// sequence length mismatch.
std::optional<MatchCandidate> sequences_match(const MarkingSequence& a, const MarkingSequence& b,
                                              double epsilon);

// Screens a pair before matching. Place recognition admits only cross-session
// pairs. Loop detection admits same-session pairs whose frame ranges are
// disjoint and separated by at least min_separation_frames frames and
// min_separation_distance metres of traveled path; this is what rules out the
// trivially overlapping sliding windows.
bool admissible_pair(const MarkingSequence& a, const MarkingSequence& b,
                     const EngineConfig& config, MatchMode mode);

// Evaluates every unordered pair; comparisons_performed = N(N-1)/2 with the
// admissibility screening included in the count.
MatchReport batch_match(const DatabaseSnapshot& snapshot, const EngineConfig& config,
                        MatchMode mode);

// Compares each newly completed sequence against every complete sequence with
// a smaller sequence_id. Over a whole session the union of incremental reports
// equals batch_match on the final snapshot.
MatchReport incremental_match(const DatabaseSnapshot& snapshot,
                              const std::vector<MarkingSequence>& new_sequences,
                              const EngineConfig& config, MatchMode mode);

// Buckets sequences by their ordered label tuple and matches within buckets
// only. Candidate set is identical to batch_match; comparisons_performed
// counts intra-bucket pairs only.
MatchReport indexed_match(const DatabaseSnapshot& snapshot, const EngineConfig& config,
                          MatchMode mode);

// Canonical ranking for downstream consumers: max_residual ascending, ties by
// (seq_a, seq_b). Reports themselves stay sorted by (seq_a, seq_b).
std::vector<MatchCandidate> ranked_candidates(const MatchReport& report);

// Online inquiry engine: one inquiry matches a new sequence against the
// stored history (bucket scan when indexed, linear scan otherwise).
class OnlineMatcher {
 public:
  OnlineMatcher(EngineConfig config, MatchMode mode, bool use_index);

  MatchReport match_only(const MarkingSequence& sequence) const;
  void add(const MarkingSequence& sequence);
  MatchReport add_and_match(const MarkingSequence& sequence);
  std::size_t size() const { return sequences_.size(); }

 private:
  EngineConfig config_;
  MatchMode mode_;
  bool use_index_;
  std::vector<MarkingSequence> sequences_;
  std::unordered_map<std::string, std::vector<std::size_t>> buckets_;
};

}  // namespace markseq

#include "markseq/matcher.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace markseq {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool candidate_order(const MatchCandidate& a, const MatchCandidate& b) {
  if (a.seq_a != b.seq_a) return a.seq_a < b.seq_a;
  return a.seq_b < b.seq_b;
}

void try_pair(const MarkingSequence& a, const MarkingSequence& b, const EngineConfig& config,
              MatchMode mode, std::vector<MatchCandidate>& out) {
  if (!admissible_pair(a, b, config, mode)) return;
  if (auto candidate = sequences_match(a, b, config.epsilon)) out.push_back(std::move(*candidate));
}

}  // namespace

std::optional<MatchCandidate> sequences_match(const MarkingSequence& a, const MarkingSequence& b,
                                              double epsilon) {
  if (a.entries.size() != b.entries.size())
    throw std::invalid_argument("sequences_match: sequence length mismatch");

  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (a.entries[i].label != b.entries[i].label) return std::nullopt;

  MatchCandidate candidate;
  candidate.residuals.reserve(a.gaps.size());
  double max_residual = 0.0;
  for (std::size_t i = 0; i < a.gaps.size(); ++i) {
    const double r = std::abs(a.gaps[i] - b.gaps[i]);
    if (r > epsilon) return std::nullopt;
    candidate.residuals.push_back(r);
    max_residual = std::max(max_residual, r);
  }

  const MarkingSequence& lo = a.sequence_id <= b.sequence_id ? a : b;
  const MarkingSequence& hi = a.sequence_id <= b.sequence_id ? b : a;
  candidate.seq_a = lo.sequence_id;
  candidate.seq_b = hi.sequence_id;
  candidate.max_residual = max_residual;
  candidate.label_signature = a.labels();
  candidate.a_frame_first = lo.frame_first;
  candidate.a_frame_last = lo.frame_last;
  candidate.b_frame_first = hi.frame_first;
  candidate.b_frame_last = hi.frame_last;
  return candidate;
}

bool admissible_pair(const MarkingSequence& a, const MarkingSequence& b,
                     const EngineConfig& config, MatchMode mode) {
  if (mode == MatchMode::kPlaceRecognition) return a.session_id != b.session_id;

  // Loop detection within one session.
  if (a.session_id != b.session_id) return false;
  const MarkingSequence& earlier = a.frame_first <= b.frame_first ? a : b;
  const MarkingSequence& later = a.frame_first <= b.frame_first ? b : a;
  if (later.frame_first <= earlier.frame_last) return false;  // overlapping windows
  if (later.frame_first - earlier.frame_last < config.min_separation_frames) return false;
  if (later.arc_first - earlier.arc_last < config.min_separation_distance) return false;
  return true;
}

MatchReport batch_match(const DatabaseSnapshot& snapshot, const EngineConfig& config,
                        MatchMode mode) {
  const auto start = Clock::now();
  const auto& sequences = snapshot.sequences();

  MatchReport report;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    for (std::size_t j = i + 1; j < sequences.size(); ++j) {
      ++report.comparisons_performed;
      try_pair(sequences[i], sequences[j], config, mode, report.candidates);
    }
  }
  std::sort(report.candidates.begin(), report.candidates.end(), candidate_order);
  report.query_time = seconds_since(start);
  return report;
}

MatchReport incremental_match(const DatabaseSnapshot& snapshot,
                              const std::vector<MarkingSequence>& new_sequences,
                              const EngineConfig& config, MatchMode mode) {
  const auto start = Clock::now();

  // Partner pool: everything in the snapshot plus any new sequence the
  // snapshot does not carry yet (callers may pass either side of the ingest).
  std::vector<const MarkingSequence*> pool;
  pool.reserve(snapshot.size() + new_sequences.size());
  for (const auto& seq : snapshot.sequences()) pool.push_back(&seq);
  {
    std::unordered_map<std::int64_t, bool> in_pool;
    for (const auto* seq : pool) in_pool[seq->sequence_id] = true;
    for (const auto& seq : new_sequences)
      if (!in_pool.count(seq.sequence_id)) pool.push_back(&seq);
  }
  std::sort(pool.begin(), pool.end(), [](const MarkingSequence* a, const MarkingSequence* b) {
    return a->sequence_id < b->sequence_id;
  });

  std::vector<const MarkingSequence*> fresh;
  fresh.reserve(new_sequences.size());
  for (const auto& seq : new_sequences) fresh.push_back(&seq);
  std::sort(fresh.begin(), fresh.end(), [](const MarkingSequence* a, const MarkingSequence* b) {
    return a->sequence_id < b->sequence_id;
  });

  MatchReport report;
  for (const auto* seq : fresh) {
    for (const auto* prior : pool) {
      if (prior->sequence_id >= seq->sequence_id) break;
      ++report.comparisons_performed;
      try_pair(*prior, *seq, config, mode, report.candidates);
    }
  }
  std::sort(report.candidates.begin(), report.candidates.end(), candidate_order);
  report.query_time = seconds_since(start);
  return report;
}

MatchReport indexed_match(const DatabaseSnapshot& snapshot, const EngineConfig& config,
                          MatchMode mode) {
  const auto start = Clock::now();
  const auto& sequences = snapshot.sequences();

  std::unordered_map<std::string, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    buckets[sequences[i].signature_key()].push_back(i);

  MatchReport report;
  for (const auto& [key, members] : buckets) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        ++report.comparisons_performed;
        try_pair(sequences[members[i]], sequences[members[j]], config, mode, report.candidates);
      }
    }
  }
  std::sort(report.candidates.begin(), report.candidates.end(), candidate_order);
  report.query_time = seconds_since(start);
  return report;
}

std::vector<MatchCandidate> ranked_candidates(const MatchReport& report) {
  std::vector<MatchCandidate> ranked = report.candidates;
  std::sort(ranked.begin(), ranked.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
    if (a.max_residual != b.max_residual) return a.max_residual < b.max_residual;
    return candidate_order(a, b);
  });
  return ranked;
}

OnlineMatcher::OnlineMatcher(EngineConfig config, MatchMode mode, bool use_index)
    : config_(config), mode_(mode), use_index_(use_index) {
  config_.validate();
}

MatchReport OnlineMatcher::match_only(const MarkingSequence& sequence) const {
  const auto start = Clock::now();

  MatchReport report;
  if (use_index_) {
    const auto it = buckets_.find(sequence.signature_key());
    if (it != buckets_.end()) {
      for (const std::size_t idx : it->second) {
        ++report.comparisons_performed;
        try_pair(sequences_[idx], sequence, config_, mode_, report.candidates);
      }
    }
  } else {
    for (const auto& prior : sequences_) {
      ++report.comparisons_performed;
      try_pair(prior, sequence, config_, mode_, report.candidates);
    }
  }
  std::sort(report.candidates.begin(), report.candidates.end(), candidate_order);
  report.query_time = seconds_since(start);
  return report;
}

void OnlineMatcher::add(const MarkingSequence& sequence) {
  buckets_[sequence.signature_key()].push_back(sequences_.size());
  sequences_.push_back(sequence);
}

MatchReport OnlineMatcher::add_and_match(const MarkingSequence& sequence) {
  MatchReport report = match_only(sequence);
  add(sequence);
  return report;
}

}  // namespace markseq

#pragma once

#include <cstddef>
#include <vector>

#include "steprl/rng.hpp"
#include "steprl/types.hpp"

namespace steprl {

// Capacity-bounded store of correct rollouts: the reference distribution the
// discriminator is trained against. Single-writer; reads may run in parallel
// with each other but not with insert().
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t per_question_cap);

  // Stores the rollout iff outcome_reward == 1 and it is not an exact
  // duplicate (same question_id and step sequence). When the buffer or the
  // per-question cap is full, the oldest entry of the most-represented
  // question (lowest id on ties) is evicted. Returns true if stored.
  bool insert(const Rollout& rollout);

  // `batch` distinct question ids, uniform without replacement; all of them
  // (ascending) when fewer exist. Throws Error("buffer-empty").
  std::vector<QuestionId> sample_question_ids(std::size_t batch,
                                              Rng& rng) const;

  // k rollouts for question_id, uniform with replacement. Throws
  // Error("no-reference") when none are stored.
  std::vector<const Rollout*> sample_reference(QuestionId question_id,
                                               std::size_t k, Rng& rng) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t per_question_cap() const { return per_question_cap_; }
  std::uint64_t rejected_count() const { return rejected_; }

  // Entries in insertion order (persistence and tests).
  const std::vector<Rollout>& entries() const { return entries_; }

  std::size_t count_for(QuestionId question_id) const;
  std::vector<QuestionId> distinct_question_ids() const;  // ascending

 private:
  std::size_t capacity_;
  std::size_t per_question_cap_;
  std::vector<Rollout> entries_;  // insertion order
  std::uint64_t rejected_ = 0;

  void evict_from(QuestionId question_id);
};

}  // namespace steprl

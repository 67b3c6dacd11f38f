#include "steprl/replay_buffer.hpp"

#include <algorithm>
#include <map>

#include "steprl/error.hpp"

namespace steprl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t per_question_cap)
    : capacity_(capacity), per_question_cap_(per_question_cap) {
  if (capacity == 0 || per_question_cap == 0)
    throw Error("bad-buffer-config", "capacity and per-question cap must be positive");
}

std::size_t ReplayBuffer::count_for(QuestionId question_id) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(),
                    [&](const Rollout& r) { return r.question_id == question_id; }));
}

std::vector<QuestionId> ReplayBuffer::distinct_question_ids() const {
  std::vector<QuestionId> ids;
  for (const auto& r : entries_) ids.push_back(r.question_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void ReplayBuffer::evict_from(QuestionId question_id) {
  const auto it = std::find_if(
      entries_.begin(), entries_.end(),
      [&](const Rollout& r) { return r.question_id == question_id; });
  entries_.erase(it);
}

bool ReplayBuffer::insert(const Rollout& rollout) {
  if (rollout.outcome_reward != 1) {
    ++rejected_;
    return false;
  }
  for (const auto& e : entries_) {
    if (same_steps(e, rollout)) {
      ++rejected_;
      return false;
    }
  }

  if (count_for(rollout.question_id) >= per_question_cap_) {
    evict_from(rollout.question_id);
  } else if (entries_.size() >= capacity_) {
    // Evict from the most-represented question to preserve coverage.
    std::map<QuestionId, std::size_t> counts;
    for (const auto& e : entries_) ++counts[e.question_id];
    QuestionId victim = counts.begin()->first;
    std::size_t best = counts.begin()->second;
    for (const auto& [qid, n] : counts) {
      if (n > best) {
        victim = qid;
        best = n;
      }
    }
    evict_from(victim);
  }

  entries_.push_back(rollout);
  entries_.back().prm_rewards.reset();  // caches never enter the buffer
  return true;
}

std::vector<QuestionId> ReplayBuffer::sample_question_ids(std::size_t batch,
                                                          Rng& rng) const {
  if (entries_.empty()) throw Error("buffer-empty");
  auto ids = distinct_question_ids();
  if (batch >= ids.size()) return ids;
  // Partial Fisher-Yates over the sorted id list.
  for (std::size_t i = 0; i < batch; ++i) {
    const auto j = i + rng.next_below(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(batch);
  return ids;
}

std::vector<const Rollout*> ReplayBuffer::sample_reference(
    QuestionId question_id, std::size_t k, Rng& rng) const {
  std::vector<const Rollout*> pool;
  for (const auto& e : entries_)
    if (e.question_id == question_id) pool.push_back(&e);
  if (pool.empty()) throw Error("no-reference");
  std::vector<const Rollout*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(pool[rng.next_below(pool.size())]);
  return out;
}

}  // namespace steprl

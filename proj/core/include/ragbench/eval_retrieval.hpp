#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

/// Rank-bucketed retrieval outcomes for one (model, dataset) run.
struct RankCounts {
  long c1 = 0;  // queries answered at rank 1
  long c2 = 0;
  long c3 = 0;
  long total_retrievals = 0;  // = c1 + c2 + c3
  long queries = 0;

  void add(std::optional<int> rank);
};

/// The smallest rank r <= 3 whose chunk text contains a gold answer string
/// (both sides normalized) as a substring; nullopt when no match lands in
/// the top three. Hits beyond rank 3 earn no credit.
std::optional<int> judge_rank(const std::vector<Hit>& hits, const QAItem& gold,
                              const std::unordered_map<std::string, std::string>& chunk_text);

/// Weighted composite: rank-1 credit counts 3x, rank-2 2x, rank-3 1x,
/// normalized by the maximum attainable credit 3Q. Returns a percentage.
double overall_score(const RankCounts& counts);

void validate_rank_counts(const RankCounts& counts);

}  // namespace ragbench

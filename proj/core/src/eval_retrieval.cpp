#include "ragbench/eval_retrieval.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

void RankCounts::add(std::optional<int> rank) {
  ++queries;
  if (!rank) return;
  switch (*rank) {
    case 1: ++c1; break;
    case 2: ++c2; break;
    case 3: ++c3; break;
    default: return;  // no credit past rank 3
  }
  ++total_retrievals;
}

std::optional<int> judge_rank(const std::vector<Hit>& hits, const QAItem& gold,
                              const std::unordered_map<std::string, std::string>& chunk_text) {
  if (gold.answers.empty())
    throw Error(ErrorCode::Precondition, "judge_rank requires at least one gold answer");

  std::vector<std::string> normalized_answers;
  normalized_answers.reserve(gold.answers.size());
  for (const auto& a : gold.answers) normalized_answers.push_back(text::normalize(a));

  for (const auto& hit : hits) {
    if (hit.rank > 3) break;
    auto it = chunk_text.find(hit.chunk_id);
    if (it == chunk_text.end()) continue;  // synthetic hits (summaries) carry no chunk text
    const std::string norm_chunk = text::normalize(it->second);
    for (const auto& ans : normalized_answers) {
      if (!ans.empty() && norm_chunk.find(ans) != std::string::npos) return hit.rank;
    }
  }
  return std::nullopt;
}

void validate_rank_counts(const RankCounts& counts) {
  if (counts.queries < 1) throw Error(ErrorCode::Precondition, "queries must be >= 1");
  if (counts.c1 < 0 || counts.c2 < 0 || counts.c3 < 0)
    throw Error(ErrorCode::Precondition, "rank counts must be non-negative");
  if (counts.c1 + counts.c2 + counts.c3 > counts.queries)
    throw Error(ErrorCode::Precondition, "c1+c2+c3 cannot exceed the query count");
  if (counts.total_retrievals != counts.c1 + counts.c2 + counts.c3)
    throw Error(ErrorCode::Precondition, "total_retrievals must equal c1+c2+c3");
}

double overall_score(const RankCounts& counts) {
  validate_rank_counts(counts);
  const double weighted = 3.0 * static_cast<double>(counts.c1) +
                          2.0 * static_cast<double>(counts.c2) +
                          1.0 * static_cast<double>(counts.c3);
  return 100.0 * weighted / (3.0 * static_cast<double>(counts.queries));
}

}  // namespace ragbench

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ragbench/corpus.hpp"
#include "ragbench/pipeline.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

/// Statement-level judge output: one supported/unsupported flag per
/// extracted statement.
struct JudgeVerdict {
  std::vector<std::string> statements;
  std::vector<bool> supported;
};

/// Aggregated metric row. Null means the metric was not computed (or had no
/// valid items). RAGAS metrics lie in [0,1], accuracy in [0,100].
struct MetricReport {
  std::optional<double> faithfulness;
  std::optional<double> answer_relevancy;
  std::optional<double> context_precision;
  std::optional<double> context_recall;
  std::optional<double> accuracy;
};

/// Choice extraction for four-option MCQs, tried in order: leading Latin
/// digit 1-4 or letter A-D, first Persian digit 1-4 anywhere, then exact
/// normalized match of an option string inside the answer.
std::optional<int> extract_choice(const std::string& answer_text,
                                  const std::vector<std::string>& options);

struct McqaResult {
  double accuracy = 0.0;  // percent
  std::vector<EvalRecord> records;
  long correct = 0;
  long flagged = 0;   // answers no choice could be extracted from
  long failures = 0;  // provider errors, recorded and skipped
};

/// Runs every item through retrieval + generation, extracts the chosen
/// option, and scores accuracy = 100 * correct / total. Unextractable
/// answers count as wrong and are flagged; per-item provider failures are
/// recorded without aborting the run.
McqaResult run_mcqa(const std::vector<MCQItem>& items, const RagPipeline& pipeline);

std::string mcqa_prompt(const MCQItem& item, const std::string& context);

/// LLM-as-judge for the four RAGAS metrics. Judge replies must be strict
/// JSON lists; a malformed reply is re-prompted once, then the call fails
/// with MalformedJudgeOutput and the caller excludes the item.
class RagasJudge {
 public:
  RagasJudge(ChatProvider& judge, Embedder& embedder) : judge_(judge), embedder_(embedder) {}

  /// supported statements / total statements; null when the judge extracts
  /// zero statements from the answer.
  std::optional<double> faithfulness(const std::string& question, const std::string& answer,
                                     const std::vector<std::string>& contexts);

  /// mean cosine between the question and n questions regenerated from the
  /// answer, clamped to [0,1].
  double answer_relevancy(const std::string& question, const std::string& answer, int n = 3);

  /// Rank-weighted precision over the judge's per-context relevance labels;
  /// 0 when nothing is relevant.
  double context_precision(const std::string& question, const std::vector<std::string>& contexts,
                           const std::string& ground_truth);

  /// attributable ground-truth statements / total; 0 when the judge
  /// extracts none.
  double context_recall(const std::string& ground_truth,
                        const std::vector<std::string>& contexts);

 private:
  ChatProvider& judge_;
  Embedder& embedder_;
};

/// context_precision on precomputed 0/1 relevance labels; exposed so the
/// formula can be checked exhaustively against an oracle.
double context_precision_from_labels(const std::vector<int>& relevance);

}  // namespace ragbench

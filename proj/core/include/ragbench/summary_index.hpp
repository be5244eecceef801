#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ragbench/index.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

struct DocSummary {
  std::string doc_id;
  std::string summary;
  EmbeddingVector embedding;
};

enum class QueryClass { general, specific };

/// Summarization with a fixed template, so the request for a given document
/// is byte-identical across calls. Target length is capped at 200 words and
/// the reply language follows the document.
DocSummary summarize_document(const Document& doc, ChatProvider& llm, Embedder& embedder);

std::string summarization_prompt(const Document& doc);

struct QueryClassifierOptions {
  std::vector<std::string> general_tokens = {"general", "عمومی", "کلی"};
  std::vector<std::string> specific_tokens = {"specific", "مشخص", "خاص", "جزئی"};
};

/// Fixed classification prompt; the reply is scanned for the class tokens.
/// An unparseable reply is re-prompted once, then defaults to specific so a
/// pointed question is never answered from summaries alone.
QueryClass classify_query(const std::string& query, ChatProvider& llm,
                          const QueryClassifierOptions& opts = {});

struct RoutedResult {
  std::vector<Hit> hits;
  std::vector<std::string> selected_docs;  // stage-1 output, best first
  std::size_t chunks_scored = 0;           // stage-2 candidate count
};

/// Two-stage retrieval: per-document summaries are ranked first, then the
/// query is answered from the selected documents only. Specific queries get
/// the top chunks of those documents; general queries get each document's
/// summary (as a synthetic "summary:<doc_id>" hit) followed by its best
/// chunk, in stage-1 order.
class SummaryIndex {
 public:
  SummaryIndex() = default;

  /// Summarizes every document via the chat provider (fan-out bounded by
  /// `parallelism`) and embeds the summaries.
  static SummaryIndex build(const std::vector<Document>& docs, ChatProvider& llm,
                            Embedder& embedder, int parallelism = 1);

  static SummaryIndex from_summaries(std::vector<DocSummary> summaries);

  RoutedResult search(const VectorIndex& chunk_index, const EmbeddingVector& query,
                      QueryClass cls, int k_docs, int k_chunks) const;

  const std::vector<DocSummary>& summaries() const { return summaries_; }
  std::size_t dim() const { return vectors_.dim(); }

  /// Persists summaries.jsonl {"doc_id","summary"} plus the summary vectors
  /// as summary_vectors.bin with summary_manifest.json, row order matching
  /// the jsonl.
  void save(const std::filesystem::path& dir) const;
  static SummaryIndex load(const std::filesystem::path& dir);

 private:
  std::vector<DocSummary> summaries_;
  VectorIndex vectors_;  // one row per summary, id = doc_id
};

}  // namespace ragbench

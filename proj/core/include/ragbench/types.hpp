#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ragbench {

/// A source text unit. `text` is expected to be in normalized form
/// (see text::normalize) before it reaches chunking or retrieval.
struct Document {
  std::string id;
  std::string title;
  std::string text;
  std::map<std::string, std::string> meta;
};

/// A token window of one document. `text` is exactly the tokens
/// [token_start, token_end) of the parent, sliced on token span boundaries.
struct Chunk {
  std::string id;
  std::string doc_id;
  std::size_t index = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;
  std::string text;
};

/// Fixed-dimension embedding, the unit of retrieval. All vectors in one
/// index share a dimension and contain only finite values.
struct EmbeddingVector {
  std::string id;
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
};

/// One retrieval result. Within a ranked list scores are non-increasing
/// and ranks run 1,2,3,... (the routed "general" path interleaves summary
/// and chunk hits, where only the rank numbering is guaranteed).
struct Hit {
  std::string chunk_id;
  double score = 0.0;
  int rank = 0;
};

/// Per-query evaluation trace persisted as JSONL for audit.
struct EvalRecord {
  std::string query_id;
  std::vector<std::pair<std::string, double>> retrieved;  // (chunk_id, score)
  std::optional<int> gold_rank;                           // 1-based
  std::string answer;
  std::map<std::string, double> metrics;
};

}  // namespace ragbench

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragbench/chunking.hpp"
#include "ragbench/config.hpp"
#include "ragbench/index.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/summary_index.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

/// End-to-end retrieval-generation assembly: chunks the corpus, builds the
/// chunk index (and optionally the summary index), then serves retrieval and
/// grounded generation against the injected providers. Immutable once built.
class RagPipeline {
 public:
  struct Options {
    bool use_summary_index = false;
    TokenizerSpec tokenizer = {};
    int k_docs = 3;  // stage-1 width when the summary index routes
  };

  RagPipeline(RunConfig config, Embedder& embedder, ChatProvider& llm,
              const std::vector<Document>& docs, Options options);

  RagPipeline(RunConfig config, Embedder& embedder, ChatProvider& llm,
              const std::vector<Document>& docs)
      : RagPipeline(std::move(config), embedder, llm, docs, Options{}) {}

  /// Embeds the query and retrieves top-k chunks. With the summary index
  /// enabled the query is first classified and routed.
  std::vector<Hit> retrieve(const std::string& query) const;

  /// Concatenates the retrieved texts in rank order, separated by blank
  /// lines. Synthetic summary hits resolve to the stored summary text.
  std::string context_for(const std::vector<Hit>& hits) const;

  /// One grounded chat turn: retrieved context + question.
  std::string answer(const std::string& question) const;

  const RunConfig& config() const { return config_; }
  const std::vector<Chunk>& chunks() const { return chunks_; }
  const VectorIndex& index() const { return index_; }
  const std::unordered_map<std::string, std::string>& chunk_texts() const {
    return chunk_texts_;
  }
  ChatProvider& llm() const { return llm_; }
  Embedder& embedder() const { return embedder_; }

  /// Text for one hit id, whether chunk or synthetic summary hit.
  std::optional<std::string> text_of(const std::string& hit_id) const;

 private:
  RunConfig config_;
  Embedder& embedder_;
  ChatProvider& llm_;
  Options options_;
  std::vector<Chunk> chunks_;
  VectorIndex index_;
  std::unordered_map<std::string, std::string> chunk_texts_;
  std::optional<SummaryIndex> summary_index_;
};

}  // namespace ragbench

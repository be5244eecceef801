#include "ragbench/pipeline.hpp"

#include "ragbench/error.hpp"

namespace ragbench {

RagPipeline::RagPipeline(RunConfig config, Embedder& embedder, ChatProvider& llm,
                         const std::vector<Document>& docs, Options options)
    : config_(validate_run_config(config)),
      embedder_(embedder),
      llm_(llm),
      options_(options) {
  if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "pipeline needs at least one document");

  for (const auto& doc : docs) {
    auto doc_chunks =
        chunk_document(doc, config_.chunk_size, config_.chunk_overlap, options_.tokenizer);
    chunks_.insert(chunks_.end(), doc_chunks.begin(), doc_chunks.end());
  }
  if (chunks_.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus produced no chunks");

  index_ = VectorIndex::build(chunks_, embedder_);
  for (const auto& c : chunks_) chunk_texts_.emplace(c.id, c.text);

  if (options_.use_summary_index)
    summary_index_ = SummaryIndex::build(docs, llm_, embedder_, config_.parallelism);
}

std::vector<Hit> RagPipeline::retrieve(const std::string& query) const {
  const auto query_vec = embedder_.embed(query);
  if (!summary_index_) return index_.search(query_vec, config_.similarity_top_k);

  const QueryClass cls = classify_query(query, llm_);
  return summary_index_
      ->search(index_, query_vec, cls, options_.k_docs, config_.similarity_top_k)
      .hits;
}

std::optional<std::string> RagPipeline::text_of(const std::string& hit_id) const {
  auto it = chunk_texts_.find(hit_id);
  if (it != chunk_texts_.end()) return it->second;
  constexpr std::string_view prefix = "summary:";
  if (summary_index_ && hit_id.rfind(prefix, 0) == 0) {
    const std::string doc_id = hit_id.substr(prefix.size());
    for (const auto& s : summary_index_->summaries())
      if (s.doc_id == doc_id) return s.summary;
  }
  return std::nullopt;
}

std::string RagPipeline::context_for(const std::vector<Hit>& hits) const {
  std::string out;
  for (const auto& h : hits) {
    if (auto text = text_of(h.chunk_id)) {
      if (!out.empty()) out += "\n\n";
      out += *text;
    }
  }
  return out;
}

std::string RagPipeline::answer(const std::string& question) const {
  const auto hits = retrieve(question);
  std::string prompt;
  prompt += "Answer the question using only the context below. Reply in the "
            "same language as the question.\n\n";
  prompt += "Context:\n" + context_for(hits) + "\n\n";
  prompt += "Question: " + question;
  return llm_.chat({user_message(prompt)}, config_.temperature, config_.max_tokens);
}

}  // namespace ragbench

#include "ragbench/summary_index.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string summarization_prompt(const Document& doc) {
  std::string p;
  p += "Summarize the document below in at most 200 words. Write the summary "
       "in the same language as the document. Reply with the summary text "
       "only.\n\n";
  p += "Document:\n" + doc.text;
  return p;
}

DocSummary summarize_document(const Document& doc, ChatProvider& llm, Embedder& embedder) {
  if (doc.text.empty())
    throw Error(ErrorCode::Precondition, "cannot summarize empty document '" + doc.id + "'");
  const std::string reply = llm.chat({user_message(summarization_prompt(doc))}, 0.0, 512);
  if (reply.empty()) throw Error(ErrorCode::EmptyCompletion, "empty summary for '" + doc.id + "'");
  DocSummary s;
  s.doc_id = doc.id;
  s.summary = reply;
  s.embedding = embedder.embed(reply);
  s.embedding.id = doc.id;
  return s;
}

namespace {

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool contains_any(const std::string& haystack, const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    if (haystack.find(lower_ascii(t)) != std::string::npos) return true;
  }
  return false;
}

std::string classification_prompt(const std::string& query) {
  std::string p;
  p += "Classify the query below. Reply with exactly one word: \"general\" if "
       "it asks for a broad overview that a document summary could answer, or "
       "\"specific\" if it asks for a particular fact or detail.\n\n";
  p += "Query: " + query;
  return p;
}

}  // namespace

QueryClass classify_query(const std::string& query, ChatProvider& llm,
                          const QueryClassifierOptions& opts) {
  if (query.empty()) throw Error(ErrorCode::Precondition, "cannot classify empty query");

  std::vector<ChatMessage> messages{user_message(classification_prompt(query))};
  // Initial attempt plus one re-prompt, then the documented default.
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt > 0)
      messages.push_back(
          user_message("Reply with exactly one word, either general or specific."));
    const std::string reply = lower_ascii(text::normalize(llm.chat(messages, 0.0, 16)));
    messages.push_back(ChatMessage{ChatMessage::Role::assistant, reply});
    const bool g = contains_any(reply, opts.general_tokens);
    const bool s = contains_any(reply, opts.specific_tokens);
    if (g != s) return g ? QueryClass::general : QueryClass::specific;
  }
  return QueryClass::specific;
}

SummaryIndex SummaryIndex::build(const std::vector<Document>& docs, ChatProvider& llm,
                                 Embedder& embedder, int parallelism) {
  if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents to summarize");
  if (parallelism < 1) parallelism = 1;

  std::vector<DocSummary> summaries(docs.size());
  if (parallelism == 1 || docs.size() == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i)
      summaries[i] = summarize_document(docs[i], llm, embedder);
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mu;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= docs.size() || failed.load()) return;
        try {
          summaries[i] = summarize_document(docs[i], llm, embedder);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!failed.exchange(true)) first_error = e.what();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    const int n = std::min<int>(parallelism, static_cast<int>(docs.size()));
    threads.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed.load()) throw Error(ErrorCode::ProviderError, "summarization failed: " + first_error);
  }
  return from_summaries(std::move(summaries));
}

SummaryIndex SummaryIndex::from_summaries(std::vector<DocSummary> summaries) {
  if (summaries.empty()) throw Error(ErrorCode::EmptyCorpus, "no summaries");
  SummaryIndex si;
  std::vector<EmbeddingVector> vectors;
  std::vector<std::string> doc_ids;
  vectors.reserve(summaries.size());
  for (const auto& s : summaries) {
    if (s.summary.empty())
      throw Error(ErrorCode::Precondition, "summary for '" + s.doc_id + "' is empty");
    EmbeddingVector v = s.embedding;
    v.id = s.doc_id;
    vectors.push_back(std::move(v));
    doc_ids.push_back(s.doc_id);
  }
  si.vectors_ = VectorIndex::from_vectors(vectors, doc_ids);
  si.summaries_ = std::move(summaries);
  return si;
}

RoutedResult SummaryIndex::search(const VectorIndex& chunk_index, const EmbeddingVector& query,
                                  QueryClass cls, int k_docs, int k_chunks) const {
  if (summaries_.empty()) throw Error(ErrorCode::EmptyCorpus, "summary index is empty");
  if (k_docs < 1 || k_chunks < 1)
    throw Error(ErrorCode::Precondition, "k_docs and k_chunks must be >= 1");

  RoutedResult result;

  // Stage 1: rank document summaries.
  const auto doc_hits = vectors_.search(query, k_docs);
  std::unordered_map<std::string, bool> allow;
  std::unordered_map<std::string, double> summary_score;
  for (const auto& h : doc_hits) {
    result.selected_docs.push_back(h.chunk_id);  // summary rows are keyed by doc id
    allow.emplace(h.chunk_id, true);
    summary_score.emplace(h.chunk_id, h.score);
  }

  // Stage 2: only the selected documents' chunks are scored.
  if (cls == QueryClass::specific) {
    result.hits =
        chunk_index.search_filtered(query, k_chunks, allow, &result.chunks_scored);
    return result;
  }

  int rank = 1;
  for (const auto& doc_id : result.selected_docs) {
    std::unordered_map<std::string, bool> only{{doc_id, true}};
    std::size_t scored = 0;
    const auto best = chunk_index.search_filtered(query, 1, only, &scored);
    result.chunks_scored += scored;
    result.hits.push_back(Hit{"summary:" + doc_id, summary_score[doc_id], rank++});
    if (!best.empty()) result.hits.push_back(Hit{best[0].chunk_id, best[0].score, rank++});
  }
  return result;
}

void SummaryIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "summaries.jsonl", std::ios::binary);
    if (!out)
      throw Error(ErrorCode::IoError, "cannot write " + (dir / "summaries.jsonl").string());
    for (const auto& s : summaries_) {
      ordered_json j;
      j["doc_id"] = s.doc_id;
      j["summary"] = s.summary;
      out << j.dump() << "\n";
    }
  }
  std::vector<float> matrix;
  matrix.reserve(summaries_.size() * (summaries_.empty() ? 0 : summaries_.front().embedding.dim()));
  for (const auto& s : summaries_)
    matrix.insert(matrix.end(), s.embedding.values.begin(), s.embedding.values.end());
  index_io::write_matrix(dir / "summary_vectors.bin", dir / "summary_manifest.json", matrix,
                         summaries_.empty() ? 0 : summaries_.front().embedding.dim(),
                         summaries_.size());
}

SummaryIndex SummaryIndex::load(const std::filesystem::path& dir) {
  std::size_t dim = 0, rows = 0;
  const auto matrix = index_io::read_matrix(dir / "summary_vectors.bin",
                                            dir / "summary_manifest.json", &dim, &rows);

  std::ifstream in(dir / "summaries.jsonl");
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + (dir / "summaries.jsonl").string());
  std::vector<DocSummary> summaries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      DocSummary s;
      s.doc_id = j.at("doc_id").get<std::string>();
      s.summary = j.at("summary").get<std::string>();
      summaries.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptIndex, (dir / "summaries.jsonl").string() + ": " + e.what());
    }
  }
  if (summaries.size() != rows)
    throw Error(ErrorCode::CorruptIndex, "summaries.jsonl row count does not match manifest");
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    summaries[i].embedding.id = summaries[i].doc_id;
    summaries[i].embedding.values.assign(matrix.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                         matrix.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  return from_summaries(std::move(summaries));
}

}  // namespace ragbench

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ragbench/providers.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

/// A reading-comprehension question. `answers` is empty exactly when the
/// question is marked unanswerable.
struct QAItem {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  std::string context_doc_id;
  bool is_impossible = false;
};

/// A four-option multiple-choice question over one document.
struct MCQItem {
  std::string id;
  std::string question;
  std::vector<std::string> options;  // exactly 4, pairwise distinct
  int answer_index = 0;              // 0..3
  std::string doc_id;
};

struct QADataset {
  std::vector<QAItem> items;
  std::vector<Document> documents;
};

/// Canonical text normalization, re-exported here because every loader
/// applies it. See text::normalize for the exact rules.
std::string normalize_text(std::string_view raw);

struct DedupOptions {
  std::size_t shingle_size = 5;     // words per shingle
  double jaccard_threshold = 0.9;   // drop when similarity exceeds this
};

/// Removes exact duplicates (identical normalized text) and near-duplicates
/// (shingle Jaccard above the threshold against an earlier kept document).
/// Output is a stable subsequence of the input. Throws DuplicateId when two
/// input documents share an id.
std::vector<Document> dedup_documents(const std::vector<Document>& docs,
                                      const DedupOptions& opts = {});

/// Jaccard similarity of the two documents' word shingle sets, computed the
/// same way dedup_documents does.
double shingle_jaccard(const std::string& a, const std::string& b,
                       std::size_t shingle_size = 5);

/// SQuAD-v2-style reader: one QAItem per question, one Document per distinct
/// paragraph context. Paragraph text and answers are normalized on load.
QADataset load_qa_dataset(const std::filesystem::path& path);
void save_qa_dataset(const QADataset& ds, const std::filesystem::path& path);

/// JSON-lines reader, one MCQItem object per line:
/// {"id","question","options":[s1..s4],"answer_index","doc_id"}.
std::vector<MCQItem> load_mcq_dataset(const std::filesystem::path& path);
void save_mcq_dataset(const std::vector<MCQItem>& items, const std::filesystem::path& path);

/// Raw document corpus: either a directory of UTF-8 .txt files (filename
/// stem = doc id) or a JSONL file {"id","title","text"}.
std::vector<Document> load_documents(const std::filesystem::path& path);
void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path);

/// Asks the chat provider for `n` multiple-choice questions about `doc`,
/// as strict JSON. Malformed output is re-prompted at most twice before
/// MalformedModelOutput. Generated items reference doc.id.
std::vector<MCQItem> generate_mcq(const Document& doc, ChatProvider& llm, int n);

void validate_mcq_item(const MCQItem& item);

}  // namespace ragbench

#include "ragbench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string normalize_text(std::string_view raw) { return text::normalize(raw); }

namespace {

std::vector<std::string> words_of(const std::string& normalized) {
  std::vector<std::string> words;
  std::istringstream ss(normalized);
  std::string w;
  while (ss >> w) words.push_back(w);
  return words;
}

std::unordered_set<std::uint64_t> shingle_set(const std::string& normalized,
                                              std::size_t shingle_size) {
  const auto words = words_of(normalized);
  std::unordered_set<std::uint64_t> out;
  if (words.empty()) return out;
  if (words.size() < shingle_size) {
    std::string joined;
    for (const auto& w : words) {
      joined += w;
      joined += '\x1f';
    }
    out.insert(text::fnv1a64(joined));
    return out;
  }
  for (std::size_t i = 0; i + shingle_size <= words.size(); ++i) {
    std::string joined;
    for (std::size_t j = i; j < i + shingle_size; ++j) {
      joined += words[j];
      joined += '\x1f';
    }
    out.insert(text::fnv1a64(joined));
  }
  return out;
}

double jaccard(const std::unordered_set<std::uint64_t>& a,
               const std::unordered_set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (auto h : small) inter += large.count(h);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

double shingle_jaccard(const std::string& a, const std::string& b, std::size_t shingle_size) {
  return jaccard(shingle_set(normalize_text(a), shingle_size),
                 shingle_set(normalize_text(b), shingle_size));
}

std::vector<Document> dedup_documents(const std::vector<Document>& docs,
                                      const DedupOptions& opts) {
  std::unordered_set<std::string> ids;
  for (const auto& d : docs) {
    if (!ids.insert(d.id).second)
      throw Error(ErrorCode::DuplicateId, "document id '" + d.id + "' appears twice");
  }

  std::vector<Document> kept;
  std::unordered_set<std::uint64_t> exact_hashes;
  std::vector<std::unordered_set<std::uint64_t>> kept_shingles;

  for (const auto& d : docs) {
    const std::string norm = normalize_text(d.text);
    const std::uint64_t h = text::fnv1a64(norm);
    if (exact_hashes.count(h)) continue;

    auto shingles = shingle_set(norm, opts.shingle_size);
    bool near_dup = false;
    for (const auto& prev : kept_shingles) {
      if (jaccard(shingles, prev) > opts.jaccard_threshold) {
        near_dup = true;
        break;
      }
    }
    if (near_dup) continue;

    exact_hashes.insert(h);
    kept_shingles.push_back(std::move(shingles));
    kept.push_back(d);
  }
  return kept;
}

QADataset load_qa_dataset(const std::filesystem::path& path) {
  const json root = parse_file(path);
  if (!root.contains("data") || !root["data"].is_array())
    throw Error(ErrorCode::SchemaError, "top-level 'data' array missing");

  QADataset ds;
  std::unordered_map<std::string, std::string> doc_id_by_text;
  std::size_t article_idx = 0;

  for (const auto& article : root["data"]) {
    if (!article.contains("paragraphs") || !article["paragraphs"].is_array())
      throw Error(ErrorCode::SchemaError, "article missing 'paragraphs'");
    const std::string title =
        article.contains("title") ? normalize_text(article["title"].get<std::string>()) : "";

    std::size_t para_idx = 0;
    for (const auto& para : article["paragraphs"]) {
      if (!para.contains("context") || !para.contains("qas"))
        throw Error(ErrorCode::SchemaError, "paragraph missing 'context' or 'qas'");
      const std::string context = normalize_text(para["context"].get<std::string>());

      std::string doc_id;
      auto it = doc_id_by_text.find(context);
      if (it != doc_id_by_text.end()) {
        doc_id = it->second;
      } else {
        doc_id = (title.empty() ? "article" + std::to_string(article_idx) : title) + "::p" +
                 std::to_string(para_idx);
        doc_id_by_text.emplace(context, doc_id);
        ds.documents.push_back(Document{doc_id, title, context, {}});
      }

      for (const auto& qa : para["qas"]) {
        if (!qa.contains("id") || !qa.contains("question"))
          throw Error(ErrorCode::SchemaError, "qa entry missing 'id' or 'question'");
        QAItem item;
        item.id = qa["id"].is_string() ? qa["id"].get<std::string>() : qa["id"].dump();
        item.question = normalize_text(qa["question"].get<std::string>());
        item.context_doc_id = doc_id;
        item.is_impossible = qa.value("is_impossible", false);
        if (qa.contains("answers")) {
          for (const auto& ans : qa["answers"]) {
            if (!ans.contains("text"))
              throw Error(ErrorCode::SchemaError, "answer missing 'text'");
            const std::string t = normalize_text(ans["text"].get<std::string>());
            if (!t.empty()) item.answers.push_back(t);
          }
        }
        if (item.is_impossible != item.answers.empty())
          throw Error(ErrorCode::SchemaError,
                      "qa '" + item.id + "': is_impossible must match empty answers");
        ds.items.push_back(std::move(item));
      }
      ++para_idx;
    }
    ++article_idx;
  }
  return ds;
}

void save_qa_dataset(const QADataset& ds, const std::filesystem::path& path) {
  // Regroup items under their context documents so the round trip preserves
  // the distribution shape.
  std::unordered_map<std::string, const Document*> doc_by_id;
  for (const auto& d : ds.documents) doc_by_id[d.id] = &d;

  ordered_json data = ordered_json::array();
  std::unordered_map<std::string, std::size_t> para_slot;
  for (const auto& d : ds.documents) {
    ordered_json para;
    para["context"] = d.text;
    para["qas"] = ordered_json::array();
    ordered_json article;
    article["title"] = d.title;
    article["paragraphs"] = ordered_json::array({para});
    para_slot[d.id] = data.size();
    data.push_back(std::move(article));
  }
  for (const auto& item : ds.items) {
    auto slot = para_slot.find(item.context_doc_id);
    if (slot == para_slot.end())
      throw Error(ErrorCode::SchemaError,
                  "item '" + item.id + "' references unknown document");
    ordered_json qa;
    qa["id"] = item.id;
    qa["question"] = item.question;
    qa["answers"] = ordered_json::array();
    for (const auto& a : item.answers)
      qa["answers"].push_back({{"text", a}, {"answer_start", -1}});
    qa["is_impossible"] = item.is_impossible;
    data[slot->second]["paragraphs"][0]["qas"].push_back(std::move(qa));
  }

  ordered_json root;
  root["data"] = std::move(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << root.dump(1) << "\n";
}

void validate_mcq_item(const MCQItem& item) {
  if (item.options.size() != 4)
    throw Error(ErrorCode::SchemaError,
                "mcq '" + item.id + "': expected 4 options, got " +
                    std::to_string(item.options.size()));
  std::set<std::string> distinct(item.options.begin(), item.options.end());
  if (distinct.size() != 4)
    throw Error(ErrorCode::SchemaError, "mcq '" + item.id + "': options must be distinct");
  if (item.answer_index < 0 || item.answer_index > 3)
    throw Error(ErrorCode::SchemaError, "mcq '" + item.id + "': answer_index out of range");
}

std::vector<MCQItem> load_mcq_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::vector<MCQItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    MCQItem item;
    try {
      item.id = j.at("id").get<std::string>();
      item.question = j.at("question").get<std::string>();
      item.options = j.at("options").get<std::vector<std::string>>();
      item.answer_index = j.at("answer_index").get<int>();
      item.doc_id = j.value("doc_id", "");
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    validate_mcq_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

void save_mcq_dataset(const std::vector<MCQItem>& items, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& item : items) {
    ordered_json j;
    j["id"] = item.id;
    j["question"] = item.question;
    j["options"] = item.options;
    j["answer_index"] = item.answer_index;
    j["doc_id"] = item.doc_id;
    out << j.dump() << "\n";
  }
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::vector<Document> docs;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) throw Error(ErrorCode::IoError, "cannot open " + f.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      docs.push_back(Document{f.stem().string(), "", normalize_text(ss.str()), {}});
    }
    return docs;
  }

  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      docs.push_back(Document{j.at("id").get<std::string>(), j.value("title", ""),
                              normalize_text(j.at("text").get<std::string>()), {}});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& d : docs) {
    ordered_json j;
    j["id"] = d.id;
    j["title"] = d.title;
    j["text"] = d.text;
    out << j.dump() << "\n";
  }
}

namespace {

std::string mcq_generation_prompt(const Document& doc, int n) {
  std::string p;
  p += "Write " + std::to_string(n) +
       " multiple-choice questions that test comprehension of the document "
       "below. Write questions and options in the same language as the "
       "document.\n";
  p += "Respond with ONLY a JSON array. Each element must be an object with "
       "exactly these keys: \"question\" (string), \"options\" (array of 4 "
       "distinct strings), \"answer_index\" (integer 0-3).\n\n";
  p += "Document:\n" + doc.text;
  return p;
}

}  // namespace

std::vector<MCQItem> generate_mcq(const Document& doc, ChatProvider& llm, int n) {
  if (n < 1) throw Error(ErrorCode::Precondition, "generate_mcq requires n >= 1");
  if (doc.text.empty())
    throw Error(ErrorCode::Precondition, "generate_mcq requires non-empty document text");

  std::vector<ChatMessage> messages{user_message(mcq_generation_prompt(doc, n))};
  std::string last_error;

  // Initial attempt plus exactly two re-prompts.
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (attempt > 0) {
      messages.push_back(user_message(
          "The previous reply was not valid (" + last_error +
          "). Respond again with ONLY the JSON array described above."));
    }
    const std::string reply = llm.chat(messages, 0.0, 2048);
    messages.push_back(ChatMessage{ChatMessage::Role::assistant, reply});

    json parsed;
    try {
      parsed = json::parse(reply);
    } catch (const json::exception& e) {
      last_error = std::string("not JSON: ") + e.what();
      continue;
    }
    if (!parsed.is_array() || parsed.size() != static_cast<std::size_t>(n)) {
      last_error = "expected a JSON array of " + std::to_string(n) + " items";
      continue;
    }

    std::vector<MCQItem> items;
    bool ok = true;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      MCQItem item;
      item.id = doc.id + "-mcq" + std::to_string(i);
      item.doc_id = doc.id;
      try {
        item.question = parsed[i].at("question").get<std::string>();
        item.options = parsed[i].at("options").get<std::vector<std::string>>();
        item.answer_index = parsed[i].at("answer_index").get<int>();
        validate_mcq_item(item);
      } catch (const std::exception& e) {
        last_error = e.what();
        ok = false;
        break;
      }
      items.push_back(std::move(item));
    }
    if (ok) return items;
  }
  throw Error(ErrorCode::MalformedModelOutput,
              "mcq generation for '" + doc.id + "' failed after 2 re-prompts: " + last_error);
}

}  // namespace ragbench

#include "ragbench/eval_generation.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

using nlohmann::json;

std::optional<int> extract_choice(const std::string& answer_text,
                                  const std::vector<std::string>& options) {
  if (options.size() != 4)
    throw Error(ErrorCode::Precondition, "extract_choice expects exactly 4 options");

  const auto cps = text::utf8_decode(text::normalize(answer_text));

  // 1) Leading Latin digit 1-4 or letter A-D.
  if (!cps.empty()) {
    const char32_t first = cps[0];
    if (first >= U'1' && first <= U'4') return static_cast<int>(first - U'1');
    if (first >= U'A' && first <= U'D') return static_cast<int>(first - U'A');
    if (first >= U'a' && first <= U'd') return static_cast<int>(first - U'a');
  }

  // 2) First Persian digit 1-4 anywhere (extended Arabic-Indic block).
  for (char32_t cp : cps) {
    if (cp >= 0x06F1 && cp <= 0x06F4) return static_cast<int>(cp - 0x06F1);
  }

  // 3) Exact normalized option text inside the answer.
  const std::string norm_answer = text::normalize(answer_text);
  for (std::size_t i = 0; i < options.size(); ++i) {
    const std::string norm_opt = text::normalize(options[i]);
    if (!norm_opt.empty() && norm_answer.find(norm_opt) != std::string::npos)
      return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string mcqa_prompt(const MCQItem& item, const std::string& context) {
  std::string p;
  p += "Answer the multiple-choice question using the context below. Reply "
       "with the option number only (1, 2, 3 or 4).\n\n";
  p += "Context:\n" + context + "\n\n";
  p += "Question: " + item.question + "\n";
  for (std::size_t i = 0; i < item.options.size(); ++i)
    p += std::to_string(i + 1) + ") " + item.options[i] + "\n";
  return p;
}

McqaResult run_mcqa(const std::vector<MCQItem>& items, const RagPipeline& pipeline) {
  if (items.empty()) throw Error(ErrorCode::Precondition, "run_mcqa requires items");

  McqaResult result;
  result.records.reserve(items.size());
  long completed = 0;

  for (const auto& item : items) {
    EvalRecord record;
    record.query_id = item.id;
    try {
      const auto hits = pipeline.retrieve(item.question);
      for (const auto& h : hits) record.retrieved.emplace_back(h.chunk_id, h.score);
      const std::string prompt = mcqa_prompt(item, pipeline.context_for(hits));
      record.answer = pipeline.llm().chat({user_message(prompt)}, pipeline.config().temperature,
                                          pipeline.config().max_tokens);
      ++completed;

      const auto choice = extract_choice(record.answer, item.options);
      record.metrics["choice"] = choice ? static_cast<double>(*choice) : -1.0;
      record.metrics["flagged"] = choice ? 0.0 : 1.0;
      const bool correct = choice && *choice == item.answer_index;
      record.metrics["correct"] = correct ? 1.0 : 0.0;
      if (correct) ++result.correct;
      if (!choice) ++result.flagged;
    } catch (const Error& e) {
      ++result.failures;
      record.metrics["provider_error"] = 1.0;
      record.answer = e.what();
    }
    result.records.push_back(std::move(record));
  }

  if (completed == 0)
    throw Error(ErrorCode::AllItemsFailed, "no MCQA item completed; see per-item records");
  result.accuracy =
      100.0 * static_cast<double>(result.correct) / static_cast<double>(items.size());
  return result;
}

// ---------------------------------------------------------------------------
// RAGAS metrics

namespace {

std::string joined_contexts(const std::vector<std::string>& contexts) {
  std::string out;
  for (const auto& c : contexts) {
    if (!out.empty()) out += "\n---\n";
    out += c;
  }
  return out;
}

/// One judge exchange that must come back as a JSON array; re-prompts once.
json ask_for_json_array(ChatProvider& judge, const std::string& prompt,
                        const char* what) {
  std::vector<ChatMessage> messages{user_message(prompt)};
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt > 0)
      messages.push_back(user_message("The previous reply was not a valid JSON array (" +
                                      last_error + "). Respond with ONLY the JSON array."));
    const std::string reply = judge.chat(messages, 0.0, 1024);
    messages.push_back(ChatMessage{ChatMessage::Role::assistant, reply});
    try {
      json parsed = json::parse(reply);
      if (parsed.is_array()) return parsed;
      last_error = "not an array";
    } catch (const json::exception& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::MalformedJudgeOutput,
              std::string(what) + " after 1 re-prompt: " + last_error);
}

std::vector<std::string> parse_string_list(const json& arr, const char* what) {
  std::vector<std::string> out;
  for (const auto& item : arr) {
    if (!item.is_string())
      throw Error(ErrorCode::MalformedJudgeOutput, std::string(what) + ": non-string element");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<bool> parse_flag_list(const json& arr, std::size_t expected, const char* what) {
  if (arr.size() != expected)
    throw Error(ErrorCode::MalformedJudgeOutput,
                std::string(what) + ": expected " + std::to_string(expected) + " flags, got " +
                    std::to_string(arr.size()));
  std::vector<bool> out;
  for (const auto& item : arr) {
    if (item.is_boolean()) out.push_back(item.get<bool>());
    else if (item.is_number_integer()) out.push_back(item.get<int>() != 0);
    else
      throw Error(ErrorCode::MalformedJudgeOutput, std::string(what) + ": non-boolean element");
  }
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::DimensionMismatch, "cosine over mismatched dims");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += static_cast<double>(a.values[i]) * b.values[i];
    na += static_cast<double>(a.values[i]) * a.values[i];
    nb += static_cast<double>(b.values[i]) * b.values[i];
  }
  if (na < 1e-24 || nb < 1e-24) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

namespace {

/// Shared decompose-then-judge exchange behind faithfulness and recall.
JudgeVerdict statement_verdict(ChatProvider& judge, const std::string& decompose_prompt,
                               const std::vector<std::string>& contexts,
                               const char* judge_question) {
  JudgeVerdict verdict;
  verdict.statements = parse_string_list(
      ask_for_json_array(judge, decompose_prompt, "statement decomposition"), "statements");
  if (verdict.statements.empty()) return verdict;

  std::string verdict_prompt = std::string("For each statement below, decide whether it ") +
                               judge_question +
                               " the context. Respond with ONLY a JSON array of booleans, "
                               "same order and length as the statements.\n\nContext:\n" +
                               joined_contexts(contexts) + "\n\nStatements:\n";
  for (std::size_t i = 0; i < verdict.statements.size(); ++i)
    verdict_prompt += std::to_string(i + 1) + ". " + verdict.statements[i] + "\n";

  verdict.supported =
      parse_flag_list(ask_for_json_array(judge, verdict_prompt, "statement verdicts"),
                      verdict.statements.size(), "statement verdicts");
  return verdict;
}

double supported_fraction(const JudgeVerdict& verdict) {
  if (verdict.statements.size() != verdict.supported.size())
    throw Error(ErrorCode::MalformedJudgeOutput, "verdict flag count diverges from statements");
  const auto yes = std::count(verdict.supported.begin(), verdict.supported.end(), true);
  return static_cast<double>(yes) / static_cast<double>(verdict.supported.size());
}

}  // namespace

std::optional<double> RagasJudge::faithfulness(const std::string& question,
                                               const std::string& answer,
                                               const std::vector<std::string>& contexts) {
  if (answer.empty()) throw Error(ErrorCode::Precondition, "faithfulness requires an answer");

  const std::string decompose_prompt =
      "Break the answer below into atomic factual statements. Respond with "
      "ONLY a JSON array of strings, one statement each. Reply [] if the "
      "answer contains no factual statement.\n\nQuestion: " +
      question + "\nAnswer: " + answer;
  const auto verdict = statement_verdict(judge_, decompose_prompt, contexts, "is supported by");
  if (verdict.statements.empty()) return std::nullopt;
  return supported_fraction(verdict);
}

double RagasJudge::answer_relevancy(const std::string& question, const std::string& answer,
                                    int n) {
  if (answer.empty()) throw Error(ErrorCode::Precondition, "answer_relevancy requires an answer");
  if (n < 1) throw Error(ErrorCode::Precondition, "answer_relevancy requires n >= 1");

  const std::string prompt =
      "Write " + std::to_string(n) +
      " plausible questions that the answer below would be a complete answer "
      "to. Respond with ONLY a JSON array of " +
      std::to_string(n) + " strings.\n\nAnswer: " + answer;
  const auto generated = parse_string_list(
      ask_for_json_array(judge_, prompt, "question generation"), "generated questions");
  if (generated.size() != static_cast<std::size_t>(n))
    throw Error(ErrorCode::MalformedJudgeOutput,
                "expected " + std::to_string(n) + " generated questions, got " +
                    std::to_string(generated.size()));

  std::vector<std::string> batch;
  batch.push_back(question);
  for (const auto& g : generated) batch.push_back(g.empty() ? " " : g);
  const auto vectors = embedder_.embed_batch(batch);

  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += cosine(vectors[0], vectors[static_cast<std::size_t>(i) + 1]);
  return std::clamp(sum / n, 0.0, 1.0);
}

double context_precision_from_labels(const std::vector<int>& relevance) {
  long relevant_so_far = 0;
  long total_relevant = 0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    const int rel = relevance[k] ? 1 : 0;
    relevant_so_far += rel;
    total_relevant += rel;
    if (rel) {
      const double precision_at_k =
          static_cast<double>(relevant_so_far) / static_cast<double>(k + 1);
      weighted += precision_at_k;
    }
  }
  if (total_relevant == 0) return 0.0;
  return weighted / static_cast<double>(total_relevant);
}

double RagasJudge::context_precision(const std::string& question,
                                     const std::vector<std::string>& contexts,
                                     const std::string& ground_truth) {
  if (contexts.empty())
    throw Error(ErrorCode::Precondition, "context_precision requires contexts");

  std::string prompt =
      "For each context below, decide whether it is relevant for answering "
      "the question given the ground-truth answer. Respond with ONLY a JSON "
      "array of 0/1 labels, one per context, in order.\n\nQuestion: " +
      question + "\nGround truth: " + ground_truth + "\n\n";
  for (std::size_t i = 0; i < contexts.size(); ++i)
    prompt += "Context " + std::to_string(i + 1) + ":\n" + contexts[i] + "\n\n";

  const auto flags =
      parse_flag_list(ask_for_json_array(judge_, prompt, "relevance labels"), contexts.size(),
                      "relevance labels");
  std::vector<int> labels(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) labels[i] = flags[i] ? 1 : 0;
  return context_precision_from_labels(labels);
}

double RagasJudge::context_recall(const std::string& ground_truth,
                                  const std::vector<std::string>& contexts) {
  if (ground_truth.empty())
    throw Error(ErrorCode::Precondition, "context_recall requires a ground truth");

  const std::string decompose_prompt =
      "Break the ground-truth answer below into atomic statements. Respond "
      "with ONLY a JSON array of strings.\n\nGround truth: " +
      ground_truth;
  const auto verdict =
      statement_verdict(judge_, decompose_prompt, contexts, "can be attributed to");
  if (verdict.statements.empty()) return 0.0;
  return supported_fraction(verdict);
}

}  // namespace ragbench

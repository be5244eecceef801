#include <doctest.h>

#include <algorithm>

#include "ragbench/error.hpp"
#include "ragbench/eval_generation.hpp"
#include "test_support.hpp"

using namespace ragbench;

namespace {

const std::vector<std::string> kOptions = {"گزینه اول", "گزینه دوم", "گزینه سوم", "چهارمین"};

std::vector<Document> tiny_corpus() {
  return {
      Document{"d1", "", testing::token_text(40, "alpha"), {}},
      Document{"d2", "", testing::token_text(40, "beta"), {}},
  };
}

std::vector<MCQItem> mcq_items(int n) {
  std::vector<MCQItem> items;
  for (int i = 0; i < n; ++i) {
    MCQItem item;
    item.id = "m" + std::to_string(i);
    item.question = "question number " + std::to_string(i);
    item.options = {"opt a" + std::to_string(i), "opt b" + std::to_string(i),
                    "opt c" + std::to_string(i), "opt d" + std::to_string(i)};
    item.answer_index = i % 4;
    item.doc_id = "d1";
    items.push_back(std::move(item));
  }
  return items;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.chunk_size = 16;
  cfg.chunk_overlap = 4;
  cfg.similarity_top_k = 3;
  return cfg;
}

/// Brute-force oracle for the rank-weighted precision formula, written as
/// the direct double loop over the definition.
double oracle_context_precision(const std::vector<int>& rel) {
  double numer = 0.0;
  long denom = 0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (!rel[k]) continue;
    ++denom;
    long hits = 0;
    for (std::size_t i = 0; i <= k; ++i) hits += rel[i];
    numer += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return denom == 0 ? 0.0 : numer / static_cast<double>(denom);
}

}  // namespace

TEST_SUITE("eval_generation") {

TEST_CASE("extract_choice: latin digits and letters lead") {
  CHECK(extract_choice("2", kOptions) == 1);
  CHECK(extract_choice("4) something", kOptions) == 3);
  CHECK(extract_choice("A", kOptions) == 0);
  CHECK(extract_choice("c is correct", kOptions) == 2);
  CHECK(extract_choice("  3 ", kOptions) == 2);
}

TEST_CASE("extract_choice: persian digit anywhere in the reply") {
  // "گزینه ۳ صحیح است" carries the Persian digit three (U+06F3).
  const std::string reply = "گزینه \xDB\xB3 صحیح است";
  CHECK(extract_choice(reply, kOptions) == 2);
  CHECK(extract_choice("\xDB\xB1", kOptions) == 0);  // ۱
}

TEST_CASE("extract_choice: option text quoted verbatim") {
  CHECK(extract_choice("پاسخ درست: گزینه دوم", kOptions) == 1);
  CHECK(extract_choice("the answer is چهارمین indeed", kOptions) == 3);
}

TEST_CASE("extract_choice: unparseable replies return none") {
  CHECK(!extract_choice("E", kOptions).has_value());
  CHECK(!extract_choice("", kOptions).has_value());
  CHECK(!extract_choice("I cannot decide", kOptions).has_value());
  CHECK(!extract_choice("5", kOptions).has_value());
}

TEST_CASE("extract_choice: first matching rule wins") {
  // Leading latin digit beats the option text appearing later.
  CHECK(extract_choice("1 because گزینه سوم", kOptions) == 0);
}

TEST_CASE("run_mcqa: 8 of 10 gold answers gives exactly 80.0") {
  const auto items = mcq_items(10);
  // Scripted replies: gold for all but items 2 and 5.
  std::vector<std::string> replies;
  for (int i = 0; i < 10; ++i) {
    const int gold = i % 4;
    const int given = (i == 2 || i == 5) ? (gold + 1) % 4 : gold;
    replies.push_back(std::to_string(given + 1));
  }
  DeterministicEmbedder embedder(32, 4);
  ScriptedChatProvider llm(replies);
  RagPipeline pipeline(small_config(), embedder, llm, tiny_corpus());

  const auto result = run_mcqa(items, pipeline);
  CHECK(result.accuracy == 80.0);
  CHECK(result.correct == 8);
  CHECK(result.flagged == 0);
  CHECK(result.records.size() == 10);
}

TEST_CASE("run_mcqa: unparseable replies score zero and are flagged") {
  const auto items = mcq_items(10);
  ScriptedChatProvider llm({"E"}, true);
  DeterministicEmbedder embedder(32, 4);
  RagPipeline pipeline(small_config(), embedder, llm, tiny_corpus());

  const auto result = run_mcqa(items, pipeline);
  CHECK(result.accuracy == 0.0);
  CHECK(result.flagged == 10);
  for (const auto& rec : result.records) CHECK(rec.metrics.at("flagged") == 1.0);
}

TEST_CASE("run_mcqa: accuracy is invariant under item permutation") {
  auto items = mcq_items(8);
  DeterministicEmbedder embedder(32, 4);
  // Deterministic per-conversation answers make the permutation meaningful.
  HashAnswerChatProvider llm(11);
  RagPipeline pipeline(small_config(), embedder, llm, tiny_corpus());
  const double before = run_mcqa(items, pipeline).accuracy;

  std::reverse(items.begin(), items.end());
  const double after = run_mcqa(items, pipeline).accuracy;
  CHECK(before == after);
}

TEST_CASE("run_mcqa: provider failures are recorded, run continues") {
  const auto items = mcq_items(3);
  // Scripted provider runs out after 2 replies; third item records a failure.
  ScriptedChatProvider llm({"1", "1"});
  DeterministicEmbedder embedder(32, 4);
  RagPipeline pipeline(small_config(), embedder, llm, tiny_corpus());

  const auto result = run_mcqa(items, pipeline);
  CHECK(result.failures == 1);
  CHECK(result.records.size() == 3);
  CHECK(result.records[2].metrics.count("provider_error") == 1);
}

TEST_CASE("faithfulness: 3 of 4 statements supported gives 0.75") {
  DeterministicEmbedder embedder(16, 1);
  ScriptedChatProvider judge_llm({
      R"(["s1","s2","s3","s4"])",
      R"([true,true,true,false])",
  });
  RagasJudge judge(judge_llm, embedder);
  const auto score = judge.faithfulness("q", "answer text", {"ctx1", "ctx2"});
  REQUIRE(score.has_value());
  CHECK(*score == doctest::Approx(0.75));
}

TEST_CASE("faithfulness: all supported gives 1.0, zero statements gives null") {
  DeterministicEmbedder embedder(16, 1);
  {
    ScriptedChatProvider judge_llm({R"(["a","b"])", R"([true,true])"});
    RagasJudge judge(judge_llm, embedder);
    CHECK(*judge.faithfulness("q", "a", {"c"}) == doctest::Approx(1.0));
  }
  {
    ScriptedChatProvider judge_llm({R"([])"});
    RagasJudge judge(judge_llm, embedder);
    CHECK(!judge.faithfulness("q", "a", {"c"}).has_value());
  }
}

TEST_CASE("faithfulness: malformed judge output is re-prompted once, then fails") {
  DeterministicEmbedder embedder(16, 1);
  {
    // Malformed once, valid on the re-prompt.
    ScriptedChatProvider judge_llm({"not json", R"(["s1"])", R"([true])"});
    RagasJudge judge(judge_llm, embedder);
    CHECK(*judge.faithfulness("q", "a", {"c"}) == doctest::Approx(1.0));
    CHECK(judge_llm.calls().size() == 3);
  }
  {
    ScriptedChatProvider judge_llm({"no", "still no", "unreached"});
    RagasJudge judge(judge_llm, embedder);
    try {
      judge.faithfulness("q", "a", {"c"});
      FAIL("expected MalformedJudgeOutput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedJudgeOutput);
    }
  }
  {
    // Wrong verdict arity counts as malformed.
    ScriptedChatProvider judge_llm({R"(["s1","s2"])", R"([true])", R"([true])"});
    RagasJudge judge(judge_llm, embedder);
    CHECK_THROWS_AS(judge.faithfulness("q", "a", {"c"}), Error);
  }
}

TEST_CASE("answer_relevancy: identical regenerated questions give 1.0") {
  DeterministicEmbedder embedder(32, 2);
  const std::string question = "what is the capital?";
  ScriptedChatProvider judge_llm(
      {R"(["what is the capital?","what is the capital?","what is the capital?"])"});
  RagasJudge judge(judge_llm, embedder);
  CHECK(judge.answer_relevancy(question, "the capital is X") ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("answer_relevancy: mean of controlled cosines 0.9/0.8/0.7 is 0.8") {
  // MapEmbedder pins exact vectors so the three cosines are exactly known.
  testing::MapEmbedder embedder(4);
  embedder.set("Q", {1, 0, 0, 0});
  auto with_cos = [](double c) {
    return std::vector<float>{static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c)),
                              0.0f, 0.0f};
  };
  embedder.set("g1", with_cos(0.9));
  embedder.set("g2", with_cos(0.8));
  embedder.set("g3", with_cos(0.7));

  ScriptedChatProvider judge_llm({R"(["g1","g2","g3"])"});
  RagasJudge judge(judge_llm, embedder);
  CHECK(judge.answer_relevancy("Q", "answer") == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("answer_relevancy: n=1 returns the single cosine") {
  testing::MapEmbedder embedder(4);
  embedder.set("Q", {1, 0, 0, 0});
  embedder.set("g", {0.6f, 0.8f, 0, 0});
  ScriptedChatProvider judge_llm({R"(["g"])"});
  RagasJudge judge(judge_llm, embedder);
  CHECK(judge.answer_relevancy("Q", "a", 1) == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("context_precision: pattern [1,0,1] expands to 0.8333") {
  // Oracle by hand: (1/1 + 2/3) / 2 = 0.83333...
  CHECK(context_precision_from_labels({1, 0, 1}) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(context_precision_from_labels({1, 0, 1}) == doctest::Approx(0.8333).epsilon(1e-4));
}

TEST_CASE("context_precision: all relevant 1.0, none relevant 0.0") {
  CHECK(context_precision_from_labels({1, 1, 1}) == 1.0);
  CHECK(context_precision_from_labels({0, 0, 0}) == 0.0);
}

TEST_CASE("context_precision matches the brute-force oracle on all 8 patterns at k=3") {
  for (int bits = 0; bits < 8; ++bits) {
    const std::vector<int> rel = {(bits >> 2) & 1, (bits >> 1) & 1, bits & 1};
    CHECK(context_precision_from_labels(rel) ==
          doctest::Approx(oracle_context_precision(rel)).epsilon(1e-12));
  }
}

TEST_CASE("context_precision: earlier relevant items never score lower") {
  // Moving every relevant label earlier is rank-improving; verify the
  // strongest form on all patterns of length 5 against the sorted pattern.
  for (int bits = 0; bits < 32; ++bits) {
    std::vector<int> rel(5);
    for (int i = 0; i < 5; ++i) rel[static_cast<std::size_t>(i)] = (bits >> i) & 1;
    auto sorted = rel;
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    CHECK(context_precision_from_labels(sorted) >=
          context_precision_from_labels(rel) - 1e-12);
  }
}

TEST_CASE("context_precision via judge labels") {
  DeterministicEmbedder embedder(16, 1);
  ScriptedChatProvider judge_llm({R"([1,0,1])"});
  RagasJudge judge(judge_llm, embedder);
  CHECK(judge.context_precision("q", {"c1", "c2", "c3"}, "gt") ==
        doctest::Approx(0.8333).epsilon(1e-4));
}

TEST_CASE("context_recall: 1 of 2 statements attributable gives 0.5") {
  DeterministicEmbedder embedder(16, 1);
  ScriptedChatProvider judge_llm({R"(["s1","s2"])", R"([true,false])"});
  RagasJudge judge(judge_llm, embedder);
  CHECK(judge.context_recall("ground truth", {"ctx"}) == doctest::Approx(0.5));
}

TEST_CASE("context_recall: all attributable 1.0, none 0.0") {
  DeterministicEmbedder embedder(16, 1);
  {
    ScriptedChatProvider judge_llm({R"(["s1","s2","s3"])", R"([true,true,true])"});
    RagasJudge judge(judge_llm, embedder);
    CHECK(judge.context_recall("gt", {"ctx"}) == 1.0);
  }
  {
    ScriptedChatProvider judge_llm({R"(["s1","s2"])", R"([false,false])"});
    RagasJudge judge(judge_llm, embedder);
    CHECK(judge.context_recall("gt", {"ctx"}) == 0.0);
  }
}

TEST_CASE("faithfulness and recall are monotone in the flag count") {
  DeterministicEmbedder embedder(16, 1);
  double prev = -1.0;
  for (int supported = 0; supported <= 4; ++supported) {
    std::string flags = "[";
    for (int i = 0; i < 4; ++i) {
      if (i) flags += ",";
      flags += i < supported ? "true" : "false";
    }
    flags += "]";
    ScriptedChatProvider judge_llm({R"(["a","b","c","d"])", flags});
    RagasJudge judge(judge_llm, embedder);
    const double score = *judge.faithfulness("q", "ans", {"ctx"});
    CHECK(score > prev);
    prev = score;
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
  }
}

}  // TEST_SUITE

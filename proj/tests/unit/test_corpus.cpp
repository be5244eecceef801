#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ragbench/corpus.hpp"
#include "ragbench/error.hpp"
#include "test_support.hpp"

using namespace ragbench;
namespace fs = std::filesystem;

namespace {

Document make_doc(std::string id, std::string text) {
  return Document{std::move(id), "", std::move(text), {}};
}

/// Brute-force Jaccard oracle over word 5-gram sets, independent of the
/// shingle hashing in the implementation.
double oracle_jaccard5(const std::string& a, const std::string& b) {
  auto grams = [](const std::string& s) {
    std::vector<std::string> words;
    std::istringstream ss(normalize_text(s));
    std::string w;
    while (ss >> w) words.push_back(w);
    std::unordered_set<std::string> out;
    if (words.size() < 5) {
      std::string all;
      for (const auto& x : words) all += x + "|";
      out.insert(all);
      return out;
    }
    for (std::size_t i = 0; i + 5 <= words.size(); ++i) {
      std::string g;
      for (std::size_t j = i; j < i + 5; ++j) g += words[j] + "|";
      out.insert(g);
    }
    return out;
  };
  const auto ga = grams(a);
  const auto gb = grams(b);
  std::size_t inter = 0;
  for (const auto& g : ga) inter += gb.count(g);
  return static_cast<double>(inter) / static_cast<double>(ga.size() + gb.size() - inter);
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("ragbench_test_" + name);
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("exact duplicates reduce to the first occurrence") {
  const auto d1 = make_doc("d1", "some persian corpus text here");
  const auto d2 = make_doc("d2", "some persian corpus text here");
  const auto kept = dedup_documents({d1, d2});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "d1");
}

TEST_CASE("disjoint documents are both kept in order") {
  const auto kept = dedup_documents(
      {make_doc("d1", "first distinct body of words"), make_doc("d2", "entirely other content")});
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "d1");
  CHECK(kept[1].id == "d2");
}

TEST_CASE("near duplicate with one changed word in 200 is dropped") {
  std::string text_a = testing::token_text(200, "w");
  std::string text_b = text_a;
  // Change one interior word.
  const auto pos = text_b.find("w100 ");
  text_b.replace(pos, 5, "zzz ");

  const double j = oracle_jaccard5(text_a, text_b);
  CHECK(j > 0.9);  // oracle confirms the fixture sits above the threshold
  CHECK(shingle_jaccard(text_a, text_b) == doctest::Approx(j).epsilon(1e-12));

  const auto kept = dedup_documents({make_doc("d1", text_a), make_doc("d2", text_b)});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "d1");
}

TEST_CASE("moderately similar documents survive") {
  // Half the words differ; Jaccard over 5-grams is far below 0.9.
  std::string text_a = testing::token_text(100, "a");
  std::string text_b = testing::token_text(50, "a") + " " + testing::token_text(50, "b");
  CHECK(oracle_jaccard5(text_a, text_b) < 0.9);
  const auto kept = dedup_documents({make_doc("d1", text_a), make_doc("d2", text_b)});
  CHECK(kept.size() == 2);
}

TEST_CASE("duplicate ids are rejected") {
  CHECK_THROWS_AS(dedup_documents({make_doc("d1", "x"), make_doc("d1", "y")}), Error);
}

TEST_CASE("dedup output is a subsequence of its input") {
  std::vector<Document> docs;
  for (int i = 0; i < 20; ++i)
    docs.push_back(make_doc("d" + std::to_string(i),
                            testing::token_text(30, i % 3 == 0 ? "x" : "y" + std::to_string(i))));
  const auto kept = dedup_documents(docs);
  std::size_t cursor = 0;
  for (const auto& k : kept) {
    while (cursor < docs.size() && docs[cursor].id != k.id) ++cursor;
    REQUIRE(cursor < docs.size());  // every kept doc appears later in input order
    CHECK(docs[cursor].text == k.text);
  }
}

TEST_CASE("qa loader: fixture with 2 paragraphs and 3 questions") {
  const char* fixture = R"({
    "data": [{
      "title": "شهر",
      "paragraphs": [
        {"context": "پاریس پایتخت فرانسه است.",
         "qas": [
           {"id": "q1", "question": "پایتخت فرانسه کجاست؟",
            "answers": [{"text": "پاریس", "answer_start": 0}], "is_impossible": false},
           {"id": "q2", "question": "فرانسه در کدام قاره است؟",
            "answers": [], "is_impossible": true}
         ]},
        {"context": "تهران پایتخت ایران است.",
         "qas": [
           {"id": "q3", "question": "پایتخت ایران کجاست؟",
            "answers": [{"text": "تهران", "answer_start": 0}], "is_impossible": false}
         ]}
      ]
    }]
  })";
  const auto path = temp_file("qa_fixture.json");
  std::ofstream(path) << fixture;

  const auto ds = load_qa_dataset(path);
  CHECK(ds.items.size() == 3);
  CHECK(ds.documents.size() == 2);
  CHECK(ds.items[0].answers.size() == 1);
  CHECK(ds.items[1].is_impossible);
  CHECK(ds.items[1].answers.empty());
  CHECK(ds.items[0].context_doc_id == ds.documents[0].id);
  CHECK(ds.items[2].context_doc_id == ds.documents[1].id);
}

TEST_CASE("qa loader: empty data array") {
  const auto path = temp_file("qa_empty.json");
  std::ofstream(path) << R"({"data": []})";
  const auto ds = load_qa_dataset(path);
  CHECK(ds.items.empty());
  CHECK(ds.documents.empty());
}

TEST_CASE("qa loader: round trip through save reproduces identical items") {
  const auto path = temp_file("qa_rt_src.json");
  std::ofstream(path) << R"({
    "data": [{"title": "t", "paragraphs": [
      {"context": "alpha beta gamma", "qas": [
        {"id": "q1", "question": "what is alpha?",
         "answers": [{"text": "beta", "answer_start": 6}], "is_impossible": false},
        {"id": "q2", "question": "unanswerable?", "answers": [], "is_impossible": true}
      ]}]}]
  })";
  const auto ds = load_qa_dataset(path);
  const auto out_path = temp_file("qa_rt_out.json");
  save_qa_dataset(ds, out_path);
  const auto back = load_qa_dataset(out_path);

  REQUIRE(back.items.size() == ds.items.size());
  REQUIRE(back.documents.size() == ds.documents.size());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    CHECK(back.items[i].id == ds.items[i].id);
    CHECK(back.items[i].question == ds.items[i].question);
    CHECK(back.items[i].answers == ds.items[i].answers);
    CHECK(back.items[i].is_impossible == ds.items[i].is_impossible);
    CHECK(back.items[i].context_doc_id == ds.items[i].context_doc_id);
  }
  for (std::size_t i = 0; i < ds.documents.size(); ++i) {
    CHECK(back.documents[i].id == ds.documents[i].id);
    CHECK(back.documents[i].text == ds.documents[i].text);
  }
}

TEST_CASE("qa loader: inconsistent is_impossible is a schema error") {
  const auto path = temp_file("qa_bad.json");
  std::ofstream(path) << R"({"data": [{"title": "t", "paragraphs": [
    {"context": "c", "qas": [
      {"id": "q1", "question": "?", "answers": [], "is_impossible": false}
    ]}]}]})";
  try {
    load_qa_dataset(path);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }
}

TEST_CASE("mcq loader: valid line, wrong option count, file order") {
  const auto path = temp_file("mcq.jsonl");
  {
    std::ofstream out(path);
    for (int i = 0; i < 10; ++i)
      out << R"({"id":"m)" << i
          << R"(","question":"q","options":["a","b","c","d"],"answer_index":2,"doc_id":"d"})"
          << "\n";
  }
  const auto items = load_mcq_dataset(path);
  REQUIRE(items.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(items[i].id == "m" + std::to_string(i));
  CHECK(items[0].answer_index == 2);

  std::ofstream(path) << R"({"id":"m","question":"q","options":["a","b","c"],"answer_index":0,"doc_id":"d"})"
                      << "\n";
  try {
    load_mcq_dataset(path);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }

  std::ofstream(path) << R"({"id":"m","question":"q","options":["a","b","c","d"],"answer_index":4,"doc_id":"d"})"
                      << "\n";
  CHECK_THROWS_AS(load_mcq_dataset(path), Error);

  std::ofstream(path) << "{broken\n";
  try {
    load_mcq_dataset(path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}

TEST_CASE("generate_mcq: scripted provider returning 2 valid items") {
  ScriptedChatProvider llm({R"([
    {"question":"q1","options":["a","b","c","d"],"answer_index":0},
    {"question":"q2","options":["w","x","y","z"],"answer_index":3}
  ])"});
  const auto doc = make_doc("doc7", "content");
  const auto items = generate_mcq(doc, llm, 2);
  REQUIRE(items.size() == 2);
  CHECK(items[0].doc_id == "doc7");
  CHECK(items[1].doc_id == "doc7");
  CHECK(items[0].id != items[1].id);
  CHECK(items[1].answer_index == 3);
}

TEST_CASE("generate_mcq: invalid json twice then valid succeeds on the second re-prompt") {
  ScriptedChatProvider llm({"not json", "still not json", R"([
    {"question":"q","options":["a","b","c","d"],"answer_index":1}
  ])"});
  const auto items = generate_mcq(make_doc("d", "text"), llm, 1);
  REQUIRE(items.size() == 1);
  CHECK(items[0].answer_index == 1);
  CHECK(llm.calls().size() == 3);
}

TEST_CASE("generate_mcq: three malformed replies exhaust the retry budget") {
  ScriptedChatProvider llm({"x", "y", "z", "never reached"});
  try {
    generate_mcq(make_doc("d", "text"), llm, 1);
    FAIL("expected MalformedModelOutput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedModelOutput);
  }
  CHECK(llm.calls().size() == 3);  // initial + exactly two re-prompts
}

TEST_CASE("generate_mcq: n=0 violates the precondition") {
  ScriptedChatProvider llm({});
  CHECK_THROWS_AS(generate_mcq(make_doc("d", "text"), llm, 0), Error);
  CHECK_THROWS_AS(generate_mcq(make_doc("d", ""), llm, 1), Error);
}

TEST_CASE("document loaders round trip jsonl") {
  const auto path = temp_file("docs.jsonl");
  const std::vector<Document> docs = {make_doc("a", "first text"), make_doc("b", "second text")};
  save_documents(docs, path);
  const auto back = load_documents(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[1].text == "second text");
}

TEST_CASE("document loader reads a directory of txt files, stem as id") {
  const auto dir = fs::temp_directory_path() / "ragbench_txt_corpus";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "zeta.txt") << "zeta  body\twith  messy whitespace";
  std::ofstream(dir / "alpha.txt") << "alpha body";
  std::ofstream(dir / "ignored.dat") << "not a text file";

  const auto docs = load_documents(dir);
  REQUIRE(docs.size() == 2);  // sorted by filename, .dat skipped
  CHECK(docs[0].id == "alpha");
  CHECK(docs[1].id == "zeta");
  CHECK(docs[1].text == "zeta body with messy whitespace");  // normalized on load
}

}  // TEST_SUITE

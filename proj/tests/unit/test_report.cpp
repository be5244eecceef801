#include <doctest.h>

#include "ragbench/error.hpp"
#include "ragbench/eval_generation.hpp"
#include "ragbench/report.hpp"
#include "test_support.hpp"

using namespace ragbench;

namespace {

NamedDataset make_dataset(const std::string& name, int n_items, std::uint64_t seed) {
  NamedDataset ds;
  ds.name = name;
  for (int d = 0; d < 3; ++d) {
    std::string text;
    for (int w = 0; w < 60; ++w)
      text += (w ? " " : "") + name + "w" + std::to_string((w + d * 7) % 23);
    ds.documents.push_back(Document{name + "-doc" + std::to_string(d), "", text, {}});
  }
  for (int i = 0; i < n_items; ++i) {
    MCQItem item;
    item.id = name + "-m" + std::to_string(i);
    item.question = name + " question " + std::to_string(i + seed);
    item.options = {"a" + std::to_string(i), "b" + std::to_string(i), "c" + std::to_string(i),
                    "d" + std::to_string(i)};
    item.answer_index = i % 4;
    item.doc_id = ds.documents[i % 3].id;
    ds.mcq_items.push_back(std::move(item));
  }
  return ds;
}

RunConfig sweep_config() {
  RunConfig cfg;
  cfg.chunk_size = 32;
  cfg.chunk_overlap = 8;
  cfg.similarity_top_k = 3;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("csv: header plus one data line with LF endings") {
  ResultTable t;
  t.label_header = "model";
  t.columns = {"Accuracy"};
  t.rows.push_back({"m1", {81.256}});
  const auto bytes = emit_table(t, TableFormat::csv);
  CHECK(bytes == "model,Accuracy\nm1,81.26\n");
}

TEST_CASE("ragas tables render with 4 decimal places") {
  MetricReport report;
  report.context_precision = 0.7750;
  report.faithfulness = 0.6357;
  report.answer_relevancy = 0.7455;
  report.context_recall = 0.9205;
  const auto table = ragas_table({{"Lamma-3.1-70B", report}});
  CHECK(table.columns == std::vector<std::string>{"Context Precision", "Faithfulness",
                                                  "Answer Relevancy", "Context Recall"});
  const auto csv = emit_table(table, TableFormat::csv);
  CHECK(csv.find("0.7455") != std::string::npos);
  CHECK(csv.find("0.7750") != std::string::npos);
  const auto md = emit_table(table, TableFormat::markdown);
  CHECK(md.find("| 0.7455 |") != std::string::npos);
}

TEST_CASE("null cells render empty/dash/null per format") {
  ResultTable t;
  t.label_header = "x";
  t.columns = {"a", "b"};
  t.rows.push_back({"r", {1.0, std::nullopt}});
  CHECK(emit_table(t, TableFormat::csv) == "x,a,b\nr,1.00,\n");
  CHECK(emit_table(t, TableFormat::markdown).find("| 1.00 | - |") != std::string::npos);
  CHECK(emit_table(t, TableFormat::json).find("null") != std::string::npos);
}

TEST_CASE("markdown and json renders agree after a round trip") {
  ResultTable t;
  t.caption = "caption";
  t.label_header = "Temperature";
  t.columns = {"ds1", "ds2"};
  t.decimals = 2;
  t.rows.push_back({"0", {73.25, 80.0}});
  t.rows.push_back({"0.25", {72.83, std::nullopt}});

  const auto parsed = parse_table_json(emit_table(t, TableFormat::json));
  CHECK(emit_table(parsed, TableFormat::markdown) == emit_table(t, TableFormat::markdown));
  CHECK(emit_table(parsed, TableFormat::csv) == emit_table(t, TableFormat::csv));
}

TEST_CASE("csv escapes labels containing commas") {
  ResultTable t;
  t.label_header = "model";
  t.columns = {"v"};
  t.rows.push_back({"a,b \"q\"", {1.0}});
  CHECK(emit_table(t, TableFormat::csv) == "model,v\n\"a,b \"\"q\"\"\",1.00\n");
}

TEST_CASE("row width mismatches are rejected") {
  ResultTable t;
  t.columns = {"a", "b"};
  t.rows.push_back({"r", {1.0}});
  CHECK_THROWS_AS(emit_table(t, TableFormat::csv), Error);
}

TEST_CASE("temperature sweep has the published row labels and dataset columns") {
  DeterministicEmbedder embedder(32, 1);
  HashAnswerChatProvider llm(5);
  const std::vector<NamedDataset> datasets = {make_dataset("PQUAD", 6, 1),
                                              make_dataset("Scientific-Specialized", 6, 2),
                                              make_dataset("Organizational Report", 6, 3)};
  const auto spec = default_sweep(SweepAxis::temperature, sweep_config());
  const auto outcome = run_sweep(spec, datasets, embedder, llm);

  REQUIRE(outcome.table.rows.size() == 4);
  CHECK(outcome.table.rows[0].label == "0");
  CHECK(outcome.table.rows[1].label == "0.25");
  CHECK(outcome.table.rows[2].label == "0.5");
  CHECK(outcome.table.rows[3].label == "0.75");
  CHECK(outcome.table.label_header == "Temperature");
  CHECK(outcome.table.columns ==
        std::vector<std::string>{"PQUAD", "Scientific-Specialized", "Organizational Report"});
  for (const auto& row : outcome.table.rows)
    for (const auto& v : row.values) CHECK(v.has_value());
}

TEST_CASE("chunk-size sweep rows are 512/1024/2048") {
  DeterministicEmbedder embedder(32, 1);
  HashAnswerChatProvider llm(5);
  const std::vector<NamedDataset> datasets = {make_dataset("ds", 4, 1)};
  auto cfg = sweep_config();
  cfg.chunk_overlap = 256;  // applies to the swept sizes
  cfg.chunk_size = 1024;
  const auto outcome = run_sweep(default_sweep(SweepAxis::chunk_size, cfg), datasets,
                                 embedder, llm);
  REQUIRE(outcome.table.rows.size() == 3);
  CHECK(outcome.table.rows[0].label == "512");
  CHECK(outcome.table.rows[1].label == "1024");
  CHECK(outcome.table.rows[2].label == "2048");
  CHECK(outcome.table.label_header == "Chunk Size");
}

TEST_CASE("summary sweep rows are With Summary / Without Summary") {
  DeterministicEmbedder embedder(32, 1);
  // Summary building consults the chat provider; scripted replies keep it
  // offline.
  ScriptedChatProvider llm({"summary text", "specific", "2"}, true);
  const std::vector<NamedDataset> datasets = {make_dataset("ds", 3, 1)};
  const auto outcome = run_sweep(default_sweep(SweepAxis::summary_index, sweep_config()),
                                 datasets, embedder, llm);
  REQUIRE(outcome.table.rows.size() == 2);
  CHECK(outcome.table.rows[0].label == "With Summary");
  CHECK(outcome.table.rows[1].label == "Without Summary");
  CHECK(outcome.table.label_header == "With/Without Summary");
}

TEST_CASE("identical spec and seed produce byte-identical reports") {
  const std::vector<NamedDataset> datasets = {make_dataset("a", 5, 1),
                                              make_dataset("b", 5, 2)};
  auto run_once = [&] {
    DeterministicEmbedder embedder(32, 7);
    HashAnswerChatProvider llm(7);
    const auto outcome =
        run_sweep(default_sweep(SweepAxis::temperature, sweep_config()), datasets, embedder,
                  llm);
    std::string bytes = emit_table(outcome.table, TableFormat::csv) +
                        emit_table(outcome.table, TableFormat::json);
    for (const auto& per_value : outcome.records)
      for (const auto& per_ds : per_value) bytes += records_to_jsonl(per_ds);
    return bytes;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("single-value sweep equals a plain evaluation of the substituted config") {
  const std::vector<NamedDataset> datasets = {make_dataset("only", 6, 4)};
  DeterministicEmbedder embedder(32, 3);
  HashAnswerChatProvider llm(3);

  SweepSpec spec;
  spec.axis = SweepAxis::temperature;
  spec.values = {0.5};
  spec.fixed = sweep_config();
  const auto outcome = run_sweep(spec, datasets, embedder, llm);

  RunConfig direct_cfg = sweep_config();
  direct_cfg.temperature = 0.5;
  RagPipeline pipeline(direct_cfg, embedder, llm, datasets[0].documents);
  const auto direct = run_mcqa(datasets[0].mcq_items, pipeline);

  REQUIRE(outcome.table.rows.size() == 1);
  CHECK(*outcome.table.rows[0].values[0] == direct.accuracy);
}

TEST_CASE("a failing cell becomes null without voiding the sweep") {
  // chunk_overlap 8 is valid for sizes 512..2048 but the scripted provider
  // fails on the second dataset only.
  class FlakyChat : public ChatProvider {
   public:
    std::string chat(const std::vector<ChatMessage>& messages, double, int) override {
      if (messages.back().content.find("poison") != std::string::npos)
        throw Error(ErrorCode::ProviderError, "injected outage");
      return "1";
    }
  };
  auto good = make_dataset("good", 3, 1);
  auto bad = make_dataset("bad", 3, 2);
  for (auto& item : bad.mcq_items) item.question = "poison " + item.question;

  DeterministicEmbedder embedder(32, 1);
  FlakyChat llm;
  SweepSpec spec;
  spec.axis = SweepAxis::temperature;
  spec.values = {0.0, 0.25};
  spec.fixed = sweep_config();
  const auto outcome = run_sweep(spec, {good, bad}, embedder, llm);

  CHECK(outcome.failed_cells == 2);
  for (const auto& row : outcome.table.rows) {
    CHECK(row.values[0].has_value());
    CHECK(!row.values[1].has_value());
  }
}

TEST_CASE("a sweep where every cell fails aborts") {
  class DeadChat : public ChatProvider {
   public:
    std::string chat(const std::vector<ChatMessage>&, double, int) override {
      throw Error(ErrorCode::ProviderError, "down");
    }
  };
  DeterministicEmbedder embedder(32, 1);
  DeadChat llm;
  SweepSpec spec;
  spec.axis = SweepAxis::temperature;
  spec.values = {0.0};
  spec.fixed = sweep_config();
  try {
    run_sweep(spec, {make_dataset("ds", 2, 1)}, embedder, llm);
    FAIL("expected AllItemsFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllItemsFailed);
  }
}

TEST_CASE("sweep value validation") {
  SweepSpec spec;
  spec.axis = SweepAxis::temperature;
  spec.fixed = sweep_config();
  spec.values = {};
  CHECK_THROWS_AS(validate_sweep_spec(spec), Error);
  spec.values = {1.5};
  CHECK_THROWS_AS(validate_sweep_spec(spec), Error);
  spec.values = {std::size_t{512}};  // wrong alternative for the axis
  CHECK_THROWS_AS(validate_sweep_spec(spec), Error);
}

}  // TEST_SUITE

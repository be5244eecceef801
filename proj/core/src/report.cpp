#include "ragbench/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "ragbench/error.hpp"
#include "ragbench/eval_generation.hpp"
#include "ragbench/pipeline.hpp"

namespace ragbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

TableFormat table_format_from_name(const std::string& name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "markdown" || name == "md") return TableFormat::markdown;
  if (name == "json") return TableFormat::json;
  throw Error(ErrorCode::InvalidConfig, "unknown table format '" + name + "'");
}

std::string emit_table(const ResultTable& table, TableFormat format) {
  for (const auto& row : table.rows) {
    if (row.values.size() != table.columns.size())
      throw Error(ErrorCode::Precondition,
                  "row '" + row.label + "' width does not match column count");
  }
  if (!table.column_decimals.empty() && table.column_decimals.size() != table.columns.size())
    throw Error(ErrorCode::Precondition, "column_decimals width does not match column count");
  const auto decimals_for = [&table](std::size_t col) {
    return table.column_decimals.empty() ? table.decimals : table.column_decimals[col];
  };

  if (format == TableFormat::csv) {
    std::string out = csv_escape(table.label_header);
    for (const auto& c : table.columns) out += "," + csv_escape(c);
    out += "\n";
    for (const auto& row : table.rows) {
      out += csv_escape(row.label);
      for (std::size_t i = 0; i < row.values.size(); ++i)
        out += "," + (row.values[i] ? format_fixed(*row.values[i], decimals_for(i))
                                    : std::string());
      out += "\n";
    }
    return out;
  }

  if (format == TableFormat::markdown) {
    std::string out;
    if (!table.caption.empty()) out += "**" + table.caption + "**\n\n";
    out += "| " + table.label_header;
    for (const auto& c : table.columns) out += " | " + c;
    out += " |\n|";
    for (std::size_t i = 0; i < table.columns.size() + 1; ++i) out += " --- |";
    out += "\n";
    for (const auto& row : table.rows) {
      out += "| " + row.label;
      for (std::size_t i = 0; i < row.values.size(); ++i)
        out += " | " + (row.values[i] ? format_fixed(*row.values[i], decimals_for(i))
                                      : std::string("-"));
      out += " |\n";
    }
    return out;
  }

  ordered_json j;
  j["caption"] = table.caption;
  j["label_header"] = table.label_header;
  j["columns"] = table.columns;
  j["decimals"] = table.decimals;
  if (!table.column_decimals.empty()) j["column_decimals"] = table.column_decimals;
  j["rows"] = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json r;
    r["label"] = row.label;
    r["values"] = ordered_json::array();
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (row.values[i])
        r["values"].push_back(ordered_json::parse(format_fixed(*row.values[i], decimals_for(i))));
      else
        r["values"].push_back(nullptr);
    }
    j["rows"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

ResultTable parse_table_json(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("table json: ") + e.what());
  }
  ResultTable t;
  t.caption = j.value("caption", "");
  t.label_header = j.value("label_header", "");
  t.columns = j.at("columns").get<std::vector<std::string>>();
  t.decimals = j.value("decimals", 2);
  if (j.contains("column_decimals"))
    t.column_decimals = j["column_decimals"].get<std::vector<int>>();
  for (const auto& r : j.at("rows")) {
    ResultTable::Row row;
    row.label = r.at("label").get<std::string>();
    for (const auto& v : r.at("values")) {
      if (v.is_null()) row.values.push_back(std::nullopt);
      else row.values.push_back(v.get<double>());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "temperature") return SweepAxis::temperature;
  if (name == "chunk_size" || name == "chunk-size") return SweepAxis::chunk_size;
  if (name == "summary_index" || name == "summary-index") return SweepAxis::summary_index;
  throw Error(ErrorCode::InvalidConfig, "unknown sweep axis '" + name + "'");
}

SweepSpec default_sweep(SweepAxis axis, const RunConfig& fixed) {
  SweepSpec spec;
  spec.axis = axis;
  spec.fixed = fixed;
  switch (axis) {
    case SweepAxis::temperature:
      spec.values = {0.0, 0.25, 0.5, 0.75};
      break;
    case SweepAxis::chunk_size:
      spec.values = {std::size_t{512}, std::size_t{1024}, std::size_t{2048}};
      break;
    case SweepAxis::summary_index:
      spec.values = {true, false};
      break;
  }
  return spec;
}

std::string sweep_value_label(SweepAxis axis, const SweepValue& value) {
  switch (axis) {
    case SweepAxis::temperature: {
      const double t = std::get<double>(value);
      std::string s = format_fixed(t, 2);
      while (!s.empty() && s.back() == '0') s.pop_back();
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    }
    case SweepAxis::chunk_size:
      return std::to_string(std::get<std::size_t>(value));
    case SweepAxis::summary_index:
      return std::get<bool>(value) ? "With Summary" : "Without Summary";
  }
  return "?";
}

void validate_sweep_spec(const SweepSpec& spec) {
  if (spec.values.empty())
    throw Error(ErrorCode::InvalidConfig, "sweep needs at least one axis value");
  for (const auto& v : spec.values) {
    switch (spec.axis) {
      case SweepAxis::temperature: {
        if (!std::holds_alternative<double>(v))
          throw Error(ErrorCode::InvalidConfig, "temperature values must be reals");
        const double t = std::get<double>(v);
        if (t < 0.0 || t > 1.0)
          throw Error(ErrorCode::InvalidConfig, "temperature must lie in [0, 1]");
        break;
      }
      case SweepAxis::chunk_size: {
        if (!std::holds_alternative<std::size_t>(v))
          throw Error(ErrorCode::InvalidConfig, "chunk_size values must be token counts");
        RunConfig probe = spec.fixed;
        probe.chunk_size = std::get<std::size_t>(v);
        validate_run_config(probe);
        break;
      }
      case SweepAxis::summary_index:
        if (!std::holds_alternative<bool>(v))
          throw Error(ErrorCode::InvalidConfig, "summary_index values must be with/without");
        break;
    }
  }
  validate_run_config(spec.fixed);
}

namespace {

const char* axis_header(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::temperature: return "Temperature";
    case SweepAxis::chunk_size: return "Chunk Size";
    case SweepAxis::summary_index: return "With/Without Summary";
  }
  return "?";
}

}  // namespace

SweepOutcome run_sweep(const SweepSpec& spec, const std::vector<NamedDataset>& datasets,
                       Embedder& embedder, ChatProvider& llm) {
  validate_sweep_spec(spec);
  if (datasets.empty()) throw Error(ErrorCode::Precondition, "sweep needs datasets");

  SweepOutcome outcome;
  outcome.table.caption = std::string("Impact of ") + axis_header(spec.axis);
  outcome.table.label_header = axis_header(spec.axis);
  outcome.table.decimals = 2;
  for (const auto& ds : datasets) outcome.table.columns.push_back(ds.name);

  long total_cells = 0;
  for (const auto& value : spec.values) {
    ResultTable::Row row;
    row.label = sweep_value_label(spec.axis, value);
    std::vector<std::vector<EvalRecord>> value_records;

    RunConfig cfg = spec.fixed;
    RagPipeline::Options options;
    switch (spec.axis) {
      case SweepAxis::temperature: cfg.temperature = std::get<double>(value); break;
      case SweepAxis::chunk_size: cfg.chunk_size = std::get<std::size_t>(value); break;
      case SweepAxis::summary_index:
        options.use_summary_index = std::get<bool>(value);
        break;
    }

    for (const auto& ds : datasets) {
      ++total_cells;
      try {
        RagPipeline pipeline(cfg, embedder, llm, ds.documents, options);
        const auto mcqa = run_mcqa(ds.mcq_items, pipeline);
        row.values.push_back(mcqa.accuracy);
        value_records.push_back(mcqa.records);
      } catch (const Error&) {
        // Cell isolation: one failed configuration must not void the sweep.
        row.values.push_back(std::nullopt);
        value_records.emplace_back();
        ++outcome.failed_cells;
      }
    }
    outcome.table.rows.push_back(std::move(row));
    outcome.records.push_back(std::move(value_records));
  }

  if (outcome.failed_cells == total_cells)
    throw Error(ErrorCode::AllItemsFailed, "every sweep cell failed");
  return outcome;
}

// ---------------------------------------------------------------------------
// Table builders

ResultTable rank_counts_table(
    const std::vector<std::pair<std::string, RankCounts>>& rows) {
  ResultTable t;
  t.caption = "Embedding retrieval accuracy";
  t.label_header = "model";
  t.columns = {"1th", "2th", "3th", "Avg"};
  t.decimals = 2;
  t.column_decimals = {0, 0, 0, 2};
  for (const auto& [model, counts] : rows) {
    ResultTable::Row row;
    row.label = model;
    row.values = {static_cast<double>(counts.c1), static_cast<double>(counts.c2),
                  static_cast<double>(counts.c3), overall_score(counts)};
    t.rows.push_back(std::move(row));
  }
  return t;
}

ResultTable ragas_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  ResultTable t;
  t.caption = "RAGAS evaluation";
  t.label_header = "model";
  t.columns = {"Context Precision", "Faithfulness", "Answer Relevancy", "Context Recall"};
  t.decimals = 4;
  for (const auto& [model, report] : rows) {
    ResultTable::Row row;
    row.label = model;
    row.values = {report.context_precision, report.faithfulness, report.answer_relevancy,
                  report.context_recall};
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string records_to_jsonl(const std::vector<EvalRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    ordered_json j;
    j["query_id"] = rec.query_id;
    j["retrieved"] = ordered_json::array();
    for (const auto& [id, score] : rec.retrieved)
      j["retrieved"].push_back({{"chunk_id", id}, {"score", score}});
    if (rec.gold_rank) j["gold_rank"] = *rec.gold_rank;
    else j["gold_rank"] = nullptr;
    j["answer"] = rec.answer;
    j["metrics"] = rec.metrics;
    out += j.dump();
    out += "\n";
  }
  return out;
}

}  // namespace ragbench

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ragbench/config.hpp"
#include "ragbench/corpus.hpp"
#include "ragbench/eval_retrieval.hpp"
#include "ragbench/providers.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

/// One result table in the layout of the benchmark write-up: a label column
/// followed by one numeric column per dataset/metric. Null cells mark failed
/// sweep cells. `decimals` pins the rendering precision (2 for accuracy
/// tables, 4 for RAGAS tables) so emitted bytes are stable.
struct ResultTable {
  std::string caption;
  std::string label_header;  // header of the label column
  std::vector<std::string> columns;
  struct Row {
    std::string label;
    std::vector<std::optional<double>> values;
  };
  std::vector<Row> rows;
  int decimals = 2;
  /// Per-column override of `decimals`; empty means uniform. Counts columns
  /// use 0 so they render as integers.
  std::vector<int> column_decimals;
};

enum class TableFormat { csv, markdown, json };

TableFormat table_format_from_name(const std::string& name);

/// Deterministic rendering: LF line endings, fixed decimal places, no
/// locale dependence. Null cells render empty (csv), "-" (markdown) or
/// JSON null.
std::string emit_table(const ResultTable& table, TableFormat format);

/// Re-reads a table emitted as JSON (used to cross-check renderings).
ResultTable parse_table_json(const std::string& bytes);

enum class SweepAxis { temperature, chunk_size, summary_index };

SweepAxis sweep_axis_from_name(const std::string& name);

using SweepValue = std::variant<double, std::size_t, bool>;

struct SweepSpec {
  SweepAxis axis = SweepAxis::temperature;
  std::vector<SweepValue> values;
  RunConfig fixed;
};

/// The table-7/8/9 row sets: temperatures {0,0.25,0.5,0.75}, chunk sizes
/// {512,1024,2048}, summary {with,without}.
SweepSpec default_sweep(SweepAxis axis, const RunConfig& fixed);

std::string sweep_value_label(SweepAxis axis, const SweepValue& value);
void validate_sweep_spec(const SweepSpec& spec);

/// One evaluation corpus: documents plus the MCQ items asked against them.
struct NamedDataset {
  std::string name;
  std::vector<Document> documents;
  std::vector<MCQItem> mcq_items;
};

struct SweepOutcome {
  ResultTable table;
  /// records[i][j] = per-item traces for value i on dataset j (empty when
  /// the cell failed).
  std::vector<std::vector<std::vector<EvalRecord>>> records;
  long failed_cells = 0;
};

/// Runs one full pipeline evaluation per (axis value, dataset) cell with all
/// other knobs fixed. A failed cell becomes a null table entry; the sweep
/// aborts only when every cell fails.
SweepOutcome run_sweep(const SweepSpec& spec, const std::vector<NamedDataset>& datasets,
                       Embedder& embedder, ChatProvider& llm);

/// Counts table in the embedding-evaluation layout:
/// model | 1th | 2th | 3th | Avg.
ResultTable rank_counts_table(
    const std::vector<std::pair<std::string, RankCounts>>& rows);

struct MetricReport;  // eval_generation.hpp

/// RAGAS table layout:
/// model | Context Precision | Faithfulness | Answer Relevancy | Context Recall.
ResultTable ragas_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

std::string records_to_jsonl(const std::vector<EvalRecord>& records);

}  // namespace ragbench

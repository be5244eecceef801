#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragbench/providers.hpp"
#include "ragbench/types.hpp"

namespace ragbench {

/// Exact in-memory cosine index. Rows are L2-normalized at build time and
/// immutable afterwards, so concurrent searches need no synchronization.
/// Ties are broken by ascending chunk id, which makes every result list a
/// total order independent of platform.
class VectorIndex {
 public:
  VectorIndex() = default;

  /// Embeds the chunk texts in batches and stores normalized rows in chunk
  /// order. Throws EmptyCorpus on empty input and DuplicateId on repeated
  /// chunk ids.
  static VectorIndex build(const std::vector<Chunk>& chunks, Embedder& embedder,
                           std::size_t batch_size = 64);

  /// Same contract over arbitrary (id, doc_id, text) rows; used by the
  /// summary index.
  static VectorIndex build_rows(const std::vector<std::string>& ids,
                                const std::vector<std::string>& doc_ids,
                                const std::vector<std::string>& texts, Embedder& embedder,
                                std::size_t batch_size = 64);

  /// Wraps precomputed vectors (normalizes them). Vectors must share a
  /// dimension and carry unique ids.
  static VectorIndex from_vectors(const std::vector<EmbeddingVector>& vectors,
                                  const std::vector<std::string>& doc_ids);

  /// The k highest-cosine rows, scores non-increasing, ranks from 1.
  /// Returns all rows when k exceeds the row count.
  std::vector<Hit> search(const EmbeddingVector& query, int k) const;

  /// search() restricted to rows whose doc id passes the filter; also
  /// reports how many rows were scored.
  std::vector<Hit> search_filtered(const EmbeddingVector& query, int k,
                                   const std::unordered_map<std::string, bool>& allow_doc,
                                   std::size_t* scored = nullptr) const;

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& doc_of(const std::string& id) const;
  const std::vector<std::string>& row_doc_ids() const { return doc_ids_; }
  const float* row(std::size_t i) const { return matrix_.data() + i * dim_; }

  bool operator==(const VectorIndex& other) const;

  /// Directory layout: manifest.json {"dim","rows","checksum_sha256"},
  /// ids.jsonl (one {"chunk_id","doc_id"} per line, row order), vectors.bin
  /// (little-endian f32, row-major). load(save(x)) is bit-identical.
  void save(const std::filesystem::path& dir) const;
  static VectorIndex load(const std::filesystem::path& dir);

 private:
  friend class SummaryIndex;

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::string> doc_ids_;
  std::vector<float> matrix_;  // row-major, rows L2-normalized
  std::unordered_map<std::string, std::string> doc_by_id_;
};

/// Raw helpers shared with the summary index persistence (same binary
/// matrix + manifest format under different file names).
namespace index_io {
void write_matrix(const std::filesystem::path& bin_file,
                  const std::filesystem::path& manifest_file, const std::vector<float>& matrix,
                  std::size_t dim, std::size_t rows);
std::vector<float> read_matrix(const std::filesystem::path& bin_file,
                               const std::filesystem::path& manifest_file, std::size_t* dim,
                               std::size_t* rows);
std::string sha256_hex(const void* data, std::size_t size);
}  // namespace index_io

}  // namespace ragbench

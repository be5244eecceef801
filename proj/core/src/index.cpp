#include "ragbench/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include <json.hpp>
#include <openssl/evp.h>

#include "ragbench/error.hpp"

namespace ragbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void l2_normalize(float* row, std::size_t dim) {
  double norm2 = 0.0;
  for (std::size_t j = 0; j < dim; ++j) norm2 += static_cast<double>(row[j]) * row[j];
  if (norm2 < 1e-24) throw Error(ErrorCode::ZeroVector, "cannot normalize zero vector");
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(row[j] * inv);
}

double dot(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) acc += static_cast<double>(a[j]) * b[j];
  return acc;
}

}  // namespace

VectorIndex VectorIndex::build(const std::vector<Chunk>& chunks, Embedder& embedder,
                               std::size_t batch_size) {
  std::vector<std::string> ids, doc_ids, texts;
  ids.reserve(chunks.size());
  for (const auto& c : chunks) {
    ids.push_back(c.id);
    doc_ids.push_back(c.doc_id);
    texts.push_back(c.text);
  }
  return build_rows(ids, doc_ids, texts, embedder, batch_size);
}

VectorIndex VectorIndex::build_rows(const std::vector<std::string>& ids,
                                    const std::vector<std::string>& doc_ids,
                                    const std::vector<std::string>& texts, Embedder& embedder,
                                    std::size_t batch_size) {
  if (ids.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build index over zero rows");
  if (ids.size() != doc_ids.size() || ids.size() != texts.size())
    throw Error(ErrorCode::Precondition, "ids/doc_ids/texts must have equal length");
  if (batch_size == 0) batch_size = 64;

  VectorIndex index;
  index.ids_ = ids;
  index.doc_ids_ = doc_ids;
  {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!seen.insert(ids[i]).second)
        throw Error(ErrorCode::DuplicateId, "row id '" + ids[i] + "' appears twice");
      index.doc_by_id_.emplace(ids[i], doc_ids[i]);
    }
  }

  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, texts.size());
    std::vector<std::string> batch(texts.begin() + start, texts.begin() + end);
    auto vectors = embedder.embed_batch(batch);
    for (auto& v : vectors) {
      if (index.dim_ == 0) {
        index.dim_ = v.dim();
        if (index.dim_ == 0)
          throw Error(ErrorCode::DimensionMismatch, "embedder returned empty vectors");
        index.matrix_.reserve(index.dim_ * texts.size());
      }
      if (v.dim() != index.dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "embedding dim " + std::to_string(v.dim()) + " != index dim " +
                        std::to_string(index.dim_));
      const std::size_t offset = index.matrix_.size();
      index.matrix_.insert(index.matrix_.end(), v.values.begin(), v.values.end());
      l2_normalize(index.matrix_.data() + offset, index.dim_);
    }
  }
  return index;
}

VectorIndex VectorIndex::from_vectors(const std::vector<EmbeddingVector>& vectors,
                                      const std::vector<std::string>& doc_ids) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build index over zero rows");
  if (vectors.size() != doc_ids.size())
    throw Error(ErrorCode::Precondition, "vectors/doc_ids must have equal length");

  VectorIndex index;
  index.dim_ = vectors.front().dim();
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.dim() != index.dim_)
      throw Error(ErrorCode::DimensionMismatch, "vector dims differ across rows");
    if (!seen.insert(v.id).second)
      throw Error(ErrorCode::DuplicateId, "row id '" + v.id + "' appears twice");
    index.ids_.push_back(v.id);
    index.doc_ids_.push_back(doc_ids[i]);
    index.doc_by_id_.emplace(v.id, doc_ids[i]);
    const std::size_t offset = index.matrix_.size();
    index.matrix_.insert(index.matrix_.end(), v.values.begin(), v.values.end());
    l2_normalize(index.matrix_.data() + offset, index.dim_);
  }
  return index;
}

std::vector<Hit> VectorIndex::search(const EmbeddingVector& query, int k) const {
  return search_filtered(query, k, {}, nullptr);
}

std::vector<Hit> VectorIndex::search_filtered(
    const EmbeddingVector& query, int k,
    const std::unordered_map<std::string, bool>& allow_doc, std::size_t* scored) const {
  if (query.dim() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                  " != index dim " + std::to_string(dim_));
  if (k < 1) throw Error(ErrorCode::Precondition, "k must be >= 1");

  std::vector<float> q(query.values.begin(), query.values.end());
  l2_normalize(q.data(), dim_);

  // Cosine over normalized rows is a plain dot product; accumulate in double
  // so scores are order-stable across platforms.
  std::vector<std::pair<double, std::size_t>> scoredRows;
  scoredRows.reserve(allow_doc.empty() ? ids_.size() : 64);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!allow_doc.empty() && !allow_doc.count(doc_ids_[i])) continue;
    scoredRows.emplace_back(dot(row(i), q.data(), dim_), i);
  }
  if (scored) *scored = scoredRows.size();

  const auto better = [this](const std::pair<double, std::size_t>& a,
                             const std::pair<double, std::size_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return ids_[a.second] < ids_[b.second];
  };
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scoredRows.size());
  std::partial_sort(scoredRows.begin(), scoredRows.begin() + take, scoredRows.end(), better);

  std::vector<Hit> hits;
  hits.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    hits.push_back(Hit{ids_[scoredRows[r].second], scoredRows[r].first, static_cast<int>(r + 1)});
  }
  return hits;
}

const std::string& VectorIndex::doc_of(const std::string& id) const {
  auto it = doc_by_id_.find(id);
  if (it == doc_by_id_.end())
    throw Error(ErrorCode::Precondition, "unknown row id '" + id + "'");
  return it->second;
}

bool VectorIndex::operator==(const VectorIndex& other) const {
  return dim_ == other.dim_ && ids_ == other.ids_ && doc_ids_ == other.doc_ids_ &&
         matrix_.size() == other.matrix_.size() &&
         std::memcmp(matrix_.data(), other.matrix_.data(),
                     matrix_.size() * sizeof(float)) == 0;
}

// ---------------------------------------------------------------------------
// Persistence

namespace index_io {

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "sha256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

std::vector<unsigned char> to_little_endian(const std::vector<float>& matrix) {
  std::vector<unsigned char> bytes(matrix.size() * 4);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &matrix[i], 4);
    bytes[i * 4 + 0] = static_cast<unsigned char>(u & 0xFF);
    bytes[i * 4 + 1] = static_cast<unsigned char>((u >> 8) & 0xFF);
    bytes[i * 4 + 2] = static_cast<unsigned char>((u >> 16) & 0xFF);
    bytes[i * 4 + 3] = static_cast<unsigned char>((u >> 24) & 0xFF);
  }
  return bytes;
}

std::vector<float> from_little_endian(const std::vector<unsigned char>& bytes) {
  std::vector<float> matrix(bytes.size() / 4);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(bytes[i * 4 + 0]) |
                            (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
    std::memcpy(&matrix[i], &u, 4);
  }
  return matrix;
}

}  // namespace

void write_matrix(const std::filesystem::path& bin_file,
                  const std::filesystem::path& manifest_file, const std::vector<float>& matrix,
                  std::size_t dim, std::size_t rows) {
  const auto bytes = to_little_endian(matrix);
  {
    std::ofstream out(bin_file, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + bin_file.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  ordered_json manifest;
  manifest["dim"] = dim;
  manifest["rows"] = rows;
  manifest["checksum_sha256"] = sha256_hex(bytes.data(), bytes.size());
  std::ofstream out(manifest_file, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest_file.string());
  out << manifest.dump(2) << "\n";
}

std::vector<float> read_matrix(const std::filesystem::path& bin_file,
                               const std::filesystem::path& manifest_file, std::size_t* dim,
                               std::size_t* rows) {
  std::ifstream mf(manifest_file);
  if (!mf) throw Error(ErrorCode::IoError, "cannot open " + manifest_file.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptIndex, manifest_file.string() + ": " + e.what());
  }
  if (!manifest.contains("dim") || !manifest.contains("rows") ||
      !manifest.contains("checksum_sha256"))
    throw Error(ErrorCode::CorruptIndex, "manifest missing dim/rows/checksum_sha256");
  *dim = manifest["dim"].get<std::size_t>();
  *rows = manifest["rows"].get<std::size_t>();

  std::ifstream in(bin_file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + bin_file.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() != *dim * *rows * 4)
    throw Error(ErrorCode::CorruptIndex,
                bin_file.string() + ": size " + std::to_string(bytes.size()) +
                    " does not match manifest dim*rows");
  const std::string checksum = sha256_hex(bytes.data(), bytes.size());
  if (checksum != manifest["checksum_sha256"].get<std::string>())
    throw Error(ErrorCode::CorruptIndex, bin_file.string() + ": checksum mismatch");
  return from_little_endian(bytes);
}

}  // namespace index_io

void VectorIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  index_io::write_matrix(dir / "vectors.bin", dir / "manifest.json", matrix_, dim_,
                         ids_.size());
  std::ofstream out(dir / "ids.jsonl", std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "ids.jsonl").string());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    ordered_json j;
    j["chunk_id"] = ids_[i];
    j["doc_id"] = doc_ids_[i];
    out << j.dump() << "\n";
  }
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir) {
  VectorIndex index;
  std::size_t rows = 0;
  index.matrix_ =
      index_io::read_matrix(dir / "vectors.bin", dir / "manifest.json", &index.dim_, &rows);

  std::ifstream in(dir / "ids.jsonl");
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + (dir / "ids.jsonl").string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      index.ids_.push_back(j.at("chunk_id").get<std::string>());
      index.doc_ids_.push_back(j.at("doc_id").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptIndex, (dir / "ids.jsonl").string() + ": " + e.what());
    }
  }
  if (index.ids_.size() != rows)
    throw Error(ErrorCode::CorruptIndex, "ids.jsonl row count " +
                                             std::to_string(index.ids_.size()) +
                                             " does not match manifest rows " +
                                             std::to_string(rows));
  for (std::size_t i = 0; i < index.ids_.size(); ++i)
    index.doc_by_id_.emplace(index.ids_[i], index.doc_ids_[i]);
  return index;
}

}  // namespace ragbench

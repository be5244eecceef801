#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ragbench/providers.hpp"

namespace ragbench::tune {

/// Minimal row-major dense matrix of doubles; all loss math runs in 64-bit.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
};

/// Inputs for one loss evaluation. Which fields must be present depends on
/// the loss: MNR uses anchors+positives, contrastive uses anchors+positives
/// +binary labels, softmax entailment uses anchors+positives+3-class labels,
/// triplet uses anchors+positives+negatives.
struct LossBatch {
  Matrix anchors;
  Matrix positives;
  std::optional<Matrix> negatives;
  std::optional<std::vector<int>> labels;
};

struct LossOutput {
  double value = 0.0;
  Matrix grad_anchors;
  Matrix grad_positives;
  Matrix grad_negatives;  // empty unless the loss consumes negatives
  Matrix grad_weights;    // empty unless the loss owns a classifier head
};

/// Arithmetic mean of the unmasked rows. Throws AllMasked when the mask
/// selects nothing.
std::vector<double> mean_pool(const Matrix& token_embeddings, const std::vector<bool>& mask);

/// In-batch softmax ranking: S_ij = scale * cosine(a_i, p_j), loss is mean
/// negative log-likelihood of the diagonal. Other positives in the batch act
/// as negatives. Throws ZeroVector when a row cannot be normalized.
LossOutput mnr_loss(const Matrix& anchors, const Matrix& positives, double scale = 20.0);

/// Distance-based pair loss: similar pairs (y=1) pay d^2, dissimilar pairs
/// pay max(0, margin - d)^2.
LossOutput contrastive_loss(const Matrix& u, const Matrix& v, const std::vector<int>& labels,
                            double margin = 0.5);

/// Three-class classification over features [u, v, |u-v|] with a trainable
/// 3 x 3d weight matrix; mean cross-entropy.
LossOutput softmax_entailment_loss(const Matrix& u, const Matrix& v,
                                   const std::vector<int>& labels, const Matrix& weights);

/// Margin hinge on Euclidean distances: max(0, d(a,p) - d(a,n) + margin).
LossOutput triplet_loss(const Matrix& anchors, const Matrix& positives, const Matrix& negatives,
                        double margin = 0.5);

enum class LossKind { mnr, contrastive, softmax, triplet };

struct LossParams {
  double mnr_scale = 20.0;
  double margin = 0.5;
  const Matrix* softmax_weights = nullptr;  // required for LossKind::softmax
};

/// Validated entry point: checks that the batch carries the fields the
/// selected loss needs (negatives for triplet, binary labels for
/// contrastive, 3-class labels plus a weight matrix for softmax) before
/// dispatching.
LossOutput evaluate_loss(LossKind kind, const LossBatch& batch, const LossParams& params = {});

LossKind loss_kind_from_name(const std::string& name);
const char* loss_kind_name(LossKind kind);

struct TextTriplet {
  std::string anchor;
  std::string positive;
  std::string negative;
};

/// JSONL {"anchor","positive","negative"}, one triplet per line.
std::vector<TextTriplet> load_triplets(const std::filesystem::path& path);
void save_triplets(const std::vector<TextTriplet>& triplets, const std::filesystem::path& path);

/// Single linear map over base embeddings: encode(x) = x W, W is d_in x d_out.
struct ToyEncoder {
  Matrix weights;

  std::vector<float> encode(const std::vector<float>& base) const;
  EmbeddingVector encode(const EmbeddingVector& base) const;
};

struct TrainOptions {
  int epochs = 50;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t d_out = 0;  // 0 means d_out = d_in
  std::uint64_t seed = 7;
  double mnr_scale = 20.0;
  double margin = 0.5;
};

struct TrainResult {
  ToyEncoder encoder;
  ToyEncoder initial_encoder;
  std::vector<double> loss_trace;  // per-epoch mean loss
};

/// Gradient descent on the chosen loss through the linear encoder, applied
/// to deterministic base embeddings of the triplet texts. Throws
/// DivergenceDetected when the loss stops being finite.
TrainResult train_toy_encoder(const std::vector<TextTriplet>& corpus, LossKind kind,
                              Embedder& base_embedder, const TrainOptions& opts = {});

/// "epoch,loss" CSV with one row per epoch.
std::string loss_trace_csv(const std::vector<double>& trace);

/// An Embedder that re-encodes another embedder's output through a trained
/// linear map; lets trained encoders drop into the retrieval stack.
class EncodedEmbedder : public Embedder {
 public:
  EncodedEmbedder(Embedder& base, const ToyEncoder& encoder)
      : base_(base), encoder_(encoder) {}

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  Embedder& base_;
  const ToyEncoder& encoder_;
};

}  // namespace ragbench::tune

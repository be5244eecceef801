#include "ragbench/embed_tune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "ragbench/error.hpp"

namespace ragbench::tune {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kZeroNorm = 1e-12;

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw Error(ErrorCode::Precondition, std::string(what) + ": shapes differ");
}

double row_norm(const double* row, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) acc += row[j] * row[j];
  return std::sqrt(acc);
}

/// Normalizes every row of `m` into `unit`, recording the norms. Throws
/// ZeroVector when a row is numerically zero.
std::vector<double> normalize_rows(const Matrix& m, Matrix& unit) {
  unit = Matrix(m.rows, m.cols);
  std::vector<double> norms(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double n = row_norm(m.row(i), m.cols);
    if (n < kZeroNorm)
      throw Error(ErrorCode::ZeroVector, "row " + std::to_string(i) + " has zero norm");
    norms[i] = n;
    for (std::size_t j = 0; j < m.cols; ++j) unit(i, j) = m(i, j) / n;
  }
  return norms;
}

/// Chain rule through x_hat = x / ||x||: given dL/dx_hat, accumulates dL/dx.
void backprop_normalization(const Matrix& unit, const std::vector<double>& norms,
                            const Matrix& grad_unit, Matrix& grad_raw) {
  for (std::size_t i = 0; i < unit.rows; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < unit.cols; ++j) dot += grad_unit(i, j) * unit(i, j);
    for (std::size_t j = 0; j < unit.cols; ++j)
      grad_raw(i, j) = (grad_unit(i, j) - dot * unit(i, j)) / norms[i];
  }
}

void check_finite(double value) {
  if (!std::isfinite(value))
    throw Error(ErrorCode::DivergenceDetected, "loss value is not finite");
}

}  // namespace

std::vector<double> mean_pool(const Matrix& token_embeddings, const std::vector<bool>& mask) {
  if (mask.size() != token_embeddings.rows)
    throw Error(ErrorCode::Precondition, "mask length must equal token count");
  std::vector<double> out(token_embeddings.cols, 0.0);
  std::size_t kept = 0;
  for (std::size_t t = 0; t < token_embeddings.rows; ++t) {
    if (!mask[t]) continue;
    ++kept;
    for (std::size_t j = 0; j < token_embeddings.cols; ++j) out[j] += token_embeddings(t, j);
  }
  if (kept == 0) throw Error(ErrorCode::AllMasked, "mask selects no tokens");
  for (double& x : out) x /= static_cast<double>(kept);
  return out;
}

LossOutput mnr_loss(const Matrix& anchors, const Matrix& positives, double scale) {
  check_same_shape(anchors, positives, "mnr_loss");
  const std::size_t B = anchors.rows;
  const std::size_t d = anchors.cols;
  if (B < 2) throw Error(ErrorCode::Precondition, "mnr_loss requires batch size >= 2");

  Matrix ua, up;
  const auto na = normalize_rows(anchors, ua);
  const auto np = normalize_rows(positives, up);

  // S_ij = scale * <ua_i, up_j>
  Matrix S(B, B);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += ua(i, k) * up(j, k);
      S(i, j) = scale * dot;
    }

  // Row-wise log-softmax with the stable max shift.
  double loss = 0.0;
  Matrix G(B, B);  // dL/dS
  for (std::size_t i = 0; i < B; ++i) {
    double mx = S(i, 0);
    for (std::size_t j = 1; j < B; ++j) mx = std::max(mx, S(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < B; ++j) z += std::exp(S(i, j) - mx);
    const double log_z = std::log(z) + mx;
    loss += log_z - S(i, i);
    for (std::size_t j = 0; j < B; ++j) {
      const double p = std::exp(S(i, j) - log_z);
      G(i, j) = (p - (i == j ? 1.0 : 0.0)) / static_cast<double>(B);
    }
  }
  loss /= static_cast<double>(B);
  check_finite(loss);

  Matrix grad_ua(B, d), grad_up(B, d);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) {
      const double g = scale * G(i, j);
      for (std::size_t k = 0; k < d; ++k) {
        grad_ua(i, k) += g * up(j, k);
        grad_up(j, k) += g * ua(i, k);
      }
    }

  LossOutput out;
  out.value = loss;
  out.grad_anchors = Matrix(B, d);
  out.grad_positives = Matrix(B, d);
  backprop_normalization(ua, na, grad_ua, out.grad_anchors);
  backprop_normalization(up, np, grad_up, out.grad_positives);
  return out;
}

LossOutput contrastive_loss(const Matrix& u, const Matrix& v, const std::vector<int>& labels,
                            double margin) {
  check_same_shape(u, v, "contrastive_loss");
  if (labels.size() != u.rows)
    throw Error(ErrorCode::Precondition, "labels length must equal batch size");
  const std::size_t B = u.rows;
  const std::size_t d = u.cols;

  LossOutput out;
  out.grad_anchors = Matrix(B, d);
  out.grad_positives = Matrix(B, d);

  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw Error(ErrorCode::Precondition, "contrastive labels must be 0 or 1");
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = u(i, j) - v(i, j);
      dist2 += diff * diff;
    }
    const double dist = std::sqrt(dist2);
    if (labels[i] == 1) {
      loss += dist2;
      for (std::size_t j = 0; j < d; ++j) {
        const double g = 2.0 * (u(i, j) - v(i, j)) / static_cast<double>(B);
        out.grad_anchors(i, j) += g;
        out.grad_positives(i, j) -= g;
      }
    } else if (dist < margin) {
      const double gap = margin - dist;
      loss += gap * gap;
      if (dist > kZeroNorm) {
        const double coeff = -2.0 * gap / dist / static_cast<double>(B);
        for (std::size_t j = 0; j < d; ++j) {
          const double g = coeff * (u(i, j) - v(i, j));
          out.grad_anchors(i, j) += g;
          out.grad_positives(i, j) -= g;
        }
      }
    }
  }
  out.value = loss / static_cast<double>(B);
  check_finite(out.value);
  return out;
}

LossOutput softmax_entailment_loss(const Matrix& u, const Matrix& v,
                                   const std::vector<int>& labels, const Matrix& weights) {
  check_same_shape(u, v, "softmax_entailment_loss");
  if (labels.size() != u.rows)
    throw Error(ErrorCode::Precondition, "labels length must equal batch size");
  const std::size_t B = u.rows;
  const std::size_t d = u.cols;
  if (weights.rows != 3 || weights.cols != 3 * d)
    throw Error(ErrorCode::Precondition, "weights must be 3 x 3d");

  LossOutput out;
  out.grad_anchors = Matrix(B, d);
  out.grad_positives = Matrix(B, d);
  out.grad_weights = Matrix(3, 3 * d);

  double loss = 0.0;
  std::vector<double> f(3 * d);
  for (std::size_t i = 0; i < B; ++i) {
    if (labels[i] < 0 || labels[i] > 2)
      throw Error(ErrorCode::Precondition, "entailment labels must be in 0..2");

    for (std::size_t j = 0; j < d; ++j) {
      f[j] = u(i, j);
      f[d + j] = v(i, j);
      f[2 * d + j] = std::abs(u(i, j) - v(i, j));
    }

    double logits[3];
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 3 * d; ++j) acc += weights(c, j) * f[j];
      logits[c] = acc;
    }
    const double mx = std::max({logits[0], logits[1], logits[2]});
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double log_z = std::log(z) + mx;
    loss += log_z - logits[labels[i]];

    double g[3];
    for (int c = 0; c < 3; ++c)
      g[c] = (std::exp(logits[c] - log_z) - (c == labels[i] ? 1.0 : 0.0)) /
             static_cast<double>(B);

    for (int c = 0; c < 3; ++c)
      for (std::size_t j = 0; j < 3 * d; ++j) out.grad_weights(c, j) += g[c] * f[j];

    // d f / d u: identity on [0,d), sign(u-v) on [2d,3d); sign(0) treated as 0.
    for (std::size_t j = 0; j < d; ++j) {
      double df_u = 0.0, df_v = 0.0, df_w = 0.0;
      for (int c = 0; c < 3; ++c) {
        df_u += g[c] * weights(c, j);
        df_v += g[c] * weights(c, d + j);
        df_w += g[c] * weights(c, 2 * d + j);
      }
      const double diff = u(i, j) - v(i, j);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      out.grad_anchors(i, j) += df_u + df_w * sign;
      out.grad_positives(i, j) += df_v - df_w * sign;
    }
  }
  out.value = loss / static_cast<double>(B);
  check_finite(out.value);
  return out;
}

LossOutput triplet_loss(const Matrix& anchors, const Matrix& positives, const Matrix& negatives,
                        double margin) {
  check_same_shape(anchors, positives, "triplet_loss");
  check_same_shape(anchors, negatives, "triplet_loss");
  const std::size_t B = anchors.rows;
  const std::size_t d = anchors.cols;

  LossOutput out;
  out.grad_anchors = Matrix(B, d);
  out.grad_positives = Matrix(B, d);
  out.grad_negatives = Matrix(B, d);

  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    double dp2 = 0.0, dn2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double ep = anchors(i, j) - positives(i, j);
      const double en = anchors(i, j) - negatives(i, j);
      dp2 += ep * ep;
      dn2 += en * en;
    }
    const double dp = std::sqrt(dp2);
    const double dn = std::sqrt(dn2);
    const double hinge = dp - dn + margin;
    if (hinge <= 0.0) continue;
    loss += hinge;

    const double inv_dp = dp > kZeroNorm ? 1.0 / dp : 0.0;
    const double inv_dn = dn > kZeroNorm ? 1.0 / dn : 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double ep = (anchors(i, j) - positives(i, j)) * inv_dp;
      const double en = (anchors(i, j) - negatives(i, j)) * inv_dn;
      out.grad_anchors(i, j) += (ep - en) / static_cast<double>(B);
      out.grad_positives(i, j) += -ep / static_cast<double>(B);
      out.grad_negatives(i, j) += en / static_cast<double>(B);
    }
  }
  out.value = loss / static_cast<double>(B);
  check_finite(out.value);
  return out;
}

// ---------------------------------------------------------------------------
// Toy encoder training

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "mnr") return LossKind::mnr;
  if (name == "contrastive") return LossKind::contrastive;
  if (name == "softmax") return LossKind::softmax;
  if (name == "triplet") return LossKind::triplet;
  throw Error(ErrorCode::InvalidConfig, "unknown loss kind '" + name + "'");
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::mnr: return "mnr";
    case LossKind::contrastive: return "contrastive";
    case LossKind::softmax: return "softmax";
    case LossKind::triplet: return "triplet";
  }
  return "?";
}

std::vector<TextTriplet> load_triplets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<TextTriplet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      out.push_back(TextTriplet{j.at("anchor").get<std::string>(),
                                j.at("positive").get<std::string>(),
                                j.at("negative").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_triplets(const std::vector<TextTriplet>& triplets,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& t : triplets) {
    ordered_json j;
    j["anchor"] = t.anchor;
    j["positive"] = t.positive;
    j["negative"] = t.negative;
    out << j.dump() << "\n";
  }
}

std::vector<float> ToyEncoder::encode(const std::vector<float>& base) const {
  if (base.size() != weights.rows)
    throw Error(ErrorCode::DimensionMismatch, "encoder input dim mismatch");
  std::vector<float> out(weights.cols, 0.0f);
  for (std::size_t i = 0; i < weights.rows; ++i) {
    const double x = base[i];
    if (x == 0.0) continue;
    for (std::size_t j = 0; j < weights.cols; ++j)
      out[j] += static_cast<float>(x * weights(i, j));
  }
  return out;
}

EmbeddingVector ToyEncoder::encode(const EmbeddingVector& base) const {
  EmbeddingVector v;
  v.id = base.id;
  v.values = encode(base.values);
  return v;
}

std::vector<EmbeddingVector> EncodedEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  auto base = base_.embed_batch(texts);
  for (auto& v : base) v = encoder_.encode(v);
  return base;
}

namespace {

Matrix embed_rows(Embedder& embedder, const std::vector<std::string>& texts) {
  const auto vectors = embedder.embed_batch(texts);
  Matrix m(vectors.size(), vectors.front().dim());
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = vectors[i].values[j];
  return m;
}

Matrix encode_matrix(const Matrix& base, const Matrix& W) {
  Matrix out(base.rows, W.cols);
  for (std::size_t i = 0; i < base.rows; ++i)
    for (std::size_t k = 0; k < base.cols; ++k) {
      const double x = base(i, k);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < W.cols; ++j) out(i, j) += x * W(k, j);
    }
  return out;
}

/// Accumulates base^T * grad into grad_W.
void accumulate_weight_grad(const Matrix& base, const Matrix& grad, Matrix& grad_W) {
  for (std::size_t i = 0; i < base.rows; ++i)
    for (std::size_t k = 0; k < base.cols; ++k) {
      const double x = base(i, k);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < grad.cols; ++j) grad_W(k, j) += x * grad(i, j);
    }
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  Matrix out(end - begin, m.cols);
  std::copy(m.row(begin), m.row(begin) + (end - begin) * m.cols, out.data.begin());
  return out;
}

}  // namespace

TrainResult train_toy_encoder(const std::vector<TextTriplet>& corpus, LossKind kind,
                              Embedder& base_embedder, const TrainOptions& opts) {
  if (corpus.size() < 32)
    throw Error(ErrorCode::Precondition, "training needs at least 32 triplets");
  if (opts.epochs < 1) throw Error(ErrorCode::Precondition, "epochs must be >= 1");

  std::vector<std::string> anchor_texts, positive_texts, negative_texts;
  for (const auto& t : corpus) {
    anchor_texts.push_back(t.anchor);
    positive_texts.push_back(t.positive);
    negative_texts.push_back(t.negative);
  }
  const Matrix base_a = embed_rows(base_embedder, anchor_texts);
  const Matrix base_p = embed_rows(base_embedder, positive_texts);
  const Matrix base_n = embed_rows(base_embedder, negative_texts);

  const std::size_t d_in = base_a.cols;
  const std::size_t d_out = opts.d_out == 0 ? d_in : opts.d_out;

  // Identity-plus-noise start: close enough to the base embedding to retrieve
  // something, far enough that training has room to move.
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, 0.15);
  Matrix W(d_in, d_out);
  for (std::size_t i = 0; i < d_in; ++i)
    for (std::size_t j = 0; j < d_out; ++j)
      W(i, j) = (i == j ? 1.0 : 0.0) + noise(rng);

  TrainResult result;
  result.initial_encoder = ToyEncoder{W};

  // Classifier head for the softmax loss, trained jointly with W.
  Matrix head(3, 3 * d_out);
  {
    std::normal_distribution<double> hnoise(0.0, 0.05);
    for (auto& x : head.data) x = hnoise(rng);
  }

  const std::size_t batch =
      std::min<std::size_t>(std::max<std::size_t>(opts.batch_size, 2), corpus.size());

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t start = 0; start < corpus.size(); start += batch) {
      const std::size_t end = std::min(start + batch, corpus.size());
      if (kind == LossKind::mnr && end - start < 2) break;  // MNR needs >= 2 rows

      const Matrix ba = slice_rows(base_a, start, end);
      const Matrix bp = slice_rows(base_p, start, end);
      const Matrix bn = slice_rows(base_n, start, end);
      const Matrix ea = encode_matrix(ba, W);
      const Matrix ep = encode_matrix(bp, W);
      const Matrix en = encode_matrix(bn, W);
      const std::size_t B = ea.rows;

      LossOutput lo;
      Matrix grad_W(d_in, d_out);
      switch (kind) {
        case LossKind::mnr:
          lo = mnr_loss(ea, ep, opts.mnr_scale);
          accumulate_weight_grad(ba, lo.grad_anchors, grad_W);
          accumulate_weight_grad(bp, lo.grad_positives, grad_W);
          break;
        case LossKind::triplet:
          lo = triplet_loss(ea, ep, en, opts.margin);
          accumulate_weight_grad(ba, lo.grad_anchors, grad_W);
          accumulate_weight_grad(bp, lo.grad_positives, grad_W);
          accumulate_weight_grad(bn, lo.grad_negatives, grad_W);
          break;
        case LossKind::contrastive: {
          // Each triplet contributes a similar pair (a,p) and a dissimilar
          // pair (a,n).
          Matrix u(2 * B, d_out), v(2 * B, d_out);
          std::vector<int> labels(2 * B);
          for (std::size_t i = 0; i < B; ++i) {
            std::copy(ea.row(i), ea.row(i) + d_out, u.row(i));
            std::copy(ep.row(i), ep.row(i) + d_out, v.row(i));
            labels[i] = 1;
            std::copy(ea.row(i), ea.row(i) + d_out, u.row(B + i));
            std::copy(en.row(i), en.row(i) + d_out, v.row(B + i));
            labels[B + i] = 0;
          }
          lo = contrastive_loss(u, v, labels, opts.margin);
          const Matrix gu_a = slice_rows(lo.grad_anchors, 0, B);
          const Matrix gu_n = slice_rows(lo.grad_anchors, B, 2 * B);
          const Matrix gv_p = slice_rows(lo.grad_positives, 0, B);
          const Matrix gv_n = slice_rows(lo.grad_positives, B, 2 * B);
          accumulate_weight_grad(ba, gu_a, grad_W);
          accumulate_weight_grad(ba, gu_n, grad_W);
          accumulate_weight_grad(bp, gv_p, grad_W);
          accumulate_weight_grad(bn, gv_n, grad_W);
          break;
        }
        case LossKind::softmax: {
          // Pairs (a,p) labeled entailment (0) and (a,n) contradiction (2).
          Matrix u(2 * B, d_out), v(2 * B, d_out);
          std::vector<int> labels(2 * B);
          for (std::size_t i = 0; i < B; ++i) {
            std::copy(ea.row(i), ea.row(i) + d_out, u.row(i));
            std::copy(ep.row(i), ep.row(i) + d_out, v.row(i));
            labels[i] = 0;
            std::copy(ea.row(i), ea.row(i) + d_out, u.row(B + i));
            std::copy(en.row(i), en.row(i) + d_out, v.row(B + i));
            labels[B + i] = 2;
          }
          lo = softmax_entailment_loss(u, v, labels, head);
          const Matrix gu_a = slice_rows(lo.grad_anchors, 0, B);
          const Matrix gu_n = slice_rows(lo.grad_anchors, B, 2 * B);
          const Matrix gv_p = slice_rows(lo.grad_positives, 0, B);
          const Matrix gv_n = slice_rows(lo.grad_positives, B, 2 * B);
          accumulate_weight_grad(ba, gu_a, grad_W);
          accumulate_weight_grad(ba, gu_n, grad_W);
          accumulate_weight_grad(bp, gv_p, grad_W);
          accumulate_weight_grad(bn, gv_n, grad_W);
          for (std::size_t i = 0; i < head.data.size(); ++i)
            head.data[i] -= opts.learning_rate * lo.grad_weights.data[i];
          break;
        }
      }
      check_finite(lo.value);
      epoch_loss += lo.value;
      ++n_batches;

      for (std::size_t i = 0; i < W.data.size(); ++i)
        W.data[i] -= opts.learning_rate * grad_W.data[i];
    }

    result.loss_trace.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(n_batches, 1)));
  }

  result.encoder = ToyEncoder{std::move(W)};
  return result;
}

std::string loss_trace_csv(const std::vector<double>& trace) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i, trace[i]);
    out += buf;
  }
  return out;
}

}  // namespace ragbench::tune

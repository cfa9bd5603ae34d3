#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textpref/corpus.hpp"
#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/rng.hpp"

namespace textpref {

/// Scores assigned by the policy to the preferred and dispreferred text.
struct PairScores {
  double s_good = 0.0;
  double s_bad = 0.0;
};

/// log(1 + e^x) without overflow across the whole double range.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Pairwise log-ratio preference loss:
///   -log(exp(s_good) / (exp(s_good) + exp(s_bad)))
/// evaluated as softplus(s_bad - s_good). Strictly positive, strictly
/// decreasing in the score margin, and immune to overflow.
inline double dpo_loss(PairScores p) {
  if (!std::isfinite(p.s_good) || !std::isfinite(p.s_bad))
    throw ValidationError("dpo_loss: non-finite score");
  return softplus(p.s_bad - p.s_good);
}

struct PairGrad {
  double d_good = 0.0;
  double d_bad = 0.0;
};

/// Gradient of dpo_loss w.r.t. the two scores: (-(1-s), +(1-s)) with
/// s = logistic(s_good - s_bad). The components always sum to zero.
inline PairGrad dpo_grad(PairScores p) {
  if (!std::isfinite(p.s_good) || !std::isfinite(p.s_bad))
    throw ValidationError("dpo_grad: non-finite score");
  const double g = 1.0 - logistic(p.s_good - p.s_bad);
  return {-g, g};
}

// ---------------------------------------------------------------------------
// Toy judge: a linear scorer over hashed character n-grams, trained with the
// pairwise loss above. Strong enough to notice word-order disruption through
// token-boundary n-grams, small enough for exact gradient verification.
// ---------------------------------------------------------------------------

/// Sparse L2-normalized feature vector; indices strictly increasing.
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;

namespace detail {
inline void check_dim(std::uint32_t dim) {
  if (dim < 256 || (dim & (dim - 1)) != 0)
    throw ValidationError("feature dimension must be a power of two >= 256");
}
}  // namespace detail

/// Counts of all byte n-grams hashed into `dim` buckets (FNV-1a 64 masked to
/// dim-1), then L2-normalized. Texts shorter than n hash as a single gram.
inline SparseVec featurize(std::string_view text, int ngram_order,
                           std::uint32_t dim) {
  if (text.empty()) throw ValidationError("featurize: empty text");
  if (ngram_order < 1) throw ValidationError("featurize: n-gram order must be >= 1");
  detail::check_dim(dim);
  const std::size_t n = static_cast<std::size_t>(ngram_order);
  std::unordered_map<std::uint32_t, double> counts;
  if (text.size() < n) {
    counts[static_cast<std::uint32_t>(fnv1a64(text) & (dim - 1))] = 1.0;
  } else {
    for (std::size_t i = 0; i + n <= text.size(); ++i)
      counts[static_cast<std::uint32_t>(fnv1a64(text.substr(i, n)) & (dim - 1))] += 1.0;
  }
  SparseVec vec(counts.begin(), counts.end());
  std::sort(vec.begin(), vec.end());
  double norm_sq = 0.0;
  for (const auto& [_, v] : vec) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  for (auto& [_, v] : vec) v /= norm;
  return vec;
}

struct ToyJudgeModel {
  std::vector<double> weights;  // size = dim, a power of two
  double bias = 0.0;
  int ngram_order = 3;
  double threshold = 0.0;
  std::uint64_t seed = 0;

  std::uint32_t dim() const { return static_cast<std::uint32_t>(weights.size()); }
};

inline double score_sparse(const ToyJudgeModel& model, const SparseVec& vec) {
  double s = model.bias;
  for (const auto& [i, v] : vec) s += model.weights[i] * v;
  return s;
}

inline double score_text(const ToyJudgeModel& model, std::string_view text) {
  return score_sparse(model, featurize(text, model.ngram_order, model.dim()));
}

/// 1 iff the score strictly exceeds the threshold.
inline int predict_label(const ToyJudgeModel& model, std::string_view text) {
  return score_text(model, text) > model.threshold ? 1 : 0;
}

struct TextPair {
  std::string good;
  std::string bad;
};

struct ToyTrainConfig {
  double lr = 0.5;
  int epochs = 5;
  int batch_size = 32;
  std::uint32_t dim = 1u << 16;
  int ngram_order = 3;
  std::uint64_t seed = 42;
};

/// Mini-batch SGD on the mean pairwise loss. Deterministic for a fixed seed:
/// epoch shuffles come from a sub-seeded generator and all accumulation is
/// single-threaded in a fixed order.
inline ToyJudgeModel train_toy_judge(std::span<const TextPair> pairs,
                                     const ToyTrainConfig& cfg = {}) {
  if (pairs.empty()) throw ValidationError("train_toy_judge: no pairs");
  if (cfg.lr <= 0.0) throw ValidationError("train_toy_judge: lr must be positive");
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw ValidationError("train_toy_judge: epochs and batch_size must be >= 1");
  detail::check_dim(cfg.dim);

  ToyJudgeModel model;
  model.weights.assign(cfg.dim, 0.0);
  model.ngram_order = cfg.ngram_order;
  model.seed = cfg.seed;

  std::vector<SparseVec> good(pairs.size()), bad(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    good[i] = featurize(pairs[i].good, cfg.ngram_order, cfg.dim);
    bad[i] = featurize(pairs[i].bad, cfg.ngram_order, cfg.dim);
  }

  const auto mean_loss = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      sum += dpo_loss({score_sparse(model, good[i]), score_sparse(model, bad[i])});
    return sum / static_cast<double>(pairs.size());
  };

  const double initial_loss = mean_loss();  // ln 2 at zero weights

  Rng rng(sub_seed(cfg.seed, "toy-judge-train"));
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::unordered_map<std::uint32_t, double> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.clear();
      for (std::size_t at = start; at < stop; ++at) {
        const std::size_t i = order[at];
        const double sg = score_sparse(model, good[i]);
        const double sb = score_sparse(model, bad[i]);
        if (!std::isfinite(sg) || !std::isfinite(sb))
          throw Error("train_toy_judge: diverged (non-finite score); lower the learning rate");
        const double g = 1.0 - logistic(sg - sb);
        // dL/dw = g * (phi(bad) - phi(good))
        for (const auto& [idx, v] : bad[i]) grad[idx] += g * v;
        for (const auto& [idx, v] : good[i]) grad[idx] -= g * v;
      }
      const double scale = cfg.lr / static_cast<double>(stop - start);
      for (const auto& [idx, g] : grad) model.weights[idx] -= scale * g;
    }
  }

  const double final_loss = mean_loss();
  if (!std::isfinite(final_loss))
    throw Error("train_toy_judge: diverged (loss is not finite); lower the learning rate");
  if (!(final_loss < initial_loss))
    throw Error("train_toy_judge: training made no progress (final loss " +
                std::to_string(final_loss) + " >= initial " +
                std::to_string(initial_loss) + ")");

  double mean_good = 0.0, mean_bad = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    mean_good += score_sparse(model, good[i]);
    mean_bad += score_sparse(model, bad[i]);
  }
  mean_good /= static_cast<double>(pairs.size());
  mean_bad /= static_cast<double>(pairs.size());
  model.threshold = 0.5 * (mean_good + mean_bad);
  return model;
}

// ---------------------------------------------------------------------------
// Model file: little-endian binary, versioned.
//   "TPJ1" | u32 version | u32 dim | u32 ngram_order | u64 seed
//   | f64 bias | f64 threshold | f64 weights[dim]
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(std::string_view data, const std::string& name)
      : data_(data), name_(name) {}
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(byte()) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  unsigned char byte() {
    if (pos_ >= data_.size())
      throw ValidationError(name_ + ": truncated model file");
    return static_cast<unsigned char>(data_[pos_++]);
  }
  std::string_view data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kToyModelVersion = 1;

inline void save_model(const ToyJudgeModel& model,
                       const std::filesystem::path& path) {
  std::string out;
  out.reserve(32 + model.weights.size() * 8);
  out += "TPJ1";
  detail::put_u32(out, kToyModelVersion);
  detail::put_u32(out, model.dim());
  detail::put_u32(out, static_cast<std::uint32_t>(model.ngram_order));
  detail::put_u64(out, model.seed);
  detail::put_f64(out, model.bias);
  detail::put_f64(out, model.threshold);
  for (double w : model.weights) detail::put_f64(out, w);
  write_file(path, out);
}

inline ToyJudgeModel load_model(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 4 || data.substr(0, 4) != "TPJ1")
    throw ValidationError(path.string() + ": not a toy judge model file");
  detail::ByteReader in(std::string_view(data).substr(4), path.string());
  const std::uint32_t version = in.u32();
  if (version != kToyModelVersion)
    throw ValidationError(path.string() + ": unsupported model version " +
                          std::to_string(version));
  ToyJudgeModel model;
  const std::uint32_t dim = in.u32();
  detail::check_dim(dim);
  model.ngram_order = static_cast<int>(in.u32());
  model.seed = in.u64();
  model.bias = in.f64();
  model.threshold = in.f64();
  model.weights.resize(dim);
  for (auto& w : model.weights) {
    w = in.f64();
    if (!std::isfinite(w))
      throw ValidationError(path.string() + ": non-finite weight");
  }
  if (!in.done())
    throw ValidationError(path.string() + ": trailing bytes in model file");
  return model;
}

/// Good/bad training pairs from a merged corpus: each degraded passage pairs
/// with its normal twin.
inline std::vector<TextPair> pairs_from_corpus(const Corpus& corpus) {
  std::vector<TextPair> out;
  for (const Passage& p : corpus.passages()) {
    if (p.label != kLabelDegraded) continue;
    const Passage* src = corpus.find(*p.source_id);
    if (!src)
      throw ValidationError("passage '" + p.id + "': source_id '" +
                            *p.source_id + "' does not resolve");
    out.push_back({src->text, p.text});
  }
  return out;
}

// JSONL pairs: {"good": str, "bad": str}
inline std::vector<TextPair> load_pairs(const std::filesystem::path& path) {
  std::vector<TextPair> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    try {
      out.push_back({rec.at("good").get<std::string>(),
                     rec.at("bad").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": bad record: " + e.what());
    }
  });
  return out;
}

inline std::size_t save_pairs(std::span<const TextPair> pairs,
                              const std::filesystem::path& path) {
  JsonlWriter out(path);
  for (const auto& p : pairs) {
    json rec;
    rec["good"] = p.good;
    rec["bad"] = p.bad;
    out.write(rec);
  }
  return out.count();
}

}  // namespace textpref

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "absa/backend.hpp"

namespace absa {

/// Self-contained trainable encoder, sized for experiments that must run
/// without an external checkpoint. Subtokens are hashed character chunks;
/// hidden states evolve through attention layers whose probabilities are
/// scaled dot-products of the current states under fixed per-layer/head
/// projections. The embedding table is the trainable state: domain
/// adaptation runs a masked-token objective over it, which shifts both the
/// attention maps and the span embeddings downstream.
///
/// Everything is seeded and single-threaded, so adaptation with the same
/// corpus, config, and seed persists identical weights.
class TinyBackend : public ModelBackend {
 public:
  struct Config {
    int dim = 32;
    int d_k = 8;
    int n_layers = 6;
    int n_heads = 4;
    int buckets = 8192;
    int max_subtokens = 256;
    std::uint64_t seed = 42;
  };

  TinyBackend() : TinyBackend(Config{}) {}
  explicit TinyBackend(const Config& config);

  /// Copies the weights; the label cache starts cold.
  TinyBackend(const TinyBackend& other)
      : cfg_(other.cfg_),
        embedding_(other.embedding_),
        w_query_(other.w_query_),
        w_key_(other.w_key_),
        positional_(other.positional_) {}
  TinyBackend& operator=(const TinyBackend&) = delete;

  static std::unique_ptr<TinyBackend> load(const std::filesystem::path& path);
  void save(const std::filesystem::path& file) const;

  std::string name() const override { return "tiny"; }
  int n_layers() const override { return cfg_.n_layers; }
  int n_heads() const override { return cfg_.n_heads; }
  int hidden_size() const override { return cfg_.dim; }
  int max_subtokens() const override { return cfg_.max_subtokens; }

  TokenAlignment tokenize_with_alignment(std::string_view text) const override;
  AttentionView attention_maps(std::string_view text,
                               std::span<const int> layers) const override;
  EmbeddingVector embed_span(std::string_view text,
                             std::span<const int> word_indices) const override;
  EmbeddingVector embed_label(Polarity label) const override;

  bool supports_adaptation() const override { return true; }
  std::unique_ptr<ModelBackend> domain_adapt(
      const TextCorpus& corpus, const AdaptationConfig& config,
      const std::filesystem::path& run_dir) const override;

  bool supports_classification() const override { return true; }
  std::unique_ptr<TextClassifier> train_classifier(
      std::span<const std::string> texts, std::span<const Polarity> labels,
      const AdaptationConfig& config) const override;

 private:
  struct Forward {
    std::vector<Eigen::MatrixXd> hidden;      // per layer boundary: S x dim
    std::vector<Eigen::MatrixXd> attention;   // layer-major over heads: S x S
  };

  std::vector<int> subtoken_ids(const TokenAlignment& alignment) const;
  Forward run_forward(std::string_view text, int up_to_layer) const;

  Config cfg_;
  Eigen::MatrixXd embedding_;               // buckets x dim, trainable
  std::vector<Eigen::MatrixXd> w_query_;    // (layer*heads) entries, dim x d_k
  std::vector<Eigen::MatrixXd> w_key_;
  Eigen::MatrixXd positional_;              // max_subtokens x dim, fixed

  mutable std::mutex label_mutex_;
  mutable std::map<Polarity, EmbeddingVector> label_cache_;
};

}  // namespace absa

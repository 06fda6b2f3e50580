#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "absa/text.hpp"
#include "absa/types.hpp"

namespace absa {

/// Word-to-subtoken alignment for one encoder input.
struct TokenAlignment {
  std::vector<Word> words;
  /// Per word, the contiguous half-open range of encoder subtoken indices.
  std::vector<std::pair<int, int>> subtoken_spans;
  std::vector<int> special_token_indices;
  int n_subtokens = 0;

  /// Word indices whose character span overlaps [from, to).
  std::vector<int> words_for_span(int from, int to) const;

  /// Enforces the partition invariant: spans are disjoint, ordered, cover
  /// every non-special subtoken, and every word has at least one subtoken.
  void validate() const;
};

/// Per-layer, per-head attention probabilities over subtoken positions.
/// Rows are queries, columns keys; every row is a softmax output.
struct AttentionView {
  std::vector<int> layers;
  int n_heads = 0;
  int d_k = 0;  // key dimensionality, metadata only
  int n_subtokens = 0;
  std::vector<Eigen::MatrixXd> matrices;  // layer-major: layers.size() * n_heads

  const Eigen::MatrixXd& at(int layer, int head) const;

  /// Throws std::invalid_argument unless every row of every matrix sums to 1
  /// within tol and dimensions match n_subtokens.
  void validate(double tol = 1e-4) const;
};

struct EmbeddingVector {
  Eigen::VectorXd values;
  int layer = -1;  // hidden layer the vector came from (-1 = final)

  enum class Pooling { mean_subtokens };
  Pooling pooling = Pooling::mean_subtokens;
};

/// Masked-token adaptation hyperparameters.
struct AdaptationConfig {
  int batch_size = 16;
  int grad_accum_steps = 2;
  double learning_rate = 5e-5;
  int epochs = 5;
  double mask_probability = 0.15;
  std::uint64_t seed = 1;

  void validate() const;
};

class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual Polarity predict(std::string_view text) const = 0;
};

/// Abstract pretrained bidirectional encoder. A handle is immutable after
/// construction; concurrent read operations are safe. Adaptation returns a
/// fresh handle and never mutates the original.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string name() const = 0;
  virtual int n_layers() const = 0;
  virtual int n_heads() const = 0;
  virtual int hidden_size() const = 0;
  virtual int max_subtokens() const = 0;

  /// Word-level alignment for the text. Throws std::invalid_argument on
  /// empty text or when the text exceeds max_subtokens() (the message
  /// carries the limit; no silent truncation).
  virtual TokenAlignment tokenize_with_alignment(std::string_view text) const = 0;

  /// Attention probabilities for the requested layers, all heads.
  /// Deterministic for a fixed model state. Throws std::invalid_argument
  /// for layer indices outside [0, n_layers()).
  virtual AttentionView attention_maps(std::string_view text,
                                       std::span<const int> layers) const = 0;

  /// Mean over word-level means of final-layer subtoken vectors for the
  /// listed words. Throws std::invalid_argument on an empty index set.
  virtual EmbeddingVector embed_span(std::string_view text,
                                     std::span<const int> word_indices) const = 0;

  /// Embedding of the bare label word as a standalone input, mean-pooled
  /// over its subtokens, final layer. Cached per model state.
  virtual EmbeddingVector embed_label(Polarity label) const = 0;

  virtual bool supports_adaptation() const { return false; }

  /// Masked-token adaptation on the corpus. Persists the adapted state
  /// under run_dir (weights.bin, config.json, loss.log) and returns a new
  /// handle. Throws CapabilityError when unsupported.
  virtual std::unique_ptr<ModelBackend> domain_adapt(
      const TextCorpus& corpus, const AdaptationConfig& config,
      const std::filesystem::path& run_dir) const;

  virtual bool supports_classification() const { return false; }

  /// Trains a 3-way polarity classifier on (text, label) pairs.
  /// Throws CapabilityError when unsupported.
  virtual std::unique_ptr<TextClassifier> train_classifier(
      std::span<const std::string> texts, std::span<const Polarity> labels,
      const AdaptationConfig& config) const;
};

struct BackendParams {
  std::uint64_t seed = 42;
  std::string model_path;  // adapted weights dir/file, empty = fresh state
  int layers = 0;          // 0 = backend default
  int heads = 0;
  int hidden = 0;
};

/// Backend plug-in registry, discoverable by name ("mock", "tiny").
std::unique_ptr<ModelBackend> create_backend(const std::string& id,
                                             const BackendParams& params);
std::vector<std::string> backend_names();

}  // namespace absa

#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "absa/backend.hpp"

namespace absa {

/// Deterministic stand-in encoder. Attention matrices and embeddings are
/// pseudo-random but fixed functions of (seed, input text), generated from
/// splitmix64 streams, so every downstream contract can be tested without a
/// trained model and results reproduce bit-for-bit across platforms.
///
/// Test hooks ("rigging") let a fixture pin subtoken counts, steer attention
/// mass toward a chosen word, pin word embeddings, or corrupt row sums to
/// exercise validation paths. Rig before use; handles are read-only after.
class MockBackend : public ModelBackend {
 public:
  struct Config {
    std::uint64_t seed = 42;
    int n_layers = 12;
    int n_heads = 4;
    int hidden = 32;
    int d_k = 8;
    int max_subtokens = 128;
  };

  MockBackend() : MockBackend(Config{}) {}
  explicit MockBackend(const Config& config) : cfg_(config) {}

  std::string name() const override { return "mock"; }
  int n_layers() const override { return cfg_.n_layers; }
  int n_heads() const override { return cfg_.n_heads; }
  int hidden_size() const override { return cfg_.hidden; }
  int max_subtokens() const override { return cfg_.max_subtokens; }

  TokenAlignment tokenize_with_alignment(std::string_view text) const override;
  AttentionView attention_maps(std::string_view text,
                               std::span<const int> layers) const override;
  EmbeddingVector embed_span(std::string_view text,
                             std::span<const int> word_indices) const override;
  EmbeddingVector embed_label(Polarity label) const override;

  // -- test hooks -----------------------------------------------------------

  /// Pins the subtoken count for a word (case-folded surface form).
  void rig_subtoken_count(const std::string& word, int count);

  /// Steers a fraction `mass` of every query row's attention onto the given
  /// word's subtoken columns for this exact text. Rows stay row-stochastic.
  void rig_attention_target(const std::string& text, int word_index,
                            double mass = 0.9);

  /// Pins the embedding of every subtoken of a word (case-folded surface
  /// form); the vector is used as given (normalized on rig).
  void rig_embedding(const std::string& word, Eigen::VectorXd vec);

  /// When set, the first row of every generated attention matrix is scaled
  /// by the factor, breaking row-stochasticity on purpose.
  void corrupt_attention_rows(double factor) { corrupt_factor_ = factor; }

 private:
  Eigen::VectorXd subtoken_vector(std::uint64_t text_hash,
                                  const std::string& word_lower,
                                  int subtoken_index) const;

  Config cfg_;
  std::map<std::string, int> rigged_counts_;
  std::map<std::string, std::pair<int, double>> rigged_targets_;  // by text
  std::map<std::string, Eigen::VectorXd> rigged_embeddings_;
  std::optional<double> corrupt_factor_;

  mutable std::mutex label_mutex_;
  mutable std::map<Polarity, EmbeddingVector> label_cache_;
};

}  // namespace absa

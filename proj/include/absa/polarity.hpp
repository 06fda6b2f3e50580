#pragma once

#include <array>

#include <Eigen/Dense>

#include "absa/attention.hpp"
#include "absa/backend.hpp"
#include "absa/types.hpp"

namespace absa {

/// Zero-shot class prototypes: encoder embeddings of the three polarity
/// words, fixed order positive, negative, neutral.
struct PolarityLabelSet {
  std::array<EmbeddingVector, 3> vectors;

  /// Bare label words by default. A non-empty template ("it was {}")
  /// embeds the filled template instead, pooled over all its words.
  static PolarityLabelSet from_backend(const ModelBackend& backend,
                                       const std::string& label_template = "");
  void validate() const;
};

struct PolarityPrediction {
  Polarity label = Polarity::neutral;
  std::array<double, 3> similarities{0.0, 0.0, 0.0};
};

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Cosine against each label vector, argmax; exact ties break by label
/// order positive > negative > neutral. With neutral_margin > 0, a winning
/// margin below it demotes the prediction to neutral (defaults off).
/// Throws std::invalid_argument on a zero opinion vector.
PolarityPrediction assign_polarity(const EmbeddingVector& opinion,
                                   const PolarityLabelSet& labels,
                                   double neutral_margin = 0.0);

/// Embeds the predicted opinion phrase in sentence context and assigns
/// polarity; a sentence_fallback prediction embeds every word instead.
PolarityPrediction classify_instance(const OpinionPrediction& prediction,
                                     const RawSentence& sentence,
                                     const ModelBackend& backend,
                                     const PolarityLabelSet& labels,
                                     double neutral_margin = 0.0);

}  // namespace absa

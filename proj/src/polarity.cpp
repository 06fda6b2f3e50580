#include "absa/polarity.hpp"

#include <stdexcept>

namespace absa {

PolarityLabelSet PolarityLabelSet::from_backend(
    const ModelBackend& backend, const std::string& label_template) {
  PolarityLabelSet set;
  for (int i = 0; i < 3; ++i) {
    const Polarity label = static_cast<Polarity>(i);
    if (label_template.empty()) {
      set.vectors[static_cast<std::size_t>(i)] = backend.embed_label(label);
      continue;
    }
    std::string text = label_template;
    const std::size_t slot = text.find("{}");
    if (slot == std::string::npos) {
      throw std::invalid_argument("label template needs a {} placeholder");
    }
    text.replace(slot, 2, to_string(label));
    const TokenAlignment a = backend.tokenize_with_alignment(text);
    std::vector<int> all(a.words.size());
    for (std::size_t w = 0; w < all.size(); ++w) all[w] = static_cast<int>(w);
    set.vectors[static_cast<std::size_t>(i)] = backend.embed_span(text, all);
  }
  set.validate();
  return set;
}

void PolarityLabelSet::validate() const {
  const Eigen::Index dim = vectors[0].values.size();
  for (const EmbeddingVector& v : vectors) {
    if (v.values.size() != dim) {
      throw std::invalid_argument("label vectors differ in dimensionality");
    }
    if (v.values.norm() == 0.0) {
      throw std::invalid_argument("zero label vector");
    }
  }
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("cosine of a zero vector");
  }
  return a.dot(b) / (na * nb);
}

PolarityPrediction assign_polarity(const EmbeddingVector& opinion,
                                   const PolarityLabelSet& labels,
                                   double neutral_margin) {
  if (opinion.values.size() != labels.vectors[0].values.size()) {
    throw std::invalid_argument("opinion embedding dimensionality mismatch");
  }
  if (opinion.values.norm() == 0.0) {
    throw std::invalid_argument("degenerate zero opinion embedding");
  }
  PolarityPrediction out;
  for (int i = 0; i < 3; ++i) {
    out.similarities[static_cast<std::size_t>(i)] =
        cosine(opinion.values, labels.vectors[static_cast<std::size_t>(i)].values);
  }
  // strict > keeps the first (positive > negative > neutral) on exact ties
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (out.similarities[static_cast<std::size_t>(i)] >
        out.similarities[static_cast<std::size_t>(best)]) {
      best = i;
    }
  }
  if (neutral_margin > 0.0) {
    double runner_up = -2.0;
    for (int i = 0; i < 3; ++i) {
      if (i != best) {
        runner_up =
            std::max(runner_up, out.similarities[static_cast<std::size_t>(i)]);
      }
    }
    if (out.similarities[static_cast<std::size_t>(best)] - runner_up <
        neutral_margin) {
      best = 2;
    }
  }
  out.label = static_cast<Polarity>(best);
  return out;
}

PolarityPrediction classify_instance(const OpinionPrediction& prediction,
                                     const RawSentence& sentence,
                                     const ModelBackend& backend,
                                     const PolarityLabelSet& labels,
                                     double neutral_margin) {
  std::vector<int> indices = prediction.phrase;
  if (prediction.fallback == Fallback::sentence_fallback || indices.empty()) {
    const TokenAlignment a = backend.tokenize_with_alignment(sentence.text);
    indices.resize(a.words.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      indices[i] = static_cast<int>(i);
    }
  }
  const EmbeddingVector h = backend.embed_span(sentence.text, indices);
  return assign_polarity(h, labels, neutral_margin);
}

}  // namespace absa

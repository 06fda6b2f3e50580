#include "absa/polarity.hpp"

#include <cmath>

#include "doctest.h"

#include "absa/mock_backend.hpp"
#include "absa/rng.hpp"

using namespace absa;

namespace {

EmbeddingVector vec(std::initializer_list<double> values) {
  EmbeddingVector v;
  v.values = Eigen::VectorXd(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v.values(i++) = x;
  return v;
}

PolarityLabelSet basis_labels() {
  PolarityLabelSet labels;
  labels.vectors[0] = vec({1, 0, 0});
  labels.vectors[1] = vec({0, 1, 0});
  labels.vectors[2] = vec({0, 0, 1});
  return labels;
}

}  // namespace

TEST_CASE("closed-form cosines against basis label vectors") {
  const PolarityLabelSet labels = basis_labels();
  const PolarityPrediction p = assign_polarity(vec({0.9, 0.1, 0.0}), labels);
  CHECK(p.label == Polarity::positive);
  const double norm = std::sqrt(0.9 * 0.9 + 0.1 * 0.1);
  CHECK(std::abs(p.similarities[0] - 0.9 / norm) < 1e-12);
  CHECK(std::abs(p.similarities[1] - 0.1 / norm) < 1e-12);
  CHECK(std::abs(p.similarities[2] - 0.0) < 1e-12);
}

TEST_CASE("cosine is scale invariant") {
  const PolarityLabelSet labels = basis_labels();
  const PolarityPrediction a = assign_polarity(vec({0.9, 0.1, 0.0}), labels);
  const PolarityPrediction b = assign_polarity(vec({9.0, 1.0, 0.0}), labels);
  CHECK(a.label == b.label);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(a.similarities[static_cast<std::size_t>(i)] -
                   b.similarities[static_cast<std::size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("exact ties break positive > negative > neutral") {
  const PolarityLabelSet labels = basis_labels();
  CHECK(assign_polarity(vec({0.5, 0.5, 0.0}), labels).label ==
        Polarity::positive);
  CHECK(assign_polarity(vec({0.0, 0.5, 0.5}), labels).label ==
        Polarity::negative);
  CHECK(assign_polarity(vec({0.5, 0.5, 0.5}), labels).label ==
        Polarity::positive);
}

TEST_CASE("label permutation moves similarities and the winner with it") {
  SplitMix64 rng(5);
  PolarityLabelSet labels;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd v(8);
    for (int d = 0; d < 8; ++d) v(d) = rng.uniform(-1, 1);
    labels.vectors[static_cast<std::size_t>(i)].values = v;
  }
  Eigen::VectorXd h(8);
  for (int d = 0; d < 8; ++d) h(d) = rng.uniform(-1, 1);
  EmbeddingVector opinion;
  opinion.values = h;

  const PolarityPrediction base = assign_polarity(opinion, labels);

  PolarityLabelSet swapped = labels;
  std::swap(swapped.vectors[0], swapped.vectors[1]);
  const PolarityPrediction perm = assign_polarity(opinion, swapped);
  CHECK(perm.similarities[0] == base.similarities[1]);
  CHECK(perm.similarities[1] == base.similarities[0]);
  CHECK(perm.similarities[2] == base.similarities[2]);
  // the winning vector keeps winning under its new name
  const auto winner_sim = base.similarities[static_cast<std::size_t>(
      static_cast<int>(base.label))];
  const auto perm_sim = perm.similarities[static_cast<std::size_t>(
      static_cast<int>(perm.label))];
  CHECK(winner_sim == perm_sim);
}

TEST_CASE("degenerate inputs are rejected") {
  const PolarityLabelSet labels = basis_labels();
  CHECK_THROWS_AS(assign_polarity(vec({0, 0, 0}), labels),
                  std::invalid_argument);
  CHECK_THROWS_AS(assign_polarity(vec({1, 0}), labels), std::invalid_argument);

  PolarityLabelSet zero = labels;
  zero.vectors[1] = vec({0, 0, 0});
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}

TEST_CASE("margin threshold demotes narrow wins to neutral") {
  const PolarityLabelSet labels = basis_labels();
  const EmbeddingVector h = vec({0.51, 0.49, 0.0});
  CHECK(assign_polarity(h, labels).label == Polarity::positive);
  CHECK(assign_polarity(h, labels, 0.2).label == Polarity::neutral);
  // a decisive win survives the margin
  CHECK(assign_polarity(vec({0.9, 0.1, 0.0}), labels, 0.2).label ==
        Polarity::positive);
}

TEST_CASE("classify_instance embeds the opinion phrase in context") {
  MockBackend mock;
  // pin the label words and the opinion word; "great" sits on the positive
  // direction
  Eigen::VectorXd pos = Eigen::VectorXd::Zero(32);
  pos(0) = 1.0;
  Eigen::VectorXd neg = Eigen::VectorXd::Zero(32);
  neg(1) = 1.0;
  Eigen::VectorXd neu = Eigen::VectorXd::Zero(32);
  neu(2) = 1.0;
  Eigen::VectorXd great = Eigen::VectorXd::Zero(32);
  great(0) = 0.9;
  great(3) = 0.1;
  mock.rig_embedding("positive", pos);
  mock.rig_embedding("negative", neg);
  mock.rig_embedding("neutral", neu);
  mock.rig_embedding("great", great);

  const PolarityLabelSet labels = PolarityLabelSet::from_backend(mock);
  const RawSentence sentence{"s1", "The fajitas are great", Domain::restaurant,
                             Split::test};
  OpinionPrediction opinion;
  opinion.phrase = {3};
  opinion.head = 3;
  opinion.text = "great";
  opinion.fallback = Fallback::none;

  const PolarityPrediction p = classify_instance(opinion, sentence, mock, labels);
  CHECK(p.label == Polarity::positive);
  CHECK(p.similarities[0] > p.similarities[1]);

  SUBCASE("repeated calls agree") {
    const PolarityPrediction q =
        classify_instance(opinion, sentence, mock, labels);
    CHECK(q.label == p.label);
    CHECK(q.similarities == p.similarities);
  }
}

TEST_CASE("sentence fallback embeds every word") {
  MockBackend mock;
  const PolarityLabelSet labels = PolarityLabelSet::from_backend(mock);
  const RawSentence sentence{"s1", "ordinary text here", Domain::other,
                             Split::test};
  OpinionPrediction fallback;
  fallback.fallback = Fallback::sentence_fallback;

  const PolarityPrediction p =
      classify_instance(fallback, sentence, mock, labels);

  const int all[] = {0, 1, 2};
  const PolarityPrediction direct =
      assign_polarity(mock.embed_span(sentence.text, all), labels);
  CHECK(p.label == direct.label);
  CHECK(p.similarities == direct.similarities);
}

TEST_CASE("label set from a backend has consistent dimensionality") {
  MockBackend mock;
  const PolarityLabelSet labels = PolarityLabelSet::from_backend(mock);
  CHECK_NOTHROW(labels.validate());
  CHECK(labels.vectors[0].values.size() == mock.hidden_size());
  // bare-word labels differ pairwise
  CHECK(cosine(labels.vectors[0].values, labels.vectors[1].values) < 1.0);
  CHECK(cosine(labels.vectors[1].values, labels.vectors[2].values) < 1.0);
}

TEST_CASE("templated label embeddings differ from bare words") {
  MockBackend mock;
  const PolarityLabelSet bare = PolarityLabelSet::from_backend(mock);
  const PolarityLabelSet templated =
      PolarityLabelSet::from_backend(mock, "it was {}");
  CHECK(bare.vectors[0].values != templated.vectors[0].values);
  CHECK_THROWS_AS(PolarityLabelSet::from_backend(mock, "no placeholder"),
                  std::invalid_argument);
}

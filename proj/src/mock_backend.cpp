#include "absa/mock_backend.hpp"

#include <stdexcept>

#include "absa/rng.hpp"

namespace absa {

namespace {

constexpr std::uint64_t kAttentionStream = 0xa77e;
constexpr std::uint64_t kEmbeddingStream = 0xe4bd;

}  // namespace

TokenAlignment MockBackend::tokenize_with_alignment(
    std::string_view text) const {
  if (text.empty()) throw std::invalid_argument("empty text");
  TokenAlignment a;
  a.words = tokenize_words(text);
  if (a.words.empty()) throw std::invalid_argument("text has no tokens");

  int next = 1;  // subtoken 0 is the leading special
  for (const Word& w : a.words) {
    const std::string lower = to_lower(w.text);
    int count;
    if (auto it = rigged_counts_.find(lower); it != rigged_counts_.end()) {
      count = it->second;
    } else {
      count = 1 + static_cast<int>(mix64(cfg_.seed, fnv1a64(lower)) % 3);
    }
    a.subtoken_spans.emplace_back(next, next + count);
    next += count;
  }
  a.special_token_indices = {0, next};
  a.n_subtokens = next + 1;
  if (a.n_subtokens > cfg_.max_subtokens) {
    throw std::invalid_argument(
        "input of " + std::to_string(a.n_subtokens) +
        " subtokens exceeds the backend limit of " +
        std::to_string(cfg_.max_subtokens) + " (no truncation applied)");
  }
  return a;
}

AttentionView MockBackend::attention_maps(std::string_view text,
                                          std::span<const int> layers) const {
  const TokenAlignment alignment = tokenize_with_alignment(text);
  const int S = alignment.n_subtokens;
  AttentionView view;
  view.layers.assign(layers.begin(), layers.end());
  view.n_heads = cfg_.n_heads;
  view.d_k = cfg_.d_k;
  view.n_subtokens = S;

  const std::uint64_t text_hash = fnv1a64(std::string(text));
  const auto rig = rigged_targets_.find(std::string(text));

  for (int layer : layers) {
    if (layer < 0 || layer >= cfg_.n_layers) {
      throw std::invalid_argument("layer " + std::to_string(layer) +
                                  " out of range for a " +
                                  std::to_string(cfg_.n_layers) +
                                  "-layer backend");
    }
    for (int head = 0; head < cfg_.n_heads; ++head) {
      SplitMix64 rng(mix64(mix64(cfg_.seed, kAttentionStream),
                           mix64(text_hash, static_cast<std::uint64_t>(
                                                layer * 1024 + head))));
      Eigen::MatrixXd m(S, S);
      for (int r = 0; r < S; ++r) {
        for (int c = 0; c < S; ++c) m(r, c) = rng.uniform() + 1e-6;
        m.row(r) /= m.row(r).sum();
      }
      if (rig != rigged_targets_.end()) {
        const auto [word_index, mass] = rig->second;
        const auto [begin, end] =
            alignment.subtoken_spans[static_cast<std::size_t>(word_index)];
        const double per_col = mass / static_cast<double>(end - begin);
        for (int r = 0; r < S; ++r) {
          m.row(r) *= (1.0 - mass);
          for (int c = begin; c < end; ++c) m(r, c) += per_col;
        }
      }
      if (corrupt_factor_) m.row(0) *= *corrupt_factor_;
      view.matrices.push_back(std::move(m));
    }
  }
  return view;
}

Eigen::VectorXd MockBackend::subtoken_vector(std::uint64_t text_hash,
                                             const std::string& word_lower,
                                             int subtoken_index) const {
  if (auto it = rigged_embeddings_.find(word_lower);
      it != rigged_embeddings_.end()) {
    return it->second;
  }
  SplitMix64 rng(mix64(mix64(cfg_.seed, kEmbeddingStream),
                       mix64(text_hash,
                             static_cast<std::uint64_t>(subtoken_index))));
  Eigen::VectorXd v(cfg_.hidden);
  for (int i = 0; i < cfg_.hidden; ++i) v(i) = rng.uniform(-1.0, 1.0);
  v.normalize();
  return v;
}

EmbeddingVector MockBackend::embed_span(
    std::string_view text, std::span<const int> word_indices) const {
  if (word_indices.empty()) {
    throw std::invalid_argument("embed_span: empty word index set");
  }
  const TokenAlignment alignment = tokenize_with_alignment(text);
  const std::uint64_t text_hash = fnv1a64(std::string(text));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cfg_.hidden);
  for (int w : word_indices) {
    if (w < 0 || w >= static_cast<int>(alignment.words.size())) {
      throw std::invalid_argument("embed_span: word index " + std::to_string(w) +
                                  " out of range");
    }
    const std::string lower =
        to_lower(alignment.words[static_cast<std::size_t>(w)].text);
    const auto [begin, end] =
        alignment.subtoken_spans[static_cast<std::size_t>(w)];
    Eigen::VectorXd word_mean = Eigen::VectorXd::Zero(cfg_.hidden);
    for (int t = begin; t < end; ++t) {
      word_mean += subtoken_vector(text_hash, lower, t);
    }
    word_mean /= static_cast<double>(end - begin);
    acc += word_mean;
  }
  acc /= static_cast<double>(word_indices.size());
  return EmbeddingVector{acc, cfg_.n_layers - 1,
                         EmbeddingVector::Pooling::mean_subtokens};
}

EmbeddingVector MockBackend::embed_label(Polarity label) const {
  std::lock_guard<std::mutex> lock(label_mutex_);
  if (auto it = label_cache_.find(label); it != label_cache_.end()) {
    return it->second;
  }
  const std::string word(to_string(label));
  const int indices[] = {0};
  EmbeddingVector v = embed_span(word, indices);
  label_cache_.emplace(label, v);
  return v;
}

void MockBackend::rig_subtoken_count(const std::string& word, int count) {
  if (count <= 0) throw std::invalid_argument("subtoken count must be positive");
  rigged_counts_[to_lower(word)] = count;
}

void MockBackend::rig_attention_target(const std::string& text, int word_index,
                                       double mass) {
  if (!(mass > 0.0) || !(mass < 1.0)) {
    throw std::invalid_argument("rig mass must be in (0,1)");
  }
  rigged_targets_[text] = {word_index, mass};
}

void MockBackend::rig_embedding(const std::string& word, Eigen::VectorXd vec) {
  if (vec.size() != cfg_.hidden) {
    throw std::invalid_argument("rigged embedding has wrong dimensionality");
  }
  vec.normalize();
  rigged_embeddings_[to_lower(word)] = std::move(vec);
}

}  // namespace absa

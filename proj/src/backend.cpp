#include "absa/backend.hpp"

#include <cmath>
#include <stdexcept>

#include "absa/errors.hpp"
#include "absa/mock_backend.hpp"
#include "absa/tiny_backend.hpp"

namespace absa {

std::vector<int> TokenAlignment::words_for_span(int from, int to) const {
  return words_overlapping(words, from, to);
}

void TokenAlignment::validate() const {
  if (words.size() != subtoken_spans.size()) {
    throw std::invalid_argument("alignment: words/spans size mismatch");
  }
  std::vector<int> owner(static_cast<std::size_t>(n_subtokens), -2);
  for (int s : special_token_indices) {
    if (s < 0 || s >= n_subtokens || owner[s] != -2) {
      throw std::invalid_argument("alignment: bad special token index");
    }
    owner[s] = -1;
  }
  int prev_end = -1;
  for (std::size_t w = 0; w < subtoken_spans.size(); ++w) {
    const auto [begin, end] = subtoken_spans[w];
    if (begin >= end) {
      throw std::invalid_argument("alignment: word " + std::to_string(w) +
                                  " has no subtokens");
    }
    if (begin < prev_end) {
      throw std::invalid_argument("alignment: overlapping or unordered spans");
    }
    prev_end = end;
    for (int t = begin; t < end; ++t) {
      if (t < 0 || t >= n_subtokens || owner[t] != -2) {
        throw std::invalid_argument("alignment: subtoken " + std::to_string(t) +
                                    " not uniquely covered");
      }
      owner[t] = static_cast<int>(w);
    }
  }
  for (int t = 0; t < n_subtokens; ++t) {
    if (owner[t] == -2) {
      throw std::invalid_argument("alignment: subtoken " + std::to_string(t) +
                                  " uncovered");
    }
  }
}

const Eigen::MatrixXd& AttentionView::at(int layer, int head) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] == layer) {
      return matrices[i * static_cast<std::size_t>(n_heads) +
                      static_cast<std::size_t>(head)];
    }
  }
  throw std::invalid_argument("attention view has no layer " +
                              std::to_string(layer));
}

void AttentionView::validate(double tol) const {
  if (matrices.size() != layers.size() * static_cast<std::size_t>(n_heads)) {
    throw std::invalid_argument("attention view: matrix count mismatch");
  }
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const Eigen::MatrixXd& m = matrices[i];
    if (m.rows() != n_subtokens || m.cols() != n_subtokens) {
      throw std::invalid_argument("attention view: matrix dimension " +
                                  std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) +
                                  " does not match subtoken count " +
                                  std::to_string(n_subtokens));
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double sum = m.row(r).sum();
      if (std::abs(sum - 1.0) >= tol) {
        throw std::invalid_argument(
            "attention row-stochasticity violated: layer " +
            std::to_string(layers[i / static_cast<std::size_t>(n_heads)]) +
            " head " + std::to_string(i % static_cast<std::size_t>(n_heads)) +
            " row " + std::to_string(r) + " sums to " + std::to_string(sum));
      }
    }
  }
}

void AdaptationConfig::validate() const {
  if (batch_size <= 0 || grad_accum_steps <= 0 || epochs <= 0 ||
      !(learning_rate > 0.0)) {
    throw std::invalid_argument("adaptation config: all values must be positive");
  }
  if (!(mask_probability > 0.0) || !(mask_probability < 1.0)) {
    throw std::invalid_argument("adaptation config: mask_probability in (0,1)");
  }
}

std::unique_ptr<ModelBackend> ModelBackend::domain_adapt(
    const TextCorpus&, const AdaptationConfig&,
    const std::filesystem::path&) const {
  throw CapabilityError("backend \"" + name() +
                        "\" does not support masked-token adaptation");
}

std::unique_ptr<TextClassifier> ModelBackend::train_classifier(
    std::span<const std::string>, std::span<const Polarity>,
    const AdaptationConfig&) const {
  throw CapabilityError("backend \"" + name() +
                        "\" does not support classification fine-tuning");
}

std::unique_ptr<ModelBackend> create_backend(const std::string& id,
                                             const BackendParams& params) {
  if (id == "mock") {
    MockBackend::Config cfg;
    cfg.seed = params.seed;
    if (params.layers > 0) cfg.n_layers = params.layers;
    if (params.heads > 0) cfg.n_heads = params.heads;
    if (params.hidden > 0) cfg.hidden = params.hidden;
    return std::make_unique<MockBackend>(cfg);
  }
  if (id == "tiny") {
    if (!params.model_path.empty()) {
      return TinyBackend::load(params.model_path);
    }
    TinyBackend::Config cfg;
    cfg.seed = params.seed;
    if (params.layers > 0) cfg.n_layers = params.layers;
    if (params.heads > 0) cfg.n_heads = params.heads;
    if (params.hidden > 0) cfg.dim = params.hidden;
    return std::make_unique<TinyBackend>(cfg);
  }
  throw std::invalid_argument("unknown backend \"" + id +
                              "\" (available: mock, tiny)");
}

std::vector<std::string> backend_names() { return {"mock", "tiny"}; }

}  // namespace absa

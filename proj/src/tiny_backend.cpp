#include "absa/tiny_backend.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "absa/errors.hpp"
#include "absa/rng.hpp"

namespace absa {

using json = nlohmann::json;

namespace {

constexpr int kClsId = 0;
constexpr int kSepId = 1;
constexpr int kReservedIds = 3;  // cls, sep, mask
constexpr int kChunkBytes = 4;
constexpr char kMagic[] = "ABSATINY1\n";

void softmax_rows_inplace(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

void normalize_rows_inplace(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (n > 0.0) m.row(r) /= n;
  }
}

Eigen::MatrixXd seeded_matrix(int rows, int cols, std::uint64_t seed,
                              double scale) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
}

void read_matrix(std::ifstream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(r, c) = v;
    }
  }
}

/// Adam over one dense matrix.
class AdamState {
 public:
  AdamState(Eigen::Index rows, Eigen::Index cols, double lr)
      : lr_(lr),
        m_(Eigen::MatrixXd::Zero(rows, cols)),
        v_(Eigen::MatrixXd::Zero(rows, cols)) {}

  void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
    const double bias1 = 1.0 - std::pow(beta1_, t_);
    const double bias2 = 1.0 - std::pow(beta2_, t_);
    param.array() -= lr_ * (m_.array() / bias1) /
                     ((v_.array() / bias2).sqrt() + eps_);
  }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  Eigen::MatrixXd m_, v_;
};

class LinearClassifier : public TextClassifier {
 public:
  LinearClassifier(const TinyBackend& backend, Eigen::MatrixXd weights,
                   Eigen::Vector3d bias)
      : backend_(backend), weights_(std::move(weights)), bias_(bias) {}

  Polarity predict(std::string_view text) const override {
    const TokenAlignment a = backend_.tokenize_with_alignment(text);
    std::vector<int> all(a.words.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const Eigen::VectorXd x = backend_.embed_span(text, all).values;
    const Eigen::Vector3d logits = weights_ * x + bias_;
    int best = 0;
    logits.maxCoeff(&best);
    return static_cast<Polarity>(best);
  }

 private:
  const TinyBackend& backend_;
  Eigen::MatrixXd weights_;  // 3 x dim
  Eigen::Vector3d bias_;
};

}  // namespace

TinyBackend::TinyBackend(const Config& config) : cfg_(config) {
  embedding_ = seeded_matrix(cfg_.buckets, cfg_.dim,
                             mix64(cfg_.seed, 0xe0b), 0.5);
  normalize_rows_inplace(embedding_);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const std::uint64_t key = static_cast<std::uint64_t>(l * 256 + h);
      w_query_.push_back(seeded_matrix(
          cfg_.dim, cfg_.d_k, mix64(cfg_.seed, mix64(0x9a, key)),
          1.0 / std::sqrt(cfg_.dim)));
      w_key_.push_back(seeded_matrix(
          cfg_.dim, cfg_.d_k, mix64(cfg_.seed, mix64(0x5b, key)),
          1.0 / std::sqrt(cfg_.dim)));
    }
  }
  positional_ = seeded_matrix(cfg_.max_subtokens, cfg_.dim,
                              mix64(cfg_.seed, 0x705), 0.1);
}

TokenAlignment TinyBackend::tokenize_with_alignment(
    std::string_view text) const {
  if (text.empty()) throw std::invalid_argument("empty text");
  TokenAlignment a;
  a.words = tokenize_words(text);
  if (a.words.empty()) throw std::invalid_argument("text has no tokens");
  int next = 1;
  for (const Word& w : a.words) {
    const int chunks =
        (static_cast<int>(w.text.size()) + kChunkBytes - 1) / kChunkBytes;
    a.subtoken_spans.emplace_back(next, next + chunks);
    next += chunks;
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

std::vector<int> TinyBackend::subtoken_ids(
    const TokenAlignment& alignment) const {
  std::vector<int> ids(static_cast<std::size_t>(alignment.n_subtokens), kClsId);
  ids.back() = kSepId;
  for (std::size_t w = 0; w < alignment.words.size(); ++w) {
    const std::string lower = to_lower(alignment.words[w].text);
    const auto [begin, end] = alignment.subtoken_spans[w];
    for (int t = begin; t < end; ++t) {
      const std::size_t offset =
          static_cast<std::size_t>(t - begin) * kChunkBytes;
      const std::string chunk = lower.substr(
          offset, std::min<std::size_t>(kChunkBytes, lower.size() - offset));
      ids[static_cast<std::size_t>(t)] =
          kReservedIds +
          static_cast<int>(fnv1a64(chunk) %
                           static_cast<std::uint64_t>(cfg_.buckets - kReservedIds));
    }
  }
  return ids;
}

TinyBackend::Forward TinyBackend::run_forward(std::string_view text,
                                              int up_to_layer) const {
  const TokenAlignment alignment = tokenize_with_alignment(text);
  const std::vector<int> ids = subtoken_ids(alignment);
  const int S = alignment.n_subtokens;

  Forward f;
  Eigen::MatrixXd h(S, cfg_.dim);
  for (int t = 0; t < S; ++t) {
    h.row(t) = embedding_.row(ids[static_cast<std::size_t>(t)]) +
               positional_.row(t);
  }
  normalize_rows_inplace(h);
  f.hidden.push_back(h);

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg_.d_k));
  for (int l = 0; l <= up_to_layer && l < cfg_.n_layers; ++l) {
    Eigen::MatrixXd head_mean = Eigen::MatrixXd::Zero(S, S);
    for (int hd = 0; hd < cfg_.n_heads; ++hd) {
      const std::size_t idx =
          static_cast<std::size_t>(l) * static_cast<std::size_t>(cfg_.n_heads) +
          static_cast<std::size_t>(hd);
      const Eigen::MatrixXd q = f.hidden.back() * w_query_[idx];
      const Eigen::MatrixXd k = f.hidden.back() * w_key_[idx];
      Eigen::MatrixXd scores = q * k.transpose() * inv_sqrt_dk;
      softmax_rows_inplace(scores);
      head_mean += scores;
      f.attention.push_back(std::move(scores));
    }
    head_mean /= static_cast<double>(cfg_.n_heads);
    Eigen::MatrixXd next = f.hidden.back() + head_mean * f.hidden.back();
    normalize_rows_inplace(next);
    f.hidden.push_back(std::move(next));
  }
  return f;
}

AttentionView TinyBackend::attention_maps(std::string_view text,
                                          std::span<const int> layers) const {
  int max_layer = 0;
  for (int l : layers) {
    if (l < 0 || l >= cfg_.n_layers) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  " out of range for a " +
                                  std::to_string(cfg_.n_layers) +
                                  "-layer backend");
    }
    max_layer = std::max(max_layer, l);
  }
  const Forward f = run_forward(text, max_layer);
  AttentionView view;
  view.layers.assign(layers.begin(), layers.end());
  view.n_heads = cfg_.n_heads;
  view.d_k = cfg_.d_k;
  view.n_subtokens = static_cast<int>(f.hidden.front().rows());
  for (int l : layers) {
    for (int hd = 0; hd < cfg_.n_heads; ++hd) {
      view.matrices.push_back(
          f.attention[static_cast<std::size_t>(l) *
                          static_cast<std::size_t>(cfg_.n_heads) +
                      static_cast<std::size_t>(hd)]);
    }
  }
  return view;
}

EmbeddingVector TinyBackend::embed_span(
    std::string_view text, std::span<const int> word_indices) const {
  if (word_indices.empty()) {
    throw std::invalid_argument("embed_span: empty word index set");
  }
  const TokenAlignment alignment = tokenize_with_alignment(text);
  const Forward f = run_forward(text, cfg_.n_layers - 1);
  const Eigen::MatrixXd& final_hidden = f.hidden.back();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cfg_.dim);
  for (int w : word_indices) {
    if (w < 0 || w >= static_cast<int>(alignment.words.size())) {
      throw std::invalid_argument("embed_span: word index " + std::to_string(w) +
                                  " out of range");
    }
    const auto [begin, end] =
        alignment.subtoken_spans[static_cast<std::size_t>(w)];
    Eigen::VectorXd word_mean = Eigen::VectorXd::Zero(cfg_.dim);
    for (int t = begin; t < end; ++t) word_mean += final_hidden.row(t);
    word_mean /= static_cast<double>(end - begin);
    acc += word_mean;
  }
  acc /= static_cast<double>(word_indices.size());
  return EmbeddingVector{acc, cfg_.n_layers - 1,
                         EmbeddingVector::Pooling::mean_subtokens};
}

EmbeddingVector TinyBackend::embed_label(Polarity label) const {
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

std::unique_ptr<ModelBackend> TinyBackend::domain_adapt(
    const TextCorpus& corpus, const AdaptationConfig& config,
    const std::filesystem::path& run_dir) const {
  config.validate();
  if (corpus.documents.empty()) {
    throw std::invalid_argument("empty adaptation corpus");
  }
  std::filesystem::create_directories(run_dir);
  std::ofstream loss_log(run_dir / "loss.log");
  if (!loss_log) throw IoError("cannot write " + (run_dir / "loss.log").string());

  auto adapted = std::make_unique<TinyBackend>(*this);
  Eigen::MatrixXd& emb = adapted->embedding_;
  AdamState adam(emb.rows(), emb.cols(), config.learning_rate);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(emb.rows(), emb.cols());

  // Pre-tokenize once; ids are stable under training.
  std::vector<std::vector<int>> docs;
  for (const std::string& doc : corpus.documents) {
    TokenAlignment a;
    try {
      a = tokenize_with_alignment(doc);
    } catch (const std::invalid_argument&) {
      continue;  // over-long or empty documents are skipped
    }
    std::vector<int> ids = subtoken_ids(a);
    // content ids only; specials carry no masking signal
    std::vector<int> content(ids.begin() + 1, ids.end() - 1);
    if (content.size() >= 2) docs.push_back(std::move(content));
  }
  if (docs.empty()) {
    throw std::invalid_argument("adaptation corpus has no usable documents");
  }

  const int step_every = config.batch_size * config.grad_accum_steps;

  // Chooses masked positions for one document; guarantees at least one
  // masked and one unmasked position so the example is well defined.
  auto choose_masks = [&](SplitMix64& rng, std::size_t n) {
    std::vector<bool> masked(n, false);
    int n_masked = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < config.mask_probability) {
        masked[i] = true;
        ++n_masked;
      }
    }
    if (n_masked == 0) {
      masked[rng.below(n)] = true;
      ++n_masked;
    }
    if (n_masked == static_cast<int>(n)) {
      masked[rng.below(n)] = false;
    }
    return masked;
  };

  // Logged losses come from a fixed evaluation masking, so entries before
  // and after training are comparable like for like.
  auto eval_loss = [&]() {
    SplitMix64 rng(mix64(config.seed, 0xe7a1));
    double loss_sum = 0.0;
    long loss_count = 0;
    for (const std::vector<int>& ids : docs) {
      const std::size_t n = ids.size();
      const std::vector<bool> masked = choose_masks(rng, n);
      Eigen::VectorXd context = Eigen::VectorXd::Zero(cfg_.dim);
      int n_context = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!masked[i]) {
          context += emb.row(ids[i]);
          ++n_context;
        }
      }
      context /= static_cast<double>(n_context);
      Eigen::VectorXd logits = emb * context;
      const double mx = logits.maxCoeff();
      Eigen::VectorXd probs = (logits.array() - mx).exp();
      probs /= probs.sum();
      for (std::size_t i = 0; i < n; ++i) {
        if (!masked[i]) continue;
        loss_sum += -std::log(std::max(probs(ids[i]), 1e-300));
        ++loss_count;
      }
    }
    return loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  };

  loss_log << "epoch 0 loss " << eval_loss() << '\n';

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    SplitMix64 mask_rng(mix64(config.seed, static_cast<std::uint64_t>(epoch)));
    int accumulated = 0;
    for (const std::vector<int>& ids : docs) {
      const std::size_t n = ids.size();
      const std::vector<bool> masked = choose_masks(mask_rng, n);

      Eigen::VectorXd context = Eigen::VectorXd::Zero(cfg_.dim);
      int n_context = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!masked[i]) {
          context += emb.row(ids[i]);
          ++n_context;
        }
      }
      context /= static_cast<double>(n_context);

      Eigen::VectorXd logits = emb * context;
      const double mx = logits.maxCoeff();
      Eigen::VectorXd probs = (logits.array() - mx).exp();
      probs /= probs.sum();

      Eigen::VectorXd context_grad = Eigen::VectorXd::Zero(cfg_.dim);
      for (std::size_t i = 0; i < n; ++i) {
        if (!masked[i]) continue;
        Eigen::VectorXd delta = probs;
        delta(ids[i]) -= 1.0;
        grad += delta * context.transpose();
        context_grad += emb.transpose() * delta;
      }
      context_grad /= static_cast<double>(n_context);
      for (std::size_t i = 0; i < n; ++i) {
        if (!masked[i]) grad.row(ids[i]) += context_grad.transpose();
      }
      if (++accumulated >= step_every) {
        grad /= static_cast<double>(accumulated);
        adam.step(emb, grad);
        grad.setZero();
        accumulated = 0;
      }
    }
    if (accumulated > 0) {
      grad /= static_cast<double>(accumulated);
      adam.step(emb, grad);
      grad.setZero();
    }
    loss_log << "epoch " << epoch << " loss " << eval_loss() << '\n';
  }
  loss_log.close();
  adapted->label_cache_.clear();

  adapted->save(run_dir / "weights.bin");
  json cfg_json{{"batch_size", config.batch_size},
                {"grad_accum_steps", config.grad_accum_steps},
                {"learning_rate", config.learning_rate},
                {"epochs", config.epochs},
                {"mask_probability", config.mask_probability},
                {"seed", config.seed},
                {"documents", corpus.documents.size()}};
  std::ofstream cfg_out(run_dir / "config.json");
  cfg_out << cfg_json.dump(2) << '\n';

  return adapted;
}

std::unique_ptr<TextClassifier> TinyBackend::train_classifier(
    std::span<const std::string> texts, std::span<const Polarity> labels,
    const AdaptationConfig& config) const {
  config.validate();
  if (texts.empty() || texts.size() != labels.size()) {
    throw std::invalid_argument("classifier training needs matching texts/labels");
  }
  std::vector<Eigen::VectorXd> features;
  features.reserve(texts.size());
  for (const std::string& t : texts) {
    const TokenAlignment a = tokenize_with_alignment(t);
    std::vector<int> all(a.words.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    features.push_back(embed_span(t, all).values);
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, cfg_.dim);
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  // classifier head converges fine with a larger fixed rate than the
  // adaptation default
  const double lr = std::max(config.learning_rate, 0.05);
  AdamState adam_w(3, cfg_.dim, lr);
  AdamState adam_b(3, 1, lr);

  for (int epoch = 0; epoch < std::max(config.epochs, 20); ++epoch) {
    Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(3, cfg_.dim);
    Eigen::Vector3d gb = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < features.size(); ++i) {
      const Eigen::Vector3d logits = w * features[i] + b;
      Eigen::Vector3d probs =
          (logits.array() - logits.maxCoeff()).exp();
      probs /= probs.sum();
      Eigen::Vector3d delta = probs;
      delta(static_cast<int>(labels[i])) -= 1.0;
      gw += delta * features[i].transpose();
      gb += delta;
    }
    gw /= static_cast<double>(features.size());
    gb /= static_cast<double>(features.size());
    adam_w.step(w, gw);
    Eigen::MatrixXd b_mat = b;
    adam_b.step(b_mat, gb);
    b = b_mat;
  }
  return std::make_unique<LinearClassifier>(*this, std::move(w), b);
}

void TinyBackend::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  json header{{"dim", cfg_.dim},          {"d_k", cfg_.d_k},
              {"layers", cfg_.n_layers},  {"heads", cfg_.n_heads},
              {"buckets", cfg_.buckets},  {"max_subtokens", cfg_.max_subtokens},
              {"seed", cfg_.seed}};
  const std::string header_line = header.dump() + "\n";
  out.write(header_line.data(),
            static_cast<std::streamsize>(header_line.size()));
  write_matrix(out, embedding_);
  for (const Eigen::MatrixXd& m : w_query_) write_matrix(out, m);
  for (const Eigen::MatrixXd& m : w_key_) write_matrix(out, m);
  write_matrix(out, positional_);
}

std::unique_ptr<TinyBackend> TinyBackend::load(
    const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= "weights.bin";
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (std::string_view(magic, sizeof(magic)) != std::string_view(kMagic).substr(0, sizeof(magic))) {
    throw ParseError("not a tiny-backend weights file: " + file.string());
  }
  std::string header_line;
  std::getline(in, header_line);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw ParseError("bad weights header in " + file.string() + ": " + e.what());
  }
  Config cfg;
  cfg.dim = header.at("dim").get<int>();
  cfg.d_k = header.at("d_k").get<int>();
  cfg.n_layers = header.at("layers").get<int>();
  cfg.n_heads = header.at("heads").get<int>();
  cfg.buckets = header.at("buckets").get<int>();
  cfg.max_subtokens = header.at("max_subtokens").get<int>();
  cfg.seed = header.at("seed").get<std::uint64_t>();

  auto backend = std::make_unique<TinyBackend>(cfg);
  read_matrix(in, backend->embedding_);
  for (Eigen::MatrixXd& m : backend->w_query_) read_matrix(in, m);
  for (Eigen::MatrixXd& m : backend->w_key_) read_matrix(in, m);
  read_matrix(in, backend->positional_);
  if (!in) throw ParseError("truncated weights file: " + file.string());
  return backend;
}

}  // namespace absa

#include "absa/attention.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace absa {

std::string_view to_string(Fallback f) {
  switch (f) {
    case Fallback::none: return "none";
    case Fallback::pos_fallback: return "pos_fallback";
    case Fallback::sentence_fallback: return "sentence_fallback";
  }
  return "none";
}

Fallback fallback_from_string(std::string_view s) {
  if (s == "none") return Fallback::none;
  if (s == "pos_fallback") return Fallback::pos_fallback;
  if (s == "sentence_fallback") return Fallback::sentence_fallback;
  throw std::invalid_argument("unknown fallback: " + std::string(s));
}

AspectQueryScores aspect_scores(const AttentionView& attention,
                                const TokenAlignment& alignment,
                                const std::set<int>& aspect_words) {
  if (aspect_words.empty()) {
    throw std::invalid_argument("aspect_scores: empty aspect word set");
  }
  attention.validate();
  alignment.validate();
  if (attention.n_subtokens != alignment.n_subtokens) {
    throw std::invalid_argument(
        "aspect_scores: attention and alignment disagree on subtoken count");
  }
  const int n_words = static_cast<int>(alignment.words.size());

  std::vector<int> aspect_rows;
  for (int w : aspect_words) {
    if (w < 0 || w >= n_words) {
      throw std::invalid_argument("aspect_scores: aspect word index " +
                                  std::to_string(w) + " out of range");
    }
    const auto [begin, end] =
        alignment.subtoken_spans[static_cast<std::size_t>(w)];
    for (int t = begin; t < end; ++t) aspect_rows.push_back(t);
  }
  if (aspect_rows.empty()) {
    throw std::invalid_argument("aspect_scores: aspect words have no subtokens");
  }

  AspectQueryScores out;
  out.layers_used = attention.layers;

  for (int layer : attention.layers) {
    Eigen::VectorXd layer_scores = Eigen::VectorXd::Zero(n_words);
    for (int head = 0; head < attention.n_heads; ++head) {
      const Eigen::MatrixXd& m = attention.at(layer, head);
      Eigen::RowVectorXd query = Eigen::RowVectorXd::Zero(m.cols());
      for (int r : aspect_rows) query += m.row(r);
      query /= static_cast<double>(aspect_rows.size());
      for (int w = 0; w < n_words; ++w) {
        const auto [begin, end] =
            alignment.subtoken_spans[static_cast<std::size_t>(w)];
        layer_scores(w) += query.segment(begin, end - begin).sum();
      }
    }
    layer_scores /= static_cast<double>(attention.n_heads);
    out.per_layer.push_back(std::move(layer_scores));
  }

  out.scores = Eigen::VectorXd::Zero(n_words);
  for (const Eigen::VectorXd& v : out.per_layer) out.scores += v;
  out.scores /= static_cast<double>(out.per_layer.size());
  return out;
}

namespace {

/// Argmax over the given indices; ties resolve to the lowest index
/// (or highest, per tie). Indices are visited in ascending order.
int argmax_over(const Eigen::VectorXd& scores, const std::vector<int>& indices,
                TieBreak tie) {
  int best = -1;
  for (int i : indices) {
    if (best < 0 || scores(i) > scores(best) ||
        (tie == TieBreak::highest && scores(i) == scores(best))) {
      best = i;
    }
  }
  return best;
}

}  // namespace

OpinionPrediction select_opinion(const AspectQueryScores& scores,
                                 const CandidateSet& candidates,
                                 const SyntaxAnnotation* annotation,
                                 const std::set<int>& excluded,
                                 const SelectOptions& options) {
  OpinionPrediction pred;

  if (!candidates.mask.empty()) {
    const std::vector<int> heads(candidates.mask.begin(),
                                 candidates.mask.end());
    int head = -1;
    if (options.mode == SelectionMode::vote && scores.per_layer.size() > 1) {
      std::map<int, int> votes;
      for (const Eigen::VectorXd& layer : scores.per_layer) {
        ++votes[argmax_over(layer, heads, options.tie)];
      }
      int best_votes = -1;
      for (const auto& [candidate, count] : votes) {  // ascending word index
        if (count > best_votes) {
          head = candidate;
          best_votes = count;
        }
      }
    } else {
      head = argmax_over(scores.scores, heads, options.tie);
    }
    pred.head = head;
    pred.score = scores.scores(head);
    pred.fallback = Fallback::none;
    for (const Candidate& c : candidates.candidates) {
      if (c.head == head) {
        pred.phrase = c.phrase;
        break;
      }
    }
    return pred;
  }

  if (options.pos_fallback && annotation != nullptr) {
    std::vector<int> pos_words;
    for (int w = 0; w < annotation->size(); ++w) {
      const Pos p = annotation->pos[static_cast<std::size_t>(w)];
      if ((p == Pos::ADJ || p == Pos::ADV) && !excluded.count(w)) {
        pos_words.push_back(w);
      }
    }
    if (!pos_words.empty()) {
      const int head = argmax_over(scores.scores, pos_words, options.tie);
      pred.head = head;
      pred.phrase = {head};
      pred.score = scores.scores(head);
      pred.fallback = Fallback::pos_fallback;
      return pred;
    }
  }

  pred.head = -1;
  pred.phrase.clear();
  pred.score = 0.0;
  pred.fallback = Fallback::sentence_fallback;
  return pred;
}

ExtractionTrace extract_opinion_trace(const RawSentence& sentence,
                                      const AspectInstance& aspect,
                                      const ModelBackend& backend,
                                      const Annotator& annotator,
                                      const PatternRegistry& patterns,
                                      const PipelineOptions& options) {
  ExtractionTrace trace;
  trace.annotation = annotator.annotate(sentence);
  const TokenAlignment alignment =
      backend.tokenize_with_alignment(sentence.text);
  if (alignment.words.size() != trace.annotation.words.size()) {
    throw std::invalid_argument(
        "annotator and backend word tokenizations disagree for sentence " +
        sentence.id);
  }

  const std::vector<int> aspect_vec = alignment.words_for_span(
      aspect.aspect_span.from, aspect.aspect_span.to);
  if (aspect_vec.empty()) {
    throw std::invalid_argument("aspect span covers no words in sentence " +
                                sentence.id);
  }
  trace.aspect_words.insert(aspect_vec.begin(), aspect_vec.end());

  const CandidateSet candidates =
      remove_heads(patterns.extract(trace.annotation), trace.aspect_words);

  const AttentionView attention =
      backend.attention_maps(sentence.text, options.layers);
  trace.scores = aspect_scores(attention, alignment, trace.aspect_words);

  trace.prediction = select_opinion(trace.scores, candidates,
                                    &trace.annotation, trace.aspect_words,
                                    options.select);
  trace.prediction.text =
      join_words(trace.annotation.words, trace.prediction.phrase);
  return trace;
}

OpinionPrediction extract_opinion(const RawSentence& sentence,
                                  const AspectInstance& aspect,
                                  const ModelBackend& backend,
                                  const Annotator& annotator,
                                  const PatternRegistry& patterns,
                                  const PipelineOptions& options) {
  return extract_opinion_trace(sentence, aspect, backend, annotator, patterns,
                               options)
      .prediction;
}

}  // namespace absa

#pragma once

#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "absa/backend.hpp"
#include "absa/syntax.hpp"
#include "absa/types.hpp"

namespace absa {

/// Word-level attention received from the aspect's query rows.
/// Aggregation: per (layer, head), mean over the aspect's subtoken rows,
/// sum over each word's subtoken columns; mean over heads within a layer;
/// mean over layers. Special-token columns belong to no word and drop out.
struct AspectQueryScores {
  Eigen::VectorXd scores;                   // pooled over layers, per word
  std::vector<Eigen::VectorXd> per_layer;   // head-mean per requested layer
  std::vector<int> layers_used;

  static constexpr std::string_view kQueryAggregation = "aspect-subtoken-mean";
  static constexpr std::string_view kKeyAggregation = "word-subtoken-sum";
};

enum class Fallback { none, pos_fallback, sentence_fallback };

std::string_view to_string(Fallback f);
Fallback fallback_from_string(std::string_view s);

struct OpinionPrediction {
  std::vector<int> phrase;  // word indices; empty on sentence_fallback
  int head = -1;            // word index; -1 on sentence_fallback
  std::string text;
  double score = 0.0;
  Fallback fallback = Fallback::none;
};

/// How the per-layer head-means combine into the final selection.
/// pool: mean the four layer vectors, one argmax. vote: per-layer argmax
/// over the mask, majority wins (ties to the lowest word index).
enum class SelectionMode { pool, vote };

enum class TieBreak { lowest, highest };

struct SelectOptions {
  SelectionMode mode = SelectionMode::pool;
  TieBreak tie = TieBreak::lowest;
  bool pos_fallback = true;
  bool sentence_fallback = true;
};

struct PipelineOptions {
  std::vector<int> layers{0, 1, 2, 3};
  SelectOptions select;
};

/// Word-level aspect-query scores. Validates the attention view (row
/// stochasticity) and the alignment partition on entry.
AspectQueryScores aspect_scores(const AttentionView& attention,
                                const TokenAlignment& alignment,
                                const std::set<int>& aspect_words);

/// Argmax over candidate heads; ties break per options. When the mask is
/// empty: argmax over ADJ/ADV words outside `excluded` (pos_fallback), and
/// failing that an empty-phrase prediction flagged for sentence-level
/// handling. `annotation` is only consulted on the fallback path.
OpinionPrediction select_opinion(const AspectQueryScores& scores,
                                 const CandidateSet& candidates,
                                 const SyntaxAnnotation* annotation = nullptr,
                                 const std::set<int>& excluded = {},
                                 const SelectOptions& options = {});

/// Full extraction: annotate -> candidates -> attention -> scores ->
/// selection, with the aspect's own words removed from the candidate mask.
OpinionPrediction extract_opinion(const RawSentence& sentence,
                                  const AspectInstance& aspect,
                                  const ModelBackend& backend,
                                  const Annotator& annotator,
                                  const PatternRegistry& patterns,
                                  const PipelineOptions& options = {});

/// extract_opinion plus the score vector, for prediction dumps.
struct ExtractionTrace {
  OpinionPrediction prediction;
  AspectQueryScores scores;
  SyntaxAnnotation annotation;
  std::set<int> aspect_words;
};
ExtractionTrace extract_opinion_trace(const RawSentence& sentence,
                                      const AspectInstance& aspect,
                                      const ModelBackend& backend,
                                      const Annotator& annotator,
                                      const PatternRegistry& patterns,
                                      const PipelineOptions& options = {});

}  // namespace absa

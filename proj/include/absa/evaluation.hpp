#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absa/attention.hpp"
#include "absa/backend.hpp"
#include "absa/polarity.hpp"
#include "absa/syntax.hpp"
#include "absa/types.hpp"

namespace absa {

/// Per-instance outcome across the three tasks. aoospe correctness is
/// derived, so it can never hold without both parts.
struct InstanceResult {
  std::string sentence_id;
  std::string aspect_text;
  int aspect_from = 0;
  OpinionPrediction opinion;
  std::vector<std::string> gold_opinion_texts;
  std::optional<Polarity> predicted_polarity;
  std::array<double, 3> similarities{0.0, 0.0, 0.0};
  std::optional<Polarity> gold_polarity;
  bool aooe_correct = false;
  bool atsc_correct = false;

  bool aooe_eligible() const { return !gold_opinion_texts.empty(); }
  bool atsc_eligible() const { return gold_polarity.has_value(); }
  bool aoospe_eligible() const { return aooe_eligible() && atsc_eligible(); }
  bool aoospe_correct() const { return aooe_correct && atsc_correct; }
};

/// Accuracies per task; a task with no eligible instances is absent.
struct TaskScores {
  std::optional<double> aooe;
  std::optional<double> atsc;
  std::optional<double> aoospe;
  int n_aooe = 0;
  int n_atsc = 0;
  int n_aoospe = 0;
};

/// AOOE: exact case-folded text match against any gold opinion, over
/// instances with at least one gold opinion. ATSC: label match over
/// instances with a gold polarity. AOOSPE: both, over the intersection.
/// Throws std::invalid_argument on an empty result list.
TaskScores score(const std::vector<InstanceResult>& results);

/// Case-folded, whitespace-normalized comparison key for opinion text.
std::string normalize_opinion_text(std::string_view text);

// ---------------------------------------------------------------------------
// Pipeline composition
// ---------------------------------------------------------------------------

struct PipelineComponents {
  const ModelBackend* backend = nullptr;
  const Annotator* annotator = nullptr;
  const PatternRegistry* patterns = nullptr;
  PipelineOptions options;
  double polarity_margin = 0.0;
  std::string label_template;
};

/// When trace_out is given it receives the word score vector (for
/// --dump-attention style output).
InstanceResult run_instance(const PipelineComponents& pipeline,
                            const PolarityLabelSet& labels,
                            const RawSentence& sentence,
                            const AspectInstance& aspect,
                            AspectQueryScores* trace_out = nullptr);

/// Runs every instance whose sentence is in the given split.
std::vector<InstanceResult> run_dataset(const PipelineComponents& pipeline,
                                        const Dataset& dataset, Split split);

void write_predictions_jsonl(const std::vector<InstanceResult>& results,
                             const std::filesystem::path& path,
                             bool dump_attention = false,
                             const std::vector<AspectQueryScores>* traces = nullptr);

/// Re-scores a predictions file against its dataset (the `evaluate`
/// command path). Returns the rebuilt per-instance results.
std::vector<InstanceResult> load_predictions(
    const Dataset& dataset, const std::filesystem::path& predictions,
    Split split = Split::test);

// ---------------------------------------------------------------------------
// Experiment matrix
// ---------------------------------------------------------------------------

struct ExperimentPlan {
  enum class Setting { in_domain, cross_domain, joint_domain };
  enum class Adaptation { with, without, massive };

  std::string id = "plan";
  Setting setting = Setting::in_domain;
  Adaptation adaptation = Adaptation::with;
  std::vector<std::string> train_datasets;
  std::vector<std::string> test_datasets;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::optional<double> labeled_fraction;
  std::vector<std::filesystem::path> corpus_paths;

  void validate(const std::map<std::string, Dataset>& datasets) const;

  /// Row-group label, e.g. "in_domain", "cross_domain L->R w/o adaptation".
  std::string setting_label() const;

  /// Cell label for one test set, e.g. "L->R14".
  std::string cell_label(const std::string& test_dataset) const;
};

std::string_view to_string(ExperimentPlan::Setting s);
std::string_view to_string(ExperimentPlan::Adaptation a);

struct MetricsRow {
  std::string task;     // aooe | atsc | aoospe
  std::string dataset;
  std::string setting;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  int n_eligible = 0;
};

struct MeanRow {
  std::string task;
  std::string dataset;
  std::string setting;
  double accuracy = 0.0;
  int n_seeds = 0;
};

struct MetricsReport {
  std::string model_name;
  std::string config_hash;
  std::string timestamp;  // excluded from metrics.json cells
  std::vector<MetricsRow> per_seed;
  std::vector<MeanRow> means;

  /// Sorts rows and recomputes means as exact arithmetic averages.
  void finalize();
};

struct ExperimentContext {
  const std::map<std::string, Dataset>* datasets = nullptr;
  const ModelBackend* base_backend = nullptr;
  const Annotator* annotator = nullptr;
  const PatternRegistry* patterns = nullptr;
  PipelineOptions pipeline;
  double polarity_margin = 0.0;
  std::string label_template;
  AdaptationConfig adapt;
  std::filesystem::path run_dir = "runs/default";
  int jobs = 1;
  std::string config_hash;
  bool verbose = false;
};

/// Runs one plan: per seed, optional domain adaptation, pipeline over every
/// test set, cell artifacts under run_dir/cells/<cell>/. Completed cells
/// (metrics.json already present) are skipped. Cells that hit a backend
/// capability error fall back to the unadapted state and keep going.
MetricsReport run_experiment(const ExperimentPlan& plan,
                             const ExperimentContext& context);

/// Runs several plans into one report and writes report.md / report.csv.
MetricsReport run_matrix(const std::vector<ExperimentPlan>& plans,
                         const ExperimentContext& context);

/// Rebuilds a report from the metrics.json cells under a run directory.
MetricsReport assemble_report(const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Labeled-fraction fine-tuning
// ---------------------------------------------------------------------------

struct FinetuneResult {
  std::unique_ptr<TextClassifier> classifier;
  double accuracy = 0.0;
  int n_train = 0;
  int n_test = 0;
};

/// Sequence-classification fine-tuning on a labeled fraction of the train
/// split; input encoding is "<sentence> [SEP] <aspect>". Reports accuracy
/// over polarity-labeled test instances.
FinetuneResult finetune_atsc(const Dataset& dataset, double fraction,
                             const ModelBackend& backend,
                             const AdaptationConfig& config,
                             std::uint64_t seed);

/// (fraction, accuracy) points in the order given.
std::vector<std::pair<double, double>> labeled_fraction_curve(
    const Dataset& dataset, const std::vector<double>& fractions,
    const ModelBackend& backend, const AdaptationConfig& config,
    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class ReportFormat { markdown, csv };

/// markdown: one table per task, datasets as columns, settings as row
/// groups, accuracies x100 at 2 decimals. csv: every per-seed and mean row
/// at full precision (seed column reads "mean" for mean rows).
std::string render_report(const MetricsReport& report, ReportFormat format);

/// Parses render_report(..., csv) output back into a report.
MetricsReport parse_report_csv(const std::string& text);

}  // namespace absa

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "absa/attention.hpp"
#include "absa/backend.hpp"
#include "absa/evaluation.hpp"
#include "absa/syntax.hpp"

namespace absa {

/// Flat key-value lines ("adapt.batch_size=16"), '#' comments, blank lines
/// ignored. Order preserved.
std::vector<std::pair<std::string, std::string>> read_kv_file(
    const std::filesystem::path& path);

std::vector<std::string> split_list(const std::string& value, char sep = ',');

/// Run configuration. Every random choice downstream flows from the seeds
/// held here; nothing seeds from the clock.
struct RunConfig {
  std::string backend_id = "mock";
  std::string model_path;
  std::uint64_t backend_seed = 42;
  int backend_layers = 0;  // 0 = backend default
  int backend_heads = 0;
  int backend_hidden = 0;

  std::string annotator_id = "lexicon";
  std::string annotator_path;

  AdaptationConfig adapt;

  PipelineOptions pipeline;
  double polarity_margin = 0.0;
  std::string label_template;  // reserved for templated label embeddings

  std::vector<std::string> mod_relations =
      PatternRegistry::default_mod_relations();
  /// Raw pattern overrides (name, spec string), applied on top of builtins.
  std::vector<std::pair<std::string, std::string>> pattern_specs;

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "runs";

  static RunConfig from_file(const std::filesystem::path& path);
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  /// Canonical text of every setting, for hashing and idempotence checks.
  std::string canonical_text() const;
  std::string config_hash() const;

  PatternRegistry build_registry() const;
  std::unique_ptr<ModelBackend> build_backend() const;
  std::unique_ptr<Annotator> build_annotator() const;
};

/// Parses a custom pattern spec:
///   dep=ADJ,ADV;rel=amod,advmod;head=NOUN,PROPN
///   [;dep2=...;rel2=...;head2=...];emit=dep|pair|subtree;anchor=dep|head
/// Empty rel fields fall back to the registry's modifier-relation set.
OpinionRelationPattern parse_pattern_spec(const std::string& name,
                                          const std::string& spec);

/// Experiment plan file: flat key-value with "plan.<id>." prefixes, e.g.
///   plan.a.setting=in_domain
///   plan.a.adaptation=with
///   plan.a.train=L14
///   plan.a.test=L14
///   plan.a.seeds=1,2,3,4,5
/// Optional keys: labeled_fraction, corpus (comma-separated paths).
std::vector<ExperimentPlan> parse_experiment_plans(
    const std::filesystem::path& path);

}  // namespace absa

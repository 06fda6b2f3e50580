#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "absa/types.hpp"

namespace absa {

/// Per-file load diagnostics. Dropped rows/instances are warnings, not
/// hard errors; callers decide whether warnings are fatal.
struct ParseStats {
  int instances_dropped = 0;
  int rows_skipped = 0;
  std::vector<std::string> warnings;

  void warn(std::string message) {
    warnings.push_back(std::move(message));
  }
};

/// Loads a SemEval-style ABSA XML file. Both schemas are handled:
///   2014:    <sentence><aspectTerms><aspectTerm term=... from= to= polarity=.../>
///   2015/16: <Reviews>…<sentence><Opinions><Opinion target=... from= to= .../>
/// "NULL" targets and "conflict" polarities are dropped; character offsets
/// are validated against the sentence text and mismatches drop the instance
/// with a warning.
Dataset parse_semeval_xml(const std::filesystem::path& path,
                          const std::string& name, Split split,
                          ParseStats* stats = nullptr);

/// Attaches gold opinion spans from a TSV file with columns
///   sentence_id \t aspect_text \t aspect_from \t opinion_text \t opinion_from
/// (header row optional, detected by a non-numeric third field). Rows that
/// reference unknown sentences/aspects or carry mismatched offsets are
/// skipped with a warning.
Dataset attach_opinion_annotations(Dataset dataset,
                                   const std::filesystem::path& path,
                                   ParseStats* stats = nullptr);

/// Concatenates train-split sentences of the given datasets (in order),
/// then one document per line from each extra file. Duplicates are kept.
/// Throws std::invalid_argument when every source is empty.
TextCorpus build_adaptation_corpus(
    const std::vector<const Dataset*>& datasets,
    const std::vector<std::filesystem::path>& extra_paths);

/// Uniformly samples ceil(fraction * N) of the polarity-labeled train
/// instances, deterministically for a fixed seed. Sampling is
/// shuffle-then-prefix, so a smaller fraction's subset is a prefix of a
/// larger fraction's subset under the same seed. Test instances pass
/// through untouched.
Dataset sample_labeled_fraction(const Dataset& dataset, double fraction,
                                std::uint64_t seed);

/// Internal persistence format: one sentence object per line with nested
/// instances. read_jsonl(write_jsonl(d)) == d.
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_jsonl(const std::filesystem::path& path);

/// One document per non-empty line.
std::vector<std::string> read_text_lines(const std::filesystem::path& path);

}  // namespace absa

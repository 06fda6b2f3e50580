#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absa/text.hpp"
#include "absa/types.hpp"

namespace absa {

enum class Pos { NOUN, PROPN, ADJ, ADV, ADP, VERB, OTHER };

std::string_view to_string(Pos p);

/// Maps a coarse tag onto the 7-tag set; common UD tags outside the set
/// collapse onto OTHER (AUX counts as VERB).
Pos pos_from_string(std::string_view s);

constexpr int kRootHead = -1;

/// Per-word POS tags and dependency arcs. head[w] is a word index or
/// kRootHead; the head graph must be a tree (acyclic, every word reaches
/// the virtual root).
struct SyntaxAnnotation {
  std::vector<Word> words;
  std::vector<Pos> pos;
  std::vector<int> head;
  std::vector<std::string> deprel;

  int size() const { return static_cast<int>(words.size()); }
  void validate() const;

  /// w plus all its descendants, ascending order.
  std::vector<int> subtree(int w) const;

  bool operator==(const SyntaxAnnotation&) const = default;
};

/// Annotator plug-in record: one per annotator token, aligned to the raw
/// text by character offset.
struct TokenRecord {
  std::string text;
  int from = 0;
  Pos pos = Pos::OTHER;
  int head = kRootHead;  // token index or kRootHead
  std::string deprel;
};

/// Pluggable POS/dependency annotator. annotate() aligns annotator tokens
/// onto the corpus word tokenization by character offsets; words spanning
/// several annotator tokens take the first token's tag and head.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual std::string name() const = 0;
  virtual std::vector<TokenRecord> annotate_tokens(std::string_view text) const = 0;

  SyntaxAnnotation annotate(const RawSentence& sentence) const;
};

/// Built-in deterministic annotator: lexicon plus suffix rules for POS,
/// chunk-based attachment heuristics for arcs. Tuned for short review
/// sentences; intended for tests, demos, and runs without an external
/// parser.
class LexiconAnnotator : public Annotator {
 public:
  std::string name() const override { return "lexicon"; }
  std::vector<TokenRecord> annotate_tokens(std::string_view text) const override;
};

/// File-backed annotator: pre-parsed token records keyed by the exact raw
/// sentence text. Block format, separated by blank lines:
///   # text: <raw sentence>
///   <index>\t<form>\t<from>\t<pos>\t<head>\t<deprel>
class TsvAnnotator : public Annotator {
 public:
  explicit TsvAnnotator(const std::filesystem::path& path);
  std::string name() const override { return "tsv"; }
  std::vector<TokenRecord> annotate_tokens(std::string_view text) const override;

 private:
  std::map<std::string, std::vector<TokenRecord>> blocks_;
};

std::unique_ptr<Annotator> create_annotator(const std::string& id,
                                            const std::filesystem::path& path = {});

/// One arc constraint: dependent POS set, relation set, head POS set.
/// An empty relation set means "use the registry's modifier-relation set".
struct ArcConstraint {
  std::set<Pos> dependent;
  std::set<std::string> relations;
  std::set<Pos> head;
};

/// Opinion-relation pattern over one or two chained arcs. The chain runs
/// dependent -> head; for two arcs the first head is the second dependent.
struct OpinionRelationPattern {
  enum class Emit { dependent, dependent_and_head, dependent_subtree };
  enum class Anchor { dependent, arc_head };

  std::string name;
  std::vector<ArcConstraint> chain;  // length 1 or 2
  Emit emit = Emit::dependent;
  Anchor anchor = Anchor::dependent;
};

struct Candidate {
  std::vector<int> phrase;  // word indices, ascending
  int head = -1;            // head word index; always a member of phrase
  std::string pattern;

  bool operator==(const Candidate&) const = default;
};

/// Candidate opinion phrases with the indicator mask (set of candidate
/// heads). Candidates sharing a head are merged, longest phrase first.
struct CandidateSet {
  std::vector<Candidate> candidates;
  std::set<int> mask;

  bool operator==(const CandidateSet&) const = default;
};

/// Stable-ordered pattern registry. Ships four built-ins:
///   P1  ADJ -mod-> NOUN          emits the ADJ          head = ADJ
///   P2  ADV -mod-> ADJ           emits [ADV, ADJ]       head = ADJ
///   P3  ADJ -mod-> NOUN -mod-> NOUN   emits the ADJ     head = ADJ
///   P4  ADP -mod-> NOUN          emits the ADP subtree  head = ADP
/// where "mod" is the configurable modifier-relation set.
class PatternRegistry {
 public:
  static const std::vector<std::string>& default_mod_relations();
  static PatternRegistry builtin(
      std::vector<std::string> mod_relations = default_mod_relations());

  /// Appends a pattern; duplicate names are an error.
  void register_pattern(OpinionRelationPattern pattern);

  const std::vector<OpinionRelationPattern>& list() const { return patterns_; }
  const std::set<std::string>& mod_relations() const { return mod_relations_; }

  CandidateSet extract(const SyntaxAnnotation& annotation) const;

 private:
  std::vector<OpinionRelationPattern> patterns_;
  std::set<std::string> mod_relations_;
};

/// extract with the built-in registry and default modifier relations.
CandidateSet extract_candidates(const SyntaxAnnotation& annotation);

/// Drops candidates whose head is in the excluded set (a word cannot be
/// its own opinion); the mask shrinks accordingly.
CandidateSet remove_heads(CandidateSet set, const std::set<int>& excluded);

}  // namespace absa

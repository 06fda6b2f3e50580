#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace absa {

enum class Domain { laptop, restaurant, other };
enum class Split { train, test };
enum class Polarity { positive, negative, neutral };

std::string_view to_string(Domain d);
std::string_view to_string(Split s);
std::string_view to_string(Polarity p);
Domain domain_from_string(std::string_view s);
Split split_from_string(std::string_view s);
std::optional<Polarity> polarity_from_string(std::string_view s);

/// Dataset naming convention: L* = laptop, R* = restaurant, else other.
Domain domain_for_dataset(std::string_view name);

/// Half-open character interval [from, to) on a raw sentence string.
struct CharSpan {
  int from = 0;
  int to = 0;

  int length() const { return to - from; }
  bool overlaps(const CharSpan& o) const { return from < o.to && o.from < to; }
  bool operator==(const CharSpan&) const = default;
};

/// One (sentence, aspect span, gold opinions, gold polarity) evaluation unit.
struct AspectInstance {
  std::string sentence_id;
  CharSpan aspect_span;
  std::string aspect_text;
  std::vector<CharSpan> gold_opinions;
  std::optional<Polarity> gold_polarity;

  bool operator==(const AspectInstance&) const = default;
};

struct RawSentence {
  std::string id;
  std::string text;
  Domain domain = Domain::other;
  Split split = Split::train;

  bool operator==(const RawSentence&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<RawSentence> sentences;
  std::vector<AspectInstance> instances;

  const RawSentence* find_sentence(std::string_view id) const;
  bool operator==(const Dataset&) const = default;
};

/// Raw in-domain text used for backend adaptation.
struct TextCorpus {
  std::vector<std::string> documents;
  std::vector<std::string> provenance;
};

/// Throws std::invalid_argument when the aspect span falls outside the
/// sentence, the aspect text differs from the substring at the span, or a
/// gold opinion interval is out of bounds / overlaps the aspect.
void validate_instance(const RawSentence& sentence, const AspectInstance& inst);

/// Checks every instance against its sentence; throws on the first failure.
void validate_dataset(const Dataset& dataset);

}  // namespace absa

#include "absa/types.hpp"

#include <stdexcept>

namespace absa {

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::laptop: return "laptop";
    case Domain::restaurant: return "restaurant";
    case Domain::other: return "other";
  }
  return "other";
}

std::string_view to_string(Split s) {
  return s == Split::train ? "train" : "test";
}

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::negative: return "negative";
    case Polarity::neutral: return "neutral";
  }
  return "neutral";
}

Domain domain_from_string(std::string_view s) {
  if (s == "laptop") return Domain::laptop;
  if (s == "restaurant") return Domain::restaurant;
  if (s == "other") return Domain::other;
  throw std::invalid_argument("unknown domain: " + std::string(s));
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split: " + std::string(s));
}

std::optional<Polarity> polarity_from_string(std::string_view s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  if (s == "neutral") return Polarity::neutral;
  return std::nullopt;
}

Domain domain_for_dataset(std::string_view name) {
  if (!name.empty() && (name[0] == 'L' || name[0] == 'l')) return Domain::laptop;
  if (!name.empty() && (name[0] == 'R' || name[0] == 'r')) {
    return Domain::restaurant;
  }
  return Domain::other;
}

const RawSentence* Dataset::find_sentence(std::string_view id) const {
  for (const RawSentence& s : sentences) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void validate_instance(const RawSentence& sentence,
                       const AspectInstance& inst) {
  const int n = static_cast<int>(sentence.text.size());
  const CharSpan a = inst.aspect_span;
  if (a.from < 0 || a.to > n || a.from >= a.to) {
    throw std::invalid_argument("aspect span [" + std::to_string(a.from) + "," +
                                std::to_string(a.to) +
                                ") out of bounds in sentence " + sentence.id);
  }
  const std::string_view at_span =
      std::string_view(sentence.text).substr(a.from, a.length());
  if (at_span != inst.aspect_text) {
    throw std::invalid_argument("aspect text \"" + inst.aspect_text +
                                "\" does not match substring \"" +
                                std::string(at_span) + "\" in sentence " +
                                sentence.id);
  }
  for (const CharSpan& op : inst.gold_opinions) {
    if (op.from < 0 || op.to > n || op.from >= op.to) {
      throw std::invalid_argument("gold opinion span out of bounds in sentence " +
                                  sentence.id);
    }
    if (op.overlaps(a)) {
      throw std::invalid_argument(
          "gold opinion overlaps the aspect span in sentence " + sentence.id);
    }
  }
}

void validate_dataset(const Dataset& dataset) {
  for (const AspectInstance& inst : dataset.instances) {
    const RawSentence* s = dataset.find_sentence(inst.sentence_id);
    if (s == nullptr) {
      throw std::invalid_argument("instance references unknown sentence " +
                                  inst.sentence_id);
    }
    validate_instance(*s, inst);
  }
}

}  // namespace absa

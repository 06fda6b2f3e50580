#include "absa/syntax.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "absa/errors.hpp"

namespace absa {

std::string_view to_string(Pos p) {
  switch (p) {
    case Pos::NOUN: return "NOUN";
    case Pos::PROPN: return "PROPN";
    case Pos::ADJ: return "ADJ";
    case Pos::ADV: return "ADV";
    case Pos::ADP: return "ADP";
    case Pos::VERB: return "VERB";
    case Pos::OTHER: return "OTHER";
  }
  return "OTHER";
}

Pos pos_from_string(std::string_view s) {
  if (s == "NOUN") return Pos::NOUN;
  if (s == "PROPN") return Pos::PROPN;
  if (s == "ADJ") return Pos::ADJ;
  if (s == "ADV") return Pos::ADV;
  if (s == "ADP") return Pos::ADP;
  if (s == "VERB" || s == "AUX") return Pos::VERB;
  return Pos::OTHER;
}

void SyntaxAnnotation::validate() const {
  const std::size_t n = words.size();
  if (pos.size() != n || head.size() != n || deprel.size() != n) {
    throw std::invalid_argument("annotation: field sizes differ");
  }
  for (std::size_t w = 0; w < n; ++w) {
    if (head[w] != kRootHead &&
        (head[w] < 0 || head[w] >= static_cast<int>(n))) {
      throw std::invalid_argument("annotation: head index out of range");
    }
    if (head[w] == static_cast<int>(w)) {
      throw std::invalid_argument("annotation: word " + std::to_string(w) +
                                  " is its own head");
    }
  }
  // every word must reach the virtual root without cycling
  for (std::size_t w = 0; w < n; ++w) {
    int cur = static_cast<int>(w);
    std::size_t steps = 0;
    while (cur != kRootHead) {
      cur = head[static_cast<std::size_t>(cur)];
      if (++steps > n) {
        throw std::invalid_argument("annotation: cycle through word " +
                                    std::to_string(w));
      }
    }
  }
}

std::vector<int> SyntaxAnnotation::subtree(int w) const {
  std::vector<std::vector<int>> children(words.size());
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (head[i] != kRootHead) {
      children[static_cast<std::size_t>(head[i])].push_back(
          static_cast<int>(i));
    }
  }
  std::vector<int> out;
  std::vector<int> stack{w};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (int c : children[static_cast<std::size_t>(cur)]) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Annotator base: character-offset alignment onto the word tokenization
// ---------------------------------------------------------------------------

SyntaxAnnotation Annotator::annotate(const RawSentence& sentence) const {
  if (sentence.text.empty()) {
    throw std::invalid_argument("cannot annotate an empty sentence");
  }
  const std::vector<TokenRecord> records = annotate_tokens(sentence.text);
  if (records.empty()) {
    throw std::invalid_argument("annotator produced no tokens for sentence " +
                                sentence.id);
  }

  SyntaxAnnotation a;
  a.words = tokenize_words(sentence.text);
  const int n = a.size();

  // token -> containing word, by character offset
  std::vector<int> token_word(records.size(), -1);
  std::vector<int> bad_offsets;
  for (std::size_t t = 0; t < records.size(); ++t) {
    const int at = records[t].from;
    for (int w = 0; w < n; ++w) {
      if (a.words[static_cast<std::size_t>(w)].from <= at &&
          at < a.words[static_cast<std::size_t>(w)].to) {
        token_word[t] = w;
        break;
      }
    }
    if (token_word[t] < 0) bad_offsets.push_back(at);
  }
  std::vector<int> first_token(static_cast<std::size_t>(n), -1);
  for (std::size_t t = 0; t < records.size(); ++t) {
    if (token_word[t] >= 0 &&
        first_token[static_cast<std::size_t>(token_word[t])] < 0) {
      first_token[static_cast<std::size_t>(token_word[t])] =
          static_cast<int>(t);
    }
  }
  for (int w = 0; w < n; ++w) {
    if (first_token[static_cast<std::size_t>(w)] < 0) {
      bad_offsets.push_back(a.words[static_cast<std::size_t>(w)].from);
    }
  }
  if (!bad_offsets.empty()) {
    std::string offsets;
    for (int o : bad_offsets) offsets += " " + std::to_string(o);
    throw std::invalid_argument(
        "annotator tokenization does not align with sentence " + sentence.id +
        " at offsets:" + offsets);
  }

  a.pos.resize(static_cast<std::size_t>(n));
  a.head.resize(static_cast<std::size_t>(n));
  a.deprel.resize(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) {
    const TokenRecord& rec =
        records[static_cast<std::size_t>(first_token[static_cast<std::size_t>(w)])];
    a.pos[static_cast<std::size_t>(w)] = rec.pos;
    a.deprel[static_cast<std::size_t>(w)] = rec.deprel;
    // climb token heads until we leave this word
    int ht = rec.head;
    while (ht != kRootHead && token_word[static_cast<std::size_t>(ht)] == w) {
      ht = records[static_cast<std::size_t>(ht)].head;
    }
    a.head[static_cast<std::size_t>(w)] =
        ht == kRootHead ? kRootHead : token_word[static_cast<std::size_t>(ht)];
  }
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// LexiconAnnotator
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& adjective_lexicon() {
  static const std::set<std::string> lex{
      "good",        "great",      "bad",        "terrible",   "awful",
      "excellent",   "amazing",    "delicious",  "tasty",      "fresh",
      "friendly",    "slow",       "fast",       "cheap",      "expensive",
      "nice",        "horrible",   "fantastic",  "poor",       "rude",
      "clean",       "dirty",      "cozy",       "comfortable","light",
      "heavy",       "sturdy",     "flimsy",     "reliable",   "crisp",
      "sharp",       "dull",       "bright",     "dim",        "loud",
      "quiet",       "spacious",   "cramped",    "hot",        "cold",
      "warm",        "stale",      "bland",      "spicy",      "sweet",
      "sour",        "attentive",  "helpful",    "outstanding","wonderful",
      "lovely",      "decent",     "solid",      "mediocre",   "overpriced",
      "affordable",  "sluggish",   "durable",    "portable",   "beautiful",
      "gorgeous",    "disappointing", "fine",    "perfect",    "superb",
      "big",         "small",      "huge",       "tiny",       "long",
      "short",       "new",        "old",        "high",       "low",
      "best",        "worst",
      "better",      "worse",      "easy",       "hard",       "tough",
      "soft",        "juicy",      "dry",        "greasy",     "crowded",
      "noisy",       "pleasant",   "average",    "pricey",     "authentic"};
  return lex;
}

const std::set<std::string>& adverb_lexicon() {
  static const std::set<std::string> lex{
      "very",   "really", "quite", "too",   "so",      "extremely",
      "super",  "pretty", "rather","fairly","highly",  "well",
      "always", "never",  "not",   "n't",   "somewhat","incredibly"};
  return lex;
}

const std::set<std::string>& adposition_lexicon() {
  static const std::set<std::string> lex{
      "of",   "in",    "on",      "at",   "with",  "for",   "from",
      "by",   "about", "over",    "under","out",   "up",    "off",
      "without", "between", "during", "above", "below", "across"};
  return lex;
}

const std::set<std::string>& verb_lexicon() {
  static const std::set<std::string> lex{
      "is",    "are",   "was",    "were",  "be",     "been",  "being",
      "am",    "seems", "seemed", "feels", "felt",   "looks", "looked",
      "tastes","tasted","has",    "have",  "had",    "get",   "got",
      "works", "work",  "worked", "runs",  "run",    "ran",   "recommend",
      "love",  "like",  "hate",   "enjoy", "enjoyed","ordered","came",
      "went",  "take",  "took",   "make",  "made",   "buy",   "bought",
      "use",   "used",  "try",    "tried", "serve",  "served","wait",
      "waited","arrived", "broke", "crashed", "lasted", "holds"};
  return lex;
}

const std::set<std::string>& closed_class() {
  static const std::set<std::string> lex{
      "the",  "a",    "an",   "this", "that",  "these", "those", "it",
      "its",  "my",   "your", "our",  "their", "i",     "we",    "you",
      "he",   "she",  "they", "them", "us",    "me",    "him",
      "his",  "her",  "and",  "or",
      "but",  "nor",  "yet",  "there","here",  "what",  "which", "who",
      "as",   "if",   "when", "while","to",    "than",  "all",   "some",
      "any",  "no",   "every","each", "because"};
  return lex;
}

bool has_suffix(const std::string& s, std::string_view suffix) {
  return s.size() > suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Pos guess_pos(const std::string& lower, const std::string& surface,
              bool sentence_initial) {
  if (is_punct_token(surface)) return Pos::OTHER;
  if (closed_class().count(lower)) return Pos::OTHER;
  if (verb_lexicon().count(lower)) return Pos::VERB;
  if (adposition_lexicon().count(lower)) return Pos::ADP;
  if (adverb_lexicon().count(lower)) return Pos::ADV;
  if (adjective_lexicon().count(lower)) return Pos::ADJ;
  if (has_suffix(lower, "ly")) return Pos::ADV;
  if (has_suffix(lower, "ous") || has_suffix(lower, "ful") ||
      has_suffix(lower, "ible") || has_suffix(lower, "able") ||
      has_suffix(lower, "ive") || has_suffix(lower, "less") ||
      has_suffix(lower, "ish")) {
    return Pos::ADJ;
  }
  if (!sentence_initial && !surface.empty() && surface[0] >= 'A' &&
      surface[0] <= 'Z') {
    return Pos::PROPN;
  }
  return Pos::NOUN;
}

bool nounish(Pos p) { return p == Pos::NOUN || p == Pos::PROPN; }

}  // namespace

std::vector<TokenRecord> LexiconAnnotator::annotate_tokens(
    std::string_view text) const {
  const std::vector<Word> words = tokenize_words(text);
  const int n = static_cast<int>(words.size());
  std::vector<TokenRecord> recs(static_cast<std::size_t>(n));
  std::vector<Pos> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Word& w = words[static_cast<std::size_t>(i)];
    pos[static_cast<std::size_t>(i)] = guess_pos(to_lower(w.text), w.text, i == 0);
    recs[static_cast<std::size_t>(i)].text = w.text;
    recs[static_cast<std::size_t>(i)].from = w.from;
    recs[static_cast<std::size_t>(i)].pos = pos[static_cast<std::size_t>(i)];
  }

  auto at = [&](int i) { return pos[static_cast<std::size_t>(i)]; };
  auto punct = [&](int i) {
    return is_punct_token(words[static_cast<std::size_t>(i)].text);
  };

  // head of the contiguous noun run starting at or covering i
  auto run_head = [&](int i) {
    int j = i;
    while (j + 1 < n && nounish(at(j + 1))) ++j;
    return j;
  };

  std::vector<int> head(static_cast<std::size_t>(n), -2);
  std::vector<std::string> rel(static_cast<std::size_t>(n), "dep");

  // root: first verb, else first noun-run head, else first token
  int root = -1;
  for (int i = 0; i < n; ++i) {
    if (at(i) == Pos::VERB) {
      root = i;
      break;
    }
  }
  if (root < 0) {
    for (int i = 0; i < n; ++i) {
      if (nounish(at(i))) {
        root = run_head(i);
        break;
      }
    }
  }
  if (root < 0) root = 0;
  head[static_cast<std::size_t>(root)] = kRootHead;
  rel[static_cast<std::size_t>(root)] = "root";

  auto attach = [&](int dep, int h, const char* r) {
    if (dep == h || head[static_cast<std::size_t>(dep)] != -2) return;
    head[static_cast<std::size_t>(dep)] = h;
    rel[static_cast<std::size_t>(dep)] = r;
  };

  // nouns inside a run modify the run head
  for (int i = 0; i < n; ++i) {
    if (!nounish(at(i))) continue;
    const int rh = run_head(i);
    if (i != rh) attach(i, rh, "compound");
  }

  // adjectives: attributive to the next noun run, else predicative link
  // back to the nearest preceding noun
  for (int i = 0; i < n; ++i) {
    if (at(i) != Pos::ADJ) continue;
    int target = -1;
    for (int j = i + 1; j < n && j <= i + 5; ++j) {
      if (punct(j) || at(j) == Pos::VERB || at(j) == Pos::ADP) break;
      if (nounish(at(j))) {
        target = run_head(j);
        break;
      }
    }
    if (target >= 0) {
      attach(i, target, "amod");
      continue;
    }
    for (int j = i - 1; j >= 0; --j) {
      if (punct(j)) break;
      if (nounish(at(j))) {
        attach(i, j, "nmod");
        break;
      }
    }
  }

  // adverbs: next ADJ/ADV within 2 tokens, else nearest following verb
  for (int i = 0; i < n; ++i) {
    if (at(i) != Pos::ADV) continue;
    int target = -1;
    for (int j = i + 1; j < n && j <= i + 2; ++j) {
      if (at(j) == Pos::ADJ || at(j) == Pos::ADV) {
        target = j;
        break;
      }
      if (punct(j)) break;
    }
    if (target < 0) {
      for (int j = i + 1; j < n; ++j) {
        if (punct(j)) break;
        if (at(j) == Pos::VERB) {
          target = j;
          break;
        }
      }
    }
    if (target < 0) {
      for (int j = i - 1; j >= 0; --j) {
        if (punct(j)) break;
        if (at(j) == Pos::VERB || at(j) == Pos::ADJ) {
          target = j;
          break;
        }
      }
    }
    if (target >= 0) attach(i, target, "advmod");
  }

  // adpositions: case-mark the next noun run head, else nearest preceding noun
  for (int i = 0; i < n; ++i) {
    if (at(i) != Pos::ADP) continue;
    int target = -1;
    for (int j = i + 1; j < n && j <= i + 5; ++j) {
      if (punct(j) || at(j) == Pos::VERB) break;
      if (nounish(at(j))) {
        target = run_head(j);
        break;
      }
    }
    if (target < 0) {
      for (int j = i - 1; j >= 0; --j) {
        if (punct(j)) break;
        if (nounish(at(j))) {
          target = j;
          break;
        }
      }
    }
    if (target >= 0) attach(i, target, "case");
  }

  // determiners and friends lean on the next noun run
  for (int i = 0; i < n; ++i) {
    if (at(i) != Pos::OTHER || punct(i)) continue;
    for (int j = i + 1; j < n && j <= i + 4; ++j) {
      if (punct(j)) break;
      if (nounish(at(j))) {
        attach(i, run_head(j), "det");
        break;
      }
    }
  }

  // secondary verbs chain onto the root verb
  for (int i = 0; i < n; ++i) {
    if (at(i) == Pos::VERB && i != root) attach(i, root, "conj");
  }

  // noun-run heads: subject before the root verb, object after
  for (int i = 0; i < n; ++i) {
    if (!nounish(at(i)) || head[static_cast<std::size_t>(i)] != -2) continue;
    if (i == run_head(i)) {
      attach(i, root, at(root) == Pos::VERB && i < root ? "nsubj" : "obj");
    }
  }

  // leftovers (punctuation included) hang off the root
  for (int i = 0; i < n; ++i) {
    if (head[static_cast<std::size_t>(i)] == -2) {
      attach(i, root, punct(i) ? "punct" : "dep");
    }
  }

  for (int i = 0; i < n; ++i) {
    recs[static_cast<std::size_t>(i)].head = head[static_cast<std::size_t>(i)];
    recs[static_cast<std::size_t>(i)].deprel = rel[static_cast<std::size_t>(i)];
  }
  return recs;
}

// ---------------------------------------------------------------------------
// TsvAnnotator
// ---------------------------------------------------------------------------

TsvAnnotator::TsvAnnotator(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such annotation file: " + path.string());
  }
  std::ifstream in(path);
  std::string line;
  std::string current_text;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      current_text.clear();
      continue;
    }
    if (line.rfind("# text: ", 0) == 0) {
      current_text = line.substr(8);
      blocks_[current_text] = {};
      continue;
    }
    if (current_text.empty()) {
      throw ParseError("token line before any '# text:' header in " +
                           path.string(),
                       line_no);
    }
    std::istringstream ss(line);
    std::string idx_s, form, from_s, pos_s, head_s, deprel;
    if (!std::getline(ss, idx_s, '\t') || !std::getline(ss, form, '\t') ||
        !std::getline(ss, from_s, '\t') || !std::getline(ss, pos_s, '\t') ||
        !std::getline(ss, head_s, '\t') || !std::getline(ss, deprel)) {
      throw ParseError("expected 6 tab-separated fields in " + path.string(),
                       line_no);
    }
    TokenRecord rec;
    rec.text = form;
    try {
      rec.from = std::stoi(from_s);
      rec.head = std::stoi(head_s);
    } catch (const std::exception&) {
      throw ParseError("non-numeric offset or head in " + path.string(),
                       line_no);
    }
    rec.pos = pos_from_string(pos_s);
    rec.deprel = deprel;
    blocks_[current_text].push_back(std::move(rec));
  }
}

std::vector<TokenRecord> TsvAnnotator::annotate_tokens(
    std::string_view text) const {
  const auto it = blocks_.find(std::string(text));
  if (it == blocks_.end()) {
    throw std::invalid_argument("no pre-parsed annotation for sentence: \"" +
                                std::string(text) + "\"");
  }
  return it->second;
}

std::unique_ptr<Annotator> create_annotator(const std::string& id,
                                            const std::filesystem::path& path) {
  if (id == "lexicon") return std::make_unique<LexiconAnnotator>();
  if (id == "tsv") {
    if (path.empty()) {
      throw std::invalid_argument("tsv annotator requires an annotation file");
    }
    return std::make_unique<TsvAnnotator>(path);
  }
  throw std::invalid_argument("unknown annotator \"" + id +
                              "\" (available: lexicon, tsv)");
}

// ---------------------------------------------------------------------------
// Pattern registry
// ---------------------------------------------------------------------------

const std::vector<std::string>& PatternRegistry::default_mod_relations() {
  static const std::vector<std::string> rels{"amod", "advmod", "nmod",
                                             "compound", "case"};
  return rels;
}

PatternRegistry PatternRegistry::builtin(
    std::vector<std::string> mod_relations) {
  PatternRegistry reg;
  reg.mod_relations_.insert(mod_relations.begin(), mod_relations.end());
  const std::set<Pos> noun{Pos::NOUN, Pos::PROPN};

  using P = OpinionRelationPattern;
  reg.register_pattern({"P1",
                        {{{Pos::ADJ}, {}, noun}},
                        P::Emit::dependent,
                        P::Anchor::dependent});
  reg.register_pattern({"P2",
                        {{{Pos::ADV}, {}, {Pos::ADJ}}},
                        P::Emit::dependent_and_head,
                        P::Anchor::arc_head});
  reg.register_pattern({"P3",
                        {{{Pos::ADJ}, {}, noun}, {noun, {}, noun}},
                        P::Emit::dependent,
                        P::Anchor::dependent});
  reg.register_pattern({"P4",
                        {{{Pos::ADP}, {}, noun}},
                        P::Emit::dependent_subtree,
                        P::Anchor::dependent});
  return reg;
}

void PatternRegistry::register_pattern(OpinionRelationPattern pattern) {
  if (pattern.chain.empty() || pattern.chain.size() > 2) {
    throw std::invalid_argument("pattern \"" + pattern.name +
                                "\": chain length must be 1 or 2");
  }
  for (const OpinionRelationPattern& p : patterns_) {
    if (p.name == pattern.name) {
      throw std::invalid_argument("duplicate pattern name \"" + pattern.name +
                                  "\"");
    }
  }
  patterns_.push_back(std::move(pattern));
}

namespace {

constexpr std::size_t kMaxSubtreePhrase = 4;

bool relation_matches(const std::set<std::string>& wanted,
                      const std::set<std::string>& mod_set,
                      const std::string& rel) {
  const std::set<std::string>& s = wanted.empty() ? mod_set : wanted;
  return s.count(rel) > 0;
}

std::vector<int> subtree_phrase(const SyntaxAnnotation& a, int w) {
  const std::vector<int> sub = a.subtree(w);
  // contiguous run containing w, then a window of up to 4 words from w on
  std::vector<int> phrase{w};
  for (int next = w + 1;
       phrase.size() < kMaxSubtreePhrase &&
       std::find(sub.begin(), sub.end(), next) != sub.end();
       ++next) {
    phrase.push_back(next);
  }
  return phrase;
}

}  // namespace

CandidateSet PatternRegistry::extract(const SyntaxAnnotation& a) const {
  a.validate();
  const int n = a.size();

  struct Raw {
    std::vector<int> phrase;
    int head;
    std::string pattern;
    std::size_t order;
  };
  std::vector<Raw> raw;

  std::size_t order = 0;
  for (const OpinionRelationPattern& p : patterns_) {
    for (int d = 0; d < n; ++d) {
      const int h1 = a.head[static_cast<std::size_t>(d)];
      if (h1 == kRootHead) continue;
      const ArcConstraint& c1 = p.chain[0];
      if (!c1.dependent.count(a.pos[static_cast<std::size_t>(d)])) continue;
      if (!relation_matches(c1.relations, mod_relations_,
                            a.deprel[static_cast<std::size_t>(d)])) {
        continue;
      }
      if (!c1.head.count(a.pos[static_cast<std::size_t>(h1)])) continue;

      if (p.chain.size() == 2) {
        const int h2 = a.head[static_cast<std::size_t>(h1)];
        if (h2 == kRootHead) continue;
        const ArcConstraint& c2 = p.chain[1];
        if (!c2.dependent.count(a.pos[static_cast<std::size_t>(h1)])) continue;
        if (!relation_matches(c2.relations, mod_relations_,
                              a.deprel[static_cast<std::size_t>(h1)])) {
          continue;
        }
        if (!c2.head.count(a.pos[static_cast<std::size_t>(h2)])) continue;
      }

      Raw r;
      r.pattern = p.name;
      r.order = order++;
      switch (p.emit) {
        case OpinionRelationPattern::Emit::dependent:
          r.phrase = {d};
          break;
        case OpinionRelationPattern::Emit::dependent_and_head:
          r.phrase = {std::min(d, h1), std::max(d, h1)};
          break;
        case OpinionRelationPattern::Emit::dependent_subtree:
          r.phrase = subtree_phrase(a, d);
          break;
      }
      r.head = p.anchor == OpinionRelationPattern::Anchor::dependent ? d : h1;
      raw.push_back(std::move(r));
    }
  }

  // merge on shared heads: longest phrase wins, first registered on ties
  std::map<int, const Raw*> best;
  for (const Raw& r : raw) {
    auto [it, inserted] = best.try_emplace(r.head, &r);
    if (!inserted && r.phrase.size() > it->second->phrase.size()) {
      it->second = &r;
    }
  }

  CandidateSet out;
  for (const auto& [head_word, r] : best) {
    out.candidates.push_back({r->phrase, head_word, r->pattern});
    out.mask.insert(head_word);
  }
  return out;
}

CandidateSet extract_candidates(const SyntaxAnnotation& annotation) {
  static const PatternRegistry registry = PatternRegistry::builtin();
  return registry.extract(annotation);
}

CandidateSet remove_heads(CandidateSet set, const std::set<int>& excluded) {
  std::vector<Candidate> kept;
  for (Candidate& c : set.candidates) {
    if (!excluded.count(c.head)) kept.push_back(std::move(c));
  }
  set.candidates = std::move(kept);
  set.mask.clear();
  for (const Candidate& c : set.candidates) set.mask.insert(c.head);
  return set;
}

}  // namespace absa

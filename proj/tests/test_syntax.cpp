#include "absa/syntax.hpp"

#include <set>

#include "doctest.h"

#include "absa/errors.hpp"
#include "absa/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace absa;

namespace {

RawSentence sent(const std::string& text) {
  return RawSentence{"s", text, Domain::other, Split::train};
}

/// Hand-built annotation over synthetic words "w0 w1 ...".
SyntaxAnnotation make_annotation(const std::vector<Pos>& pos,
                                 const std::vector<int>& head,
                                 const std::vector<std::string>& deprel) {
  SyntaxAnnotation a;
  int offset = 0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const std::string text = "w" + std::to_string(i);
    a.words.push_back({text, offset, offset + static_cast<int>(text.size())});
    offset += static_cast<int>(text.size()) + 1;
  }
  a.pos = pos;
  a.head = head;
  a.deprel = deprel;
  a.validate();
  return a;
}

}  // namespace

TEST_CASE("word tokenizer: offsets, punctuation, joiners") {
  const auto words = tokenize_words("The fajitas are great.");
  REQUIRE(words.size() == 5);
  CHECK(words[1].text == "fajitas");
  CHECK(words[1].from == 4);
  CHECK(words[1].to == 11);
  CHECK(words[4].text == ".");

  const auto joined = tokenize_words("easy-to-use, isn't it?");
  REQUIRE(joined.size() == 5);
  CHECK(joined[0].text == "easy-to-use");
  CHECK(joined[1].text == ",");
  CHECK(joined[2].text == "isn't");
  CHECK(joined[4].text == "?");
}

// Frozen output of the built-in annotator on the canonical fixture.
TEST_CASE("lexicon annotator golden: great battery life") {
  LexiconAnnotator ann;
  const SyntaxAnnotation a = ann.annotate(sent("great battery life"));
  REQUIRE(a.size() == 3);
  CHECK(a.pos == std::vector<Pos>{Pos::ADJ, Pos::NOUN, Pos::NOUN});
  CHECK(a.head == std::vector<int>{2, 2, kRootHead});
  CHECK(a.deprel == std::vector<std::string>{"amod", "compound", "root"});
}

TEST_CASE("lexicon annotator links predicative adjectives to the subject") {
  LexiconAnnotator ann;
  const SyntaxAnnotation a = ann.annotate(sent("The fajitas are great"));
  REQUIRE(a.size() == 4);
  CHECK(a.pos[3] == Pos::ADJ);
  CHECK(a.head[3] == 1);  // great -> fajitas
  CHECK(a.deprel[3] == "nmod");
  CHECK(a.head[2] == kRootHead);
}

TEST_CASE("annotator rejects empty sentences and repeats deterministically") {
  LexiconAnnotator ann;
  CHECK_THROWS_AS(ann.annotate(sent("")), std::invalid_argument);
  const RawSentence s = sent("The waiter was incredibly rude");
  CHECK(ann.annotate(s) == ann.annotate(s));
}

TEST_CASE("annotation validation catches cycles and self-heads") {
  SyntaxAnnotation a;
  a.words = {{"a", 0, 1}, {"b", 2, 3}};
  a.pos = {Pos::NOUN, Pos::NOUN};
  a.deprel = {"dep", "dep"};
  a.head = {1, 0};  // cycle
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a.head = {0, kRootHead};  // self-head
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
}

TEST_CASE("P1: adjective modifying a noun emits the adjective") {
  const SyntaxAnnotation a = make_annotation(
      {Pos::ADJ, Pos::NOUN}, {1, kRootHead}, {"amod", "root"});
  const CandidateSet cs = extract_candidates(a);
  REQUIRE(cs.candidates.size() == 1);
  CHECK(cs.candidates[0].phrase == std::vector<int>{0});
  CHECK(cs.candidates[0].head == 0);
  CHECK(cs.candidates[0].pattern == "P1");
  CHECK(cs.mask == std::set<int>{0});
}

TEST_CASE("P1 + P2 merge: longest phrase wins on a shared head") {
  // very -> good (advmod), good -> screen (amod)
  const SyntaxAnnotation a =
      make_annotation({Pos::ADV, Pos::ADJ, Pos::NOUN}, {1, 2, kRootHead},
                      {"advmod", "amod", "root"});
  const CandidateSet cs = extract_candidates(a);
  REQUIRE(cs.candidates.size() == 1);
  CHECK(cs.candidates[0].phrase == std::vector<int>{0, 1});
  CHECK(cs.candidates[0].head == 1);
  CHECK(cs.mask == std::set<int>{1});
}

TEST_CASE("no modifier arcs, no candidates") {
  const SyntaxAnnotation a =
      make_annotation({Pos::NOUN, Pos::VERB, Pos::NOUN},
                      {1, kRootHead, 1}, {"nsubj", "root", "obj"});
  const CandidateSet cs = extract_candidates(a);
  CHECK(cs.candidates.empty());
  CHECK(cs.mask.empty());
}

TEST_CASE("P3 fires on adjective-noun-noun chains") {
  // spicy -> tuna (amod), tuna -> roll (compound)
  const SyntaxAnnotation a =
      make_annotation({Pos::ADJ, Pos::NOUN, Pos::NOUN}, {1, 2, kRootHead},
                      {"amod", "compound", "root"});
  const CandidateSet cs = extract_candidates(a);
  REQUIRE(cs.candidates.size() == 1);
  CHECK(cs.candidates[0].head == 0);  // P1 and P3 merge on the same head
}

TEST_CASE("P4 emits the adposition's contiguous subtree, capped at 4") {
  // service(NOUN) <-case- out(ADP); out heads {of, this, world}
  const SyntaxAnnotation a = make_annotation(
      {Pos::NOUN, Pos::ADP, Pos::ADP, Pos::OTHER, Pos::NOUN, Pos::NOUN},
      {kRootHead, 0, 1, 4, 1, 0},
      {"root", "case", "case", "det", "obj", "obj"});
  const CandidateSet cs = extract_candidates(a);
  bool found = false;
  for (const Candidate& c : cs.candidates) {
    if (c.head == 1) {
      found = true;
      CHECK(c.pattern == "P4");
      CHECK(c.phrase == std::vector<int>{1, 2, 3, 4});  // capped window
    }
  }
  CHECK(found);
}

TEST_CASE("registry: defaults, registration order, duplicates") {
  PatternRegistry reg = PatternRegistry::builtin();
  REQUIRE(reg.list().size() == 4);
  CHECK(reg.list()[0].name == "P1");
  CHECK(reg.list()[3].name == "P4");

  OpinionRelationPattern custom;
  custom.name = "P5";
  custom.chain = {{{Pos::VERB}, {"advmod"}, {Pos::ADV}}};
  reg.register_pattern(custom);
  REQUIRE(reg.list().size() == 5);
  CHECK(reg.list()[4].name == "P5");

  OpinionRelationPattern dup;
  dup.name = "P1";
  dup.chain = {{{Pos::ADJ}, {}, {Pos::NOUN}}};
  CHECK_THROWS_AS(reg.register_pattern(dup), std::invalid_argument);

  OpinionRelationPattern long_chain;
  long_chain.name = "P6";
  long_chain.chain = {{{Pos::ADJ}, {}, {Pos::NOUN}},
                      {{Pos::NOUN}, {}, {Pos::NOUN}},
                      {{Pos::NOUN}, {}, {Pos::NOUN}}};
  CHECK_THROWS_AS(reg.register_pattern(long_chain), std::invalid_argument);
}

TEST_CASE("mask equals the candidate head set on random annotations") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const SyntaxAnnotation a = testing_oracles::random_annotation(
        rng, 2 + static_cast<int>(rng.below(10)));
    const CandidateSet cs = extract_candidates(a);
    std::set<int> heads;
    for (const Candidate& c : cs.candidates) {
      heads.insert(c.head);
      CHECK(std::find(c.phrase.begin(), c.phrase.end(), c.head) !=
            c.phrase.end());
    }
    CHECK(heads == cs.mask);
    CHECK(heads.size() == cs.candidates.size());  // distinct after merge
  }
}

TEST_CASE("built-in heads are always ADJ or ADP") {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const SyntaxAnnotation a = testing_oracles::random_annotation(
        rng, 2 + static_cast<int>(rng.below(10)));
    for (const Candidate& c : extract_candidates(a).candidates) {
      const Pos p = a.pos[static_cast<std::size_t>(c.head)];
      CHECK((p == Pos::ADJ || p == Pos::ADP));
    }
  }
}

TEST_CASE("registering a pattern never removes existing candidate heads") {
  PatternRegistry base = PatternRegistry::builtin();
  PatternRegistry extended = PatternRegistry::builtin();
  OpinionRelationPattern extra;
  extra.name = "P5";
  extra.chain = {{{Pos::ADV}, {}, {Pos::VERB}}};
  extra.emit = OpinionRelationPattern::Emit::dependent;
  extended.register_pattern(extra);

  SplitMix64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const SyntaxAnnotation a = testing_oracles::random_annotation(
        rng, 2 + static_cast<int>(rng.below(10)));
    const CandidateSet before = base.extract(a);
    const CandidateSet after = extended.extract(a);
    for (int head : before.mask) CHECK(after.mask.count(head) == 1);
  }
}

TEST_CASE("extraction is a pure function of the annotation") {
  SplitMix64 rng(44);
  const SyntaxAnnotation a = testing_oracles::random_annotation(rng, 8);
  CHECK(extract_candidates(a) == extract_candidates(a));
}

TEST_CASE("remove_heads drops excluded heads and shrinks the mask") {
  const SyntaxAnnotation a = make_annotation(
      {Pos::ADJ, Pos::NOUN, Pos::ADJ}, {1, kRootHead, 1},
      {"amod", "root", "amod"});
  CandidateSet cs = extract_candidates(a);
  REQUIRE(cs.mask == std::set<int>{0, 2});
  const CandidateSet filtered = remove_heads(cs, {0});
  CHECK(filtered.mask == std::set<int>{2});
  CHECK(filtered.candidates.size() == 1);
}

TEST_CASE("tsv annotator replays stored parses and rejects unknown text") {
  fixtures::TempDir tmp("tsvann");
  const std::string block =
      "# text: great battery life\n"
      "0\tgreat\t0\tADJ\t2\tamod\n"
      "1\tbattery\t6\tNOUN\t2\tcompound\n"
      "2\tlife\t14\tNOUN\t-1\troot\n";
  const auto path = fixtures::write_file(tmp.path() / "parses.tsv", block);
  TsvAnnotator ann(path);
  const SyntaxAnnotation a = ann.annotate(sent("great battery life"));
  CHECK(a.pos == std::vector<Pos>{Pos::ADJ, Pos::NOUN, Pos::NOUN});
  CHECK(a.head == std::vector<int>{2, 2, kRootHead});
  CHECK_THROWS_AS(ann.annotate(sent("unknown sentence")),
                  std::invalid_argument);
}

TEST_CASE("misaligned annotator offsets raise an error listing them") {
  fixtures::TempDir tmp("tsvbad");
  const std::string block =
      "# text: great battery\n"
      "0\tgreat\t0\tADJ\t1\tamod\n"
      "1\tbattery\t99\tNOUN\t-1\troot\n";
  const auto path = fixtures::write_file(tmp.path() / "parses.tsv", block);
  TsvAnnotator ann(path);
  try {
    ann.annotate(sent("great battery"));
    FAIL("expected a misalignment error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
}

TEST_CASE("annotator registry") {
  CHECK(create_annotator("lexicon")->name() == "lexicon");
  CHECK_THROWS_AS(create_annotator("spacy"), std::invalid_argument);
  CHECK_THROWS_AS(create_annotator("tsv"), std::invalid_argument);
}

TEST_CASE("multi-token words take the first annotator token's tag and head") {
  // word "state-of-the-art" is four annotator tokens; the word tokenizer
  // keeps it as one word
  fixtures::TempDir tmp("tsvmulti");
  const std::string block =
      "# text: state-of-the-art screen\n"
      "0\tstate\t0\tADJ\t4\tamod\n"
      "1\tof\t6\tADP\t0\tcase\n"
      "2\tthe\t9\tOTHER\t0\tdet\n"
      "3\tart\t13\tNOUN\t0\tdep\n"
      "4\tscreen\t17\tNOUN\t-1\troot\n";
  const auto path = fixtures::write_file(tmp.path() / "p.tsv", block);
  TsvAnnotator ann(path);
  const SyntaxAnnotation a = ann.annotate(sent("state-of-the-art screen"));
  REQUIRE(a.size() == 2);
  CHECK(a.pos[0] == Pos::ADJ);
  CHECK(a.head[0] == 1);
  CHECK(a.deprel[0] == "amod");
}

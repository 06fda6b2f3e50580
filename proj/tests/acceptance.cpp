// Acceptance suite: one line per criterion, PASS/FAIL/SKIP, nonzero exit on
// any failure. Criteria 8 and 9 need artifacts from a real encoder run and
// are skipped unless the corresponding environment variables point at them:
//   ABSA_ACCEPT_REAL_RUN     report.csv of an in-domain run (5-seed means)
//   ABSA_ACCEPT_ABLATION_RUN run directory holding cells for both the
//                            adapted and the w/o-adaptation settings

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "absa/attention.hpp"
#include "absa/corpus.hpp"
#include "absa/evaluation.hpp"
#include "absa/mock_backend.hpp"
#include "absa/polarity.hpp"
#include "absa/rng.hpp"
#include "absa/syntax.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace absa;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok,
            const std::string& detail = "") {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << "criterion " << criterion
            << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << '\n';
  if (!ok) ++failures;
}

void skip(int criterion, const std::string& name, const std::string& why) {
  std::cout << "[SKIP] criterion " << criterion << ": " << name << " (" << why
            << ")\n";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// --- criterion 1 -----------------------------------------------------------

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(20240601);
  bool ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MockBackend::Config cfg;
    cfg.seed = rng.next();
    cfg.n_heads = 2 + static_cast<int>(rng.below(7));  // 2..8
    MockBackend mock(cfg);

    const int n_words = 2 + static_cast<int>(rng.below(4));  // 2..5
    std::string text;
    for (int w = 0; w < n_words; ++w) {
      const std::string word = "w" + std::to_string(w);
      mock.rig_subtoken_count(word, 1 + static_cast<int>(rng.below(2)));
      if (w > 0) text += ' ';
      text += word;
    }
    const TokenAlignment alignment = mock.tokenize_with_alignment(text);
    if (alignment.n_subtokens < 4 || alignment.n_subtokens > 12) {
      ok = false;
      break;
    }
    const std::vector<int> layers{0, 1, 2, 3};
    const AttentionView attn = mock.attention_maps(text, layers);

    std::set<int> aspect{static_cast<int>(rng.below(n_words))};
    if (rng.uniform() < 0.3) aspect.insert(static_cast<int>(rng.below(n_words)));

    const AspectQueryScores fast = aspect_scores(attn, alignment, aspect);
    const std::vector<double> slow =
        testing_oracles::brute_force_aspect_scores(attn, alignment, aspect);
    for (int w = 0; w < n_words; ++w) {
      worst = std::max(worst, std::abs(fast.scores(w) -
                                       slow[static_cast<std::size_t>(w)]));
    }
  }
  const double elapsed = seconds_since(start);
  ok = ok && worst < 1e-9 && elapsed < 10.0;
  std::ostringstream detail;
  detail << "max |diff| " << worst << ", " << elapsed << " s";
  report(1, "aggregation matches the brute-force oracle", ok, detail.str());
}

// --- criterion 2 -----------------------------------------------------------

void criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(20240602);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(12));
    AspectQueryScores scores;
    scores.scores = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) {
      scores.scores(i) = rng.below(3) == 0 ? 0.5 : rng.uniform();
    }
    scores.per_layer = {scores.scores};
    scores.layers_used = {0};

    CandidateSet candidates;
    const int mask_size =
        1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    while (static_cast<int>(candidates.mask.size()) < mask_size) {
      const int h = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (candidates.mask.insert(h).second) {
        candidates.candidates.push_back({{h}, h, "P1"});
      }
    }
    const OpinionPrediction p = select_opinion(scores, candidates);
    if (!candidates.mask.count(p.head)) ok = false;
    for (int h : candidates.mask) {
      if (scores.scores(h) > scores.scores(p.head)) ok = false;
      if (scores.scores(h) == scores.scores(p.head) && h < p.head) ok = false;
    }
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 1.0;
  std::ostringstream detail;
  detail << elapsed << " s";
  report(2, "indicator masking and lowest-index tie break", ok, detail.str());
}

// --- criterion 3 -----------------------------------------------------------

SyntaxAnnotation annot(const std::vector<Pos>& pos,
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
  return a;
}

struct PatternCase {
  std::string name;
  SyntaxAnnotation annotation;
  std::set<int> excluded;  // aspect words removed before comparison
  std::vector<Candidate> expected;
};

void criterion_3() {
  const int R = kRootHead;
  std::vector<PatternCase> cases;

  // 1. P1 attributive adjective
  cases.push_back({"P1 attributive",
                   annot({Pos::ADJ, Pos::NOUN}, {1, R}, {"amod", "root"}),
                   {},
                   {{{0}, 0, "P1"}}});
  // 2. P1 predicative link (nmod back to the subject)
  cases.push_back({"P1 predicative",
                   annot({Pos::OTHER, Pos::NOUN, Pos::VERB, Pos::ADJ},
                         {1, 2, R, 1}, {"det", "nsubj", "root", "nmod"}),
                   {},
                   {{{3}, 3, "P1"}}});
  // 3. P2 merges over P1 on the shared ADJ head
  cases.push_back({"P1+P2 merge",
                   annot({Pos::ADV, Pos::ADJ, Pos::NOUN}, {1, 2, R},
                         {"advmod", "amod", "root"}),
                   {},
                   {{{0, 1}, 1, "P2"}}});
  // 4. P3 chain collapses into the P1 candidate (registry order on ties)
  cases.push_back({"P3 subsumed by P1",
                   annot({Pos::ADJ, Pos::NOUN, Pos::NOUN}, {1, 2, R},
                         {"amod", "compound", "root"}),
                   {},
                   {{{0}, 0, "P1"}}});
  // 5. P4 on a case arc; leaf adposition emits itself
  cases.push_back({"P4 leaf",
                   annot({Pos::NOUN, Pos::ADP, Pos::NOUN}, {R, 2, 0},
                         {"root", "case", "obj"}),
                   {},
                   {{{1}, 1, "P4"}}});
  // 6. P4 subtree window capped at four words; the inner ADP's arc head is
  // another ADP, so it is not itself a candidate
  cases.push_back(
      {"P4 capped subtree",
       annot({Pos::NOUN, Pos::ADP, Pos::ADP, Pos::OTHER, Pos::NOUN, Pos::NOUN},
             {R, 0, 1, 4, 1, 0},
             {"root", "case", "case", "det", "obj", "obj"}),
       {},
       {{{1, 2, 3, 4}, 1, "P4"}}});
  // 7. exclusion: the only candidate head is the aspect word
  cases.push_back({"exclusion empties the mask",
                   annot({Pos::ADJ, Pos::NOUN}, {1, R}, {"amod", "root"}),
                   {0},
                   {}});
  // 8. exclusion keeps the other head
  cases.push_back({"exclusion keeps others",
                   annot({Pos::ADJ, Pos::NOUN, Pos::ADJ}, {1, R, 1},
                         {"amod", "root", "amod"}),
                   {0},
                   {{{2}, 2, "P1"}}});
  // 9. no modifier arcs, empty set
  cases.push_back({"empty",
                   annot({Pos::NOUN, Pos::VERB, Pos::NOUN}, {1, R, 1},
                         {"nsubj", "root", "obj"}),
                   {},
                   {}});
  // 10. P2 without any noun present
  cases.push_back({"P2 bare",
                   annot({Pos::ADV, Pos::ADJ}, {1, R}, {"advmod", "root"}),
                   {},
                   {{{0, 1}, 1, "P2"}}});
  // 11. relation outside the modifier set produces nothing
  cases.push_back({"non-mod relation",
                   annot({Pos::ADJ, Pos::NOUN}, {1, R}, {"nsubj", "root"}),
                   {},
                   {}});
  // 12. two independent candidates across pattern kinds
  cases.push_back(
      {"mixed P2 and P4",
       annot({Pos::ADV, Pos::ADJ, Pos::NOUN, Pos::ADP, Pos::NOUN},
             {1, 2, R, 4, 2}, {"advmod", "amod", "root", "case", "nmod"}),
       {},
       {{{0, 1}, 1, "P2"}, {{3}, 3, "P4"}}});

  bool ok = cases.size() == 12;
  std::string first_bad;
  for (const PatternCase& c : cases) {
    const CandidateSet got =
        remove_heads(extract_candidates(c.annotation), c.excluded);
    std::set<int> expected_mask;
    for (const Candidate& e : c.expected) expected_mask.insert(e.head);
    const bool match =
        got.candidates == c.expected && got.mask == expected_mask;
    if (!match && first_bad.empty()) first_bad = c.name;
    ok = ok && match;
  }
  report(3, "pattern suite over 12 golden parses", ok,
         ok ? "exact match" : "first mismatch: " + first_bad);
}

// --- criterion 4 -----------------------------------------------------------

void criterion_4() {
  SplitMix64 rng(20240604);
  bool ok = true;

  PolarityLabelSet labels;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
    v(i) = 1.0;
    labels.vectors[static_cast<std::size_t>(i)].values = v;
  }

  // closed-form basis cases
  {
    EmbeddingVector h;
    h.values = Eigen::VectorXd(3);
    h.values << 0.9, 0.1, 0.0;
    const PolarityPrediction p = assign_polarity(h, labels);
    const double norm = std::sqrt(0.81 + 0.01);
    ok = ok && p.label == Polarity::positive &&
         std::abs(p.similarities[0] - 0.9 / norm) < 1e-12 &&
         std::abs(p.similarities[1] - 0.1 / norm) < 1e-12 &&
         std::abs(p.similarities[2]) < 1e-12;
  }
  {
    EmbeddingVector tie;
    tie.values = Eigen::VectorXd(3);
    tie.values << 0.5, 0.5, 0.0;
    ok = ok && assign_polarity(tie, labels).label == Polarity::positive;
  }

  for (int trial = 0; trial < 1000 && ok; ++trial) {
    PolarityLabelSet rnd;
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd v(8);
      for (int d = 0; d < 8; ++d) v(d) = rng.uniform(-1, 1);
      rnd.vectors[static_cast<std::size_t>(i)].values = v;
    }
    EmbeddingVector h;
    h.values = Eigen::VectorXd(8);
    for (int d = 0; d < 8; ++d) h.values(d) = rng.uniform(-1, 1);
    if (h.values.norm() == 0.0) continue;

    const PolarityPrediction base = assign_polarity(h, rnd);
    EmbeddingVector scaled;
    scaled.values = h.values * rng.uniform(0.1, 100.0);
    const PolarityPrediction scaled_p = assign_polarity(scaled, rnd);
    ok = ok && base.label == scaled_p.label;
    for (int i = 0; i < 3 && ok; ++i) {
      ok = std::abs(base.similarities[static_cast<std::size_t>(i)] -
                    scaled_p.similarities[static_cast<std::size_t>(i)]) < 1e-12;
    }
    // determinism of the tie rule: rerunning gives the identical label
    ok = ok && assign_polarity(h, rnd).label == base.label;
  }
  report(4, "polarity scale invariance and tie-break determinism", ok);
}

// --- criterion 5 -----------------------------------------------------------

void criterion_5() {
  SplitMix64 rng(20240605);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    std::vector<InstanceResult> results;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      InstanceResult r;
      r.gold_opinion_texts = {"x"};
      r.gold_polarity = Polarity::positive;
      r.aooe_correct = rng.below(2) == 0;
      r.atsc_correct = rng.below(2) == 0;
      results.push_back(std::move(r));
    }
    const TaskScores s = score(results);
    ok = *s.aoospe <= std::min(*s.aooe, *s.atsc) + 1e-12;
  }

  // published reference rows (accuracy x100) obey the same inequality
  struct Row {
    const char* dataset;
    double aooe, atsc, aoospe;
  };
  const Row rows[] = {{"L14", 51.98, 54.34, 51.76},
                      {"R14", 62.84, 62.13, 61.39},
                      {"R15", 65.32, 61.78, 61.25},
                      {"R16", 66.67, 61.93, 60.95}};
  for (const Row& r : rows) {
    ok = ok && r.aoospe <= std::min(r.aooe, r.atsc);
  }
  report(5, "AOOSPE <= min(AOOE, ATSC) on random sets and reference rows", ok);
}

// --- criterion 6 -----------------------------------------------------------

void criterion_6() {
#ifndef ABSA_CLI_PATH
  report(6, "matrix determinism", false, "CLI path not compiled in");
#else
  fixtures::TempDir tmp("accept6");
  write_jsonl(fixtures::toy_laptop(), tmp.path() / "l14.jsonl");
  write_jsonl(fixtures::toy_restaurant(), tmp.path() / "r14.jsonl");
  fixtures::write_file(tmp.path() / "plan.cfg",
                       "plan.in.setting=in_domain\n"
                       "plan.in.adaptation=without\n"
                       "plan.in.test=L14,R14\n"
                       "plan.in.seeds=1,2,3,4,5\n");
  auto run = [&](const std::string& out) {
    const std::string cmd = std::string(ABSA_CLI_PATH) + " matrix --plan " +
                            (tmp.path() / "plan.cfg").string() + " --data " +
                            (tmp.path() / "l14.jsonl").string() + " --data " +
                            (tmp.path() / "r14.jsonl").string() + " --out " +
                            (tmp.path() / out).string() + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = run("a") && run("b");

  int compared = 0;
  if (ok) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(
             tmp.path() / "a")) {
      if (entry.path().filename() != "metrics.json") continue;
      const std::string rel =
          std::filesystem::relative(entry.path(), tmp.path() / "a").string();
      std::ifstream fa(entry.path(), std::ios::binary);
      std::ifstream fb(tmp.path() / "b" / rel, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str() != sb.str() || sa.str().empty()) ok = false;
      ++compared;
    }
    ok = ok && compared == 10;  // 2 datasets x 5 seeds
  }
  report(6, "matrix runs twice with byte-identical metrics.json", ok,
         std::to_string(compared) + " cells compared");
#endif
}

// --- criterion 7 -----------------------------------------------------------

void criterion_7() {
  MockBackend mock;
  mock.corrupt_attention_rows(1.1);
  const std::vector<int> layers{0, 1, 2, 3};
  const std::string text = "the battery died";
  const TokenAlignment alignment = mock.tokenize_with_alignment(text);
  const AttentionView attn = mock.attention_maps(text, layers);
  bool ok = false;
  std::string detail = "no error raised";
  try {
    aspect_scores(attn, alignment, {1});
  } catch (const std::invalid_argument& e) {
    ok = std::string(e.what()).find("row-stochasticity") != std::string::npos;
    detail = ok ? "rejected with the row-sum error" : e.what();
  }
  report(7, "corrupted attention rows are rejected", ok, detail);
}

// --- criteria 8 and 9 (require a real encoder run) -------------------------

struct ReferenceRow {
  const char* task;
  const char* dataset;
  double accuracy_x100;
};

const ReferenceRow kReferenceRows[] = {
    {"aooe", "L14", 51.98},  {"aooe", "R14", 62.84},  {"aooe", "R15", 65.32},
    {"aooe", "R16", 66.67},  {"atsc", "L14", 54.34},  {"atsc", "R14", 62.13},
    {"atsc", "R15", 61.78},  {"atsc", "R16", 61.93},  {"aoospe", "L14", 51.76},
    {"aoospe", "R14", 61.39},{"aoospe", "R15", 61.25},{"aoospe", "R16", 60.95}};

void criterion_8() {
  const char* env = std::getenv("ABSA_ACCEPT_REAL_RUN");
  if (env == nullptr) {
    skip(8, "quantitative reproduction within +/-5 points",
         "needs ABSA_ACCEPT_REAL_RUN=<report.csv> from a real encoder run");
    return;
  }
  std::ifstream in(env);
  if (!in) {
    report(8, "quantitative reproduction within +/-5 points", false,
           std::string("cannot read ") + env);
    return;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  const MetricsReport run = parse_report_csv(ss.str());

  bool ok = true;
  int matched = 0;
  std::ostringstream detail;
  for (const ReferenceRow& ref : kReferenceRows) {
    for (const MeanRow& m : run.means) {
      if (m.task != ref.task || m.dataset != ref.dataset) continue;
      if (m.setting.find("w/o") != std::string::npos) continue;
      ++matched;
      const double delta = std::abs(m.accuracy * 100.0 - ref.accuracy_x100);
      if (delta > 5.0) {
        ok = false;
        detail << ref.task << "/" << ref.dataset << " off by " << delta << "; ";
      }
    }
  }
  ok = ok && matched > 0;
  report(8, "quantitative reproduction within +/-5 points", ok,
         detail.str().empty() ? std::to_string(matched) + " cells in band"
                              : detail.str());
}

void criterion_9() {
  const char* env = std::getenv("ABSA_ACCEPT_ABLATION_RUN");
  if (env == nullptr) {
    skip(9, "adaptation ablation direction",
         "needs ABSA_ACCEPT_ABLATION_RUN=<run dir> with both settings");
    return;
  }
  MetricsReport run;
  try {
    run = assemble_report(env);
  } catch (const std::exception& e) {
    report(9, "adaptation ablation direction", false, e.what());
    return;
  }
  // with-adaptation mean >= without mean on >= 2 of 3 tasks for some dataset
  std::set<std::string> datasets;
  for (const MeanRow& m : run.means) datasets.insert(m.dataset);
  bool any_dataset_ok = false;
  for (const std::string& ds : datasets) {
    int better = 0, pairs = 0;
    for (const char* task : {"aooe", "atsc", "aoospe"}) {
      const MeanRow* with = nullptr;
      const MeanRow* without = nullptr;
      for (const MeanRow& m : run.means) {
        if (m.task != task || m.dataset != ds) continue;
        if (m.setting.find("w/o") != std::string::npos) without = &m;
        else with = &m;
      }
      if (with && without) {
        ++pairs;
        if (with->accuracy >= without->accuracy) ++better;
      }
    }
    if (pairs == 3 && better >= 2) any_dataset_ok = true;
  }
  report(9, "adaptation ablation direction", any_dataset_ok);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all gating criteria passed\n";
  return 0;
}

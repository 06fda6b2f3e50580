#include "absa/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "absa/corpus.hpp"
#include "absa/errors.hpp"

namespace absa {

using json = nlohmann::json;

std::string normalize_opinion_text(std::string_view text) {
  std::string out;
  bool in_gap = true;
  for (char c : to_lower(text)) {
    if (c == ' ' || c == '\t' || c == '\n') {
      in_gap = true;
      continue;
    }
    if (in_gap && !out.empty()) out += ' ';
    in_gap = false;
    out += c;
  }
  return out;
}

TaskScores score(const std::vector<InstanceResult>& results) {
  if (results.empty()) {
    throw std::invalid_argument("score: empty result list");
  }
  TaskScores s;
  int aooe_hits = 0, atsc_hits = 0, aoospe_hits = 0;
  for (const InstanceResult& r : results) {
    if (r.aooe_eligible()) {
      ++s.n_aooe;
      if (r.aooe_correct) ++aooe_hits;
    }
    if (r.atsc_eligible()) {
      ++s.n_atsc;
      if (r.atsc_correct) ++atsc_hits;
    }
    if (r.aoospe_eligible()) {
      ++s.n_aoospe;
      if (r.aoospe_correct()) ++aoospe_hits;
    }
  }
  if (s.n_aooe > 0) s.aooe = static_cast<double>(aooe_hits) / s.n_aooe;
  if (s.n_atsc > 0) s.atsc = static_cast<double>(atsc_hits) / s.n_atsc;
  if (s.n_aoospe > 0) s.aoospe = static_cast<double>(aoospe_hits) / s.n_aoospe;

  // Consistency tripwire, checked on every scored run: over the instances
  // eligible for both tasks, pair accuracy can never beat either part.
  // (Across differing denominators the comparison is not meaningful.)
  if (s.aoospe) {
    int both_aooe = 0, both_atsc = 0;
    for (const InstanceResult& r : results) {
      if (!r.aoospe_eligible()) continue;
      if (r.aooe_correct) ++both_aooe;
      if (r.atsc_correct) ++both_atsc;
    }
    const double floor = std::min(both_aooe, both_atsc) /
                         static_cast<double>(s.n_aoospe);
    if (*s.aoospe > floor + 1e-12) {
      throw std::logic_error("scoring bug: AOOSPE exceeds min(AOOE, ATSC) "
                             "on the shared instance set");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Pipeline composition
// ---------------------------------------------------------------------------

InstanceResult run_instance(const PipelineComponents& pipeline,
                            const PolarityLabelSet& labels,
                            const RawSentence& sentence,
                            const AspectInstance& aspect,
                            AspectQueryScores* trace_out) {
  InstanceResult result;
  result.sentence_id = aspect.sentence_id;
  result.aspect_text = aspect.aspect_text;
  result.aspect_from = aspect.aspect_span.from;
  result.gold_polarity = aspect.gold_polarity;
  for (const CharSpan& span : aspect.gold_opinions) {
    result.gold_opinion_texts.push_back(
        sentence.text.substr(span.from, span.length()));
  }

  ExtractionTrace trace =
      extract_opinion_trace(sentence, aspect, *pipeline.backend,
                            *pipeline.annotator, *pipeline.patterns,
                            pipeline.options);
  result.opinion = std::move(trace.prediction);
  if (trace_out != nullptr) *trace_out = std::move(trace.scores);

  const PolarityPrediction polarity =
      classify_instance(result.opinion, sentence, *pipeline.backend, labels,
                        pipeline.polarity_margin);
  result.predicted_polarity = polarity.label;
  result.similarities = polarity.similarities;

  const std::string predicted = normalize_opinion_text(result.opinion.text);
  for (const std::string& gold : result.gold_opinion_texts) {
    if (!predicted.empty() && predicted == normalize_opinion_text(gold)) {
      result.aooe_correct = true;
      break;
    }
  }
  result.atsc_correct = result.gold_polarity.has_value() &&
                        result.predicted_polarity == result.gold_polarity;
  return result;
}

std::vector<InstanceResult> run_dataset(const PipelineComponents& pipeline,
                                        const Dataset& dataset, Split split) {
  const PolarityLabelSet labels = PolarityLabelSet::from_backend(
      *pipeline.backend, pipeline.label_template);
  std::vector<InstanceResult> results;
  for (const AspectInstance& inst : dataset.instances) {
    const RawSentence* sentence = dataset.find_sentence(inst.sentence_id);
    if (sentence == nullptr || sentence->split != split) continue;
    results.push_back(run_instance(pipeline, labels, *sentence, inst));
  }
  return results;
}

namespace {

json result_to_json(const InstanceResult& r) {
  json j{{"sentence_id", r.sentence_id},
         {"aspect", r.aspect_text},
         {"aspect_from", r.aspect_from},
         {"predicted_opinion", r.opinion.text},
         {"head_index", r.opinion.head},
         {"score", r.opinion.score},
         {"fallback", std::string(to_string(r.opinion.fallback))}};
  if (r.predicted_polarity) {
    j["polarity"] = std::string(to_string(*r.predicted_polarity));
    j["sim_pos"] = r.similarities[0];
    j["sim_neg"] = r.similarities[1];
    j["sim_neu"] = r.similarities[2];
  }
  return j;
}

}  // namespace

void write_predictions_jsonl(const std::vector<InstanceResult>& results,
                             const std::filesystem::path& path,
                             bool dump_attention,
                             const std::vector<AspectQueryScores>* traces) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < results.size(); ++i) {
    json j = result_to_json(results[i]);
    if (dump_attention && traces != nullptr && i < traces->size()) {
      const Eigen::VectorXd& v = (*traces)[i].scores;
      j["attention_scores"] = std::vector<double>(v.data(), v.data() + v.size());
    }
    out << j.dump() << '\n';
  }
}

std::vector<InstanceResult> load_predictions(
    const Dataset& dataset, const std::filesystem::path& predictions,
    Split split) {
  if (!std::filesystem::exists(predictions)) {
    throw IoError("no such file: " + predictions.string());
  }
  std::ifstream in(predictions);
  std::map<std::pair<std::string, int>, json> by_key;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("bad predictions JSONL: " + std::string(e.what()),
                       line_no);
    }
    std::pair<std::string, int> key{j.at("sentence_id").get<std::string>(),
                                    j.at("aspect_from").get<int>()};
    by_key[std::move(key)] = std::move(j);
  }

  std::vector<InstanceResult> results;
  for (const AspectInstance& inst : dataset.instances) {
    const RawSentence* sentence = dataset.find_sentence(inst.sentence_id);
    if (sentence == nullptr || sentence->split != split) continue;
    const auto it = by_key.find({inst.sentence_id, inst.aspect_span.from});
    if (it == by_key.end()) continue;
    const json& j = it->second;

    InstanceResult r;
    r.sentence_id = inst.sentence_id;
    r.aspect_text = inst.aspect_text;
    r.aspect_from = inst.aspect_span.from;
    r.gold_polarity = inst.gold_polarity;
    for (const CharSpan& span : inst.gold_opinions) {
      r.gold_opinion_texts.push_back(
          sentence->text.substr(span.from, span.length()));
    }
    r.opinion.text = j.at("predicted_opinion").get<std::string>();
    r.opinion.head = j.at("head_index").get<int>();
    r.opinion.score = j.at("score").get<double>();
    r.opinion.fallback =
        fallback_from_string(j.at("fallback").get<std::string>());
    if (j.contains("polarity")) {
      r.predicted_polarity =
          polarity_from_string(j.at("polarity").get<std::string>());
      r.similarities = {j.value("sim_pos", 0.0), j.value("sim_neg", 0.0),
                        j.value("sim_neu", 0.0)};
    }
    const std::string predicted = normalize_opinion_text(r.opinion.text);
    for (const std::string& gold : r.gold_opinion_texts) {
      if (!predicted.empty() && predicted == normalize_opinion_text(gold)) {
        r.aooe_correct = true;
        break;
      }
    }
    r.atsc_correct = r.gold_polarity.has_value() &&
                     r.predicted_polarity == r.gold_polarity;
    results.push_back(std::move(r));
  }
  return results;
}

// ---------------------------------------------------------------------------
// Experiment matrix
// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentPlan::Setting s) {
  switch (s) {
    case ExperimentPlan::Setting::in_domain: return "in_domain";
    case ExperimentPlan::Setting::cross_domain: return "cross_domain";
    case ExperimentPlan::Setting::joint_domain: return "joint_domain";
  }
  return "in_domain";
}

std::string_view to_string(ExperimentPlan::Adaptation a) {
  switch (a) {
    case ExperimentPlan::Adaptation::with: return "with";
    case ExperimentPlan::Adaptation::without: return "without";
    case ExperimentPlan::Adaptation::massive: return "massive";
  }
  return "with";
}

namespace {

char domain_letter(Domain d) {
  switch (d) {
    case Domain::laptop: return 'L';
    case Domain::restaurant: return 'R';
    case Domain::other: return 'O';
  }
  return 'O';
}

std::string train_letters(const ExperimentPlan& plan) {
  std::set<char> letters;
  for (const std::string& name : plan.train_datasets) {
    letters.insert(domain_letter(domain_for_dataset(name)));
  }
  std::string out;
  for (char c : letters) {
    if (!out.empty()) out += '+';
    out += c;
  }
  return out;
}

std::string fraction_suffix(const std::optional<double>& fraction) {
  if (!fraction) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), " @%d%% labeled",
                static_cast<int>(std::lround(*fraction * 100.0)));
  return buf;
}

std::string sanitize_for_path(std::string s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
        c == '.') {
      out += c;
    } else if (c == '>') {
      out += "to";
    } else if (c == '+') {
      out += '+';
    } else {
      out += '_';
    }
  }
  return out;
}

}  // namespace

void ExperimentPlan::validate(
    const std::map<std::string, Dataset>& datasets) const {
  if (seeds.empty()) throw std::invalid_argument("plan " + id + ": no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
      seeds.size()) {
    throw std::invalid_argument("plan " + id + ": duplicate seeds");
  }
  if (test_datasets.empty()) {
    throw std::invalid_argument("plan " + id + ": no test datasets");
  }
  if (adaptation != Adaptation::without && train_datasets.empty() &&
      corpus_paths.empty()) {
    throw std::invalid_argument("plan " + id + ": adaptation needs train data");
  }
  if (adaptation == Adaptation::massive && corpus_paths.empty()) {
    throw std::invalid_argument("plan " + id +
                                ": massive adaptation needs corpus paths");
  }
  for (const std::string& name : test_datasets) {
    if (!datasets.count(name)) {
      throw std::invalid_argument("plan " + id + ": unknown dataset " + name);
    }
  }
  for (const std::string& name : train_datasets) {
    if (!datasets.count(name)) {
      throw std::invalid_argument("plan " + id + ": unknown dataset " + name);
    }
  }
  if (setting == Setting::cross_domain) {
    for (const std::string& tr : train_datasets) {
      for (const std::string& te : test_datasets) {
        if (domain_for_dataset(tr) == domain_for_dataset(te)) {
          throw std::invalid_argument(
              "plan " + id + ": cross_domain requires different domains (" +
              tr + " vs " + te + ")");
        }
      }
    }
  }
  if (labeled_fraction &&
      (!(*labeled_fraction > 0.0) || *labeled_fraction > 1.0)) {
    throw std::invalid_argument("plan " + id +
                                ": labeled_fraction must be in (0, 1]");
  }
}

std::string ExperimentPlan::setting_label() const {
  std::string label(to_string(setting));
  if (setting != Setting::in_domain) {
    const std::string letters = train_letters(*this);
    if (!letters.empty()) label += " " + letters + "->*";
  }
  if (adaptation == Adaptation::without) label += " w/o adaptation";
  if (adaptation == Adaptation::massive) label += " massive";
  label += fraction_suffix(labeled_fraction);
  return label;
}

std::string ExperimentPlan::cell_label(const std::string& test_dataset) const {
  std::string label;
  if (setting == Setting::in_domain) {
    label = test_dataset;
  } else {
    label = train_letters(*this) + "->" + test_dataset;
  }
  if (adaptation == Adaptation::without) label += " (w/o da)";
  if (adaptation == Adaptation::massive) label += " (massive)";
  label += fraction_suffix(labeled_fraction);
  return label;
}

void MetricsReport::finalize() {
  std::sort(per_seed.begin(), per_seed.end(),
            [](const MetricsRow& a, const MetricsRow& b) {
              return std::tie(a.task, a.dataset, a.setting, a.seed) <
                     std::tie(b.task, b.dataset, b.setting, b.seed);
            });
  means.clear();
  std::size_t i = 0;
  while (i < per_seed.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < per_seed.size() && per_seed[j].task == per_seed[i].task &&
           per_seed[j].dataset == per_seed[i].dataset &&
           per_seed[j].setting == per_seed[i].setting) {
      sum += per_seed[j].accuracy;
      ++j;
    }
    means.push_back({per_seed[i].task, per_seed[i].dataset, per_seed[i].setting,
                     sum / static_cast<double>(j - i), static_cast<int>(j - i)});
    i = j;
  }
}

namespace {

json metrics_rows_to_json(const std::vector<MetricsRow>& rows) {
  json arr = json::array();
  for (const MetricsRow& r : rows) {
    arr.push_back(json{{"task", r.task},
                       {"dataset", r.dataset},
                       {"setting", r.setting},
                       {"seed", r.seed},
                       {"accuracy", r.accuracy},
                       {"n_eligible", r.n_eligible}});
  }
  return arr;
}

std::vector<MetricsRow> metrics_rows_from_json(const json& arr) {
  std::vector<MetricsRow> rows;
  for (const json& j : arr) {
    rows.push_back({j.at("task").get<std::string>(),
                    j.at("dataset").get<std::string>(),
                    j.at("setting").get<std::string>(),
                    j.at("seed").get<std::uint64_t>(),
                    j.at("accuracy").get<double>(),
                    j.at("n_eligible").get<int>()});
  }
  return rows;
}

struct CellJob {
  const ExperimentPlan* plan;
  std::uint64_t seed;
  std::string test_dataset;
  std::filesystem::path dir;
};

std::vector<MetricsRow> run_cell(const CellJob& job,
                                 const ExperimentContext& ctx,
                                 const ModelBackend& backend) {
  const ExperimentPlan& plan = *job.plan;
  const Dataset& dataset = ctx.datasets->at(job.test_dataset);
  const std::string setting = plan.setting_label();
  std::vector<MetricsRow> rows;

  if (plan.labeled_fraction) {
    FinetuneResult ft = finetune_atsc(dataset, *plan.labeled_fraction, backend,
                                      ctx.adapt, job.seed);
    rows.push_back({"atsc", job.test_dataset, setting, job.seed, ft.accuracy,
                    ft.n_test});
    std::ofstream pred(job.dir / "predictions.jsonl");  // fine-tune path: no
                                                        // extraction dump
    return rows;
  }

  PipelineComponents pipeline;
  pipeline.backend = &backend;
  pipeline.annotator = ctx.annotator;
  pipeline.patterns = ctx.patterns;
  pipeline.options = ctx.pipeline;
  pipeline.polarity_margin = ctx.polarity_margin;
  pipeline.label_template = ctx.label_template;

  const std::vector<InstanceResult> results =
      run_dataset(pipeline, dataset, Split::test);
  write_predictions_jsonl(results, job.dir / "predictions.jsonl");
  if (results.empty()) return rows;

  const TaskScores s = score(results);
  if (s.aooe) {
    rows.push_back(
        {"aooe", job.test_dataset, setting, job.seed, *s.aooe, s.n_aooe});
  }
  if (s.atsc) {
    rows.push_back(
        {"atsc", job.test_dataset, setting, job.seed, *s.atsc, s.n_atsc});
  }
  if (s.aoospe) {
    rows.push_back(
        {"aoospe", job.test_dataset, setting, job.seed, *s.aoospe, s.n_aoospe});
  }
  return rows;
}

}  // namespace

MetricsReport run_experiment(const ExperimentPlan& plan,
                             const ExperimentContext& ctx) {
  plan.validate(*ctx.datasets);
  MetricsReport report;
  report.model_name = ctx.base_backend->name();
  report.config_hash = ctx.config_hash;

  // adaptation corpus shared by every seed of this plan
  TextCorpus corpus;
  if (plan.adaptation != ExperimentPlan::Adaptation::without) {
    std::vector<const Dataset*> sources;
    for (const std::string& name : plan.train_datasets) {
      sources.push_back(&ctx.datasets->at(name));
    }
    corpus = build_adaptation_corpus(sources, plan.corpus_paths);
  }

  std::mutex mu;
  std::vector<std::string> cell_errors;

  auto run_seed = [&](std::uint64_t seed) {
    // one adapted state per seed, shared across the plan's test sets
    std::unique_ptr<ModelBackend> adapted;
    const ModelBackend* backend = ctx.base_backend;
    if (plan.adaptation != ExperimentPlan::Adaptation::without) {
      AdaptationConfig cfg = ctx.adapt;
      cfg.seed = seed;
      const std::filesystem::path model_dir =
          ctx.run_dir / "models" /
          (sanitize_for_path(plan.id) + "_s" + std::to_string(seed));
      try {
        adapted = ctx.base_backend->domain_adapt(corpus, cfg, model_dir);
        backend = adapted.get();
      } catch (const CapabilityError& e) {
        std::lock_guard<std::mutex> lock(mu);
        cell_errors.push_back(std::string(e.what()) +
                              "; continuing without adaptation");
      }
    }

    for (const std::string& test_name : plan.test_datasets) {
      CellJob job;
      job.plan = &plan;
      job.seed = seed;
      job.test_dataset = test_name;
      job.dir = ctx.run_dir / "cells" /
                sanitize_for_path(plan.id + "_" + plan.cell_label(test_name) +
                                  "_s" + std::to_string(seed));
      std::filesystem::create_directories(job.dir);

      const std::filesystem::path metrics_path = job.dir / "metrics.json";
      std::vector<MetricsRow> rows;
      bool reused = false;
      if (std::filesystem::exists(metrics_path)) {
        try {
          std::ifstream in(metrics_path);
          json arr = json::parse(in);
          rows = metrics_rows_from_json(arr);
          reused = true;
        } catch (const json::exception&) {
          rows.clear();  // corrupt cell: recompute
        }
      }
      if (!reused) {
        rows = run_cell(job, ctx, *backend);
        std::ofstream out(metrics_path);
        out << metrics_rows_to_json(rows).dump(2) << '\n';
      }
      std::lock_guard<std::mutex> lock(mu);
      if (ctx.verbose) {
        std::cout << "cell " << plan.cell_label(test_name) << " seed " << seed
                  << (reused ? " (cached)" : "") << "\n";
      }
      report.per_seed.insert(report.per_seed.end(), rows.begin(), rows.end());
    }
  };

  if (ctx.jobs <= 1 || plan.seeds.size() <= 1) {
    for (std::uint64_t seed : plan.seeds) run_seed(seed);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex next_mu;
    const int workers =
        std::min<int>(ctx.jobs, static_cast<int>(plan.seeds.size()));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        while (true) {
          std::size_t idx;
          {
            std::lock_guard<std::mutex> lock(next_mu);
            if (next >= plan.seeds.size()) return;
            idx = next++;
          }
          run_seed(plan.seeds[idx]);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (const std::string& err : cell_errors) {
    std::ofstream log(ctx.run_dir / "run.log", std::ios::app);
    log << "[plan " << plan.id << "] " << err << '\n';
  }
  report.finalize();
  return report;
}

MetricsReport run_matrix(const std::vector<ExperimentPlan>& plans,
                         const ExperimentContext& ctx) {
  MetricsReport merged;
  merged.model_name = ctx.base_backend->name();
  merged.config_hash = ctx.config_hash;
  for (const ExperimentPlan& plan : plans) {
    MetricsReport part = run_experiment(plan, ctx);
    merged.per_seed.insert(merged.per_seed.end(), part.per_seed.begin(),
                           part.per_seed.end());
  }
  merged.finalize();

  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  merged.timestamp = buf;

  std::filesystem::create_directories(ctx.run_dir);
  {
    std::ofstream md(ctx.run_dir / "report.md");
    md << render_report(merged, ReportFormat::markdown);
  }
  {
    std::ofstream csv(ctx.run_dir / "report.csv");
    csv << render_report(merged, ReportFormat::csv);
  }
  return merged;
}

MetricsReport assemble_report(const std::filesystem::path& run_dir) {
  const std::filesystem::path cells = run_dir / "cells";
  if (!std::filesystem::exists(cells)) {
    throw IoError("no cells directory under " + run_dir.string());
  }
  MetricsReport report;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(cells)) {
    const std::filesystem::path metrics = entry.path() / "metrics.json";
    if (std::filesystem::exists(metrics)) files.push_back(metrics);
  }
  std::sort(files.begin(), files.end());
  for (const std::filesystem::path& f : files) {
    std::ifstream in(f);
    json arr;
    try {
      arr = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError("bad metrics file " + f.string() + ": " + e.what());
    }
    const std::vector<MetricsRow> rows = metrics_rows_from_json(arr);
    report.per_seed.insert(report.per_seed.end(), rows.begin(), rows.end());
  }
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// Labeled-fraction fine-tuning
// ---------------------------------------------------------------------------

namespace {

std::string classification_input(const std::string& sentence,
                                 const std::string& aspect) {
  return sentence + " [SEP] " + aspect;
}

}  // namespace

FinetuneResult finetune_atsc(const Dataset& dataset, double fraction,
                             const ModelBackend& backend,
                             const AdaptationConfig& config,
                             std::uint64_t seed) {
  const Dataset sampled = sample_labeled_fraction(dataset, fraction, seed);

  std::vector<std::string> train_texts;
  std::vector<Polarity> train_labels;
  for (const AspectInstance& inst : sampled.instances) {
    const RawSentence* s = sampled.find_sentence(inst.sentence_id);
    if (s == nullptr || s->split != Split::train || !inst.gold_polarity) {
      continue;
    }
    train_texts.push_back(classification_input(s->text, inst.aspect_text));
    train_labels.push_back(*inst.gold_polarity);
  }
  if (train_texts.empty()) {
    throw std::invalid_argument("no labeled train instances to fine-tune on");
  }

  AdaptationConfig cfg = config;
  cfg.seed = seed;
  FinetuneResult result;
  result.classifier = backend.train_classifier(train_texts, train_labels, cfg);
  result.n_train = static_cast<int>(train_texts.size());

  int hits = 0;
  for (const AspectInstance& inst : dataset.instances) {
    const RawSentence* s = dataset.find_sentence(inst.sentence_id);
    if (s == nullptr || s->split != Split::test || !inst.gold_polarity) {
      continue;
    }
    ++result.n_test;
    if (result.classifier->predict(
            classification_input(s->text, inst.aspect_text)) ==
        *inst.gold_polarity) {
      ++hits;
    }
  }
  result.accuracy =
      result.n_test > 0 ? static_cast<double>(hits) / result.n_test : 0.0;
  return result;
}

std::vector<std::pair<double, double>> labeled_fraction_curve(
    const Dataset& dataset, const std::vector<double>& fractions,
    const ModelBackend& backend, const AdaptationConfig& config,
    std::uint64_t seed) {
  std::vector<std::pair<double, double>> curve;
  for (double f : fractions) {
    curve.emplace_back(f,
                       finetune_atsc(dataset, f, backend, config, seed).accuracy);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

const char* kTasks[] = {"aooe", "atsc", "aoospe"};
const char* kTaskTitles[] = {"AOOE", "ATSC", "AOOSPE"};

}  // namespace

std::string render_report(const MetricsReport& report, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "task,dataset,setting,seed,accuracy,n\n";
    for (const MetricsRow& r : report.per_seed) {
      out << r.task << ',' << r.dataset << ',' << r.setting << ',' << r.seed
          << ',' << format_full(r.accuracy) << ',' << r.n_eligible << '\n';
    }
    for (const MeanRow& m : report.means) {
      out << m.task << ',' << m.dataset << ',' << m.setting << ",mean,"
          << format_full(m.accuracy) << ',' << m.n_seeds << '\n';
    }
    return out.str();
  }

  out << "# Results\n\n";
  if (!report.model_name.empty()) out << "- model: " << report.model_name << '\n';
  if (!report.config_hash.empty()) {
    out << "- config: " << report.config_hash << '\n';
  }
  if (!report.timestamp.empty()) out << "- generated: " << report.timestamp << '\n';
  out << '\n';

  bool any_task = false;
  std::vector<std::string> empty_tasks;
  for (int t = 0; t < 3; ++t) {
    std::vector<const MeanRow*> rows;
    std::set<std::string> datasets;
    std::vector<std::string> settings;  // stable first-seen order
    for (const MeanRow& m : report.means) {
      if (m.task != kTasks[t]) continue;
      rows.push_back(&m);
      datasets.insert(m.dataset);
      if (std::find(settings.begin(), settings.end(), m.setting) ==
          settings.end()) {
        settings.push_back(m.setting);
      }
    }
    if (rows.empty()) {
      empty_tasks.push_back(kTaskTitles[t]);
      continue;
    }
    any_task = true;
    out << "## " << kTaskTitles[t] << "\n\n";
    out << "| setting |";
    for (const std::string& d : datasets) out << ' ' << d << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < datasets.size(); ++i) out << "---|";
    out << '\n';
    for (const std::string& s : settings) {
      out << "| " << s << " |";
      for (const std::string& d : datasets) {
        const MeanRow* found = nullptr;
        for (const MeanRow* m : rows) {
          if (m->setting == s && m->dataset == d) {
            found = m;
            break;
          }
        }
        out << ' ' << (found ? format_pct(found->accuracy) : "-") << " |";
      }
      out << '\n';
    }
    out << '\n';
  }
  if (!empty_tasks.empty()) {
    out << (any_task ? "" : "No task produced eligible instances.\n");
    out << "_Omitted (no eligible instances): ";
    for (std::size_t i = 0; i < empty_tasks.size(); ++i) {
      if (i > 0) out << ", ";
      out << empty_tasks[i];
    }
    out << "._\n";
  }
  return out.str();
}

MetricsReport parse_report_csv(const std::string& text) {
  MetricsReport report;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (cols.size() != 6) throw ParseError("bad CSV row: " + line);
    if (cols[3] == "mean") {
      report.means.push_back({cols[0], cols[1], cols[2], std::stod(cols[4]),
                              std::stoi(cols[5])});
    } else {
      report.per_seed.push_back({cols[0], cols[1], cols[2],
                                 std::stoull(cols[3]), std::stod(cols[4]),
                                 std::stoi(cols[5])});
    }
  }
  return report;
}

}  // namespace absa

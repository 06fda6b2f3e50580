// absa: unsupervised aspect-opinion mining pipeline.
//
// Subcommands: prepare, adapt, extract, evaluate, matrix, report.
// Exit codes: 0 success, 1 I/O, 2 input or config validation,
// 3 backend capability.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "absa/config.hpp"
#include "absa/corpus.hpp"
#include "absa/errors.hpp"
#include "absa/evaluation.hpp"
#include "absa/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInput = 2;
constexpr int kExitCapability = 3;

/// Default root for adapted models and run directories.
fs::path cache_dir() {
  if (const char* env = std::getenv("ABSA_MODEL_CACHE")) return env;
  return "runs";
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::uint64_t seed = 0;
  bool seed_set = false;
};

absa::RunConfig load_config(const CommonArgs& args) {
  absa::RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = absa::RunConfig::from_file(args.config_path);
  }
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got \"" + kv + "\"");
    }
    cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed_set) {
    cfg.backend_seed = args.seed;
    cfg.seeds = {args.seed};
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file");
  cmd->add_option("--set", args.overrides,
                  "override a config key (key=value), repeatable");
  cmd->add_option("--seed", args.seed, "override every configured seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

std::map<std::string, absa::Dataset> load_datasets(
    const std::vector<std::string>& paths) {
  std::map<std::string, absa::Dataset> out;
  for (const std::string& p : paths) {
    absa::Dataset ds = absa::read_jsonl(p);
    if (ds.name.empty()) ds.name = fs::path(p).stem().string();
    out[ds.name] = std::move(ds);
  }
  return out;
}

void print_warnings(const absa::ParseStats& stats) {
  for (const std::string& w : stats.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
}

// ---------------------------------------------------------------------------

int cmd_prepare(const std::string& name, const std::string& train_path,
                const std::string& test_path, const std::string& opinions_path,
                const std::string& out_path, bool lenient) {
  absa::ParseStats stats;
  absa::Dataset ds;
  if (!train_path.empty()) {
    ds = absa::parse_semeval_xml(train_path, name, absa::Split::train, &stats);
  }
  if (!test_path.empty()) {
    absa::Dataset test_ds =
        absa::parse_semeval_xml(test_path, name, absa::Split::test, &stats);
    if (ds.name.empty()) ds.name = test_ds.name;
    for (absa::RawSentence& s : test_ds.sentences) {
      if (ds.find_sentence(s.id) != nullptr) {
        stats.warn("duplicate sentence id across splits: " + s.id +
                   ", test sentence dropped");
        continue;
      }
      ds.sentences.push_back(std::move(s));
    }
    for (absa::AspectInstance& inst : test_ds.instances) {
      if (ds.find_sentence(inst.sentence_id) != nullptr) {
        ds.instances.push_back(std::move(inst));
      }
    }
  }
  if (ds.sentences.empty()) {
    std::cerr << "error: no input sentences (need --train and/or --test)\n";
    return kExitInput;
  }
  if (!opinions_path.empty()) {
    ds = absa::attach_opinion_annotations(ds, opinions_path, &stats);
  }
  absa::write_jsonl(ds, out_path);
  print_warnings(stats);

  int gold_opinions = 0;
  for (const absa::AspectInstance& i : ds.instances) {
    if (!i.gold_opinions.empty()) ++gold_opinions;
  }
  std::cout << "dataset " << ds.name << ": " << ds.sentences.size()
            << " sentences, " << ds.instances.size() << " instances ("
            << gold_opinions << " with gold opinions, "
            << stats.warnings.size() << " warnings)\n";
  std::cout << "wrote " << out_path << '\n';
  if (!stats.warnings.empty() && !lenient) {
    std::cerr << "error: input had warnings (use --lenient to accept)\n";
    return kExitInput;
  }
  return kExitOk;
}

int cmd_adapt(const CommonArgs& common, const std::vector<std::string>& data,
              const std::vector<std::string>& texts,
              const std::string& out_dir) {
  const absa::RunConfig cfg = load_config(common);
  const auto backend = cfg.build_backend();
  if (!backend->supports_adaptation()) {
    std::cerr << "backend \"" << backend->name()
              << "\" has no masked-token trainer; run the pipeline without "
                 "adaptation or pick a trainable backend\n";
    return kExitCapability;
  }
  const std::map<std::string, absa::Dataset> datasets = load_datasets(data);
  std::vector<const absa::Dataset*> sources;
  for (const auto& [n, ds] : datasets) sources.push_back(&ds);
  std::vector<fs::path> extra(texts.begin(), texts.end());
  const absa::TextCorpus corpus = absa::build_adaptation_corpus(sources, extra);

  absa::AdaptationConfig adapt_cfg = cfg.adapt;
  adapt_cfg.seed = cfg.seeds.front();
  const fs::path base = out_dir.empty() ? cache_dir() : fs::path(out_dir);
  const fs::path run_dir =
      base / ("adapt_" + cfg.config_hash() + "_s" +
              std::to_string(adapt_cfg.seed));

  if (fs::exists(run_dir / "weights.bin")) {
    std::cout << "run " << run_dir.string() << " already complete, skipping\n";
    return kExitOk;
  }
  backend->domain_adapt(corpus, adapt_cfg, run_dir);
  std::cout << "adapted on " << corpus.documents.size() << " documents -> "
            << run_dir.string() << '\n';
  std::ifstream loss(run_dir / "loss.log");
  std::string line, last;
  while (std::getline(loss, line)) {
    if (!line.empty()) last = line;
  }
  if (!last.empty()) std::cout << last << '\n';
  return kExitOk;
}

int cmd_extract(const CommonArgs& common, const std::string& data,
                const std::string& out_path, const std::string& split_name,
                bool dump_attention) {
  const absa::RunConfig cfg = load_config(common);
  const absa::Dataset ds = absa::read_jsonl(data);
  const absa::Split split = absa::split_from_string(split_name);

  const auto backend = cfg.build_backend();
  const auto annotator = cfg.build_annotator();
  const absa::PatternRegistry registry = cfg.build_registry();

  absa::PipelineComponents pipeline;
  pipeline.backend = backend.get();
  pipeline.annotator = annotator.get();
  pipeline.patterns = &registry;
  pipeline.options = cfg.pipeline;
  pipeline.polarity_margin = cfg.polarity_margin;
  pipeline.label_template = cfg.label_template;

  const absa::PolarityLabelSet labels =
      absa::PolarityLabelSet::from_backend(*backend, cfg.label_template);

  std::vector<absa::InstanceResult> results;
  std::vector<absa::AspectQueryScores> traces;
  for (const absa::AspectInstance& inst : ds.instances) {
    const absa::RawSentence* s = ds.find_sentence(inst.sentence_id);
    if (s == nullptr || s->split != split) continue;
    absa::AspectQueryScores trace;
    results.push_back(absa::run_instance(pipeline, labels, *s, inst,
                                         dump_attention ? &trace : nullptr));
    if (dump_attention) traces.push_back(std::move(trace));
  }
  if (results.empty()) {
    std::cerr << "error: dataset " << ds.name << " has no instances in the "
              << split_name << " split\n";
    return kExitInput;
  }
  absa::write_predictions_jsonl(results, out_path, dump_attention,
                                dump_attention ? &traces : nullptr);
  std::cout << "extracted " << results.size() << " predictions -> " << out_path
            << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& data, const std::string& predictions,
                 const std::string& out_path) {
  const absa::Dataset ds = absa::read_jsonl(data);
  const std::vector<absa::InstanceResult> results =
      absa::load_predictions(ds, predictions);
  if (results.empty()) {
    std::cerr << "error: no predictions matched dataset " << ds.name << '\n';
    return kExitInput;
  }
  const absa::TaskScores s = absa::score(results);
  auto show = [](const char* task, const std::optional<double>& acc, int n) {
    if (acc) {
      std::printf("%-7s accuracy %.4f  (n=%d)\n", task, *acc, n);
    } else {
      std::printf("%-7s absent (no eligible instances)\n", task);
    }
  };
  show("AOOE", s.aooe, s.n_aooe);
  show("ATSC", s.atsc, s.n_atsc);
  show("AOOSPE", s.aoospe, s.n_aoospe);

  if (!out_path.empty()) {
    json rows = json::array();
    auto add = [&](const char* task, const std::optional<double>& acc, int n) {
      if (acc) {
        rows.push_back(json{{"task", task},
                            {"dataset", ds.name},
                            {"setting", "evaluate"},
                            {"seed", 0},
                            {"accuracy", *acc},
                            {"n_eligible", n}});
      }
    };
    add("aooe", s.aooe, s.n_aooe);
    add("atsc", s.atsc, s.n_atsc);
    add("aoospe", s.aoospe, s.n_aoospe);
    std::ofstream out(out_path);
    out << rows.dump(2) << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_matrix(const CommonArgs& common, const std::string& plan_path,
               const std::vector<std::string>& data, const std::string& out_dir,
               int jobs) {
  const absa::RunConfig cfg = load_config(common);
  const std::vector<absa::ExperimentPlan> plans =
      absa::parse_experiment_plans(plan_path);
  if (plans.empty()) {
    std::cerr << "error: plan file defines no plans\n";
    return kExitInput;
  }
  const std::map<std::string, absa::Dataset> datasets = load_datasets(data);

  const auto backend = cfg.build_backend();
  const auto annotator = cfg.build_annotator();
  const absa::PatternRegistry registry = cfg.build_registry();

  // run directory keyed by config + plan content
  std::string plan_text;
  for (const auto& [k, v] : absa::read_kv_file(plan_path)) {
    plan_text += k + "=" + v + "\n";
  }
  char hash_buf[17];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(
                    absa::fnv1a64(cfg.canonical_text() + plan_text)));

  absa::ExperimentContext ctx;
  ctx.datasets = &datasets;
  ctx.base_backend = backend.get();
  ctx.annotator = annotator.get();
  ctx.patterns = &registry;
  ctx.pipeline = cfg.pipeline;
  ctx.polarity_margin = cfg.polarity_margin;
  ctx.label_template = cfg.label_template;
  ctx.adapt = cfg.adapt;
  ctx.run_dir = (out_dir.empty() ? cache_dir() : fs::path(out_dir)) / hash_buf;
  ctx.jobs = jobs;
  ctx.config_hash = hash_buf;
  ctx.verbose = true;

  for (const absa::ExperimentPlan& plan : plans) plan.validate(datasets);

  const absa::MetricsReport report = absa::run_matrix(plans, ctx);
  std::cout << "report: " << (ctx.run_dir / "report.md").string() << '\n';
  for (const absa::MeanRow& m : report.means) {
    std::printf("%-7s %-6s %-32s mean %.4f over %d seeds\n", m.task.c_str(),
                m.dataset.c_str(), m.setting.c_str(), m.accuracy, m.n_seeds);
  }
  return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& format,
               const std::string& out_path) {
  const absa::MetricsReport report = absa::assemble_report(run_dir);
  const absa::ReportFormat fmt = format == "csv" ? absa::ReportFormat::csv
                                                 : absa::ReportFormat::markdown;
  const std::string text = absa::render_report(report, fmt);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
    std::cout << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unsupervised aspect-opinion mining pipeline"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "parse SemEval XML (+ opinion TSV) into dataset JSONL");
  std::string p_name, p_train, p_test, p_opinions, p_out = "dataset.jsonl";
  bool p_lenient = false;
  prepare->add_option("--name", p_name, "dataset name (e.g. L14, R14)")
      ->required();
  prepare->add_option("--train", p_train, "train-split XML file");
  prepare->add_option("--test", p_test, "test-split XML file");
  prepare->add_option("--opinions", p_opinions, "gold opinion TSV");
  prepare->add_option("--out", p_out, "output JSONL path");
  prepare->add_flag("--lenient", p_lenient, "exit 0 despite dropped instances");

  // adapt
  auto* adapt = app.add_subcommand("adapt", "domain-adapt the backend");
  CommonArgs a_common;
  std::vector<std::string> a_data, a_texts;
  std::string a_out;
  add_common(adapt, a_common);
  adapt->add_option("--data", a_data, "dataset JSONL (train split feeds corpus)");
  adapt->add_option("--text", a_texts, "extra corpus file, one document per line");
  adapt->add_option("--out", a_out, "output base directory");

  // extract
  auto* extract = app.add_subcommand("extract", "run the extraction pipeline");
  CommonArgs e_common;
  std::string e_data, e_out = "predictions.jsonl", e_split = "test";
  bool e_dump = false;
  add_common(extract, e_common);
  extract->add_option("--data", e_data, "dataset JSONL")->required();
  extract->add_option("--out", e_out, "predictions JSONL path");
  extract->add_option("--split", e_split, "split to run (train|test)");
  extract->add_flag("--dump-attention", e_dump,
                    "include per-instance word score vectors");

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "score a predictions file against gold");
  std::string v_data, v_pred, v_out;
  evaluate->add_option("--data", v_data, "dataset JSONL")->required();
  evaluate->add_option("--pred", v_pred, "predictions JSONL")->required();
  evaluate->add_option("--out", v_out, "write metrics rows as JSON");

  // matrix
  auto* matrix =
      app.add_subcommand("matrix", "run an experiment plan file end to end");
  CommonArgs m_common;
  std::string m_plan, m_out;
  std::vector<std::string> m_data;
  int m_jobs = 1;
  add_common(matrix, m_common);
  matrix->add_option("--plan", m_plan, "experiment plan file")->required();
  matrix->add_option("--data", m_data, "dataset JSONL, repeatable")->required();
  matrix->add_option("--out", m_out, "output base directory");
  matrix->add_option("--jobs", m_jobs, "parallel seeds per plan");

  // report
  auto* report = app.add_subcommand("report", "render a run's report");
  std::string r_run, r_format = "markdown", r_out;
  report->add_option("--run", r_run, "run directory")->required();
  report->add_option("--format", r_format, "markdown|csv");
  report->add_option("--out", r_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (prepare->parsed()) {
      return cmd_prepare(p_name, p_train, p_test, p_opinions, p_out, p_lenient);
    }
    if (adapt->parsed()) return cmd_adapt(a_common, a_data, a_texts, a_out);
    if (extract->parsed()) {
      return cmd_extract(e_common, e_data, e_out, e_split, e_dump);
    }
    if (evaluate->parsed()) return cmd_evaluate(v_data, v_pred, v_out);
    if (matrix->parsed()) {
      return cmd_matrix(m_common, m_plan, m_data, m_out, m_jobs);
    }
    if (report->parsed()) return cmd_report(r_run, r_format, r_out);
  } catch (const absa::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const absa::CapabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCapability;
  } catch (const absa::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

#include "absa/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "absa/errors.hpp"
#include "absa/rng.hpp"

namespace absa {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got \"" + v + "\"");
}

std::set<Pos> parse_pos_set(const std::string& v) {
  std::set<Pos> out;
  for (const std::string& item : split_list(v)) {
    out.insert(pos_from_string(trim(item)));
  }
  if (out.empty()) throw std::invalid_argument("empty POS set");
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_kv_file(
    const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  std::ifstream in(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key=value in " + path.string(), line_no);
    }
    out.emplace_back(trim(stripped.substr(0, eq)),
                     trim(stripped.substr(eq + 1)));
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, sep)) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig cfg;
  for (const auto& [key, value] : read_kv_file(path)) {
    cfg.apply(key, value);
  }
  cfg.validate();
  return cfg;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  try {
    if (key == "backend.id") backend_id = value;
    else if (key == "backend.model") model_path = value;
    else if (key == "backend.seed") backend_seed = std::stoull(value);
    else if (key == "backend.layers") backend_layers = std::stoi(value);
    else if (key == "backend.heads") backend_heads = std::stoi(value);
    else if (key == "backend.hidden") backend_hidden = std::stoi(value);
    else if (key == "annotator.id") annotator_id = value;
    else if (key == "annotator.path") annotator_path = value;
    else if (key == "adapt.batch_size") adapt.batch_size = std::stoi(value);
    else if (key == "adapt.grad_accum_steps") adapt.grad_accum_steps = std::stoi(value);
    else if (key == "adapt.learning_rate") adapt.learning_rate = std::stod(value);
    else if (key == "adapt.epochs") adapt.epochs = std::stoi(value);
    else if (key == "adapt.mask_probability") adapt.mask_probability = std::stod(value);
    else if (key == "select.layers") {
      pipeline.layers.clear();
      for (const std::string& item : split_list(value)) {
        pipeline.layers.push_back(std::stoi(item));
      }
    } else if (key == "select.aggregation") {
      if (value == "pool") pipeline.select.mode = SelectionMode::pool;
      else if (value == "vote") pipeline.select.mode = SelectionMode::vote;
      else throw std::invalid_argument("aggregation must be pool or vote");
    } else if (key == "select.tie_break") {
      if (value == "lowest") pipeline.select.tie = TieBreak::lowest;
      else if (value == "highest") pipeline.select.tie = TieBreak::highest;
      else throw std::invalid_argument("tie_break must be lowest or highest");
    } else if (key == "select.pos_fallback") {
      pipeline.select.pos_fallback = parse_bool(value);
    } else if (key == "select.sentence_fallback") {
      pipeline.select.sentence_fallback = parse_bool(value);
    } else if (key == "polarity.margin") {
      polarity_margin = std::stod(value);
    } else if (key == "polarity.label_template") {
      label_template = value;
    } else if (key == "syntax.mod_relations") {
      mod_relations = split_list(value);
    } else if (key.rfind("pattern.", 0) == 0) {
      pattern_specs.emplace_back(key.substr(8), value);
    } else if (key == "run.seeds") {
      seeds.clear();
      for (const std::string& item : split_list(value)) {
        seeds.push_back(std::stoull(item));
      }
    } else if (key == "run.output_dir") {
      output_dir = value;
    } else {
      throw std::invalid_argument("unknown config key \"" + key + "\"");
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument("bad value for " + key + ": " + e.what());
  }
}

void RunConfig::validate() const {
  adapt.validate();
  if (pipeline.layers.empty()) {
    throw std::invalid_argument("select.layers must be non-empty");
  }
  if (seeds.empty()) throw std::invalid_argument("run.seeds must be non-empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("run.seeds must be distinct");
  }
  if (!model_path.empty() && !std::filesystem::exists(model_path)) {
    throw std::invalid_argument("backend.model path does not exist: " +
                                model_path);
  }
  if (!annotator_path.empty() && !std::filesystem::exists(annotator_path)) {
    throw std::invalid_argument("annotator.path does not exist: " +
                                annotator_path);
  }
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "backend.id=" << backend_id << '\n'
      << "backend.model=" << model_path << '\n'
      << "backend.seed=" << backend_seed << '\n'
      << "backend.layers=" << backend_layers << '\n'
      << "backend.heads=" << backend_heads << '\n'
      << "backend.hidden=" << backend_hidden << '\n'
      << "annotator.id=" << annotator_id << '\n'
      << "annotator.path=" << annotator_path << '\n'
      << "adapt.batch_size=" << adapt.batch_size << '\n'
      << "adapt.grad_accum_steps=" << adapt.grad_accum_steps << '\n'
      << "adapt.learning_rate=" << adapt.learning_rate << '\n'
      << "adapt.epochs=" << adapt.epochs << '\n'
      << "adapt.mask_probability=" << adapt.mask_probability << '\n';
  out << "select.layers=";
  for (std::size_t i = 0; i < pipeline.layers.size(); ++i) {
    out << (i ? "," : "") << pipeline.layers[i];
  }
  out << '\n'
      << "select.aggregation="
      << (pipeline.select.mode == SelectionMode::pool ? "pool" : "vote") << '\n'
      << "select.tie_break="
      << (pipeline.select.tie == TieBreak::lowest ? "lowest" : "highest") << '\n'
      << "select.pos_fallback=" << pipeline.select.pos_fallback << '\n'
      << "select.sentence_fallback=" << pipeline.select.sentence_fallback << '\n'
      << "polarity.margin=" << polarity_margin << '\n'
      << "polarity.label_template=" << label_template << '\n';
  out << "syntax.mod_relations=";
  for (std::size_t i = 0; i < mod_relations.size(); ++i) {
    out << (i ? "," : "") << mod_relations[i];
  }
  out << '\n';
  for (const auto& [name, spec] : pattern_specs) {
    out << "pattern." << name << '=' << spec << '\n';
  }
  out << "run.seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
  out << '\n';
  return out.str();
}

std::string RunConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

PatternRegistry RunConfig::build_registry() const {
  PatternRegistry reg = PatternRegistry::builtin(mod_relations);
  for (const auto& [name, spec] : pattern_specs) {
    reg.register_pattern(parse_pattern_spec(name, spec));
  }
  return reg;
}

std::unique_ptr<ModelBackend> RunConfig::build_backend() const {
  BackendParams params;
  params.seed = backend_seed;
  params.model_path = model_path;
  params.layers = backend_layers;
  params.heads = backend_heads;
  params.hidden = backend_hidden;
  return create_backend(backend_id, params);
}

std::unique_ptr<Annotator> RunConfig::build_annotator() const {
  return create_annotator(annotator_id, annotator_path);
}

OpinionRelationPattern parse_pattern_spec(const std::string& name,
                                          const std::string& spec) {
  OpinionRelationPattern p;
  p.name = name;
  ArcConstraint first, second;
  bool has_second = false;

  for (const std::string& field : split_list(spec, ';')) {
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("pattern " + name + ": bad field \"" + field +
                                  "\"");
    }
    const std::string k = trim(field.substr(0, eq));
    const std::string v = trim(field.substr(eq + 1));
    if (k == "dep") first.dependent = parse_pos_set(v);
    else if (k == "head") first.head = parse_pos_set(v);
    else if (k == "rel") {
      for (const std::string& r : split_list(v)) first.relations.insert(r);
    } else if (k == "dep2") {
      second.dependent = parse_pos_set(v);
      has_second = true;
    } else if (k == "head2") {
      second.head = parse_pos_set(v);
      has_second = true;
    } else if (k == "rel2") {
      for (const std::string& r : split_list(v)) second.relations.insert(r);
      has_second = true;
    } else if (k == "emit") {
      if (v == "dep") p.emit = OpinionRelationPattern::Emit::dependent;
      else if (v == "pair") p.emit = OpinionRelationPattern::Emit::dependent_and_head;
      else if (v == "subtree") p.emit = OpinionRelationPattern::Emit::dependent_subtree;
      else throw std::invalid_argument("pattern " + name + ": emit must be dep|pair|subtree");
    } else if (k == "anchor") {
      if (v == "dep") p.anchor = OpinionRelationPattern::Anchor::dependent;
      else if (v == "head") p.anchor = OpinionRelationPattern::Anchor::arc_head;
      else throw std::invalid_argument("pattern " + name + ": anchor must be dep|head");
    } else {
      throw std::invalid_argument("pattern " + name + ": unknown field \"" + k +
                                  "\"");
    }
  }
  if (first.dependent.empty() || first.head.empty()) {
    throw std::invalid_argument("pattern " + name +
                                ": dep and head POS sets are required");
  }
  p.chain.push_back(std::move(first));
  if (has_second) {
    if (second.dependent.empty() || second.head.empty()) {
      throw std::invalid_argument("pattern " + name +
                                  ": dep2 and head2 are required together");
    }
    p.chain.push_back(std::move(second));
  }
  return p;
}

std::vector<ExperimentPlan> parse_experiment_plans(
    const std::filesystem::path& path) {
  std::vector<ExperimentPlan> plans;
  std::vector<std::string> order;
  std::map<std::string, ExperimentPlan> by_id;

  for (const auto& [key, value] : read_kv_file(path)) {
    if (key.rfind("plan.", 0) != 0) {
      throw ParseError("plan file keys must start with \"plan.\": " + key);
    }
    const std::string rest = key.substr(5);
    const std::size_t dot = rest.find('.');
    if (dot == std::string::npos) {
      throw ParseError("expected plan.<id>.<field>: " + key);
    }
    const std::string id = rest.substr(0, dot);
    const std::string field = rest.substr(dot + 1);
    if (!by_id.count(id)) {
      by_id[id].id = id;
      order.push_back(id);
    }
    ExperimentPlan& plan = by_id[id];

    try {
      if (field == "setting") {
        if (value == "in_domain") plan.setting = ExperimentPlan::Setting::in_domain;
        else if (value == "cross_domain") plan.setting = ExperimentPlan::Setting::cross_domain;
        else if (value == "joint_domain") plan.setting = ExperimentPlan::Setting::joint_domain;
        else throw std::invalid_argument("unknown setting \"" + value + "\"");
      } else if (field == "adaptation") {
        if (value == "with") plan.adaptation = ExperimentPlan::Adaptation::with;
        else if (value == "without") plan.adaptation = ExperimentPlan::Adaptation::without;
        else if (value == "massive") plan.adaptation = ExperimentPlan::Adaptation::massive;
        else throw std::invalid_argument("unknown adaptation \"" + value + "\"");
      } else if (field == "train") {
        plan.train_datasets = split_list(value);
      } else if (field == "test") {
        plan.test_datasets = split_list(value);
      } else if (field == "seeds") {
        plan.seeds.clear();
        for (const std::string& s : split_list(value)) {
          plan.seeds.push_back(std::stoull(s));
        }
      } else if (field == "labeled_fraction") {
        plan.labeled_fraction = std::stod(value);
      } else if (field == "corpus") {
        for (const std::string& p : split_list(value)) {
          plan.corpus_paths.emplace_back(p);
        }
      } else {
        throw std::invalid_argument("unknown plan field \"" + field + "\"");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::invalid_argument("bad value for " + key + ": " + e.what());
    }
  }
  for (const std::string& id : order) plans.push_back(by_id[id]);
  return plans;
}

}  // namespace absa

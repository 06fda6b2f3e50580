#include "absa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "absa/errors.hpp"
#include "absa/rng.hpp"

namespace absa {

namespace pt = boost::property_tree;
using json = nlohmann::json;

namespace {

std::string attr(const pt::ptree& node, const std::string& key) {
  return node.get<std::string>("<xmlattr>." + key, "");
}

/// Builds an instance from (target, from, to, polarity) attributes shared by
/// both schemas. Returns false (with a warning) when validation fails.
bool add_instance(Dataset& ds, const RawSentence& sentence,
                  const std::string& target, const std::string& from_s,
                  const std::string& to_s, const std::string& polarity_s,
                  ParseStats& stats) {
  if (target == "NULL" || target.empty()) return false;  // implicit targets
  if (polarity_s == "conflict") {
    stats.warn("sentence " + sentence.id + ": conflict polarity dropped");
    ++stats.instances_dropped;
    return false;
  }
  AspectInstance inst;
  inst.sentence_id = sentence.id;
  inst.aspect_text = target;
  try {
    inst.aspect_span.from = std::stoi(from_s);
    inst.aspect_span.to = std::stoi(to_s);
  } catch (const std::exception&) {
    stats.warn("sentence " + sentence.id + ": non-numeric offsets for \"" +
               target + "\"");
    ++stats.instances_dropped;
    return false;
  }
  inst.gold_polarity = polarity_from_string(polarity_s);
  try {
    validate_instance(sentence, inst);
  } catch (const std::invalid_argument& e) {
    stats.warn(std::string("dropped instance: ") + e.what());
    ++stats.instances_dropped;
    return false;
  }
  // 2015/16 files repeat a target once per category; keep one instance per
  // (sentence, span) occurrence.
  for (const AspectInstance& seen : ds.instances) {
    if (seen.sentence_id == inst.sentence_id &&
        seen.aspect_span == inst.aspect_span) {
      if (seen.gold_polarity != inst.gold_polarity) {
        stats.warn("sentence " + sentence.id + ": conflicting polarities for \"" +
                   target + "\", first kept");
      }
      return false;
    }
  }
  ds.instances.push_back(std::move(inst));
  return true;
}

void parse_sentence_node(Dataset& ds, const pt::ptree& node, Domain domain,
                         Split split, ParseStats& stats) {
  RawSentence sentence;
  sentence.id = attr(node, "id");
  sentence.text = node.get<std::string>("text", "");
  sentence.domain = domain;
  sentence.split = split;
  if (sentence.text.empty()) return;

  ds.sentences.push_back(sentence);

  if (auto terms = node.get_child_optional("aspectTerms")) {  // 2014 schema
    for (const auto& [key, term] : *terms) {
      if (key != "aspectTerm") continue;
      add_instance(ds, sentence, attr(term, "term"), attr(term, "from"),
                   attr(term, "to"), attr(term, "polarity"), stats);
    }
  }
  if (auto opinions = node.get_child_optional("Opinions")) {  // 2015/16 schema
    for (const auto& [key, op] : *opinions) {
      if (key != "Opinion") continue;
      add_instance(ds, sentence, attr(op, "target"), attr(op, "from"),
                   attr(op, "to"), attr(op, "polarity"), stats);
    }
  }
}

/// Recursively collects <sentence> nodes; 2015/16 nests them under
/// Reviews/Review/sentences.
void walk_sentences(Dataset& ds, const pt::ptree& tree, Domain domain,
                    Split split, ParseStats& stats) {
  for (const auto& [key, child] : tree) {
    if (key == "sentence") {
      parse_sentence_node(ds, child, domain, split, stats);
    } else if (key != "<xmlattr>") {
      walk_sentences(ds, child, domain, split, stats);
    }
  }
}

bool numeric_field(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

json span_to_json(const CharSpan& s) {
  return json{{"from", s.from}, {"to", s.to}};
}

CharSpan span_from_json(const json& j) {
  return CharSpan{j.at("from").get<int>(), j.at("to").get<int>()};
}

}  // namespace

Dataset parse_semeval_xml(const std::filesystem::path& path,
                          const std::string& name, Split split,
                          ParseStats* stats) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  pt::ptree tree;
  try {
    pt::read_xml(path.string(), tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed XML in " + path.string() + ": " + e.message(),
                     static_cast<long>(e.line()));
  }
  Dataset ds;
  ds.name = name;
  walk_sentences(ds, tree, domain_for_dataset(name), split, st);
  return ds;
}

Dataset attach_opinion_annotations(Dataset dataset,
                                   const std::filesystem::path& path,
                                   ParseStats* stats) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  std::ifstream in(path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cols = split_tabs(line);
    if (cols.size() < 5) {
      throw ParseError("expected 5 tab-separated columns in " + path.string(),
                       line_no);
    }
    if (line_no == 1 && !numeric_field(cols[2])) continue;  // header row

    const std::string& sentence_id = cols[0];
    const std::string& aspect_text = cols[1];
    const std::string& opinion_text = cols[3];
    if (!numeric_field(cols[2]) || !numeric_field(cols[4])) {
      st.warn("row " + std::to_string(line_no) + ": non-numeric offset, skipped");
      ++st.rows_skipped;
      continue;
    }
    const int aspect_from = std::stoi(cols[2]);
    const int opinion_from = std::stoi(cols[4]);

    const RawSentence* sentence = dataset.find_sentence(sentence_id);
    if (sentence == nullptr) {
      st.warn("row " + std::to_string(line_no) + ": unknown sentence_id \"" +
              sentence_id + "\", skipped");
      ++st.rows_skipped;
      continue;
    }
    const CharSpan opinion{opinion_from,
                           opinion_from + static_cast<int>(opinion_text.size())};
    if (opinion.to > static_cast<int>(sentence->text.size()) ||
        std::string_view(sentence->text)
                .substr(opinion.from, opinion.length()) != opinion_text) {
      st.warn("row " + std::to_string(line_no) + ": opinion text \"" +
              opinion_text + "\" does not match sentence " + sentence_id +
              " at offset " + std::to_string(opinion_from) + ", skipped");
      ++st.rows_skipped;
      continue;
    }
    bool matched = false;
    for (AspectInstance& inst : dataset.instances) {
      if (inst.sentence_id == sentence_id && inst.aspect_text == aspect_text &&
          inst.aspect_span.from == aspect_from) {
        if (std::find(inst.gold_opinions.begin(), inst.gold_opinions.end(),
                      opinion) == inst.gold_opinions.end()) {
          inst.gold_opinions.push_back(opinion);
        }
        matched = true;
      }
    }
    if (!matched) {
      st.warn("row " + std::to_string(line_no) + ": no instance for aspect \"" +
              aspect_text + "\" in sentence " + sentence_id + ", skipped");
      ++st.rows_skipped;
    }
  }
  return dataset;
}

TextCorpus build_adaptation_corpus(
    const std::vector<const Dataset*>& datasets,
    const std::vector<std::filesystem::path>& extra_paths) {
  TextCorpus corpus;
  for (const Dataset* ds : datasets) {
    int taken = 0;
    for (const RawSentence& s : ds->sentences) {
      if (s.split != Split::train) continue;
      corpus.documents.push_back(s.text);
      ++taken;
    }
    if (taken > 0) corpus.provenance.push_back("dataset:" + ds->name);
  }
  for (const std::filesystem::path& p : extra_paths) {
    std::vector<std::string> docs = read_text_lines(p);
    if (!docs.empty()) corpus.provenance.push_back("file:" + p.string());
    for (std::string& d : docs) corpus.documents.push_back(std::move(d));
  }
  if (corpus.documents.empty()) {
    throw std::invalid_argument("empty adaptation corpus");
  }
  return corpus;
}

Dataset sample_labeled_fraction(const Dataset& dataset, double fraction,
                                std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("fraction must be in (0, 1], got " +
                                std::to_string(fraction));
  }
  std::vector<std::size_t> labeled_train;
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const AspectInstance& inst = dataset.instances[i];
    const RawSentence* s = dataset.find_sentence(inst.sentence_id);
    if (s != nullptr && s->split == Split::train &&
        inst.gold_polarity.has_value()) {
      labeled_train.push_back(i);
    }
  }
  if (labeled_train.empty()) {
    throw std::invalid_argument("dataset " + dataset.name +
                                " has no polarity-labeled train instances");
  }
  const std::size_t take = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(labeled_train.size())));

  // shuffle-then-prefix keeps smaller fractions as prefixes of larger ones
  std::vector<std::size_t> order = labeled_train;
  seeded_shuffle(order, seed);
  order.resize(std::min(take, order.size()));
  std::sort(order.begin(), order.end());

  Dataset out;
  out.name = dataset.name;
  out.sentences = dataset.sentences;
  std::size_t next = 0;
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const AspectInstance& inst = dataset.instances[i];
    const RawSentence* s = dataset.find_sentence(inst.sentence_id);
    const bool in_train_pool = s != nullptr && s->split == Split::train &&
                               inst.gold_polarity.has_value();
    if (!in_train_pool) {
      if (s != nullptr && s->split == Split::test) out.instances.push_back(inst);
      continue;
    }
    if (next < order.size() && order[next] == i) {
      out.instances.push_back(inst);
      ++next;
    }
  }
  return out;
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const RawSentence& s : dataset.sentences) {
    json line{{"dataset", dataset.name},
              {"id", s.id},
              {"text", s.text},
              {"domain", std::string(to_string(s.domain))},
              {"split", std::string(to_string(s.split))}};
    json instances = json::array();
    for (const AspectInstance& inst : dataset.instances) {
      if (inst.sentence_id != s.id) continue;
      json j{{"aspect", inst.aspect_text},
             {"span", span_to_json(inst.aspect_span)}};
      json ops = json::array();
      for (const CharSpan& op : inst.gold_opinions) ops.push_back(span_to_json(op));
      j["opinions"] = ops;
      j["polarity"] = inst.gold_polarity
                          ? json(std::string(to_string(*inst.gold_polarity)))
                          : json(nullptr);
      instances.push_back(std::move(j));
    }
    line["instances"] = instances;
    out << line.dump() << '\n';
  }
}

Dataset read_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  std::ifstream in(path);
  Dataset ds;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("bad JSONL in " + path.string() + ": " + e.what(),
                       line_no);
    }
    if (ds.name.empty()) ds.name = j.value("dataset", "");
    RawSentence s;
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.domain = domain_from_string(j.at("domain").get<std::string>());
    s.split = split_from_string(j.at("split").get<std::string>());
    ds.sentences.push_back(s);
    for (const json& ij : j.at("instances")) {
      AspectInstance inst;
      inst.sentence_id = s.id;
      inst.aspect_text = ij.at("aspect").get<std::string>();
      inst.aspect_span = span_from_json(ij.at("span"));
      for (const json& op : ij.at("opinions")) {
        inst.gold_opinions.push_back(span_from_json(op));
      }
      if (!ij.at("polarity").is_null()) {
        inst.gold_polarity =
            polarity_from_string(ij.at("polarity").get<std::string>());
      }
      ds.instances.push_back(std::move(inst));
    }
  }
  validate_dataset(ds);
  return ds;
}

std::vector<std::string> read_text_lines(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace absa

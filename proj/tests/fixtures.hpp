// Shared test fixtures: temp directories, SemEval XML snippets, toy datasets.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "absa/types.hpp"

namespace fixtures {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("absa_test_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(
                 static_cast<unsigned>(reinterpret_cast<std::uintptr_t>(this))));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        const std::string& content) {
  std::ofstream out(path);
  out << content;
  return path;
}

inline const char* kFajitasXml2014 =
    R"(<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="s1">
    <text>The fajitas are great</text>
    <aspectTerms>
      <aspectTerm term="fajitas" polarity="positive" from="4" to="11"/>
    </aspectTerms>
  </sentence>
</sentences>
)";

inline const char* kFajitasXmlBadOffset =
    R"(<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="s1">
    <text>The fajitas are great</text>
    <aspectTerms>
      <aspectTerm term="fajitas" polarity="positive" from="3" to="10"/>
    </aspectTerms>
  </sentence>
</sentences>
)";

inline const char* kNullTargetXml2015 =
    R"(<?xml version="1.0" encoding="UTF-8"?>
<Reviews>
  <Review rid="r1">
    <sentences>
      <sentence id="r1:0">
        <text>Will not be back</text>
        <Opinions>
          <Opinion target="NULL" category="RESTAURANT#GENERAL" polarity="negative" from="0" to="0"/>
        </Opinions>
      </sentence>
    </sentences>
  </Review>
</Reviews>
)";

inline const char* kRestaurantXml2015 =
    R"(<?xml version="1.0" encoding="UTF-8"?>
<Reviews>
  <Review rid="r2">
    <sentences>
      <sentence id="r2:0">
        <text>The pizza was delicious</text>
        <Opinions>
          <Opinion target="pizza" category="FOOD#QUALITY" polarity="positive" from="4" to="9"/>
        </Opinions>
      </sentence>
    </sentences>
  </Review>
</Reviews>
)";

/// Builds a dataset in memory: sentences follow the pattern
/// "The <aspect> is <adjective>" so the lexicon annotator finds candidates.
struct ToySpec {
  std::string id;
  std::string aspect;
  std::string adjective;
  absa::Polarity polarity;
  absa::Split split;
};

inline absa::Dataset toy_dataset(const std::string& name,
                                 const std::vector<ToySpec>& specs) {
  absa::Dataset ds;
  ds.name = name;
  for (const ToySpec& spec : specs) {
    absa::RawSentence s;
    s.id = spec.id;
    s.text = "The " + spec.aspect + " is " + spec.adjective;
    s.domain = absa::domain_for_dataset(name);
    s.split = spec.split;
    ds.sentences.push_back(s);

    absa::AspectInstance inst;
    inst.sentence_id = spec.id;
    inst.aspect_span = {4, 4 + static_cast<int>(spec.aspect.size())};
    inst.aspect_text = spec.aspect;
    const int adj_from = static_cast<int>(s.text.size()) -
                         static_cast<int>(spec.adjective.size());
    inst.gold_opinions.push_back(
        {adj_from, adj_from + static_cast<int>(spec.adjective.size())});
    inst.gold_polarity = spec.polarity;
    ds.instances.push_back(inst);
  }
  return ds;
}

/// Small two-domain pair with train and test splits, for experiment runs.
inline absa::Dataset toy_laptop() {
  using P = absa::Polarity;
  using S = absa::Split;
  return toy_dataset(
      "L14",
      {{"l1", "battery", "great", P::positive, S::train},
       {"l2", "screen", "terrible", P::negative, S::train},
       {"l3", "keyboard", "solid", P::positive, S::train},
       {"l4", "trackpad", "awful", P::negative, S::test},
       {"l5", "display", "gorgeous", P::positive, S::test},
       {"l6", "fan", "loud", P::negative, S::test}});
}

inline absa::Dataset toy_restaurant() {
  using P = absa::Polarity;
  using S = absa::Split;
  return toy_dataset(
      "R14",
      {{"r1", "pizza", "delicious", P::positive, S::train},
       {"r2", "service", "slow", P::negative, S::train},
       {"r3", "staff", "friendly", P::positive, S::train},
       {"r4", "soup", "bland", P::negative, S::test},
       {"r5", "dessert", "sweet", P::positive, S::test},
       {"r6", "waiter", "rude", P::negative, S::test}});
}

}  // namespace fixtures

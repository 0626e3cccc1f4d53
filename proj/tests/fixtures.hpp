// Small models and corpora shared by the neural, training and acceptance
// tests.
#ifndef XLNER_TESTS_FIXTURES_HPP_
#define XLNER_TESTS_FIXTURES_HPP_

#include <string>
#include <vector>

#include "xlner/corpus.hpp"
#include "xlner/neural.hpp"
#include "xlner/rng.hpp"
#include "xlner/synthetic.hpp"

namespace fixture {

inline xlner::Dims small_dims() {
  xlner::Dims d;
  d.r1 = 6;
  d.r2 = 5;
  d.r3 = 3;
  d.q = 7;
  d.d_char = 4;
  d.d_char_input = 3;
  d.d_word = 4;
  d.lstm_layers = 2;
  d.lstm_hidden = 5;
  return d;
}

inline xlner::Corpus relabel(xlner::Corpus c, const std::string& language) {
  for (auto& ls : c) ls.sentence.language = language;
  return c;
}

inline xlner::Corpus synthetic(int which, std::size_t n, std::uint64_t seed) {
  return xlner::generate_synthetic(xlner::synthetic_language(which), n, seed);
}

inline xlner::NeuralModel model(xlner::ScorerKind kind, const std::vector<const xlner::Corpus*>& corpora,
                                std::vector<std::string> languages, bool variant = false,
                                xlner::Dims dims = small_dims(), std::uint64_t seed = 3) {
  xlner::NeuralConfig cfg;
  cfg.dims = dims;
  cfg.scorer = kind;
  cfg.tag_dependent_emission = variant;
  cfg.word_min_count = 1;
  cfg.seed = seed;
  return xlner::NeuralModel::create(cfg, xlner::TagSet(), std::move(languages), corpora);
}

inline std::vector<xlner::WeightedSentence> batch(const xlner::Corpus& c, double weight = 1.0) {
  std::vector<xlner::WeightedSentence> out;
  for (const auto& ls : c) out.push_back({&ls, weight});
  return out;
}

// Overwrites every tensor of `group` with `value`.
inline void fill_group(xlner::NeuralModel& m, const std::string& group, double value) {
  auto& store = m.params();
  for (int id = 0; id < store.num_tensors(); ++id) {
    if (store.info(id).group == group) store.map(id).setConstant(static_cast<xlner::Real>(value));
  }
}

inline void fill_tensor(xlner::NeuralModel& m, const std::string& name, double value) {
  m.params().map(m.params().find(name)).setConstant(static_cast<xlner::Real>(value));
}

// Each word always carries the same tag; only O and B-x appear.
inline xlner::Corpus word_identity_corpus(std::size_t sentences, std::uint64_t seed, const std::string& language = "gl") {
  xlner::TagSet ts;
  const std::vector<std::pair<std::string, xlner::TagId>> lexicon = {
      {"ana", ts.find("B-PER")}, {"boris", ts.find("B-PER")}, {"lyon", ts.find("B-LOC")},
      {"oslo", ts.find("B-LOC")}, {"acme", ts.find("B-ORG")}, {"nato", ts.find("B-ORG")},
      {"euro", ts.find("B-MISC")}, {"the", 0}, {"went", 0}, {"to", 0}, {"saw", 0}, {"and", 0}};
  xlner::SplitMix64 rng(seed);
  xlner::Corpus c;
  for (std::size_t s = 0; s < sentences; ++s) {
    xlner::LabeledSentence ls;
    ls.sentence.language = language;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [w, t] = lexicon[rng.below(lexicon.size())];
      ls.sentence.tokens.push_back(w);
      ls.tags.push_back(t);
    }
    c.push_back(ls);
  }
  return c;
}

}  // namespace fixture

#endif  // XLNER_TESTS_FIXTURES_HPP_

#ifndef XLNER_FEATURES_HPP_
#define XLNER_FEATURES_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "xlner/corpus.hpp"

namespace xlner {

enum class TemplateKind {
  kWord,        // word identity at an offset
  kPrefix,      // prefix of the current word, fixed length
  kSuffix,      // suffix of the current word, fixed length
  kShape,       // X/x/d collapse of the current word
  kFlags,       // hasdigit, hyphen, allcaps, initcap
  kBigram,      // tag bigram
  kBigramWord,  // tag bigram conjoined with the current word
};

struct TemplateDescriptor {
  TemplateKind kind;
  int param = 0;  // offset for kWord, length for affixes
};

struct FeatureTemplateSet {
  int window = 2;
  int affix_max = 4;
  std::vector<TemplateDescriptor> templates;

  // Word identity at -window..+window, prefixes and suffixes of length
  // 1..affix_max, shape, flags, tag bigram, tag bigram x word.
  static FeatureTemplateSet standard(int window = 2, int affix_max = 4);
};

// Tag-independent predicates at position i (0-based). Unigram attributes
// are conjoined with the current tag; pair attributes with (prev, cur).
struct Observation {
  std::vector<std::string> unigram;
  std::vector<std::string> pair;
};

Observation observe(const Sentence& sentence, int i, const FeatureTemplateSet& templates);

// Full feature strings for one lattice edge, e.g. "suf3=ris|t=B-LOC" or
// "bigram|tp=BOS|t=B-LOC". prev == tagset.bos_index() means the start of
// the sentence.
std::vector<std::string> extract_features(const Sentence& sentence, int i, TagId prev, TagId cur,
                                          const FeatureTemplateSet& templates, const TagSet& tagset);

// Originals followed by each original suffixed with "|lang=<code>".
std::vector<std::string> conjoin_language(const std::vector<std::string>& features, std::string_view language);

std::string word_shape(std::string_view word);

std::string unigram_feature(std::string_view attr, std::string_view tag, std::string_view language = {});
std::string pair_feature(std::string_view attr, std::string_view prev, std::string_view tag,
                         std::string_view language = {});

}  // namespace xlner

#endif  // XLNER_FEATURES_HPP_

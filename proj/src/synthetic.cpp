#include "xlner/synthetic.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <vector>

#include "xlner/error.hpp"
#include "xlner/rng.hpp"

namespace xlner {

namespace {

class WordMaker {
 public:
  WordMaker(const SyntheticLanguage& lang, SplitMix64& rng) : lang_(lang), rng_(rng) {}

  std::string syllable() {
    std::string s;
    s += lang_.consonants[rng_.below(lang_.consonants.size())];
    s += lang_.vowels[rng_.below(lang_.vowels.size())];
    return s;
  }

  std::string stem(int min_syllables, int max_syllables) {
    const int count = min_syllables + static_cast<int>(rng_.below(static_cast<std::uint64_t>(max_syllables - min_syllables + 1)));
    std::string s;
    for (int i = 0; i < count; ++i) s += syllable();
    return s;
  }

 private:
  const SyntheticLanguage& lang_;
  SplitMix64& rng_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

SyntheticLanguage synthetic_language(int which) {
  if (which < 0 || which > 25) fail(ErrorKind::kUsage, "synthetic language index out of range");
  static const std::string kPool = "bdfgklmnprstvz";
  SyntheticLanguage lang;
  lang.code = std::string("q") + static_cast<char>('a' + which);
  // Seven consonants each; indices 0 and 1 are disjoint halves.
  for (int i = 0; i < 7; ++i) lang.consonants += kPool[static_cast<std::size_t>((which * 7 + i) % kPool.size())];
  return lang;
}

Corpus generate_synthetic(const SyntheticLanguage& language, std::size_t sentences, std::uint64_t seed,
                          const TagSet& tagset) {
  constexpr int per = 0, org = 2, misc = 3;
  if (tagset.entity_types().size() < 4) fail(ErrorKind::kUsage, "synthetic data needs per/loc/org/misc");

  // The vocabulary depends only on the language, so every split and seed
  // sees the same function words.
  SplitMix64 vocab_rng(derive_seed(0x5EED, fnv1a(language.code)));
  WordMaker vocab_maker(language, vocab_rng);
  std::vector<std::string> vocabulary;
  std::set<std::string> seen;
  while (vocabulary.size() < language.vocabulary_size) {
    std::string w = vocab_maker.stem(1, 3);
    if (seen.insert(w).second) vocabulary.push_back(std::move(w));
  }
  std::vector<double> cumulative(vocabulary.size());
  double total = 0.0;
  for (std::size_t r = 0; r < vocabulary.size(); ++r) {
    total += 1.0 / static_cast<double>(r + 1);
    cumulative[r] = total;
  }

  SplitMix64 rng(seed);
  WordMaker maker(language, rng);
  auto common_word = [&] {
    const double u = rng.uniform() * total;
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative[mid] < u) lo = mid + 1; else hi = mid;
    }
    return vocabulary[lo];
  };

  Corpus corpus;
  corpus.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    LabeledSentence ls;
    ls.sentence.language = language.code;
    const int length = 6 + static_cast<int>(rng.below(7));
    const int entities = 1 + static_cast<int>(rng.below(2));
    std::vector<int> entity_at;
    for (int e = 0; e < entities; ++e) entity_at.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(length))));

    auto emit = [&](std::string word, TagId tag) {
      ls.sentence.tokens.push_back(std::move(word));
      ls.tags.push_back(tag);
    };
    for (int i = 0; i < length; ++i) {
      bool placed = false;
      for (int pos : entity_at) {
        if (pos != i || placed) continue;
        placed = true;
        const int type = static_cast<int>(rng.below(4));
        const bool two_tokens = (type != misc) && rng.uniform() < 0.35;
        if (type == org) {
          if (two_tokens) emit(capitalize(maker.stem(1, 2)), tagset.begin_tag(org));
          emit(capitalize(maker.stem(1, 2)) + "xon", two_tokens ? tagset.inside_tag(org) : tagset.begin_tag(org));
        } else if (type == misc) {
          emit(capitalize(maker.stem(1, 2)) + "yj", tagset.begin_tag(misc));
        } else {
          const bool qi = rng.below(2) == 0;
          const bool hc = (type == per) == qi;  // XOR of prefix and suffix
          std::string word = std::string(qi ? "Qi" : "Wu") + maker.stem(1, 2) + (hc ? "hc" : "jw");
          if (two_tokens) emit(capitalize(maker.stem(1, 2)), tagset.begin_tag(type));
          emit(std::move(word), two_tokens ? tagset.inside_tag(type) : tagset.begin_tag(type));
        }
      }
      if (!placed) {
        std::string w = common_word();
        if (i == 0) w = capitalize(w);
        emit(std::move(w), TagSet::kOutside);
      }
    }
    corpus.push_back(std::move(ls));
  }
  return corpus;
}

}  // namespace xlner

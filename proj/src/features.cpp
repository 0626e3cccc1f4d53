#include "xlner/features.hpp"

#include "xlner/utf8.hpp"

namespace xlner {

namespace {

enum class Case { kUpper, kLower, kNone };

// ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic; other scripts are
// treated as uncased letters.
Case case_of(char32_t c) {
  if (c >= U'A' && c <= U'Z') return Case::kUpper;
  if (c >= U'a' && c <= U'z') return Case::kLower;
  if (c < 0x80) return Case::kNone;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return Case::kUpper;
  if (c >= 0xDF && c <= 0xFF && c != 0xF7) return Case::kLower;
  if (c >= 0x100 && c <= 0x17F) return (c % 2 == 0) ? Case::kUpper : Case::kLower;
  if (c >= 0x391 && c <= 0x3A9) return Case::kUpper;
  if (c >= 0x3B1 && c <= 0x3C9) return Case::kLower;
  if (c >= 0x400 && c <= 0x42F) return Case::kUpper;
  if (c >= 0x430 && c <= 0x45F) return Case::kLower;
  return Case::kNone;
}

bool is_letter(char32_t c) { return c >= 0x80 || (c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z'); }

std::string offset_name(int offset) {
  if (offset > 0) return "+" + std::to_string(offset);
  return std::to_string(offset);
}

std::u32string scalars(std::string_view word) {
  auto decoded = utf8::decode(word);
  if (decoded) return *decoded;
  // Invalid bytes never reach here through the corpus reader; fall back to
  // bytes so the function stays total.
  return std::u32string(word.begin(), word.end());
}

}  // namespace

FeatureTemplateSet FeatureTemplateSet::standard(int window, int affix_max) {
  FeatureTemplateSet set;
  set.window = window;
  set.affix_max = affix_max;
  for (int o = -window; o <= window; ++o) set.templates.push_back({TemplateKind::kWord, o});
  for (int l = 1; l <= affix_max; ++l) set.templates.push_back({TemplateKind::kPrefix, l});
  for (int l = 1; l <= affix_max; ++l) set.templates.push_back({TemplateKind::kSuffix, l});
  set.templates.push_back({TemplateKind::kShape, 0});
  set.templates.push_back({TemplateKind::kFlags, 0});
  set.templates.push_back({TemplateKind::kBigram, 0});
  set.templates.push_back({TemplateKind::kBigramWord, 0});
  return set;
}

std::string word_shape(std::string_view word) {
  std::string shape;
  for (char32_t c : scalars(word)) {
    if (c >= U'0' && c <= U'9') {
      shape += 'd';
    } else if (is_letter(c)) {
      shape += case_of(c) == Case::kUpper ? 'X' : 'x';
    } else {
      utf8::append(shape, c);
    }
  }
  return shape;
}

Observation observe(const Sentence& sentence, int i, const FeatureTemplateSet& templates) {
  Observation obs;
  const int n = static_cast<int>(sentence.size());
  const std::string& word = sentence.tokens[static_cast<std::size_t>(i)];
  const std::u32string chars = scalars(word);
  const int len = static_cast<int>(chars.size());
  for (const auto& t : templates.templates) {
    switch (t.kind) {
      case TemplateKind::kWord: {
        const int j = i + t.param;
        const std::string& w = j < 0 ? "<BOS>" : (j >= n ? "<EOS>" : sentence.tokens[static_cast<std::size_t>(j)]);
        obs.unigram.push_back("w" + offset_name(t.param) + "=" + w);
        break;
      }
      case TemplateKind::kPrefix:
        if (len >= t.param) {
          obs.unigram.push_back("pre" + std::to_string(t.param) + "=" +
                                utf8::encode(std::u32string_view(chars).substr(0, static_cast<std::size_t>(t.param))));
        }
        break;
      case TemplateKind::kSuffix:
        if (len >= t.param) {
          obs.unigram.push_back("suf" + std::to_string(t.param) + "=" +
                                utf8::encode(std::u32string_view(chars).substr(static_cast<std::size_t>(len - t.param))));
        }
        break;
      case TemplateKind::kShape:
        obs.unigram.push_back("shape=" + word_shape(word));
        break;
      case TemplateKind::kFlags: {
        bool digit = false, hyphen = false, any_letter = false, all_upper = true;
        for (char32_t c : chars) {
          if (c >= U'0' && c <= U'9') digit = true;
          if (c == U'-') hyphen = true;
          if (is_letter(c)) {
            any_letter = true;
            if (case_of(c) != Case::kUpper) all_upper = false;
          }
        }
        if (digit) obs.unigram.push_back("hasdigit");
        if (hyphen) obs.unigram.push_back("hyphen");
        if (any_letter && all_upper) obs.unigram.push_back("allcaps");
        if (len > 0 && case_of(chars[0]) == Case::kUpper) obs.unigram.push_back("initcap");
        break;
      }
      case TemplateKind::kBigram:
        obs.pair.push_back("bigram");
        break;
      case TemplateKind::kBigramWord:
        obs.pair.push_back("w0=" + word);
        break;
    }
  }
  return obs;
}

std::string unigram_feature(std::string_view attr, std::string_view tag, std::string_view language) {
  std::string f(attr);
  f += "|t=";
  f += tag;
  if (!language.empty()) {
    f += "|lang=";
    f += language;
  }
  return f;
}

std::string pair_feature(std::string_view attr, std::string_view prev, std::string_view tag,
                         std::string_view language) {
  std::string f(attr);
  f += "|tp=";
  f += prev;
  f += "|t=";
  f += tag;
  if (!language.empty()) {
    f += "|lang=";
    f += language;
  }
  return f;
}

std::vector<std::string> extract_features(const Sentence& sentence, int i, TagId prev, TagId cur,
                                          const FeatureTemplateSet& templates, const TagSet& tagset) {
  const Observation obs = observe(sentence, i, templates);
  const std::string& tag = tagset.name(cur);
  const std::string prev_name = (i == 0 || prev == tagset.bos_index()) ? std::string("BOS") : tagset.name(prev);
  std::vector<std::string> out;
  out.reserve(obs.unigram.size() + obs.pair.size());
  for (const auto& a : obs.unigram) out.push_back(unigram_feature(a, tag));
  for (const auto& a : obs.pair) out.push_back(pair_feature(a, prev_name, tag));
  return out;
}

std::vector<std::string> conjoin_language(const std::vector<std::string>& features, std::string_view language) {
  std::vector<std::string> out;
  out.reserve(features.size() * 2);
  out.insert(out.end(), features.begin(), features.end());
  for (const auto& f : features) {
    std::string g = f;
    g += "|lang=";
    g += language;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace xlner

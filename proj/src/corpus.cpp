#include "xlner/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xlner/error.hpp"
#include "xlner/rng.hpp"
#include "xlner/utf8.hpp"

namespace xlner {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

// Splits a line on runs of ASCII whitespace.
std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename OnLine>
void for_each_line(std::string_view text, OnLine&& on_line) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    on_line(text.substr(pos, nl - pos), line_no);
    pos = nl + 1;
  }
}

}  // namespace

TagSet::TagSet() : TagSet({"per", "loc", "org", "misc"}) {}

TagSet::TagSet(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
  if (types_.empty()) fail(ErrorKind::kUsage, "tag set needs at least one entity type");
  names_.push_back("O");
  for (const auto& t : types_) {
    names_.push_back("B-" + upper(t));
    names_.push_back("I-" + upper(t));
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) fail(ErrorKind::kUsage, "duplicate entity type in tag set");
    }
  }
}

const std::string& TagSet::name(TagId t) const {
  if (t < 0 || t >= size()) fail(ErrorKind::kData, "tag index out of range: " + std::to_string(t));
  return names_[static_cast<std::size_t>(t)];
}

TagId TagSet::find(std::string_view name) const {
  const std::string key = upper(name);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == key) return static_cast<TagId>(i);
  }
  return -1;
}

LanguageRegistry LanguageRegistry::builtin() {
  LanguageRegistry r;
  const char* ie = "Indo-European";
  r.add({"gl", "Galician", ie, "Romance"});
  r.add({"ca", "Catalan", ie, "Romance"});
  r.add({"fr", "French", ie, "Romance"});
  r.add({"it", "Italian", ie, "Romance"});
  r.add({"ro", "Romanian", ie, "Romance"});
  r.add({"es", "Spanish", ie, "Romance"});
  r.add({"fy", "West Frisian", ie, "Germanic"});
  r.add({"nl", "Dutch", ie, "Germanic"});
  r.add({"tl", "Tagalog", "Austronesian", "Philippine"});
  r.add({"ceb", "Cebuano", "Austronesian", "Philippine"});
  r.add({"uk", "Ukrainian", ie, "Slavic"});
  r.add({"ru", "Russian", ie, "Slavic"});
  r.add({"mr", "Marathi", ie, "Indo-Aryan"});
  r.add({"hi", "Hindi", ie, "Indo-Aryan"});
  r.add({"ur", "Urdu", ie, "Indo-Aryan"});
  r.add({"qa", "Synthetic A", "Synthetic", "Synthetic"});
  r.add({"qb", "Synthetic B", "Synthetic", "Synthetic"});
  r.add_alias("cl", "ca");
  return r;
}

void LanguageRegistry::add(LanguageInfo info) {
  if (contains(info.code)) fail(ErrorKind::kUsage, "duplicate language code: " + info.code);
  entries_.push_back(std::move(info));
}

void LanguageRegistry::add_alias(std::string alias, std::string code) {
  if (contains(alias)) fail(ErrorKind::kUsage, "alias collides with a language code: " + alias);
  info(code);
  aliases_.emplace_back(std::move(alias), std::move(code));
}

bool LanguageRegistry::contains(std::string_view code) const {
  for (const auto& e : entries_) {
    if (e.code == code) return true;
  }
  for (const auto& [alias, target] : aliases_) {
    if (alias == code) return true;
  }
  return false;
}

const std::string& LanguageRegistry::resolve(std::string_view code) const {
  return info(code).code;
}

const LanguageInfo& LanguageRegistry::info(std::string_view code) const {
  std::string_view key = code;
  for (const auto& [alias, target] : aliases_) {
    if (alias == code) key = target;
  }
  for (const auto& e : entries_) {
    if (e.code == key) return e;
  }
  fail(ErrorKind::kData, "unregistered language code: " + std::string(code));
}

ParseResult parse_conll(std::string_view text, std::string_view language, const TagSet& tagset) {
  if (!utf8::valid(text)) fail(ErrorKind::kData, "corpus is not valid UTF-8");
  ParseResult result;
  LabeledSentence current;
  current.sentence.language = std::string(language);
  auto flush = [&] {
    if (current.tags.empty()) return;
    result.repair_count += repair_bio(current.tags, tagset);
    result.sentences.push_back(std::move(current));
    current = LabeledSentence{};
    current.sentence.language = std::string(language);
  };
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto cols = fields(line);
    if (cols.empty()) {
      flush();
      return;
    }
    if (cols.size() != 2) {
      fail(ErrorKind::kData,
           "line " + std::to_string(line_no) +
               (cols.size() == 1 ? ": missing tag column" : ": expected `token tag` (token contains whitespace?)"));
    }
    const TagId tag = tagset.find(cols[1]);
    if (tag < 0) {
      fail(ErrorKind::kData, "line " + std::to_string(line_no) + ": unknown tag '" + std::string(cols[1]) + "'");
    }
    current.sentence.tokens.emplace_back(cols[0]);
    current.tags.push_back(tag);
  });
  flush();
  return result;
}

std::vector<Sentence> parse_tokens(std::string_view text, std::string_view language) {
  if (!utf8::valid(text)) fail(ErrorKind::kData, "input is not valid UTF-8");
  std::vector<Sentence> out;
  Sentence current{{}, std::string(language)};
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto cols = fields(line);
    if (cols.empty()) {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = Sentence{{}, std::string(language)};
      return;
    }
    if (cols.size() > 2) {
      fail(ErrorKind::kData, "line " + std::to_string(line_no) + ": too many columns (token contains whitespace?)");
    }
    current.tokens.emplace_back(cols[0]);
  });
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

std::string serialize_conll(const Corpus& corpus, const TagSet& tagset) {
  std::string out;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (s > 0) out += '\n';
    const auto& ls = corpus[s];
    for (std::size_t i = 0; i < ls.size(); ++i) {
      out += ls.sentence.tokens[i];
      out += ' ';
      out += tagset.name(ls.tags[i]);
      out += '\n';
    }
  }
  return out;
}

std::string serialize_conll(const std::vector<Sentence>& sentences, const std::vector<std::vector<TagId>>& tags,
                            const TagSet& tagset) {
  if (sentences.size() != tags.size()) fail(ErrorKind::kData, "sentence/tag count mismatch");
  Corpus corpus;
  corpus.reserve(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (sentences[s].size() != tags[s].size()) fail(ErrorKind::kData, "token/tag count mismatch");
    corpus.push_back({sentences[s], tags[s]});
  }
  return serialize_conll(corpus, tagset);
}

bool is_bio_consistent(const std::vector<TagId>& tags, const TagSet& tagset) {
  TagId prev = TagSet::kOutside;
  for (TagId t : tags) {
    if (t < 0 || t >= tagset.size()) return false;
    if (tagset.is_inside(t) && (prev == TagSet::kOutside || tagset.type_of(prev) != tagset.type_of(t))) {
      return false;
    }
    prev = t;
  }
  return true;
}

std::size_t repair_bio(std::vector<TagId>& tags, const TagSet& tagset) {
  std::size_t repairs = 0;
  TagId prev = TagSet::kOutside;
  for (TagId& t : tags) {
    if (tagset.is_inside(t) && (prev == TagSet::kOutside || tagset.type_of(prev) != tagset.type_of(t))) {
      t = tagset.begin_tag(tagset.type_of(t));
      ++repairs;
    }
    prev = t;
  }
  return repairs;
}

std::vector<Span> bio_spans(const std::vector<TagId>& tags, const TagSet& tagset) {
  if (!is_bio_consistent(tags, tagset)) fail(ErrorKind::kData, "tag sequence is not BIO-consistent");
  std::vector<Span> spans;
  const int n = static_cast<int>(tags.size());
  for (int i = 0; i < n; ++i) {
    if (!tagset.is_begin(tags[i])) continue;
    int j = i + 1;
    while (j < n && tags[j] == tagset.inside_tag(tagset.type_of(tags[i]))) ++j;
    spans.push_back({i, j, tagset.type_of(tags[i])});
  }
  return spans;
}

std::vector<TagId> tags_from_spans(const std::vector<Span>& spans, std::size_t length, const TagSet& tagset) {
  std::vector<TagId> tags(length, TagSet::kOutside);
  int last_end = 0;
  for (const auto& s : spans) {
    if (s.start < last_end || s.end <= s.start || s.end > static_cast<int>(length) || s.type < 0 ||
        s.type >= static_cast<int>(tagset.entity_types().size())) {
      fail(ErrorKind::kData, "spans must be sorted, non-overlapping, non-empty and in range");
    }
    tags[static_cast<std::size_t>(s.start)] = tagset.begin_tag(s.type);
    for (int i = s.start + 1; i < s.end; ++i) tags[static_cast<std::size_t>(i)] = tagset.inside_tag(s.type);
    last_end = s.end;
  }
  return tags;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  shuffle(idx, rng);
  return idx;
}

}  // namespace

Splits make_splits(const Corpus& corpus, const SplitSpec& spec) {
  if (spec.train_size == 0 || spec.dev_size == 0 || spec.test_size == 0) {
    fail(ErrorKind::kUsage, "split sizes must be positive");
  }
  const std::size_t required = spec.train_size + spec.dev_size + spec.test_size;
  if (required > corpus.size()) {
    fail(ErrorKind::kData, "corpus too small for split: required " + std::to_string(required) + " sentences, available " +
                               std::to_string(corpus.size()));
  }
  const auto idx = shuffled_indices(corpus.size(), spec.seed);
  Splits out;
  std::size_t pos = 0;
  auto take = [&](Corpus& dst, std::size_t count) {
    dst.reserve(count);
    for (std::size_t i = 0; i < count; ++i) dst.push_back(corpus[idx[pos++]]);
  };
  take(out.dev, spec.dev_size);
  take(out.test, spec.test_size);
  take(out.train, spec.train_size);
  return out;
}

Corpus sample_sentences(const Corpus& corpus, std::size_t size, std::uint64_t seed) {
  if (size > corpus.size()) {
    fail(ErrorKind::kData, "corpus too small for sample: required " + std::to_string(size) + " sentences, available " +
                               std::to_string(corpus.size()));
  }
  const auto idx = shuffled_indices(corpus.size(), seed);
  Corpus out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(corpus[idx[i]]);
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base) {
  std::vector<ManifestEntry> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') return;
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    for (;;) {
      const auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 3) {
      fail(ErrorKind::kUsage, "manifest line " + std::to_string(line_no) + ": expected path<TAB>language<TAB>role");
    }
    ManifestEntry e;
    e.path = std::filesystem::path(std::string(cols[0]));
    if (e.path.is_relative()) e.path = base / e.path;
    e.language = std::string(cols[1]);
    if (cols[2] == "target") {
      e.role = CorpusRole::kTarget;
    } else if (cols[2] == "source") {
      e.role = CorpusRole::kSource;
    } else {
      fail(ErrorKind::kUsage, "manifest line " + std::to_string(line_no) + ": role must be target or source");
    }
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUsage, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace xlner

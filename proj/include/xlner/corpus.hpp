#ifndef XLNER_CORPUS_HPP_
#define XLNER_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace xlner {

using TagId = int;

// BIO tag inventory. Index 0 is always O; entity type x at position j owns
// B-x = 1 + 2j and I-x = 2 + 2j.
class TagSet {
 public:
  TagSet();  // per, loc, org, misc
  explicit TagSet(std::vector<std::string> entity_types);

  int size() const { return static_cast<int>(names_.size()); }
  // Left context of the first position; deliberately not a valid tag.
  int bos_index() const { return size(); }

  static constexpr TagId kOutside = 0;
  TagId begin_tag(int type) const { return 1 + 2 * type; }
  TagId inside_tag(int type) const { return 2 + 2 * type; }
  bool is_begin(TagId t) const { return t > 0 && (t % 2) == 1; }
  bool is_inside(TagId t) const { return t > 0 && (t % 2) == 0; }
  // Entity type index of a B/I tag; -1 for O.
  int type_of(TagId t) const { return t == kOutside ? -1 : (t - 1) / 2; }

  const std::string& name(TagId t) const;
  // Accepts "O", "B-PER", "I-loc", ... (entity type is case-insensitive).
  // Returns -1 for unknown strings.
  TagId find(std::string_view name) const;

  const std::vector<std::string>& entity_types() const { return types_; }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const TagSet& other) const { return types_ == other.types_; }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> names_;
};

struct Sentence {
  std::vector<std::string> tokens;
  std::string language;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct LabeledSentence {
  Sentence sentence;
  std::vector<TagId> tags;

  std::size_t size() const { return tags.size(); }
  bool operator==(const LabeledSentence&) const = default;
};

using Corpus = std::vector<LabeledSentence>;

struct Span {
  int start = 0;
  int end = 0;  // exclusive
  int type = 0;

  auto operator<=>(const Span&) const = default;
};

struct LanguageInfo {
  std::string code;
  std::string name;
  std::string family;
  std::string branch;
};

class LanguageRegistry {
 public:
  LanguageRegistry() = default;

  // The fifteen languages of the transfer experiments plus two synthetic
  // codes (qa, qb) used by the bundled generator.
  static LanguageRegistry builtin();

  // Throws on a duplicate code.
  void add(LanguageInfo info);
  void add_alias(std::string alias, std::string code);

  bool contains(std::string_view code) const;
  // Canonical code for `code` or an alias of it; throws when unknown.
  const std::string& resolve(std::string_view code) const;
  const LanguageInfo& info(std::string_view code) const;
  const std::vector<LanguageInfo>& entries() const { return entries_; }

 private:
  std::vector<LanguageInfo> entries_;
  std::vector<std::pair<std::string, std::string>> aliases_;
};

struct SplitSpec {
  std::size_t train_size = 100;
  std::size_t dev_size = 1000;
  std::size_t test_size = 1000;
  std::uint64_t seed = 0;
};

struct Splits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

struct ParseResult {
  Corpus sentences;
  std::size_t repair_count = 0;
};

// Two-column CoNLL text; blank lines separate sentences. I-x tags with an
// invalid left context are rewritten to B-x and counted.
ParseResult parse_conll(std::string_view text, std::string_view language,
                        const TagSet& tagset);

// Unlabeled reader for tagging input: the first column is the token, any
// second column is ignored.
std::vector<Sentence> parse_tokens(std::string_view text,
                                   std::string_view language);

// Normalized form: "token TAG" lines with single spaces, a blank line
// between sentences, trailing newline.
std::string serialize_conll(const Corpus& corpus, const TagSet& tagset);
std::string serialize_conll(const std::vector<Sentence>& sentences,
                            const std::vector<std::vector<TagId>>& tags,
                            const TagSet& tagset);

bool is_bio_consistent(const std::vector<TagId>& tags, const TagSet& tagset);

// Rewrites invalid I-x to B-x in place; returns the number of rewrites.
std::size_t repair_bio(std::vector<TagId>& tags, const TagSet& tagset);

// Throws when `tags` is not BIO-consistent.
std::vector<Span> bio_spans(const std::vector<TagId>& tags,
                            const TagSet& tagset);

// Inverse of bio_spans. Spans must be sorted, non-overlapping, in range.
std::vector<TagId> tags_from_spans(const std::vector<Span>& spans,
                                   std::size_t length, const TagSet& tagset);

// Shuffles indices with SplitMix64(seed), then carves dev, test and train
// in that order, so the train set for a smaller train_size is a prefix of
// the one for a larger size and dev/test do not depend on train_size.
Splits make_splits(const Corpus& corpus, const SplitSpec& spec);

// First `size` sentences of the seeded shuffle (source-language samples).
Corpus sample_sentences(const Corpus& corpus, std::size_t size,
                        std::uint64_t seed);

enum class CorpusRole { kTarget, kSource };

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest directory
  std::string language;
  CorpusRole role = CorpusRole::kTarget;
};

// `path<TAB>language<TAB>role` per line; '#' comments and blank lines are
// skipped.
std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path& base);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace xlner

#endif  // XLNER_CORPUS_HPP_

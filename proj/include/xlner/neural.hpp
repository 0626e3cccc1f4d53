#ifndef XLNER_NEURAL_HPP_
#define XLNER_NEURAL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlner/corpus.hpp"
#include "xlner/crf.hpp"
#include "xlner/lstm.hpp"
#include "xlner/tensor.hpp"

namespace xlner {

struct Dims {
  int r1 = 100;            // tag embedding size
  int r2 = 100;            // sentence representation size
  int r3 = 16;             // language embedding size
  int q = 128;             // cross-lingual projection size
  int d_char = 50;         // char-LSTM output size
  int d_char_input = 25;   // character embedding size
  int d_word = 50;         // word embedding size
  int lstm_layers = 2;     // per direction
  int lstm_hidden = 100;   // per direction per layer

  void validate() const;
  bool operator==(const Dims&) const = default;
};

enum class ScorerKind { kMono, kXling };

struct NeuralConfig {
  Dims dims;
  ScorerKind scorer = ScorerKind::kMono;
  // Cross-lingual scorer only: adds o(t)^T W h_i to the tag-independent
  // u^T h_i emission so that emissions can discriminate tags.
  bool tag_dependent_emission = false;
  // Words seen fewer times than this map to the language's UNK row.
  int word_min_count = 2;
  std::uint64_t seed = 1;
};

// Character LSTM over a word's Unicode scalars; its final hidden state is
// the orthographic half of the word representation. One instance serves
// every language.
class CharEncoder {
 public:
  static constexpr int kUnk = 0;

  int lookup(char32_t c) const;
  int vocab_size() const { return static_cast<int>(chars_.size()) + 1; }
  const std::vector<char32_t>& chars() const { return chars_; }
  int embedding_id() const { return embedding_; }
  const LstmLayer& lstm() const { return lstm_; }

 private:
  friend class NeuralModel;
  std::vector<char32_t> chars_;  // id - 1 -> scalar
  std::unordered_map<char32_t, int> ids_;
  int embedding_ = -1;  // d_char_input x vocab
  LstmLayer lstm_;
};

// Per-language word embeddings with an UNK column at id 0.
class WordTable {
 public:
  static constexpr int kUnk = 0;

  const std::string& language() const { return language_; }
  int lookup(const std::string& word) const;
  int vocab_size() const { return static_cast<int>(words_.size()) + 1; }
  const std::vector<std::string>& words() const { return words_; }
  int tensor_id() const { return tensor_; }

 private:
  friend class NeuralModel;
  std::string language_;
  std::vector<std::string> words_;  // id - 1 -> word
  std::unordered_map<std::string, int> ids_;
  int tensor_ = -1;  // d_word x vocab
};

// One training example with its objective weight (1 for target sentences,
// mu for source sentences).
struct WeightedSentence {
  const LabeledSentence* sentence = nullptr;
  double weight = 1.0;
};

class NeuralModel {
 public:
  NeuralModel() = default;

  // Builds vocabularies from `vocab_corpora` (characters from all, words
  // per language) and initializes parameters from config.seed.
  static NeuralModel create(const NeuralConfig& config, const TagSet& tagset, std::vector<std::string> languages,
                            const std::vector<const Corpus*>& vocab_corpora);

  const NeuralConfig& config() const { return config_; }
  const Dims& dims() const { return config_.dims; }
  const TagSet& tagset() const { return tagset_; }
  ScorerKind scorer() const { return config_.scorer; }
  const std::vector<std::string>& languages() const { return languages_; }
  bool has_language(std::string_view code) const;

  const std::string& default_language() const { return default_language_; }
  void set_default_language(std::string code) { default_language_ = std::move(code); }

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // Shared across languages: the same object / tensor for every code.
  const CharEncoder& char_encoder(std::string_view language) const;
  int transitions_tensor(std::string_view language) const;
  const WordTable& word_table(std::string_view language) const;

  // [char-LSTM final state; word embedding], length d_char + d_word.
  Vec encode_word(const std::string& word, std::string_view language) const;
  // n x r2; row i is the sentence representation of token i.
  Mat encode_sentence(const Sentence& sentence) const;

  // a(prev, cur) + o(cur)^T W s_i
  LogLattice mono_lattice(const Sentence& sentence) const;
  // a(prev, cur) + u^T tanh(U [s_i; l(language)] + b) [+ o(cur)^T W h_i]
  LogLattice xling_lattice(const Sentence& sentence, std::string_view language) const;
  // Dispatches on the configured scorer, using sentence.language.
  LogLattice lattice(const Sentence& sentence) const;

  std::vector<TagId> predict(const Sentence& sentence) const;

  // -sum_s weight_s log p(tags_s | words_s, language_s).
  double loss(const std::vector<WeightedSentence>& batch) const;
  // Same value; writes d loss / d params into grad (resized to params size).
  double loss_and_gradients(const std::vector<WeightedSentence>& batch, RealBuffer& grad,
                            int threads = 1) const;

  std::string serialize() const;
  static NeuralModel deserialize(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static NeuralModel load(const std::filesystem::path& path);

 private:
  struct Forward;
  struct CharBatch;

  void register_parameters();
  void initialize(std::uint64_t seed);
  int language_index(std::string_view code) const;
  Forward run_forward(const Sentence& sentence, std::string_view language, CharBatch& chars) const;
  void run_backward(const Forward& fwd, const Mat& d_emission, CharBatch& chars, RealBuffer& grad) const;
  double accumulate(const std::vector<WeightedSentence>& batch, std::size_t begin, std::size_t end,
                    RealBuffer* grad) const;

  NeuralConfig config_;
  TagSet tagset_;
  std::vector<std::string> languages_;
  std::string default_language_;
  ParameterStore params_;
  CharEncoder chars_;
  std::vector<WordTable> words_;
  std::vector<LstmLayer> forward_layers_;
  std::vector<LstmLayer> backward_layers_;
  int projection_ = -1;       // r2 x 2H
  int projection_bias_ = -1;  // r2
  int transitions_ = -1;      // (k + 1) x k, row k = start
  int tag_embedding_ = -1;    // r1 x k
  int interaction_ = -1;      // W: r1 x r2 (mono) or r1 x q (xling variant)
  int lang_embedding_ = -1;   // r3 x languages
  int xl_project_ = -1;       // U: q x (r2 + r3)
  int xl_vector_ = -1;        // u: q
  int xl_bias_ = -1;          // b: q
};

}  // namespace xlner

#endif  // XLNER_NEURAL_HPP_

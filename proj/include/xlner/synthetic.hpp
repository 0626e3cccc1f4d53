#ifndef XLNER_SYNTHETIC_HPP_
#define XLNER_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>

#include "xlner/corpus.hpp"

namespace xlner {

// Synthetic languages for transfer experiments. Each language builds its
// word vocabulary from its own consonant inventory, so two languages never
// share a word form, while all languages mark entities with the same
// character-level affixes:
//
//   ORG   stem + "xon"                 (one or two tokens)
//   MISC  stem + "yj"                  (one token)
//   PER   "Qi" stem "hc" | "Wu" stem "jw"
//   LOC   "Qi" stem "jw" | "Wu" stem "hc"
//
// PER/LOC is the XOR of prefix and suffix; two-token PER/LOC spans put an
// unmarked capitalized name first. A model that only sees affixes and
// neighbouring word identities cannot separate PER from LOC on unseen
// names; one that combines characters non-linearly and reads right context
// can.
struct SyntheticLanguage {
  std::string code;
  std::string consonants;
  std::string vowels = "aeiou";
  std::size_t vocabulary_size = 400;
};

// Index 0 -> "qa", 1 -> "qb"; other indices get a deterministic
// consonant rotation and code "q<letter>".
SyntheticLanguage synthetic_language(int which);

Corpus generate_synthetic(const SyntheticLanguage& language, std::size_t sentences, std::uint64_t seed,
                          const TagSet& tagset = TagSet());

}  // namespace xlner

#endif  // XLNER_SYNTHETIC_HPP_

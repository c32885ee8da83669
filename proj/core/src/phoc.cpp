#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "mtx/features.hpp"
#include "mtx/log.hpp"

namespace mtx {

// 50 most common English bigrams (Norvig's Google-corpus counts), the fixed
// list the bigram level is built over.
const std::array<const char*, 50> kPhocBigrams = {
    "th", "he", "in", "er", "an", "re", "on", "at", "en", "nd",
    "ti", "es", "or", "te", "of", "ed", "is", "it", "al", "ar",
    "st", "to", "nt", "ng", "se", "ha", "as", "ou", "io", "le",
    "ve", "co", "me", "de", "hi", "ri", "ro", "ic", "ne", "ea",
    "ra", "ce", "li", "ch", "ll", "be", "ma", "si", "om", "ur"};

namespace {

constexpr int kUnigramLevels[] = {2, 3, 4, 5};
constexpr int kAlphabet = 36;  // a-z then 0-9

int symbol_index(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= '0' && c <= '9') return 26 + (c - '0');
  return -1;
}

// Entity occupying characters [start, start+span) of an n-char word against
// region r of an L-way split. Everything in units of 1/(n*L): the entity
// covers [start*L, (start+span)*L], the region [r*n, (r+1)*n]. The bit is
// set when twice the overlap reaches the width of the smaller of the two
// intervals, so a character spanning a whole short word still occupies every
// region it covers.
bool occupies(int start, int span, int n, int r, int L) {
  const long long ent_lo = static_cast<long long>(start) * L;
  const long long ent_hi = static_cast<long long>(start + span) * L;
  const long long reg_lo = static_cast<long long>(r) * n;
  const long long reg_hi = static_cast<long long>(r + 1) * n;
  const long long overlap = std::min(ent_hi, reg_hi) - std::max(ent_lo, reg_lo);
  if (overlap <= 0) return false;
  return 2 * overlap >= std::min(static_cast<long long>(span) * L, static_cast<long long>(n));
}

int bigram_index(const std::string& bg) {
  for (int i = 0; i < static_cast<int>(kPhocBigrams.size()); ++i)
    if (bg == kPhocBigrams[static_cast<std::size_t>(i)]) return i;
  return -1;
}

}  // namespace

std::vector<float> phoc_encode(const std::string& word) {
  std::vector<float> out(static_cast<std::size_t>(kPhocDim), 0.f);

  std::string filtered;
  for (char raw : word) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (symbol_index(c) >= 0) filtered += c;
  }
  if (filtered.empty()) {
    log_warning("phoc_encode: word '" + word + "' is empty after filtering, encoding zeros");
    return out;
  }

  const int n = static_cast<int>(filtered.size());
  int offset = 0;
  for (int L : kUnigramLevels) {
    for (int k = 0; k < n; ++k) {
      const int sym = symbol_index(filtered[static_cast<std::size_t>(k)]);
      for (int r = 0; r < L; ++r)
        if (occupies(k, 1, n, r, L))
          out[static_cast<std::size_t>(offset + r * kAlphabet + sym)] = 1.f;
    }
    offset += L * kAlphabet;
  }

  // bigram level over letters only
  std::string letters;
  for (char c : filtered)
    if (c >= 'a' && c <= 'z') letters += c;
  const int bn = static_cast<int>(letters.size());
  for (int k = 0; k + 1 < bn; ++k) {
    const int bg = bigram_index(letters.substr(static_cast<std::size_t>(k), 2));
    if (bg < 0) continue;
    for (int r = 0; r < 2; ++r)
      if (occupies(k, 2, bn, r, 2))
        out[static_cast<std::size_t>(offset + r * 50 + bg)] = 1.f;
  }
  return out;
}

}  // namespace mtx

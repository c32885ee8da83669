#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace mtx {

// Lowercase, strip punctuation (intra-word apostrophes and hyphens stay),
// split on whitespace. The one tokenization rule used everywhere: vocab,
// metrics, decoding targets.
std::vector<std::string> normalize_text(const std::string& s);

// normalize_text + re-join with single spaces.
std::string normalize_join(const std::string& s);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBegin = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);  // specials first

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // kUnk when absent
  int index(const std::string& tok) const;
  bool contains(const std::string& tok) const { return index_.count(tok) > 0; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// The (size - 4) most frequent tokens, ties broken lexicographically, plus
// the 4 specials in front. Sentences must already be normalized.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, int size);

// Distinct tokens across all sentences.
std::size_t count_distinct_tokens(const std::vector<std::vector<std::string>>& corpus);

}  // namespace mtx

#include "mtx/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

namespace mtx {

namespace {
bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}
}  // namespace

std::vector<std::string> normalize_text(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[i];
    if (is_word_char(c)) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if ((c == '\'' || c == '-') && !cur.empty() && i + 1 < n && is_word_char(s[i + 1])) {
      // intra-word apostrophe/hyphen survives: "don't", "e-mail"
      cur += c;
    } else {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string normalize_join(const std::string& s) {
  std::string joined;
  for (const auto& t : normalize_text(s)) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  return joined;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = {"<pad>", "<begin>", "<end>", "<unk>"};
  for (auto& t : tokens) tokens_.push_back(std::move(t));
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    auto [it, fresh] = index_.emplace(tokens_[i], i);
    if (!fresh) throw std::invalid_argument("Vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

int Vocabulary::index(const std::string& tok) const {
  auto it = index_.find(tok);
  return it == index_.end() ? kUnk : it->second;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, int size) {
  if (size < Vocabulary::kNumSpecials)
    throw std::invalid_argument("build_vocabulary: size must be >= 4");
  std::map<std::string, std::size_t> freq;  // ordered map -> lexicographic ties for free
  for (const auto& s : corpus)
    for (const auto& t : s) ++freq[t];

  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const std::size_t keep = std::min<std::size_t>(items.size(), size - Vocabulary::kNumSpecials);
  std::vector<std::string> toks;
  toks.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) toks.push_back(items[i].first);
  return Vocabulary(std::move(toks));
}

std::size_t count_distinct_tokens(const std::vector<std::vector<std::string>>& corpus) {
  std::set<std::string> seen;
  for (const auto& s : corpus)
    for (const auto& t : s) seen.insert(t);
  return seen.size();
}

}  // namespace mtx

#include "mtx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "mtx/text.hpp"

namespace mtx {

// ---------------------------------------------------------------------------
// Porter stemmer, following the 1980 paper rule for rule.

namespace {

class PorterStemmer {
 public:
  std::string stem(const std::string& word) {
    for (char c : word)
      if (c < 'a' || c > 'z') return word;
    if (word.size() <= 2) return word;
    b_ = word;
    k_ = static_cast<int>(b_.size()) - 1;
    j_ = 0;
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return b_.substr(0, static_cast<std::size_t>(k_) + 1);
  }

 private:
  std::string b_;
  int k_ = 0, j_ = 0;

  bool cons(int i) const {
    switch (b_[static_cast<std::size_t>(i)]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // VC sequence count of b[0..j]
  int m() const {
    int n = 0, i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowelinstem() const {
    for (int i = 0; i <= j_; ++i)
      if (!cons(i)) return true;
    return false;
  }

  bool doublec(int i) const {
    if (i < 1) return false;
    if (b_[static_cast<std::size_t>(i)] != b_[static_cast<std::size_t>(i) - 1]) return false;
    return cons(i);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char c = b_[static_cast<std::size_t>(i)];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    if (len > k_ + 1) return false;
    if (b_.compare(static_cast<std::size_t>(k_ - len + 1), static_cast<std::size_t>(len), s) != 0)
      return false;
    j_ = k_ - len;
    return true;
  }

  void setto(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    b_.replace(static_cast<std::size_t>(j_) + 1, b_.size(), s);
    k_ = j_ + len;
  }

  void r(const char* s) {
    if (m() > 0) setto(s);
  }

  void step1ab() {
    if (b_[static_cast<std::size_t>(k_)] == 's') {
      if (ends("sses"))
        k_ -= 2;
      else if (ends("ies"))
        setto("i");
      else if (b_[static_cast<std::size_t>(k_) - 1] != 's')
        --k_;
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowelinstem()) {
      k_ = j_;
      if (ends("at"))
        setto("ate");
      else if (ends("bl"))
        setto("ble");
      else if (ends("iz"))
        setto("ize");
      else if (doublec(k_)) {
        --k_;
        const char c = b_[static_cast<std::size_t>(k_)];
        if (c == 'l' || c == 's' || c == 'z') ++k_;
      } else if (m() == 1 && cvc(k_)) {
        setto("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowelinstem()) b_[static_cast<std::size_t>(k_)] = 'i';
  }

  void step2() {
    if (k_ < 1) return;
    switch (b_[static_cast<std::size_t>(k_) - 1]) {
      case 'a':
        if (ends("ational")) { r("ate"); break; }
        if (ends("tional")) { r("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { r("ence"); break; }
        if (ends("anci")) { r("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { r("ize"); break; }
        break;
      case 'l':
        if (ends("abli")) { r("able"); break; }
        if (ends("alli")) { r("al"); break; }
        if (ends("entli")) { r("ent"); break; }
        if (ends("eli")) { r("e"); break; }
        if (ends("ousli")) { r("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { r("ize"); break; }
        if (ends("ation")) { r("ate"); break; }
        if (ends("ator")) { r("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { r("al"); break; }
        if (ends("iveness")) { r("ive"); break; }
        if (ends("fulness")) { r("ful"); break; }
        if (ends("ousness")) { r("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { r("al"); break; }
        if (ends("iviti")) { r("ive"); break; }
        if (ends("biliti")) { r("ble"); break; }
        break;
      default:
        break;
    }
  }

  void step3() {
    switch (b_[static_cast<std::size_t>(k_)]) {
      case 'e':
        if (ends("icate")) { r("ic"); break; }
        if (ends("ative")) { r(""); break; }
        if (ends("alize")) { r("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { r("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { r("ic"); break; }
        if (ends("ful")) { r(""); break; }
        break;
      case 's':
        if (ends("ness")) { r(""); break; }
        break;
      default:
        break;
    }
  }

  void step4() {
    if (k_ < 1) return;
    switch (b_[static_cast<std::size_t>(k_) - 1]) {
      case 'a':
        if (ends("al")) break;
        return;
      case 'c':
        if (ends("ance")) break;
        if (ends("ence")) break;
        return;
      case 'e':
        if (ends("er")) break;
        return;
      case 'i':
        if (ends("ic")) break;
        return;
      case 'l':
        if (ends("able")) break;
        if (ends("ible")) break;
        return;
      case 'n':
        if (ends("ant")) break;
        if (ends("ement")) break;
        if (ends("ment")) break;
        if (ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 &&
            (b_[static_cast<std::size_t>(j_)] == 's' || b_[static_cast<std::size_t>(j_)] == 't'))
          break;
        if (ends("ou")) break;
        return;
      case 's':
        if (ends("ism")) break;
        return;
      case 't':
        if (ends("ate")) break;
        if (ends("iti")) break;
        return;
      case 'u':
        if (ends("ous")) break;
        return;
      case 'v':
        if (ends("ive")) break;
        return;
      case 'z':
        if (ends("ize")) break;
        return;
      default:
        return;
    }
    if (m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (b_[static_cast<std::size_t>(k_)] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[static_cast<std::size_t>(k_)] == 'l' && doublec(k_) && m() > 1) --k_;
  }
};

// n-grams keyed by unit-separator-joined tokens
using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts ngram_counts(const Tokens& toks, int n) {
  NgramCounts out;
  const int sz = static_cast<int>(toks.size());
  for (int i = 0; i + n <= sz; ++i) {
    std::string key = toks[static_cast<std::size_t>(i)];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += toks[static_cast<std::size_t>(i + k)];
    }
    ++out[key];
  }
  return out;
}

}  // namespace

std::string porter_stem(const std::string& word) {
  PorterStemmer s;
  return s.stem(word);
}

double bleu4(const Tokens& hyp, const std::vector<Tokens>& refs) {
  if (refs.empty()) throw std::invalid_argument("bleu4: reference list is empty");
  if (hyp.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const auto hc = ngram_counts(hyp, n);
    long long total = 0;
    for (const auto& [g, c] : hc) total += c;
    if (total == 0) return 0.0;
    std::vector<NgramCounts> rcs;
    rcs.reserve(refs.size());
    for (const auto& r : refs) rcs.push_back(ngram_counts(r, n));
    long long clipped = 0;
    for (const auto& [g, c] : hc) {
      int best = 0;
      for (const auto& rc : rcs) {
        auto it = rc.find(g);
        if (it != rc.end()) best = std::max(best, it->second);
      }
      clipped += std::min(c, best);
    }
    if (clipped == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }
  const std::size_t clen = hyp.size();
  std::size_t rlen = refs.front().size();
  for (const auto& r : refs) {
    const std::size_t da = r.size() > clen ? r.size() - clen : clen - r.size();
    const std::size_t db = rlen > clen ? rlen - clen : clen - rlen;
    if (da < db || (da == db && r.size() < rlen)) rlen = r.size();
  }
  const double bp =
      clen >= rlen ? 1.0
                   : std::exp(1.0 - static_cast<double>(rlen) / static_cast<double>(clen));
  return bp * std::exp(log_sum);
}

double rouge_l(const Tokens& hyp, const Tokens& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  // rolling 1-row LCS
  std::vector<int> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    for (std::size_t j = 1; j <= ref.size(); ++j)
      cur[j] = hyp[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const double lcs = prev[ref.size()];
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(hyp.size());
  const double r = lcs / static_cast<double>(ref.size());
  constexpr double kBeta2 = 1.2 * 1.2;
  return (1.0 + kBeta2) * r * p / (r + kBeta2 * p);
}

double rouge_l_multi(const Tokens& hyp, const std::vector<Tokens>& refs) {
  if (refs.empty()) throw std::invalid_argument("rouge_l: reference list is empty");
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, rouge_l(hyp, r));
  return best;
}

namespace {

bool synonym_match(const std::string& a, const std::string& b, const SynonymTable& syn) {
  auto in = [&](const std::string& key, const std::string& v) {
    auto it = syn.find(key);
    if (it == syn.end()) return false;
    return std::find(it->second.begin(), it->second.end(), v) != it->second.end();
  };
  return in(a, b) || in(b, a);
}

}  // namespace

double meteor(const Tokens& hyp, const Tokens& ref, const SynonymTable& synonyms) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const std::size_t hn = hyp.size(), rn = ref.size();
  std::vector<int> align(hn, -1);
  std::vector<bool> used(rn, false);

  auto run_stage = [&](auto&& match) {
    for (std::size_t i = 0; i < hn; ++i) {
      if (align[i] >= 0) continue;
      for (std::size_t j = 0; j < rn; ++j) {
        if (used[j]) continue;
        if (match(hyp[i], ref[j])) {
          align[i] = static_cast<int>(j);
          used[j] = true;
          break;
        }
      }
    }
  };
  run_stage([](const std::string& a, const std::string& b) { return a == b; });
  run_stage([](const std::string& a, const std::string& b) {
    return porter_stem(a) == porter_stem(b);
  });
  if (!synonyms.empty())
    run_stage([&](const std::string& a, const std::string& b) {
      return synonym_match(a, b, synonyms);
    });

  int matches = 0, chunks = 0, prev = -2;
  for (std::size_t i = 0; i < hn; ++i) {
    if (align[i] < 0) {
      prev = -2;
      continue;
    }
    ++matches;
    if (align[i] != prev + 1) ++chunks;
    prev = align[i];
  }
  if (matches == 0) return 0.0;
  const double p = static_cast<double>(matches) / static_cast<double>(hn);
  const double r = static_cast<double>(matches) / static_cast<double>(rn);
  const double f = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
  return f * (1.0 - 0.5 * frag * frag * frag);
}

double meteor_multi(const Tokens& hyp, const std::vector<Tokens>& refs,
                    const SynonymTable& synonyms) {
  if (refs.empty()) throw std::invalid_argument("meteor: reference list is empty");
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, meteor(hyp, r, synonyms));
  return best;
}

void CiderScorer::add(Tokens hyp, std::vector<Tokens> refs) {
  if (refs.empty()) throw std::invalid_argument("CiderScorer: reference list is empty");
  hyps_.push_back(std::move(hyp));
  refs_.push_back(std::move(refs));
}

std::vector<double> CiderScorer::compute() const {
  const std::size_t n_items = hyps_.size();
  std::vector<double> scores(n_items, 0.0);
  if (n_items == 0) return scores;
  const double num_images = static_cast<double>(n_items);

  for (int n = 1; n <= 4; ++n) {
    NgramCounts df;
    for (const auto& rset : refs_) {
      std::set<std::string> seen;
      for (const auto& r : rset)
        for (const auto& [g, c] : ngram_counts(r, n)) seen.insert(g);
      for (const auto& g : seen) ++df[g];
    }
    auto tfidf = [&](const Tokens& s) {
      std::unordered_map<std::string, double> v;
      const auto counts = ngram_counts(s, n);
      double total = 0.0;
      for (const auto& [g, c] : counts) total += c;
      if (total == 0.0) return v;
      for (const auto& [g, c] : counts) {
        auto it = df.find(g);
        const double d = it == df.end() ? 1.0 : std::max(1.0, static_cast<double>(it->second));
        v[g] = (static_cast<double>(c) / total) * std::log(num_images / d);
      }
      return v;
    };
    for (std::size_t i = 0; i < n_items; ++i) {
      const auto vc = tfidf(hyps_[i]);
      double norm_c = 0.0;
      for (const auto& [g, x] : vc) norm_c += x * x;
      if (norm_c == 0.0) continue;
      double acc = 0.0;
      for (const auto& r : refs_[i]) {
        const auto vr = tfidf(r);
        double norm_r = 0.0, dot = 0.0;
        for (const auto& [g, x] : vr) norm_r += x * x;
        for (const auto& [g, x] : vc) {
          auto it = vr.find(g);
          if (it != vr.end()) dot += x * it->second;
        }
        if (norm_r > 0.0) acc += dot / (std::sqrt(norm_c) * std::sqrt(norm_r));
      }
      // x10, averaged over the 4 orders and the references
      scores[i] += 2.5 * acc / static_cast<double>(refs_[i].size());
    }
  }
  return scores;
}

double self_bleu4(const std::vector<Tokens>& sentences) {
  if (sentences.size() < 2)
    throw std::invalid_argument("self_bleu4: need at least 2 sentences, got " +
                                std::to_string(sentences.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    std::vector<Tokens> others;
    others.reserve(sentences.size() - 1);
    for (std::size_t j = 0; j < sentences.size(); ++j)
      if (j != i) others.push_back(sentences[j]);
    acc += bleu4(sentences[i], others);
  }
  return acc / static_cast<double>(sentences.size());
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("iou: mask shapes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool a = pred.values[i] != 0, b = gt.values[i] != 0;
    inter += a && b ? 1 : 0;
    uni += a || b ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double vqa_accuracy(const std::string& pred, const std::vector<std::string>& answers) {
  if (answers.size() != kAnswersPerQuestion)
    throw std::invalid_argument("vqa_accuracy: expected " +
                                std::to_string(kAnswersPerQuestion) + " answers, got " +
                                std::to_string(answers.size()));
  const std::string p = normalize_join(pred);
  int matches = 0;
  for (const auto& a : answers)
    if (normalize_join(a) == p) ++matches;
  return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

ScoreReport ScoreReport::from_rows(std::vector<PerSampleScores> rows) {
  ScoreReport rep;
  rep.rows = std::move(rows);
  if (rep.rows.empty()) return rep;
  const double n = static_cast<double>(rep.rows.size());
  for (const auto& r : rep.rows) {
    rep.bleu4 += r.bleu4;
    rep.rouge_l += r.rouge_l;
    rep.meteor += r.meteor;
    rep.cider += r.cider;
    rep.iou += r.iou;
    rep.vqa_accuracy += r.vqa_accuracy;
  }
  rep.bleu4 /= n;
  rep.rouge_l /= n;
  rep.meteor /= n;
  rep.cider /= n;
  rep.iou /= n;
  rep.vqa_accuracy /= n;
  return rep;
}

std::string ScoreReport::to_csv() const {
  std::ostringstream os;
  os << "question_id,bleu4,rouge_l,meteor,cider,iou,vqa_accuracy\n";
  os.setf(std::ios::fixed);
  os.precision(6);
  for (const auto& r : rows)
    os << r.question_id << ',' << r.bleu4 << ',' << r.rouge_l << ',' << r.meteor << ','
       << r.cider << ',' << r.iou << ',' << r.vqa_accuracy << '\n';
  return os.str();
}

std::string ScoreReport::summary_text() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "samples        " << rows.size() << '\n';
  os << "vqa_accuracy   " << vqa_accuracy * 100.0 << '\n';
  os << "bleu4          " << bleu4 * 100.0 << '\n';
  os << "rouge_l        " << rouge_l * 100.0 << '\n';
  os << "meteor         " << meteor * 100.0 << '\n';
  os << "cider          " << cider * 100.0 << '\n';
  os << "iou            " << iou * 100.0 << '\n';
  return os.str();
}

}  // namespace mtx

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtx/metrics.hpp"
#include "mtx/rng.hpp"
#include "oracles.hpp"

using mtx::Tokens;

namespace {

Tokens random_sentence(mtx::Rng& rng, int min_len, int max_len) {
  static const std::vector<std::string> kWords{"red",  "blue", "box",  "sign", "the",
                                               "stop", "cat",  "mat",  "on",   "a"};
  Tokens out;
  const int len = rng.next_int(min_len, max_len);
  for (int i = 0; i < len; ++i)
    out.push_back(kWords[static_cast<std::size_t>(rng.next_int(0, 9))]);
  return out;
}

mtx::BinaryMask mask_from(const std::vector<std::uint8_t>& v, int h, int w) {
  mtx::BinaryMask m = mtx::BinaryMask::zeros(h, w);
  m.values = v;
  return m;
}

}  // namespace

TEST_CASE("porter stemmer reproduces the published behaviour") {
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"caresses", "caress"},   {"ponies", "poni"},        {"ties", "ti"},
      {"caress", "caress"},     {"cats", "cat"},           {"feed", "feed"},
      {"agreed", "agre"},       {"plastered", "plaster"},  {"motoring", "motor"},
      {"sing", "sing"},         {"conflated", "conflat"},  {"troubled", "troubl"},
      {"sized", "size"},        {"hopping", "hop"},        {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},       {"fizzed", "fizz"},
      {"failing", "fail"},      {"filing", "file"},        {"happy", "happi"},
      {"sky", "sky"},           {"crying", "cry"},         {"mules", "mule"},
      {"relational", "relat"},  {"conditional", "condit"}, {"rational", "ration"},
      {"valenci", "valenc"},    {"hesitanci", "hesit"},    {"digitizer", "digit"},
      {"conformabli", "conform"}, {"radicalli", "radic"},  {"differentli", "differ"},
      {"vileli", "vile"},       {"analogousli", "analog"}, {"vietnamization", "vietnam"},
      {"predication", "predic"}, {"operator", "oper"},     {"feudalism", "feudal"},
      {"decisiveness", "decis"}, {"hopefulness", "hope"},  {"callousness", "callous"},
      {"formaliti", "formal"},  {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"},
      {"triplicate", "triplic"}, {"formative", "form"},    {"formalize", "formal"},
      {"electriciti", "electr"}, {"electrical", "electr"}, {"hopeful", "hope"},
      {"goodness", "good"},     {"revival", "reviv"},      {"allowance", "allow"},
      {"inference", "infer"},   {"airliner", "airlin"},    {"gyroscopic", "gyroscop"},
      {"adjustable", "adjust"}, {"defensible", "defens"},  {"irritant", "irrit"},
      {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"},
      {"adoption", "adopt"},    {"communism", "commun"},   {"activate", "activ"},
      {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
      {"bowdlerize", "bowdler"}, {"probate", "probat"},    {"rate", "rate"},
      {"cease", "ceas"},        {"controll", "control"},   {"roll", "roll"}};
  for (const auto& [word, stem] : pairs) CHECK_MESSAGE(mtx::porter_stem(word) == stem, word);
  CHECK(mtx::porter_stem("an") == "an");
  CHECK(mtx::porter_stem("route66") == "route66");
  CHECK(mtx::porter_stem("") == "");
}

TEST_CASE("bleu4 trivial cases") {
  const Tokens s{"the", "stop", "sign", "is", "red"};
  CHECK(mtx::bleu4(s, {s}) == doctest::Approx(1.0));
  CHECK(mtx::bleu4({"cat", "dog", "bird", "fish"}, {s}) == 0.0);
  CHECK(mtx::bleu4({}, {s}) == 0.0);
  CHECK_THROWS(mtx::bleu4(s, {}));
}

TEST_CASE("bleu4 frozen regression value") {
  const Tokens hyp{"the", "cat", "sat", "on", "the", "mat"};
  const std::vector<Tokens> refs{{"the", "cat", "sat", "on", "a", "mat"}};
  CHECK(mtx::bleu4(hyp, refs) == doctest::Approx(0.537284965912).epsilon(1e-9));
  CHECK(std::abs(mtx::bleu4(hyp, refs) - oracle::bleu4(hyp, refs)) < 1e-12);
}

TEST_CASE("rouge_l trivial and frozen cases") {
  const Tokens s{"a", "b", "c", "d"};
  CHECK(mtx::rouge_l(s, s) == doctest::Approx(1.0));
  CHECK(mtx::rouge_l({"x", "y"}, s) == 0.0);
  CHECK(mtx::rouge_l(s, {"a", "c", "d", "b"}) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK_THROWS(mtx::rouge_l_multi(s, {}));
}

TEST_CASE("meteor identity, disjoint, stemming") {
  const Tokens s{"red", "stop", "sign", "here"};
  CHECK(mtx::meteor(s, s) == doctest::Approx(0.9921875).epsilon(1e-12));
  CHECK(mtx::meteor({"x"}, {"y"}) == 0.0);
  CHECK(mtx::meteor({"cats"}, {"cat"}) == doctest::Approx(0.5));
  mtx::SynonymTable syn{{"auto", {"car"}}};
  CHECK(mtx::meteor({"auto"}, {"car"}, syn) == doctest::Approx(0.5));
  CHECK(mtx::meteor({"auto"}, {"car"}) == 0.0);
}

TEST_CASE("sentence metrics match the oracles on random pairs") {
  mtx::Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const Tokens hyp = random_sentence(rng, 1, 8);
    const Tokens ref1 = random_sentence(rng, 1, 8);
    const Tokens ref2 = random_sentence(rng, 1, 8);
    CHECK(std::abs(mtx::bleu4(hyp, {ref1, ref2}) - oracle::bleu4(hyp, {ref1, ref2})) < 1e-9);
    CHECK(std::abs(mtx::rouge_l(hyp, ref1) - oracle::rouge_l(hyp, ref1, 1.2)) < 1e-9);
    CHECK(std::abs(mtx::meteor(hyp, ref1) - oracle::meteor(hyp, ref1, mtx::porter_stem)) <
          1e-9);
  }
}

TEST_CASE("sentence metrics are maximal at identity and ref-order invariant") {
  mtx::Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const Tokens s = random_sentence(rng, 4, 7);
    const Tokens other = random_sentence(rng, 4, 7);
    CHECK(mtx::bleu4(s, {s}) == doctest::Approx(1.0));
    CHECK(mtx::bleu4(s, {other}) <= 1.0 + 1e-12);
    CHECK(mtx::bleu4({"go"}, {{"go"}}) == 0.0);  // shorter than a 4-gram: no smoothing
    CHECK(mtx::bleu4(s, {s, other}) == doctest::Approx(mtx::bleu4(s, {other, s})));
    CHECK(mtx::rouge_l_multi(s, {s, other}) == doctest::Approx(mtx::rouge_l_multi(s, {other, s})));
    CHECK(mtx::meteor_multi(s, {s, other}) == doctest::Approx(mtx::meteor_multi(s, {other, s})));
  }
}

TEST_CASE("cider identity in a corpus of distinct sentences is 10") {
  mtx::CiderScorer sc;
  sc.add({"a", "red", "square", "sits", "here"}, {{"a", "red", "square", "sits", "here"}});
  sc.add({"blue", "circle", "floats", "above"}, {{"blue", "circle", "floats", "above"}});
  sc.add({"green", "box", "under", "table"}, {{"green", "box", "under", "table"}});
  const auto s = sc.compute();
  for (double v : s) CHECK(v == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("cider disjoint n-grams score 0") {
  mtx::CiderScorer sc;
  sc.add({"x", "y", "z"}, {{"a", "b", "c"}});
  sc.add({"p", "q"}, {{"r", "s"}});
  const auto s = sc.compute();
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(0.0));
}

TEST_CASE("cider frozen toy corpus and oracle agreement") {
  mtx::CiderScorer sc;
  sc.add({"a", "red", "square"}, {{"a", "red", "square"}, {"the", "red", "square"}});
  sc.add({"a", "blue", "circle"}, {{"a", "small", "blue", "circle"}});
  sc.add({"green", "box"}, {{"the", "green", "box", "sits", "here"}});
  const auto s = sc.compute();
  REQUIRE(s.size() == 3);
  CHECK(s[0] == doctest::Approx(5.545295368154).epsilon(1e-9));
  CHECK(s[1] == doctest::Approx(3.083907076847).epsilon(1e-9));
  CHECK(s[2] == doctest::Approx(2.988415425338).epsilon(1e-9));

  const std::vector<Tokens> cands{{"a", "red", "square"}, {"a", "blue", "circle"},
                                  {"green", "box"}};
  const std::vector<std::vector<Tokens>> refs{
      {{"a", "red", "square"}, {"the", "red", "square"}},
      {{"a", "small", "blue", "circle"}},
      {{"the", "green", "box", "sits", "here"}}};
  const auto o = oracle::cider(cands, refs);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(s[static_cast<std::size_t>(i)] - o[static_cast<std::size_t>(i)]) < 1e-9);
}

TEST_CASE("cider is invariant to corpus order") {
  mtx::CiderScorer a, b;
  a.add({"a", "red", "square"}, {{"the", "red", "square"}});
  a.add({"green", "box"}, {{"a", "green", "box"}});
  b.add({"green", "box"}, {{"a", "green", "box"}});
  b.add({"a", "red", "square"}, {{"the", "red", "square"}});
  const auto sa = a.compute();
  const auto sb = b.compute();
  CHECK(sa[0] == doctest::Approx(sb[1]).epsilon(1e-12));
  CHECK(sa[1] == doctest::Approx(sb[0]).epsilon(1e-12));
}

TEST_CASE("multi_ref_average arithmetic") {
  const Tokens hyp{"a", "b", "c", "d"};
  auto metric = [](const Tokens& h, const std::vector<Tokens>& rs) { return mtx::bleu4(h, rs); };
  CHECK(mtx::multi_ref_average(metric, hyp, {hyp}) == doctest::Approx(1.0));
  CHECK(mtx::multi_ref_average(metric, hyp, {hyp, hyp}) == doctest::Approx(1.0));
  CHECK(mtx::multi_ref_average(metric, hyp, {hyp, {"x", "y", "z", "w"}}) ==
        doctest::Approx(0.5));
}

TEST_CASE("self_bleu4") {
  const Tokens s{"red", "box", "on", "desk"};
  CHECK(mtx::self_bleu4({s, s, s}) == doctest::Approx(1.0));
  CHECK(mtx::self_bleu4({{"a", "b", "c", "d"}, {"w", "x", "y", "z"}}) == doctest::Approx(0.0));
  CHECK_THROWS(mtx::self_bleu4({s}));
}

TEST_CASE("iou trivial cases, edge conventions and symmetry") {
  auto a = mask_from({1, 1, 0, 0}, 2, 2);
  auto b = mask_from({1, 1, 0, 0}, 2, 2);
  auto half = mask_from({1, 0, 0, 0}, 2, 2);
  auto empty = mask_from({0, 0, 0, 0}, 2, 2);
  auto disjoint = mask_from({0, 0, 1, 1}, 2, 2);
  CHECK(mtx::iou(a, b) == doctest::Approx(1.0));
  CHECK(mtx::iou(a, half) == doctest::Approx(0.5));
  CHECK(mtx::iou(a, disjoint) == doctest::Approx(0.0));
  CHECK(mtx::iou(empty, empty) == doctest::Approx(1.0));
  CHECK(mtx::iou(a, empty) == doctest::Approx(0.0));
  CHECK(mtx::iou(empty, a) == doctest::Approx(0.0));
  CHECK(mtx::iou(a, half) == doctest::Approx(mtx::iou(half, a)));
  CHECK_THROWS(mtx::iou(a, mask_from({1, 1, 0, 0, 0, 0}, 2, 3)));

  mtx::Rng rng(5);
  std::vector<std::uint8_t> va(36), vb(36);
  for (auto& v : va) v = rng.next_int(0, 1);
  for (auto& v : vb) v = rng.next_int(0, 1);
  CHECK(mtx::iou(mask_from(va, 6, 6), mask_from(vb, 6, 6)) ==
        doctest::Approx(oracle::iou(va, vb)).epsilon(1e-12));
}

TEST_CASE("vqa_accuracy soft voting") {
  std::vector<std::string> answers{"stop", "stop", "stop", "go", "go", "yield", "stop",
                                   "left", "right", "stop"};
  CHECK(mtx::vqa_accuracy("stop", answers) == doctest::Approx(1.0));
  CHECK(mtx::vqa_accuracy("Stop!", answers) == doctest::Approx(1.0));
  CHECK(mtx::vqa_accuracy("yield", answers) == doctest::Approx(1.0 / 3.0));
  CHECK(mtx::vqa_accuracy("go", answers) == doctest::Approx(2.0 / 3.0));
  CHECK(mtx::vqa_accuracy("banana", answers) == doctest::Approx(0.0));
  CHECK_THROWS(mtx::vqa_accuracy("stop", {"stop", "stop"}));

  // monotone in match count
  double prev = -1.0;
  for (int k = 0; k <= 10; ++k) {
    std::vector<std::string> ans(10, "other");
    for (int i = 0; i < k; ++i) ans[static_cast<std::size_t>(i)] = "hit";
    const double v = mtx::vqa_accuracy("hit", ans);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("score report aggregates rows and serializes") {
  mtx::PerSampleScores r1{"q1", 1.0, 1.0, 1.0, 10.0, 1.0, 1.0};
  mtx::PerSampleScores r2{"q2", 0.0, 0.5, 0.0, 0.0, 0.0, 0.0};
  auto rep = mtx::ScoreReport::from_rows({r1, r2});
  CHECK(rep.bleu4 == doctest::Approx(0.5));
  CHECK(rep.rouge_l == doctest::Approx(0.75));
  CHECK(rep.cider == doctest::Approx(5.0));
  const auto csv = rep.to_csv();
  CHECK(csv.find("question_id,bleu4") == 0);
  CHECK(csv.find("q1,1.000000") != std::string::npos);
  CHECK(rep.summary_text().find("cider") != std::string::npos);
}

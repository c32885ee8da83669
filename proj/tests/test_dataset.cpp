#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtx/dataset.hpp"
#include "mtx/image.hpp"
#include "mtx/metrics.hpp"
#include "mtx/text.hpp"
#include "oracles.hpp"

using namespace mtx;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() / ("mtx_dataset_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

BinaryMask mask_of(int h, int w, std::vector<int> ones) {
  BinaryMask m = BinaryMask::zeros(h, w);
  for (int i : ones) m.values[static_cast<std::size_t>(i)] = 1;
  return m;
}

// a 6x6 RGB test image with distinguishable quadrants
ImageF quad_image() {
  ImageF img = ImageF::zeros(6, 6, 3);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      img.at(0, y, x) = x < 3 ? 200 / 255.f : 30 / 255.f;
      img.at(1, y, x) = y < 3 ? 180 / 255.f : 50 / 255.f;
      img.at(2, y, x) = 90 / 255.f;
    }
  return img;
}

json base_record(const std::string& img_rel, const std::string& mask_rel) {
  json rec;
  rec["image_id"] = "img-1";
  rec["image_path"] = img_rel;
  rec["question"] = "what color is the box?";
  rec["answers"] = json::array({"red", "red", "blue"});
  rec["ocr"] = json::array({{{"text", "red"},
                             {"box", {1.0, 1.0, 4.0, 3.0}},
                             {"appearance_path", nullptr},
                             {"confidence", 0.9}}});
  rec["objects"] = json::array(
      {{{"box", {0.0, 0.0, 5.0, 5.0}}, {"appearance_path", nullptr}, {"score", 0.8}}});
  rec["explanations"] = json::array({"the box is painted red", "a red box sits on the desk"});
  rec["mask_path"] = mask_rel;
  return rec;
}

struct Fixture {
  fs::path dir;
  std::string records;

  explicit Fixture(const std::string& tag) : dir(fresh_dir(tag)) {
    write_png(quad_image(), (dir / "img.png").string());
    ImageF m = ImageF::zeros(6, 6, 1);
    for (int x = 1; x < 4; ++x) m.data[static_cast<std::size_t>(1) * 6 + x] = 1.f;
    write_png(m, (dir / "mask.png").string());
    records = (dir / "data.jsonl").string();
  }

  void write_records(const std::vector<json>& recs) {
    std::ofstream out(records);
    for (const auto& r : recs) out << r.dump() << "\n";
  }
};

}  // namespace

TEST_CASE("mask aggregation follows the inclusive majority rule") {
  AnnotationBundle b;
  b.question_id = "q1";
  // 5 annotators: pixel 0 marked by 3, pixel 1 marked by 2
  for (int i = 0; i < 5; ++i) {
    std::vector<int> ones;
    if (i < 3) ones.push_back(0);
    if (i < 2) ones.push_back(1);
    b.masks.push_back(mask_of(1, 2, ones));
    b.explanations.push_back("e");
  }
  SegmentationMask agg = aggregate_masks(b);
  CHECK(agg.values[0] == 1.f);
  CHECK(agg.values[1] == 0.f);
  CHECK(agg.provenance == SegmentationMask::Provenance::ground_truth);

  AnnotationBundle tie;
  tie.question_id = "q2";
  tie.masks.push_back(mask_of(1, 1, {0}));
  tie.masks.push_back(mask_of(1, 1, {}));
  CHECK(aggregate_masks(tie).values[0] == 1.f);  // 1 of 2 = exactly 0.5, kept
}

TEST_CASE("mask aggregation is permutation invariant and validates shapes") {
  Rng rng(99);
  AnnotationBundle b;
  b.question_id = "q";
  for (int k = 0; k < 4; ++k) {
    std::vector<int> ones;
    for (int p = 0; p < 30; ++p)
      if (rng.next_real() < 0.4) ones.push_back(p);
    b.masks.push_back(mask_of(5, 6, ones));
  }
  SegmentationMask ref = aggregate_masks(b);
  AnnotationBundle shuffled = b;
  std::swap(shuffled.masks[0], shuffled.masks[3]);
  std::swap(shuffled.masks[1], shuffled.masks[2]);
  CHECK(aggregate_masks(shuffled).values == ref.values);

  b.masks.push_back(mask_of(6, 5, {}));
  CHECK_THROWS_WITH_AS(aggregate_masks(b),
                       doctest::Contains("mask 4"), std::invalid_argument);
  AnnotationBundle empty;
  empty.question_id = "q0";
  CHECK_THROWS_AS(aggregate_masks(empty), std::invalid_argument);
}

TEST_CASE("self-bleu of a pool of sentences") {
  auto toks = [](std::initializer_list<const char*> xs) {
    std::vector<std::vector<std::string>> out;
    for (const char* x : xs) out.push_back(normalize_text(x));
    return out;
  };
  CHECK(self_bleu4(toks({"a b c d e", "a b c d e"})) == doctest::Approx(1.0));
  CHECK(self_bleu4(toks({"a b c d", "e f g h"})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(self_bleu4(toks({"only one sentence"})), std::invalid_argument);
}

TEST_CASE("annotation filter drops short zero-overlap entries only") {
  std::vector<std::string> pool = {
      "the bus number shown on the front is forty two",
      "the number forty two is printed on the bus front",
      "cat",  // 1 token, no shared 4-gram: dropped
  };
  auto kept = filter_annotations(pool);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0] == pool[0]);
  CHECK(kept[1] == pool[1]);

  // long enough entries stay even with zero n-gram overlap
  std::vector<std::string> longs = {
      "completely different words here about one thing",
      "another unrelated sentence concerning something else entirely",
  };
  CHECK(filter_annotations(longs).size() == 2);

  // never empties the list; the longest survivor stays
  std::vector<std::string> all_bad = {"a", "b c", "d"};
  auto left = filter_annotations(all_bad);
  REQUIRE(left.size() == 1);
  CHECK(left[0] == "b c");

  CHECK(filter_annotations({"solo"}).size() == 1);
}

TEST_CASE("derived appearance features are content keyed") {
  ImageF img = quad_image();
  BoundingBox a{0, 0, 3, 3}, b{3, 3, 6, 6}, c{0, 0, 3, 3};
  auto va = derive_appearance(img, a, 16);
  auto vb = derive_appearance(img, b, 16);
  auto vc = derive_appearance(img, c, 16);
  REQUIRE(va.size() == 16);
  CHECK(va == vc);
  CHECK(va != vb);
  // leading entries carry channel statistics of the crop
  CHECK(va[0] == doctest::Approx(200 / 255.0).epsilon(1e-6));
  CHECK(va[1] == doctest::Approx(0.0).epsilon(1e-6));

  // translated identical content hashes identically
  ImageF flat = ImageF::zeros(8, 8, 3);
  auto v1 = derive_appearance(flat, {0, 0, 2, 2}, 12);
  auto v2 = derive_appearance(flat, {5, 5, 7, 7}, 12);
  CHECK(v1 == v2);
}

TEST_CASE("loader reads a valid record and pads answers") {
  Fixture f("ok");
  f.write_records({base_record("img.png", "mask.png")});
  ModelConfig cfg = ModelConfig::synthetic_preset();
  auto samples = load_dataset(f.records, cfg);
  REQUIRE(samples.size() == 1);
  const Sample& s = samples[0];
  CHECK(s.image_id == "img-1");
  CHECK(s.image.height == 6);
  CHECK(s.image.channels == 3);
  REQUIRE(s.answers.size() == 10);
  CHECK(s.answers[0] == "red");
  CHECK(s.answers[2] == "blue");
  for (std::size_t i = 3; i < 10; ++i) CHECK(s.answers[i] == "red");  // most frequent pads
  REQUIRE(s.ocr.size() == 1);
  CHECK(s.ocr[0].text == "red");
  CHECK(s.ocr[0].appearance.size() == static_cast<std::size_t>(cfg.d_app));
  REQUIRE(s.objects.size() == 1);
  CHECK(s.text_explanations.size() == 2);
  CHECK(s.visual_explanation.height == 6);
  CHECK(s.visual_explanation.values[1 * 6 + 1] == 1.f);
  CHECK(s.visual_explanation.values[0] == 0.f);

  // derived appearance equals calling the derivation directly
  auto direct = derive_appearance(s.image, s.ocr[0].box, cfg.d_app);
  CHECK(s.ocr[0].appearance == direct);
}

TEST_CASE("loader truncates streams to configured caps") {
  Fixture f("trunc");
  json rec = base_record("img.png", "mask.png");
  json ocr_entry = rec["ocr"][0];
  json obj_entry = rec["objects"][0];
  rec["ocr"] = json::array();
  rec["objects"] = json::array();
  for (int i = 0; i < 9; ++i) rec["ocr"].push_back(ocr_entry);
  for (int i = 0; i < 9; ++i) rec["objects"].push_back(obj_entry);
  rec["explanations"] = json::array();
  for (int i = 0; i < 7; ++i)
    rec["explanations"].push_back("the answer is clearly written on the box " + std::to_string(i));
  f.write_records({rec});
  ModelConfig cfg = ModelConfig::synthetic_preset();  // max_ocr 4, max_objects 6
  auto samples = load_dataset(f.records, cfg);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].ocr.size() == 4);
  CHECK(samples[0].objects.size() == 6);
  CHECK(samples[0].text_explanations.size() == 5);
}

TEST_CASE("loader rejects schema violations naming field and record") {
  ModelConfig cfg = ModelConfig::synthetic_preset();
  auto expect_error = [&](json rec, const char* needle, const std::string& tag) {
    Fixture f(tag);
    f.write_records({rec});
    CHECK_THROWS_WITH_AS(load_dataset(f.records, cfg), doctest::Contains(needle),
                         std::runtime_error);
  };

  json rec = base_record("img.png", "mask.png");
  rec.erase("question");
  expect_error(rec, "question", "missing_q");

  rec = base_record("img.png", "mask.png");
  rec["answers"] = json::array();
  expect_error(rec, "answers", "empty_answers");

  rec = base_record("img.png", "mask.png");
  rec["answers"] = json::array({"a", "a", "a", "a", "a", "a", "a", "a", "a", "a", "a"});
  expect_error(rec, "answers", "too_many_answers");

  rec = base_record("img.png", "mask.png");
  rec["explanations"] = json::array();
  expect_error(rec, "explanations", "no_expl");

  rec = base_record("img.png", "mask.png");
  rec["ocr"][0]["box"] = {4.0, 1.0, 1.0, 3.0};
  expect_error(rec, "ocr.box", "bad_box");

  rec = base_record("img.png", "mask.png");
  rec["ocr"][0]["confidence"] = 1.5;
  expect_error(rec, "ocr.confidence", "bad_conf");

  rec = base_record("img.png", "mask.png");
  rec["ocr"][0]["text"] = "";
  expect_error(rec, "ocr.text", "empty_text");

  rec = base_record("img.png", "mask.png");
  rec["mask_path"] = "missing_mask.png";
  expect_error(rec, "missing_mask.png", "lost_mask");

  rec = base_record("img.png", "mask.png");
  rec["image_path"] = "missing_img.png";
  expect_error(rec, "missing_img.png", "lost_img");

  // error message names the record id
  rec = base_record("img.png", "mask.png");
  rec.erase("objects");
  expect_error(rec, "img-1", "names_record");
}

TEST_CASE("loader rejects mask whose shape differs from the image") {
  Fixture f("shape");
  ImageF wrong = ImageF::zeros(4, 4, 1);
  write_png(wrong, (f.dir / "mask4.png").string());
  json rec = base_record("img.png", "mask4.png");
  f.write_records({rec});
  CHECK_THROWS_WITH_AS(load_dataset(f.records, ModelConfig::synthetic_preset()),
                       doctest::Contains("mask"), std::runtime_error);
}

TEST_CASE("synthetic generation is deterministic and self-consistent") {
  auto a = generate_synthetic(3, 7, 64, 24);
  auto b = generate_synthetic(3, 7, 64, 24);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image.data == b[i].image.data);
    CHECK(a[i].question == b[i].question);
    CHECK(a[i].answers == b[i].answers);
    CHECK(a[i].text_explanations == b[i].text_explanations);
    CHECK(a[i].visual_explanation.values == b[i].visual_explanation.values);
    REQUIRE(a[i].ocr.size() == b[i].ocr.size());
    for (std::size_t j = 0; j < a[i].ocr.size(); ++j) {
      CHECK(a[i].ocr[j].text == b[i].ocr[j].text);
      CHECK(a[i].ocr[j].appearance == b[i].ocr[j].appearance);
    }
  }
  // prefix stability: sample i does not depend on n
  auto longer = generate_synthetic(5, 7, 64, 24);
  CHECK(longer[2].image.data == a[2].image.data);
  CHECK(longer[2].question == a[2].question);
}

TEST_CASE("synthetic samples satisfy the task construction invariants") {
  auto samples = generate_synthetic(40, 3, 64, 24);
  for (const auto& s : samples) {
    REQUIRE(s.answers.size() == 10);
    for (const auto& a : s.answers) CHECK(a == s.answers[0]);
    bool found = false;
    for (const auto& t : s.ocr) found = found || t.text == s.answers[0];
    CHECK(found);  // the answer is readable from OCR
    CHECK(s.ocr.size() >= 1);
    CHECK(s.ocr.size() <= 3);
    CHECK(s.objects.size() >= 2);
    CHECK(s.objects.size() <= 6);
    CHECK(s.text_explanations.size() == 3);
    for (const auto& e : s.text_explanations)
      CHECK(e.find(s.answers[0]) != std::string::npos);

    // mask equals the answer token's box region
    double mask_sum = 0;
    for (float v : s.visual_explanation.values) mask_sum += v;
    CHECK(mask_sum > 0);
    const OcrToken* ans_tok = nullptr;
    for (const auto& t : s.ocr)
      if (t.text == s.answers[0]) ans_tok = &t;
    REQUIRE(ans_tok != nullptr);
    CHECK(mask_sum == doctest::Approx(ans_tok->box.area()));
    bool mask_is_box = true;
    for (int y = 0; y < s.visual_explanation.height; ++y)
      for (int x = 0; x < s.visual_explanation.width; ++x) {
        const bool inside = x >= ans_tok->box.x_min && x < ans_tok->box.x_max &&
                            y >= ans_tok->box.y_min && y < ans_tok->box.y_max;
        mask_is_box = mask_is_box && s.visual_explanation.at(y, x) == (inside ? 1.f : 0.f);
      }
    CHECK(mask_is_box);

    bool in_range = true;
    for (float v : s.image.data) in_range = in_range && v >= 0.f && v <= 1.f;
    CHECK(in_range);
    for (const auto& o : s.objects) CHECK(o.appearance.size() == 24);
    for (const auto& t : s.ocr) CHECK(t.confidence >= 0.8);
  }
}

TEST_CASE("synthetic answers are color balanced by round robin") {
  auto samples = generate_synthetic(60, 5, 64, 16);
  std::map<std::string, int> color_count;
  for (const auto& s : samples) {
    // question reads "what is written on the <color> <shape>?"
    auto toks = normalize_text(s.question);
    REQUIRE(toks.size() == 7);
    ++color_count[toks[5]];
  }
  REQUIRE(color_count.size() == 6);
  for (const auto& [color, count] : color_count) CHECK(count == 10);
}

TEST_CASE("synthetic save then load reproduces the samples") {
  const int d_app = ModelConfig::synthetic_preset().d_app;
  auto samples = generate_synthetic(3, 21, 64, d_app);
  fs::path dir = fresh_dir("roundtrip");
  std::string records = save_dataset(samples, dir.string());
  auto loaded = load_dataset(records, ModelConfig::synthetic_preset());
  REQUIRE(loaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const Sample& l = loaded[i];
    CHECK(l.image_id == s.image_id);
    CHECK(l.question == s.question);
    CHECK(l.answers == s.answers);
    CHECK(l.text_explanations == s.text_explanations);
    CHECK(l.image.data == s.image.data);  // palette lives on the 8-bit grid
    CHECK(l.visual_explanation.values == s.visual_explanation.values);
    REQUIRE(l.ocr.size() == s.ocr.size());
    for (std::size_t j = 0; j < s.ocr.size(); ++j) {
      CHECK(l.ocr[j].text == s.ocr[j].text);
      CHECK(l.ocr[j].box.x_min == s.ocr[j].box.x_min);
      CHECK(l.ocr[j].confidence == doctest::Approx(s.ocr[j].confidence));
      CHECK(l.ocr[j].appearance == s.ocr[j].appearance);
    }
    REQUIRE(l.objects.size() == s.objects.size());
    for (std::size_t j = 0; j < s.objects.size(); ++j)
      CHECK(l.objects[j].appearance == s.objects[j].appearance);
  }
}

TEST_CASE("image grouped split covers the input disjointly") {
  auto samples = generate_synthetic(10, 13, 64, 8);  // distinct image ids
  auto [train, test] = split_dataset(samples, 0.8, 42);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
  auto [train2, test2] = split_dataset(samples, 0.8, 42);
  REQUIRE(train2.size() == train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    CHECK(train2[i].question_id == train[i].question_id);

  std::set<std::string> train_imgs, test_imgs;
  for (const auto& s : train) train_imgs.insert(s.image_id);
  for (const auto& s : test) test_imgs.insert(s.image_id);
  for (const auto& id : test_imgs) CHECK(train_imgs.count(id) == 0);

  // multiset cover by question_id
  std::multiset<std::string> all_in, all_out;
  for (const auto& s : samples) all_in.insert(s.question_id);
  for (const auto& s : train) all_out.insert(s.question_id);
  for (const auto& s : test) all_out.insert(s.question_id);
  CHECK(all_in == all_out);

  // grouping: several questions per image never straddle the split
  auto multi = samples;
  for (int k = 0; k < 10; ++k) {
    Sample copy = samples[static_cast<std::size_t>(k)];
    copy.image_id = "shared-img";
    copy.question_id = "extra-" + std::to_string(k);
    multi.push_back(copy);
  }
  auto [mtrain, mtest] = split_dataset(multi, 0.5, 7);
  std::set<std::string> mtrain_imgs, mtest_imgs;
  for (const auto& s : mtrain) mtrain_imgs.insert(s.image_id);
  for (const auto& s : mtest) mtest_imgs.insert(s.image_id);
  for (const auto& id : mtest_imgs) CHECK(mtrain_imgs.count(id) == 0);

  // one shared image forces an empty side
  std::vector<Sample> one_group(samples.begin(), samples.begin() + 4);
  for (auto& s : one_group) s.image_id = "same";
  auto [otrain, otest] = split_dataset(one_group, 0.8, 1);
  CHECK(otrain.size() == 4);
  CHECK(otest.empty());

  CHECK_THROWS_AS(split_dataset(samples, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(samples, 1.0, 1), std::invalid_argument);
}

TEST_CASE("dataset statistics match hand counts on a fixture") {
  std::vector<Sample> fixture;
  auto mk = [](const std::string& img, const std::string& q,
               std::vector<std::string> expl) {
    Sample s;
    s.image_id = img;
    s.question_id = img + "#" + q;
    s.question = q;
    s.answers.assign(10, "x");
    s.text_explanations = std::move(expl);
    return s;
  };
  fixture.push_back(mk("i1", "what is this?", {"a red car", "the car is red"}));
  fixture.push_back(mk("i1", "where is it?", {"on the road"}));
  fixture.push_back(mk("i2", "what is this?", {"a red car", "some kind of car"}));
  fixture.push_back(mk("i3", "who made it?", {"the ford motor company builds it"}));
  fixture.push_back(mk("i3", "what color?", {"red", "it is red"}));

  DatasetStats st = dataset_stats(fixture);
  CHECK(st.n_images == 3);
  CHECK(st.n_questions == 5);
  CHECK(st.n_unique_questions == 4);  // "what is this?" repeats
  CHECK(st.n_text_expl == 8);
  CHECK(st.n_unique_text_expl == 7);  // "a red car" repeats
  CHECK(st.avg_expl_per_q == doctest::Approx(8.0 / 5.0));
  // words: 3+4 +3 +3+4 +6 +1+3 = 27
  CHECK(st.avg_words_per_expl == doctest::Approx(27.0 / 8.0));
  // chars: 9+14+11+9+16+32+3+9 = 103
  CHECK(st.avg_chars_per_expl == doctest::Approx(103.0 / 8.0));
  // distinct tokens: a,red,car,the,is,on,road,some,kind,of,ford,motor,company,builds,it
  CHECK(st.vocab_size == 15);

  std::string text = st.summary_text();
  CHECK(text.find("questions") != std::string::npos);
  CHECK(text.find("1.60") != std::string::npos);

  // trivial cases from the contract
  std::vector<Sample> tiny = {mk("a", "q?", {"one two three", "four five six"})};
  DatasetStats t = dataset_stats(tiny);
  CHECK(t.avg_expl_per_q == doctest::Approx(2.0));
  CHECK(t.avg_words_per_expl == doctest::Approx(3.0));

  std::vector<Sample> dup = {mk("a", "same question", {"e"}),
                             mk("b", "same question", {"e"})};
  CHECK(dataset_stats(dup).n_unique_questions == 1);
  CHECK_THROWS_AS(dataset_stats({}), std::invalid_argument);
}

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>

#include <doctest.h>

#include "../support/fixtures.hpp"
#include "deco/error.hpp"
#include "deco/eval.hpp"

using namespace deco;

namespace {

std::vector<std::string> vec(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("o" + std::to_string(i));
  return out;
}

std::vector<fx::CaptionFixture> random_fixtures(std::mt19937_64& g, std::size_t count) {
  auto universe = names(12);
  auto pick = [&](double p) {
    std::set<std::string> s;
    for (const auto& n : universe)
      if (std::bernoulli_distribution(p)(g)) s.insert(n);
    return s;
  };
  std::vector<fx::CaptionFixture> out;
  for (std::size_t i = 0; i < count; ++i) {
    fx::CaptionFixture f;
    f.id = "img" + std::to_string(i);
    f.mentioned = pick(0.3);
    f.truth = pick(0.3);
    f.potential = pick(0.3);
    f.has_potential = g() % 4 != 0;
    out.push_back(f);
  }
  return out;
}

std::vector<CaptionRecord> records(const std::vector<fx::CaptionFixture>& fs) {
  ObjectVocabulary v(names(12), {});
  std::vector<CaptionRecord> out;
  for (const auto& f : fs) {
    std::optional<std::vector<std::string>> pot;
    if (f.has_potential) pot = vec(f.potential);
    out.push_back(make_caption_record(f.id, vec(f.mentioned), vec(f.truth), pot, v));
  }
  return out;
}

PopeItem item(bool gold, bool answer, PopeSplit split = PopeSplit::kRandom) {
  return {"img", "dog", gold, split, answer};
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("singularize") {
    CHECK(singularize("dogs") == "dog");
    CHECK(singularize("buses") == "bus");
    CHECK(singularize("benches") == "bench");
    CHECK(singularize("boxes") == "box");
    CHECK(singularize("skies") == "sky");
    CHECK(singularize("people") == "person");
    CHECK(singularize("knives") == "knife");
    CHECK(singularize("glass") == "glass");
    CHECK(singularize("cactus") == "cactus");
    CHECK(singularize("sheep") == "sheep");
    CHECK(singularize("bus") == "bus");
  }

  TEST_CASE("normalization and extraction") {
    ObjectVocabulary v({"dog", "dining table", "person", "tennis racket"}, {{"puppy", "dog"}, {"man", "person"}, {"table", "dining table"}});
    CHECK(v.normalize("  Dogs ") == "dog");
    CHECK(v.normalize("Puppies") == "dog");
    CHECK(v.normalize("MEN") == "person");
    CHECK(v.normalize("dining   tables") == "dining table");
    auto found = v.extract("A man with two puppies next to a table and a tennis racket");
    CHECK(found == std::vector<std::string>{"person", "dog", "dining table", "tennis racket"});
    CHECK(v.extract("dog dog dogs").size() == 1);
    CHECK(v.extract("nothing here").empty());
  }

  TEST_CASE("chair example") {
    ObjectVocabulary v({"dog", "cat", "car", "tree"}, {});
    std::vector<CaptionRecord> rs{
        make_caption_record("a", {"dog", "cat"}, {"dog"}, std::nullopt, v),
        make_caption_record("b", {"car"}, {"car", "tree"}, std::nullopt, v),
        make_caption_record("c", {"tree", "dogs"}, {"tree", "dog"}, std::nullopt, v),
    };
    auto c = chair_score(rs);
    CHECK(c.hallucinated_objects == 1);
    CHECK(c.mentioned_objects == 5);
    CHECK(c.chair_i == doctest::Approx(0.2));
    CHECK(c.chair_s == doctest::Approx(1.0 / 3.0));
    CHECK(c.chair_i_defined);
    CHECK_THROWS_AS(chair_score({}), InvalidInput);

    auto silent = chair_score({make_caption_record("x", {}, {"dog"}, std::nullopt, v)});
    CHECK(!silent.chair_i_defined);
    CHECK(silent.chair_i == 0.0);
  }

  TEST_CASE("chair duplicates and order do not matter") {
    ObjectVocabulary v({"dog", "cat"}, {});
    auto once = make_caption_record("a", {"dog", "cat"}, {"dog"}, std::nullopt, v);
    auto twice = make_caption_record("a", {"cat", "dog", "dogs", "Cat"}, {"dog", "dog"}, std::nullopt, v);
    CHECK(once.mentioned == twice.mentioned);
    CHECK(chair_score({once}).chair_i == chair_score({twice}).chair_i);

    std::mt19937_64 g(8);
    auto rs = records(random_fixtures(g, 30));
    auto base = chair_score(rs);
    std::shuffle(rs.begin(), rs.end(), g);
    auto shuffled = chair_score(rs);
    CHECK(base.chair_i == shuffled.chair_i);
    CHECK(base.chair_s == shuffled.chair_s);
  }

  TEST_CASE("chair and amber against set oracles") {
    std::mt19937_64 g(9);
    for (int trial = 0; trial < 100; ++trial) {
      auto fs = random_fixtures(g, 1 + g() % 20);
      auto rs = records(fs);
      auto co = fx::chair_oracle(fs);
      auto c = chair_score(rs);
      CHECK(std::abs(c.chair_i - co.chair_i.value()) <= 1e-12);
      CHECK(std::abs(c.chair_s - co.chair_s.value()) <= 1e-12);

      auto ao = fx::amber_oracle(fs);
      auto a = amber_score(rs);
      CHECK(std::abs(a.chair - ao.chair.value()) <= 1e-12);
      CHECK(std::abs(a.cover - ao.cover.value()) <= 1e-12);
      CHECK(std::abs(a.cover_macro - ao.cover_macro) <= 1e-12);
      CHECK(std::abs(a.hal - ao.hal.value()) <= 1e-12);
      CHECK(std::abs(a.cog - ao.cog.value()) <= 1e-12);
    }
  }

  TEST_CASE("amber example") {
    ObjectVocabulary v({"dog", "cat", "car", "tree", "bench"}, {});
    std::vector<CaptionRecord> rs{
        make_caption_record("a", {"dog", "cat", "car"}, {"dog", "tree"}, std::vector<std::string>{"cat"}, v),
        make_caption_record("b", {"bench"}, {"bench"}, std::nullopt, v),
        make_caption_record("c", {"tree"}, {}, std::vector<std::string>{}, v),
    };
    auto a = amber_score(rs);
    CHECK(a.chair == doctest::Approx(3.0 / 5.0));
    CHECK(a.cover == doctest::Approx(2.0 / 3.0));
    CHECK(a.cover_macro == doctest::Approx(0.75));
    CHECK(a.hal == doctest::Approx(2.0 / 3.0));
    CHECK(a.cog == doctest::Approx(1.0 / 3.0));
    CHECK(a.cover_excluded_records == 1);
    CHECK(a.missing_potential_records == 1);
  }

  TEST_CASE("pope scoring") {
    std::vector<PopeItem> items;
    for (int i = 0; i < 3; ++i) items.push_back(item(true, true));
    items.push_back(item(false, true));
    items.push_back(item(true, false));
    for (int i = 0; i < 5; ++i) items.push_back(item(false, false, PopeSplit::kPopular));
    auto s = pope_f1(items);
    CHECK(s.count("all") == 1);
    CHECK(s.count("random") == 1);
    CHECK(s.count("popular") == 1);
    const auto& all = s.at("all");
    CHECK(all.tp == 3);
    CHECK(all.fp == 1);
    CHECK(all.tn == 5);
    CHECK(all.fn == 1);
    CHECK(all.precision == doctest::Approx(0.75));
    CHECK(all.recall == doctest::Approx(0.75));
    CHECK(all.f1 == doctest::Approx(0.75));
    CHECK(all.accuracy == doctest::Approx(0.8));
    CHECK(all.yes_ratio == doctest::Approx(0.4));
    CHECK(!s.at("popular").f1_defined);

    items.push_back({"img", "cat", true, PopeSplit::kRandom, std::nullopt});
    CHECK_THROWS_AS(pope_f1(items), InvalidInput);
    CHECK_THROWS_AS(pope_f1({}), InvalidInput);
  }

  TEST_CASE("pope scoring against the count oracle") {
    std::mt19937_64 g(10);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<PopeItem> items;
      fx::PopeOracle o;
      std::size_t n = 1 + g() % 60;
      for (std::size_t i = 0; i < n; ++i) {
        bool gold = g() % 2, ans = g() % 3 != 0;
        items.push_back(item(gold, ans));
        (gold ? (ans ? o.tp : o.fn) : (ans ? o.fp : o.tn)) += 1;
      }
      auto s = pope_f1(items).at("all");
      CHECK(std::abs(s.precision - o.precision().value()) <= 1e-12);
      CHECK(std::abs(s.recall - o.recall().value()) <= 1e-12);
      CHECK(std::abs(s.f1 - o.f1()) <= 1e-12);
      CHECK(std::abs(s.accuracy - o.accuracy().value()) <= 1e-12);
    }
  }

  TEST_CASE("pope generation") {
    std::vector<ImageObjects> ann{{"1", {"dog", "cat", "person"}}, {"2", {"car", "person"}}};
    std::map<std::string, std::uint64_t> freq{{"dog", 5}, {"cat", 4}, {"person", 50}, {"car", 9},
                                              {"table", 40}, {"chair", 30}, {"kite", 1}, {"boat", 2}};
    std::map<std::string, std::map<std::string, std::uint64_t>> cooc{{"dog", {{"kite", 9}}}, {"person", {{"boat", 20}}}};

    auto a = pope_generate(ann, freq, cooc, PopeSplit::kRandom, 4, 7);
    auto b = pope_generate(ann, freq, cooc, PopeSplit::kRandom, 4, 7);
    CHECK(a.items == b.items);
    CHECK(a.items.size() == 8);
    for (const auto& it : a.items) {
      const auto& objs = it.image_id == "1" ? ann[0].objects : ann[1].objects;
      bool present = std::find(objs.begin(), objs.end(), it.object) != objs.end();
      CHECK(present == it.gold);
    }

    auto pop = pope_generate(ann, freq, cooc, PopeSplit::kPopular, 4, 7);
    std::vector<std::string> neg1;
    for (const auto& it : pop.items)
      if (it.image_id == "1" && !it.gold) neg1.push_back(it.object);
    CHECK(neg1 == std::vector<std::string>{"table", "chair"});

    auto adv = pope_generate(ann, freq, cooc, PopeSplit::kAdversarial, 2, 7);
    for (const auto& it : adv.items)
      if (it.image_id == "1" && !it.gold) CHECK(it.object == "boat");

    std::vector<ImageObjects> everything{{"all", {"dog", "cat", "person", "car", "table", "chair", "kite", "boat"}}};
    auto full = pope_generate(everything, freq, cooc, PopeSplit::kRandom, 4, 1);
    CHECK(full.short_images == 1);
    CHECK(full.warnings.size() == 1);

    CHECK_THROWS_AS(pope_generate(ann, freq, cooc, PopeSplit::kRandom, 3, 1), InvalidInput);
    CHECK_THROWS_AS(pope_generate(ann, freq, {}, PopeSplit::kAdversarial, 2, 1), InvalidInput);
    CHECK(pope_question("dog") == "Is there a dog in the image?");
  }
}

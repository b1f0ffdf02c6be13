// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <set>

#include <doctest.h>

#include "../support/fixtures.hpp"
#include "deco/decoding.hpp"
#include "deco/error.hpp"
#include "deco/toy_model.hpp"
#include "deco/trace.hpp"

using namespace deco;

namespace {

const ToyModel& toy() {
  static const ToyModel m{ToyModelConfig{}};
  return m;
}

TokenSequence prompt_for(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  TokenSequence p;
  p.visual_prefix_len = 3;
  for (int i = 0; i < 3; ++i) p.ids.push_back(static_cast<TokenId>(g() % 16));
  for (int i = 0; i < 5; ++i) p.ids.push_back(static_cast<TokenId>(g() % 256));
  return p;
}

DecodeConfig greedy(std::uint32_t n) {
  DecodeConfig c;
  c.max_new_tokens = n;
  return c;
}

DecoConfig off() {
  DecoConfig d;
  d.enabled = false;
  return d;
}

}  // namespace

TEST_SUITE("decoding") {
  TEST_CASE("repetition penalty examples") {
    std::vector<float> x{2.0f, -1.0f};
    std::vector<TokenId> hist{0, 1};
    CHECK(apply_repetition_penalty(x, hist, 2.0) == std::vector<float>{1.0f, -2.0f});
    CHECK(apply_repetition_penalty(x, hist, 1.0) == x);
    CHECK(apply_repetition_penalty(x, {}, 3.0) == x);
    std::vector<TokenId> repeated{0, 0, 0};
    CHECK(apply_repetition_penalty(x, repeated, 2.0) == std::vector<float>{1.0f, -1.0f});
    CHECK_THROWS_AS(apply_repetition_penalty(x, hist, 0.5), InvalidInput);
  }

  TEST_CASE("config validation") {
    DecodeConfig c;
    c.max_new_tokens = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.beam_width = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.sampling_top_p = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.repetition_penalty = 0.9;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }

  TEST_CASE("greedy without correction is the step-by-step argmax") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      TokenSequence p = prompt_for(s);
      DecodeResult r = decode(toy(), p, greedy(12), off());
      REQUIRE(r.tokens.size() == 12);
      CHECK(r.anchors.empty());
      TokenSequence grown = p;
      for (std::size_t i = 0; i < r.tokens.size(); ++i) {
        auto final = toy().forward(grown).final_logits();
        std::size_t best = 0;
        for (std::size_t t = 1; t < final.size(); ++t)
          if (final[t] > final[best]) best = t;
        CHECK(r.tokens[i] == best);
        auto prob = fx::ref_softmax(std::vector<float>(final.begin(), final.end()));
        CHECK(r.chosen_probs[i] == doctest::Approx(static_cast<double>(prob[best])).epsilon(1e-6));
        grown.ids.push_back(r.tokens[i]);
      }
    }
  }

  TEST_CASE("alpha zero matches correction off for every strategy") {
    for (Strategy st : {Strategy::kGreedy, Strategy::kNucleus, Strategy::kBeam}) {
      for (std::uint64_t s = 0; s < 5; ++s) {
        DecodeConfig c = greedy(10);
        c.strategy = st;
        c.beam_width = st == Strategy::kBeam ? 3 : 1;
        c.seed = s;
        DecoConfig zero;
        zero.alpha = 0;
        CHECK(decode(toy(), prompt_for(s), c, zero).tokens == decode(toy(), prompt_for(s), c, off()).tokens);
      }
    }
  }

  TEST_CASE("width-one beam equals greedy on corrected logits") {
    for (std::uint64_t s = 100; s < 150; ++s) {
      DecodeConfig b = greedy(10);
      b.strategy = Strategy::kBeam;
      b.beam_width = 1;
      auto gr = decode(toy(), prompt_for(s), greedy(10), DecoConfig{});
      auto bm = decode(toy(), prompt_for(s), b, DecoConfig{});
      CHECK(gr.tokens == bm.tokens);
    }
  }

  TEST_CASE("seeded nucleus decoding is reproducible") {
    DecodeConfig c = greedy(16);
    c.strategy = Strategy::kNucleus;
    c.seed = 42;
    auto a = decode(toy(), prompt_for(1), c, DecoConfig{});
    auto b = decode(toy(), prompt_for(1), c, DecoConfig{});
    CHECK(a.tokens == b.tokens);
    CHECK(a.chosen_probs == b.chosen_probs);
    c.seed = 43;
    auto d = decode(toy(), prompt_for(1), c, DecoConfig{});
    CHECK(d.tokens != a.tokens);
  }

  TEST_CASE("logged anchors stay inside the interval") {
    DecoConfig d;
    d.layer_lo = 3;
    d.layer_hi = 6;
    for (Strategy st : {Strategy::kGreedy, Strategy::kNucleus}) {
      DecodeConfig c = greedy(20);
      c.strategy = st;
      auto r = decode(toy(), prompt_for(7), c, d);
      REQUIRE(r.anchors.size() == r.tokens.size());
      for (const auto& a : r.anchors) {
        CHECK(a.anchor_layer >= 3);
        CHECK(a.anchor_layer <= 6);
      }
    }
  }

  TEST_CASE("stop token ends the sequence with and without correction") {
    TokenSequence p = prompt_for(3);
    auto free_run = decode(toy(), p, greedy(12), DecoConfig{});
    REQUIRE(free_run.tokens.size() == 12);
    DecodeConfig c = greedy(12);
    c.stop_token = free_run.tokens[4];
    auto stopped = decode(toy(), p, c, DecoConfig{});
    std::size_t first = 0;
    while (free_run.tokens[first] != *c.stop_token) ++first;
    CHECK(stopped.tokens.size() == first + 1);
    CHECK(stopped.tokens.back() == *c.stop_token);

    auto base = decode(toy(), p, greedy(12), off());
    c.stop_token = base.tokens[2];
    auto base_stop = decode(toy(), p, c, off());
    first = 0;
    while (base.tokens[first] != *c.stop_token) ++first;
    CHECK(base_stop.tokens.size() == first + 1);
  }

  TEST_CASE("repetition penalty reduces repeats") {
    auto count_repeats = [](const std::vector<TokenId>& v) {
      std::set<TokenId> seen;
      std::size_t rep = 0;
      for (TokenId t : v) rep += seen.insert(t).second ? 0 : 1;
      return rep;
    };
    std::size_t plain = 0, penalized = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      DecodeConfig c = greedy(24);
      plain += count_repeats(decode(toy(), prompt_for(s), c, off()).tokens);
      c.repetition_penalty = 3.0;
      penalized += count_repeats(decode(toy(), prompt_for(s), c, off()).tokens);
    }
    CHECK(penalized < plain);
  }

  TEST_CASE("flip fixture end to end through a replayed step") {
    std::mt19937_64 g(21);
    for (int i = 0; i < 10; ++i) {
      auto f = fx::make_flip_fixture(g, 8, 32, 5, 7);
      auto model = TraceReplayModel::from_steps({f.step});
      TokenSequence p{{0}, 0};
      CHECK(decode(model, p, greedy(1), DecoConfig{}).tokens == std::vector<TokenId>{f.truth});
      CHECK(decode(model, p, greedy(1), off()).tokens == std::vector<TokenId>{f.hallucinated});
    }
  }

  TEST_CASE("observers see full readouts and are refused for beam") {
    std::vector<LayerwiseStep> seen;
    deco::DecodeOptions o;
    o.full_readout = true;
    o.observer = [&](const LayerwiseStep& s) { seen.push_back(s); };
    auto r = decode(toy(), prompt_for(2), greedy(5), DecoConfig{}, o);
    REQUIRE(seen.size() == 5);
    for (const auto& s : seen) CHECK(s.first_layer == 1);
    DecodeConfig b = greedy(5);
    b.strategy = Strategy::kBeam;
    CHECK_THROWS_AS(decode(toy(), prompt_for(2), b, DecoConfig{}, o), InvalidInput);
  }
}

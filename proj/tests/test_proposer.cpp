#include <doctest.h>

#include <regex>

#include <json.hpp>

#include "gridvad/proposer.hpp"
#include "gridvad/rng.hpp"
#include "helpers.hpp"

using namespace gridvad;
using nlohmann::json;

namespace {

struct Fixture {
  testing::CountingFrames frames{90};
  BinPartition part = partition(Clip{"v", {0, 89}}, 9);
  GridSample grid = sample_grid(part, 1, 42, frames);
  ProposerConfig cfg;
  CallLedger ledger;
};

std::string random_noise(Rng& rng, int n) {
  static const std::string alphabet = "abc xyz,.:;!?\n\t{}()<>'`- 0123456789";
  std::string s;
  for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(rng.uniform_int(0, alphabet.size() - 1))];
  return s;
}

}  // namespace

TEST_SUITE("proposer") {
  TEST_CASE("prompt names the geometry and no categories") {
    const auto p = build_prompt(partition(Clip{"v", {0, 89}}, 9));
    CHECK(p.find("3x3") != std::string::npos);
    CHECK(p.find("9") != std::string::npos);
    CHECK(p.find("[]") != std::string::npos);
    CHECK(p.find("evidence_cells") != std::string::npos);
    for (const char* banned : {"fighting", "robbery", "vehicle", "bicycle", "skateboard", "categories:", "one of the following"})
      CHECK(p.find(banned) == std::string::npos);
    const auto p4 = build_prompt(partition(Clip{"v", {0, 99}}, 16));
    CHECK(p4.find("4x4") != std::string::npos);
    CHECK(p4.find("16") != std::string::npos);
  }

  TEST_CASE("prompt depends only on geometry") {
    testing::CountingFrames frames(200);
    const auto part = partition(Clip{"v", {0, 179}}, 9);
    const auto a = sample_grid(part, 1, 1, frames), b = sample_grid(part, 2, 2, frames);
    CHECK(build_prompt(a, part) == build_prompt(b, part));
  }

  TEST_CASE("empty answer") {
    Fixture f;
    testing::ScriptedVlm vlm([](const VlmRequest&) { return "[]"; });
    CHECK(propose(f.grid, f.part, f.cfg, vlm, f.ledger).empty());
    CHECK(f.ledger.snapshot().vlm_calls == 1);
    CHECK(vlm.calls == 1);
  }

  TEST_CASE("one entry decodes through the bins") {
    Fixture f;
    testing::ScriptedVlm vlm([](const VlmRequest& r) {
      CHECK(r.image.has_value());
      CHECK(r.frame_indices.size() == 9);
      return R"([{"description":"vehicle on walkway","evidence_cells":[2,3],"confidence":0.9}])";
    });
    const auto ps = propose(f.grid, f.part, f.cfg, vlm, f.ledger);
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].description == "vehicle on walkway");
    CHECK(ps[0].interval == TemporalInterval{10, 29});
    CHECK(ps[0].confidence == 0.9);
    CHECK(ps[0].source_sampling == 1);
    CHECK(ps[0].evidence_cells == std::vector<int>{2, 3});
  }

  TEST_CASE("sampled-frame decoding spans the shown frames") {
    Fixture f;
    f.cfg.decoding = IntervalDecoding::sampled_frames;
    testing::ScriptedVlm vlm([](const VlmRequest&) {
      return R"([{"description":"x","evidence_cells":[2,3],"confidence":0.9}])";
    });
    const auto ps = propose(f.grid, f.part, f.cfg, vlm, f.ledger);
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].interval == TemporalInterval{f.grid.frame_indices[1], f.grid.frame_indices[2]});
  }

  TEST_CASE("prose and fences around the array") {
    Fixture f;
    testing::ScriptedVlm vlm([](const VlmRequest&) {
      return "Sure! Here is what I see [in brackets]:\n```json\n"
             "[{\"description\": \"person climbing fence\", \"evidence_cells\": [7, 8, 9], \"confidence\": 0.6}]\n```\nDone.";
    });
    const auto ps = propose(f.grid, f.part, f.cfg, vlm, f.ledger);
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].interval == TemporalInterval{60, 89});
  }

  TEST_CASE("transport failure leaves the sampling empty") {
    Fixture f;
    testing::ScriptedVlm vlm([](const VlmRequest&) -> std::string { throw TransportError("down"); });
    CHECK(propose(f.grid, f.part, f.cfg, vlm, f.ledger).empty());
    CHECK(f.ledger.snapshot().vlm_calls == 1);
  }

  TEST_CASE("intervals are clamped to the bounds") {
    Fixture f;
    testing::ScriptedVlm vlm([](const VlmRequest&) {
      return R"([{"description":"x","evidence_cells":[8,9],"confidence":0.9}])";
    });
    const auto ps = propose(f.grid, f.part, f.cfg, vlm, f.ledger, TemporalInterval{0, 74});
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].interval == TemporalInterval{70, 74});
  }

  TEST_CASE("schema violations drop single entries") {
    const auto r = parse_response(R"([
      {"description":"ok","evidence_cells":[1],"confidence":0.3},
      {"description":"","evidence_cells":[1],"confidence":0.3},
      {"description":"no cells","evidence_cells":[],"confidence":0.3},
      {"description":"bad cell","evidence_cells":[10],"confidence":0.3},
      {"description":"zero cell","evidence_cells":[0],"confidence":0.3},
      {"description":"string cell","evidence_cells":["2"],"confidence":0.3},
      {"description":"bad conf","evidence_cells":[2],"confidence":1.5},
      {"description":"text conf","evidence_cells":[2],"confidence":"high"},
      {"description":"no conf","evidence_cells":[3,3,2]}
    ])", 9);
    CHECK(r.found_array);
    CHECK(r.dropped == 7);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[1].confidence == 0.5);
    CHECK(r.entries[1].confidence_defaulted);
    CHECK(r.entries[1].evidence_cells == std::vector<int>{2, 3});
  }

  TEST_CASE("parser is total") {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
      auto s = random_noise(rng, static_cast<int>(rng.uniform_int(0, 80)));
      if (rng.bernoulli(0.3)) s.insert(rng.uniform_int(0, s.size()), "[{\"description\":");
      if (rng.bernoulli(0.3)) s.insert(rng.uniform_int(0, s.size()), "[[[");
      const auto r = parse_response(s, 9);
      for (const auto& e : r.entries) {
        CHECK_FALSE(e.evidence_cells.empty());
        CHECK(e.confidence >= 0);
        CHECK(e.confidence <= 1);
      }
    }
    CHECK_FALSE(parse_response("no array here", 9).found_array);
    CHECK(parse_response("[]", 9).found_array);
  }

  TEST_CASE("valid payloads embedded in noise are recovered") {
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
      json arr = json::array();
      const int n = static_cast<int>(rng.uniform_int(0, 4));
      for (int j = 0; j < n; ++j) {
        std::vector<int> cells;
        for (int c = 1; c <= 9; ++c)
          if (rng.bernoulli(0.3)) cells.push_back(c);
        if (cells.empty()) cells.push_back(static_cast<int>(rng.uniform_int(1, 9)));
        arr.push_back({{"description", "thing " + std::to_string(j) + " [odd] \"quoted\""},
                       {"evidence_cells", cells},
                       {"confidence", static_cast<double>(rng.uniform_int(0, 100)) / 100}});
      }
      auto prefix = random_noise(rng, static_cast<int>(rng.uniform_int(0, 30)));
      prefix.erase(std::remove(prefix.begin(), prefix.end(), '['), prefix.end());
      const auto text = prefix + (rng.bernoulli(0.5) ? "```json\n" : "") + arr.dump(rng.bernoulli(0.5) ? 2 : -1) +
                        "\n```" + random_noise(rng, static_cast<int>(rng.uniform_int(0, 30)));
      const auto r = parse_response(text, 9);
      REQUIRE(r.found_array);
      REQUIRE(r.entries.size() == arr.size());
      for (std::size_t j = 0; j < arr.size(); ++j) {
        CHECK(r.entries[j].description == arr[j]["description"].get<std::string>());
        CHECK(r.entries[j].evidence_cells == arr[j]["evidence_cells"].get<std::vector<int>>());
        CHECK(r.entries[j].confidence == arr[j]["confidence"].get<double>());
      }
    }
  }

  TEST_CASE("independent samplings need a positive temperature") {
    ProposerConfig c;
    c.temperature = 0;
    CHECK_NOTHROW(c.validate(1));
    CHECK_THROWS_AS(c.validate(5), InvalidArgument);
    c.temperature = 0.7;
    c.backend = ProposerBackendKind::http_chat;
    CHECK_THROWS_AS(c.validate(5), InvalidArgument);
  }

  TEST_CASE("proposals stay inside the clip for every cell set") {
    const auto part = partition(Clip{"v", {40, 140}}, 9);
    ParsedResponse r;
    for (int mask = 1; mask < 512; ++mask) {
      ResponseEntry e;
      e.description = "x";
      for (int c = 1; c <= 9; ++c)
        if (mask & (1 << (c - 1))) e.evidence_cells.push_back(c);
      r.entries.push_back(e);
    }
    for (const auto& p : to_proposals(r, part, 1, part.clip.interval)) CHECK(p.interval.within(part.clip.interval));
  }
}

#include <doctest.h>

#include <set>

#include <json.hpp>

#include "gridvad/harness.hpp"
#include "gridvad/masks.hpp"
#include "helpers.hpp"

using namespace gridvad;
using nlohmann::json;

namespace {

RunConfig config(int clip_length = 180, int overlap = 30) {
  RunConfig c;
  c.clip_length = clip_length;
  c.clip_overlap = overlap;
  return c;
}

std::vector<TemporalInterval> intervals(const std::vector<Clip>& clips) {
  std::vector<TemporalInterval> out;
  for (const auto& c : clips) out.push_back(c.interval);
  return out;
}

std::string entries(const std::vector<std::string>& names) {
  json a = json::array();
  for (const auto& n : names) a.push_back({{"description", n}, {"evidence_cells", {3, 4}}, {"confidence", 0.8}});
  return a.dump();
}

Bitmap square(int h, int w) {
  Bitmap b = Bitmap::Zero(h, w);
  b.topLeftCorner(8, 8).setOnes();
  return b;
}

struct Scripted {
  testing::ScriptedVlm vlm;
  testing::ScriptedGrounder grounder{[](const GroundingRequest&) { return std::vector<BoundingBox>{{0, 0, 8, 8, 0.9}}; }};
  testing::ScriptedPropagator propagator{[](const PropagationRequest& r) {
    return std::vector<Bitmap>(r.frame_indices.size(), square(r.height, r.width));
  }};
  explicit Scripted(std::vector<std::string> names)
      : vlm([names](const VlmRequest&) { return entries(names); }) {}
  Backends view() { return {&vlm, nullptr, &grounder, &propagator}; }
};

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("clip windowing") {
    CHECK(intervals(segment_clips({"v", 360, 8, 8, 25}, config())) ==
          std::vector<TemporalInterval>{{0, 179}, {150, 329}, {300, 359}});
    CHECK(intervals(segment_clips({"v", 100, 8, 8, 25}, config())) == std::vector<TemporalInterval>{{0, 99}});
    CHECK(intervals(segment_clips({"v", 180, 8, 8, 25}, config(180, 0))) == std::vector<TemporalInterval>{{0, 179}});
    CHECK(segment_clips({"v", 2000, 8, 8, 25}, config()).size() == 14);
  }

  TEST_CASE("clips cover every frame and start on the stride") {
    for (int n = 1; n < 700; n += 37)
      for (const auto& [len, ov] : std::vector<std::pair<int, int>>{{180, 30}, {50, 0}, {20, 19}, {9, 3}}) {
        const auto clips = segment_clips({"v", n, 8, 8, 25}, config(len, ov));
        std::vector<int> covered(static_cast<std::size_t>(n), 0);
        for (std::size_t i = 0; i < clips.size(); ++i) {
          CHECK(clips[i].start() == static_cast<int>(i) * (len - ov));
          CHECK(clips[i].end() < n);
          for (int t = clips[i].start(); t <= clips[i].end(); ++t) covered[t] = 1;
        }
        CHECK(std::count(covered.begin(), covered.end(), 1) == n);
      }
  }

  TEST_CASE("sampling seeds differ across samplings, clips and videos") {
    std::set<std::uint64_t> seen;
    for (const std::string v : {"a", "b"})
      for (int s : {0, 150})
        for (int m = 1; m <= 5; ++m) seen.insert(sampling_seed(7, v, s, m));
    CHECK(seen.size() == 20);
    CHECK(sampling_seed(7, "a", 0, 1) == sampling_seed(7, "a", 0, 1));
  }

  TEST_CASE("no survivors costs M plus one calls") {
    Scripted s({});
    testing::CountingFrames frames(180);
    CallLedger ledger;
    const auto r = run_gridvad(frames, config(), s.view(), ledger);
    const auto c = ledger.snapshot();
    CHECK(c.vlm_calls == 5);
    CHECK(c.scc_calls == 1);
    CHECK(c.grounding_calls == 0);
    CHECK(c.propagation_calls == 0);
    CHECK(r.instances.empty());
  }

  TEST_CASE("two survivors cost R grounding calls and one propagation each") {
    Scripted s({"red ball rolling", "blue crate falling"});
    testing::CountingFrames frames(180, 16, 16);
    CallLedger ledger;
    const auto r = run_gridvad(frames, config(), s.view(), ledger);
    REQUIRE(r.clips.size() == 1);
    CHECK(r.clips[0].surviving.size() == 2);
    const auto c = ledger.snapshot();
    CHECK(c.grounding_calls == 10);
    CHECK(c.propagation_calls == 2);
    CHECK(c.language_model_calls() == 6);
    CHECK(r.instances.size() == 2);
  }

  TEST_CASE("three clips cost 3(M+1)") {
    Scripted s({"red ball rolling"});
    testing::CountingFrames frames(360, 16, 16);
    CallLedger ledger;
    const auto r = run_gridvad(frames, config(), s.view(), ledger);
    const auto c = ledger.snapshot();
    CHECK(r.clips.size() == 3);
    CHECK(c.vlm_calls == 15);
    CHECK(c.scc_calls == 3);
    CHECK(c.grounding_calls == 15);
    CHECK(c.propagation_calls == 3);
    for (const auto& clip : r.clips) {
      CHECK(clip.calls.vlm_calls == 5);
      CHECK(clip.calls.scc_calls == 1);
    }
  }

  TEST_CASE("per-clip budget holds on synthetic worlds in both consolidation modes") {
    WorldParams wp;
    wp.frame_count = 500;
    NoiseProfile noise;
    noise.miss_rate = 0.2;
    noise.halluc_rate = 0.3;
    for (const auto mode : {SccMode::deterministic, SccMode::llm})
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto world = generate_world(wp, seed);
        const auto backends = simulated_backends(world, noise);
        const SyntheticFrameProvider frames(world);
        auto cfg = config();
        cfg.scc.mode = mode;
        cfg.seed = seed;
        CallLedger ledger;
        const auto r = run_gridvad(frames, cfg, backends.view(), ledger);
        for (const auto& clip : r.clips) {
          CHECK(clip.calls.vlm_calls == cfg.samplings);
          CHECK(clip.calls.scc_calls == 1);
          CHECK(clip.calls.grounding_calls == cfg.localization.candidate_count * static_cast<int>(clip.surviving.size()));
        }
        CHECK(ledger.snapshot().language_model_calls() == 6 * static_cast<int>(r.clips.size()));
      }
  }

  TEST_CASE("clips shorter than the grid are padded with their last frame") {
    testing::CountingFrames frames(5, 8, 8);
    Scripted s({});
    const auto r = propose_and_consolidate({"counting", {0, 4}}, frames, config(), s.view());
    CHECK(r.calls.vlm_calls == 5);
    for (const auto& g : r.grids) {
      REQUIRE(g.frame_indices.size() == 9);
      for (const auto t : g.frame_indices) CHECK(t <= 4);
    }
    Scripted one({"red ball rolling"});
    const auto r2 = propose_and_consolidate({"counting", {0, 4}}, frames, config(), one.view());
    for (const auto& p : r2.pooled) CHECK(p.interval.within({0, 4}));
  }

  TEST_CASE("workers do not change the result") {
    WorldParams wp;
    wp.frame_count = 700;
    wp.anomaly_actors = 4;
    const auto world = generate_world(wp, 12);
    NoiseProfile noise;
    noise.miss_rate = 0.2;
    noise.halluc_rate = 0.3;
    const auto backends = simulated_backends(world, noise);
    const SyntheticFrameProvider frames(world);
    const auto gt = ground_truth(world);
    auto cfg = config();
    CallLedger a, b;
    const auto serial = run_gridvad(frames, cfg, backends.view(), a, &gt);
    cfg.workers = 4;
    const auto parallel = run_gridvad(frames, cfg, backends.view(), b, &gt);
    CHECK(serial.instances == parallel.instances);
    CHECK(serial.calls.language_model_calls() == parallel.calls.language_model_calls());
    CHECK(serial.calls.grounding_calls == parallel.calls.grounding_calls);
    CHECK(serial.metrics->to_json()["rbdc"] == parallel.metrics->to_json()["rbdc"]);
    CHECK(serial.metrics->pixel_auroc == parallel.metrics->pixel_auroc);
  }

  TEST_CASE("a clip whose backend fails contributes nothing") {
    testing::ScriptedVlm vlm([](const VlmRequest&) -> std::string { throw TransportError("x"); });
    testing::ScriptedGrounder g([](const GroundingRequest&) { return std::vector<BoundingBox>{}; });
    testing::ScriptedPropagator p([](const PropagationRequest&) { return std::vector<Bitmap>{}; });
    testing::CountingFrames frames(200);
    CallLedger ledger;
    const auto r = run_gridvad(frames, config(), {&vlm, nullptr, &g, &p}, ledger);
    CHECK(r.instances.empty());
    CHECK(ledger.snapshot().vlm_calls == 10);
  }

  TEST_CASE("uniform sampling calls once per stride") {
    for (const auto& [n, calls] : std::vector<std::pair<int, int>>{{100, 10}, {95, 10}, {2000, 200}, {1, 1}}) {
      testing::CountingFrames frames(n);
      testing::ScriptedVlm vlm([](const VlmRequest& r) {
        CHECK(r.frame_indices.size() == 1);
        CHECK(r.frame_indices[0] % 10 == 0);
        return r.frame_indices[0] == 20 ? R"([{"description":"x","evidence_cells":[1],"confidence":0.7}])" : "[]";
      });
      CallLedger ledger;
      const auto u = run_uniform(frames, config(), vlm, ledger);
      CHECK(u.calls.vlm_calls == calls);
      CHECK(ledger.snapshot().vlm_calls == calls);
      REQUIRE(static_cast<int>(u.frame_scores.size()) == n);
      if (n >= 30) {
        CHECK(u.frame_scores[19] == 0.0);
        CHECK(u.frame_scores[20] == 0.7);
        CHECK(u.frame_scores[29] == 0.7);
        CHECK(u.frame_scores[30] == 0.0);
      }
    }
  }

  TEST_CASE("efficiency report") {
    CallCounts a{10, 2, 0, 0, 1.5}, b{40, 0, 0, 0, 3.0};
    const auto r = report(a, b, 0.9, 0.8);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].vlm_calls == 12);
    CHECK(*r.rows[0].fr_auc_per_call == doctest::Approx(0.9 / 12));
    CHECK(r.call_ratio == doctest::Approx(40.0 / 12));
    CHECK(*r.per_call_ratio == doctest::Approx((0.9 / 12) / (0.8 / 40)));
    const auto same = report(a, a, 0.7, 0.7);
    CHECK(*same.per_call_ratio == 1.0);

    const auto j = r.to_json();
    CHECK(j["columns"] == json({"VLM calls", "Frame-AUROC", "Time (s)", "Fr-AUC / call"}));
    CHECK(j["rows"]["gridvad"].size() == 4);
    CHECK(j["rows"]["uniform"]["VLM calls"] == 40);
    const auto table = r.to_table();
    for (const auto* col : EfficiencyReport::kColumns) CHECK(table.find(col) != std::string::npos);
    CHECK_FALSE(report(a, b, std::nullopt, 0.8).per_call_ratio.has_value());
  }

  TEST_CASE("compare counts calls for both paradigms") {
    WorldParams wp;
    wp.frame_count = 2000;
    wp.anomaly_actors = 6;
    const auto world = generate_world(wp, 1);
    const auto backends = simulated_backends(world, NoiseProfile{});
    const SyntheticFrameProvider frames(world);
    const auto gt = ground_truth(world);
    const auto c = compare(frames, config(), backends.view(), &gt);
    CHECK(c.report.rows[0].vlm_calls == 84);
    CHECK(c.report.rows[1].vlm_calls == 200);
    CHECK(c.report.rows[0].frame_auroc.has_value());
    CHECK(c.report.rows[1].frame_auroc.has_value());
  }

  TEST_CASE("grid queries buy more frame AUROC per call than uniform ones") {
    double grid = 0, uniform = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto world = generate_world(WorldParams{}, seed);
      const auto backends = simulated_backends(world, NoiseProfile{});
      const SyntheticFrameProvider frames(world);
      const auto gt = ground_truth(world);
      auto cfg = config();
      cfg.seed = seed;
      const auto c = compare(frames, cfg, backends.view(), &gt);
      grid += *c.report.rows[0].fr_auc_per_call;
      uniform += *c.report.rows[1].fr_auc_per_call;
    }
    CHECK(grid >= uniform);
  }

  TEST_CASE("mask union over clips is idempotent") {
    WorldParams wp;
    wp.frame_count = 400;
    const auto world = generate_world(wp, 4);
    const auto backends = simulated_backends(world, NoiseProfile{});
    const SyntheticFrameProvider frames(world);
    CallLedger ledger;
    const auto r = run_gridvad(frames, config(), backends.view(), ledger);
    const auto once = union_masks(r.instances, world.meta());
    std::vector<AnomalyInstance> twice = r.instances;
    twice.insert(twice.end(), r.instances.begin(), r.instances.end());
    const auto again = union_masks(twice, world.meta());
    REQUIRE(once.size() == again.size());
    for (const auto& [t, m] : once) CHECK(m == again.at(t));
  }

  TEST_CASE("run configuration files") {
    RunConfig c;
    c.samplings = 7;
    c.tau = 4;
    c.scc.mode = SccMode::llm;
    c.proposer.decoding = IntervalDecoding::sampled_frames;
    c.localization.candidate_count = 3;
    c.metrics.alpha = 0.3;
    c.seed = 99;
    const auto j = c.to_json();
    const auto back = RunConfig::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.samplings == 7);
    CHECK(back.scc.mode == SccMode::llm);
    CHECK(back.localization.candidate_count == 3);
    CHECK(RunConfig::from_json(json::object()).to_json() == RunConfig{}.to_json());
    CHECK_THROWS_AS(RunConfig::from_json({{"sampling", 5}}), SchemaError);
    CHECK_THROWS_AS(RunConfig::from_json({{"tau", "three"}}), SchemaError);
    CHECK_THROWS_AS(RunConfig::from_json({{"scc_mode", "majority"}}), SchemaError);
    try {
      RunConfig::from_json({{"grid_side", true}});
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("grid_side") != std::string::npos);
    }
  }

  TEST_CASE("run configuration bounds") {
    auto bad = [](auto edit) {
      RunConfig c;
      edit(c);
      CHECK_THROWS_AS(c.validate(), InvalidArgument);
    };
    bad([](RunConfig& c) { c.grid_side = 0; });
    bad([](RunConfig& c) { c.tau = 6; });
    bad([](RunConfig& c) { c.tau = 0; });
    bad([](RunConfig& c) { c.clip_overlap = 180; });
    bad([](RunConfig& c) { c.clip_overlap = -1; });
    bad([](RunConfig& c) { c.uniform_stride = 0; });
    bad([](RunConfig& c) { c.workers = 0; });
    CHECK_NOTHROW(RunConfig{}.validate());
  }
}

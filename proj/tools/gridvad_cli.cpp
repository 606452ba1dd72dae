#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "gridvad/error.hpp"
#include "gridvad/harness.hpp"
#include "gridvad/image.hpp"
#include "gridvad/manifest.hpp"
#include "gridvad/metrics.hpp"
#include "gridvad/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridvad;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw SchemaError(path.string(), "not valid JSON");
  return j;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json calls_json(const CallCounts& c) {
  return {{"vlm_calls", c.vlm_calls},
          {"scc_calls", c.scc_calls},
          {"grounding_calls", c.grounding_calls},
          {"propagation_calls", c.propagation_calls},
          {"language_model_calls", c.language_model_calls()},
          {"wall_time_s", c.wall_time_s}};
}

// Flags named after RunConfig keys. Values given on the command line take
// precedence over --config, which takes precedence over the defaults.
class RunFlags {
 public:
  void attach(CLI::App& app) {
    app.add_option("--config", config_, "RunConfig JSON file")->check(CLI::ExistingFile);
    add<int>(app, "--grid-side", "grid_side", "grid side g (K = g*g)");
    add<int>(app, "--samplings", "samplings", "stratified samplings M");
    add<int>(app, "--tau", "tau", "support threshold");
    add<int>(app, "--clip-length", "clip_length", "clip window length in frames");
    add<int>(app, "--clip-overlap", "clip_overlap", "overlap between windows");
    add<int>(app, "--candidates", "candidate_count", "anchor candidate frames R");
    add<double>(app, "--box-threshold", "box_threshold", "grounding box threshold");
    add<double>(app, "--text-threshold", "text_threshold", "grounding text threshold");
    add<std::int64_t>(app, "--min-mask-area", "min_mask_area", "mask area floor in pixels");
    add<std::string>(app, "--paradigm", "paradigm", "gridvad or uniform");
    add<int>(app, "--uniform-stride", "uniform_stride", "frames between uniform queries");
    add<std::string>(app, "--vlm-endpoint", "vlm_endpoint", "chat-completions URL");
    add<std::string>(app, "--vlm-model", "vlm_model", "proposer model name");
    add<double>(app, "--temperature", "temperature", "proposer sampling temperature");
    add<std::string>(app, "--scc-mode", "scc_mode", "llm or deterministic");
    add<std::string>(app, "--scc-model", "scc_model", "consolidator model name");
    add<std::string>(app, "--interval-decoding", "interval_decoding", "bin_span or sampled_frames");
    add<std::string>(app, "--grounding-endpoint", "grounding_endpoint", "/ground URL");
    add<std::string>(app, "--propagation-endpoint", "propagation_endpoint", "/propagate URL");
    add<std::uint64_t>(app, "--seed", "seed", "run seed");
    add<std::string>(app, "--output-dir", "output_dir", "directory for all outputs");
    add<int>(app, "--workers", "workers", "clips processed concurrently");
  }

  RunConfig resolve() const {
    json j = json::object();
    if (!config_.empty()) j = read_json(config_);
    if (!j.is_object()) throw SchemaError("config", "expected an object");
    for (const auto& s : setters_)
      if (s.option->count() > 0) s.apply(j);
    auto cfg = RunConfig::from_json(j);
    cfg.validate();
    return cfg;
  }

 private:
  struct Setter {
    CLI::Option* option;
    std::function<void(json&)> apply;
  };

  template <typename T>
  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app.add_option(flag, *value, help);
    setters_.push_back({opt, [value, key](json& j) { j[key] = *value; }});
  }

  std::string config_;
  std::vector<Setter> setters_;
};

struct VideoSource {
  std::string video_dir, world_file, noise_file, gt_masks, gt_labels;

  void attach(CLI::App& app) {
    auto* v = app.add_option("--video", video_dir, "directory of PNG frames")->check(CLI::ExistingDirectory);
    auto* w = app.add_option("--world", world_file, "synthetic world JSON (simulated backends)")
                  ->check(CLI::ExistingFile);
    v->excludes(w);
    app.add_option("--noise", noise_file, "noise profile JSON for --world")->check(CLI::ExistingFile)->needs(w);
    app.add_option("--gt-masks", gt_masks, "ground-truth mask directory for --video")
        ->check(CLI::ExistingDirectory)
        ->needs(v);
    app.add_option("--gt-labels", gt_labels, "ground-truth track label directory")
        ->check(CLI::ExistingDirectory)
        ->needs(v);
  }

  struct Loaded {
    std::optional<SyntheticWorld> world;
    std::unique_ptr<FrameProvider> frames;
    BackendSet backends;
    std::optional<GroundTruth> gt;
  };

  Loaded load(const RunConfig& cfg) const {
    Loaded l;
    if (!world_file.empty()) {
      l.world = SyntheticWorld::from_json(read_json(world_file));
      const auto noise = noise_file.empty() ? NoiseProfile{} : NoiseProfile::from_json(read_json(noise_file));
      l.frames = std::make_unique<SyntheticFrameProvider>(*l.world);
      l.backends = simulated_backends(*l.world, noise);
      l.gt = ground_truth(*l.world);
    } else if (!video_dir.empty()) {
      l.frames = std::make_unique<DirectoryFrameProvider>(video_dir);
      l.backends = http_backends(cfg);
      if (!gt_masks.empty())
        l.gt = GroundTruth::load(l.frames->meta(), gt_masks,
                                 gt_labels.empty() ? std::nullopt : std::optional<fs::path>(gt_labels));
    } else {
      throw InvalidArgument("one of --video or --world is required");
    }
    return l;
  }
};

int cmd_run(const RunFlags& flags, const VideoSource& source) {
  const auto cfg = flags.resolve();
  auto in = source.load(cfg);
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  write_json(out / "config.json", cfg.to_json());
  const GroundTruth* gt = in.gt ? &*in.gt : nullptr;
  CallLedger ledger;
  if (cfg.paradigm == Paradigm::uniform) {
    if (!in.backends.proposer) throw InvalidArgument("no proposer backend configured");
    const auto r = run_uniform(*in.frames, cfg, *in.backends.proposer, ledger, gt);
    write_json(out / "frame_scores.json", r.frame_scores);
    json summary = {{"calls", calls_json(r.calls)}};
    if (r.frame_auroc) summary["frame_auroc"] = *r.frame_auroc;
    write_json(out / "summary.json", summary);
    std::cout << summary.dump(2) << "\n";
    return 0;
  }
  const auto r = run_gridvad(*in.frames, cfg, in.backends.view(), ledger, gt);
  write_manifest(out, r.meta, r.instances);
  json clips = json::array();
  for (const auto& c : r.clips) {
    json surviving = json::array();
    for (const auto& p : c.surviving) surviving.push_back(proposal_to_json(p));
    clips.push_back({{"start", c.clip.start()},
                     {"end", c.clip.end()},
                     {"pooled", c.pooled.size()},
                     {"consolidated", c.consolidated.size()},
                     {"surviving", surviving},
                     {"instances", c.instances.size()},
                     {"calls", calls_json(c.calls)}});
  }
  write_json(out / "clips.json", clips);
  json summary = {{"video_id", r.meta.id},
                  {"clips", r.clips.size()},
                  {"instances", r.instances.size()},
                  {"calls", calls_json(r.calls)}};
  if (r.metrics) {
    write_json(out / "metrics.json", r.metrics->to_json());
    summary["metrics"] = r.metrics->to_json();
  }
  write_json(out / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_compare(const RunFlags& flags, const VideoSource& source) {
  const auto cfg = flags.resolve();
  auto in = source.load(cfg);
  const fs::path out = cfg.output_dir;
  const auto r = compare(*in.frames, cfg, in.backends.view(), in.gt ? &*in.gt : nullptr);
  write_json(out / "report.json", r.report.to_json());
  write_manifest(out, r.gridvad.meta, r.gridvad.instances);
  std::cout << r.report.to_table();
  return 0;
}

int cmd_eval(const std::vector<std::string>& manifests, const std::vector<std::string>& masks,
             const std::vector<std::string>& labels, const MetricParams& params,
             const std::string& out_file) {
  if (manifests.size() != masks.size()) throw InvalidArgument("one --gt-masks per --manifest");
  if (!labels.empty() && labels.size() != manifests.size())
    throw InvalidArgument("--gt-labels must be given for every manifest or none");
  std::vector<GroundTruth> gts;
  std::vector<std::vector<AnomalyInstance>> instances;
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    auto m = read_manifest(manifests[i]);
    gts.push_back(GroundTruth::load(m.meta, masks[i],
                                    labels.empty() ? std::nullopt : std::optional<fs::path>(labels[i])));
    instances.push_back(std::move(m.instances));
  }
  const auto report = evaluate(std::span<const GroundTruth>(gts), instances, params);
  if (!out_file.empty()) write_json(out_file, report.to_json());
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

int cmd_synth(const std::string& params_file, std::uint64_t seed, const std::string& id,
              const std::string& out_dir) {
  const auto params = params_file.empty() ? WorldParams{} : WorldParams::from_json(read_json(params_file));
  const auto world = generate_world(params, seed, id);
  const fs::path out = out_dir;
  write_json(out / "world.json", world.to_json());
  fs::create_directories(out / "frames");
  for (FrameIndex t = 0; t < world.frame_count; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "%06d.png", t);
    write_png(out / "frames" / name, render(world, t).image);
  }
  ground_truth(world).save(out / "gt" / "masks", out / "gt" / "labels");
  spdlog::info("wrote {} frames and ground truth to {}", world.frame_count, out.string());
  return 0;
}

int cmd_ablate(const RunFlags& flags, const std::string& params_file, const std::string& noise_file,
               const std::vector<std::string>& arms, int seeds, std::uint64_t base_seed) {
  AblationConfig cfg;
  cfg.run = flags.resolve();
  if (!params_file.empty()) cfg.world = WorldParams::from_json(read_json(params_file));
  if (!noise_file.empty()) cfg.noise = NoiseProfile::from_json(read_json(noise_file));
  cfg.seeds = seeds;
  cfg.base_seed = base_seed;
  if (!arms.empty()) {
    cfg.arms.clear();
    for (const auto& a : arms) {
      const auto colon = a.find(':');
      if (colon == std::string::npos) throw InvalidArgument("arm '" + a + "' must be M:tau");
      cfg.arms.push_back({std::stoi(a.substr(0, colon)), std::stoi(a.substr(colon + 1))});
    }
  }
  const auto summaries = ablate_scc(cfg);
  json j = json::array();
  for (const auto& s : summaries) j.push_back(s.to_json());
  write_json(fs::path(cfg.run.output_dir) / "ablation.json", j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free video anomaly detection over stratified frame grids"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  RunFlags run_flags, compare_flags, ablate_flags;
  VideoSource run_source, compare_source;

  auto* run = app.add_subcommand("run", "run the pipeline over one video");
  run_flags.attach(*run);
  run_source.attach(*run);

  auto* cmp = app.add_subcommand("compare", "gridvad versus uniform single-frame querying");
  compare_flags.attach(*cmp);
  compare_source.attach(*cmp);

  auto* eval = app.add_subcommand("eval", "score manifests against ground truth");
  std::vector<std::string> manifests, gt_masks, gt_labels;
  std::string eval_out;
  MetricParams params;
  eval->add_option("--manifest", manifests, "manifest.json per video")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt-masks", gt_masks, "mask directory per video")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt-labels", gt_labels, "label directory per video")->check(CLI::ExistingDirectory);
  eval->add_option("--alpha", params.alpha, "region IoU threshold");
  eval->add_option("--aupro-fpr-limit", params.aupro_fpr_limit, "AUPRO false-positive-rate limit");
  eval->add_option("--fppf-limit", params.fppf_limit, "false positives per frame limit");
  eval->add_option("--track-fraction", params.track_fraction, "fraction of a track to detect");
  eval->add_option("--out", eval_out, "write the report to this file");

  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
  std::string synth_params, synth_id = "synthetic", synth_out = "synthetic";
  std::uint64_t synth_seed = 0;
  synth->add_option("--params", synth_params, "WorldParams JSON")->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "world seed");
  synth->add_option("--id", synth_id, "video id");
  synth->add_option("--out", synth_out, "output directory");

  auto* ablate = app.add_subcommand("ablate-scc", "sweep samplings and support over synthetic worlds");
  ablate_flags.attach(*ablate);
  std::string ablate_params, ablate_noise;
  std::vector<std::string> arms;
  int seeds = 20;
  std::uint64_t base_seed = 1;
  ablate->add_option("--params", ablate_params, "WorldParams JSON")->check(CLI::ExistingFile);
  ablate->add_option("--noise", ablate_noise, "NoiseProfile JSON")->check(CLI::ExistingFile);
  ablate->add_option("--arm", arms, "M:tau, repeatable (default 1:1 and 5:3)");
  ablate->add_option("--seeds", seeds, "worlds per arm");
  ablate->add_option("--base-seed", base_seed, "seed of the first world");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run) return cmd_run(run_flags, run_source);
    if (*cmp) return cmd_compare(compare_flags, compare_source);
    if (*eval) return cmd_eval(manifests, gt_masks, gt_labels, params, eval_out);
    if (*synth) return cmd_synth(synth_params, synth_seed, synth_id, synth_out);
    if (*ablate) return cmd_ablate(ablate_flags, ablate_params, ablate_noise, arms, seeds, base_seed);
  } catch (const SchemaError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

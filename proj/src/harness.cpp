#include "gridvad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "gridvad/http_backends.hpp"
#include "gridvad/rng.hpp"

namespace gridvad {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

SccConfig RunConfig::scc_config() const {
  SccConfig s = scc;
  s.tau = tau;
  return s;
}

void RunConfig::validate() const {
  if (grid_side < 1) throw InvalidArgument("grid_side must be >= 1");
  if (samplings < 1) throw InvalidArgument("samplings must be >= 1");
  if (tau < 1 || tau > samplings) throw InvalidArgument("tau must lie in [1, samplings]");
  if (clip_length < 1) throw InvalidArgument("clip_length must be >= 1");
  if (clip_overlap < 0 || clip_overlap >= clip_length)
    throw InvalidArgument("clip_overlap must lie in [0, clip_length)");
  if (uniform_stride < 1) throw InvalidArgument("uniform_stride must be >= 1");
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  localization.validate();
  proposer.validate(samplings);
  scc_config().validate(samplings);
  metrics.validate();
}

namespace {

const char* name(Paradigm p) { return p == Paradigm::gridvad ? "gridvad" : "uniform"; }
const char* name(SccMode m) { return m == SccMode::llm ? "llm" : "deterministic"; }
const char* name(ProposerBackendKind k) {
  return k == ProposerBackendKind::http_chat ? "http-chat" : "simulated";
}
const char* name(IntervalDecoding d) {
  return d == IntervalDecoding::bin_span ? "bin_span" : "sampled_frames";
}

template <typename Enum>
Enum parse_enum(const json& v, const std::string& key, std::initializer_list<Enum> options) {
  if (!v.is_string()) throw SchemaError(key, "expected a string");
  const auto s = v.get<std::string>();
  std::string allowed;
  for (const auto o : options) {
    if (s == name(o)) return o;
    allowed += std::string(allowed.empty() ? "" : ", ") + name(o);
  }
  throw SchemaError(key, "unknown value '" + s + "' (expected one of " + allowed + ")");
}

}  // namespace

json RunConfig::to_json() const {
  return {{"grid_side", grid_side},
          {"samplings", samplings},
          {"tau", tau},
          {"clip_length", clip_length},
          {"clip_overlap", clip_overlap},
          {"candidate_count", localization.candidate_count},
          {"box_threshold", localization.box_threshold},
          {"text_threshold", localization.text_threshold},
          {"min_mask_area", localization.min_mask_area},
          {"paradigm", name(paradigm)},
          {"uniform_stride", uniform_stride},
          {"proposer_backend", name(proposer.backend)},
          {"vlm_endpoint", proposer.endpoint_url},
          {"vlm_model", proposer.model_name},
          {"temperature", proposer.temperature},
          {"max_retries", proposer.max_retries},
          {"timeout_s", proposer.timeout_s},
          {"interval_decoding", name(proposer.decoding)},
          {"scc_mode", name(scc.mode)},
          {"scc_model", scc.model_name},
          {"similarity_floor", scc.similarity_floor},
          {"grounding_endpoint", grounding_endpoint},
          {"propagation_endpoint", propagation_endpoint},
          {"seed", seed},
          {"output_dir", output_dir},
          {"workers", workers},
          {"alpha", metrics.alpha},
          {"aupro_fpr_limit", metrics.aupro_fpr_limit},
          {"fppf_limit", metrics.fppf_limit},
          {"track_fraction", metrics.track_fraction}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("config", "expected an object");
  RunConfig c;
  const auto known = c.to_json();
  for (const auto& [key, v] : j.items()) {
    if (!known.contains(key)) throw SchemaError(key, "unknown configuration key");
    const auto& expect = known.at(key);
    if (expect.is_number_integer() && !v.is_number_integer())
      throw SchemaError(key, "expected an integer");
    if (expect.is_number_float() && !v.is_number())
      throw SchemaError(key, "expected a number");
    try {
      if (key == "grid_side") c.grid_side = v.get<int>();
      else if (key == "samplings") c.samplings = v.get<int>();
      else if (key == "tau") c.tau = v.get<int>();
      else if (key == "clip_length") c.clip_length = v.get<int>();
      else if (key == "clip_overlap") c.clip_overlap = v.get<int>();
      else if (key == "candidate_count") c.localization.candidate_count = v.get<int>();
      else if (key == "box_threshold") c.localization.box_threshold = v.get<double>();
      else if (key == "text_threshold") c.localization.text_threshold = v.get<double>();
      else if (key == "min_mask_area") c.localization.min_mask_area = v.get<std::int64_t>();
      else if (key == "paradigm")
        c.paradigm = parse_enum(v, key, {Paradigm::gridvad, Paradigm::uniform});
      else if (key == "uniform_stride") c.uniform_stride = v.get<int>();
      else if (key == "proposer_backend")
        c.proposer.backend = parse_enum(
            v, key, {ProposerBackendKind::http_chat, ProposerBackendKind::simulated});
      else if (key == "vlm_endpoint") c.proposer.endpoint_url = v.get<std::string>();
      else if (key == "vlm_model") c.proposer.model_name = v.get<std::string>();
      else if (key == "temperature") c.proposer.temperature = v.get<double>();
      else if (key == "max_retries") c.proposer.max_retries = v.get<int>();
      else if (key == "timeout_s") c.proposer.timeout_s = v.get<double>();
      else if (key == "interval_decoding")
        c.proposer.decoding = parse_enum(
            v, key, {IntervalDecoding::bin_span, IntervalDecoding::sampled_frames});
      else if (key == "scc_mode") c.scc.mode = parse_enum(v, key, {SccMode::llm, SccMode::deterministic});
      else if (key == "scc_model") c.scc.model_name = v.get<std::string>();
      else if (key == "similarity_floor") c.scc.similarity_floor = v.get<double>();
      else if (key == "grounding_endpoint") c.grounding_endpoint = v.get<std::string>();
      else if (key == "propagation_endpoint") c.propagation_endpoint = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "workers") c.workers = v.get<int>();
      else if (key == "alpha") c.metrics.alpha = v.get<double>();
      else if (key == "aupro_fpr_limit") c.metrics.aupro_fpr_limit = v.get<double>();
      else if (key == "fppf_limit") c.metrics.fppf_limit = v.get<double>();
      else if (key == "track_fraction") c.metrics.track_fraction = v.get<double>();
    } catch (const json::exception& e) {
      throw SchemaError(key, e.what());
    }
  }
  return c;
}

BackendSet http_backends(const RunConfig& cfg) {
  BackendSet b;
  if (cfg.proposer.backend == ProposerBackendKind::http_chat) {
    HttpEndpoint ep{cfg.proposer.endpoint_url, cfg.proposer.timeout_s, cfg.proposer.max_retries};
    b.proposer = std::make_unique<HttpChatBackend>(ep, cfg.proposer.model_name);
    if (cfg.scc.mode == SccMode::llm)
      b.consolidator = std::make_unique<HttpChatBackend>(ep, cfg.scc.model_name);
  }
  if (!cfg.grounding_endpoint.empty())
    b.grounder = std::make_unique<HttpGroundingBackend>(HttpEndpoint{cfg.grounding_endpoint});
  if (!cfg.propagation_endpoint.empty())
    b.propagator = std::make_unique<HttpPropagationBackend>(HttpEndpoint{cfg.propagation_endpoint});
  return b;
}

BackendSet simulated_backends(const SyntheticWorld& world, const NoiseProfile& noise) {
  auto sim = oracle_backends(world, noise);
  BackendSet b;
  b.proposer = std::move(sim.proposer);
  b.consolidator = std::move(sim.consolidator);
  b.grounder = std::move(sim.grounder);
  b.propagator = std::move(sim.propagator);
  return b;
}

// ---------------------------------------------------------------------------
// Pipeline

std::vector<Clip> segment_clips(const VideoMeta& video, const RunConfig& cfg) {
  video.validate();
  if (cfg.clip_length < 1 || cfg.clip_overlap < 0 || cfg.clip_overlap >= cfg.clip_length)
    throw InvalidArgument("invalid clip windowing");
  const int stride = cfg.clip_length - cfg.clip_overlap;
  std::vector<Clip> out;
  for (FrameIndex s = 0;; s += stride) {
    out.push_back({video.id, {s, std::min(s + cfg.clip_length - 1, video.frame_count - 1)}});
    if (s + cfg.clip_length >= video.frame_count) break;
  }
  return out;
}

std::uint64_t sampling_seed(std::uint64_t run_seed, const std::string& video_id,
                            FrameIndex clip_start, int sampling_index) {
  return hash_combine(hash_combine(hash_combine(run_seed, hash_string(video_id)),
                                   static_cast<std::uint64_t>(clip_start)),
                      static_cast<std::uint64_t>(sampling_index));
}

ClipResult propose_and_consolidate(const Clip& clip, const FrameProvider& frames,
                                   const RunConfig& cfg, const Backends& backends) {
  if (!backends.proposer) throw InvalidArgument("no proposer backend configured");
  ClipResult r;
  r.clip = clip;
  CallLedger ledger;
  const int k = cfg.cell_count();
  Clip padded = clip;
  std::optional<ClampedFrameProvider> clamped;
  const FrameProvider* source = &frames;
  if (clip.length() < k) {
    padded.interval.end = clip.start() + k - 1;
    clamped.emplace(frames, clip.end());
    source = &*clamped;
  }
  const auto part = partition(padded, k);
  for (int m = 1; m <= cfg.samplings; ++m) {
    auto grid = sample_grid(part, m, sampling_seed(cfg.seed, clip.video_id, clip.start(), m), *source);
    for (auto& t : grid.frame_indices) t = std::min(t, clip.end());
    auto found = propose(grid, part, cfg.proposer, *backends.proposer, ledger, clip.interval);
    r.pooled.insert(r.pooled.end(), found.begin(), found.end());
    grid.montage = RgbImage();
    r.grids.push_back(std::move(grid));
  }
  r.consolidated = consolidate(r.pooled, cfg.samplings, cfg.scc_config(), ledger, backends.consolidator);
  r.surviving = filter_support(r.consolidated, cfg.tau);
  r.calls = ledger.snapshot();
  return r;
}

ClipResult run_clip(const Clip& clip, const FrameProvider& frames, const RunConfig& cfg,
                    const Backends& backends) {
  if (!backends.grounder || !backends.propagator)
    throw InvalidArgument("grounding and propagation backends are required");
  auto r = propose_and_consolidate(clip, frames, cfg, backends);
  CallLedger ledger;
  r.instances = localize(r.surviving, frames, cfg.localization, *backends.grounder,
                         *backends.propagator, ledger);
  r.calls += ledger.snapshot();
  return r;
}

RunResult run_gridvad(const FrameProvider& frames, const RunConfig& cfg, const Backends& backends,
                      CallLedger& ledger, const GroundTruth* gt) {
  cfg.validate();
  if (!backends.proposer || !backends.grounder || !backends.propagator)
    throw InvalidArgument("proposer, grounding and propagation backends are required");
  RunResult out;
  out.meta = frames.meta();
  const auto clips = segment_clips(out.meta, cfg);
  out.clips.resize(clips.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < clips.size();) {
      try {
        out.clips[i] = run_clip(clips[i], frames, cfg, backends);
      } catch (const Error& e) {
        spdlog::error("clip [{}, {}] failed: {}", clips[i].start(), clips[i].end(), e.what());
        out.clips[i] = ClipResult{};
        out.clips[i].clip = clips[i];
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp<std::size_t>(
      static_cast<std::size_t>(cfg.workers), 1, std::max<std::size_t>(1, clips.size())));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  for (const auto& c : out.clips) {
    out.calls += c.calls;
    ledger.add(c.calls);
    out.instances.insert(out.instances.end(), c.instances.begin(), c.instances.end());
  }
  if (gt) {
    const std::vector<std::vector<AnomalyInstance>> inst{out.instances};
    out.metrics = evaluate(std::span<const GroundTruth>(gt, 1), inst, cfg.metrics);
  }
  return out;
}

UniformResult run_uniform(const FrameProvider& frames, const RunConfig& cfg,
                          VisionLanguageBackend& backend, CallLedger& ledger, const GroundTruth* gt) {
  if (cfg.uniform_stride < 1) throw InvalidArgument("uniform_stride must be >= 1");
  const auto meta = frames.meta();
  UniformResult out;
  out.frame_scores.assign(static_cast<std::size_t>(meta.frame_count), 0.0);
  CallLedger local;
  for (FrameIndex t = 0; t < meta.frame_count; t += cfg.uniform_stride) {
    VlmRequest request;
    request.prompt = build_single_frame_prompt();
    request.image = frames.frame(t);
    request.temperature = cfg.proposer.temperature;
    request.video_id = meta.id;
    request.frame_indices = {t};
    request.sampling_index = 1;
    request.seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(t));
    local.add_vlm();
    double score = 0;
    try {
      const auto text = local.timed([&] { return backend.complete(request); });
      for (const auto& e : parse_response(text, 1).entries) score = std::max(score, e.confidence);
    } catch (const Error& e) {
      spdlog::warn("uniform query at frame {} failed: {}", t, e.what());
    }
    const FrameIndex stop = std::min(meta.frame_count, t + cfg.uniform_stride);
    std::fill(out.frame_scores.begin() + t, out.frame_scores.begin() + stop, score);
  }
  out.calls = local.snapshot();
  ledger.add(out.calls);
  if (gt) {
    const std::vector<std::vector<double>> fs{out.frame_scores};
    out.frame_auroc = frame_auroc<double>(std::span<const GroundTruth>(gt, 1), fs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(const std::optional<double>& v, int digits) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << *v;
  return s.str();
}

EfficiencyRow make_row(std::string name, const CallCounts& c, std::optional<double> auroc) {
  EfficiencyRow r{std::move(name), c.language_model_calls(), auroc, c.wall_time_s, std::nullopt};
  if (auroc && r.vlm_calls > 0) r.fr_auc_per_call = *auroc / static_cast<double>(r.vlm_calls);
  return r;
}

}  // namespace

EfficiencyReport report(const CallCounts& a, const CallCounts& b, std::optional<double> auroc_a,
                        std::optional<double> auroc_b, std::string name_a, std::string name_b) {
  EfficiencyReport r;
  r.rows.push_back(make_row(std::move(name_a), a, auroc_a));
  r.rows.push_back(make_row(std::move(name_b), b, auroc_b));
  if (r.rows[0].vlm_calls > 0)
    r.call_ratio = static_cast<double>(r.rows[1].vlm_calls) / static_cast<double>(r.rows[0].vlm_calls);
  if (r.rows[0].fr_auc_per_call && r.rows[1].fr_auc_per_call && *r.rows[1].fr_auc_per_call > 0)
    r.per_call_ratio = *r.rows[0].fr_auc_per_call / *r.rows[1].fr_auc_per_call;
  return r;
}

json EfficiencyReport::to_json() const {
  json rows_json = json::object();
  for (const auto& row : rows)
    rows_json[row.paradigm] = {{kColumns[0], row.vlm_calls},
                               {kColumns[1], optional_json(row.frame_auroc)},
                               {kColumns[2], row.time_s},
                               {kColumns[3], optional_json(row.fr_auc_per_call)}};
  return {{"columns", kColumns},
          {"rows", rows_json},
          {"call_ratio", call_ratio},
          {"per_call_ratio", optional_json(per_call_ratio)}};
}

std::string EfficiencyReport::to_table() const {
  std::ostringstream s;
  s << std::left << std::setw(10) << "" << " | " << kColumns[0] << " | " << kColumns[1] << " | "
    << kColumns[2] << " | " << kColumns[3] << "\n";
  for (const auto& row : rows)
    s << std::left << std::setw(10) << row.paradigm << " | " << row.vlm_calls << " | "
      << fixed(row.frame_auroc, 4) << " | " << fixed(row.time_s, 3) << " | "
      << fixed(row.fr_auc_per_call, 5) << "\n";
  s << "call ratio " << fixed(call_ratio, 2) << "x\n";
  return s.str();
}

ComparisonResult compare(const FrameProvider& frames, const RunConfig& cfg, const Backends& backends,
                         const GroundTruth* gt) {
  ComparisonResult out;
  CallLedger ga, ub;
  out.gridvad = run_gridvad(frames, cfg, backends, ga, gt);
  out.uniform = run_uniform(frames, cfg, *backends.proposer, ub, gt);
  std::optional<double> grid_auroc;
  if (gt) {
    const std::vector<std::vector<double>> fs{frame_scores<double>(out.gridvad.meta, out.gridvad.instances)};
    grid_auroc = frame_auroc<double>(std::span<const GroundTruth>(gt, 1), fs);
  }
  out.report = report(out.gridvad.calls, out.uniform.calls, grid_auroc, out.uniform.frame_auroc);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic studies

json ArmSummary::to_json() const {
  return {{"samplings", arm.samplings},
          {"tau", arm.tau},
          {"seeds", seeds},
          {"frame_auroc", optional_json(frame_auroc)},
          {"pixel_auroc", optional_json(pixel_auroc)},
          {"pixel_ap", optional_json(pixel_ap)},
          {"pixel_aupro", optional_json(pixel_aupro)},
          {"pixel_f1", optional_json(pixel_f1)},
          {"rbdc", optional_json(rbdc)},
          {"tbdc", optional_json(tbdc)},
          {"mean_language_model_calls", mean_language_model_calls}};
}

namespace {

struct Mean {
  double sum = 0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) sum += *v, ++n;
  }
  std::optional<double> value() const {
    return n ? std::optional<double>(sum / n) : std::nullopt;
  }
};

}  // namespace

std::vector<ArmSummary> ablate_scc(const AblationConfig& cfg) {
  if (cfg.seeds < 1) throw InvalidArgument("ablation needs at least one seed");
  struct Acc {
    Mean frame_auroc, pixel_auroc, pixel_ap, pixel_aupro, pixel_f1, rbdc, tbdc;
    double calls = 0;
  };
  std::vector<Acc> acc(cfg.arms.size());
  for (int s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(s);
    const auto world = generate_world(cfg.world, seed, "ablation-" + std::to_string(seed));
    const auto gt = ground_truth(world);
    const auto backends = simulated_backends(world, cfg.noise);
    const SyntheticFrameProvider frames(world);
    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
      RunConfig run = cfg.run;
      run.samplings = cfg.arms[a].samplings;
      run.tau = cfg.arms[a].tau;
      run.seed = hash_combine(cfg.run.seed, seed);
      CallLedger ledger;
      const auto r = run_gridvad(frames, run, backends.view(), ledger, &gt);
      const auto& m = *r.metrics;
      acc[a].frame_auroc.add(m.frame_auroc);
      acc[a].pixel_auroc.add(m.pixel_auroc);
      acc[a].pixel_ap.add(m.pixel_ap);
      acc[a].pixel_aupro.add(m.pixel_aupro);
      acc[a].pixel_f1.add(m.pixel_f1);
      acc[a].rbdc.add(m.rbdc);
      acc[a].tbdc.add(m.tbdc);
      acc[a].calls += static_cast<double>(r.calls.language_model_calls());
    }
  }
  std::vector<ArmSummary> out;
  for (std::size_t a = 0; a < cfg.arms.size(); ++a)
    out.push_back({cfg.arms[a], cfg.seeds, acc[a].frame_auroc.value(), acc[a].pixel_auroc.value(),
                   acc[a].pixel_ap.value(), acc[a].pixel_aupro.value(), acc[a].pixel_f1.value(),
                   acc[a].rbdc.value(), acc[a].tbdc.value(), acc[a].calls / cfg.seeds});
  return out;
}

SurvivalStats hallucination_survival(const WorldParams& world_params, const NoiseProfile& noise,
                                     const RunConfig& run, int seeds, std::uint64_t base_seed) {
  run.validate();
  SurvivalStats stats;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
    const auto world = generate_world(world_params, seed, "survival-" + std::to_string(seed));
    const auto backends = simulated_backends(world, noise);
    const SyntheticFrameProvider frames(world);
    RunConfig cfg = run;
    cfg.seed = hash_combine(run.seed, seed);
    for (const auto& clip : segment_clips(world.meta(), cfg)) {
      const auto r = propose_and_consolidate(clip, frames, cfg, backends.view());
      for (const auto& p : r.pooled)
        if (is_hallucination(world, p.description)) ++stats.hallucinated;
      for (const auto& e : r.surviving)
        for (const auto& m : e.members)
          if (is_hallucination(world, m.description)) ++stats.survived;
    }
  }
  return stats;
}

std::vector<ConvergencePoint> boundary_convergence(const WorldParams& world_params,
                                                   const RunConfig& run,
                                                   std::span<const int> samplings, int seeds,
                                                   std::uint64_t base_seed) {
  std::vector<ConvergencePoint> out;
  for (const int m : samplings) out.push_back({m, 0, 0, 0, 0});
  std::vector<double> err(samplings.size(), 0), bin_err(samplings.size(), 0);
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
    const auto world = generate_world(world_params, seed, "convergence-" + std::to_string(seed));
    const auto backends = simulated_backends(world, NoiseProfile{});
    const SyntheticFrameProvider frames(world);
    for (std::size_t i = 0; i < samplings.size(); ++i) {
      RunConfig cfg = run;
      cfg.samplings = samplings[i];
      cfg.tau = 1;
      cfg.seed = hash_combine(run.seed, seed);
      for (const auto& clip : segment_clips(world.meta(), cfg)) {
        const auto r = propose_and_consolidate(clip, frames, cfg, backends.view());
        Clip padded = clip;
        padded.interval.end = std::max(clip.end(), clip.start() + cfg.cell_count() - 1);
        const auto part = partition(padded, cfg.cell_count());
        for (const auto* actor : world.anomalies()) {
          const TemporalInterval truth{std::max(actor->spawn, clip.start()),
                                       std::min(actor->despawn, clip.end())};
          if (truth.start > truth.end) continue;
          const ConsolidatedProposal* best = nullptr;
          int best_overlap = -1;
          for (const auto& e : r.surviving) {
            if (match_actor(world, e.description) != actor) continue;
            const int ov = std::min(e.interval.end, truth.end) - std::max(e.interval.start, truth.start);
            if (ov > best_overlap) best = &e, best_overlap = ov;
          }
          if (!best) {
            ++out[i].unmatched;
            continue;
          }
          const auto bin_of = [&](FrameIndex t) {
            for (const auto& b : part.bins)
              if (b.contains(t)) return b;
            return part.bins.back();
          };
          const FrameIndex q0 = bin_of(truth.start).begin, q1 = std::min(clip.end(), bin_of(truth.end).end - 1);
          err[i] += std::abs(best->interval.start - truth.start) + std::abs(best->interval.end - truth.end);
          bin_err[i] += std::abs(best->interval.start - q0) + std::abs(best->interval.end - q1);
          out[i].boundaries += 2;
        }
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].boundaries > 0) {
      out[i].mean_abs_error = err[i] / static_cast<double>(out[i].boundaries);
      out[i].mean_bin_error = bin_err[i] / static_cast<double>(out[i].boundaries);
    }
  return out;
}

}  // namespace gridvad

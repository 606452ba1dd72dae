#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridvad/backends.hpp"
#include "gridvad/image.hpp"
#include "gridvad/ledger.hpp"
#include "gridvad/localization.hpp"
#include "gridvad/metrics.hpp"
#include "gridvad/proposer.hpp"
#include "gridvad/scc.hpp"
#include "gridvad/synth.hpp"

namespace gridvad {

enum class Paradigm { gridvad, uniform };

struct RunConfig {
  int grid_side = 3;
  int samplings = 5;  // M
  int tau = 3;
  int clip_length = 180;
  int clip_overlap = 30;
  LocalizationConfig localization;
  Paradigm paradigm = Paradigm::gridvad;
  int uniform_stride = 10;
  ProposerConfig proposer;
  SccConfig scc;  // scc.tau is overwritten by `tau`
  std::string grounding_endpoint;    // empty: simulated
  std::string propagation_endpoint;  // empty: simulated
  std::uint64_t seed = 0;
  std::string output_dir = "gridvad-out";
  int workers = 1;  // clips processed concurrently
  MetricParams metrics;

  int cell_count() const { return grid_side * grid_side; }
  SccConfig scc_config() const;
  void validate() const;

  nlohmann::json to_json() const;
  /// Keys as written by to_json; missing keys keep their defaults and unknown
  /// keys throw SchemaError.
  static RunConfig from_json(const nlohmann::json& j);
};

/// Borrowed backend set. The consolidator is used in llm SCC mode only.
struct Backends {
  VisionLanguageBackend* proposer = nullptr;
  VisionLanguageBackend* consolidator = nullptr;
  GroundingBackend* grounder = nullptr;
  PropagationBackend* propagator = nullptr;
};

/// Owning backend set built from a config (HTTP) or a synthetic world.
struct BackendSet {
  std::unique_ptr<VisionLanguageBackend> proposer, consolidator;
  std::unique_ptr<GroundingBackend> grounder;
  std::unique_ptr<PropagationBackend> propagator;

  Backends view() const { return {proposer.get(), consolidator.get(), grounder.get(), propagator.get()}; }
};

/// HTTP clients for every endpoint set in `cfg`.
BackendSet http_backends(const RunConfig& cfg);
BackendSet simulated_backends(const SyntheticWorld& world, const NoiseProfile& noise);

/// Windows of clip_length frames starting every clip_length − clip_overlap
/// frames; the last window is clamped to the video end.
std::vector<Clip> segment_clips(const VideoMeta& video, const RunConfig& cfg);

struct ClipResult {
  Clip clip;
  std::vector<GridSample> grids;  // montages dropped; indices and seeds kept
  std::vector<Proposal> pooled;
  std::vector<ConsolidatedProposal> consolidated;
  std::vector<ConsolidatedProposal> surviving;
  std::vector<AnomalyInstance> instances;
  CallCounts calls;
};

/// Seed of sampling m of the clip starting at `clip_start`.
std::uint64_t sampling_seed(std::uint64_t run_seed, const std::string& video_id,
                            FrameIndex clip_start, int sampling_index);

/// M samplings, M proposer calls, one consolidation and the support filter.
/// Clips shorter than K are padded by repeating their last frame.
ClipResult propose_and_consolidate(const Clip& clip, const FrameProvider& frames,
                                   const RunConfig& cfg, const Backends& backends);

/// propose_and_consolidate followed by localization of the survivors.
ClipResult run_clip(const Clip& clip, const FrameProvider& frames, const RunConfig& cfg,
                    const Backends& backends);

struct RunResult {
  VideoMeta meta;
  std::vector<ClipResult> clips;
  std::vector<AnomalyInstance> instances;  // all clips; merged by mask union when scored
  CallCounts calls;
  std::optional<MetricReport> metrics;
};

/// The full pipeline over one video. Clips run concurrently up to
/// cfg.workers; each clip's calls are added to `ledger`.
RunResult run_gridvad(const FrameProvider& frames, const RunConfig& cfg, const Backends& backends,
                      CallLedger& ledger, const GroundTruth* gt = nullptr);

struct UniformResult {
  std::vector<double> frame_scores;
  CallCounts calls;
  std::optional<double> frame_auroc;
};

/// One single-frame query every uniform_stride frames; a frame's score is
/// the highest reported confidence of the latest query at or before it.
UniformResult run_uniform(const FrameProvider& frames, const RunConfig& cfg,
                          VisionLanguageBackend& backend, CallLedger& ledger,
                          const GroundTruth* gt = nullptr);

struct EfficiencyRow {
  std::string paradigm;
  std::int64_t vlm_calls = 0;
  std::optional<double> frame_auroc;
  double time_s = 0;
  std::optional<double> fr_auc_per_call;
};

struct EfficiencyReport {
  static constexpr std::array<const char*, 4> kColumns = {"VLM calls", "Frame-AUROC", "Time (s)",
                                                          "Fr-AUC / call"};
  std::vector<EfficiencyRow> rows;
  double call_ratio = 0;                   // rows[1] calls / rows[0] calls
  std::optional<double> per_call_ratio;    // rows[0] per-call / rows[1] per-call

  nlohmann::json to_json() const;
  std::string to_table() const;
};

EfficiencyReport report(const CallCounts& a, const CallCounts& b, std::optional<double> auroc_a,
                        std::optional<double> auroc_b, std::string name_a = "gridvad",
                        std::string name_b = "uniform");

struct ComparisonResult {
  RunResult gridvad;
  UniformResult uniform;
  EfficiencyReport report;
};

ComparisonResult compare(const FrameProvider& frames, const RunConfig& cfg, const Backends& backends,
                         const GroundTruth* gt = nullptr);

// ---------------------------------------------------------------------------
// Synthetic studies

struct AblationArm {
  int samplings = 1;
  int tau = 1;
};

struct ArmSummary {
  AblationArm arm;
  int seeds = 0;
  std::optional<double> frame_auroc, pixel_auroc, pixel_ap, pixel_aupro, pixel_f1, rbdc, tbdc;
  double mean_language_model_calls = 0;

  nlohmann::json to_json() const;
};

struct AblationConfig {
  std::vector<AblationArm> arms{{1, 1}, {5, 3}};
  int seeds = 20;
  std::uint64_t base_seed = 1;
  WorldParams world;
  NoiseProfile noise;
  RunConfig run;
};

/// Each seed draws one world; every arm runs on it with the same backends
/// and the per-arm metrics are averaged over seeds.
std::vector<ArmSummary> ablate_scc(const AblationConfig& cfg);

struct SurvivalStats {
  std::int64_t hallucinated = 0;  // hallucinated proposals pooled
  std::int64_t survived = 0;      // of those, members of an entry passing the filter
  double rate() const { return hallucinated ? static_cast<double>(survived) / hallucinated : 0.0; }
};

SurvivalStats hallucination_survival(const WorldParams& world, const NoiseProfile& noise,
                                     const RunConfig& run, int seeds, std::uint64_t base_seed);

struct ConvergencePoint {
  int samplings = 0;
  double mean_abs_error = 0;   // frames, averaged over both ends of every matched event
  double mean_bin_error = 0;   // same, against the event ends rounded out to bin edges
  std::int64_t boundaries = 0;
  std::int64_t unmatched = 0;  // events in a clip with no surviving entry
};

/// Boundary error of consolidated intervals against the true event extent
/// (clipped to each clip), for each M, under noiseless backends.
std::vector<ConvergencePoint> boundary_convergence(const WorldParams& world, const RunConfig& run,
                                                   std::span<const int> samplings, int seeds,
                                                   std::uint64_t base_seed);

}  // namespace gridvad

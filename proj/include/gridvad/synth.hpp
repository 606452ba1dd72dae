#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridvad/backends.hpp"
#include "gridvad/image.hpp"
#include "gridvad/metrics.hpp"
#include "gridvad/proposer.hpp"
#include "gridvad/sampler.hpp"
#include "gridvad/types.hpp"

namespace gridvad {

enum class ShapeKind { rect, circle };

/// A constant-velocity shape. Track id 0 marks a normal (background) actor.
struct Actor {
  int track_id = 0;
  std::string description;
  ShapeKind shape = ShapeKind::rect;
  int width = 10, height = 10;  // circles use width as the diameter
  double x = 0, y = 0;          // top-left corner at the spawn frame
  double vx = 0, vy = 0;        // pixels per frame
  FrameIndex spawn = 0, despawn = 0;  // inclusive
  std::array<std::uint8_t, 3> color{255, 255, 255};
  double salience = 1.0;  // how readily a viewer notices the actor

  bool anomaly() const { return track_id > 0; }
  bool present(FrameIndex t) const { return spawn <= t && t <= despawn; }
  TemporalInterval lifetime() const { return {spawn, despawn}; }
  /// Integer top-left corner at t.
  std::array<int, 2> corner(FrameIndex t) const;
  /// Tight pixel box [x0, x1) × [y0, y1) at t, score 1.
  BoundingBox bounds(FrameIndex t) const;
  /// Silhouette at t on an H×W canvas (empty when absent).
  Bitmap silhouette(FrameIndex t, int height, int width) const;
  bool covers(FrameIndex t, int row, int col) const;
};

struct SyntheticWorld {
  std::string id = "synthetic";
  int height = 128, width = 128;
  int frame_count = 200;
  std::uint64_t seed = 0;
  std::array<std::uint8_t, 3> background{48, 52, 56};
  std::vector<Actor> actors;  // normals first, then anomalies; later actors draw on top

  VideoMeta meta() const { return {id, frame_count, height, width, 25.0}; }
  std::vector<const Actor*> anomalies() const;
  const Actor* track(int track_id) const;
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticWorld from_json(const nlohmann::json& j);
};

struct WorldParams {
  int height = 128, width = 128;
  int frame_count = 200;
  int normal_actors = 3;
  int normal_size_min = 10, normal_size_max = 16;
  int anomaly_actors = 2;
  int anomaly_size_min = 12, anomaly_size_max = 20;
  int small_anomaly_actors = 0;  // extra anomalies drawn from the small size range
  int small_size_min = 8, small_size_max = 10;
  int anomaly_length = 60;
  int spawn_quantum = 1;      // spawn frames are multiples of this
  int spawn_max = -1;         // latest spawn frame; -1: frame_count - anomaly_length
  double salience_area = 0;   // salience = min(1, area / salience_area); 0 disables
  bool separate_anomalies = true;  // concurrent anomalies never touch

  void validate() const;
  nlohmann::json to_json() const;
  static WorldParams from_json(const nlohmann::json& j);
};

SyntheticWorld generate_world(const WorldParams& params, std::uint64_t seed,
                              std::string id = "synthetic");

struct RenderedFrame {
  RgbImage image;
  Bitmap mask;
  LabelMap labels;
};

RenderedFrame render(const SyntheticWorld& world, FrameIndex t);

GroundTruth ground_truth(const SyntheticWorld& world);

class SyntheticFrameProvider final : public FrameProvider {
 public:
  explicit SyntheticFrameProvider(const SyntheticWorld& world) : world_(world) {}
  VideoMeta meta() const override { return world_.meta(); }
  RgbImage frame(FrameIndex t) const override;

 private:
  const SyntheticWorld& world_;
};

struct NoiseProfile {
  double miss_rate = 0;
  double halluc_rate = 0;
  double box_jitter = 0;    // pixels, per box coordinate
  int interval_jitter = 0;  // bins, per reported end
  bool unique_hallucinations = true;  // fresh words per hallucination

  void validate() const;
  nlohmann::json to_json() const;
  static NoiseProfile from_json(const nlohmann::json& j);
};

/// Entries a simulated viewer reports for a grid whose cell k shows
/// `shown[k-1]`. Each visible anomaly is reported with probability
/// salience·(1 − miss_rate), citing the cells in which it is visible; one
/// hallucination is added with probability halluc_rate.
std::vector<ResponseEntry> simulated_entries(const SyntheticWorld& world, const NoiseProfile& noise,
                                             std::span<const FrameIndex> shown, std::uint64_t seed);

std::vector<Proposal> simulated_propose(const GridSample& grid, const BinPartition& partition,
                                        const SyntheticWorld& world, const NoiseProfile& noise,
                                        std::uint64_t seed);

/// True when `description` names no anomaly actor of the world.
bool is_hallucination(const SyntheticWorld& world, std::string_view description);

/// Anomaly actor whose description best matches `text` (word Jaccard >= 0.5).
const Actor* match_actor(const SyntheticWorld& world, std::string_view text);

class SimulatedVlm final : public VisionLanguageBackend {
 public:
  SimulatedVlm(const SyntheticWorld& world, NoiseProfile noise) : world_(world), noise_(noise) {}
  std::string complete(const VlmRequest& request) override;

 private:
  const SyntheticWorld& world_;
  NoiseProfile noise_;
};

/// Text-only consolidator: groups the candidates of an SCC prompt by the
/// deterministic linkage rule and echoes their ids.
class SimulatedTextConsolidator final : public VisionLanguageBackend {
 public:
  explicit SimulatedTextConsolidator(double similarity_floor = 0.5) : floor_(similarity_floor) {}
  std::string complete(const VlmRequest& request) override;

 private:
  double floor_;
};

/// Known descriptions ground to the actor's box ± box_jitter with score
/// 1 − normalized jitter (no box while the actor is absent). Unknown
/// descriptions ground to an arbitrary actor on screen.
class SimulatedGrounder final : public GroundingBackend {
 public:
  SimulatedGrounder(const SyntheticWorld& world, NoiseProfile noise) : world_(world), noise_(noise) {}
  std::vector<BoundingBox> ground(const GroundingRequest& request) override;

 private:
  const SyntheticWorld& world_;
  NoiseProfile noise_;
};

/// Returns the exact silhouettes of the actor the prompt box selects
/// (IoU >= 0.5 at the anchor); otherwise the box itself on every frame.
class SimulatedPropagator final : public PropagationBackend {
 public:
  explicit SimulatedPropagator(const SyntheticWorld& world) : world_(world) {}
  std::vector<Bitmap> propagate(const PropagationRequest& request) override;

 private:
  const SyntheticWorld& world_;
};

struct SimulatedBackends {
  std::unique_ptr<SimulatedVlm> proposer;
  std::unique_ptr<SimulatedTextConsolidator> consolidator;
  std::unique_ptr<SimulatedGrounder> grounder;
  std::unique_ptr<SimulatedPropagator> propagator;
};

SimulatedBackends oracle_backends(const SyntheticWorld& world, const NoiseProfile& noise);

/// Rasterises the box (pixels whose centres fall inside it).
Bitmap box_mask(const BoundingBox& box, int height, int width);

}  // namespace gridvad

#include "gridvad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gridvad/rng.hpp"
#include "gridvad/scc.hpp"

namespace gridvad {

using nlohmann::json;

namespace {

struct NamedColor {
  const char* name;
  std::array<std::uint8_t, 3> rgb;
};

constexpr std::array<NamedColor, 12> kColors = {{{"red", {220, 40, 40}},
                                                 {"green", {40, 200, 60}},
                                                 {"blue", {50, 90, 230}},
                                                 {"yellow", {235, 220, 50}},
                                                 {"orange", {245, 140, 30}},
                                                 {"purple", {150, 60, 200}},
                                                 {"cyan", {40, 210, 220}},
                                                 {"magenta", {230, 60, 190}},
                                                 {"white", {250, 250, 250}},
                                                 {"pink", {250, 160, 190}},
                                                 {"brown", {140, 90, 40}},
                                                 {"lime", {170, 240, 60}}}};
constexpr std::array<const char*, 8> kBoxNouns = {"square", "block", "box",  "crate",
                                                  "brick",  "tile",  "panel", "slab"};
constexpr std::array<const char*, 8> kRoundNouns = {"ball", "disc", "orb",  "sphere",
                                                    "puck", "ring", "coin", "bubble"};
constexpr std::array<const char*, 3> kNormalNouns = {"person walking", "pedestrian",
                                                     "person strolling"};
constexpr std::array<const char*, 5> kHallucinationPool = {
    "person fighting", "fire near bench", "abandoned bag", "car on sidewalk", "person falling"};
constexpr std::array<const char*, 3> kLeadIns = {"", "a ", "the "};

std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view consonants = "bcdfghjklmnpqrstvwxz";
  static constexpr std::string_view vowels = "aeiouy";
  const auto len = rng.uniform_int(5, 7);
  std::string w;
  for (int i = 0; i < len; ++i) {
    const auto& set = i % 2 == 0 ? consonants : vowels;
    w.push_back(set[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(set.size()) - 1))]);
  }
  return w;
}

bool touching(const BoundingBox& a, const BoundingBox& b, double gap) {
  return !(a.x1 + gap <= b.x0 || b.x1 + gap <= a.x0 || a.y1 + gap <= b.y0 || b.y1 + gap <= a.y0);
}

bool collides(const Actor& a, const Actor& b) {
  const FrameIndex lo = std::max(a.spawn, b.spawn), hi = std::min(a.despawn, b.despawn);
  for (FrameIndex t = lo; t <= hi; ++t)
    if (touching(a.bounds(t), b.bounds(t), 2.0)) return true;
  return false;
}

void place(Actor& a, int canvas_h, int canvas_w, Rng& rng) {
  const int h = a.shape == ShapeKind::circle ? a.width : a.height;
  const double x0 = rng.uniform_int(0, canvas_w - a.width), y0 = rng.uniform_int(0, canvas_h - h);
  const double x1 = rng.uniform_int(0, canvas_w - a.width), y1 = rng.uniform_int(0, canvas_h - h);
  const int steps = std::max(1, a.despawn - a.spawn);
  a.x = x0;
  a.y = y0;
  a.vx = (x1 - x0) / steps;
  a.vy = (y1 - y0) / steps;
}

Bitmap draw_box(const BoundingBox& box, int height, int width) {
  Bitmap m = Bitmap::Zero(height, width);
  const int c0 = std::max(0, static_cast<int>(std::ceil(box.x0 - 0.5)));
  const int c1 = std::min(width, static_cast<int>(std::ceil(box.x1 - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(box.y0 - 0.5)));
  const int r1 = std::min(height, static_cast<int>(std::ceil(box.y1 - 0.5)));
  if (c1 > c0 && r1 > r0) m.block(r0, c0, r1 - r0, c1 - c0).setOnes();
  return m;
}

BoundingBox jitter_box(const BoundingBox& truth, double jitter, int height, int width, Rng& rng,
                       double& mean_offset) {
  BoundingBox b = truth;
  mean_offset = 0;
  if (jitter <= 0) return b;
  std::array<double, 4> d{};
  for (auto& v : d) v = rng.uniform(-jitter, jitter);
  b.x0 = std::clamp(truth.x0 + d[0], 0.0, width - 1.0);
  b.y0 = std::clamp(truth.y0 + d[1], 0.0, height - 1.0);
  b.x1 = std::clamp(truth.x1 + d[2], b.x0 + 1.0, static_cast<double>(width));
  b.y1 = std::clamp(truth.y1 + d[3], b.y0 + 1.0, static_cast<double>(height));
  mean_offset = (std::abs(b.x0 - truth.x0) + std::abs(b.y0 - truth.y0) +
                 std::abs(b.x1 - truth.x1) + std::abs(b.y1 - truth.y1)) / 4;
  return b;
}

std::uint64_t frames_key(std::span<const FrameIndex> frames) {
  std::uint64_t h = 0x5eed;
  for (const auto f : frames) h = hash_combine(h, static_cast<std::uint64_t>(f));
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Actors and worlds

std::array<int, 2> Actor::corner(FrameIndex t) const {
  const double dt = t - spawn;
  return {static_cast<int>(std::floor(x + vx * dt + 0.5)),
          static_cast<int>(std::floor(y + vy * dt + 0.5))};
}

BoundingBox Actor::bounds(FrameIndex t) const {
  const auto [cx, cy] = corner(t);
  const int h = shape == ShapeKind::circle ? width : height;
  return {static_cast<double>(cx), static_cast<double>(cy), static_cast<double>(cx + width),
          static_cast<double>(cy + h), 1.0};
}

bool Actor::covers(FrameIndex t, int row, int col) const {
  if (!present(t)) return false;
  const auto [cx, cy] = corner(t);
  const int h = shape == ShapeKind::circle ? width : height;
  const int dx = col - cx, dy = row - cy;
  if (dx < 0 || dy < 0 || dx >= width || dy >= h) return false;
  if (shape == ShapeKind::rect) return true;
  const double r = width / 2.0;
  const double px = dx + 0.5 - r, py = dy + 0.5 - r;
  return px * px + py * py <= r * r;
}

Bitmap Actor::silhouette(FrameIndex t, int canvas_h, int canvas_w) const {
  Bitmap m = Bitmap::Zero(canvas_h, canvas_w);
  if (!present(t)) return m;
  const auto b = bounds(t);
  for (int r = std::max(0, static_cast<int>(b.y0)); r < std::min(canvas_h, static_cast<int>(b.y1)); ++r)
    for (int c = std::max(0, static_cast<int>(b.x0)); c < std::min(canvas_w, static_cast<int>(b.x1)); ++c)
      if (covers(t, r, c)) m(r, c) = 1;
  return m;
}

std::vector<const Actor*> SyntheticWorld::anomalies() const {
  std::vector<const Actor*> out;
  for (const auto& a : actors)
    if (a.anomaly()) out.push_back(&a);
  return out;
}

const Actor* SyntheticWorld::track(int track_id) const {
  for (const auto& a : actors)
    if (a.track_id == track_id) return &a;
  return nullptr;
}

void SyntheticWorld::validate() const {
  meta().validate();
  std::set<int> ids;
  for (const auto& a : actors) {
    if (a.spawn < 0 || a.despawn >= frame_count || a.spawn > a.despawn)
      throw InvalidArgument("actor '" + a.description + "' lives outside [0, N)");
    if (a.width < 1 || a.height < 1) throw InvalidArgument("actor size must be positive");
    for (const FrameIndex t : {a.spawn, a.despawn}) {
      const auto b = a.bounds(t);
      if (b.x0 < 0 || b.y0 < 0 || b.x1 > width || b.y1 > height)
        throw InvalidArgument("actor '" + a.description + "' leaves the canvas");
    }
    if (a.track_id < 0) throw InvalidArgument("track ids must be >= 0");
    if (a.anomaly() && !ids.insert(a.track_id).second)
      throw InvalidArgument("duplicate track id " + std::to_string(a.track_id));
    if (a.salience < 0 || a.salience > 1) throw InvalidArgument("salience must lie in [0, 1]");
  }
}

void WorldParams::validate() const {
  if (height < 8 || width < 8 || frame_count < 1) throw InvalidArgument("world too small");
  if (anomaly_length < 1 || anomaly_length > frame_count)
    throw InvalidArgument("anomaly_length must lie in [1, frame_count]");
  if (normal_size_min < 1 || normal_size_min > normal_size_max || anomaly_size_min < 1 ||
      anomaly_size_min > anomaly_size_max || small_size_min < 1 || small_size_min > small_size_max)
    throw InvalidArgument("size ranges must be nonempty and positive");
  if (std::max({normal_size_max, anomaly_size_max, small_size_max}) > std::min(height, width))
    throw InvalidArgument("actors larger than the canvas");
  if (anomaly_actors + small_anomaly_actors > static_cast<int>(kColors.size()))
    throw InvalidArgument("at most " + std::to_string(kColors.size()) + " anomaly actors");
  if (spawn_quantum < 1) throw InvalidArgument("spawn_quantum must be >= 1");
  if (salience_area < 0) throw InvalidArgument("salience_area must be >= 0");
}

#define GRIDVAD_WORLD_PARAM_FIELDS(X)                                                       \
  X(height) X(width) X(frame_count) X(normal_actors) X(normal_size_min) X(normal_size_max)  \
  X(anomaly_actors) X(anomaly_size_min) X(anomaly_size_max) X(small_anomaly_actors)          \
  X(small_size_min) X(small_size_max) X(anomaly_length) X(spawn_quantum) X(spawn_max)       \
  X(salience_area) X(separate_anomalies)

json WorldParams::to_json() const {
  json j;
#define X(f) j[#f] = f;
  GRIDVAD_WORLD_PARAM_FIELDS(X)
#undef X
  return j;
}

WorldParams WorldParams::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("world", "expected an object");
  WorldParams p;
  const auto known = p.to_json();
  for (const auto& [key, v] : j.items()) {
    if (!known.contains(key)) throw SchemaError(key, "unknown world parameter");
    try {
#define X(f) if (key == #f) p.f = v.get<decltype(p.f)>();
      GRIDVAD_WORLD_PARAM_FIELDS(X)
#undef X
    } catch (const json::exception& e) {
      throw SchemaError(key, e.what());
    }
  }
  p.validate();
  return p;
}

#undef GRIDVAD_WORLD_PARAM_FIELDS

SyntheticWorld generate_world(const WorldParams& p, std::uint64_t seed, std::string id) {
  p.validate();
  SyntheticWorld w;
  w.id = std::move(id);
  w.height = p.height;
  w.width = p.width;
  w.frame_count = p.frame_count;
  w.seed = seed;
  Rng rng(seed);

  for (int i = 0; i < p.normal_actors; ++i) {
    Actor a;
    a.description = kNormalNouns[static_cast<std::size_t>(i) % kNormalNouns.size()];
    a.width = static_cast<int>(rng.uniform_int(p.normal_size_min, p.normal_size_max));
    a.height = static_cast<int>(rng.uniform_int(p.normal_size_min, p.normal_size_max));
    const auto v = static_cast<std::uint8_t>(rng.uniform_int(110, 190));
    a.color = {v, v, static_cast<std::uint8_t>(v + 10)};
    a.spawn = 0;
    a.despawn = p.frame_count - 1;
    place(a, p.height, p.width, rng);
    w.actors.push_back(a);
  }

  std::vector<std::size_t> colors(kColors.size());
  std::iota(colors.begin(), colors.end(), std::size_t{0});
  std::shuffle(colors.begin(), colors.end(), std::mt19937_64(rng.next()));
  std::size_t next_box = 0, next_round = 0;
  const int latest = p.spawn_max >= 0 ? std::min(p.spawn_max, p.frame_count - p.anomaly_length)
                                      : p.frame_count - p.anomaly_length;
  const int total = p.anomaly_actors + p.small_anomaly_actors;
  std::vector<Actor> placed;
  for (int i = 0; i < total; ++i) {
    const bool small = i >= p.anomaly_actors;
    Actor a;
    a.track_id = i + 1;
    const bool round = rng.bernoulli(0.5) ? next_round < kRoundNouns.size()
                                          : next_box >= kBoxNouns.size();
    a.shape = round ? ShapeKind::circle : ShapeKind::rect;
    const auto& color = kColors[colors[static_cast<std::size_t>(i)]];
    a.color = color.rgb;
    a.description = std::string(color.name) + " " +
                    (round ? kRoundNouns[next_round++] : kBoxNouns[next_box++]);
    const int lo = small ? p.small_size_min : p.anomaly_size_min;
    const int hi = small ? p.small_size_max : p.anomaly_size_max;
    a.width = static_cast<int>(rng.uniform_int(lo, hi));
    a.height = round ? a.width : static_cast<int>(rng.uniform_int(lo, hi));
    bool ok = false;
    for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
      a.spawn = p.spawn_quantum * static_cast<int>(rng.uniform_int(0, std::max(0, latest) / p.spawn_quantum));
      a.despawn = std::min(p.frame_count - 1, a.spawn + p.anomaly_length - 1);
      place(a, p.height, p.width, rng);
      ok = !p.separate_anomalies ||
           std::none_of(placed.begin(), placed.end(), [&](const Actor& b) { return collides(a, b); });
    }
    if (!ok) throw InvalidArgument("cannot place anomaly actors without contact; use fewer or smaller ones");
    if (p.salience_area > 0) {
      const auto area = static_cast<double>((a.silhouette(a.spawn, p.height, p.width) != 0).count());
      a.salience = std::min(1.0, area / p.salience_area);
    }
    placed.push_back(a);
  }
  w.actors.insert(w.actors.end(), placed.begin(), placed.end());
  w.validate();
  return w;
}

RenderedFrame render(const SyntheticWorld& world, FrameIndex t) {
  if (t < 0 || t >= world.frame_count) throw InvalidArgument("frame index outside the world");
  RenderedFrame f{RgbImage(world.height, world.width, world.background),
                  Bitmap::Zero(world.height, world.width),
                  LabelMap::Zero(world.height, world.width)};
  // A faint static floor pattern so frames are not flat.
  for (int r = 0; r < world.height; ++r)
    for (int c = 0; c < world.width; ++c)
      if (r % 16 == 0 || c % 16 == 0)
        f.image.set(r, c, {static_cast<std::uint8_t>(world.background[0] + 14),
                           static_cast<std::uint8_t>(world.background[1] + 14),
                           static_cast<std::uint8_t>(world.background[2] + 14)});
  for (const auto& a : world.actors) {
    if (!a.present(t)) continue;
    const auto b = a.bounds(t);
    for (int r = static_cast<int>(b.y0); r < static_cast<int>(b.y1); ++r)
      for (int c = static_cast<int>(b.x0); c < static_cast<int>(b.x1); ++c) {
        if (!a.covers(t, r, c)) continue;
        f.image.set(r, c, a.color);
        if (a.anomaly()) {
          f.mask(r, c) = 1;
          f.labels(r, c) = static_cast<std::uint16_t>(a.track_id);
        }
      }
  }
  return f;
}

GroundTruth ground_truth(const SyntheticWorld& world) {
  GroundTruth gt{world.meta(), {}, std::map<FrameIndex, LabelMap>{}};
  for (FrameIndex t = 0; t < world.frame_count; ++t) {
    const bool any = std::any_of(world.actors.begin(), world.actors.end(),
                                 [t](const Actor& a) { return a.anomaly() && a.present(t); });
    if (!any) continue;
    auto f = render(world, t);
    gt.masks.emplace(t, std::move(f.mask));
    gt.labels->emplace(t, std::move(f.labels));
  }
  return gt;
}

RgbImage SyntheticFrameProvider::frame(FrameIndex t) const { return render(world_, t).image; }

// ---------------------------------------------------------------------------
// Serialization

namespace {

json actor_to_json(const Actor& a) {
  return {{"track_id", a.track_id},
          {"description", a.description},
          {"shape", a.shape == ShapeKind::rect ? "rect" : "circle"},
          {"width", a.width},
          {"height", a.height},
          {"x", a.x},
          {"y", a.y},
          {"vx", a.vx},
          {"vy", a.vy},
          {"spawn", a.spawn},
          {"despawn", a.despawn},
          {"color", a.color},
          {"salience", a.salience}};
}

Actor actor_from_json(const json& j, const std::string& where) {
  try {
    Actor a;
    a.track_id = j.at("track_id").get<int>();
    a.description = j.at("description").get<std::string>();
    const auto shape = j.at("shape").get<std::string>();
    if (shape != "rect" && shape != "circle") throw SchemaError(where + ".shape", "expected rect or circle");
    a.shape = shape == "rect" ? ShapeKind::rect : ShapeKind::circle;
    a.width = j.at("width").get<int>();
    a.height = j.at("height").get<int>();
    a.x = j.at("x").get<double>();
    a.y = j.at("y").get<double>();
    a.vx = j.at("vx").get<double>();
    a.vy = j.at("vy").get<double>();
    a.spawn = j.at("spawn").get<int>();
    a.despawn = j.at("despawn").get<int>();
    a.color = j.at("color").get<std::array<std::uint8_t, 3>>();
    a.salience = j.value("salience", 1.0);
    return a;
  } catch (const json::exception& e) {
    throw SchemaError(where, e.what());
  }
}

}  // namespace

json SyntheticWorld::to_json() const {
  json list = json::array();
  for (const auto& a : actors) list.push_back(actor_to_json(a));
  return {{"id", id},          {"height", height}, {"width", width},
          {"frame_count", frame_count}, {"seed", seed}, {"background", background},
          {"actors", list}};
}

SyntheticWorld SyntheticWorld::from_json(const json& j) {
  SyntheticWorld w;
  try {
    w.id = j.at("id").get<std::string>();
    w.height = j.at("height").get<int>();
    w.width = j.at("width").get<int>();
    w.frame_count = j.at("frame_count").get<int>();
    w.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("background")) w.background = j["background"].get<std::array<std::uint8_t, 3>>();
  } catch (const json::exception& e) {
    throw SchemaError("world", e.what());
  }
  if (!j.contains("actors") || !j["actors"].is_array()) throw SchemaError("actors", "expected an array");
  for (std::size_t i = 0; i < j["actors"].size(); ++i)
    w.actors.push_back(actor_from_json(j["actors"][i], "actors[" + std::to_string(i) + "]"));
  w.validate();
  return w;
}

void NoiseProfile::validate() const {
  if (miss_rate < 0 || miss_rate > 1 || halluc_rate < 0 || halluc_rate > 1)
    throw InvalidArgument("noise rates must lie in [0, 1]");
  if (box_jitter < 0 || interval_jitter < 0) throw InvalidArgument("jitters must be >= 0");
}

json NoiseProfile::to_json() const {
  return {{"miss_rate", miss_rate},
          {"halluc_rate", halluc_rate},
          {"box_jitter", box_jitter},
          {"interval_jitter", interval_jitter},
          {"unique_hallucinations", unique_hallucinations}};
}

NoiseProfile NoiseProfile::from_json(const json& j) {
  NoiseProfile n;
  n.miss_rate = j.value("miss_rate", n.miss_rate);
  n.halluc_rate = j.value("halluc_rate", n.halluc_rate);
  n.box_jitter = j.value("box_jitter", n.box_jitter);
  n.interval_jitter = j.value("interval_jitter", n.interval_jitter);
  n.unique_hallucinations = j.value("unique_hallucinations", n.unique_hallucinations);
  n.validate();
  return n;
}

// ---------------------------------------------------------------------------
// Simulated backends

const Actor* match_actor(const SyntheticWorld& world, std::string_view text) {
  const Actor* best = nullptr;
  double best_score = 0.5;
  for (const auto* a : world.anomalies()) {
    const double s = token_jaccard(text, a->description);
    if (s >= best_score && (!best || s > best_score)) {
      best = a;
      best_score = s;
    }
  }
  return best;
}

bool is_hallucination(const SyntheticWorld& world, std::string_view description) {
  return match_actor(world, description) == nullptr;
}

std::vector<ResponseEntry> simulated_entries(const SyntheticWorld& world, const NoiseProfile& noise,
                                             std::span<const FrameIndex> shown, std::uint64_t seed) {
  Rng rng(seed);
  const int k = static_cast<int>(shown.size());
  std::vector<ResponseEntry> out;
  for (const auto* a : world.anomalies()) {
    const double u = rng.uniform();
    const auto lead = kLeadIns[static_cast<std::size_t>(rng.uniform_int(0, kLeadIns.size() - 1))];
    const double conf = rng.uniform(0.6, 1.0);
    const auto jitter_lo = rng.uniform_int(-noise.interval_jitter, noise.interval_jitter);
    const auto jitter_hi = rng.uniform_int(-noise.interval_jitter, noise.interval_jitter);
    std::vector<int> cells;
    for (int c = 1; c <= k; ++c)
      if (a->present(shown[static_cast<std::size_t>(c - 1)])) cells.push_back(c);
    if (cells.empty() || u >= a->salience * (1.0 - noise.miss_rate)) continue;
    if (noise.interval_jitter > 0) {
      int lo = std::clamp(cells.front() + static_cast<int>(jitter_lo), 1, k);
      int hi = std::clamp(cells.back() + static_cast<int>(jitter_hi), 1, k);
      if (lo > hi) std::swap(lo, hi);
      cells.clear();
      for (int c = lo; c <= hi; ++c) cells.push_back(c);
    }
    out.push_back({std::string(lead) + a->description, std::move(cells), conf, false});
  }
  if (rng.bernoulli(noise.halluc_rate)) {
    ResponseEntry h;
    if (noise.unique_hallucinations) {
      h.description = pseudo_word(rng) + " " + pseudo_word(rng);
    } else {
      h.description = kHallucinationPool[static_cast<std::size_t>(
          rng.uniform_int(0, kHallucinationPool.size() - 1))];
    }
    const int len = static_cast<int>(rng.uniform_int(1, std::min(3, k)));
    const int first = static_cast<int>(rng.uniform_int(1, k - len + 1));
    for (int c = first; c < first + len; ++c) h.evidence_cells.push_back(c);
    h.confidence = rng.uniform(0.5, 1.0);
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<Proposal> simulated_propose(const GridSample& grid, const BinPartition& partition,
                                        const SyntheticWorld& world, const NoiseProfile& noise,
                                        std::uint64_t seed) {
  ParsedResponse parsed;
  parsed.found_array = true;
  parsed.entries = simulated_entries(world, noise, grid.frame_indices, seed);
  return to_proposals(parsed, partition, grid.sampling_index, partition.clip.interval);
}

std::string SimulatedVlm::complete(const VlmRequest& request) {
  if (request.frame_indices.empty()) return "[]";
  const std::uint64_t seed =
      hash_combine(hash_combine(hash_combine(world_.seed, hash_string(request.video_id)),
                                hash_combine(request.seed, static_cast<std::uint64_t>(request.sampling_index))),
                   frames_key(request.frame_indices));
  json list = json::array();
  for (const auto& e : simulated_entries(world_, noise_, request.frame_indices, seed))
    list.push_back({{"description", e.description},
                    {"evidence_cells", e.evidence_cells},
                    {"confidence", e.confidence}});
  return "Anomalies found in the grid:\n```json\n" + list.dump() + "\n```";
}

std::string SimulatedTextConsolidator::complete(const VlmRequest& request) {
  const auto candidates = candidates_from_scc_prompt(request.prompt);
  json out = json::array();
  for (const auto& group : link_components(candidates, floor_))
    out.push_back({{"description", candidates[static_cast<std::size_t>(group.front())].description},
                   {"members", group}});
  return out.dump();
}

std::vector<BoundingBox> SimulatedGrounder::ground(const GroundingRequest& request) {
  Rng rng(hash_combine(hash_combine(world_.seed, hash_string(request.text)),
                       static_cast<std::uint64_t>(request.frame_index)));
  const FrameIndex t = request.frame_index;
  const Actor* target = match_actor(world_, request.text);
  double score = 1.0;
  if (!target) {
    std::vector<const Actor*> visible;
    for (const auto& a : world_.actors)
      if (a.present(t)) visible.push_back(&a);
    if (visible.empty()) return {};
    target = visible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(visible.size()) - 1))];
    score = rng.uniform(0.1, 0.9);
  } else if (!target->present(t)) {
    return {};
  }
  const auto truth = target->bounds(t);
  double offset = 0;
  auto box = jitter_box(truth, noise_.box_jitter, world_.height, world_.width, rng, offset);
  const double scale = std::max({1.0, truth.width(), truth.height()});
  box.score = score * (1.0 - std::min(1.0, offset / scale));
  if (box.score < request.box_threshold) return {};
  return {box};
}

std::vector<Bitmap> SimulatedPropagator::propagate(const PropagationRequest& request) {
  if (request.anchor_index < 0 ||
      request.anchor_index >= static_cast<int>(request.frame_indices.size()))
    throw ProtocolError("anchor index outside the request");
  const FrameIndex anchor = request.frame_indices[static_cast<std::size_t>(request.anchor_index)];
  const Actor* best = nullptr;
  double best_iou = 0.5;
  for (const auto& a : world_.actors) {
    if (!a.present(anchor)) continue;
    const double iou = box_iou(a.bounds(anchor), request.box);
    if (iou >= best_iou && (!best || iou > best_iou)) {
      best = &a;
      best_iou = iou;
    }
  }
  std::vector<Bitmap> out;
  out.reserve(request.frame_indices.size());
  const Bitmap blob = best ? Bitmap() : box_mask(request.box, world_.height, world_.width);
  for (const FrameIndex t : request.frame_indices)
    out.push_back(best ? best->silhouette(t, world_.height, world_.width) : blob);
  return out;
}

SimulatedBackends oracle_backends(const SyntheticWorld& world, const NoiseProfile& noise) {
  noise.validate();
  return {std::make_unique<SimulatedVlm>(world, noise),
          std::make_unique<SimulatedTextConsolidator>(),
          std::make_unique<SimulatedGrounder>(world, noise),
          std::make_unique<SimulatedPropagator>(world)};
}

Bitmap box_mask(const BoundingBox& box, int height, int width) { return draw_box(box, height, width); }

}  // namespace gridvad

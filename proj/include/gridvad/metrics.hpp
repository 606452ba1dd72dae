#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gridvad/masks.hpp"
#include "gridvad/types.hpp"

namespace gridvad {

// ---------------------------------------------------------------------------
// Threshold-sweep statistics over scored binary labels.

struct LabelCounts {
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};

/// Label counts per distinct score, iterated in descending score order.
template <typename Scalar = double>
class ScoreHistogram {
 public:
  using Bins = std::map<Scalar, LabelCounts, std::greater<Scalar>>;

  void add(Scalar score, bool positive, std::int64_t count = 1) {
    if (count == 0) return;
    auto& c = bins_[score];
    (positive ? c.positives : c.negatives) += count;
    (positive ? positives_ : negatives_) += count;
  }
  void merge(const ScoreHistogram& o) {
    for (const auto& [s, c] : o.bins_) {
      add(s, true, c.positives);
      add(s, false, c.negatives);
    }
  }
  std::int64_t positives() const { return positives_; }
  std::int64_t negatives() const { return negatives_; }
  const Bins& bins() const { return bins_; }

 private:
  Bins bins_;
  std::int64_t positives_ = 0, negatives_ = 0;
};

template <typename DerivedS, typename DerivedL>
ScoreHistogram<typename DerivedS::Scalar> make_histogram(const Eigen::DenseBase<DerivedS>& scores,
                                                         const Eigen::DenseBase<DerivedL>& labels) {
  if (scores.size() != labels.size()) throw DimensionMismatch("scores and labels differ in size");
  ScoreHistogram<typename DerivedS::Scalar> h;
  const auto s = scores.derived().reshaped();
  const auto l = labels.derived().reshaped();
  for (Eigen::Index i = 0; i < s.size(); ++i) h.add(s(i), l(i) != 0);
  return h;
}

/// Mann-Whitney statistic with half credit for ties. Absent for single-class input.
template <typename Scalar>
std::optional<double> auroc(const ScoreHistogram<Scalar>& h) {
  if (h.positives() == 0 || h.negatives() == 0) return std::nullopt;
  long double wins = 0;
  std::int64_t negatives_seen = 0;
  for (const auto& [s, c] : h.bins()) {
    negatives_seen += c.negatives;
    const auto below = static_cast<long double>(h.negatives() - negatives_seen);
    wins += static_cast<long double>(c.positives) * (below + 0.5L * c.negatives);
  }
  return static_cast<double>(wins / (static_cast<long double>(h.positives()) * h.negatives()));
}

/// Step-sum AP over descending distinct thresholds. Absent without positives.
template <typename Scalar>
std::optional<double> average_precision(const ScoreHistogram<Scalar>& h) {
  if (h.positives() == 0) return std::nullopt;
  long double ap = 0, prev_recall = 0;
  std::int64_t tp = 0, fp = 0;
  for (const auto& [s, c] : h.bins()) {
    tp += c.positives;
    fp += c.negatives;
    const long double recall = static_cast<long double>(tp) / h.positives();
    const long double precision = static_cast<long double>(tp) / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return static_cast<double>(ap);
}

/// Best F1 over all distinct thresholds. Absent without positives.
template <typename Scalar>
std::optional<double> max_f1(const ScoreHistogram<Scalar>& h) {
  if (h.positives() == 0) return std::nullopt;
  long double best = 0;
  std::int64_t tp = 0, fp = 0;
  for (const auto& [s, c] : h.bins()) {
    tp += c.positives;
    fp += c.negatives;
    const long double f1 = 2.0L * tp / (2.0L * tp + fp + (h.positives() - tp));
    best = std::max(best, f1);
  }
  return static_cast<double>(best);
}

template <typename DerivedS, typename DerivedL>
std::optional<double> auroc(const Eigen::DenseBase<DerivedS>& s, const Eigen::DenseBase<DerivedL>& l) {
  return auroc(make_histogram(s, l));
}
template <typename DerivedS, typename DerivedL>
std::optional<double> average_precision(const Eigen::DenseBase<DerivedS>& s,
                                        const Eigen::DenseBase<DerivedL>& l) {
  return average_precision(make_histogram(s, l));
}
template <typename DerivedS, typename DerivedL>
std::optional<double> max_f1(const Eigen::DenseBase<DerivedS>& s, const Eigen::DenseBase<DerivedL>& l) {
  return max_f1(make_histogram(s, l));
}

/// Trapezoid area under a polyline with x ascending, truncated at `limit`
/// and held flat at its last value beyond its last point, divided by `limit`.
double normalized_area(std::vector<std::pair<double, double>> points, double limit);

// ---------------------------------------------------------------------------
// Ground truth and predicted score fields.

struct GroundTruth {
  VideoMeta meta;
  std::map<FrameIndex, Bitmap> masks;  // frames not listed are entirely normal
  std::optional<std::map<FrameIndex, LabelMap>> labels;

  void validate() const;
  /// Binary mask at t, or nullptr when the frame is entirely normal.
  const Bitmap* mask(FrameIndex t) const;
  const LabelMap* label(FrameIndex t) const;
  bool anomalous(FrameIndex t) const;

  /// Masks from `<masks_dir>/<frame:06d>.png` (nonzero = anomalous) and
  /// optional 16-bit label maps from `<labels_dir>/<frame:06d>.png`.
  static GroundTruth load(const VideoMeta& meta, const std::filesystem::path& masks_dir,
                          const std::optional<std::filesystem::path>& labels_dir = std::nullopt);
  void save(const std::filesystem::path& masks_dir,
            const std::optional<std::filesystem::path>& labels_dir = std::nullopt) const;
};

/// Per-pixel maximum confidence over the instances covering each pixel.
template <typename Scalar = double>
struct ScoredPixelField {
  VideoMeta meta;
  std::map<FrameIndex, ScoreMap<Scalar>> frames;  // frames not listed score 0

  static ScoredPixelField from_instances(const VideoMeta& meta,
                                         std::span<const AnomalyInstance> instances) {
    ScoredPixelField f{meta, {}};
    for (const auto& inst : instances) {
      const auto conf = static_cast<Scalar>(inst.proposal.confidence);
      if (!(conf >= 0 && conf <= 1)) throw InvalidArgument("instance confidence outside [0, 1]");
      for (const auto& m : inst.masks) {
        if (m.frame_index < 0 || m.frame_index >= meta.frame_count)
          throw InvalidArgument("mask frame " + std::to_string(m.frame_index) + " outside video");
        if (m.bitmap.rows() != meta.height || m.bitmap.cols() != meta.width)
          throw DimensionMismatch("instance mask size differs from video size");
        if (m.area() == 0) continue;
        f.add(m.frame_index, m.bitmap, conf);
      }
    }
    return f;
  }

  void add(FrameIndex t, const Bitmap& mask, Scalar confidence) {
    auto [it, inserted] = frames.try_emplace(t);
    if (inserted) it->second = ScoreMap<Scalar>::Zero(meta.height, meta.width);
    it->second = (mask != 0).select(it->second.max(confidence), it->second);
  }

  const ScoreMap<Scalar>* at(FrameIndex t) const {
    const auto it = frames.find(t);
    return it == frames.end() ? nullptr : &it->second;
  }

  /// Frame score: the maximum pixel score of the frame.
  std::vector<Scalar> frame_scores() const {
    std::vector<Scalar> out(static_cast<std::size_t>(meta.frame_count), Scalar(0));
    for (const auto& [t, m] : frames) out[static_cast<std::size_t>(t)] = m.maxCoeff();
    return out;
  }
};

/// Score at t = max confidence of instances with a nonzero mask at t, else 0.
template <typename Scalar = double>
std::vector<Scalar> frame_scores(const VideoMeta& meta, std::span<const AnomalyInstance> instances) {
  std::vector<Scalar> out(static_cast<std::size_t>(meta.frame_count), Scalar(0));
  for (const auto& inst : instances)
    for (const auto& m : inst.masks)
      if (m.frame_index >= 0 && m.frame_index < meta.frame_count && m.area() > 0)
        out[m.frame_index] =
            std::max(out[m.frame_index], static_cast<Scalar>(inst.proposal.confidence));
  return out;
}

struct MetricParams {
  double alpha = 0.1;            // IoU needed for a region to count as detected
  double aupro_fpr_limit = 0.3;
  double fppf_limit = 1.0;
  double track_fraction = 0.1;   // share of a track's regions that must be detected

  void validate() const;
};

struct MetricReport {
  std::optional<double> frame_auroc, pixel_auroc, pixel_ap, pixel_aupro, pixel_f1, rbdc, tbdc;
  MetricParams params;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

/// Regions a track must have detected for the track to count as detected.
inline std::int64_t required_track_regions(std::int64_t regions, double fraction) {
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(regions) - 1e-9)));
}

namespace detail {

inline void check_pairing(std::span<const GroundTruth> gts, std::size_t fields) {
  if (gts.size() != fields) throw InvalidArgument("ground truth and prediction counts differ");
}

template <typename Scalar>
void check_video(const GroundTruth& gt, const ScoredPixelField<Scalar>& f) {
  if (gt.meta.frame_count != f.meta.frame_count || gt.meta.height != f.meta.height ||
      gt.meta.width != f.meta.width)
    throw DimensionMismatch("prediction for '" + f.meta.id + "' does not match its ground truth");
}

/// Every pixel of every frame, scored; frames without GT or predictions are bulk-added.
template <typename Scalar>
ScoreHistogram<Scalar> pixel_histogram(std::span<const GroundTruth> gts,
                                       std::span<const ScoredPixelField<Scalar>> fields) {
  ScoreHistogram<Scalar> h;
  for (std::size_t v = 0; v < gts.size(); ++v) {
    const auto& gt = gts[v];
    const auto& f = fields[v];
    check_video(gt, f);
    const std::int64_t px = static_cast<std::int64_t>(gt.meta.height) * gt.meta.width;
    std::int64_t blank_frames = 0;
    for (FrameIndex t = 0; t < gt.meta.frame_count; ++t) {
      const Bitmap* m = gt.mask(t);
      const ScoreMap<Scalar>* s = f.at(t);
      if (!m && !s) {
        ++blank_frames;
        continue;
      }
      if (!s) {
        const auto pos = static_cast<std::int64_t>((*m != 0).count());
        h.add(Scalar(0), true, pos);
        h.add(Scalar(0), false, px - pos);
        continue;
      }
      for (Eigen::Index i = 0; i < s->size(); ++i)
        h.add(s->data()[i], m && m->data()[i] != 0);
    }
    h.add(Scalar(0), false, blank_frames * px);
  }
  return h;
}

}  // namespace detail

/// Frame-level AUROC over per-video frame scores; labels are "frame has GT pixels".
template <typename Scalar>
std::optional<double> frame_auroc(std::span<const GroundTruth> gts,
                                  std::span<const std::vector<Scalar>> scores) {
  detail::check_pairing(gts, scores.size());
  ScoreHistogram<Scalar> h;
  for (std::size_t v = 0; v < gts.size(); ++v) {
    if (scores[v].size() != static_cast<std::size_t>(gts[v].meta.frame_count))
      throw DimensionMismatch("frame score count differs from frame count");
    for (FrameIndex t = 0; t < gts[v].meta.frame_count; ++t)
      h.add(scores[v][static_cast<std::size_t>(t)], gts[v].anomalous(t));
  }
  return auroc(h);
}

/// Per-region overlap against normal-pixel FPR, integrated to `fpr_limit`.
/// Only strictly positive scores act as thresholds, so all-zero predictions
/// score 0. Absent when there is no anomalous region or no normal pixel.
template <typename Scalar>
std::optional<double> aupro(std::span<const GroundTruth> gts,
                            std::span<const ScoredPixelField<Scalar>> fields, double fpr_limit) {
  detail::check_pairing(gts, fields.size());
  if (!(fpr_limit > 0 && fpr_limit <= 1)) throw InvalidArgument("fpr_limit must lie in (0, 1]");
  std::map<Scalar, long double, std::greater<Scalar>> false_pos, overlap;
  std::int64_t normal = 0, regions = 0;
  ComponentMap comps;
  for (std::size_t v = 0; v < gts.size(); ++v) {
    const auto& gt = gts[v];
    const auto& f = fields[v];
    detail::check_video(gt, f);
    const std::int64_t px = static_cast<std::int64_t>(gt.meta.height) * gt.meta.width;
    for (FrameIndex t = 0; t < gt.meta.frame_count; ++t) {
      const Bitmap* m = gt.mask(t);
      const ScoreMap<Scalar>* s = f.at(t);
      const int n = m ? label_components(*m, comps) : 0;
      normal += px - (m ? static_cast<std::int64_t>((*m != 0).count()) : 0);
      regions += n;
      if (!s) continue;
      std::vector<std::int64_t> sizes(static_cast<std::size_t>(n) + 1, 0);
      if (n > 0)
        for (Eigen::Index i = 0; i < comps.size(); ++i) ++sizes[comps.data()[i]];
      for (Eigen::Index i = 0; i < s->size(); ++i) {
        const Scalar score = s->data()[i];
        if (!(score > 0)) continue;
        const int r = n > 0 ? comps.data()[i] : 0;
        if (r == 0) false_pos[score] += 1;
        else overlap[score] += 1.0L / static_cast<long double>(sizes[r]);
      }
    }
  }
  if (regions == 0 || normal == 0) return std::nullopt;
  std::set<Scalar, std::greater<Scalar>> thresholds;
  for (const auto& [s, c] : false_pos) thresholds.insert(s);
  for (const auto& [s, c] : overlap) thresholds.insert(s);
  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  long double fp = 0, pro = 0;
  for (const Scalar th : thresholds) {
    if (auto it = false_pos.find(th); it != false_pos.end()) fp += it->second;
    if (auto it = overlap.find(th); it != overlap.end()) pro += it->second;
    curve.emplace_back(static_cast<double>(fp / normal), static_cast<double>(pro / regions));
  }
  return normalized_area(std::move(curve), fpr_limit);
}

struct DetectionCriteria {
  std::optional<double> rbdc, tbdc;
  std::vector<std::string> warnings;
};

/// Region- and track-based detection criteria, accumulated globally.
///
/// At every positive threshold the detections of a frame are the 8-connected
/// components of {score >= threshold}. A GT region is detected when some
/// detection has IoU >= alpha with it; a detection matching no GT region is a
/// false positive. Each threshold gives a point (false positives per frame,
/// detected share); the curve starts at (0, 0), is ordered by FPPF and is
/// integrated up to `fppf_limit`. Track regions are the components of each
/// label id; a track is detected when enough of its regions are.
template <typename Scalar>
DetectionCriteria rbdc_tbdc(std::span<const GroundTruth> gts,
                            std::span<const ScoredPixelField<Scalar>> fields,
                            const MetricParams& params) {
  detail::check_pairing(gts, fields.size());
  params.validate();
  DetectionCriteria out;

  // Per frame: for each local score level, the FP count and detected region ids.
  struct Level {
    std::int64_t fp = 0;
    std::vector<int> regions;        // global GT region ids
    std::vector<int> track_regions;  // global track-region ids
  };
  std::vector<std::vector<Level>> levels;  // per frame key
  std::map<Scalar, std::vector<std::pair<int, int>>, std::greater<Scalar>> events;
  std::vector<int> track_of_region;        // track-region id -> track id
  std::vector<std::int64_t> track_size;    // track id -> number of regions
  std::int64_t total_frames = 0, total_regions = 0;
  bool have_labels = true;

  ComponentMap gt_comps, det_comps, tr_comps;
  for (std::size_t v = 0; v < gts.size(); ++v) {
    const auto& gt = gts[v];
    const auto& f = fields[v];
    detail::check_video(gt, f);
    total_frames += gt.meta.frame_count;
    if (!gt.labels) have_labels = false;
    std::map<std::uint16_t, int> track_ids;
    for (FrameIndex t = 0; t < gt.meta.frame_count; ++t) {
      const Bitmap* m = gt.mask(t);
      const int n_gt = m ? label_components(*m, gt_comps) : 0;
      const int region_base = static_cast<int>(total_regions);
      total_regions += n_gt;

      // Track regions of this frame: components of each label id.
      std::vector<std::vector<std::int32_t>> tr_pixels;
      std::vector<int> tr_global;
      if (const LabelMap* lab = gt.label(t); lab && gt.labels) {
        std::set<std::uint16_t> ids;
        for (Eigen::Index i = 0; i < lab->size(); ++i)
          if (lab->data()[i]) ids.insert(lab->data()[i]);
        for (const auto id : ids) {
          const Bitmap one = (*lab == id).template cast<std::uint8_t>();
          const int k = label_components(one, tr_comps);
          auto [it, inserted] = track_ids.try_emplace(id, static_cast<int>(track_size.size()));
          if (inserted) track_size.push_back(0);
          std::vector<std::vector<std::int32_t>> px(static_cast<std::size_t>(k));
          for (Eigen::Index i = 0; i < tr_comps.size(); ++i)
            if (tr_comps.data()[i]) px[tr_comps.data()[i] - 1].push_back(static_cast<std::int32_t>(i));
          for (auto& p : px) {
            tr_global.push_back(static_cast<int>(track_of_region.size()));
            track_of_region.push_back(it->second);
            ++track_size[it->second];
            tr_pixels.push_back(std::move(p));
          }
        }
      }

      const ScoreMap<Scalar>* s = f.at(t);
      if (!s) continue;
      std::set<Scalar, std::greater<Scalar>> local;
      for (Eigen::Index i = 0; i < s->size(); ++i)
        if (s->data()[i] > 0) local.insert(s->data()[i]);
      if (local.empty()) continue;

      std::vector<std::int64_t> gt_area(static_cast<std::size_t>(n_gt) + 1, 0);
      if (n_gt > 0)
        for (Eigen::Index i = 0; i < gt_comps.size(); ++i) ++gt_area[gt_comps.data()[i]];

      const int key = static_cast<int>(levels.size());
      auto& frame_levels = levels.emplace_back();
      for (const Scalar th : local) {
        const Bitmap above = (*s >= th).template cast<std::uint8_t>();
        const int n_det = label_components(above, det_comps);
        std::vector<std::int64_t> det_area(static_cast<std::size_t>(n_det) + 1, 0);
        std::map<std::pair<int, int>, std::int64_t> inter;
        for (Eigen::Index i = 0; i < det_comps.size(); ++i) {
          const int d = det_comps.data()[i];
          if (!d) continue;
          ++det_area[d];
          if (n_gt > 0 && gt_comps.data()[i]) ++inter[{d, gt_comps.data()[i]}];
        }
        auto iou = [](std::int64_t i, std::int64_t a, std::int64_t b) {
          return static_cast<double>(i) / static_cast<double>(a + b - i);
        };
        Level level;
        std::vector<bool> det_matched(static_cast<std::size_t>(n_det) + 1, false);
        std::set<int> hit;
        for (const auto& [pair, count] : inter)
          if (iou(count, det_area[pair.first], gt_area[pair.second]) >= params.alpha) {
            det_matched[pair.first] = true;
            hit.insert(region_base + pair.second - 1);
          }
        for (int d = 1; d <= n_det; ++d)
          if (!det_matched[d]) ++level.fp;
        level.regions.assign(hit.begin(), hit.end());
        for (std::size_t r = 0; r < tr_pixels.size(); ++r) {
          std::map<int, std::int64_t> overlap;
          for (const auto p : tr_pixels[r])
            if (const int d = det_comps.data()[p]) ++overlap[d];
          for (const auto& [d, count] : overlap)
            if (iou(count, det_area[d], static_cast<std::int64_t>(tr_pixels[r].size())) >=
                params.alpha) {
              level.track_regions.push_back(tr_global[r]);
              break;
            }
        }
        events[th].emplace_back(key, static_cast<int>(frame_levels.size()));
        frame_levels.push_back(std::move(level));
      }
    }
  }

  if (total_regions == 0) {
    out.warnings.push_back("no ground-truth regions; RBDC and TBDC are undefined");
    return out;
  }
  const bool tbdc_defined = have_labels && !track_size.empty();
  if (!have_labels) out.warnings.push_back("track labels missing; TBDC is undefined");
  else if (track_size.empty()) out.warnings.push_back("no labelled tracks; TBDC is undefined");

  std::vector<int> current(levels.size(), -1);
  std::vector<bool> region_on(static_cast<std::size_t>(total_regions), false);
  std::vector<bool> track_region_on(track_of_region.size(), false);
  std::vector<std::int64_t> track_hits(track_size.size(), 0);
  std::int64_t fp = 0, regions_on = 0, tracks_on = 0;

  auto set_track_region = [&](int tr, bool on) {
    if (track_region_on[tr] == on) return;
    track_region_on[tr] = on;
    const int track = track_of_region[tr];
    const auto need = required_track_regions(track_size[track], params.track_fraction);
    const bool before = track_hits[track] >= need;
    track_hits[track] += on ? 1 : -1;
    const bool after = track_hits[track] >= need;
    tracks_on += static_cast<int>(after) - static_cast<int>(before);
  };

  std::vector<std::pair<double, double>> rb{{0.0, 0.0}}, tb{{0.0, 0.0}};
  for (const auto& [th, changes] : events) {
    for (const auto& [key, li] : changes) {
      const Level* old = current[key] >= 0 ? &levels[key][current[key]] : nullptr;
      const Level& now = levels[key][li];
      if (old) {
        fp -= old->fp;
        for (const int r : old->regions) region_on[r] = false, --regions_on;
        for (const int tr : old->track_regions) set_track_region(tr, false);
      }
      fp += now.fp;
      for (const int r : now.regions) region_on[r] = true, ++regions_on;
      for (const int tr : now.track_regions) set_track_region(tr, true);
      current[key] = li;
    }
    const double fppf = static_cast<double>(fp) / static_cast<double>(total_frames);
    rb.emplace_back(fppf, static_cast<double>(regions_on) / static_cast<double>(total_regions));
    if (tbdc_defined)
      tb.emplace_back(fppf, static_cast<double>(tracks_on) / static_cast<double>(track_size.size()));
  }
  out.rbdc = normalized_area(std::move(rb), params.fppf_limit);
  if (tbdc_defined) out.tbdc = normalized_area(std::move(tb), params.fppf_limit);
  return out;
}

/// All seven metrics over a set of videos, accumulated globally.
template <typename Scalar>
MetricReport evaluate(std::span<const GroundTruth> gts,
                      std::span<const ScoredPixelField<Scalar>> fields,
                      const MetricParams& params = {}) {
  detail::check_pairing(gts, fields.size());
  params.validate();
  MetricReport r;
  r.params = params;
  std::vector<std::vector<Scalar>> fs;
  for (const auto& f : fields) fs.push_back(f.frame_scores());
  r.frame_auroc = frame_auroc<Scalar>(gts, fs);
  const auto h = detail::pixel_histogram(gts, fields);
  r.pixel_auroc = auroc(h);
  r.pixel_ap = average_precision(h);
  r.pixel_f1 = max_f1(h);
  r.pixel_aupro = aupro(gts, fields, params.aupro_fpr_limit);
  auto dc = rbdc_tbdc(gts, fields, params);
  r.rbdc = dc.rbdc;
  r.tbdc = dc.tbdc;
  r.warnings = std::move(dc.warnings);
  auto note = [&](const std::optional<double>& v, const char* name) {
    if (!v) r.warnings.push_back(std::string(name) + " undefined for this ground truth");
  };
  note(r.frame_auroc, "frame_auroc");
  note(r.pixel_auroc, "pixel_auroc");
  note(r.pixel_ap, "pixel_ap");
  note(r.pixel_f1, "pixel_f1");
  note(r.pixel_aupro, "pixel_aupro");
  return r;
}

/// Convenience overload building the score fields from instances.
MetricReport evaluate(std::span<const GroundTruth> gts,
                      std::span<const std::vector<AnomalyInstance>> instances,
                      const MetricParams& params = {});

}  // namespace gridvad

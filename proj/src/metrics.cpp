#include "gridvad/metrics.hpp"

#include <cstdio>

#include "gridvad/image.hpp"

namespace gridvad {

using nlohmann::json;

double normalized_area(std::vector<std::pair<double, double>> points, double limit) {
  if (!(limit > 0)) throw InvalidArgument("integration limit must be positive");
  if (points.empty()) return 0.0;
  std::stable_sort(points.begin(), points.end());
  double area = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto [x0, y0] = points[i - 1];
    const auto [x1, y1] = points[i];
    if (x0 >= limit) return area / limit;
    if (x1 > limit) {
      const double y = y0 + (y1 - y0) * (limit - x0) / (x1 - x0);
      return (area + (limit - x0) * (y0 + y) / 2) / limit;
    }
    area += (x1 - x0) * (y0 + y1) / 2;
  }
  const auto [xl, yl] = points.back();
  if (xl < limit) area += (limit - xl) * yl;
  return area / limit;
}

void MetricParams::validate() const {
  if (!(alpha > 0 && alpha <= 1)) throw InvalidArgument("alpha must lie in (0, 1]");
  if (!(aupro_fpr_limit > 0 && aupro_fpr_limit <= 1))
    throw InvalidArgument("aupro_fpr_limit must lie in (0, 1]");
  if (!(fppf_limit > 0)) throw InvalidArgument("fppf_limit must be positive");
  if (!(track_fraction >= 0 && track_fraction <= 1))
    throw InvalidArgument("track_fraction must lie in [0, 1]");
}

void GroundTruth::validate() const {
  meta.validate();
  for (const auto& [t, m] : masks) {
    if (t < 0 || t >= meta.frame_count)
      throw InvalidArgument("ground-truth mask frame " + std::to_string(t) + " outside video");
    if (m.rows() != meta.height || m.cols() != meta.width)
      throw DimensionMismatch("ground-truth mask at frame " + std::to_string(t) +
                              " does not match the video size");
  }
  if (!labels) return;
  for (const auto& [t, l] : *labels) {
    if (l.rows() != meta.height || l.cols() != meta.width)
      throw DimensionMismatch("label map at frame " + std::to_string(t) +
                              " does not match the video size");
    const Bitmap* m = mask(t);
    const bool agree = m ? ((l != 0) == (*m != 0)).all() : (l == 0).all();
    if (!agree)
      throw InvalidArgument("label map at frame " + std::to_string(t) +
                            " disagrees with the binary mask");
  }
  for (const auto& [t, m] : masks)
    if ((m != 0).any() && !label(t))
      throw InvalidArgument("anomalous frame " + std::to_string(t) + " has no label map");
}

const Bitmap* GroundTruth::mask(FrameIndex t) const {
  const auto it = masks.find(t);
  return it == masks.end() ? nullptr : &it->second;
}

const LabelMap* GroundTruth::label(FrameIndex t) const {
  if (!labels) return nullptr;
  const auto it = labels->find(t);
  return it == labels->end() ? nullptr : &it->second;
}

bool GroundTruth::anomalous(FrameIndex t) const {
  const Bitmap* m = mask(t);
  return m && (*m != 0).any();
}

namespace {

std::string frame_name(FrameIndex t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.png", t);
  return buf;
}

}  // namespace

GroundTruth GroundTruth::load(const VideoMeta& meta, const std::filesystem::path& masks_dir,
                              const std::optional<std::filesystem::path>& labels_dir) {
  meta.validate();
  GroundTruth gt{meta, {}, std::nullopt};
  if (!std::filesystem::is_directory(masks_dir))
    throw IoError("ground-truth mask directory not found: " + masks_dir.string());
  for (FrameIndex t = 0; t < meta.frame_count; ++t) {
    const auto p = masks_dir / frame_name(t);
    if (!std::filesystem::exists(p)) continue;
    Bitmap m = (read_png_gray(p) != 0).cast<std::uint8_t>();
    if (m.rows() != meta.height || m.cols() != meta.width)
      throw DimensionMismatch(p.string() + " does not match the video size");
    if ((m != 0).any()) gt.masks.emplace(t, std::move(m));
  }
  if (labels_dir) {
    if (!std::filesystem::is_directory(*labels_dir))
      throw IoError("label-map directory not found: " + labels_dir->string());
    gt.labels.emplace();
    for (FrameIndex t = 0; t < meta.frame_count; ++t) {
      const auto p = *labels_dir / frame_name(t);
      if (!std::filesystem::exists(p)) continue;
      LabelMap l = read_png_labels(p);
      if ((l != 0).any()) gt.labels->emplace(t, std::move(l));
    }
  }
  gt.validate();
  return gt;
}

void GroundTruth::save(const std::filesystem::path& masks_dir,
                       const std::optional<std::filesystem::path>& labels_dir) const {
  std::filesystem::create_directories(masks_dir);
  for (const auto& [t, m] : masks) write_png(masks_dir / frame_name(t), Plane((m != 0).cast<std::uint8_t>() * 255));
  if (labels_dir && labels) {
    std::filesystem::create_directories(*labels_dir);
    for (const auto& [t, l] : *labels) write_png16(*labels_dir / frame_name(t), l);
  }
}

namespace {

json optional_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw SchemaError(key, "expected a number or null");
  return j[key].get<double>();
}

}  // namespace

json MetricReport::to_json() const {
  return {{"frame_auroc", optional_value(frame_auroc)},
          {"pixel_auroc", optional_value(pixel_auroc)},
          {"pixel_ap", optional_value(pixel_ap)},
          {"pixel_aupro", optional_value(pixel_aupro)},
          {"pixel_f1", optional_value(pixel_f1)},
          {"rbdc", optional_value(rbdc)},
          {"tbdc", optional_value(tbdc)},
          {"params",
           {{"alpha", params.alpha},
            {"aupro_fpr_limit", params.aupro_fpr_limit},
            {"fppf_limit", params.fppf_limit},
            {"track_fraction", params.track_fraction}}},
          {"warnings", warnings}};
}

MetricReport MetricReport::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("report", "expected an object");
  MetricReport r;
  r.frame_auroc = read_optional(j, "frame_auroc");
  r.pixel_auroc = read_optional(j, "pixel_auroc");
  r.pixel_ap = read_optional(j, "pixel_ap");
  r.pixel_aupro = read_optional(j, "pixel_aupro");
  r.pixel_f1 = read_optional(j, "pixel_f1");
  r.rbdc = read_optional(j, "rbdc");
  r.tbdc = read_optional(j, "tbdc");
  if (j.contains("params")) {
    const auto& p = j["params"];
    r.params.alpha = p.value("alpha", r.params.alpha);
    r.params.aupro_fpr_limit = p.value("aupro_fpr_limit", r.params.aupro_fpr_limit);
    r.params.fppf_limit = p.value("fppf_limit", r.params.fppf_limit);
    r.params.track_fraction = p.value("track_fraction", r.params.track_fraction);
  }
  if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
  return r;
}

MetricReport evaluate(std::span<const GroundTruth> gts,
                      std::span<const std::vector<AnomalyInstance>> instances,
                      const MetricParams& params) {
  detail::check_pairing(gts, instances.size());
  std::vector<ScoredPixelField<double>> fields;
  fields.reserve(gts.size());
  for (std::size_t v = 0; v < gts.size(); ++v)
    fields.push_back(ScoredPixelField<double>::from_instances(gts[v].meta, instances[v]));
  return evaluate<double>(gts, fields, params);
}

}  // namespace gridvad

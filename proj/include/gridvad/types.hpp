#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridvad/error.hpp"

namespace gridvad {

/// Frame indices are 0-based everywhere.
using FrameIndex = int;

/// Binary H×W raster, row-major, values 0 or 1.
using Bitmap = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel track ids, 0 = background.
using LabelMap = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Integer component labels produced by connected-component labelling.
using ComponentMap = Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ScoreMap = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct VideoMeta {
  std::string id;
  int frame_count = 0;
  int height = 0;
  int width = 0;
  double fps = 0.0;

  void validate() const {
    if (frame_count < 1 || height < 1 || width < 1)
      throw InvalidArgument("video '" + id + "' must have positive frame count and dimensions");
  }
  bool operator==(const VideoMeta&) const = default;
};

/// Inclusive frame range [start, end].
struct TemporalInterval {
  FrameIndex start = 0;
  FrameIndex end = 0;

  constexpr int length() const { return end - start + 1; }
  constexpr bool contains(FrameIndex t) const { return start <= t && t <= end; }
  constexpr bool valid() const { return 0 <= start && start <= end; }
  constexpr bool within(const TemporalInterval& outer) const {
    return outer.start <= start && end <= outer.end;
  }
  /// True when the ranges share a frame or touch (end + 1 == start).
  constexpr bool overlaps_or_abuts(const TemporalInterval& o) const {
    return start <= o.end + 1 && o.start <= end + 1;
  }
  bool operator==(const TemporalInterval&) const = default;
};

struct Clip {
  std::string video_id;
  TemporalInterval interval;

  int length() const { return interval.length(); }
  FrameIndex start() const { return interval.start; }
  FrameIndex end() const { return interval.end; }
  bool operator==(const Clip&) const = default;
};

struct Proposal {
  std::string description;
  TemporalInterval interval;
  double confidence = 0.5;
  int source_sampling = 1;        // 1-based sampling index m
  std::vector<int> evidence_cells;  // 1-based cell indices, sorted, unique

  bool operator==(const Proposal&) const = default;
};

struct ConsolidatedProposal {
  std::string description;
  TemporalInterval interval;
  int support = 0;
  double confidence = 0.0;
  std::vector<Proposal> members;

  /// Builds an entry whose support, interval and confidence are derived from `members`.
  static ConsolidatedProposal from_members(std::string description, std::vector<Proposal> members);

  /// Recomputes the derived fields from `members` and compares.
  bool consistent() const;

  bool operator==(const ConsolidatedProposal&) const = default;
};

inline ConsolidatedProposal ConsolidatedProposal::from_members(std::string description,
                                                               std::vector<Proposal> members) {
  if (members.empty()) throw InvalidArgument("consolidated proposal needs at least one member");
  ConsolidatedProposal out;
  out.description = std::move(description);
  out.interval = members.front().interval;
  out.confidence = members.front().confidence;
  std::set<int> samplings;
  for (const auto& m : members) {
    out.interval.start = std::min(out.interval.start, m.interval.start);
    out.interval.end = std::max(out.interval.end, m.interval.end);
    out.confidence = std::max(out.confidence, m.confidence);
    samplings.insert(m.source_sampling);
  }
  out.support = static_cast<int>(samplings.size());
  out.members = std::move(members);
  return out;
}

inline bool ConsolidatedProposal::consistent() const {
  if (members.empty()) return false;
  const auto expected = from_members(description, members);
  return expected.interval == interval && expected.support == support &&
         expected.confidence == confidence;
}

struct BoundingBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double score = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid_in(int image_width, int image_height) const {
    return 0 <= x0 && x0 < x1 && x1 <= image_width && 0 <= y0 && y0 < y1 &&
           y1 <= image_height && 0 <= score && score <= 1;
  }
  bool operator==(const BoundingBox&) const = default;
};

inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

struct FrameMask {
  FrameIndex frame_index = 0;
  Bitmap bitmap;

  std::int64_t area() const { return bitmap.size() == 0 ? 0 : (bitmap != 0).count(); }
  bool operator==(const FrameMask& o) const {
    return frame_index == o.frame_index && bitmap.rows() == o.bitmap.rows() &&
           bitmap.cols() == o.bitmap.cols() && (bitmap == o.bitmap).all();
  }
};

struct AnomalyInstance {
  ConsolidatedProposal proposal;
  FrameIndex anchor_frame = 0;
  BoundingBox box;
  std::vector<FrameMask> masks;  // one per frame of proposal.interval, ascending

  bool operator==(const AnomalyInstance&) const = default;
};

}  // namespace gridvad

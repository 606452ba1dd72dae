#include "gridvad/masks.hpp"

#include <numeric>

namespace gridvad {

RunLengths encode_rle(const Bitmap& bitmap) {
  RunLengths runs;
  const auto* px = bitmap.data();
  const auto n = bitmap.size();
  std::uint8_t current = 0;
  std::uint32_t count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint8_t v = px[i] ? 1 : 0;
    if (v != current) {
      runs.push_back(count);
      current = v;
      count = 0;
    }
    ++count;
  }
  runs.push_back(count);
  return runs;
}

Bitmap decode_rle(std::span<const std::uint32_t> runs, int height, int width) {
  const std::uint64_t total = std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
  const auto expected = static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
  if (total != expected)
    throw ProtocolError("run lengths sum to " + std::to_string(total) + ", expected " +
                        std::to_string(expected));
  Bitmap out(height, width);
  auto* px = out.data();
  std::uint8_t value = 0;
  for (const auto run : runs) {
    std::fill(px, px + run, value);
    px += run;
    value ^= 1;
  }
  return out;
}

std::map<FrameIndex, FrameMask> union_masks(std::span<const AnomalyInstance> instances,
                                            const VideoMeta& video) {
  std::map<FrameIndex, FrameMask> out;
  for (const auto& inst : instances) {
    for (const auto& m : inst.masks) {
      if (m.bitmap.rows() != video.height || m.bitmap.cols() != video.width)
        throw DimensionMismatch("mask at frame " + std::to_string(m.frame_index) + " is " +
                                std::to_string(m.bitmap.rows()) + "x" +
                                std::to_string(m.bitmap.cols()) + ", video is " +
                                std::to_string(video.height) + "x" + std::to_string(video.width));
      auto [it, inserted] = out.try_emplace(m.frame_index);
      if (inserted) {
        it->second.frame_index = m.frame_index;
        it->second.bitmap = (m.bitmap != 0).cast<std::uint8_t>();
      } else {
        it->second.bitmap = ((it->second.bitmap != 0) || (m.bitmap != 0)).cast<std::uint8_t>();
      }
    }
  }
  return out;
}

bool apply_area_floor(Bitmap& mask, std::int64_t min_area) {
  const auto area = static_cast<std::int64_t>((mask != 0).count());
  if (area > 0 && area < min_area) {
    mask.setZero();
    return true;
  }
  return false;
}

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

// Two-pass labelling with a union-find over provisional labels.
int label_components(const Bitmap& mask, ComponentMap& labels) {
  const auto h = mask.rows(), w = mask.cols();
  labels = ComponentMap::Zero(h, w);
  std::vector<int> parent{0};
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      int best = 0;
      auto consider = [&](Eigen::Index yy, Eigen::Index xx) {
        if (yy < 0 || xx < 0 || xx >= w) return;
        const int l = labels(yy, xx);
        if (!l) return;
        if (!best) {
          best = l;
        } else if (l != best) {
          const int a = find_root(parent, l), b = find_root(parent, best);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
      };
      consider(y, x - 1);
      consider(y - 1, x - 1);
      consider(y - 1, x);
      consider(y - 1, x + 1);
      if (!best) {
        best = static_cast<int>(parent.size());
        parent.push_back(best);
      }
      labels(y, x) = best;
    }
  }
  std::vector<int> compact(parent.size(), 0);
  int n = 0;
  for (std::size_t i = 1; i < parent.size(); ++i) {
    const int r = find_root(parent, static_cast<int>(i));
    if (!compact[r]) compact[r] = ++n;
    compact[i] = compact[r];
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels.data()[i]) labels.data()[i] = compact[labels.data()[i]];
  return n;
}

BoundingBox mask_bounds(const Bitmap& mask) {
  BoundingBox box;
  bool any = false;
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      if (!any) {
        box = {double(x), double(y), double(x + 1), double(y + 1), 1.0};
        any = true;
      }
      box.x0 = std::min(box.x0, double(x));
      box.y0 = std::min(box.y0, double(y));
      box.x1 = std::max(box.x1, double(x + 1));
      box.y1 = std::max(box.y1, double(y + 1));
    }
  return box;
}

}  // namespace gridvad

#pragma once

// Random small evaluation instances: at most 10^3 pixels, 10 GT regions and
// 3 tracks in total, with quantised scores so that ties are common.

#include <algorithm>
#include <vector>

#include "gridvad/masks.hpp"
#include "gridvad/metrics.hpp"
#include "gridvad/rng.hpp"

namespace oracle {

struct MetricInstance {
  std::vector<gridvad::GroundTruth> gts;
  std::vector<gridvad::ScoredPixelField<double>> fields;
  std::int64_t regions = 0;
  int tracks = 0;
};

inline gridvad::Bitmap rect(int h, int w, int y0, int x0, int rh, int rw) {
  gridvad::Bitmap b = gridvad::Bitmap::Zero(h, w);
  for (int y = std::max(0, y0); y < std::min(h, y0 + rh); ++y)
    for (int x = std::max(0, x0); x < std::min(w, x0 + rw); ++x) b(y, x) = 1;
  return b;
}

inline MetricInstance random_metric_instance(gridvad::Rng& rng) {
  using namespace gridvad;
  for (;;) {
    MetricInstance inst;
    const int videos = static_cast<int>(rng.uniform_int(1, 2));
    int tracks_left = static_cast<int>(rng.uniform_int(0, 3));
    const bool labels = rng.uniform() < 0.85;
    for (int v = 0; v < videos; ++v) {
      const int h = static_cast<int>(rng.uniform_int(3, 10));
      const int w = static_cast<int>(rng.uniform_int(3, 10));
      const int max_t = std::max(1, 1000 / (videos * h * w));
      const int n = static_cast<int>(rng.uniform_int(1, std::min(4, max_t)));
      VideoMeta meta{"v" + std::to_string(v), n, h, w, 25.0};
      GroundTruth gt{meta, {}, std::nullopt};
      std::map<FrameIndex, LabelMap> label_maps;
      const int tracks = v + 1 == videos ? tracks_left : static_cast<int>(rng.uniform_int(0, tracks_left));
      tracks_left -= tracks;
      inst.tracks += tracks;
      for (int id = 1; id <= tracks; ++id) {
        const int rh = static_cast<int>(rng.uniform_int(1, std::min(4, h)));
        const int rw = static_cast<int>(rng.uniform_int(1, std::min(4, w)));
        bool any = false;
        for (int t = 0; t < n; ++t) {
          if (rng.uniform() < 0.35 && (any || t + 1 < n)) continue;
          any = true;
          const auto b = rect(h, w, static_cast<int>(rng.uniform_int(0, h - rh)),
                              static_cast<int>(rng.uniform_int(0, w - rw)), rh, rw);
          auto [it, inserted] = label_maps.try_emplace(t);
          if (inserted) it->second = LabelMap::Zero(h, w);
          it->second = (b != 0).select(LabelMap::Constant(h, w, static_cast<std::uint16_t>(id)), it->second);
        }
      }
      // Unlabelled extra regions so that regions exist without tracks.
      if (rng.uniform() < 0.3) {
        const int t = static_cast<int>(rng.uniform_int(0, n - 1));
        const auto b = rect(h, w, static_cast<int>(rng.uniform_int(0, h - 1)),
                            static_cast<int>(rng.uniform_int(0, w - 1)), 2, 2);
        auto [it, inserted] = label_maps.try_emplace(t);
        if (inserted) it->second = LabelMap::Zero(h, w);
        it->second = (b != 0 && it->second == 0).select(LabelMap::Constant(h, w, 9), it->second);
        if (labels) ++inst.tracks;
      }
      for (auto& [t, lab] : label_maps) {
        Bitmap m = (lab != 0).cast<std::uint8_t>();
        if ((m != 0).count() == 0) continue;
        ComponentMap comps;
        inst.regions += label_components(m, comps);
        gt.masks[t] = std::move(m);
      }
      if (labels) {
        gt.labels.emplace();
        for (auto& [t, lab] : label_maps)
          if ((lab != 0).count() > 0) (*gt.labels)[t] = lab;
      }

      ScoredPixelField<double> f{meta, {}};
      for (int t = 0; t < n; ++t) {
        const int blobs = static_cast<int>(rng.uniform_int(0, 3));
        for (int b = 0; b < blobs; ++b) {
          const int rh = static_cast<int>(rng.uniform_int(1, h)), rw = static_cast<int>(rng.uniform_int(1, w));
          f.add(t, rect(h, w, static_cast<int>(rng.uniform_int(0, h - 1)), static_cast<int>(rng.uniform_int(0, w - 1)), rh, rw),
                static_cast<double>(rng.uniform_int(1, 10)) / 10.0);
        }
        if (const auto it = gt.masks.find(t); it != gt.masks.end() && rng.uniform() < 0.6) {
          Bitmap m = it->second;
          m(static_cast<Eigen::Index>(rng.uniform_int(0, h - 1)), static_cast<Eigen::Index>(rng.uniform_int(0, w - 1))) ^= 1;
          f.add(t, m, static_cast<double>(rng.uniform_int(1, 10)) / 10.0);
        }
      }
      inst.gts.push_back(std::move(gt));
      inst.fields.push_back(std::move(f));
    }
    if (inst.regions <= 10) return inst;
  }
}

}  // namespace oracle

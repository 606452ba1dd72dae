#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridvad/image.hpp"
#include "gridvad/rng.hpp"
#include "gridvad/types.hpp"

namespace gridvad {

/// Half-open frame range [begin, end).
struct FrameRange {
  FrameIndex begin = 0;
  FrameIndex end = 0;
  int size() const { return end - begin; }
  bool contains(FrameIndex t) const { return begin <= t && t < end; }
  bool operator==(const FrameRange&) const = default;
};

/// The clip split into `cell_count` consecutive equal-width temporal bins.
struct BinPartition {
  Clip clip;
  int cell_count = 0;
  std::vector<FrameRange> bins;  // bins[k-1] is bin k

  int grid_side() const;  // g with g*g == cell_count; throws otherwise
  const FrameRange& bin(int cell) const { return bins.at(static_cast<std::size_t>(cell - 1)); }
};

/// Bin k (1-based) is [s + floor((k-1)L/K), s + floor(kL/K)).
/// Throws ClipTooShort when L < K.
BinPartition partition(const Clip& clip, int cell_count);

struct GridOptions {
  bool annotate_cells = true;
};

/// One stratified sample of a clip tiled into a g×g montage.
struct GridSample {
  int sampling_index = 1;               // m, 1-based
  std::uint64_t seed = 0;               // generator seed the indices were drawn with
  std::vector<FrameIndex> frame_indices;  // frame_indices[k-1] drawn from bin k
  int grid_side = 0;
  RgbImage montage;  // (g·H)×(g·W), cell k at row (k-1)/g, column (k-1)%g
};

/// One index per bin, uniform within the bin.
std::vector<FrameIndex> draw_frame_indices(const BinPartition& partition, Rng& rng);

GridSample sample_grid(const BinPartition& partition, int sampling_index, std::uint64_t seed,
                       const FrameProvider& frames, const GridOptions& options = {});

/// Row-major g×g tiling; all frames must share one size.
RgbImage tile_frames(std::span<const RgbImage> frames, int grid_side);

/// Draws `number` in a boxed label with its top-left corner at (row, col).
void stamp_label(RgbImage& image, int row, int col, int number, int scale);

/// Tightest interval covering the bins of the given 1-based cells.
/// Throws ParseError on an empty set or an out-of-range cell.
TemporalInterval decode_cells(const BinPartition& partition, std::span<const int> cells);

}  // namespace gridvad

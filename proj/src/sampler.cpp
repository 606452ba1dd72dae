#include "gridvad/sampler.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace gridvad {

int BinPartition::grid_side() const {
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cell_count))));
  if (g * g != cell_count)
    throw InvalidArgument("cell count " + std::to_string(cell_count) + " is not a square");
  return g;
}

BinPartition partition(const Clip& clip, int cell_count) {
  if (cell_count < 1) throw InvalidArgument("cell count must be positive");
  if (!clip.interval.valid()) throw InvalidArgument("invalid clip interval");
  const std::int64_t length = clip.length();
  if (length < cell_count) throw ClipTooShort();
  BinPartition out;
  out.clip = clip;
  out.cell_count = cell_count;
  out.bins.reserve(static_cast<std::size_t>(cell_count));
  const FrameIndex s = clip.start();
  for (std::int64_t k = 1; k <= cell_count; ++k) {
    const auto lo = static_cast<FrameIndex>((k - 1) * length / cell_count);
    const auto hi = static_cast<FrameIndex>(k * length / cell_count);
    out.bins.push_back({s + lo, s + hi});
  }
  return out;
}

std::vector<FrameIndex> draw_frame_indices(const BinPartition& partition, Rng& rng) {
  std::vector<FrameIndex> out;
  out.reserve(partition.bins.size());
  for (const auto& bin : partition.bins)
    out.push_back(static_cast<FrameIndex>(rng.uniform_int(bin.begin, bin.end - 1)));
  return out;
}

RgbImage tile_frames(std::span<const RgbImage> frames, int grid_side) {
  if (frames.empty() || static_cast<int>(frames.size()) != grid_side * grid_side)
    throw InvalidArgument("tile needs exactly g*g frames");
  const int h = frames.front().height(), w = frames.front().width();
  RgbImage montage(grid_side * h, grid_side * w);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].height() != h || frames[k].width() != w)
      throw DimensionMismatch("frames in one grid must share dimensions");
    const int row = static_cast<int>(k) / grid_side, col = static_cast<int>(k) % grid_side;
    montage.paste(frames[k], row * h, col * w);
  }
  return montage;
}

namespace {

// 3x5 digit glyphs, one row per entry, MSB = left column.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits = {{
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
}};

}  // namespace

void stamp_label(RgbImage& image, int row, int col, int number, int scale) {
  const std::string text = std::to_string(number);
  const int glyph_w = 3 * scale, glyph_h = 5 * scale, pad = scale;
  const int box_w = static_cast<int>(text.size()) * (glyph_w + pad) + pad;
  const int box_h = glyph_h + 2 * pad;
  for (int y = row; y < std::min(row + box_h, image.height()); ++y)
    for (int x = col; x < std::min(col + box_w, image.width()); ++x) image.set(y, x, {0, 0, 0});
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& glyph = kDigits[static_cast<std::size_t>(text[i] - '0')];
    const int gx = col + pad + static_cast<int>(i) * (glyph_w + pad);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 3; ++c) {
        if (!((glyph[r] >> (2 - c)) & 1)) continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) {
            const int y = row + pad + r * scale + dy, x = gx + c * scale + dx;
            if (y < image.height() && x < image.width()) image.set(y, x, {255, 255, 255});
          }
      }
  }
}

GridSample sample_grid(const BinPartition& partition, int sampling_index, std::uint64_t seed,
                       const FrameProvider& frames, const GridOptions& options) {
  GridSample out;
  out.sampling_index = sampling_index;
  out.seed = seed;
  out.grid_side = partition.grid_side();
  Rng rng(seed);
  out.frame_indices = draw_frame_indices(partition, rng);

  std::vector<RgbImage> images;
  images.reserve(out.frame_indices.size());
  for (const auto t : out.frame_indices) {
    try {
      images.push_back(frames.frame(t));
    } catch (const std::exception& e) {
      throw IoError("failed to fetch frame " + std::to_string(t) + ": " + e.what());
    }
  }
  out.montage = tile_frames(images, out.grid_side);
  if (options.annotate_cells) {
    const int h = images.front().height(), w = images.front().width();
    const int scale = std::max(1, std::min(h, w) / 48);
    for (int k = 0; k < partition.cell_count; ++k)
      stamp_label(out.montage, (k / out.grid_side) * h, (k % out.grid_side) * w, k + 1, scale);
  }
  return out;
}

TemporalInterval decode_cells(const BinPartition& partition, std::span<const int> cells) {
  if (cells.empty()) throw ParseError("evidence cell list is empty");
  TemporalInterval out{std::numeric_limits<FrameIndex>::max(), std::numeric_limits<FrameIndex>::min()};
  for (const int c : cells) {
    if (c < 1 || c > partition.cell_count)
      throw ParseError("evidence cell " + std::to_string(c) + " outside [1, " +
                       std::to_string(partition.cell_count) + "]");
    const auto& bin = partition.bin(c);
    out.start = std::min(out.start, bin.begin);
    out.end = std::max(out.end, bin.end - 1);
  }
  return out;
}

}  // namespace gridvad

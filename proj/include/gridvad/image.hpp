#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridvad/types.hpp"

namespace gridvad {

using Plane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Planar 8-bit RGB image.
struct RgbImage {
  std::array<Plane, 3> channels;

  RgbImage() = default;
  RgbImage(int height, int width, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  int height() const { return static_cast<int>(channels[0].rows()); }
  int width() const { return static_cast<int>(channels[0].cols()); }

  void set(int y, int x, std::array<std::uint8_t, 3> rgb) {
    for (int c = 0; c < 3; ++c) channels[c](y, x) = rgb[c];
  }
  /// Copies `src` with its top-left corner at (row, col).
  void paste(const RgbImage& src, int row, int col);

  bool operator==(const RgbImage& o) const;
};

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png(const Plane& gray);

void write_png(const std::filesystem::path& path, const Plane& gray);
void write_png(const std::filesystem::path& path, const RgbImage& image);
Plane read_png_gray(const std::filesystem::path& path);
RgbImage read_png_rgb(const std::filesystem::path& path);
/// 16-bit grayscale, used for label maps.
void write_png16(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_png_labels(const std::filesystem::path& path);

/// Source of decoded frames. Implementations must allow concurrent reads.
class FrameProvider {
 public:
  virtual ~FrameProvider() = default;
  virtual VideoMeta meta() const = 0;
  virtual RgbImage frame(FrameIndex t) const = 0;
};

/// Serves frames from a directory of PNG files, ordered by file name.
class DirectoryFrameProvider final : public FrameProvider {
 public:
  explicit DirectoryFrameProvider(const std::filesystem::path& dir, std::string video_id = {});

  VideoMeta meta() const override { return meta_; }
  RgbImage frame(FrameIndex t) const override;

 private:
  std::vector<std::filesystem::path> files_;
  VideoMeta meta_;
};

/// Serves frame min(t, last) from a wrapped provider; used to pad short clips.
class ClampedFrameProvider final : public FrameProvider {
 public:
  ClampedFrameProvider(const FrameProvider& base, FrameIndex last) : base_(base), last_(last) {}
  VideoMeta meta() const override { return base_.meta(); }
  RgbImage frame(FrameIndex t) const override { return base_.frame(t > last_ ? last_ : t); }

 private:
  const FrameProvider& base_;
  FrameIndex last_;
};

}  // namespace gridvad

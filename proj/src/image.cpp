#include "gridvad/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

namespace gridvad {

RgbImage::RgbImage(int height, int width, std::array<std::uint8_t, 3> fill) {
  for (int c = 0; c < 3; ++c) channels[c] = Plane::Constant(height, width, fill[c]);
}

void RgbImage::paste(const RgbImage& src, int row, int col) {
  for (int c = 0; c < 3; ++c)
    channels[c].block(row, col, src.height(), src.width()) = src.channels[c];
}

bool RgbImage::operator==(const RgbImage& o) const {
  if (height() != o.height() || width() != o.width()) return false;
  for (int c = 0; c < 3; ++c)
    if (!(channels[c] == o.channels[c]).all()) return false;
  return true;
}

namespace {

std::vector<std::uint8_t> interleave(const RgbImage& image) {
  const int h = image.height(), w = image.width();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] = image.channels[c](y, x);
  return buf;
}

std::vector<std::uint8_t> write_memory(png_image& img, const void* buffer) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, buffer, 0, nullptr))
    throw IoError(std::string("png encode failed: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, buffer, 0, nullptr))
    throw IoError(std::string("png encode failed: ") + img.message);
  out.resize(size);
  return out;
}

void write_file(const std::filesystem::path& path, png_image& img, const void* buffer) {
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer, 0, nullptr))
    throw IoError("cannot write " + path.string() + ": " + img.message);
}

png_image make_image(int height, int width, png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path, png_uint_32 format,
                                    int& height, int& width) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw IoError("cannot read " + path.string() + ": " + img.message);
  img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode " + path.string() + ": " + img.message);
  }
  height = static_cast<int>(img.height);
  width = static_cast<int>(img.width);
  return buf;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  auto img = make_image(image.height(), image.width(), PNG_FORMAT_RGB);
  const auto buf = interleave(image);
  return write_memory(img, buf.data());
}

std::vector<std::uint8_t> encode_png(const Plane& gray) {
  auto img = make_image(static_cast<int>(gray.rows()), static_cast<int>(gray.cols()),
                        PNG_FORMAT_GRAY);
  return write_memory(img, gray.data());
}

void write_png(const std::filesystem::path& path, const Plane& gray) {
  auto img = make_image(static_cast<int>(gray.rows()), static_cast<int>(gray.cols()),
                        PNG_FORMAT_GRAY);
  write_file(path, img, gray.data());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  auto img = make_image(image.height(), image.width(), PNG_FORMAT_RGB);
  const auto buf = interleave(image);
  write_file(path, img, buf.data());
}

Plane read_png_gray(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = read_file(path, PNG_FORMAT_GRAY, h, w);
  Plane out(h, w);
  std::memcpy(out.data(), buf.data(), buf.size());
  return out;
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = read_file(path, PNG_FORMAT_RGB, h, w);
  RgbImage out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out.channels[c](y, x) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c];
  return out;
}

// The simplified API treats 16-bit data as linear light, so label maps go
// through the classic interface to keep ids exact.
void write_png16(const std::filesystem::path& path, const LabelMap& labels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed for " + path.string());
  }
  const auto h = static_cast<png_uint_32>(labels.rows());
  const auto w = static_cast<png_uint_32>(labels.cols());
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 2);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      const std::uint16_t v = labels(y, x);
      row[2 * x] = static_cast<png_byte>(v >> 8);
      row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

LabelMap read_png_labels(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color & PNG_COLOR_MASK_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto h = png_get_image_height(png, info);
  const auto w = png_get_image_width(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> row(rowbytes);
  LabelMap out(h, w);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      out(y, x) = out_depth == 16
                      ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1])
                      : row[x];
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

DirectoryFrameProvider::DirectoryFrameProvider(const std::filesystem::path& dir,
                                               std::string video_id) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw IoError("no PNG frames in " + dir.string());
  const auto first = read_png_rgb(files_.front());
  meta_.id = video_id.empty() ? dir.filename().string() : std::move(video_id);
  meta_.frame_count = static_cast<int>(files_.size());
  meta_.height = first.height();
  meta_.width = first.width();
}

RgbImage DirectoryFrameProvider::frame(FrameIndex t) const {
  if (t < 0 || t >= meta_.frame_count)
    throw IoError("frame " + std::to_string(t) + " out of range for video '" + meta_.id + "'");
  auto img = read_png_rgb(files_[static_cast<std::size_t>(t)]);
  if (img.height() != meta_.height || img.width() != meta_.width)
    throw DimensionMismatch("frame " + std::to_string(t) + " has different dimensions");
  return img;
}

}  // namespace gridvad

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "gridvad/backends.hpp"
#include "gridvad/image.hpp"
#include "gridvad/types.hpp"

namespace testing {

// Frames whose pixels encode the frame index, counting every read.
class CountingFrames final : public gridvad::FrameProvider {
 public:
  CountingFrames(int n, int h = 4, int w = 6) : meta_{"counting", n, h, w, 25.0} {}
  gridvad::VideoMeta meta() const override { return meta_; }
  gridvad::RgbImage frame(gridvad::FrameIndex t) const override {
    if (t < 0 || t >= meta_.frame_count) throw gridvad::IoError("frame out of range");
    ++reads;
    const auto v = static_cast<std::uint8_t>(t % 251);
    return gridvad::RgbImage(meta_.height, meta_.width, {v, static_cast<std::uint8_t>(t / 251), 7});
  }
  mutable std::atomic<int> reads{0};

 private:
  gridvad::VideoMeta meta_;
};

class ScriptedVlm final : public gridvad::VisionLanguageBackend {
 public:
  explicit ScriptedVlm(std::function<std::string(const gridvad::VlmRequest&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const gridvad::VlmRequest& r) override {
    ++calls;
    return fn_(r);
  }
  int calls = 0;

 private:
  std::function<std::string(const gridvad::VlmRequest&)> fn_;
};

class ScriptedGrounder final : public gridvad::GroundingBackend {
 public:
  explicit ScriptedGrounder(std::function<std::vector<gridvad::BoundingBox>(const gridvad::GroundingRequest&)> fn)
      : fn_(std::move(fn)) {}
  std::vector<gridvad::BoundingBox> ground(const gridvad::GroundingRequest& r) override {
    frames.push_back(r.frame_index);
    return fn_(r);
  }
  std::vector<gridvad::FrameIndex> frames;

 private:
  std::function<std::vector<gridvad::BoundingBox>(const gridvad::GroundingRequest&)> fn_;
};

class ScriptedPropagator final : public gridvad::PropagationBackend {
 public:
  explicit ScriptedPropagator(std::function<std::vector<gridvad::Bitmap>(const gridvad::PropagationRequest&)> fn)
      : fn_(std::move(fn)) {}
  std::vector<gridvad::Bitmap> propagate(const gridvad::PropagationRequest& r) override {
    requests.push_back(r.frame_indices);
    return fn_(r);
  }
  std::vector<std::vector<gridvad::FrameIndex>> requests;

 private:
  std::function<std::vector<gridvad::Bitmap>(const gridvad::PropagationRequest&)> fn_;
};

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("gridvad-test-" + name + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline gridvad::Proposal prop(std::string d, int s, int e, double c, int m) {
  return {std::move(d), {s, e}, c, m, {1}};
}

}  // namespace testing

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridvad/image.hpp"
#include "gridvad/types.hpp"

namespace gridvad {

struct BinPartition;

/// One generation request. `image` is absent for text-only calls.
///
/// The trailing fields describe where the image came from. Network backends
/// ignore them; simulated backends use them in place of looking at pixels.
struct VlmRequest {
  std::string prompt;
  std::optional<RgbImage> image;
  double temperature = 0.0;
  std::string video_id;
  std::vector<FrameIndex> frame_indices;
  const BinPartition* partition = nullptr;
  int sampling_index = 0;
  std::uint64_t seed = 0;
};

class VisionLanguageBackend {
 public:
  virtual ~VisionLanguageBackend() = default;
  /// Returns the generated text. Throws TransportError when unreachable.
  virtual std::string complete(const VlmRequest& request) = 0;
};

struct GroundingRequest {
  std::string video_id;
  FrameIndex frame_index = 0;
  RgbImage image;
  std::string text;
  double box_threshold = 0.05;
  double text_threshold = 0.05;
};

class GroundingBackend {
 public:
  virtual ~GroundingBackend() = default;
  /// Boxes sorted by descending score.
  virtual std::vector<BoundingBox> ground(const GroundingRequest& request) = 0;
};

struct PropagationRequest {
  std::string video_id;
  std::vector<FrameIndex> frame_indices;
  std::vector<RgbImage> frames;
  int anchor_index = 0;  // position of the anchor within frame_indices
  BoundingBox box;
  int height = 0;
  int width = 0;
};

class PropagationBackend {
 public:
  virtual ~PropagationBackend() = default;
  /// One mask per requested frame, in request order.
  virtual std::vector<Bitmap> propagate(const PropagationRequest& request) = 0;
};

}  // namespace gridvad

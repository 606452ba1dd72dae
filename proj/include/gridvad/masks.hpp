#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gridvad/types.hpp"

namespace gridvad {

/// Run lengths over row-major pixel order, alternating zero/one runs and
/// always starting with a (possibly empty) run of zeros.
using RunLengths = std::vector<std::uint32_t>;

RunLengths encode_rle(const Bitmap& bitmap);

/// Throws ProtocolError when the runs do not sum to height·width.
Bitmap decode_rle(std::span<const std::uint32_t> runs, int height, int width);

/// Pixelwise OR of all instance masks, keyed by frame. Frames covered by no
/// instance are absent.
std::map<FrameIndex, FrameMask> union_masks(std::span<const AnomalyInstance> instances,
                                            const VideoMeta& video);

/// Zeroes `mask` when 0 < area < min_area. Returns true if it was cleared.
bool apply_area_floor(Bitmap& mask, std::int64_t min_area);

/// 8-connected component labelling. Background is 0, components are 1..n.
/// Returns n.
int label_components(const Bitmap& mask, ComponentMap& labels);

/// Tight pixel box around the nonzero pixels; all zeros when the mask is empty.
BoundingBox mask_bounds(const Bitmap& mask);

}  // namespace gridvad

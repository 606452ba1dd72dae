#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "gridvad/types.hpp"

namespace gridvad {

/// Instances of one video as stored on disk.
struct Manifest {
  VideoMeta meta;
  std::vector<AnomalyInstance> instances;
};

/// Writes `<dir>/manifest.json` and one binary PNG (0/255) per instance frame
/// under `<dir>/<video_id>/<instance>/<frame:06d>.png`. Returns the manifest path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const VideoMeta& meta,
                                     std::span<const AnomalyInstance> instances);

/// Reads a manifest written by write_manifest. Throws SchemaError naming the
/// offending field.
Manifest read_manifest(const std::filesystem::path& manifest_path);

nlohmann::json proposal_to_json(const ConsolidatedProposal& p);
ConsolidatedProposal proposal_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace gridvad

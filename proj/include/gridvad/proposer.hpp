#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridvad/backends.hpp"
#include "gridvad/ledger.hpp"
#include "gridvad/sampler.hpp"

namespace gridvad {

enum class ProposerBackendKind { http_chat, simulated };

/// How evidence cells become an interval. `bin_span` covers the full bins of
/// the cited cells; `sampled_frames` spans only the frames actually shown.
enum class IntervalDecoding { bin_span, sampled_frames };

struct ProposerConfig {
  ProposerBackendKind backend = ProposerBackendKind::simulated;
  std::string endpoint_url;
  std::string model_name = "Qwen3-VL-30B-A3B-Instruct";
  double temperature = 0.7;
  int max_retries = 3;
  double timeout_s = 120.0;
  IntervalDecoding decoding = IntervalDecoding::bin_span;

  /// Independent samplings must be stochastic: temperature > 0 when M > 1.
  void validate(int samplings) const;
};

/// Proposal prompt for a g×g montage. Depends only on the grid geometry.
std::string build_prompt(const BinPartition& partition);
std::string build_prompt(const GridSample& grid, const BinPartition& partition);

/// Prompt for a single-frame query (uniform-sampling baseline).
std::string build_single_frame_prompt();

/// One schema-valid element of a proposer response.
struct ResponseEntry {
  std::string description;
  std::vector<int> evidence_cells;  // sorted, unique
  double confidence = 0.5;
  bool confidence_defaulted = false;
};

struct ParsedResponse {
  std::vector<ResponseEntry> entries;
  std::size_t dropped = 0;   // elements that failed the schema
  bool found_array = false;  // false: nothing array-like could be extracted
  std::vector<std::string> warnings;
};

/// First JSON array embedded in `text` whose elements are objects (or which
/// is empty). Tolerates surrounding prose and code fences.
std::optional<nlohmann::json> extract_first_array(std::string_view text);

/// Total: never throws. Cells outside [1, cell_count] invalidate an entry.
ParsedResponse parse_response(std::string_view text, int cell_count);

/// Queries the backend once on `grid` and decodes the answer into proposals.
/// Transport or format failures yield an empty list. `bounds` clamps decoded
/// intervals (used when the clip was padded); it defaults to the partition's clip.
std::vector<Proposal> propose(const GridSample& grid, const BinPartition& partition,
                              const ProposerConfig& config, VisionLanguageBackend& backend,
                              CallLedger& ledger,
                              std::optional<TemporalInterval> bounds = std::nullopt);

/// Converts parsed entries into proposals for sampling `sampling_index`.
/// `shown_frames` (one per cell) selects sampled-frame decoding when non-empty.
std::vector<Proposal> to_proposals(const ParsedResponse& parsed, const BinPartition& partition,
                                   int sampling_index, const TemporalInterval& bounds,
                                   std::span<const FrameIndex> shown_frames = {});

}  // namespace gridvad

#include "gridvad/proposer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace gridvad {

using nlohmann::json;

void ProposerConfig::validate(int samplings) const {
  if (samplings > 1 && !(temperature > 0))
    throw InvalidArgument("proposer temperature must be > 0 when more than one sampling is drawn");
  if (temperature < 0) throw InvalidArgument("proposer temperature must be >= 0");
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  if (backend == ProposerBackendKind::http_chat && endpoint_url.empty())
    throw InvalidArgument("http-chat proposer needs an endpoint URL");
}

namespace {

constexpr std::string_view kResponseContract =
    "Answer with a JSON array and nothing else. Each element must be an object of the form\n"
    "  {\"description\": \"<short phrase naming the object and what it is doing>\",\n"
    "   \"evidence_cells\": [<numbers of the cells in which it is visible>],\n"
    "   \"confidence\": <number between 0 and 1>}\n"
    "Report each distinct anomalous object once. An empty array [] is a valid answer when\n"
    "nothing in the scene is anomalous.\n";

}  // namespace

std::string build_prompt(const BinPartition& partition) {
  const int g = partition.grid_side();
  const int k = partition.cell_count;
  std::ostringstream p;
  p << "The image is a " << g << "x" << g << " grid of " << k
    << " frames taken from one surveillance video clip, in temporal order.\n"
    << "Cells are numbered 1 to " << k
    << " from left to right and top to bottom; each cell shows its number in its top-left "
       "corner. Cell 1 is the earliest moment of the clip and cell "
    << k << " the latest.\n\n"
    << "Decide from the scene itself what is normal and what is not, and report every event, "
       "object or behaviour that deviates from the regular activity of this scene. For each "
       "one, list the cells in which it is visible.\n\n"
    << kResponseContract;
  return p.str();
}

std::string build_prompt(const GridSample& /*grid*/, const BinPartition& partition) {
  return build_prompt(partition);
}

std::string build_single_frame_prompt() {
  std::ostringstream p;
  p << "The image is a single frame from a surveillance video.\n\n"
    << "Decide from the scene itself what is normal and what is not, and report every event, "
       "object or behaviour that deviates from the regular activity of this scene. Use "
       "evidence_cells [1] for anything you report.\n\n"
    << kResponseContract;
  return p.str();
}

namespace {

// Index one past the bracket matching text[open], or npos. Skips JSON strings.
std::size_t match_bracket(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      if (--depth == 0) return c == ']' ? i + 1 : std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<json> extract_first_array(std::string_view text) {
  for (std::size_t pos = text.find('['); pos != std::string_view::npos;
       pos = text.find('[', pos + 1)) {
    const auto end = match_bracket(text, pos);
    if (end == std::string_view::npos) continue;
    auto parsed = json::parse(text.substr(pos, end - pos), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) continue;
    const bool objects =
        std::all_of(parsed.begin(), parsed.end(), [](const json& e) { return e.is_object(); });
    if (objects) return parsed;
  }
  return std::nullopt;
}

ParsedResponse parse_response(std::string_view text, int cell_count) {
  ParsedResponse out;
  const auto array = extract_first_array(text);
  if (!array) {
    out.warnings.push_back("no JSON array of proposals found in response");
    return out;
  }
  out.found_array = true;
  std::size_t index = 0;
  for (const auto& e : *array) {
    const auto where = "entry " + std::to_string(index++);
    auto reject = [&](const std::string& why) {
      ++out.dropped;
      out.warnings.push_back(where + ": " + why);
    };
    if (!e.contains("description") || !e["description"].is_string() ||
        e["description"].get<std::string>().find_first_not_of(" \t\r\n") == std::string::npos) {
      reject("missing or empty description");
      continue;
    }
    if (!e.contains("evidence_cells") || !e["evidence_cells"].is_array() ||
        e["evidence_cells"].empty()) {
      reject("missing or empty evidence_cells");
      continue;
    }
    std::set<int> cells;
    bool cells_ok = true;
    for (const auto& c : e["evidence_cells"]) {
      if (!c.is_number_integer() || c.get<std::int64_t>() < 1 ||
          c.get<std::int64_t>() > cell_count) {
        cells_ok = false;
        break;
      }
      cells.insert(c.get<int>());
    }
    if (!cells_ok) {
      reject("evidence_cells must be integers in [1, " + std::to_string(cell_count) + "]");
      continue;
    }
    ResponseEntry entry;
    entry.description = e["description"].get<std::string>();
    entry.evidence_cells.assign(cells.begin(), cells.end());
    if (!e.contains("confidence") || e["confidence"].is_null()) {
      entry.confidence = 0.5;
      entry.confidence_defaulted = true;
      out.warnings.push_back(where + ": confidence missing, using 0.5");
    } else if (!e["confidence"].is_number() || e["confidence"].get<double>() < 0 ||
               e["confidence"].get<double>() > 1) {
      reject("confidence must be a number in [0, 1]");
      continue;
    } else {
      entry.confidence = e["confidence"].get<double>();
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

std::vector<Proposal> to_proposals(const ParsedResponse& parsed, const BinPartition& partition,
                                   int sampling_index, const TemporalInterval& bounds,
                                   std::span<const FrameIndex> shown_frames) {
  std::vector<Proposal> out;
  for (const auto& e : parsed.entries) {
    TemporalInterval interval;
    try {
      interval = decode_cells(partition, e.evidence_cells);
    } catch (const ParseError& err) {
      spdlog::warn("dropping proposal '{}': {}", e.description, err.what());
      continue;
    }
    if (!shown_frames.empty()) {
      interval.start = shown_frames[static_cast<std::size_t>(e.evidence_cells.front() - 1)];
      interval.end = shown_frames[static_cast<std::size_t>(e.evidence_cells.back() - 1)];
    }
    interval.start = std::clamp(interval.start, bounds.start, bounds.end);
    interval.end = std::clamp(interval.end, bounds.start, bounds.end);
    out.push_back({e.description, interval, e.confidence, sampling_index, e.evidence_cells});
  }
  return out;
}

std::vector<Proposal> propose(const GridSample& grid, const BinPartition& partition,
                              const ProposerConfig& config, VisionLanguageBackend& backend,
                              CallLedger& ledger, std::optional<TemporalInterval> bounds) {
  VlmRequest request;
  request.prompt = build_prompt(grid, partition);
  request.image = grid.montage;
  request.temperature = config.temperature;
  request.video_id = partition.clip.video_id;
  request.frame_indices = grid.frame_indices;
  request.partition = &partition;
  request.sampling_index = grid.sampling_index;
  request.seed = grid.seed;

  ledger.add_vlm();
  std::string text;
  try {
    text = ledger.timed([&] { return backend.complete(request); });
  } catch (const Error& e) {
    spdlog::warn("sampling {} of clip [{}, {}] yields no proposals: {}", grid.sampling_index,
                 partition.clip.start(), partition.clip.end(), e.what());
    return {};
  }
  const auto parsed = parse_response(text, partition.cell_count);
  for (const auto& w : parsed.warnings) spdlog::warn("sampling {}: {}", grid.sampling_index, w);
  std::span<const FrameIndex> shown;
  if (config.decoding == IntervalDecoding::sampled_frames) shown = grid.frame_indices;
  return to_proposals(parsed, partition, grid.sampling_index,
                      bounds.value_or(partition.clip.interval), shown);
}

}  // namespace gridvad

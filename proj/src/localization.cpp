#include "gridvad/localization.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <spdlog/spdlog.h>

#include "gridvad/masks.hpp"

namespace gridvad {

void LocalizationConfig::validate() const {
  if (candidate_count < 1) throw InvalidArgument("candidate_count must be >= 1");
  if (box_threshold < 0 || box_threshold > 1 || text_threshold < 0 || text_threshold > 1)
    throw InvalidArgument("grounding thresholds must lie in [0, 1]");
  if (min_mask_area < 0) throw InvalidArgument("min_mask_area must be >= 0");
}

std::vector<FrameIndex> candidate_frames(const TemporalInterval& interval, int count) {
  if (!interval.valid()) throw InvalidArgument("invalid proposal interval");
  if (count < 1) throw InvalidArgument("candidate count must be >= 1");
  std::vector<FrameIndex> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    out.push_back(interval.start + (interval.length() - 1) / 2);
    return out;
  }
  const double span = interval.length() - 1;
  for (int i = 0; i < count; ++i)
    out.push_back(interval.start + static_cast<FrameIndex>(std::lround(span * i / (count - 1))));
  return out;
}

Anchor select_anchor(const ConsolidatedProposal& proposal, const FrameProvider& frames,
                     const LocalizationConfig& config, GroundingBackend& grounder,
                     CallLedger& ledger) {
  std::optional<Anchor> best;
  for (const FrameIndex t : candidate_frames(proposal.interval, config.candidate_count)) {
    GroundingRequest request{frames.meta().id, t, frames.frame(t), proposal.description,
                             config.box_threshold, config.text_threshold};
    ledger.add_grounding();
    std::vector<BoundingBox> boxes;
    try {
      boxes = ledger.timed([&] { return grounder.ground(request); });
    } catch (const Error& e) {
      spdlog::warn("grounding '{}' on frame {} failed: {}", proposal.description, t, e.what());
      continue;
    }
    if (boxes.empty()) continue;
    const auto top = *std::max_element(
        boxes.begin(), boxes.end(),
        [](const BoundingBox& a, const BoundingBox& b) { return a.score < b.score; });
    if (boxes.size() > 1)
      spdlog::debug("'{}' frame {}: {} boxes, keeping the top one", proposal.description, t,
                    boxes.size());
    if (top.score < config.box_threshold) continue;
    if (!best || top.score > best->box.score) best = Anchor{t, top};
  }
  if (!best)
    throw GroundingFailed("no box above threshold for '" + proposal.description + "' in [" +
                          std::to_string(proposal.interval.start) + ", " +
                          std::to_string(proposal.interval.end) + "]");
  return *best;
}

AnomalyInstance propagate(const ConsolidatedProposal& proposal, const Anchor& anchor,
                          const FrameProvider& frames, const LocalizationConfig& config,
                          PropagationBackend& propagator, CallLedger& ledger) {
  const auto& window = proposal.interval;
  if (!window.contains(anchor.frame))
    throw InvalidArgument("anchor frame " + std::to_string(anchor.frame) +
                          " outside the proposal interval");
  const auto meta = frames.meta();
  PropagationRequest request;
  request.video_id = meta.id;
  request.anchor_index = anchor.frame - window.start;
  request.box = anchor.box;
  request.height = meta.height;
  request.width = meta.width;
  for (FrameIndex t = window.start; t <= window.end; ++t) {
    request.frame_indices.push_back(t);
    request.frames.push_back(frames.frame(t));
  }

  ledger.add_propagation();
  std::vector<Bitmap> masks;
  try {
    masks = ledger.timed([&] { return propagator.propagate(request); });
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error& e) {
    throw PropagationFailed("propagating '" + proposal.description + "': " + e.what());
  }
  if (masks.size() != static_cast<std::size_t>(window.length()))
    throw ProtocolError("propagation returned " + std::to_string(masks.size()) +
                        " masks for " + std::to_string(window.length()) + " frames");

  AnomalyInstance instance{proposal, anchor.frame, anchor.box, {}};
  instance.masks.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    auto& m = masks[i];
    if (m.rows() != meta.height || m.cols() != meta.width)
      throw ProtocolError("propagated mask has size " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
    m = (m != 0).cast<std::uint8_t>();
    apply_area_floor(m, config.min_mask_area);
    instance.masks.push_back({window.start + static_cast<FrameIndex>(i), std::move(m)});
  }
  return instance;
}

std::vector<AnomalyInstance> localize(std::span<const ConsolidatedProposal> proposals,
                                      const FrameProvider& frames,
                                      const LocalizationConfig& config,
                                      GroundingBackend& grounder, PropagationBackend& propagator,
                                      CallLedger& ledger) {
  std::vector<AnomalyInstance> out;
  for (const auto& p : proposals) {
    try {
      const auto anchor = select_anchor(p, frames, config, grounder, ledger);
      out.push_back(propagate(p, anchor, frames, config, propagator, ledger));
    } catch (const GroundingFailed& e) {
      spdlog::info("dropping proposal: {}", e.what());
    } catch (const PropagationFailed& e) {
      spdlog::warn("dropping proposal: {}", e.what());
    } catch (const ProtocolError& e) {
      spdlog::warn("dropping proposal '{}': {}", p.description, e.what());
    }
  }
  return out;
}

}  // namespace gridvad

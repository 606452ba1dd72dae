#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gridvad/backends.hpp"
#include "gridvad/image.hpp"
#include "gridvad/ledger.hpp"
#include "gridvad/types.hpp"

namespace gridvad {

struct LocalizationConfig {
  int candidate_count = 5;  // R
  double box_threshold = 0.05;
  double text_threshold = 0.05;
  std::int64_t min_mask_area = 50;

  void validate() const;
};

/// R frames evenly spaced over the interval, both endpoints included when
/// R >= 2. Short intervals repeat frames so that exactly R are returned.
std::vector<FrameIndex> candidate_frames(const TemporalInterval& interval, int count);

struct Anchor {
  FrameIndex frame = 0;
  BoundingBox box;
};

/// Grounds the proposal description on every candidate frame and keeps the
/// highest-scoring box; ties go to the earliest frame. Throws GroundingFailed
/// when no box reaches the box threshold.
Anchor select_anchor(const ConsolidatedProposal& proposal, const FrameProvider& frames,
                     const LocalizationConfig& config, GroundingBackend& grounder,
                     CallLedger& ledger);

/// One propagation request over the proposal interval. Masks below the area
/// floor are cleared. Throws PropagationFailed on backend failure and
/// ProtocolError on a malformed answer.
AnomalyInstance propagate(const ConsolidatedProposal& proposal, const Anchor& anchor,
                          const FrameProvider& frames, const LocalizationConfig& config,
                          PropagationBackend& propagator, CallLedger& ledger);

/// select_anchor + propagate for each proposal. Proposals that fail either
/// step are logged and dropped.
std::vector<AnomalyInstance> localize(std::span<const ConsolidatedProposal> proposals,
                                      const FrameProvider& frames,
                                      const LocalizationConfig& config,
                                      GroundingBackend& grounder, PropagationBackend& propagator,
                                      CallLedger& ledger);

}  // namespace gridvad

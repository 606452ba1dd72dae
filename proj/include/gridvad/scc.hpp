#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridvad/backends.hpp"
#include "gridvad/ledger.hpp"
#include "gridvad/types.hpp"

namespace gridvad {

enum class SccMode { llm, deterministic };

struct SccConfig {
  int tau = 3;
  SccMode mode = SccMode::deterministic;
  double similarity_floor = 0.5;  // deterministic linkage threshold
  std::string model_name = "Qwen3-VL-30B-A3B-Instruct";
  double temperature = 0.0;

  void validate(int samplings) const;
};

/// Case-folded alphanumeric word sets.
std::vector<std::string> tokenize(std::string_view text);
double token_jaccard(std::string_view a, std::string_view b);

/// Deterministic linkage: similar descriptions and overlapping or abutting intervals.
bool proposals_link(const Proposal& a, const Proposal& b, double similarity_floor);

/// Connected components of the linkage relation as sorted index lists,
/// ordered by smallest member index.
std::vector<std::vector<int>> link_components(std::span<const Proposal> pooled,
                                              double similarity_floor);

/// Single-linkage clusters over `proposals_link`, one entry per cluster,
/// ordered by descending support, descending confidence, ascending start.
std::vector<ConsolidatedProposal> deterministic_consolidate(std::span<const Proposal> pooled,
                                                            const SccConfig& config);

/// The consolidation pass for one clip. One ledger SCC call per invocation.
/// In llm mode the text backend groups the candidates; support and merged
/// fields are always recomputed here from the echoed membership. A failed or
/// unusable llm answer falls back to the deterministic grouping.
std::vector<ConsolidatedProposal> consolidate(std::span<const Proposal> pooled, int samplings,
                                              const SccConfig& config, CallLedger& ledger,
                                              VisionLanguageBackend* text_backend = nullptr);

/// Entries with support >= tau, in input order.
std::vector<ConsolidatedProposal> filter_support(std::span<const ConsolidatedProposal> entries,
                                                 int tau);

/// Text-only consolidation prompt; candidates are listed with ids 0..n-1.
std::string build_scc_prompt(std::span<const Proposal> pooled);

/// Candidate list embedded in an SCC prompt (used by simulated consolidators).
std::vector<Proposal> candidates_from_scc_prompt(std::string_view prompt);

/// Groups of candidate ids echoed by the consolidator. Ids outside [0, n)
/// are ignored, an id claimed twice stays with its first group, and ids never
/// mentioned become singleton groups. Throws ParseError if no array is found.
std::vector<std::vector<int>> parse_scc_response(std::string_view text, std::size_t candidate_count);

/// Sorts in the canonical output order.
void sort_consolidated(std::vector<ConsolidatedProposal>& entries);

/// Builds one entry from members, choosing the canonical description.
ConsolidatedProposal merge_members(std::vector<Proposal> members);

}  // namespace gridvad

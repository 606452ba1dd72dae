#include "gridvad/scc.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "gridvad/proposer.hpp"

namespace gridvad {

using nlohmann::json;

void SccConfig::validate(int samplings) const {
  if (tau < 1 || tau > samplings)
    throw InvalidArgument("support threshold tau=" + std::to_string(tau) + " outside [1, " +
                          std::to_string(samplings) + "]");
  if (similarity_floor < 0 || similarity_floor > 1)
    throw InvalidArgument("similarity floor must lie in [0, 1]");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::set<std::string> words;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.insert(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.insert(std::move(current));
  return {words.begin(), words.end()};
}

double token_jaccard(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a), tb = tokenize(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::vector<std::string> inter;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
  const auto uni = ta.size() + tb.size() - inter.size();
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

bool proposals_link(const Proposal& a, const Proposal& b, double similarity_floor) {
  return a.interval.overlaps_or_abuts(b.interval) &&
         token_jaccard(a.description, b.description) >= similarity_floor;
}

namespace {

bool member_less(const Proposal& a, const Proposal& b) {
  return std::tie(a.source_sampling, a.interval.start, a.interval.end, a.description,
                  a.confidence, a.evidence_cells) <
         std::tie(b.source_sampling, b.interval.start, b.interval.end, b.description,
                  b.confidence, b.evidence_cells);
}

}  // namespace

ConsolidatedProposal merge_members(std::vector<Proposal> members) {
  std::sort(members.begin(), members.end(), member_less);
  // Most frequent description; ties go to the higher confidence, then lexicographic order.
  std::map<std::string, std::pair<int, double>> tally;
  for (const auto& m : members) {
    auto& [count, conf] = tally[m.description];
    ++count;
    conf = std::max(conf, m.confidence);
  }
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it)
    if (it->second.first > best->second.first ||
        (it->second.first == best->second.first && it->second.second > best->second.second))
      best = it;
  const std::string description = best->first;
  return ConsolidatedProposal::from_members(description, std::move(members));
}

void sort_consolidated(std::vector<ConsolidatedProposal>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ConsolidatedProposal& a, const ConsolidatedProposal& b) {
              if (a.support != b.support) return a.support > b.support;
              if (a.confidence != b.confidence) return a.confidence > b.confidence;
              return std::tie(a.interval.start, a.interval.end, a.description) <
                     std::tie(b.interval.start, b.interval.end, b.description);
            });
}

std::vector<std::vector<int>> link_components(std::span<const Proposal> pooled,
                                              double similarity_floor) {
  const auto n = pooled.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (proposals_link(pooled[i], pooled[j], similarity_floor)) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::map<std::size_t, std::vector<int>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[find(i)].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  out.reserve(clusters.size());
  for (auto& [root, members] : clusters) out.push_back(std::move(members));
  return out;
}

std::vector<ConsolidatedProposal> deterministic_consolidate(std::span<const Proposal> pooled,
                                                            const SccConfig& config) {
  std::vector<ConsolidatedProposal> out;
  for (const auto& group : link_components(pooled, config.similarity_floor)) {
    std::vector<Proposal> members;
    for (const int i : group) members.push_back(pooled[static_cast<std::size_t>(i)]);
    out.push_back(merge_members(std::move(members)));
  }
  sort_consolidated(out);
  return out;
}

std::string build_scc_prompt(std::span<const Proposal> pooled) {
  json candidates = json::array();
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const auto& p = pooled[i];
    candidates.push_back({{"id", i},
                          {"description", p.description},
                          {"start", p.interval.start},
                          {"end", p.interval.end},
                          {"sampling", p.source_sampling},
                          {"confidence", p.confidence},
                          {"evidence_cells", p.evidence_cells}});
  }
  std::ostringstream s;
  s << "The candidates below are anomaly proposals made by independent looks at the same video "
       "clip. Each has an id, a description, a frame interval [start, end], the look "
       "(sampling) it came from and a confidence.\n\n"
       "Group the candidates that refer to the same object instance into one entry, even when "
       "they are worded differently or cover different parts of the clip. Keep genuinely "
       "distinct anomalies, such as two different objects active at the same time, in separate "
       "entries.\n\n"
       "Answer with a JSON array and nothing else. Each element must be an object of the form\n"
       "  {\"description\": \"<one canonical description>\", \"members\": [<candidate ids>]}\n"
       "Every candidate id must appear in exactly one element. If there are no candidates, "
       "answer [].\n\n"
       "CANDIDATES:\n"
    << candidates.dump() << "\n";
  return s.str();
}

std::vector<Proposal> candidates_from_scc_prompt(std::string_view prompt) {
  constexpr std::string_view marker = "CANDIDATES:\n";
  const auto pos = prompt.find(marker);
  if (pos == std::string_view::npos) throw ParseError("SCC prompt has no candidate list");
  const auto list = json::parse(prompt.substr(pos + marker.size()), nullptr, false);
  if (list.is_discarded() || !list.is_array()) throw ParseError("SCC candidate list is not JSON");
  std::vector<Proposal> out;
  for (const auto& c : list)
    out.push_back({c.at("description").get<std::string>(),
                   {c.at("start").get<int>(), c.at("end").get<int>()},
                   c.at("confidence").get<double>(),
                   c.at("sampling").get<int>(),
                   c.at("evidence_cells").get<std::vector<int>>()});
  return out;
}

std::vector<std::vector<int>> parse_scc_response(std::string_view text,
                                                 std::size_t candidate_count) {
  const auto array = extract_first_array(text);
  if (!array) throw ParseError("no JSON array of groups in consolidation answer");
  std::vector<bool> claimed(candidate_count, false);
  std::vector<std::vector<int>> groups;
  for (const auto& entry : *array) {
    if (!entry.contains("members") || !entry["members"].is_array()) continue;
    std::vector<int> group;
    for (const auto& id : entry["members"]) {
      if (!id.is_number_integer()) continue;
      const auto v = id.get<std::int64_t>();
      if (v < 0 || v >= static_cast<std::int64_t>(candidate_count) || claimed[v]) continue;
      claimed[v] = true;
      group.push_back(static_cast<int>(v));
    }
    if (!group.empty()) groups.push_back(std::move(group));
  }
  for (std::size_t i = 0; i < candidate_count; ++i)
    if (!claimed[i]) groups.push_back({static_cast<int>(i)});
  return groups;
}

namespace {

std::vector<ConsolidatedProposal> llm_consolidate(std::span<const Proposal> pooled,
                                                  const SccConfig& config, CallLedger& ledger,
                                                  VisionLanguageBackend& backend) {
  VlmRequest request;
  request.prompt = build_scc_prompt(pooled);
  request.temperature = config.temperature;
  const auto text = ledger.timed([&] { return backend.complete(request); });
  const auto array = extract_first_array(text);
  const auto groups = parse_scc_response(text, pooled.size());
  std::map<int, std::string> names;  // first group id -> backend description
  if (array)
    for (const auto& entry : *array)
      if (entry.contains("description") && entry["description"].is_string() &&
          entry.contains("members") && entry["members"].is_array() && !entry["members"].empty() &&
          entry["members"][0].is_number_integer())
        names.emplace(entry["members"][0].get<int>(), entry["description"].get<std::string>());
  std::vector<ConsolidatedProposal> out;
  for (const auto& group : groups) {
    std::vector<Proposal> members;
    for (const int id : group) members.push_back(pooled[static_cast<std::size_t>(id)]);
    auto merged = merge_members(std::move(members));
    const auto name = names.find(group.front());
    if (name != names.end() && !tokenize(name->second).empty()) merged.description = name->second;
    out.push_back(std::move(merged));
  }
  sort_consolidated(out);
  return out;
}

}  // namespace

std::vector<ConsolidatedProposal> consolidate(std::span<const Proposal> pooled, int samplings,
                                              const SccConfig& config, CallLedger& ledger,
                                              VisionLanguageBackend* text_backend) {
  for (const auto& p : pooled)
    if (p.source_sampling < 1 || p.source_sampling > samplings)
      throw InvalidArgument("proposal sampling index " + std::to_string(p.source_sampling) +
                            " outside [1, " + std::to_string(samplings) + "]");
  ledger.add_scc();
  if (config.mode == SccMode::llm) {
    if (!text_backend) {
      spdlog::warn("llm consolidation requested without a text backend; using deterministic");
    } else {
      try {
        return llm_consolidate(pooled, config, ledger, *text_backend);
      } catch (const Error& e) {
        spdlog::warn("llm consolidation failed ({}); using deterministic grouping", e.what());
      }
    }
  }
  return deterministic_consolidate(pooled, config);
}

std::vector<ConsolidatedProposal> filter_support(std::span<const ConsolidatedProposal> entries,
                                                 int tau) {
  std::vector<ConsolidatedProposal> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [tau](const ConsolidatedProposal& e) { return e.support >= tau; });
  return out;
}

}  // namespace gridvad

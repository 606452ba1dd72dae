#include "gridvad/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "gridvad/image.hpp"

namespace gridvad {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json& field(const json& j, const std::string& where, const char* key) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  if (!j.contains(key)) throw SchemaError(where + "." + key, "missing");
  return j[key];
}

std::string text(const json& j, const std::string& where, const char* key) {
  const auto& v = field(j, where, key);
  if (!v.is_string()) throw SchemaError(where + "." + key, "expected a string");
  return v.get<std::string>();
}

int integer(const json& j, const std::string& where, const char* key) {
  const auto& v = field(j, where, key);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key, "expected an integer");
  return v.get<int>();
}

double number(const json& j, const std::string& where, const char* key) {
  const auto& v = field(j, where, key);
  if (!v.is_number()) throw SchemaError(where + "." + key, "expected a number");
  return v.get<double>();
}

const json& array(const json& j, const std::string& where, const char* key) {
  const auto& v = field(j, where, key);
  if (!v.is_array()) throw SchemaError(where + "." + key, "expected an array");
  return v;
}

TemporalInterval interval(const json& j, const std::string& where) {
  TemporalInterval t{integer(j, where, "start"), integer(j, where, "end")};
  if (!t.valid()) throw SchemaError(where + ".end", "interval must satisfy 0 <= start <= end");
  return t;
}

json proposal_member(const Proposal& p) {
  return {{"description", p.description},
          {"start", p.interval.start},
          {"end", p.interval.end},
          {"confidence", p.confidence},
          {"source_sampling", p.source_sampling},
          {"evidence_cells", p.evidence_cells}};
}

std::string mask_name(const std::string& video_id, std::size_t instance, FrameIndex t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "/%zu/%06d.png", instance, t);
  return video_id + buf;
}

}  // namespace

json proposal_to_json(const ConsolidatedProposal& p) {
  json members = json::array();
  for (const auto& m : p.members) members.push_back(proposal_member(m));
  return {{"description", p.description},
          {"start", p.interval.start},
          {"end", p.interval.end},
          {"support", p.support},
          {"confidence", p.confidence},
          {"members", members}};
}

ConsolidatedProposal proposal_from_json(const json& j, const std::string& where) {
  ConsolidatedProposal p;
  p.description = text(j, where, "description");
  p.interval = interval(j, where);
  p.support = integer(j, where, "support");
  p.confidence = number(j, where, "confidence");
  if (p.confidence < 0 || p.confidence > 1)
    throw SchemaError(where + ".confidence", "must lie in [0, 1]");
  if (j.contains("members")) {
    const auto& ms = array(j, where, "members");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const auto w = where + ".members[" + std::to_string(i) + "]";
      Proposal m;
      m.description = text(ms[i], w, "description");
      m.interval = interval(ms[i], w);
      m.confidence = number(ms[i], w, "confidence");
      m.source_sampling = integer(ms[i], w, "source_sampling");
      if (ms[i].contains("evidence_cells"))
        m.evidence_cells = ms[i]["evidence_cells"].get<std::vector<int>>();
      p.members.push_back(std::move(m));
    }
  }
  if (!p.members.empty() && !p.consistent())
    throw SchemaError(where + ".support", "does not match the listed members");
  return p;
}

fs::path write_manifest(const fs::path& dir, const VideoMeta& meta,
                        std::span<const AnomalyInstance> instances) {
  fs::create_directories(dir);
  json list = json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    json entry = proposal_to_json(inst.proposal);
    entry["anchor_frame"] = inst.anchor_frame;
    entry["box"] = {inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1, inst.box.score};
    if (static_cast<int>(inst.masks.size()) != inst.proposal.interval.length())
      throw InvalidArgument("instance " + std::to_string(i) + " does not have one mask per frame");
    json files = json::array();
    for (std::size_t k = 0; k < inst.masks.size(); ++k) {
      const auto& m = inst.masks[k];
      if (m.frame_index != inst.proposal.interval.start + static_cast<int>(k))
        throw InvalidArgument("instance " + std::to_string(i) + " masks are not in frame order");
      const auto name = mask_name(meta.id, i, m.frame_index);
      fs::create_directories((dir / name).parent_path());
      write_png(dir / name, Plane((m.bitmap != 0).cast<std::uint8_t>() * 255));
      files.push_back(name);
    }
    entry["mask_files"] = std::move(files);
    list.push_back(std::move(entry));
  }
  const json doc = {{"video_id", meta.id},   {"frame_count", meta.frame_count},
                    {"height", meta.height}, {"width", meta.width},
                    {"fps", meta.fps},       {"instances", list}};
  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  return path;
}

Manifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read " + manifest_path.string());
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw SchemaError("manifest", "not valid JSON");
  Manifest m;
  m.meta.id = text(doc, "manifest", "video_id");
  m.meta.frame_count = integer(doc, "manifest", "frame_count");
  m.meta.height = integer(doc, "manifest", "height");
  m.meta.width = integer(doc, "manifest", "width");
  if (doc.contains("fps")) m.meta.fps = number(doc, "manifest", "fps");
  if (m.meta.frame_count < 1) throw SchemaError("frame_count", "must be positive");
  if (m.meta.height < 1 || m.meta.width < 1) throw SchemaError("height", "must be positive");
  const auto base = manifest_path.parent_path();
  const auto& list = array(doc, "manifest", "instances");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto where = "instances[" + std::to_string(i) + "]";
    AnomalyInstance inst;
    inst.proposal = proposal_from_json(list[i], where);
    if (inst.proposal.interval.end >= m.meta.frame_count)
      throw SchemaError(where + ".end", "beyond the last frame");
    inst.anchor_frame = integer(list[i], where, "anchor_frame");
    if (!inst.proposal.interval.contains(inst.anchor_frame))
      throw SchemaError(where + ".anchor_frame", "outside the instance interval");
    const auto& box = array(list[i], where, "box");
    if (box.size() != 5 || !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); }))
      throw SchemaError(where + ".box", "expected [x0, y0, x1, y1, score]");
    inst.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                box[3].get<double>(), box[4].get<double>()};
    const auto& files = array(list[i], where, "mask_files");
    if (static_cast<int>(files.size()) != inst.proposal.interval.length())
      throw SchemaError(where + ".mask_files", "expected one file per frame of the interval");
    for (std::size_t k = 0; k < files.size(); ++k) {
      const auto w = where + ".mask_files[" + std::to_string(k) + "]";
      if (!files[k].is_string()) throw SchemaError(w, "expected a string");
      const auto file = base / files[k].get<std::string>();
      if (!fs::exists(file)) throw SchemaError(w, "missing " + file.string());
      Bitmap b = (read_png_gray(file) != 0).cast<std::uint8_t>();
      if (b.rows() != m.meta.height || b.cols() != m.meta.width)
        throw SchemaError(w, "mask size differs from the video size");
      inst.masks.push_back({inst.proposal.interval.start + static_cast<int>(k), std::move(b)});
    }
    m.instances.push_back(std::move(inst));
  }
  return m;
}

}  // namespace gridvad

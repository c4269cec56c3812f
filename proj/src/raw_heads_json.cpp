#include "center3d/raw_heads_json.hpp"

#include <string>

#include "center3d/error.hpp"

namespace center3d {

using nlohmann::json;

const char* depth_codec_name(DepthCodec codec) {
  switch (codec) {
    case DepthCodec::Eigen: return "eigen";
    case DepthCodec::SID: return "sid";
    case DepthCodec::LID: return "lid";
    case DepthCodec::DepJoint: return "depjoint";
  }
  return "?";
}

DepthCodec parse_depth_codec(std::string_view name) {
  if (name == "eigen") return DepthCodec::Eigen;
  if (name == "sid") return DepthCodec::SID;
  if (name == "lid") return DepthCodec::LID;
  if (name == "depjoint") return DepthCodec::DepJoint;
  throw InputError("unknown depth codec '" + std::string(name) + "' (expected eigen, sid, lid or depjoint)");
}

namespace {

json vec2(const Vec2& v) { return json::array({v.x, v.y}); }

json depth_to_json(const DepthHead& head) {
  if (const auto* e = std::get_if<EigenHead>(&head)) return {{"feature", e->feature}};
  if (const auto* o = std::get_if<OrdinalPrediction>(&head)) return {{"probs", o->probs}, {"residual", o->residual}};
  const auto& d = std::get<DepJointPrediction>(head);
  return {{"p1", d.p1}, {"p2", d.p2}, {"raw1", d.raw1}, {"raw2", d.raw2}};
}

// Reader that tracks the JSON pointer of the value it is looking at.
class Cursor {
 public:
  Cursor(const json& value, std::string pointer) : v_(value), ptr_(std::move(pointer)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError((ptr_.empty() ? std::string("/") : ptr_) + ": " + what);
  }

  Cursor key(const std::string& name) const {
    if (!v_.is_object()) fail("expected an object");
    const auto it = v_.find(name);
    if (it == v_.end()) Cursor(v_, ptr_ + "/" + name).fail("missing required field");
    return Cursor(*it, ptr_ + "/" + name);
  }
  bool has(const std::string& name) const { return v_.is_object() && v_.contains(name); }

  Cursor index(size_t i) const { return Cursor(v_.at(i), ptr_ + "/" + std::to_string(i)); }

  size_t array_size(std::optional<size_t> expected = std::nullopt) const {
    if (!v_.is_array()) fail("expected an array");
    if (expected && v_.size() != *expected) fail("expected " + std::to_string(*expected) + " elements");
    return v_.size();
  }

  double number() const {
    if (!v_.is_number()) fail("expected a number");
    return v_.get<double>();
  }
  int integer() const {
    if (!v_.is_number_integer()) fail("expected an integer");
    return v_.get<int>();
  }
  std::string string() const {
    if (!v_.is_string()) fail("expected a string");
    return v_.get<std::string>();
  }
  Vec2 vec2() const {
    array_size(2);
    return {index(0).number(), index(1).number()};
  }

 private:
  const json& v_;
  std::string ptr_;
};

DepthHead depth_from_json(const Cursor& c, DepthCodec codec) {
  switch (codec) {
    case DepthCodec::Eigen: return EigenHead{c.key("feature").number()};
    case DepthCodec::SID:
    case DepthCodec::LID: {
      OrdinalPrediction p;
      const Cursor probs = c.key("probs");
      const size_t n = probs.array_size();
      for (size_t i = 0; i < n; ++i) {
        const double v = probs.index(i).number();
        if (!(v >= 0.0 && v <= 1.0)) probs.index(i).fail("probability outside [0, 1]");
        p.probs.push_back(v);
      }
      p.residual = c.key("residual").number();
      return p;
    }
    case DepthCodec::DepJoint: {
      DepJointPrediction p{c.key("p1").number(), c.key("p2").number(), c.key("raw1").number(),
                           c.key("raw2").number()};
      if (!(p.p1 >= 0 && p.p1 <= 1)) c.key("p1").fail("probability outside [0, 1]");
      if (!(p.p2 >= 0 && p.p2 <= 1)) c.key("p2").fail("probability outside [0, 1]");
      return p;
    }
  }
  return EigenHead{};
}

}  // namespace

json to_json(const RawHeadsFrame& frame) {
  json instances = json::array();
  for (const auto& h : frame.instances) {
    json j = {{"class", h.class_name},
              {"cell", json::array({h.cell.x, h.cell.y})},
              {"center_offset", vec2(h.center_offset)},
              {"size", vec2(h.size)},
              {"offset3d", vec2(h.offset3d)},
              {"depth", depth_to_json(h.depth)},
              {"dimensions", json::array({h.dims.h, h.dims.w, h.dims.l})},
              {"orientation", h.orientation},
              {"score", h.score}};
    if (!h.ra_depth.empty()) {
      json ra = json::array();
      for (const auto& d : h.ra_depth) ra.push_back(depth_to_json(d));
      j["ra_depth"] = std::move(ra);
    }
    if (!h.ra_offset3d.empty()) {
      json ra = json::array();
      for (const auto& o : h.ra_offset3d) ra.push_back(vec2(o));
      j["ra_offset3d"] = std::move(ra);
    }
    instances.push_back(std::move(j));
  }
  return {{"schema_version", kSchemaVersion},
          {"frame_id", frame.frame_id},
          {"input_width", frame.meta.input_width},
          {"input_height", frame.meta.input_height},
          {"stride", frame.meta.stride},
          {"depth_codec", depth_codec_name(frame.codec)},
          {"instances", std::move(instances)}};
}

RawHeadsFrame raw_heads_from_json(const json& doc) {
  const Cursor root(doc, "");
  if (!doc.is_object()) root.fail("expected an object");
  if (root.key("schema_version").integer() != kSchemaVersion)
    root.key("schema_version").fail("unsupported schema version");

  RawHeadsFrame frame;
  frame.frame_id = root.key("frame_id").integer();
  if (frame.frame_id < 0) root.key("frame_id").fail("frame id must be non-negative");
  frame.meta.input_width = root.key("input_width").integer();
  frame.meta.input_height = root.key("input_height").integer();
  frame.meta.stride = root.key("stride").integer();
  if (frame.meta.stride < 1) root.key("stride").fail("stride must be >= 1");
  if (frame.meta.input_width < 1) root.key("input_width").fail("must be positive");
  if (frame.meta.input_height < 1) root.key("input_height").fail("must be positive");
  try {
    frame.codec = parse_depth_codec(root.key("depth_codec").string());
  } catch (const InputError& e) {
    root.key("depth_codec").fail(e.what());
  }

  const Cursor list = root.key("instances");
  const size_t n = list.array_size();
  for (size_t i = 0; i < n; ++i) {
    const Cursor c = list.index(i);
    RawInstanceHeads h;
    h.class_name = c.key("class").string();
    const Cursor cell = c.key("cell");
    cell.array_size(2);
    h.cell = {cell.index(0).integer(), cell.index(1).integer()};
    h.center_offset = c.key("center_offset").vec2();
    h.size = c.key("size").vec2();
    h.offset3d = c.key("offset3d").vec2();
    h.depth = depth_from_json(c.key("depth"), frame.codec);
    const Cursor dims = c.key("dimensions");
    dims.array_size(3);
    h.dims = {dims.index(0).number(), dims.index(1).number(), dims.index(2).number()};
    for (int k = 0; k < 3; ++k)
      if (!(dims.index(k).number() > 0)) dims.index(k).fail("dimension must be positive");
    const Cursor orient = c.key("orientation");
    orient.array_size(8);
    for (size_t k = 0; k < 8; ++k) h.orientation[k] = orient.index(k).number();
    h.score = c.key("score").number();
    if (c.has("ra_depth")) {
      const Cursor ra = c.key("ra_depth");
      const size_t m = ra.array_size();
      for (size_t k = 0; k < m; ++k) h.ra_depth.push_back(depth_from_json(ra.index(k), frame.codec));
    }
    if (c.has("ra_offset3d")) {
      const Cursor ra = c.key("ra_offset3d");
      const size_t m = ra.array_size();
      for (size_t k = 0; k < m; ++k) h.ra_offset3d.push_back(ra.index(k).vec2());
    }
    frame.instances.push_back(std::move(h));
  }
  return frame;
}

}  // namespace center3d

#include "center3d/kitti_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "center3d/error.hpp"

namespace center3d {
namespace {

constexpr int kLabelFields = 15;
constexpr int kPredictionFields = 16;

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_real(std::string_view token, int field) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("field " + std::to_string(field) + ": not a decimal number: '" +
                         std::string(token) + "'",
                     field);
  }
  return value;
}

int parse_occlusion(std::string_view token, int field, bool dont_care) {
  const double value = parse_real(token, field);
  const double lowest = dont_care ? -1.0 : 0.0;  // DontCare rows carry -1
  if (value != std::floor(value) || value < lowest || value > 3.0) {
    throw ParseError("field " + std::to_string(field) + ": occlusion must be an integer in 0..3, got '" +
                         std::string(token) + "'",
                     field);
  }
  return static_cast<int>(value);
}

std::string format_real(double value) {
  // Shortest fixed representation that round-trips, padded to two decimals.
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  std::string s(buf, ptr);
  const auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += ".00";
  } else if (s.size() - dot - 1 < 2) {
    s.append(2 - (s.size() - dot - 1), '0');
  }
  return s;
}

}  // namespace

ObjectLabel parse_label_line(std::string_view line) {
  const auto tokens = split_whitespace(line);
  const int n = static_cast<int>(tokens.size());
  if (n != kLabelFields && n != kPredictionFields) {
    throw ParseError("field-count mismatch: expected 15 or 16 fields, got " + std::to_string(n),
                     std::min(n + 1, kPredictionFields + 1));
  }
  ObjectLabel label;
  label.class_name = std::string(tokens[0]);
  label.truncation = parse_real(tokens[1], 2);
  label.occlusion = parse_occlusion(tokens[2], 3, label.is_dont_care());
  label.alpha = parse_real(tokens[3], 4);
  label.bbox = {parse_real(tokens[4], 5), parse_real(tokens[5], 6), parse_real(tokens[6], 7),
                parse_real(tokens[7], 8)};
  label.dims = {parse_real(tokens[8], 9), parse_real(tokens[9], 10), parse_real(tokens[10], 11)};
  label.location = {parse_real(tokens[11], 12), parse_real(tokens[12], 13), parse_real(tokens[13], 14)};
  label.rotation_y = parse_real(tokens[14], 15);
  if (n == kPredictionFields) label.score = parse_real(tokens[15], 16);

  if (label.bbox.x1 > label.bbox.x2) throw ParseError("field 7: x2 < x1", 7);
  if (label.bbox.y1 > label.bbox.y2) throw ParseError("field 8: y2 < y1", 8);
  if (!label.is_dont_care()) {
    const double dims[3] = {label.dims.h, label.dims.w, label.dims.l};
    for (int k = 0; k < 3; ++k) {
      if (!(dims[k] > 0.0)) {
        throw ParseError("field " + std::to_string(9 + k) + ": dimension must be positive", 9 + k);
      }
    }
  }
  return label;
}

std::vector<ObjectLabel> parse_label_file(std::string_view text) {
  std::vector<ObjectLabel> labels;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    ++line_no;
    if (!split_whitespace(line).empty()) {
      try {
        labels.push_back(parse_label_line(line));
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), e.field());
      }
    }
    pos = end + 1;
  }
  return labels;
}

std::string serialize_label(const ObjectLabel& l) {
  std::string out;
  out.reserve(128);
  out += l.class_name;
  out += ' ' + format_real(l.truncation);
  out += ' ' + std::to_string(l.occlusion);
  out += ' ' + format_real(l.alpha);
  for (double v : {l.bbox.x1, l.bbox.y1, l.bbox.x2, l.bbox.y2}) out += ' ' + format_real(v);
  for (double v : {l.dims.h, l.dims.w, l.dims.l}) out += ' ' + format_real(v);
  for (double v : {l.location.x, l.location.y, l.location.z}) out += ' ' + format_real(v);
  out += ' ' + format_real(l.rotation_y);
  if (l.score) out += ' ' + format_real(*l.score);
  return out;
}

std::string serialize_prediction(const ObjectLabel& label) {
  if (!label.score) throw InputError("prediction for class '" + label.class_name + "' has no score");
  return serialize_label(label);
}

CameraCalibration parse_calibration(std::string_view text, int image_width, int image_height) {
  size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto tokens = split_whitespace(text.substr(pos, end - pos));
    pos = end + 1;
    if (tokens.empty() || tokens[0] != "P2:") continue;
    if (tokens.size() != 13) {
      throw ParseError("P2: expected 12 values, got " + std::to_string(tokens.size() - 1));
    }
    CameraCalibration calib;
    calib.image_width = image_width;
    calib.image_height = image_height;
    for (int k = 0; k < 12; ++k) calib.P[k / 4][k % 4] = parse_real(tokens[k + 1], k + 2);
    return calib;
  }
  throw ParseError("calibration has no P2: line");
}

std::string serialize_calibration(const CameraCalibration& calib) {
  auto row = [&](std::string_view key, const ProjectionMatrix& P) {
    std::string s(key);
    for (const auto& r : P)
      for (double v : r) s += ' ' + format_real(v);
    return s + '\n';
  };
  std::string out;
  for (auto key : {"P0:", "P1:", "P2:", "P3:"}) out += row(key, calib.P);
  out += "R0_rect: 1.00 0.00 0.00 0.00 1.00 0.00 0.00 0.00 1.00\n";
  return out;
}

SplitList parse_split(std::string_view text) {
  SplitList split;
  for (auto token : split_whitespace(text)) {
    int id = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
    if (ec != std::errc() || ptr != token.data() + token.size() || id < 0) {
      throw ParseError("split: invalid frame id '" + std::string(token) + "'");
    }
    split.frame_ids.push_back(id);
  }
  std::sort(split.frame_ids.begin(), split.frame_ids.end());
  const auto dup = std::adjacent_find(split.frame_ids.begin(), split.frame_ids.end());
  if (dup != split.frame_ids.end()) throw ParseError("split: duplicate frame id " + frame_name(*dup));
  return split;
}

std::string serialize_split(const SplitList& split) {
  std::string out;
  for (int id : split.frame_ids) out += frame_name(id) + '\n';
  return out;
}

std::string frame_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return buf;
}

std::vector<int> list_frame_ids(const std::filesystem::path& dir) {
  std::vector<int> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const auto stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; }))
      continue;
    ids.push_back(std::stoi(stem));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Frame> load_dataset(const std::filesystem::path& label_dir,
                                const std::filesystem::path& calib_dir, const SplitList& split) {
  std::vector<Frame> frames;
  frames.reserve(split.frame_ids.size());
  for (int id : split.frame_ids) {
    const auto name = frame_name(id) + ".txt";
    const auto label_path = label_dir / name;
    const auto calib_path = calib_dir / name;
    if (!std::filesystem::exists(label_path))
      throw InputError("frame " + frame_name(id) + ": missing label file " + label_path.string());
    if (!std::filesystem::exists(calib_path))
      throw InputError("frame " + frame_name(id) + ": missing calibration file " + calib_path.string());
    Frame frame;
    frame.id = id;
    try {
      frame.labels = parse_label_file(read_text_file(label_path));
      frame.calib = parse_calibration(read_text_file(calib_path));
    } catch (const ParseError& e) {
      throw ParseError("frame " + frame_name(id) + ": " + e.what(), e.field());
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace center3d

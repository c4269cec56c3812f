#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "center3d/bev_eval.hpp"
#include "center3d/raw_heads_json.hpp"
#include "center3d/synth.hpp"
#include "center3d/target_codec.hpp"

namespace center3d::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

/// Codec flags shared by several subcommands.
struct CodecOptions {
  std::string codec = "lid";
  double d_min = 1.0;
  double d_max = 91.0;
  double shift = 0.0;
  int bins = 80;
  double alpha = 0.7;
  double beta = 0.3;
  double dj_min = 0.0;
  double dj_max = 60.0;
  std::optional<double> gamma;
  int stride = 4;
};

/// Validates flags and builds the library configuration.
CodecConfig make_codec_config(const CodecOptions& options);

struct EvalOptions {
  std::filesystem::path gt_dir;
  std::filesystem::path pred_dir;
  std::optional<std::filesystem::path> calib_dir;
  std::optional<std::filesystem::path> split_file;
  std::filesystem::path output_json;
  std::optional<std::filesystem::path> pr_csv;
  std::vector<std::string> metrics = {"2d", "bev", "3d"};
  double iou_threshold = 0.7;
  std::string class_name = "Car";
  bool ignore_neighbor_classes = true;
  int jobs = 1;
};

struct CodecTableOptions {
  CodecOptions codec;
};

struct DepthHistOptions {
  std::filesystem::path label_dir;
  double bin_width = 5.0;
  std::string class_name = "Car";
};

struct CodecRoundtripOptions {
  CodecOptions codec;
  int samples = 1000;
};

struct SynthOptions {
  std::filesystem::path out_dir;
  int frames = 10;
  std::uint64_t seed = 0;
  SceneSpec scene;
  std::optional<NoiseModel> predictions;
  int jobs = 1;
};

struct EncodeOptions {
  std::filesystem::path label_dir;
  std::filesystem::path calib_dir;
  std::filesystem::path out_dir;
  CodecOptions codec;
  int jobs = 1;
};

struct DecodeOptionsCli {
  std::filesystem::path heads;
  std::filesystem::path calib_dir;
  std::filesystem::path out_dir;
  CodecOptions codec;
  bool use_offset3d = true;
  int jobs = 1;
};

/// Each command writes human-readable output to `out` and diagnostics to
/// `err`, and returns an exit code: 0 success, 1 internal, 2 input error.
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_codec_table(const CodecTableOptions& options, std::ostream& out, std::ostream& err);
int cmd_depth_hist(const DepthHistOptions& options, std::ostream& out, std::ostream& err);
int cmd_codec_roundtrip(const CodecRoundtripOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);
int cmd_encode(const EncodeOptions& options, std::ostream& out, std::ostream& err);
int cmd_decode(const DecodeOptionsCli& options, std::ostream& out, std::ostream& err);

/// JSON document written by `eval`.
nlohmann::json eval_report_json(std::span<const EvalReport> reports, int num_frames);

/// Runs `body(i)` for i in [0, n) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown after all threads join.
void parallel_for(int n, int jobs, const std::function<void(int)>& body);

/// Maps library exceptions to exit codes, printing the message to `err`.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace center3d::cli

// Command-line front end: evaluation, codec analysis, synthetic data and
// raw-head decoding.

#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "center3d/commands.hpp"

namespace {

using namespace center3d;
using namespace center3d::cli;

void add_codec_flags(CLI::App* app, CodecOptions& c) {
  app->add_option("--codec", c.codec, "Depth codec: eigen, sid, lid, depjoint")->capture_default_str();
  app->add_option("--d-min", c.d_min, "SID/LID minimum depth before shift (m)")->capture_default_str();
  app->add_option("--d-max", c.d_max, "SID/LID maximum depth before shift (m)")->capture_default_str();
  app->add_option("--shift", c.shift, "SID/LID depth shift xi (m)")->capture_default_str();
  app->add_option("--bins", c.bins, "SID/LID bin count N")->capture_default_str();
  app->add_option("--alpha", c.alpha, "DepJoint near-bin scale")->capture_default_str();
  app->add_option("--beta", c.beta, "DepJoint far-bin scale")->capture_default_str();
  app->add_option("--dj-min", c.dj_min, "DepJoint minimum depth (m)")->capture_default_str();
  app->add_option("--dj-max", c.dj_max, "DepJoint maximum depth (m)")->capture_default_str();
  app->add_option("--gamma", c.gamma, "Reference-area scale; enables reference areas");
  app->add_option("--stride", c.stride, "Output stride R")->capture_default_str();
}

void add_noise_flags(CLI::App* app, NoiseModel& n) {
  app->add_option("--center-sigma", n.center_px_sigma, "2D center jitter (px)");
  app->add_option("--depth-sigma", n.depth_rel_sigma, "Relative depth jitter");
  app->add_option("--yaw-sigma", n.yaw_sigma, "Yaw jitter (rad)");
  app->add_option("--dim-sigma", n.dim_rel_sigma, "Relative dimension jitter");
  app->add_option("--fp-rate", n.fp_rate, "False positives per object");
  app->add_option("--fn-rate", n.fn_rate, "Miss probability");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"center3d: monocular 3D detection codecs, geometry and KITTI evaluation"};
  app.require_subcommand(1);

  EvalOptions eval;
  std::string calib_dir, split_file, pr_csv;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate KITTI predictions (11-point AP)");
  eval_cmd->add_option("--gt", eval.gt_dir, "Ground-truth label directory")->required();
  eval_cmd->add_option("--pred", eval.pred_dir, "Prediction directory (16-field lines)")->required();
  eval_cmd->add_option("--calib", calib_dir, "Calibration directory (checked for completeness)");
  eval_cmd->add_option("--split", split_file, "Split file restricting the frame set");
  eval_cmd->add_option("--out", eval.output_json, "Report JSON path")->required();
  eval_cmd->add_option("--pr-csv", pr_csv, "Optional PR-curve CSV path");
  eval_cmd->add_option("--metric", eval.metrics, "Metrics: 2d, bev, 3d")->capture_default_str();
  eval_cmd->add_option("--iou", eval.iou_threshold, "IoU threshold")->capture_default_str();
  eval_cmd->add_option("--class", eval.class_name, "Class to evaluate")->capture_default_str();
  bool count_neighbors = false;
  eval_cmd->add_flag("--count-neighbor-classes", count_neighbors,
                     "Treat detections on Van (for Car) as false positives");
  eval_cmd->add_option("--jobs", eval.jobs, "Worker threads")->capture_default_str();

  CodecTableOptions table;
  auto* table_cmd = app.add_subcommand("codec-table", "CSV of depth bins (index, lo, hi, width)");
  add_codec_flags(table_cmd, table.codec);

  DepthHistOptions hist;
  auto* hist_cmd = app.add_subcommand("depth-hist", "CSV histogram of object depths");
  hist_cmd->add_option("--labels", hist.label_dir, "Label directory")->required();
  hist_cmd->add_option("--bin-width", hist.bin_width, "Bin width (m)")->capture_default_str();
  hist_cmd->add_option("--class", hist.class_name, "Class to count")->capture_default_str();

  CodecRoundtripOptions roundtrip;
  auto* rt_cmd = app.add_subcommand("codec-roundtrip", "CSV of LID/SID reconstruction error per depth");
  add_codec_flags(rt_cmd, roundtrip.codec);
  rt_cmd->add_option("--samples", roundtrip.samples, "Grid points over [d_min, d_max]")->capture_default_str();

  SynthOptions synth;
  NoiseModel noise;
  bool with_predictions = false;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic KITTI-format dataset");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--frames", synth.frames, "Number of frames")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--min-objects", synth.scene.min_objects)->capture_default_str();
  synth_cmd->add_option("--max-objects", synth.scene.max_objects)->capture_default_str();
  synth_cmd->add_option("--depth-min", synth.scene.depth.lo)->capture_default_str();
  synth_cmd->add_option("--depth-max", synth.scene.depth.hi)->capture_default_str();
  synth_cmd->add_option("--lateral-min", synth.scene.lateral.lo)->capture_default_str();
  synth_cmd->add_option("--lateral-max", synth.scene.lateral.hi)->capture_default_str();
  synth_cmd->add_flag("--predictions", with_predictions, "Also write perturbed predictions to <out>/pred");
  add_noise_flags(synth_cmd, noise);
  synth_cmd->add_option("--jobs", synth.jobs)->capture_default_str();

  EncodeOptions encode;
  auto* encode_cmd = app.add_subcommand("encode", "Write ideal raw-head JSON for labelled frames");
  encode_cmd->add_option("--labels", encode.label_dir)->required();
  encode_cmd->add_option("--calib", encode.calib_dir)->required();
  encode_cmd->add_option("--out", encode.out_dir)->required();
  add_codec_flags(encode_cmd, encode.codec);
  encode_cmd->add_option("--jobs", encode.jobs)->capture_default_str();

  DecodeOptionsCli decode;
  bool no_offset3d = false;
  auto* decode_cmd = app.add_subcommand("decode", "Decode raw-head JSON into KITTI predictions");
  decode_cmd->add_option("--heads", decode.heads, "JSON file or directory of per-frame JSON")->required();
  decode_cmd->add_option("--calib", decode.calib_dir)->required();
  decode_cmd->add_option("--out", decode.out_dir)->required();
  decode_cmd->add_flag("--no-offset3d", no_offset3d, "Ignore the 3D center offset (2D center = 3D center)");
  add_codec_flags(decode_cmd, decode.codec);
  decode_cmd->add_option("--jobs", decode.jobs)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  return run_guarded(
      [&]() -> int {
        if (*eval_cmd) {
          if (!calib_dir.empty()) eval.calib_dir = calib_dir;
          if (!split_file.empty()) eval.split_file = split_file;
          if (!pr_csv.empty()) eval.pr_csv = pr_csv;
          eval.ignore_neighbor_classes = !count_neighbors;
          return cmd_eval(eval, std::cout, std::cerr);
        }
        if (*table_cmd) return cmd_codec_table(table, std::cout, std::cerr);
        if (*hist_cmd) return cmd_depth_hist(hist, std::cout, std::cerr);
        if (*rt_cmd) return cmd_codec_roundtrip(roundtrip, std::cout, std::cerr);
        if (*synth_cmd) {
          if (with_predictions) synth.predictions = noise;
          return cmd_synth(synth, std::cout, std::cerr);
        }
        if (*encode_cmd) return cmd_encode(encode, std::cout, std::cerr);
        if (*decode_cmd) {
          decode.use_offset3d = !no_offset3d;
          return cmd_decode(decode, std::cout, std::cerr);
        }
        return kExitInternal;
      },
      std::cerr);
}

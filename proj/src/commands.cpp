#include "center3d/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "center3d/error.hpp"
#include "center3d/kitti_io.hpp"
#include "center3d/raw_heads_json.hpp"

namespace center3d::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  jobs = std::clamp(jobs, 1, std::max(1, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::parse_error& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

CodecConfig make_codec_config(const CodecOptions& o) {
  CodecConfig cfg;
  cfg.codec = parse_depth_codec(o.codec);
  cfg.discretization.d_min_star = o.d_min;
  cfg.discretization.d_max_star = o.d_max;
  cfg.discretization.shift = o.shift;
  cfg.discretization.bins = o.bins;
  cfg.discretization.strategy = cfg.codec == DepthCodec::SID ? Discretization::SID : Discretization::LID;
  cfg.depjoint = {o.alpha, o.beta, o.dj_min, o.dj_max};
  if (o.gamma) cfg.reference_area = ReferenceAreaConfig{*o.gamma};
  if (o.stride < 1) throw RangeError("--stride must be >= 1");
  validate(cfg);
  return cfg;
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_dir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) throw InputError(std::string(what) + " is not a directory: " + dir.string());
}

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ' ';
    if (i == 20) return s + "... (" + std::to_string(ids.size()) + " total)";
    s += frame_name(ids[i]);
  }
  return s;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(precision) << v;
  return ss.str();
}

std::string fixed(double v, int decimals) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::fixed << std::setprecision(decimals) << v;
  return ss.str();
}

}  // namespace

json eval_report_json(std::span<const EvalReport> reports, int num_frames) {
  json metrics = json::object();
  json root = {{"schema_version", kSchemaVersion}, {"frames", num_frames}};
  if (!reports.empty()) {
    root["class"] = reports.front().class_name;
    root["iou_threshold"] = reports.front().iou_threshold;
    root["ap_interpolation"] = "11-point";
  }
  for (const auto& r : reports) {
    json per = json::object();
    for (Difficulty d : kDifficulties) {
      const auto& res = r.at(d);
      per[to_string(d)] = {{"ap", res.ap}, {"tp", res.tp}, {"fp", res.fp}, {"fn", res.fn}, {"num_gt", res.num_gt}};
    }
    metrics[to_string(r.metric)] = std::move(per);
  }
  root["metrics"] = std::move(metrics);
  return root;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  EvalConfig base;
  base.iou_threshold = o.iou_threshold;
  base.class_name = o.class_name;
  base.ignore_neighbor_classes = o.ignore_neighbor_classes;
  validate(base);
  std::vector<Metric> metrics;
  for (const auto& m : o.metrics) metrics.push_back(parse_metric(m));
  if (metrics.empty()) throw InputError("no metric selected");

  require_dir(o.gt_dir, "ground-truth directory");
  require_dir(o.pred_dir, "prediction directory");

  std::vector<int> ids = o.split_file ? parse_split(read_text_file(*o.split_file)).frame_ids : list_frame_ids(o.gt_dir);
  std::vector<int> missing_gt;
  for (int id : ids)
    if (!fs::exists(o.gt_dir / (frame_name(id) + ".txt"))) missing_gt.push_back(id);
  if (!missing_gt.empty()) {
    err << "error: ground truth missing for frames: " << join_ids(missing_gt) << '\n';
    return kExitInput;
  }
  // An empty prediction directory means "no detections"; otherwise the
  // frame sets must agree exactly.
  const std::vector<int> pred_ids = list_frame_ids(o.pred_dir);
  if (!pred_ids.empty()) {
    std::vector<int> only_gt, only_pred;
    std::set_difference(ids.begin(), ids.end(), pred_ids.begin(), pred_ids.end(), std::back_inserter(only_gt));
    if (!o.split_file)
      std::set_difference(pred_ids.begin(), pred_ids.end(), ids.begin(), ids.end(), std::back_inserter(only_pred));
    if (!only_gt.empty() || !only_pred.empty()) {
      if (!only_gt.empty()) err << "error: predictions missing for frames: " << join_ids(only_gt) << '\n';
      if (!only_pred.empty()) err << "error: predictions for unknown frames: " << join_ids(only_pred) << '\n';
      return kExitInput;
    }
  }
  if (o.calib_dir) {
    std::vector<int> missing;
    for (int id : ids)
      if (!fs::exists(*o.calib_dir / (frame_name(id) + ".txt"))) missing.push_back(id);
    if (!missing.empty()) {
      err << "error: calibration missing for frames: " << join_ids(missing) << '\n';
      return kExitInput;
    }
  }

  const int n = static_cast<int>(ids.size());
  std::vector<std::vector<ObjectLabel>> gts(n), dets(n);
  parallel_for(n, o.jobs, [&](int i) {
    const auto name = frame_name(ids[i]) + ".txt";
    try {
      gts[i] = parse_label_file(read_text_file(o.gt_dir / name));
      if (!pred_ids.empty()) dets[i] = parse_label_file(read_text_file(o.pred_dir / name));
    } catch (const ParseError& e) {
      throw ParseError("frame " + frame_name(ids[i]) + ": " + e.what(), e.field());
    }
    for (const auto& d : dets[i])
      if (!d.score) throw InputError("frame " + frame_name(ids[i]) + ": prediction without score");
  });

  std::vector<EvalReport> reports;
  for (Metric m : metrics) {
    EvalConfig cfg = base;
    cfg.metric = m;
    reports.push_back(evaluate(gts, dets, cfg));
  }

  ensure_dir(o.output_json.has_parent_path() ? o.output_json.parent_path() : fs::path("."));
  write_text_file_atomic(o.output_json, eval_report_json(reports, n).dump(2) + "\n");
  if (o.pr_csv) {
    std::string csv = "metric,difficulty,recall,precision\n";
    for (const auto& r : reports)
      for (Difficulty d : kDifficulties)
        for (const auto& p : r.at(d).pr_curve)
          csv += std::string(to_string(r.metric)) + ',' + to_string(d) + ',' + fmt(p.recall, 17) + ',' +
                 fmt(p.precision, 17) + '\n';
    write_text_file_atomic(*o.pr_csv, csv);
  }

  out << "class " << o.class_name << ", IoU " << fmt(o.iou_threshold) << ", " << n << " frames, 11-point AP (%)\n";
  out << std::left << std::setw(8) << "metric" << std::right << std::setw(10) << "easy" << std::setw(10)
      << "moderate" << std::setw(10) << "hard" << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(8) << to_string(r.metric) << std::right;
    for (Difficulty d : kDifficulties) out << std::setw(10) << fixed(100.0 * r.at(d).ap, 2);
    out << '\n';
  }
  return kExitOk;
}

int cmd_codec_table(const CodecTableOptions& o, std::ostream& out, std::ostream&) {
  const CodecConfig cfg = make_codec_config(o.codec);
  out << "index,lo,hi,width\n";
  if (cfg.codec == DepthCodec::DepJoint) {
    const auto [b1, b2] = depjoint_bins(cfg.depjoint);
    out << "0," << fmt(b1.lo, 17) << ',' << fmt(b1.hi, 17) << ',' << fmt(b1.hi - b1.lo, 17) << '\n';
    out << "1," << fmt(b2.lo, 17) << ',' << fmt(b2.hi, 17) << ',' << fmt(b2.hi - b2.lo, 17) << '\n';
    return kExitOk;
  }
  if (cfg.codec == DepthCodec::Eigen) throw InputError("the eigen codec has no bins; use sid, lid or depjoint");
  for (const auto& bin : bin_table(cfg.discretization)) {
    out << bin.index << ',' << fmt(bin.lo, 17) << ',' << fmt(bin.hi, 17) << ',' << fmt(bin.width(), 17) << '\n';
  }
  return kExitOk;
}

int cmd_depth_hist(const DepthHistOptions& o, std::ostream& out, std::ostream&) {
  if (!(o.bin_width > 0.0) || !std::isfinite(o.bin_width)) throw RangeError("--bin-width must be positive");
  require_dir(o.label_dir, "label directory");
  std::map<long, long> counts;
  for (int id : list_frame_ids(o.label_dir)) {
    for (const auto& l : parse_label_file(read_text_file(o.label_dir / (frame_name(id) + ".txt")))) {
      if (l.class_name != o.class_name) continue;
      ++counts[static_cast<long>(std::floor(l.location.z / o.bin_width))];
    }
  }
  out << "lo,hi,count\n";
  if (counts.empty()) return kExitOk;
  const long first = std::min(0L, counts.begin()->first);
  const long last = counts.rbegin()->first;
  for (long b = first; b <= last; ++b) {
    const auto it = counts.find(b);
    out << fmt(b * o.bin_width, 17) << ',' << fmt((b + 1) * o.bin_width, 17) << ','
        << (it == counts.end() ? 0 : it->second) << '\n';
  }
  return kExitOk;
}

int cmd_codec_roundtrip(const CodecRoundtripOptions& o, std::ostream& out, std::ostream&) {
  if (o.samples < 2) throw RangeError("--samples must be >= 2");
  CodecOptions base = o.codec;
  base.codec = "lid";
  const DiscretizationConfig lid = make_codec_config(base).discretization;
  base.codec = "sid";
  const DiscretizationConfig sid = make_codec_config(base).discretization;
  const auto lid_table = bin_table(lid);
  const auto sid_table = bin_table(sid);

  out << "depth,lid_bin,lid_median_error,lid_residual_error,sid_bin,sid_median_error,sid_residual_error\n";
  for (int i = 0; i < o.samples; ++i) {
    const double d = lid.d_min_star + (lid.d_max_star - lid.d_min_star) * i / (o.samples - 1.0);
    out << fmt(d, 17);
    for (const auto* cfg : {&lid, &sid}) {
      const auto& table = cfg == &lid ? lid_table : sid_table;
      const int bin = bin_index(d, *cfg);
      const double median_err = std::abs(table[bin].median() - d);
      const double residual_err = std::abs(decode_depth(encode_depth(d, *cfg).continuous(), *cfg) - d);
      out << ',' << bin << ',' << fmt(median_err, 17) << ',' << fmt(residual_err, 17);
    }
    out << '\n';
  }
  return kExitOk;
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream&) {
  if (o.frames < 0) throw RangeError("--frames must be >= 0");
  validate(o.scene);
  if (o.predictions) validate(*o.predictions);
  const fs::path label_dir = o.out_dir / "label_2";
  const fs::path calib_dir = o.out_dir / "calib";
  const fs::path pred_dir = o.out_dir / "pred";
  ensure_dir(label_dir);
  ensure_dir(calib_dir);
  if (o.predictions) ensure_dir(pred_dir);

  std::vector<int> objects(o.frames, 0);
  parallel_for(o.frames, o.jobs, [&](int i) {
    SceneSpec spec = o.scene;
    spec.seed = o.seed;
    spec.frame_id = i;
    const Scene scene = generate_scene(spec);
    std::string labels;
    for (const auto& l : scene.labels) labels += serialize_label(l) + '\n';
    const auto name = frame_name(i) + ".txt";
    write_text_file_atomic(label_dir / name, labels);
    write_text_file_atomic(calib_dir / name, serialize_calibration(scene.calib));
    if (o.predictions) {
      std::string preds;
      for (const auto& d : perturb(scene.labels, scene.calib, *o.predictions, o.seed, i))
        preds += serialize_prediction(d) + '\n';
      write_text_file_atomic(pred_dir / name, preds);
    }
    objects[i] = static_cast<int>(scene.labels.size());
  });
  SplitList split;
  for (int i = 0; i < o.frames; ++i) split.frame_ids.push_back(i);
  write_text_file_atomic(o.out_dir / "split.txt", serialize_split(split));

  long total = 0;
  for (int c : objects) total += c;
  out << "wrote " << o.frames << " frames (" << total << " objects) to " << o.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_encode(const EncodeOptions& o, std::ostream& out, std::ostream&) {
  const CodecConfig cfg = make_codec_config(o.codec);
  require_dir(o.label_dir, "label directory");
  require_dir(o.calib_dir, "calibration directory");
  SplitList split{list_frame_ids(o.label_dir)};
  const auto frames = load_dataset(o.label_dir, o.calib_dir, split);
  ensure_dir(o.out_dir);

  std::atomic<long> dropped{0};
  parallel_for(static_cast<int>(frames.size()), o.jobs, [&](int i) {
    const Frame& f = frames[i];
    RawHeadsFrame heads;
    heads.frame_id = f.id;
    heads.meta = {f.calib.image_width, f.calib.image_height, o.codec.stride};
    heads.codec = cfg.codec;
    const FrameTargets targets = encode_targets(f.labels, f.calib, heads.meta, cfg);
    dropped += targets.dropped_outside_grid + targets.dropped_depth_range;
    heads.instances = ideal_heads(targets, cfg);
    write_text_file_atomic(o.out_dir / (frame_name(f.id) + ".json"), to_json(heads).dump() + "\n");
  });
  out << "encoded " << frames.size() << " frames, dropped " << dropped.load() << " instances\n";
  return kExitOk;
}

int cmd_decode(const DecodeOptionsCli& o, std::ostream& out, std::ostream&) {
  const CodecConfig cfg = make_codec_config(o.codec);
  require_dir(o.calib_dir, "calibration directory");
  std::vector<fs::path> files;
  if (fs::is_directory(o.heads)) {
    for (const auto& e : fs::directory_iterator(o.heads))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(o.heads)) {
    files.push_back(o.heads);
  } else {
    throw InputError("raw heads path does not exist: " + o.heads.string());
  }
  ensure_dir(o.out_dir);

  DecodeOptions decode_options;
  decode_options.use_offset3d = o.use_offset3d;
  parallel_for(static_cast<int>(files.size()), o.jobs, [&](int i) {
    RawHeadsFrame frame;
    try {
      frame = raw_heads_from_json(json::parse(read_text_file(files[i])));
    } catch (const InputError& e) {
      throw InputError(files[i].filename().string() + ": " + e.what());
    } catch (const json::parse_error& e) {
      throw InputError(files[i].filename().string() + ": malformed JSON: " + e.what());
    }
    if (frame.codec != cfg.codec) {
      throw InputError(files[i].filename().string() + ": /depth_codec: document uses '" +
                       depth_codec_name(frame.codec) + "' but --codec is '" + o.codec.codec + "'");
    }
    const auto calib_path = o.calib_dir / (frame_name(frame.frame_id) + ".txt");
    if (!fs::exists(calib_path)) throw InputError("frame " + frame_name(frame.frame_id) + ": missing calibration");
    const CameraCalibration calib = parse_calibration(read_text_file(calib_path));
    std::string text;
    for (const auto& obj : decode_objects(frame.instances, calib, frame.meta, cfg, decode_options))
      text += serialize_prediction(obj.label) + '\n';
    write_text_file_atomic(o.out_dir / (frame_name(frame.frame_id) + ".txt"), text);
  });
  out << "decoded " << files.size() << " frames\n";
  return kExitOk;
}

}  // namespace center3d::cli

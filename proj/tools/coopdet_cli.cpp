// Command-line front end: dataset generation, training, budgeted inference,
// evaluation, and padding/alignment inspection. All output is CSV or plain
// text; every command is deterministic given its flags and seeds.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coopdet/errors.hpp"
#include "coopdet/evalkit.hpp"
#include "coopdet/modalign.hpp"
#include "coopdet/runner.hpp"
#include "coopdet/simworld.hpp"
#include "coopdet/train.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw coopdet::MissingFileError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw coopdet::DataError("cannot write " + path);
  out << text;
}

coopdet::TrainConfig parse_train_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw coopdet::DataError("config parse error: " + std::string(e.what()));
  }
  coopdet::TrainConfig cfg;
  const std::vector<std::string> known = {"epochs", "batch_size", "lr",   "bank",
                                          "mode",   "preset",     "seed", "workers"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw coopdet::DataError("config: unknown key '" + key + "'");
    (void)value;
  }
  try {
    if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<int>();
    if (doc.contains("batch_size")) cfg.batch_size = doc["batch_size"].get<int>();
    if (doc.contains("lr")) cfg.lr = doc["lr"].get<float>();
    if (doc.contains("bank")) cfg.bank = doc["bank"].get<std::vector<int>>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("workers")) cfg.workers = doc["workers"].get<int>();
    if (doc.contains("preset")) cfg.preset = doc["preset"].get<std::string>();
    if (doc.contains("mode")) {
      const std::string m = doc["mode"].get<std::string>();
      if (m == "tma")
        cfg.mode = coopdet::AlignmentMode::tma;
      else if (m == "nma")
        cfg.mode = coopdet::AlignmentMode::nma;
      else
        throw coopdet::DataError("config: mode must be tma or nma");
    }
  } catch (const json::type_error& e) {
    throw coopdet::DataError("config type error: " + std::string(e.what()));
  }
  return cfg;
}

int cmd_gen(int scenes, std::uint64_t seed, bool occlusion, const std::string& out,
            const std::string& split, double ped_fraction) {
  if (scenes < 1) throw coopdet::DataError("gen: --scenes must be >= 1");
  coopdet::SceneParams params;
  params.occlusion = occlusion;
  params.pedestrian_fraction = ped_fraction;
  std::vector<coopdet::Frame> frames;
  frames.reserve(scenes);
  for (int i = 0; i < scenes; ++i)
    frames.push_back(coopdet::make_frame(i, seed, params));
  coopdet::write_dataset(out, split, seed, frames, params);
  std::cout << "wrote " << scenes << " frames to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& config,
              const std::string& out, const std::string& log) {
  const coopdet::TrainConfig cfg = parse_train_config(config);
  cfg.validate();
  auto [manifest, frames] = coopdet::read_dataset(data);
  (void)manifest;
  coopdet::CoopModel model =
      coopdet::make_model<float>(cfg.preset, cfg.bank, cfg.seed);
  const coopdet::TrainReport report = coopdet::train(frames, cfg, model);
  coopdet::save_coop_model(out, model);
  const std::string log_path = log.empty() ? out + ".train.csv" : log;
  write_file(log_path, report.to_csv());
  std::cout << "model " << out << " log " << log_path << "\n";
  return 0;
}

int cmd_infer(const std::string& model_path, const std::string& data,
              std::size_t budget, const std::string& mode, const std::string& out,
              double conf, double nms_iou, double drop_p, std::uint64_t channel_seed,
              int workers, bool solo) {
  coopdet::InferOptions opts;
  opts.budget = budget;
  if (mode == "tma")
    opts.mode = coopdet::AlignmentMode::tma;
  else if (mode == "nma")
    opts.mode = coopdet::AlignmentMode::nma;
  else
    throw CLI::ValidationError("--mode", "must be tma or nma");
  opts.conf_threshold = conf;
  opts.nms_iou = nms_iou;
  opts.drop_probability = drop_p;
  opts.channel_seed = channel_seed;
  opts.workers = workers;
  opts.cooperative = !solo;
  const coopdet::CoopModel model = coopdet::load_coop_model(model_path);
  auto [manifest, frames] = coopdet::read_dataset(data);
  (void)manifest;
  const std::vector<coopdet::FrameResult> results =
      coopdet::run_inference(model, frames, opts);
  write_file(out, coopdet::detections_to_csv(results));
  std::cout << "wrote " << results.size() << " frames to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& pred, const std::string& data, double iou,
             const std::string& out) {
  const std::vector<coopdet::FrameResult> results =
      coopdet::detections_from_csv(read_file(pred));
  auto [manifest, frames] = coopdet::read_dataset(data);
  (void)manifest;
  const std::map<int, coopdet::ClassEval> evals =
      coopdet::evaluate_detections(results, frames, iou);
  std::string report = "class,ap,tp,fp,fn,gt\n";
  std::string curves = "class,confidence,recall,precision\n";
  for (const auto& [cls, ev] : evals) {
    report += std::to_string(cls) + "," + coopdet::format_double(ev.ap) + "," +
              std::to_string(ev.tp) + "," + std::to_string(ev.fp) + "," +
              std::to_string(ev.fn) + "," + std::to_string(ev.gt) + "\n";
    for (const auto& pt : ev.curve)
      curves += std::to_string(cls) + "," + coopdet::format_double(pt.confidence) +
                "," + coopdet::format_double(pt.recall) + "," +
                coopdet::format_double(pt.precision) + "\n";
  }
  write_file(out, report);
  write_file(out + ".pr.csv", curves);
  std::cout << report;
  return 0;
}

int cmd_align(const std::string& extent_str, int k) {
  std::int64_t v[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t comma = extent_str.find(',', pos);
    if ((i < 3) == (comma == std::string::npos))
      throw CLI::ValidationError("--extent", "expected x0,y0,x1,y1");
    try {
      v[i] = std::stoll(extent_str.substr(pos, comma - pos));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--extent", "expected four integers");
    }
    pos = comma + 1;
  }
  const coopdet::PixelExtent extent{v[0], v[2], v[1], v[3]};  // flag is x0,y0,x1,y1
  const coopdet::PaddingSpec p = coopdet::mod_padding(extent, k);
  const coopdet::PixelExtent padded = coopdet::padded_extent(extent, p);
  const coopdet::FixelExtent fe = coopdet::fixel_origin(padded, k);
  std::cout << "p=(" << p.p_l << "," << p.p_r << "," << p.p_t << "," << p.p_b
            << ")\n";
  std::cout << "fixel origin=(" << fe.gx0 << "," << fe.gy0 << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative detection toolkit"};
  app.require_subcommand(1);

  int scenes = 8;
  std::uint64_t seed = 1;
  std::string occlusion = "on";
  std::string out_dir, split = "train";
  double ped_fraction = 0.25;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--scenes", scenes, "number of frames");
  gen->add_option("--seed", seed, "dataset seed");
  gen->add_option("--occlusion", occlusion, "on|off")
      ->check(CLI::IsMember({"on", "off"}));
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--split", split, "split name");
  gen->add_option("--ped-fraction", ped_fraction, "pedestrian fraction");

  std::string data_dir, config_path, model_out, log_path;
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--config", config_path, "JSON config file")->required();
  train->add_option("--out", model_out, "model output path")->required();
  train->add_option("--log", log_path, "training CSV path (default <out>.train.csv)");

  std::string model_path, infer_data, mode = "tma", infer_out;
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  double conf = 0.2, nms_iou = 0.5, drop_p = 0.0;
  std::uint64_t channel_seed = 7;
  int workers = 1;
  bool solo = false;
  auto* infer = app.add_subcommand("infer", "run budgeted inference");
  infer->add_option("--model", model_path, "model file")->required();
  infer->add_option("--data", infer_data, "dataset directory")->required();
  infer->add_option("--budget", budget, "message byte budget");
  infer->add_option("--mode", mode, "tma|nma")->check(CLI::IsMember({"tma", "nma"}));
  infer->add_option("--out", infer_out, "detections CSV path")->required();
  infer->add_option("--conf", conf, "confidence threshold");
  infer->add_option("--nms-iou", nms_iou, "NMS IoU threshold");
  infer->add_option("--drop", drop_p, "channel drop probability");
  infer->add_option("--channel-seed", channel_seed, "channel RNG seed");
  infer->add_option("--workers", workers, "worker thread count");
  infer->add_flag("--solo", solo, "disable the cooperative path");

  std::string pred_path, eval_data, eval_out;
  double iou = 0.7;
  auto* eval = app.add_subcommand("eval", "score detections against a dataset");
  eval->add_option("--pred", pred_path, "detections CSV")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--iou", iou, "matching IoU threshold");
  eval->add_option("--out", eval_out, "report CSV path")->required();

  std::string extent_str;
  int k = 16;
  auto* align = app.add_subcommand("align", "inspect padding for a pixel extent");
  align->add_option("--extent", extent_str, "x0,y0,x1,y1 pixel extent")->required();
  align->add_option("--k", k, "downsampling rate");

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen(scenes, seed, occlusion == "on", out_dir, split, ped_fraction);
    if (train->parsed()) return cmd_train(data_dir, config_path, model_out, log_path);
    if (infer->parsed())
      return cmd_infer(model_path, infer_data, budget, mode, infer_out, conf,
                       nms_iou, drop_p, channel_seed, workers, solo);
    if (eval->parsed()) return cmd_eval(pred_path, eval_data, iou, eval_out);
    if (align->parsed()) return cmd_align(extent_str, k);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const coopdet::ShapeError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const coopdet::NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const coopdet::DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

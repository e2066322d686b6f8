// SPDX-License-Identifier: Apache-2.0
// atfnet: dataset tooling, training, inference and evaluation.
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atf/checkpoint.hpp"
#include "atf/dataset.hpp"
#include "atf/error.hpp"
#include "atf/evaluate.hpp"
#include "atf/fixture.hpp"
#include "atf/flow.hpp"
#include "atf/image_io.hpp"
#include "atf/trainer.hpp"
#include "atf/version.hpp"

namespace fs = std::filesystem;
using namespace atf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::kConfig:
  case ErrorKind::kUsage:
    return kUsage;
  case ErrorKind::kShape:
  case ErrorKind::kChannel:
  case ErrorKind::kNumeric:
    return kRuntime;
  default:
    return kData;
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Paths a command creates; removed again unless the command succeeds.
class OutputGuard {
 public:
  void claim(const fs::path &p) {
    if (!p.empty() && !fs::exists(p))
      created_.push_back(p);
  }
  void commit() { created_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (const auto &p : created_)
      fs::remove_all(p, ec);
  }

 private:
  std::vector<fs::path> created_;
};

struct Manifest {
  std::string command;
  std::uint64_t digest = 0;
  std::uint64_t seed = 0;
  std::string started = utc_now();

  void write(const fs::path &path) const {
    if (path.has_parent_path())
      fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "command = " << command << '\n'
        << "config_digest = " << hex64(digest) << '\n'
        << "seed = " << seed << '\n'
        << "version = " << kVersion << '\n'
        << "started = " << started << '\n'
        << "finished = " << utc_now() << '\n';
    if (!out)
      fail(ErrorKind::kIo, "cannot write " + path.string());
  }
};

std::string join_args(int argc, char **argv) {
  std::string s = "atfnet";
  for (int i = 1; i < argc; ++i)
    s += std::string(" ") + argv[i];
  return s;
}

void write_text(const fs::path &path, const std::string &text) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out)
    fail(ErrorKind::kIo, "cannot write " + path.string());
}

// The test split when present, otherwise train (fixtures often have no test
// videos).
Split resolve_split(const fs::path &root, const std::string &requested) {
  if (requested != "auto")
    return parse_split(requested);
  if (fs::exists(root / "test"))
    return Split::kTest;
  std::cerr << "note: " << root.string() << " has no test split; using train\n";
  return Split::kTrain;
}

// --- options ---------------------------------------------------------------

struct Options {
  // dataset
  std::string root;
  std::string report;
  bool shallow = false;

  // fixture
  FixtureSpec fixture;
  std::string object = "square";

  // flow render
  std::string flow_in, image_out;

  // train
  std::string model_config, train_config, data, out, resume, preset;
  std::vector<std::string> sets;
  std::optional<std::size_t> epochs, max_steps;

  // infer / eval
  std::string checkpoint, pred, split = "auto";
  std::size_t size = 0;
  bool branch_maps = false;
};

std::string config_help() {
  return "\nModel config keys (file or --set model.<key>=<value>):\n"
         "  preset: tiny | default; applied before every other key\n" +
         schema_help(model_config_schema()) +
         "\nTrain config keys (file or --set train.<key>=<value>):\n" +
         schema_help(train_config_schema()) +
         "\nPrecedence: --set and dedicated flags > config file > defaults.\n";
}

// --- commands --------------------------------------------------------------

int run_validate(const Options &o) {
  const ValidationReport r = validate_layout(o.root, !o.shallow);
  for (const auto &issue : r.issues)
    std::cout << to_string(issue.kind) << ": " << issue.path.string() << ": " << issue.message
              << '\n';
  std::cout << (r.ok() ? "ok" : "invalid") << ": " << r.train.videos.size()
            << " train videos (" << r.train.frame_count() << " frames), "
            << r.test.videos.size() << " test videos (" << r.test.frame_count()
            << " frames), " << r.issues.size() << " issues\n";
  return r.ok() ? kOk : kData;
}

int run_stats(const Options &o, const Manifest &m, OutputGuard &guard) {
  std::vector<DatasetLayout> layouts;
  layouts.push_back(open_layout(o.root, Split::kTrain));
  if (fs::exists(fs::path(o.root) / "test"))
    layouts.push_back(open_layout(o.root, Split::kTest));
  const DatasetStats stats = dataset_stats(layouts);
  const std::string text = format_stats(stats);
  std::cout << text;
  if (o.report.empty())
    return kOk;
  const fs::path report(o.report);
  fs::path png = report;
  png.replace_extension(".center_bias.png");
  fs::path manifest = report;
  manifest += ".manifest.txt";
  guard.claim(report);
  guard.claim(png);
  guard.claim(manifest);
  write_text(report, text);
  write_gray8_png(png, stats.center_bias);
  m.write(manifest);
  return kOk;
}

int run_fixture(Options o, Manifest m, OutputGuard &guard) {
  if (o.object == "square")
    o.fixture.object = FixtureObject::kSquare;
  else if (o.object == "disc")
    o.fixture.object = FixtureObject::kDisc;
  else
    fail(ErrorKind::kUsage, "--object must be square or disc");
  guard.claim(o.out);
  const DatasetLayout layout = generate_fixture(o.fixture, o.out);
  m.seed = o.fixture.seed;
  m.write(fs::path(o.out) / "manifest.txt");
  std::cout << "wrote " << layout.videos.size() << " train videos x " << o.fixture.frames
            << " frames to " << o.out << '\n';
  return kOk;
}

int run_flow_render(const Options &o, OutputGuard &guard) {
  const Tensor flow = read_flow_file(o.flow_in);
  guard.claim(o.image_out);
  write_rgb_png(o.image_out, flow_to_color(flow));
  return kOk;
}

int run_train(const Options &o, Manifest m, OutputGuard &guard) {
  KeyValues model_kv, train_kv;
  if (!o.model_config.empty())
    model_kv = KeyValues::read(o.model_config);
  if (!o.train_config.empty())
    train_kv = KeyValues::read(o.train_config);
  if (!o.preset.empty())
    model_kv.set("preset", o.preset);
  for (const auto &s : o.sets) {
    const auto eq = s.find('=');
    const auto dot = s.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      fail(ErrorKind::kUsage, "--set expects model.<key>=<value> or train.<key>=<value>, got '" +
                                  s + "'");
    const std::string scope = s.substr(0, dot), key = s.substr(dot + 1, eq - dot - 1),
                      value = s.substr(eq + 1);
    if (scope == "model")
      model_kv.set(key, value);
    else if (scope == "train")
      train_kv.set(key, value);
    else
      fail(ErrorKind::kUsage, "--set scope must be model or train, got '" + scope + "'");
  }
  if (o.epochs)
    train_kv.set("epochs", std::to_string(*o.epochs));
  if (o.max_steps)
    train_kv.set("max_steps", std::to_string(*o.max_steps));

  const ModelConfig model_cfg = model_config_from(model_kv);
  const TrainConfig train_cfg = train_config_from(train_kv);
  const DatasetLayout layout = open_layout(o.data, Split::kTrain);

  std::optional<Checkpoint> resume;
  if (!o.resume.empty())
    resume = load_checkpoint(o.resume);

  guard.claim(o.out);
  const TrainOutputs result =
      train(model_cfg, train_cfg, layout, o.out, resume, [](const LogRecord &r) {
        std::cout << format_log_record(r) << '\n';
      });
  m.digest = fnv1a64(model_cfg.to_text() + train_cfg.to_text());
  m.seed = train_cfg.seed;
  m.write(fs::path(o.out) / "manifest.txt");
  std::cout << "final checkpoint at step " << result.final_checkpoint.step << ": "
            << (fs::path(o.out) / "final.ckpt").string() << '\n';
  return kOk;
}

AtfNet load_model(const fs::path &path) {
  const Checkpoint ckpt = load_checkpoint(path);
  AtfNet model(ckpt.config, ckpt.seed);
  restore_model(model, ckpt);
  return model;
}

int run_infer(const Options &o, Manifest m, OutputGuard &guard) {
  const AtfNet model = load_model(o.checkpoint);
  const DatasetLayout layout = open_layout(o.data, resolve_split(o.data, o.split));
  guard.claim(o.out);
  infer(model, layout, o.out, {o.size, o.branch_maps});
  m.digest = model.config().digest();
  m.seed = model.seed();
  m.write(fs::path(o.out) / "manifest.txt");
  std::cout << "wrote " << layout.frame_count() << " maps to " << o.out << '\n';
  return kOk;
}

int run_eval(const Options &o, const Manifest &m, OutputGuard &guard) {
  const DatasetLayout layout = open_layout(o.data, resolve_split(o.data, o.split));
  const MetricsReport report = evaluate_predictions(o.pred, layout);
  std::cout << format_report_table(report);
  const fs::path out(o.report);
  fs::path manifest = out;
  manifest += ".manifest.txt";
  guard.claim(out);
  guard.claim(manifest);
  write_text(out, format_report_keyvalues(report));
  m.write(manifest);
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"RGB-D video salient object detection: data, training, inference, evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto *dataset = app.add_subcommand("dataset", "Dataset layout checks and statistics");
  dataset->require_subcommand(1);
  auto *validate = dataset->add_subcommand("validate", "Report every layout violation");
  validate->add_option("root", o.root, "Dataset root")->required();
  validate->add_flag("--shallow", o.shallow, "Skip decoding rasters");
  auto *stats = dataset->add_subcommand("stats", "Object-size statistics and center bias");
  stats->add_option("root", o.root, "Dataset root")->required();
  stats->add_option("--out", o.report,
                    "Report file; the center-bias map goes to <report>.center_bias.png");

  auto *fixture = app.add_subcommand("fixture", "Synthetic datasets");
  fixture->require_subcommand(1);
  auto *generate = fixture->add_subcommand("generate", "Write a moving-object dataset");
  generate->add_option("--videos", o.fixture.videos, "Training videos")->capture_default_str();
  generate->add_option("--test-videos", o.fixture.test_videos, "Test videos")
      ->capture_default_str();
  generate->add_option("--frames", o.fixture.frames, "Frames per video")->capture_default_str();
  generate->add_option("--size", o.fixture.size, "Frame side in pixels")->capture_default_str();
  generate->add_option("--seed", o.fixture.seed, "Generator seed")->capture_default_str();
  generate->add_option("--object", o.object, "square | disc")->capture_default_str();
  generate->add_option("--radius", o.fixture.radius, "Object half-side or radius")
      ->capture_default_str();
  generate->add_option("--velocity-x", o.fixture.velocity_x, "Pixels per frame")
      ->capture_default_str();
  generate->add_option("--velocity-y", o.fixture.velocity_y, "Pixels per frame")
      ->capture_default_str();
  generate->add_option("out", o.out, "Output root")->required();

  auto *flow = app.add_subcommand("flow", "Optical flow utilities");
  flow->require_subcommand(1);
  auto *render = flow->add_subcommand("render", "Color-code a .flo file");
  render->add_option("in", o.flow_in, "Input .flo")->required();
  render->add_option("out", o.image_out, "Output PNG")->required();

  auto *train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--model-config", o.model_config, "Model config file");
  train_cmd->add_option("--train-config", o.train_config, "Training config file");
  train_cmd->add_option("--data", o.data, "Dataset root (train split)")->required();
  train_cmd->add_option("--out", o.out, "Run directory")->required();
  train_cmd->add_option("--set", o.sets, "Override: model.<key>=<value> or train.<key>=<value>");
  train_cmd->add_option("--preset", o.preset, "Model preset: tiny | default");
  train_cmd->add_option("--epochs", o.epochs, "Override train.epochs");
  train_cmd->add_option("--max-steps", o.max_steps, "Override train.max_steps");
  train_cmd->add_option("--resume", o.resume, "Continue from a checkpoint");
  train_cmd->footer(config_help());

  auto *infer_cmd = app.add_subcommand("infer", "Write saliency maps");
  infer_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  infer_cmd->add_option("--data", o.data, "Dataset root")->required();
  infer_cmd->add_option("--out", o.out, "Output directory")->required();
  infer_cmd->add_flag("--branch-maps", o.branch_maps, "Also write single-branch maps");
  infer_cmd->add_option("--split", o.split, "train | test | auto (test if present)")
      ->capture_default_str();
  infer_cmd->add_option("--size", o.size, "Network input side; 0 = model input_size")
      ->capture_default_str();

  auto *eval_cmd = app.add_subcommand("eval", "Score saved maps against ground truth");
  eval_cmd->add_option("--pred", o.pred, "Prediction root")->required();
  eval_cmd->add_option("--data", o.data, "Dataset root")->required();
  eval_cmd->add_option("--out", o.report, "Report file")->required();
  eval_cmd->add_option("--split", o.split, "train | test | auto (test if present)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    if (code != 0 && train_cmd->parsed())
      std::cerr << config_help();
    return code == 0 ? kOk : kUsage;
  }

  Manifest manifest;
  manifest.command = join_args(argc, argv);
  manifest.digest = fnv1a64(manifest.command);
  OutputGuard guard;
  try {
    int code = kOk;
    if (validate->parsed())
      code = run_validate(o);
    else if (stats->parsed())
      code = run_stats(o, manifest, guard);
    else if (generate->parsed())
      code = run_fixture(o, manifest, guard);
    else if (render->parsed())
      code = run_flow_render(o, guard);
    else if (train_cmd->parsed())
      code = run_train(o, manifest, guard);
    else if (infer_cmd->parsed())
      code = run_infer(o, manifest, guard);
    else if (eval_cmd->parsed())
      code = run_eval(o, manifest, guard);
    if (code == kOk)
      guard.commit();
    return code;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::kConfig && train_cmd->parsed())
      std::cerr << config_help();
    return exit_code(e.kind());
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

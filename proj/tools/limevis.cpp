// limevis command line. Talks to the engine only through limevis.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "limevis/limevis.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitPredictor = 4;

int exit_code_for(lv_status status) {
  switch (status) {
    case LV_OK: return kExitOk;
    case LV_ERR_INVALID_ARGUMENT:
    case LV_ERR_INVALID_PARAMS: return kExitUsage;
    case LV_ERR_EXTERNAL_PREDICTOR_FAILURE: return kExitPredictor;
    default: return kExitData;
  }
}

struct Failure {
  lv_status status;
};

void check(lv_status status, const char* what) {
  if (status == LV_OK) return;
  std::fprintf(stderr, "limevis: %s: %s (%s)\n", what, lv_last_error(), lv_status_name(status));
  throw Failure{status};
}

struct CString {
  char* p = nullptr;
  ~CString() { lv_string_free(p); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Dataset = Handle<lv_dataset, lv_dataset_free>;
using Model = Handle<lv_model, lv_model_free>;
using Predictor = Handle<lv_predictor, lv_predictor_free>;
using SessionH = Handle<lv_session, lv_session_free>;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::fprintf(stderr, "limevis: cannot write %s\n", path.c_str());
    throw Failure{LV_ERR_IO};
  }
}

struct DatasetArgs {
  std::string path;
  std::string format = "stl10";
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.path, "STL-10 *_X.bin file or directory, or a PPM directory")->required();
  cmd->add_option("--format", args.format, "Dataset format")
      ->check(CLI::IsMember({"stl10", "ppmdir", "stl10-binary", "ppm-directory"}));
}

struct PredictorArgs {
  std::string model;
  std::string external_cmd;
  std::string external_url;
  int timeout_ms = 30000;
  int epochs = 50;
  double lr = 0.1;
  std::uint64_t train_seed = 0;
};

void add_predictor_options(CLI::App* cmd, PredictorArgs& args, bool allow_training) {
  auto* model = cmd->add_option("--model", args.model, "Builtin model file (.lvm)");
  auto* ext_cmd = cmd->add_option("--external-cmd", args.external_cmd, "Shell command speaking the predictor protocol");
  auto* ext_url = cmd->add_option("--external-url", args.external_url, "HTTP predictor base URL");
  model->excludes(ext_cmd)->excludes(ext_url);
  ext_cmd->excludes(ext_url);
  cmd->add_option("--timeout-ms", args.timeout_ms, "External predictor timeout per request");
  if (allow_training) {
    cmd->add_option("--epochs", args.epochs, "Epochs when training a builtin model on the fly");
    cmd->add_option("--lr", args.lr, "Learning rate when training on the fly");
    cmd->add_option("--train-seed", args.train_seed, "Shuffle seed when training on the fly");
  }
}

void open_predictor(const PredictorArgs& args, const lv_dataset* ds, bool allow_training, Predictor& out) {
  if (!args.external_cmd.empty()) {
    check(lv_predictor_external_command(args.external_cmd.c_str(), args.timeout_ms, &out.p), "external predictor");
    return;
  }
  if (!args.external_url.empty()) {
    check(lv_predictor_external_url(args.external_url.c_str(), args.timeout_ms, &out.p), "external predictor");
    return;
  }
  Model model;
  if (!args.model.empty()) {
    check(lv_model_load(args.model.c_str(), &model.p), "load model");
  } else if (allow_training) {
    check(lv_model_train(ds, args.epochs, args.lr, args.train_seed, &model.p), "train model");
  } else {
    std::fprintf(stderr, "limevis: one of --model, --external-cmd, --external-url is required\n");
    throw Failure{LV_ERR_INVALID_ARGUMENT};
  }
  check(lv_predictor_builtin(model.p, ds, &out.p), "builtin predictor");
}

struct ExplainArgs {
  DatasetArgs data;
  PredictorArgs predictor;
  std::string category;
  std::string segmentation = "quickshift";
  int num_samples = 1000;
  int num_features = 5;
  bool positive_only = true;
  bool hide_rest = false;
  std::string hide_color = "mean";
  double kernel_width = 0.25;
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> shuffle_seed;
  int workers = 1;
  std::string out;
};

int run_explain(const ExplainArgs& a) {
  Dataset ds;
  check(lv_dataset_load(a.data.path.c_str(), a.data.format.c_str(), &ds.p), "load dataset");
  const int category = lv_dataset_find_category(ds.p, a.category.c_str());
  if (category < 0) {
    std::fprintf(stderr, "limevis: unknown category '%s'\n", a.category.c_str());
    return kExitUsage;
  }
  Predictor pred;
  open_predictor(a.predictor, ds.p, true, pred);

  lv_explain_config config;
  lv_explain_config_default(&config);
  if (a.segmentation == "slic") config.segmentation = LV_SEG_SLIC;
  else if (a.segmentation == "felzenszwalb") config.segmentation = LV_SEG_FELZENSZWALB;
  else config.segmentation = LV_SEG_QUICKSHIFT;
  config.num_samples = a.num_samples;
  config.num_features = a.num_features;
  config.positive_only = a.positive_only;
  config.hide_rest = a.hide_rest;
  config.kernel_width = a.kernel_width;
  config.ridge_lambda = a.ridge_lambda;
  config.seed = a.seed;
  if (a.hide_color == "black") {
    config.hide_mean_fill = 0;
  }

  lv_execute_options options;
  lv_execute_options_default(&options);
  options.workers = a.workers;
  if (a.shuffle_seed) {
    options.shuffle = 1;
    options.shuffle_seed = *a.shuffle_seed;
  }

  SessionH session;
  check(lv_session_execute(ds.p, category, &config, &options, pred.p, &session.p), "explain");

  const fs::path out_dir(a.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "limevis: cannot create %s: %s\n", out_dir.c_str(), ec.message().c_str());
    return kExitData;
  }
  const std::size_t n = lv_session_size(session.p);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = lv_session_image_id(session.p, i);
    CString json;
    check(lv_session_explanation_json(session.p, i, &json.p), "explanation");
    write_text(out_dir / ("explanation_" + std::to_string(id) + ".json"), json.p);
    std::uint8_t* ppm = nullptr;
    std::size_t len = 0;
    check(lv_session_lime_ppm(session.p, i, &ppm, &len), "render");
    std::string bytes(reinterpret_cast<const char*>(ppm), len);
    lv_buffer_free(ppm);
    write_text(out_dir / ("lime_" + std::to_string(id) + ".ppm"), bytes);
  }
  CString csv, summary;
  check(lv_session_embedding_csv(session.p, &csv.p), "embedding");
  write_text(out_dir / "embedding.csv", csv.p);
  check(lv_session_summary_json(session.p, ds.p, &summary.p), "summary");
  write_text(out_dir / "summary.json", summary.p);
  std::printf("%zu images explained, %zu misclassified, output in %s\n", n, lv_session_incorrect_count(session.p),
              out_dir.c_str());
  return kExitOk;
}

struct TrainArgs {
  DatasetArgs data;
  int epochs = 50;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_train(const TrainArgs& a) {
  Dataset ds;
  check(lv_dataset_load(a.data.path.c_str(), a.data.format.c_str(), &ds.p), "load dataset");
  Model model;
  check(lv_model_train(ds.p, a.epochs, a.lr, a.seed, &model.p), "train");
  const double* trace = nullptr;
  const std::size_t epochs = lv_model_loss_trace(model.p, &trace);
  for (std::size_t e = 0; e < epochs; ++e) std::printf("epoch %zu loss %.6f\n", e + 1, trace[e]);
  check(lv_model_save(model.p, a.out.c_str()), "save model");
  return kExitOk;
}

struct ServeArgs {
  DatasetArgs data;
  PredictorArgs predictor;
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 1;
};

int run_serve(const ServeArgs& a) {
  Dataset ds;
  check(lv_dataset_load(a.data.path.c_str(), a.data.format.c_str(), &ds.p), "load dataset");
  Predictor pred;
  open_predictor(a.predictor, ds.p, false, pred);
  std::printf("listening on http://%s:%d\n", a.host.c_str(), a.port);
  std::fflush(stdout);
  check(lv_serve(ds.p, pred.p, a.host.c_str(), a.port, a.workers), "serve");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limevis: LIME superpixel explanations for image classifiers"};
  app.require_subcommand(1);

  ExplainArgs explain;
  auto* ex = app.add_subcommand("explain", "Explain up to 100 images of one category");
  add_dataset_options(ex, explain.data);
  add_predictor_options(ex, explain.predictor, true);
  ex->add_option("--category", explain.category, "Category name")->required();
  ex->add_option("--segmentation", explain.segmentation)
      ->check(CLI::IsMember({"slic", "felzenszwalb", "quickshift"}));
  ex->add_option("--num-samples", explain.num_samples);
  ex->add_option("--num-features", explain.num_features);
  ex->add_option("--positive-only", explain.positive_only);
  ex->add_option("--hide-rest", explain.hide_rest);
  ex->add_option("--hide-color", explain.hide_color, "Sampling fill: mean or black")
      ->check(CLI::IsMember({"mean", "black"}));
  ex->add_option("--kernel-width", explain.kernel_width);
  ex->add_option("--ridge-lambda", explain.ridge_lambda);
  ex->add_option("--seed", explain.seed);
  ex->add_option("--shuffle-seed", explain.shuffle_seed, "Shuffle the category before taking 100");
  ex->add_option("--workers", explain.workers)->check(CLI::PositiveNumber);
  ex->add_option("--out", explain.out, "Output directory")->required();

  TrainArgs train;
  auto* tr = app.add_subcommand("train-builtin", "Train the builtin softmax classifier");
  add_dataset_options(tr, train.data);
  tr->add_option("--epochs", train.epochs);
  tr->add_option("--lr", train.lr);
  tr->add_option("--seed", train.seed);
  tr->add_option("--out", train.out, "Model file to write")->required();

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "Serve the HTTP API");
  add_dataset_options(sv, serve.data);
  add_predictor_options(sv, serve.predictor, false);
  sv->add_option("--host", serve.host);
  sv->add_option("--port", serve.port);
  sv->add_option("--workers", serve.workers)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ex->parsed()) return run_explain(explain);
    if (tr->parsed()) return run_train(train);
    if (sv->parsed()) return run_serve(serve);
  } catch (const Failure& f) {
    return exit_code_for(f.status);
  }
  return kExitUsage;
}

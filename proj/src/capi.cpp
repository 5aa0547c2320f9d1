#include "limevis/limevis.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "dataset.hpp"
#include "error.hpp"
#include "predictor.hpp"
#include "serialize.hpp"
#include "service.hpp"
#include "session.hpp"

using namespace limevis;

struct lv_dataset {
  LabeledDataset data;
};

struct lv_model {
  BuiltinModel model;
  std::vector<double> loss_trace;
};

struct lv_predictor {
  std::shared_ptr<Predictor> impl;
};

struct lv_session {
  Session session;
};

namespace {

thread_local std::string g_last_error;

lv_status fail(lv_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
lv_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return LV_OK;
  } catch (const Error& e) {
    return fail(static_cast<lv_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LV_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ExplainConfig to_config(const lv_explain_config& c) {
  ExplainConfig out;
  switch (c.segmentation) {
    case LV_SEG_SLIC: out.segmentation = SlicParams{c.slic_n_segments, c.slic_compactness, c.slic_max_iter}; break;
    case LV_SEG_FELZENSZWALB:
      out.segmentation = FelzenszwalbParams{c.felzenszwalb_scale, c.felzenszwalb_sigma, c.felzenszwalb_min_size};
      break;
    case LV_SEG_QUICKSHIFT:
      out.segmentation = QuickshiftParams{c.quickshift_ratio, c.quickshift_kernel_size, c.quickshift_max_dist};
      break;
    default: throw Error(ErrorCode::InvalidParams, "unknown segmentation algorithm");
  }
  out.num_samples = c.num_samples;
  out.kernel_width = c.kernel_width;
  out.ridge_lambda = c.ridge_lambda;
  out.positive_only = c.positive_only != 0;
  out.num_features = c.num_features;
  out.hide_rest = c.hide_rest != 0;
  if (c.hide_mean_fill)
    out.hide_color = MeanFill{};
  else
    out.hide_color = Rgb{c.hide_rgb[0], c.hide_rgb[1], c.hide_rgb[2]};
  out.seed = c.seed;
  validate(out);
  return out;
}

ExecuteOptions to_options(const lv_execute_options* o, std::uint64_t seed) {
  ExecuteOptions out;
  out.embedding.seed = seed;
  if (!o) return out;
  out.workers = o->workers;
  if (o->shuffle) out.shuffle_seed = o->shuffle_seed;
  out.embedding.n_neighbors = o->n_neighbors;
  out.embedding.mid_near_ratio = o->mid_near_ratio;
  out.embedding.far_pair_ratio = o->far_pair_ratio;
  out.embedding.iterations = o->iterations;
  out.embedding.learning_rate = o->learning_rate;
  return out;
}

const SessionEntry& entry_at(const lv_session* s, size_t index) {
  require(s != nullptr, "session is null");
  if (index >= s->session.entries().size()) throw Error(ErrorCode::IndexOutOfRange, "session index out of range");
  return s->session.entries()[index];
}

}  // namespace

extern "C" {

const char* lv_status_name(lv_status status) {
  if (status == LV_OK) return "OK";
  return error_code_name(static_cast<ErrorCode>(status));
}

const char* lv_last_error(void) { return g_last_error.c_str(); }

void lv_string_free(char* s) { std::free(s); }

void lv_buffer_free(uint8_t* buffer) { std::free(buffer); }

void lv_explain_config_default(lv_explain_config* config) {
  if (!config) return;
  const ExplainConfig d;
  const SlicParams slic;
  const FelzenszwalbParams fz;
  const QuickshiftParams qs;
  *config = lv_explain_config{};
  config->segmentation = LV_SEG_QUICKSHIFT;
  config->slic_n_segments = slic.n_segments;
  config->slic_compactness = slic.compactness;
  config->slic_max_iter = slic.max_iter;
  config->felzenszwalb_scale = fz.scale;
  config->felzenszwalb_sigma = fz.sigma;
  config->felzenszwalb_min_size = fz.min_size;
  config->quickshift_ratio = qs.ratio;
  config->quickshift_kernel_size = qs.kernel_size;
  config->quickshift_max_dist = qs.max_dist;
  config->num_samples = d.num_samples;
  config->kernel_width = d.kernel_width;
  config->ridge_lambda = d.ridge_lambda;
  config->positive_only = d.positive_only;
  config->num_features = d.num_features;
  config->hide_rest = d.hide_rest;
  config->hide_mean_fill = 1;
  config->seed = d.seed;
}

void lv_execute_options_default(lv_execute_options* options) {
  if (!options) return;
  const ExecuteOptions d;
  *options = lv_execute_options{};
  options->workers = d.workers;
  options->n_neighbors = d.embedding.n_neighbors;
  options->mid_near_ratio = d.embedding.mid_near_ratio;
  options->far_pair_ratio = d.embedding.far_pair_ratio;
  options->iterations = d.embedding.iterations;
  options->learning_rate = d.embedding.learning_rate;
}

lv_status lv_dataset_load(const char* path, const char* format, lv_dataset** out) {
  return guarded([&] {
    require(path && format && out, "null argument");
    *out = nullptr;
    auto ds = std::make_unique<lv_dataset>();
    ds->data = load_dataset(path, dataset_format_from_name(format));
    *out = ds.release();
  });
}

void lv_dataset_free(lv_dataset* dataset) { delete dataset; }

size_t lv_dataset_size(const lv_dataset* dataset) { return dataset ? dataset->data.size() : 0; }

int lv_dataset_class_count(const lv_dataset* dataset) { return dataset ? dataset->data.class_count() : 0; }

const char* lv_dataset_category_name(const lv_dataset* dataset, int category) {
  if (!dataset || category < 0 || category >= dataset->data.class_count()) return nullptr;
  return dataset->data.category_names[static_cast<std::size_t>(category)].c_str();
}

int lv_dataset_find_category(const lv_dataset* dataset, const char* name) {
  if (!dataset || !name) return -1;
  return dataset->data.find_category(name);
}

const char* lv_dataset_source(const lv_dataset* dataset) { return dataset ? dataset->data.source.c_str() : ""; }

lv_status lv_model_train(const lv_dataset* dataset, int epochs, double learning_rate, uint64_t seed, lv_model** out) {
  return guarded([&] {
    require(dataset && out, "null argument");
    *out = nullptr;
    TrainResult r = train_builtin(dataset->data, epochs, learning_rate, seed);
    *out = new lv_model{std::move(r.model), std::move(r.loss_trace)};
  });
}

size_t lv_model_loss_trace(const lv_model* model, const double** trace) {
  if (!model) return 0;
  if (trace) *trace = model->loss_trace.data();
  return model->loss_trace.size();
}

lv_status lv_model_save(const lv_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    write_file(path, save_model(model->model));
  });
}

lv_status lv_model_load(const char* path, lv_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new lv_model{load_model(read_file(path)), {}};
  });
}

void lv_model_free(lv_model* model) { delete model; }

lv_status lv_predictor_builtin(const lv_model* model, const lv_dataset* names_from, lv_predictor** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = nullptr;
    BuiltinModel m = model->model;
    if (names_from) {
      if (names_from->data.class_count() != m.class_count)
        throw Error(ErrorCode::DimensionMismatch, "model class count differs from the dataset's categories");
      m.class_names = names_from->data.category_names;
    }
    *out = new lv_predictor{std::make_shared<BuiltinPredictor>(std::move(m))};
  });
}

lv_status lv_predictor_external_command(const char* command, int timeout_ms, lv_predictor** out) {
  return guarded([&] {
    require(command && out, "null argument");
    *out = nullptr;
    const auto timeout = timeout_ms > 0 ? std::chrono::milliseconds(timeout_ms) : kDefaultExternalTimeout;
    *out = new lv_predictor{std::make_shared<ExternalPredictor>(spawn_subprocess_channel(command, timeout))};
  });
}

lv_status lv_predictor_external_url(const char* url, int timeout_ms, lv_predictor** out) {
  return guarded([&] {
    require(url && out, "null argument");
    *out = nullptr;
    const auto timeout = timeout_ms > 0 ? std::chrono::milliseconds(timeout_ms) : kDefaultExternalTimeout;
    *out = new lv_predictor{std::make_shared<ExternalPredictor>(http_channel(url, timeout))};
  });
}

int lv_predictor_class_count(const lv_predictor* predictor) {
  return predictor ? predictor->impl->class_count() : 0;
}

lv_status lv_predictor_predict(lv_predictor* predictor, const uint8_t* rgb, int width, int height, double* probs,
                               size_t capacity) {
  return guarded([&] {
    require(predictor && rgb && probs, "null argument");
    require(width > 0 && height > 0, "image dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
    const RgbImage image(width, height, std::vector<std::uint8_t>(rgb, rgb + n));
    const ClassProbabilities p = predictor->impl->predict(image);
    require(capacity >= p.probs.size(), "probability buffer too small");
    std::copy(p.probs.begin(), p.probs.end(), probs);
  });
}

void lv_predictor_free(lv_predictor* predictor) { delete predictor; }

lv_status lv_session_execute(const lv_dataset* dataset, int category, const lv_explain_config* config,
                             const lv_execute_options* options, lv_predictor* predictor, lv_session** out) {
  return guarded([&] {
    require(dataset && config && predictor && out, "null argument");
    *out = nullptr;
    const ExplainConfig cfg = to_config(*config);
    *out = new lv_session{Session::execute(dataset->data, category, cfg, predictor->impl, to_options(options, cfg.seed))};
  });
}

void lv_session_free(lv_session* session) { delete session; }

size_t lv_session_size(const lv_session* session) { return session ? session->session.entries().size() : 0; }

int lv_session_image_id(const lv_session* session, size_t index) {
  if (!session || index >= session->session.entries().size()) return -1;
  return session->session.entries()[index].image_id;
}

int lv_session_correct(const lv_session* session, size_t index) {
  if (!session || index >= session->session.entries().size()) return -1;
  return session->session.entries()[index].correct ? 1 : 0;
}

size_t lv_session_incorrect_count(const lv_session* session) {
  return session ? session->session.incorrect_count() : 0;
}

lv_status lv_session_explanation_json(const lv_session* session, size_t index, char** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const SessionEntry& e = entry_at(session, index);
    *out = dup_string(to_json(e.explanation, session->session.config()).dump(2) + "\n");
  });
}

lv_status lv_session_lime_ppm(const lv_session* session, size_t index, uint8_t** out, size_t* length) {
  return guarded([&] {
    require(out && length, "null argument");
    const auto bytes = write_ppm(entry_at(session, index).lime_image);
    auto* buf = static_cast<uint8_t*>(std::malloc(bytes.size()));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, bytes.data(), bytes.size());
    *out = buf;
    *length = bytes.size();
  });
}

lv_status lv_session_embedding_csv(const lv_session* session, char** out) {
  return guarded([&] {
    require(session && out, "null argument");
    *out = dup_string(embedding_csv(session->session));
  });
}

lv_status lv_session_summary_json(const lv_session* session, const lv_dataset* dataset, char** out) {
  return guarded([&] {
    require(session && dataset && out, "null argument");
    *out = dup_string(summary_json(session->session, dataset->data).dump(2) + "\n");
  });
}

lv_status lv_session_pixel_to_superpixel(const lv_session* session, int image_id, int x, int y, int* out) {
  return guarded([&] {
    require(session && out, "null argument");
    *out = session->session.pixel_to_superpixel(image_id, x, y);
  });
}

lv_status lv_session_toggle(lv_session* session, int image_id, int superpixel_id, double* probs, size_t capacity) {
  return guarded([&] {
    require(session != nullptr, "null argument");
    const ToggleResult r = session->session.toggle(image_id, superpixel_id);
    if (probs) {
      require(capacity >= r.current.probs.size(), "probability buffer too small");
      std::copy(r.current.probs.begin(), r.current.probs.end(), probs);
    }
  });
}

lv_status lv_session_reset(lv_session* session, int image_id) {
  return guarded([&] {
    require(session != nullptr, "null argument");
    session->session.reset(image_id);
  });
}

lv_status lv_serve(const lv_dataset* dataset, lv_predictor* predictor, const char* host, int port, int workers) {
  return guarded([&] {
    require(dataset && predictor && host, "null argument");
    ExecuteOptions options;
    options.workers = workers;
    Service service(dataset->data, predictor->impl, options);
    if (!service.serve(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + std::string(host) + ":" + std::to_string(port));
  });
}

}  // extern "C"

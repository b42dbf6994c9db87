#include "stablestyle/stablestyle.h"

#include <new>
#include <string>

#include "stablestyle/app/commands.hpp"
#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/eval/metrics.hpp"
#include "stablestyle/flow/flow.hpp"
#include "stablestyle/io/flo.hpp"
#include "stablestyle/io/image.hpp"
#include "stablestyle/io/weights.hpp"
#include "stablestyle/stylizer/stylizer.hpp"

struct sst_image {
  sst::Tensor tensor;
};
struct sst_flow {
  sst::FlowField flow;
};
struct sst_model {
  sst::RecurrentStylizer model;
};
struct sst_config {
  std::string command;
  sst::io::Config settings;
};

namespace {

thread_local std::string g_last_error;

template <class F>
sst_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return SST_OK;
  } catch (const sst::InvalidArgument& e) {
    g_last_error = e.what();
    return SST_ERR_INVALID_ARGUMENT;
  } catch (const sst::IoError& e) {
    g_last_error = e.what();
    return SST_ERR_IO;
  } catch (const sst::FormatError& e) {
    g_last_error = e.what();
    return SST_ERR_FORMAT;
  } catch (const sst::NumericError& e) {
    g_last_error = e.what();
    return SST_ERR_NUMERIC;
  } catch (const sst::StateError& e) {
    g_last_error = e.what();
    return SST_ERR_STATE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SST_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SST_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SST_ERR_INTERNAL;
  }
}

template <class T>
void need(const T* p, const char* what) {
  if (!p) throw sst::InvalidArgument(std::string(what) + " is NULL");
}

const sst::app::CommandSpec* command_at(std::size_t i) {
  const auto& specs = sst::app::command_specs();
  return i < specs.size() ? &specs[i] : nullptr;
}

}  // namespace

extern "C" {

const char* sst_status_name(sst_status status) {
  switch (status) {
    case SST_OK: return "ok";
    case SST_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SST_ERR_IO: return "io error";
    case SST_ERR_FORMAT: return "format error";
    case SST_ERR_NUMERIC: return "numeric error";
    case SST_ERR_STATE: return "state error";
    case SST_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sst_last_error(void) { return g_last_error.c_str(); }

int sst_status_is_validation(sst_status status) {
  return status == SST_ERR_INVALID_ARGUMENT || status == SST_ERR_IO || status == SST_ERR_FORMAT;
}

sst_status sst_image_create(size_t c, size_t h, size_t w, const double* data, sst_image** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    if (c != 1 && c != 3) throw sst::InvalidArgument("images have 1 or 3 channels");
    const std::size_t n = c * h * w;
    *out = new sst_image{sst::Tensor({c, h, w}, std::vector<double>(data, data + n))};
  });
}

sst_status sst_image_read(const char* path, sst_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sst_image{sst::io::read_image(path)};
  });
}

sst_status sst_image_write(const sst_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    sst::io::write_image(path, image->tensor);
  });
}

sst_status sst_image_shape(const sst_image* image, size_t* c, size_t* h, size_t* w) {
  return guarded([&] {
    need(image, "image");
    if (c) *c = image->tensor.dim(0);
    if (h) *h = image->tensor.dim(1);
    if (w) *w = image->tensor.dim(2);
  });
}

const double* sst_image_data(const sst_image* image) { return image ? image->tensor.values().data() : nullptr; }

void sst_image_free(sst_image* image) { delete image; }

sst_status sst_flow_create(size_t h, size_t w, const double* u, const double* v, sst_flow** out) {
  return guarded([&] {
    need(u, "u");
    need(v, "v");
    need(out, "out");
    sst::FlowField f{h, w, std::vector<double>(u, u + h * w), std::vector<double>(v, v + h * w)};
    if (h == 0 || w == 0) throw sst::InvalidArgument("flow extents must be positive");
    f.validate();
    *out = new sst_flow{std::move(f)};
  });
}

sst_status sst_flow_read(const char* path, sst_flow** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sst_flow{sst::io::read_flo(path)};
  });
}

sst_status sst_flow_write(const sst_flow* flow, const char* path) {
  return guarded([&] {
    need(flow, "flow");
    need(path, "path");
    sst::io::write_flo(path, flow->flow);
  });
}

sst_status sst_flow_shape(const sst_flow* flow, size_t* h, size_t* w) {
  return guarded([&] {
    need(flow, "flow");
    if (h) *h = flow->flow.height;
    if (w) *w = flow->flow.width;
  });
}

const double* sst_flow_u(const sst_flow* flow) { return flow ? flow->flow.u.data() : nullptr; }
const double* sst_flow_v(const sst_flow* flow) { return flow ? flow->flow.v.data() : nullptr; }
void sst_flow_free(sst_flow* flow) { delete flow; }

sst_status sst_psnr(const sst_image* a, const sst_image* b, double peak, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = sst::eval::psnr(a->tensor, b->tensor, peak);
  });
}

sst_status sst_ssim(const sst_image* a, const sst_image* b, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = sst::eval::ssim(a->tensor, b->tensor);
  });
}

sst_status sst_warp(const sst_image* frame, const sst_flow* flow, sst_image** out) {
  return guarded([&] {
    need(frame, "frame");
    need(flow, "flow");
    need(out, "out");
    sst::NoGradGuard no_grad;
    *out = new sst_image{sst::bilinear_warp(frame->tensor, flow->flow)};
  });
}

sst_status sst_temporal_loss(const sst_image* prev, const sst_image* cur, const sst_flow* flow,
                             const sst_image* mask, double* out) {
  return guarded([&] {
    need(prev, "prev");
    need(cur, "cur");
    need(flow, "flow");
    need(out, "out");
    sst::OcclusionMask m = sst::OcclusionMask::ones(flow->flow.height, flow->flow.width);
    if (mask) {
      const auto& t = mask->tensor;
      if (t.dim(0) != 1 || t.dim(1) != m.height || t.dim(2) != m.width) {
        throw sst::InvalidArgument("mask must be [1,H,W] matching the flow");
      }
      m.m.assign(t.values().begin(), t.values().end());
    }
    sst::NoGradGuard no_grad;
    *out = sst::temporal_loss(prev->tensor, cur->tensor, flow->flow, m).item();
  });
}

sst_status sst_model_load(const char* path, sst_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sst_model{sst::RecurrentStylizer::from_weights(sst::read_weights(path))};
  });
}

sst_status sst_model_save(const sst_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    sst::write_weights(path, model->model.to_weights());
  });
}

sst_status sst_model_stylize(const sst_model* model, const sst_image* prev, const sst_image* content,
                             sst_image** out) {
  return guarded([&] {
    need(model, "model");
    need(content, "content");
    need(out, "out");
    sst::NoGradGuard no_grad;
    const sst::Tensor& p = prev ? prev->tensor : content->tensor;
    *out = new sst_image{model->model.forward_step(p, content->tensor).detach()};
  });
}

void sst_model_free(sst_model* model) { delete model; }

size_t sst_command_count(void) { return sst::app::command_specs().size(); }

const char* sst_command_name(size_t command) {
  const auto* c = command_at(command);
  return c ? c->name.c_str() : nullptr;
}

const char* sst_command_help(size_t command) {
  const auto* c = command_at(command);
  return c ? c->help.c_str() : nullptr;
}

size_t sst_command_option_count(size_t command) {
  const auto* c = command_at(command);
  return c ? c->options.size() : 0;
}

sst_status sst_command_option(size_t command, size_t option, const char** name, const char** default_value,
                              const char** help, int* required) {
  return guarded([&] {
    const auto* c = command_at(command);
    if (!c || option >= c->options.size()) throw sst::InvalidArgument("command or option index out of range");
    const auto& o = c->options[option];
    if (name) *name = o.name.c_str();
    if (default_value) *default_value = o.default_value.c_str();
    if (help) *help = o.help.c_str();
    if (required) *required = o.required ? 1 : 0;
  });
}

sst_status sst_config_create(const char* command, sst_config** out) {
  return guarded([&] {
    need(command, "command");
    need(out, "out");
    sst::app::find_command(command);
    *out = new sst_config{command, {}};
  });
}

sst_status sst_config_set(sst_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->settings.set(key, value);
  });
}

sst_status sst_config_load_file(sst_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    config->settings.merge(sst::io::Config::load(path));
  });
}

void sst_config_free(sst_config* config) { delete config; }

sst_status sst_run(const sst_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    sst::app::run_command(config->command, config->settings, out_dir);
  });
}

}  // extern "C"

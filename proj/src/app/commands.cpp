#include "stablestyle/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "stablestyle/app/experiments.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/eval/metrics.hpp"
#include "stablestyle/flow/synthetic.hpp"
#include "stablestyle/geometry/gram_geometry.hpp"
#include "stablestyle/io/binary.hpp"
#include "stablestyle/io/csv.hpp"
#include "stablestyle/io/image.hpp"
#include "stablestyle/io/sequence.hpp"
#include "stablestyle/io/weights.hpp"
#include "stablestyle/stylizer/optim.hpp"

namespace sst::app {

namespace fs = std::filesystem;
using K = OptionKind;

namespace {

using Group = std::vector<OptionSpec>;

Group net_options() {
  return {{"net", K::InputPath, "", "feature network weights (GSLW); the built-in net when empty"},
          {"net-seed", K::Int, "11", "seed of the built-in feature network"}};
}

Group style_options() {
  return {{"style", K::InputPath, "", "style image (.ppm or .png); a generated texture when empty"},
          {"style-contrast", K::Float, "1", "contrast of the generated style texture, in (0, 2]"},
          {"style-size", K::Int, "32", "side length of the generated style texture"},
          {"style-seed", K::Int, "0", "seed of the generated style texture"}};
}

Group lambda_options(bool temporal, const std::string& lt = "100") {
  Group g{{"lambda-content", K::Float, "1", "content loss weight"},
          {"lambda-style", K::Float, "0.01", "style loss weight"}};
  if (temporal) g.push_back({"lambda-temporal", K::Float, lt, "temporal loss weight"});
  return g;
}

Group arch_options() {
  return {{"width1", K::Int, "16", "channels after the first downsampling conv"},
          {"width2", K::Int, "32", "channels after the second downsampling conv"},
          {"blocks", K::Int, "3", "residual blocks"}};
}

Group train_options() {
  return {{"epochs", K::Int, "10", "passes over the training samples"},
          {"bptt", K::Int, "4", "unrolled frames per video-phase sample"},
          {"lr", K::Float, "0.001", "Adam step size; 0 evaluates losses without updating"},
          {"flip-h", K::Bool, "true", "random horizontal flips"},
          {"flip-v", K::Bool, "true", "random vertical flips"}};
}

Group corpus_options() {
  return {{"corpus-scenes", K::Int, "8", "generated training scenes (translate, square, static in turn)"},
          {"corpus-frames", K::Int, "4", "frames per generated training scene"},
          {"corpus-size", K::Int, "32", "side length of generated training frames"},
          {"corpus-noise", K::Float, "0.02", "per-frame noise sigma of generated training frames"}};
}

Group static_scene_options() {
  return {{"scenes", K::Int, "5", "generated static-noise scenes"},
          {"frames", K::Int, "6", "frames per scene"},
          {"size", K::Int, "32", "side length of scene frames"},
          {"noise", K::Float, "0.02", "per-frame noise sigma"}};
}

CommandSpec make(std::string name, std::string help, std::initializer_list<Group> groups) {
  CommandSpec c{std::move(name), std::move(help), {}};
  for (const auto& g : groups) c.options.insert(c.options.end(), g.begin(), g.end());
  c.options.push_back({"seed", K::Int, "0", "seed for every generated quantity"});
  return c;
}

std::vector<CommandSpec> build_specs() {
  std::vector<CommandSpec> s;
  s.push_back(make("check-grads", "finite-difference checks of every loss and a 3-frame rollout",
                   {{{"instances", K::Int, "10", "random instances per loss"},
                     {"size", K::Int, "8", "spatial size of the random images"},
                     {"step", K::Float, "1e-06", "central-difference step"},
                     {"rollout-coords", K::Int, "24", "checked coordinates per rollout parameter tensor"}}}));
  s.push_back(make("theorem-verify", "Gram objective on random orthogonal orbits, plus optional descent runs",
                   {{{"c", K::IntList, "2,4,8", "channel counts, cycled over trials"},
                     {"hw", K::IntList, "4,16,32", "pixel counts, cycled over trials"},
                     {"trials", K::Int, "100", "orbit trials"},
                     {"minimize", K::Int, "0", "gradient-descent runs from random inits (first c and hw)"},
                     {"steps", K::Int, "2000", "descent steps per run"},
                     {"lr", K::Float, "0.01", "descent step size"}}}));
  s.push_back(make("trace", "Gram trace and solution radius of a style image per tap",
                   {style_options(), net_options(), {{"taps", K::StringList, "r1,r2", "feature taps"}}}));
  s.push_back(make("stylize-image", "optimization-based stylization of one image",
                   {{{"content", K::InputPath, "", "content image", true},
                     {"iters", K::Int, "250", "Adam iterations"},
                     {"lr", K::Float, "0.02", "Adam step size"}},
                    lambda_options(false), style_options(), net_options()}));
  s.push_back(make("stylize-video-optim", "optimization-based stylization of a sequence directory",
                   {{{"frames", K::InputPath, "", "sequence directory (frame_0000.ppm, flow_0000.flo, ...)", true},
                     {"iters", K::Int, "250", "Adam iterations per frame"},
                     {"lr", K::Float, "0.02", "Adam step size"}},
                    lambda_options(true), style_options(), net_options()}));
  s.push_back(make("train", "train a recurrent stylizer (image pretraining or video finetuning)",
                   {{{"phase", K::String, "image", "image or video"},
                     {"init", K::InputPath, "", "checkpoint to continue from"},
                     {"data", K::InputPathList, "", "sequence directories; a generated corpus when empty"}},
                    train_options(), lambda_options(true), arch_options(), corpus_options(), style_options(),
                    net_options()}));
  s.push_back(make("stylize-video", "run a trained stylizer over a sequence directory",
                   {{{"model", K::InputPath, "", "stylizer checkpoint", true},
                     {"frames", K::InputPath, "", "sequence directory", true},
                     {"mode", K::String, "auto", "auto, recurrent or independent"}}}));
  s.push_back(make("eval-instability", "mean adjacent-frame MSE of a stylizer on static scenes",
                   {{{"model", K::InputPath, "", "stylizer checkpoint", true},
                     {"mode", K::String, "auto", "auto, recurrent or independent"},
                     {"data", K::InputPathList, "", "sequence directories; generated static-noise scenes when empty"}},
                    static_scene_options()}));
  s.push_back(make("eval-trace-study", "per-style image-only models: Gram trace against instability",
                   {{{"contrasts", K::FloatList, "0.25,0.5,0.75,1,1.5,2", "contrast of each generated style"},
                     {"style-size", K::Int, "32", "side length of the generated styles"},
                     {"taps", K::StringList, "r1,r2", "style taps"}},
                    train_options(), lambda_options(false), arch_options(), corpus_options(), static_scene_options(),
                    net_options()}));
  s.push_back(make("eval-distortion", "output SSIM under controlled shifts and blur/sharpen",
                   {{{"model", K::InputPath, "", "stylizer checkpoint", true},
                     {"baseline", K::InputPath, "", "second checkpoint scored on the same patches"},
                     {"kind", K::String, "both", "shift, blur-sharpen or both"},
                     {"magnitudes", K::FloatList, "", "distortion magnitudes (single kind only); defaults when empty"},
                     {"patches", K::Int, "20", "textured patches"},
                     {"patch", K::Int, "32", "patch side length"},
                     {"frame-size", K::Int, "64", "side length of the frames patches are cut from"}}}));
  s.push_back(make("eval-patches", "PSNR/SSIM of matched background patches in adjacent stylized frames",
                   {{{"model", K::InputPath, "", "stylizer checkpoint", true},
                     {"baseline", K::InputPath, "", "second checkpoint scored on the same scenes"},
                     {"mode", K::String, "auto", "auto, recurrent or independent (for --model)"},
                     {"data", K::InputPathList, "", "sequence directories with fg masks; generated scenes when empty"},
                     {"scenes", K::Int, "3", "generated moving-square scenes"},
                     {"frames", K::Int, "6", "frames per scene"},
                     {"height", K::Int, "64", "frame height"},
                     {"width", K::Int, "96", "frame width"},
                     {"square", K::Int, "20", "square side length"},
                     {"dx", K::Int, "2", "square motion per frame, x"},
                     {"dy", K::Int, "1", "square motion per frame, y"},
                     {"noise", K::Float, "0", "per-frame noise sigma"},
                     {"patch", K::Int, "32", "patch side length"},
                     {"search", K::Int, "8", "search radius in pixels (20 suits 100 px patches on full-size frames)"},
                     {"candidates", K::Int, "200", "random draws when looking for a background patch"}}}));
  s.push_back(make("bench-timing", "seconds per frame: feedforward against optimization",
                   {{{"model", K::InputPath, "", "stylizer checkpoint; a fresh network when empty"},
                     {"resolutions", K::IntList, "64,128,256", "square frame sizes"},
                     {"repeats", K::Int, "5", "timed runs per measurement (after one warm-up)"},
                     {"optim-iters", K::Int, "250", "optimization iterations"},
                     {"optim-max-resolution", K::Int, "64", "largest size at which optimization is timed"},
                     {"optim-lr", K::Float, "0.02", "optimization step size"}},
                    lambda_options(false), arch_options(), style_options(), net_options()}));
  s.push_back(make("gen-scene", "write a synthetic sequence with ground-truth flow and masks",
                   {{{"kind", K::String, "static-noise", "static-noise, global-translate or moving-square"},
                     {"frames", K::Int, "8", "frame count"},
                     {"height", K::Int, "64", "frame height"},
                     {"width", K::Int, "96", "frame width"},
                     {"noise", K::Float, "0", "per-frame noise sigma"},
                     {"dx", K::Int, "1", "motion per frame, x"},
                     {"dy", K::Int, "0", "motion per frame, y"},
                     {"square", K::Int, "16", "square side length"},
                     {"foreground", K::Bool, "false", "also write per-frame foreground masks (fg_*.pgm)"},
                     {"backward", K::Bool, "false", "also write backward flows (bflow_*.flo)"}}}));
  return s;
}

}  // namespace

const OptionSpec* CommandSpec::find(const std::string& option) const {
  for (const auto& o : options)
    if (o.name == option) return &o;
  return nullptr;
}

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = build_specs();
  return specs;
}

const CommandSpec& find_command(const std::string& name) {
  for (const auto& c : command_specs())
    if (c.name == name) return c;
  throw InvalidArgument("unknown command '" + name + "'");
}

Options::Options(const CommandSpec& spec, const io::Config& settings) : spec_(&spec) {
  for (const auto& [key, value] : settings.entries()) {
    if (!spec.find(key)) throw InvalidArgument("unknown option '" + key + "' for " + spec.name);
  }
  for (const auto& o : spec.options) {
    const std::string v = settings.has(o.name) ? settings.get(o.name) : o.default_value;
    if (o.required && v.empty()) throw InvalidArgument(spec.name + ": missing required option --" + o.name);
    switch (o.kind) {
      case K::Int: io::parse_int(o.name, v); break;
      case K::Float: io::parse_double(o.name, v); break;
      case K::Bool: io::parse_bool(o.name, v); break;
      case K::IntList:
        for (const auto& x : io::parse_list(v)) io::parse_int(o.name, x);
        break;
      case K::FloatList:
        for (const auto& x : io::parse_list(v)) io::parse_double(o.name, x);
        break;
      case K::InputPath:
        if (!v.empty() && !fs::exists(v)) throw InvalidArgument(spec.name + ": --" + o.name + " path '" + v + "' does not exist");
        break;
      case K::InputPathList:
        for (const auto& x : io::parse_list(v))
          if (!fs::exists(x)) throw InvalidArgument(spec.name + ": --" + o.name + " path '" + x + "' does not exist");
        break;
      case K::String:
      case K::StringList: break;
    }
    values_[o.name] = v;
  }
  if (integer("seed") < 0) throw InvalidArgument("seed must be non-negative");
}

const OptionSpec& Options::spec_of(const std::string& name, OptionKind expected) const {
  const OptionSpec* o = spec_->find(name);
  if (!o || o->kind != expected) throw StateError("option '" + name + "' read with the wrong type");
  return *o;
}

const std::string& Options::str(const std::string& name) const {
  spec_of(name, K::String);
  return values_.at(name);
}
long long Options::integer(const std::string& name) const {
  spec_of(name, K::Int);
  return io::parse_int(name, values_.at(name));
}
std::size_t Options::count(const std::string& name) const {
  const long long v = integer(name);
  if (v < 0) throw InvalidArgument("--" + name + " must be non-negative");
  return static_cast<std::size_t>(v);
}
double Options::real(const std::string& name) const {
  spec_of(name, K::Float);
  return io::parse_double(name, values_.at(name));
}
bool Options::flag(const std::string& name) const {
  spec_of(name, K::Bool);
  return io::parse_bool(name, values_.at(name));
}
fs::path Options::path(const std::string& name) const {
  spec_of(name, K::InputPath);
  return values_.at(name);
}
std::vector<fs::path> Options::paths(const std::string& name) const {
  spec_of(name, K::InputPathList);
  std::vector<fs::path> out;
  for (const auto& s : io::parse_list(values_.at(name))) out.emplace_back(s);
  return out;
}
std::vector<std::size_t> Options::counts(const std::string& name) const {
  spec_of(name, K::IntList);
  std::vector<std::size_t> out;
  for (const auto& s : io::parse_list(values_.at(name))) {
    const long long v = io::parse_int(name, s);
    if (v < 0) throw InvalidArgument("--" + name + " entries must be non-negative");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}
std::vector<double> Options::reals(const std::string& name) const {
  spec_of(name, K::FloatList);
  std::vector<double> out;
  for (const auto& s : io::parse_list(values_.at(name))) out.push_back(io::parse_double(name, s));
  return out;
}
std::vector<std::string> Options::strings(const std::string& name) const {
  spec_of(name, K::StringList);
  return io::parse_list(values_.at(name));
}

namespace {

std::string num(double v) { return io::format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(long v) { return std::to_string(v); }

struct RunContext {
  fs::path out;
  io::Manifest manifest;
  std::string failure;  // non-empty: a numeric check failed

  void add(const std::string& rel) { manifest.add_artifact(out, rel); }
  void text(const std::string& rel, const std::string& body) {
    io::write_file(out / rel, std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
    add(rel);
  }
  void csv(const std::string& rel, const io::CsvTable& t) { text(rel, t.str()); }
  void image(const std::string& rel, const Tensor& t) {
    io::write_image(out / rel, t);
    add(rel);
  }
  void frames(const std::string& dir, const std::vector<Tensor>& frames) {
    for (const auto& name : io::write_frames(out / dir, frames)) add(dir + "/" + name);
  }
  void fail(const std::string& what) {
    if (!failure.empty()) failure += "; ";
    failure += what;
  }
};

FeatureNet net_of(const Options& o) { return load_feature_net(o.path("net"), o.count("net-seed")); }

Tensor style_of(const Options& o) {
  const fs::path p = o.path("style");
  if (p.empty()) return contrast_style(o.real("style-contrast"), o.count("style-size"), o.count("style-seed"));
  Tensor s = io::read_image(p);
  if (s.dim(0) != 3) throw InvalidArgument("style image must be RGB");
  return s;
}

StylizerArch arch_of(const Options& o) { return {o.count("width1"), o.count("width2"), o.count("blocks")}; }

LossWeights lambdas_of(const Options& o, bool temporal) {
  LossWeights w;
  w.content = o.real("lambda-content");
  w.style = o.real("lambda-style");
  w.temporal = temporal ? o.real("lambda-temporal") : 0.0;
  return w;
}

TrainConfig train_of(const Options& o, bool temporal) {
  TrainConfig tc;
  tc.epochs = o.count("epochs");
  tc.bptt_steps = o.count("bptt");
  tc.lr = o.real("lr");
  tc.flip_horizontal = o.flag("flip-h");
  tc.flip_vertical = o.flag("flip-v");
  tc.seed = o.seed() + 1;
  tc.lambdas = lambdas_of(o, temporal);
  return tc;
}

CorpusOptions corpus_of(const Options& o) {
  return {o.count("corpus-scenes"), o.count("corpus-frames"), o.count("corpus-size"), o.real("corpus-noise"), o.seed()};
}

StaticSceneOptions static_scenes_of(const Options& o) {
  return {o.count("scenes"), o.count("frames"), o.count("size"), o.real("noise"), o.seed()};
}

RecurrentStylizer load_model(const fs::path& p) { return RecurrentStylizer::from_weights(read_weights(p)); }

StylizeMode mode_of(const Options& o, const RecurrentStylizer& model) {
  const std::string& m = o.str("mode");
  return m == "auto" ? natural_mode(model) : parse_stylize_mode(m);
}

std::vector<VideoSequence> read_sequences(const std::vector<fs::path>& dirs) {
  std::vector<VideoSequence> out;
  for (const auto& d : dirs) out.push_back(io::read_sequence(d));
  return out;
}

// ---------------------------------------------------------------------------

void run_check_grads(const Options& o, RunContext& ctx) {
  GradCheckOptions gc;
  gc.step = o.real("step");
  if (!(gc.step > 0)) throw InvalidArgument("--step must be positive");
  const auto rows = gradient_checks(o.count("instances"), o.count("size"), o.seed(), gc, o.count("rollout-coords"));
  io::CsvTable t({"loss", "instance", "relative_error", "max_abs_error", "coordinates", "tolerance", "pass"});
  std::size_t failed = 0;
  for (const auto& r : rows) {
    t.add_row({r.loss, num(r.instance), num(r.result.relative_error), num(r.result.max_abs_error),
               num(r.result.coordinates), num(r.tolerance), r.pass ? "true" : "false"});
    failed += r.pass ? 0 : 1;
  }
  ctx.csv("gradcheck.csv", t);
  if (failed) ctx.fail(std::to_string(failed) + " gradient checks exceeded tolerance");
}

void run_theorem_verify(const Options& o, RunContext& ctx) {
  const auto cs = o.counts("c"), hws = o.counts("hw");
  const auto trials = orbit_trials(cs, hws, o.count("trials"), o.seed());
  io::CsvTable t({"trial", "channels", "pixels", "objective", "tolerance", "pass"});
  std::size_t failed = 0;
  for (const auto& r : trials) {
    t.add_row({num(r.trial), num(r.channels), num(r.pixels), num(r.objective), num(r.tolerance), r.pass ? "true" : "false"});
    failed += r.pass ? 0 : 1;
  }
  ctx.csv("theorem.csv", t);
  if (failed) ctx.fail(std::to_string(failed) + " orbit trials exceeded tolerance");
  if (const std::size_t runs = o.count("minimize"); runs > 0) {
    geometry::MinimizeOptions mo;
    mo.steps = o.count("steps");
    mo.lr = o.real("lr");
    const auto sphere = sphere_trials(cs.front(), hws.front(), runs, mo, o.seed() + 1);
    io::CsvTable s({"trial", "initial_objective", "final_objective", "norm", "radius", "relative_gap", "converged"});
    for (const auto& r : sphere) {
      s.add_row({num(r.trial), num(r.initial_objective), num(r.final_objective), num(r.norm), num(r.radius),
                 num(r.relative_gap), r.converged ? "true" : "false"});
    }
    ctx.csv("sphere.csv", s);
  }
}

void run_trace(const Options& o, RunContext& ctx) {
  const FeatureNet net = net_of(o);
  const auto rows = geometry::trace_report(style_of(o), net, o.strings("taps"));
  io::CsvTable t({"tap", "trace", "radius"});
  for (const auto& r : rows) t.add_row({r.tap, num(r.trace), num(r.radius)});
  ctx.csv("trace.csv", t);
}

OptimConfig optim_of(const Options& o, bool temporal) {
  OptimConfig c;
  const auto w = lambdas_of(o, temporal);
  c.lambda_c = w.content;
  c.lambda_s = w.style;
  c.lambda_t = w.temporal;
  c.iters = o.count("iters");
  c.lr = o.real("lr");
  c.seed = o.seed();
  return c;
}

void run_stylize_image(const Options& o, RunContext& ctx) {
  const FeatureNet net = net_of(o);
  const PerceptualObjective objective(net, style_of(o));
  const Tensor content = io::read_image(o.path("content"));
  if (content.dim(0) != 3) throw InvalidArgument("content image must be RGB");
  const auto r = stylize_image_optim(objective, content, optim_of(o, false));
  ctx.image("stylized.ppm", r.image);
  io::CsvTable t({"initial_loss", "final_loss"});
  t.add_row({num(r.initial_loss), num(r.final_loss)});
  ctx.csv("optim.csv", t);
}

void run_stylize_video_optim(const Options& o, RunContext& ctx) {
  const FeatureNet net = net_of(o);
  const PerceptualObjective objective(net, style_of(o));
  const VideoSequence seq = io::read_sequence(o.path("frames"));
  const OptimConfig cfg = optim_of(o, true);
  if (cfg.lambda_t > 0 && !seq.has_flows()) throw InvalidArgument("lambda-temporal > 0 needs flows and masks");
  const auto results = stylize_video_optim(objective, seq, cfg);
  std::vector<Tensor> frames;
  io::CsvTable t({"frame", "initial_loss", "final_loss"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    frames.push_back(results[i].image);
    t.add_row({num(i), num(results[i].initial_loss), num(results[i].final_loss)});
  }
  ctx.frames("stylized", frames);
  ctx.csv("optim.csv", t);
}

void run_train(const Options& o, RunContext& ctx) {
  TrainConfig tc = train_of(o, true);
  tc.phase = parse_train_phase(o.str("phase"));
  const auto data_dirs = o.paths("data");
  const auto data = data_dirs.empty() ? training_corpus(corpus_of(o)) : read_sequences(data_dirs);
  RecurrentStylizer model = o.path("init").empty() ? RecurrentStylizer::create(arch_of(o), o.seed())
                                                   : load_model(o.path("init"));
  const FeatureNet net = net_of(o);
  const PerceptualObjective objective(net, style_of(o));
  const auto result = train(model, objective, data, tc);
  write_weights(ctx.out / "model.gslw", model.to_weights());
  ctx.add("model.gslw");
  io::CsvTable t({"epoch", "loss"});
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) t.add_row({num(e + 1), num(result.epoch_loss[e])});
  ctx.csv("train.csv", t);
}

void run_stylize_video(const Options& o, RunContext& ctx) {
  const RecurrentStylizer model = load_model(o.path("model"));
  const VideoSequence seq = io::read_sequence(o.path("frames"));
  ctx.frames("stylized", stylize_video(model, seq, mode_of(o, model)));
}

void run_eval_instability(const Options& o, RunContext& ctx) {
  const RecurrentStylizer model = load_model(o.path("model"));
  const StylizeMode mode = mode_of(o, model);
  const auto dirs = o.paths("data");
  const auto scenes = dirs.empty() ? static_noise_scenes(static_scenes_of(o)) : read_sequences(dirs);
  io::CsvTable t({"scene", "frames", "instability"});
  double total = 0.0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const double v = eval::instability(stylize_video(model, scenes[i], mode));
    total += v;
    t.add_row({num(i), num(scenes[i].length()), num(v)});
  }
  if (scenes.empty()) throw InvalidArgument("eval-instability: no scenes");
  t.add_row({"mean", "", num(total / static_cast<double>(scenes.size()))});
  ctx.csv("instability.csv", t);
}

void run_eval_trace_study(const Options& o, RunContext& ctx) {
  TraceStudyOptions so;
  so.contrasts = o.reals("contrasts");
  so.style_size = o.count("style-size");
  so.taps = o.strings("taps");
  so.arch = arch_of(o);
  so.train = train_of(o, false);
  so.corpus = corpus_of(o);
  so.scenes = static_scenes_of(o);
  so.seed = o.seed();
  const FeatureNet net = net_of(o);
  const auto run = run_trace_study(net, so);
  io::CsvTable t({"style", "contrast", "tap", "trace", "instability"});
  for (std::size_t i = 0; i < run.study.reports.size(); ++i) {
    const auto& r = run.study.reports[i];
    for (const auto& tr : r.traces) t.add_row({r.style, num(run.contrasts[i]), tr.tap, num(tr.trace), num(r.instability)});
  }
  ctx.csv("trace_study.csv", t);
  io::CsvTable c({"tap", "spearman"});
  for (const auto& corr : run.study.correlations) c.add_row({corr.tap, corr.spearman ? num(*corr.spearman) : "degenerate"});
  ctx.csv("correlation.csv", c);
}

void run_eval_distortion(const Options& o, RunContext& ctx) {
  const RecurrentStylizer model = load_model(o.path("model"));
  std::optional<RecurrentStylizer> baseline;
  if (!o.path("baseline").empty()) baseline = load_model(o.path("baseline"));
  const std::string& kind_name = o.str("kind");
  std::vector<eval::DistortionKind> kinds;
  if (kind_name == "both") {
    kinds = {eval::DistortionKind::Shift, eval::DistortionKind::BlurSharpen};
  } else {
    kinds = {eval::parse_distortion_kind(kind_name)};
  }
  auto mags = o.reals("magnitudes");
  if (!mags.empty() && kinds.size() != 1) throw InvalidArgument("--magnitudes needs a single --kind");
  const std::size_t patch = o.count("patch");
  const auto frames = textured_frames(o.count("patches"), o.count("frame-size"), o.seed());
  std::vector<std::string> header{"kind", "magnitude", "input_ssim", "model_ssim"};
  if (baseline) header.push_back("baseline_ssim");
  io::CsvTable t(header);
  for (const auto kind : kinds) {
    const auto m = mags.empty() ? eval::default_magnitudes(kind) : mags;
    const auto a = mean_distortion_curve(frames, patch, eval::model_patch_stylizer(model), kind, m);
    std::optional<eval::DistortionCurve> b;
    if (baseline) b = mean_distortion_curve(frames, patch, eval::model_patch_stylizer(*baseline), kind, m);
    const std::string name = kind == eval::DistortionKind::Shift ? "shift" : "blur-sharpen";
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::vector<std::string> row{name, num(m[i]), num(a.input_ssim[i]), num(a.output_ssim[i])};
      if (b) row.push_back(num(b->output_ssim[i]));
      t.add_row(row);
    }
  }
  ctx.csv("distortion.csv", t);
}

void run_eval_patches(const Options& o, RunContext& ctx) {
  const RecurrentStylizer model = load_model(o.path("model"));
  std::optional<RecurrentStylizer> baseline;
  if (!o.path("baseline").empty()) baseline = load_model(o.path("baseline"));
  const auto dirs = o.paths("data");
  SquareSceneOptions so{o.count("scenes"), o.count("frames"), o.count("height"), o.count("width"), o.count("square"),
                        static_cast<int>(o.integer("dx")), static_cast<int>(o.integer("dy")), o.real("noise"), o.seed()};
  const auto scenes = dirs.empty() ? moving_square_scenes(so) : read_sequences(dirs);
  if (scenes.empty()) throw InvalidArgument("eval-patches: no scenes");
  eval::PatchProtocol protocol{o.count("patch"), o.count("search"), o.count("candidates"), o.seed()};

  std::vector<std::pair<std::string, eval::SequenceStylizer>> stylizers{
      {"model", eval::model_sequence_stylizer(model, mode_of(o, model))}};
  if (baseline) stylizers.push_back({"baseline", eval::model_sequence_stylizer(*baseline, natural_mode(*baseline))});

  io::CsvTable t({"stylizer", "scene", "pair", "y", "x", "dy", "dx", "psnr", "ssim"});
  io::CsvTable summary({"stylizer", "mean_psnr", "mean_ssim"});
  for (const auto& [name, stylize] : stylizers) {
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      eval::PatchProtocol p = protocol;
      p.seed = protocol.seed * 1000003ULL + s;  // same patches for every stylizer
      const auto score = eval::patch_stability(scenes[s], stylize, p);
      for (const auto& m : score.matches) {
        t.add_row({name, num(s), num(m.pair), num(m.y), num(m.x), num(m.dy), num(m.dx), num(m.psnr), num(m.ssim)});
      }
      psnr_sum += score.mean_psnr;
      ssim_sum += score.mean_ssim;
    }
    const double n = static_cast<double>(scenes.size());
    summary.add_row({name, num(psnr_sum / n), num(ssim_sum / n)});
  }
  ctx.csv("patches.csv", t);
  ctx.csv("patch_summary.csv", summary);
}

void run_bench_timing(const Options& o, RunContext& ctx) {
  const RecurrentStylizer model = o.path("model").empty() ? RecurrentStylizer::create(arch_of(o), o.seed())
                                                          : load_model(o.path("model"));
  const FeatureNet net = net_of(o);
  OptimConfig oc;
  const auto w = lambdas_of(o, false);
  oc.lambda_c = w.content;
  oc.lambda_s = w.style;
  oc.lr = o.real("optim-lr");
  eval::TimingOptions to;
  to.resolutions = o.counts("resolutions");
  to.repeats = o.count("repeats");
  to.optim_iters = o.count("optim-iters");
  to.optim_max_resolution = o.count("optim-max-resolution");
  to.seed = o.seed();
  const auto rows = eval::timing(model, net, style_of(o), oc, to);
  io::CsvTable t({"resolution", "feedforward_seconds", "optim_seconds", "speedup"});
  for (const auto& r : rows) {
    t.add_row({num(r.resolution), num(r.feedforward_seconds), r.optim_seconds ? num(*r.optim_seconds) : "",
               r.speedup ? num(*r.speedup) : ""});
  }
  ctx.csv("timing.csv", t);
}

void run_gen_scene(const Options& o, RunContext& ctx) {
  SceneParams p;
  p.noise = o.real("noise");
  p.dx = static_cast<int>(o.integer("dx"));
  p.dy = static_cast<int>(o.integer("dy"));
  p.square = o.count("square");
  const VideoSequence seq =
      synthetic_scene(parse_scene_kind(o.str("kind")), p, o.count("frames"), o.count("height"), o.count("width"), o.seed());
  for (const auto& name : io::write_sequence(ctx.out, seq, {o.flag("foreground"), o.flag("backward")})) ctx.add(name);
}

using Runner = void (*)(const Options&, RunContext&);

Runner runner_for(const std::string& name) {
  static const std::map<std::string, Runner> runners{
      {"check-grads", run_check_grads},
      {"theorem-verify", run_theorem_verify},
      {"trace", run_trace},
      {"stylize-image", run_stylize_image},
      {"stylize-video-optim", run_stylize_video_optim},
      {"train", run_train},
      {"stylize-video", run_stylize_video},
      {"eval-instability", run_eval_instability},
      {"eval-trace-study", run_eval_trace_study},
      {"eval-distortion", run_eval_distortion},
      {"eval-patches", run_eval_patches},
      {"bench-timing", run_bench_timing},
      {"gen-scene", run_gen_scene},
  };
  return runners.at(name);
}

}  // namespace

io::Manifest run_command(const std::string& name, const io::Config& settings, const fs::path& out_dir) {
  const CommandSpec& spec = find_command(name);
  const Options options(spec, settings);
  if (out_dir.empty()) throw InvalidArgument(name + ": missing --out directory");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

  RunContext ctx;
  ctx.out = out_dir;
  ctx.manifest.command = name;
  ctx.manifest.config = options.resolved();
  ctx.manifest.seed = options.seed();
  runner_for(name)(options, ctx);
  ctx.manifest.write(out_dir);
  if (!ctx.failure.empty()) throw NumericError(name + ": " + ctx.failure);
  return ctx.manifest;
}

}  // namespace sst::app

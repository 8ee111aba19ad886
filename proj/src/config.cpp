#include "gesture/config.hpp"

#include <concepts>
#include <fstream>
#include <set>

#include "gesture/error.hpp"

namespace gesture::config {

namespace {

using nlohmann::json;

// Typed view of one JSON object section; records consumed keys so leftovers
// can be rejected.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorKind::Config, name_ + " must be a JSON object");
  }

  template <typename F>
  void read(const char* key, F&& assign) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      assign(j_.at(key));
    } catch (const json::exception&) {
      fail(ErrorKind::Config, name_ + "." + key + " has the wrong type");
    }
  }

  void get(const char* key, double& out) {
    read(key, [&](const json& v) {
      if (!v.is_number()) throw json::type_error::create(302, "number expected", &v);
      out = v.get<double>();
    });
  }
  template <std::unsigned_integral U>
  void get(const char* key, U& out) {
    read(key, [&](const json& v) {
      if (!v.is_number_unsigned()) throw json::type_error::create(302, "unsigned expected", &v);
      out = v.get<U>();
    });
  }
  void get(const char* key, bool& out) {
    read(key, [&](const json& v) { out = v.get<bool>(); });
  }
  void get(const char* key, std::string& out) {
    read(key, [&](const json& v) { out = v.get<std::string>(); });
  }
  void get(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    read(key, [&](const json& v) {
      std::filesystem::path p = v.get<std::string>();
      out = p.empty() || p.is_absolute() || base.empty() ? p : base / p;
    });
  }
  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, name_ + "." + key);
  }
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorKind::Config, "unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::validate() const {
  generator.validate();
  discriminator.validate();
  loss.validate();
  train.validate();
  if (overlap < 1 || overlap > 5) fail(ErrorKind::Config, "overlap must lie in [1, 5]");
  if (manifest.empty() && (synthetic.sequences < 1 || synthetic.length < discriminator.window_length)) {
    fail(ErrorKind::Config, "synthetic corpus needs at least one sequence of one window");
  }
  if (preprocess.confidence_threshold < 0.0 || preprocess.confidence_threshold > 1.0) {
    fail(ErrorKind::Config, "confidence threshold must lie in [0, 1]");
  }
  if (preprocess.confidence_window < 1) fail(ErrorKind::Config, "confidence window must be positive");
  if (!(preprocess.sigma > 0.0)) fail(ErrorKind::Config, "smoothing sigma must be positive");
}

nlohmann::json RunConfig::to_json() const {
  json data = json::object();
  if (!manifest.empty()) data["manifest"] = manifest.string();
  data["synthetic"] = {{"sequences", synthetic.sequences}, {"length", synthetic.length}, {"seed", synthetic.seed}};
  return {
      {"seed", seed},
      {"subject", subject},
      {"data", data},
      {"model", {{"base_channels", generator.base_channels}, {"window_length", discriminator.window_length}}},
      {"loss", {{"w_face", loss.w_face}, {"w_body", loss.w_body}, {"w_hand", loss.w_hand}, {"w_adv", loss.w_adv}}},
      {"train",
       {{"lr", train.lr},
        {"batch_size", train.batch_size},
        {"max_iterations", train.max_iterations},
        {"g_steps_per_d_step", train.g_steps_per_d_step},
        {"adversarial", train.adversarial},
        {"saturating", train.saturating},
        {"checkpoint_every", train.checkpoint_every},
        {"overlap", overlap},
        {"metrics_csv", metrics_csv.string()}}},
      {"preprocess",
       {{"confidence_threshold", preprocess.confidence_threshold},
        {"confidence_window", preprocess.confidence_window},
        {"max_gap", preprocess.max_gap},
        {"sigma", preprocess.sigma}}},
      {"eval", {{"basis", eval.basis.string()}, {"basis_seed", eval.basis_seed}, {"lip_vertices", eval.lip_vertices}}},
  };
}

RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Section root(j, "config");
  root.get("seed", c.seed);
  root.get("subject", c.subject);

  auto data = root.sub("data");
  data.get("manifest", c.manifest, base_dir);
  auto synth = data.sub("synthetic");
  synth.get("sequences", c.synthetic.sequences);
  synth.get("length", c.synthetic.length);
  synth.get("seed", c.synthetic.seed);
  synth.finish();
  data.finish();

  auto model = root.sub("model");
  std::size_t base = c.generator.base_channels;
  model.get("base_channels", base);
  model.get("window_length", c.discriminator.window_length);
  model.finish();
  c.generator.base_channels = base;
  c.discriminator.base_channels = base;

  auto loss = root.sub("loss");
  loss.get("w_face", c.loss.w_face);
  loss.get("w_body", c.loss.w_body);
  loss.get("w_hand", c.loss.w_hand);
  loss.get("w_adv", c.loss.w_adv);
  loss.finish();

  auto train = root.sub("train");
  train.get("lr", c.train.lr);
  train.get("batch_size", c.train.batch_size);
  train.get("max_iterations", c.train.max_iterations);
  train.get("g_steps_per_d_step", c.train.g_steps_per_d_step);
  train.get("adversarial", c.train.adversarial);
  train.get("saturating", c.train.saturating);
  train.get("checkpoint_every", c.train.checkpoint_every);
  train.get("overlap", c.overlap);
  train.get("metrics_csv", c.metrics_csv, base_dir);
  train.finish();

  auto pre = root.sub("preprocess");
  pre.get("confidence_threshold", c.preprocess.confidence_threshold);
  pre.get("confidence_window", c.preprocess.confidence_window);
  pre.get("max_gap", c.preprocess.max_gap);
  pre.get("sigma", c.preprocess.sigma);
  pre.finish();

  auto eval = root.sub("eval");
  eval.get("basis", c.eval.basis, base_dir);
  eval.get("basis_seed", c.eval.basis_seed);
  eval.get("lip_vertices", c.eval.lip_vertices);
  eval.finish();

  root.finish();
  c.train.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

}  // namespace gesture::config

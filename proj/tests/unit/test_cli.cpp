#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesture/commands.hpp"
#include "gesture/io.hpp"
#include "gesture/model.hpp"
#include "support/tempdir.hpp"

using namespace gesture;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "gesturegen");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(GESTUREGEN_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_tone(const fs::path& path, double seconds) {
  audio::AudioSignal s;
  s.sample_rate = 16000;
  const auto n = static_cast<std::size_t>(seconds * s.sample_rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / s.sample_rate;
    s.samples[i] = 0.3 * std::sin(2.0 * std::numbers::pi * 220.0 * t) * (1.0 + 0.5 * std::sin(3.0 * t));
  }
  io::write_wav_pcm16(path, s);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("extract-features writes 15 frames per second of 28 dims") {
  TempDir dir;
  write_tone(dir / "a.wav", 4.0);
  const auto r = run({"extract-features", (dir / "a.wav").string(), (dir / "a.gft").string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto m = io::read_gft(dir / "a.gft");
  CHECK(m.frames() == 60);
  CHECK(m.dims == 28);
}

TEST_CASE("train, synthesize, score and evaluate on a small synthetic corpus") {
  TempDir dir;
  REQUIRE(run({"make-synthetic", (dir / "data").string(), "--sequences", "3", "--length", "128", "--seed", "4"}).code ==
          cli::kExitOk);
  REQUIRE(fs::exists(dir / "data" / "manifest.json"));
  write_text(dir / "run.json", R"({"seed": 1, "data": {"manifest": "data/manifest.json"},
                                   "model": {"base_channels": 4, "window_length": 16},
                                   "train": {"batch_size": 4, "max_iterations": 2}})");

  const auto ckpt = (dir / "m.gck").string();
  const auto trained = run({"train", ckpt, "--config", (dir / "run.json").string(), "--metrics",
                            (dir / "m.csv").string()});
  REQUIRE_MESSAGE(trained.code == cli::kExitOk, trained.err);
  CHECK(fs::exists(dir / "m.csv"));

  // --manifest stands in for the config's data section.
  REQUIRE(run({"make-synthetic", (dir / "spk").string(), "--sequences", "2", "--length", "96", "--subject", "spk"}).code ==
          cli::kExitOk);
  const auto flagged = run({"train", (dir / "m2.gck").string(), "--manifest", (dir / "spk" / "manifest.json").string(),
                            "--base-channels", "4", "--window-length", "16", "--iterations", "1"});
  REQUIRE_MESSAGE(flagged.code == cli::kExitOk, flagged.err);
  CHECK(model::load_checkpoint(dir / "m2.gck").subject_id == "spk");

  write_tone(dir / "a.wav", 4.0);
  const auto synth = run({"synthesize", ckpt, (dir / "a.wav").string(), (dir / "out").string()});
  REQUIRE_MESSAGE(synth.code == cli::kExitOk, synth.err);
  CHECK(io::read_gft(dir / "out" / "face.gft").frames() == 60);
  CHECK(io::read_gft(dir / "out" / "face.gft").dims == 64);
  CHECK(io::read_gft(dir / "out" / "body.gft").dims == 42);
  CHECK(io::read_gft(dir / "out" / "hand.gft").dims == 126);

  const auto score = run({"sync-score", ckpt, (dir / "a.wav").string(), (dir / "out" / "body.gft").string(),
                          (dir / "out" / "hand.gft").string()});
  REQUIRE_MESSAGE(score.code == cli::kExitOk, score.err);
  const double p = std::stod(score.out);
  CHECK(p > 0.0);
  CHECK(p < 1.0);

  const auto eval = run({"evaluate", ckpt, (dir / "data" / "manifest.json").string(), (dir / "r.json").string(),
                         "--config", (dir / "run.json").string()});
  REQUIRE_MESSAGE(eval.code == cli::kExitOk, eval.err);
  std::ifstream in(dir / "r.json");
  const auto report = nlohmann::json::parse(in);
  CHECK(report["subjects"].size() == 1);
  CHECK(report["aggregate"]["ours_mm"].get<double>() > 0.0);
  CHECK(report["sync"]["window_frames"] == 16);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"no-such-command"}).code == cli::kExitUsage);
  CHECK(run({"train"}).code == cli::kExitUsage);
  CHECK(run({"train", "x.gck", "--window-length", "48"}).code == cli::kExitUsage);
  CHECK(run({"train", "x.gck", "--manifest", (dir / "absent.json").string()}).code == cli::kExitUsage);

  write_text(dir / "bad.wav", "not a wav file");
  const auto bad = run({"extract-features", (dir / "bad.wav").string(), (dir / "o.gft").string()});
  CHECK(bad.code == cli::kExitData);
  CHECK(bad.err.rfind("gesturegen: ", 0) == 0);
  CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);

  write_text(dir / "typo.json", R"({"train": {"learning_rate": 0.1}})");
  const auto typo = run({"train", (dir / "m.gck").string(), "--config", (dir / "typo.json").string()});
  CHECK(typo.code == cli::kExitData);
  CHECK(typo.err.find("learning_rate") != std::string::npos);

  CHECK(run({"synthesize", (dir / "absent.gck").string(), (dir / "bad.wav").string(), (dir / "o").string()}).code ==
        cli::kExitData);
}

TEST_CASE("the installed binary reports the same exit codes") {
  TempDir dir;
  write_text(dir / "bad.wav", "RIFF");
  CHECK(run_binary("--help") == cli::kExitOk);
  CHECK(run_binary("") == cli::kExitUsage);
  CHECK(run_binary("extract-features " + (dir / "bad.wav").string() + " " + (dir / "o.gft").string()) ==
        cli::kExitData);
}

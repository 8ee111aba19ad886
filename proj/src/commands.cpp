#include "gesture/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "gesture/config.hpp"
#include "gesture/error.hpp"
#include "gesture/evaluation.hpp"
#include "gesture/synthetic.hpp"
#include "gesture/training.hpp"

namespace gesture::cli {

namespace {

namespace fs = std::filesystem;
using annotation::Corpus;

// Flags shared by the commands that build or consume a run configuration.
struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> subject;
  std::optional<std::size_t> window_length;
  std::optional<std::size_t> base_channels;
  std::optional<std::size_t> iterations;
  bool no_adversarial = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Run configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Seed for every random draw");
    cmd->add_option("--subject", subject, "Restrict to one subject");
    cmd->add_option("--window-length", window_length, "Discriminator window in frames")
        ->check(CLI::IsMember({16, 32, 64}));
    cmd->add_option("--base-channels", base_channels, "Channel width of the first block")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--iterations", iterations, "Training iterations");
    cmd->add_flag("--no-adversarial", no_adversarial, "Regression loss only");
  }

  config::RunConfig resolve() const {
    config::RunConfig c = config.empty() ? config::RunConfig{} : config::load(config);
    if (seed) {
      c.seed = *seed;
      c.train.seed = *seed;
    }
    if (subject) c.subject = *subject;
    if (window_length) c.discriminator.window_length = *window_length;
    if (base_channels) {
      c.generator.base_channels = *base_channels;
      c.discriminator.base_channels = *base_channels;
    }
    if (iterations) c.train.max_iterations = *iterations;
    if (no_adversarial) c.train.adversarial = false;
    c.validate();
    return c;
  }
};

audio::AudioFeatureSequence load_features(const fs::path& path) {
  if (path.extension() == ".gft") return annotation::features_from_matrix(io::read_gft(path));
  return audio::extract_features(audio::normalize_signal(io::read_wav(path)));
}

Corpus only_subject(Corpus corpus, const std::string& subject) {
  if (subject.empty()) return corpus;
  std::erase_if(corpus, [&](const auto& rec) { return rec.subject_id != subject; });
  if (corpus.empty()) fail(ErrorKind::InvalidInput, "no sequences of subject '" + subject + "'");
  return corpus;
}

Corpus run_corpus(const config::RunConfig& c) {
  if (!c.manifest.empty()) return only_subject(annotation::load_corpus(c.manifest), c.subject);
  const std::string subject = c.subject.empty() ? "synthetic" : c.subject;
  return synthetic::generate_synthetic_corpus(c.synthetic.seed, c.synthetic.sequences,
                                              c.synthetic.length, subject);
}

evaluation::LipBlendshapeBasis run_basis(const config::RunConfig& c) {
  if (!c.eval.basis.empty()) return evaluation::load_lip_basis(c.eval.basis);
  return evaluation::synthesize_lip_basis(c.eval.basis_seed, c.eval.lip_vertices);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

io::FrameMatrix gesture_matrix(const annotation::GestureSequence& seq, annotation::Stream stream) {
  return annotation::stream_to_matrix(seq, stream);
}

void cmd_extract_features(const fs::path& in, const fs::path& out, std::ostream& log) {
  const auto features = audio::extract_features(audio::normalize_signal(io::read_wav(in)));
  io::write_gft(out, annotation::features_to_matrix(features));
  log << "wrote " << features.length() << " frames x " << audio::kFeatureDims << " dims to " << out.string() << '\n';
}

void cmd_preprocess(const fs::path& manifest, const fs::path& out_dir, const config::RunConfig& c,
                    std::ostream& log) {
  const Corpus corpus = only_subject(annotation::load_corpus(manifest), c.subject);
  Corpus cleaned;
  for (const auto& rec : corpus) {
    const auto filled = annotation::fill_gaps_cubic(rec.gestures, c.preprocess.max_gap);
    const auto segments = annotation::confidence_segments(filled.confidence, c.preprocess.confidence_threshold,
                                                          c.preprocess.confidence_window);
    for (std::size_t k = 0; k < segments.size(); ++k) {
      annotation::SequenceRecord part;
      part.id = rec.id + "_" + std::to_string(k);
      part.subject_id = rec.subject_id;
      part.features = annotation::slice(rec.features, segments[k]);
      part.gestures = annotation::slice(filled, segments[k]);
      cleaned.push_back(std::move(part));
    }
  }
  annotation::save_corpus(out_dir, cleaned);
  log << "kept " << cleaned.size() << " segments from " << corpus.size() << " sequences\n";
}

void cmd_train(const config::RunConfig& c, const fs::path& out, const fs::path& metrics, std::ostream& log) {
  const Corpus corpus = run_corpus(c);
  std::string subject = corpus.front().subject_id;
  for (const auto& rec : corpus) {
    if (rec.subject_id != subject) {
      fail(ErrorKind::Config, "the corpus mixes subjects; choose one with --subject");
    }
  }
  const auto windows = training::corpus_windows(corpus, c.overlap, c.discriminator.window_length);
  auto model = model::ModelBundle::create(c.generator, c.discriminator, c.seed, subject);
  const auto metrics_log = training::train(model, windows, c.loss, c.train, [&](model::ModelBundle& m) {
    model::save_checkpoint(m, out);
  });
  model::save_checkpoint(model, out);
  const fs::path csv = metrics.empty() ? c.metrics_csv : metrics;
  if (!csv.empty()) training::write_metrics_csv(csv, metrics_log);
  log << "trained " << metrics_log.size() << " iterations on " << windows.size() << " windows";
  if (!metrics_log.empty()) log << ", final l_reg " << metrics_log.back().l_reg;
  log << '\n';
}

void cmd_synthesize(const fs::path& model_path, const fs::path& in, const fs::path& out_dir, std::ostream& log) {
  auto model = model::load_checkpoint(model_path);
  const auto features = load_features(in);
  const std::size_t W = model.discriminator_config.window_length;
  if (features.length() < W) {
    fail(ErrorKind::TooShort, "input has " + std::to_string(features.length()) +
                                  " frames, synthesis needs at least " + std::to_string(W));
  }
  auto seq = model::synthesize(model, features);
  annotation::smooth_pose(seq);
  fs::create_directories(out_dir);
  io::write_gft(out_dir / "face.gft", gesture_matrix(seq, annotation::Stream::Face));
  io::write_gft(out_dir / "body.gft", gesture_matrix(seq, annotation::Stream::Body));
  io::write_gft(out_dir / "hand.gft", gesture_matrix(seq, annotation::Stream::Hand));
  log << "wrote " << seq.length() << " frames to " << out_dir.string() << '\n';
}

void cmd_evaluate(const fs::path& model_path, const fs::path& manifest, const fs::path& report_path,
                  const config::RunConfig& c, std::ostream& log) {
  auto model = model::load_checkpoint(model_path);
  const Corpus corpus = only_subject(annotation::load_corpus(manifest), c.subject);
  if (corpus.empty()) fail(ErrorKind::InvalidInput, "manifest lists no sequences");
  const auto basis = run_basis(c);

  std::map<std::string, Corpus> by_subject;
  for (const auto& rec : corpus) by_subject[rec.subject_id].push_back(rec);
  std::vector<evaluation::SubjectReport> subjects;
  for (const auto& [subject, part] : by_subject) {
    evaluation::SubjectReport r;
    r.subject_id = subject;
    r.sequences = part.size();
    r.ours_mm = evaluation::model_lip_error(model, part, basis);
    if (part.size() < 2) fail(ErrorKind::Contract, "subject '" + subject + "' needs two sequences for the random baseline");
    r.random_mm = evaluation::random_baseline(part, basis, c.seed);
    subjects.push_back(r);
  }

  const std::size_t W = model.discriminator_config.window_length;
  std::optional<evaluation::SyncAccuracy> sync;
  if (corpus.size() >= 2) {
    const auto pairs = evaluation::sync_test_pairs(corpus, W, W / 8, c.seed);
    sync = evaluation::sync_accuracy_report(model.discriminator, pairs);
  }
  write_json(report_path, evaluation::report_json(subjects, sync ? &*sync : nullptr, W));
  log << "wrote " << report_path.string() << '\n';
}

void cmd_sync_score(const fs::path& model_path, const fs::path& features_path, const fs::path& body_path,
                    const fs::path& hand_path, std::ostream& out) {
  auto model = model::load_checkpoint(model_path);
  const auto features = load_features(features_path);
  const auto body = io::read_gft(body_path);
  const auto hand = io::read_gft(hand_path);
  if (body.dims != annotation::kBodyDims || hand.dims != annotation::kHandDims) {
    fail(ErrorKind::Shape, "sync-score takes body (42 dims) and hand (126 dims) streams");
  }
  if (body.frames() != hand.frames()) fail(ErrorKind::Alignment, "body and hand differ in length");
  annotation::GestureSequence seq;
  seq.resize(body.frames());
  for (std::size_t t = 0; t < body.frames(); ++t) {
    for (std::size_t k = 0; k < annotation::kBodyDims; ++k) seq.body[t][k] = body.row(t)[k];
    for (std::size_t k = 0; k < annotation::kHandDims; ++k) seq.hand[t][k] = hand.row(t)[k];
  }
  const double p = evaluation::plausibility(model.discriminator, features, seq);
  out << std::setprecision(6) << std::fixed << p << '\n';
}

void cmd_make_synthetic(const fs::path& out_dir, std::uint64_t seed, std::size_t sequences, std::size_t length,
                        const std::string& subject, std::ostream& log) {
  const auto corpus = synthetic::generate_synthetic_corpus(seed, sequences, length, subject);
  annotation::save_corpus(out_dir, corpus);
  log << "wrote " << corpus.size() << " sequences to " << out_dir.string() << '\n';
}

void cmd_train_sync(const config::RunConfig& c, const fs::path& out, std::size_t iterations,
                    const fs::path& report_path, std::ostream& log) {
  training::SyncConfig sc;
  sc.window_length = c.discriminator.window_length;
  sc.base_channels = c.discriminator.base_channels;
  sc.iterations = iterations;
  sc.lr = c.train.lr;
  sc.seed = c.seed;
  auto result = training::train_sync_classifier(run_corpus(c), sc);
  model::save_checkpoint(result.model, out);
  const auto report = evaluation::report_json({}, &result.accuracy, sc.window_length);
  if (!report_path.empty()) write_json(report_path, report);
  log << report["sync"].dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Speech-driven face, body and hand gesture synthesis", "gesturegen");
  app.require_subcommand(1);

  std::string in, output, model_path, manifest, features, body, hand, report, metrics;
  RunFlags flags;

  auto* extract = app.add_subcommand("extract-features", "WAV -> 28-dim features at 15 fps (GFT1)");
  extract->add_option("input", in, "Input WAV")->required();
  extract->add_option("output", output, "Output .gft")->required();

  auto* preprocess = app.add_subcommand("preprocess", "Gap-fill and confidence-filter a manifest corpus");
  preprocess->add_option("manifest", manifest, "Input manifest.json")->required();
  preprocess->add_option("output_dir", output, "Output directory")->required();
  flags.attach(preprocess);

  auto* train = app.add_subcommand("train", "Train a subject-specific model");
  train->add_option("output", output, "Output checkpoint (.gck)")->required();
  train->add_option("--metrics", metrics, "Metrics CSV");
  train->add_option("--manifest", manifest, "Training manifest.json (default: the synthetic corpus)")
      ->check(CLI::ExistingFile);
  flags.attach(train);

  auto* synth = app.add_subcommand("synthesize", "Audio -> face.gft, body.gft, hand.gft");
  synth->add_option("model", model_path, "Checkpoint")->required();
  synth->add_option("input", in, "Input WAV or feature .gft")->required();
  synth->add_option("output_dir", output, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Lip error, random baseline and sync accuracy report");
  evaluate->add_option("model", model_path, "Checkpoint")->required();
  evaluate->add_option("manifest", manifest, "Test manifest.json")->required();
  evaluate->add_option("report", report, "Output report (.json)")->required();
  flags.attach(evaluate);

  auto* score = app.add_subcommand("sync-score", "Plausibility of an audio/gesture pair");
  score->add_option("model", model_path, "Checkpoint")->required();
  score->add_option("features", features, "Feature .gft or WAV")->required();
  score->add_option("body", body, "Body .gft")->required();
  score->add_option("hand", hand, "Hand .gft")->required();

  std::size_t sequences = 20, length = 600;
  std::uint64_t synth_seed = 0;
  std::string synth_subject = "synthetic";
  auto* make_synth = app.add_subcommand("make-synthetic", "Write the seeded synthetic corpus");
  make_synth->add_option("output_dir", output, "Output directory")->required();
  make_synth->add_option("--seed", synth_seed, "Corpus seed");
  make_synth->add_option("--sequences", sequences, "Number of sequences")->check(CLI::PositiveNumber);
  make_synth->add_option("--length", length, "Frames per sequence")->check(CLI::Range(64, 1 << 20));
  make_synth->add_option("--subject", synth_subject, "Subject id");

  auto* train_sync = app.add_subcommand("train-sync", "Train and score the in-sync/off-sync classifier");
  train_sync->add_option("output", output, "Output checkpoint (.gck)")->required();
  train_sync->add_option("--report", report, "Accuracy report (.json)");
  train_sync->add_option("--manifest", manifest, "Corpus manifest.json (default: the synthetic corpus)")
      ->check(CLI::ExistingFile);
  flags.attach(train_sync);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gesturegen: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*extract) {
      cmd_extract_features(in, output, out);
    } else if (*preprocess) {
      cmd_preprocess(manifest, output, flags.resolve(), out);
    } else if (*train) {
      auto c = flags.resolve();
      if (!manifest.empty()) c.manifest = manifest;
      cmd_train(c, output, metrics, out);
    } else if (*synth) {
      cmd_synthesize(model_path, in, output, out);
    } else if (*evaluate) {
      cmd_evaluate(model_path, manifest, report, flags.resolve(), out);
    } else if (*score) {
      cmd_sync_score(model_path, features, body, hand, out);
    } else if (*make_synth) {
      cmd_make_synthetic(output, synth_seed, sequences, length, synth_subject, out);
    } else if (*train_sync) {
      auto c = flags.resolve();
      if (!manifest.empty()) c.manifest = manifest;
      cmd_train_sync(c, output, flags.iterations.value_or(300), report, out);
    }
  } catch (const Error& e) {
    err << "gesturegen: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "gesturegen: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace gesture::cli

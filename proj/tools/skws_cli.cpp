// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// skws command-line tool. Exit codes: 0 success, 1 usage, 2 data/format,
// 3 numeric failure, 4 stream cancelled.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skws/skws.h"

namespace {

constexpr int kExitCancelled = 4;

struct Failure {
  skws_status status;
};

int exit_code(skws_status s) {
  switch (s) {
    case SKWS_OK: return 0;
    case SKWS_ERR_FORMAT:
    case SKWS_ERR_IO: return 2;
    case SKWS_ERR_NUMERIC: return 3;
    default: return 1;
  }
}

void check(skws_status s) {
  if (s != SKWS_OK) {
    std::cerr << "error (" << skws_status_name(s) << "): " << skws_last_error() << "\n";
    throw Failure{s};
  }
}

void usage_error(const std::string& msg) {
  std::cerr << "error (usage): " << msg << "\n";
  throw Failure{SKWS_ERR_USAGE};
}

struct Buffer {
  char* p = nullptr;
  ~Buffer() { skws_buffer_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ModelPtr {
  skws_model* p = nullptr;
  ~ModelPtr() { skws_model_free(p); }
};

struct CorpusPtr {
  skws_corpus* p = nullptr;
  ~CorpusPtr() { skws_corpus_free(p); }
};

struct SessionPtr {
  skws_session* p = nullptr;
  ~SessionPtr() { skws_session_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error (io): cannot open '" << path << "'\n";
    throw Failure{SKWS_ERR_IO};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error (io): cannot write '" << path << "'\n";
    throw Failure{SKWS_ERR_IO};
  }
}

// Shared flags.
struct Common {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string precision;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "random seed");
    app->add_option("--config", config_path, "key=value configuration file");
    app->add_option("--precision", precision, "numeric precision")
        ->check(CLI::IsMember({"f32", "f64"}));
  }

  // Config file text checked against `scopes`, with flag overrides applied on top.
  std::string config(unsigned scopes, const std::string& overrides) const {
    const std::string base = config_path.empty() ? "" : read_file(config_path);
    check(skws_config_check(base.c_str(), scopes));
    Buffer merged;
    check(skws_config_merge(base.c_str(), overrides.c_str(), &merged.p));
    return merged.str();
  }

  skws_precision load_precision() const {
    if (precision.empty()) return SKWS_NATIVE;
    return precision == "f64" ? SKWS_F64 : SKWS_F32;
  }
};

template <typename T>
void override_line(std::string& text, const std::string& key, const std::optional<T>& v) {
  if (!v) return;
  std::ostringstream ss;
  ss.precision(17);
  ss << key << "=" << *v << "\n";
  text += ss.str();
}

int run_gen(const Common& c, const std::string& out_dir) {
  std::string ov;
  override_line(ov, "seed", c.seed);
  const std::string spec = c.config(SKWS_SCOPE_CORPUS, ov);
  CorpusPtr corpus;
  check(skws_corpus_generate(spec.c_str(), out_dir.c_str(), &corpus.p));
  for (const char* split : {"train", "dev", "test"}) {
    std::size_t n = 0;
    check(skws_corpus_size(corpus.p, split, &n));
    std::cout << split << "=" << n << "\n";
  }
  return 0;
}

struct TrainFlags {
  std::string data, out, metrics;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr;
};

int run_train(const Common& c, const TrainFlags& f) {
  std::string ov;
  override_line(ov, "epochs", f.epochs);
  override_line(ov, "batch_size", f.batch_size);
  override_line(ov, "lr", f.lr);
  if (!c.precision.empty()) ov += "precision=" + c.precision + "\n";
  const std::string cfg = c.config(SKWS_SCOPE_MODEL | SKWS_SCOPE_TRAIN, ov);
  const std::uint64_t seed = c.seed.value_or(1);

  skws_train_options opts;
  skws_train_options_default(&opts);
  check(skws_train_options_parse(cfg.c_str(), &opts));
  opts.seed = seed;

  CorpusPtr corpus;
  check(skws_corpus_load(f.data.c_str(), &corpus.p));
  ModelPtr model;
  check(skws_model_create(cfg.c_str(), seed, &model.p));

  std::string log = std::string(skws_metrics_csv_header()) + "\n";
  std::cout << skws_metrics_csv_header() << "\n";
  auto on_epoch = [](const skws_epoch_metrics* m, void* user) {
    *static_cast<std::string*>(user) += std::string(m->csv_row) + "\n";
    std::cout << m->csv_row << std::endl;
  };
  check(skws_train(model.p, corpus.p, &opts, on_epoch, &log));
  check(skws_model_save(model.p, f.out.c_str()));
  if (!f.metrics.empty()) write_file(f.metrics, log);
  return 0;
}

struct EvalFlags {
  std::string model, data, split = "test", det;
  long long post_trigger_frames = 24;
};

int run_eval(const Common& c, const EvalFlags& f) {
  if (f.post_trigger_frames < 0) usage_error("--post-trigger-frames must be >= 0");
  ModelPtr model;
  check(skws_model_load(f.model.c_str(), c.load_precision(), &model.p));
  CorpusPtr corpus;
  check(skws_corpus_load(f.data.c_str(), &corpus.p));
  skws_eval_summary s{};
  Buffer det;
  check(skws_eval(model.p, corpus.p, f.split.c_str(),
                  static_cast<std::size_t>(f.post_trigger_frames), &s, &det.p));
  if (f.det.empty())
    std::cout << det.str();
  else
    write_file(f.det, det.str());
  std::printf(
      "post_trigger_frames=%zu\npositives=%zu\nnegatives=%zu\nftr_at_1pct_frr=%.6f\n"
      "vtd_true_accept=%.6f\nvtd_confusable_accept=%.6f\nvtd_random_accept=%.6f\n",
      s.post_trigger_frames, s.positives, s.negatives, s.ftr_at_1pct_frr, s.vtd_true_accept,
      s.vtd_confusable_accept, s.vtd_random_accept);
  return 0;
}

struct StreamFlags {
  std::string model, features;
  double threshold = 0.5;
  std::size_t trigger_frame = 0;
  std::size_t chunk = 1;
};

const char* verdict_name(skws_verdict v) {
  switch (v) {
    case SKWS_PENDING: return "pending";
    case SKWS_TRIGGERED: return "triggered";
    case SKWS_CANCELLED: return "cancelled";
  }
  return "unknown";
}

int run_stream(const Common& c, const StreamFlags& f) {
  if (f.chunk == 0) usage_error("--chunk must be >= 1");
  ModelPtr model;
  check(skws_model_load(f.model.c_str(), c.load_precision(), &model.p));
  float* raw = nullptr;
  std::size_t frames = 0, dim = 0;
  check(skws_features_read(f.features.c_str(), &raw, &frames, &dim));
  std::unique_ptr<float, void (*)(void*)> data(raw, skws_buffer_free);

  SessionPtr session;
  check(skws_session_create(model.p, &session.p));
  check(skws_session_set_policy(session.p, f.threshold, f.trigger_frame));

  std::cout << "frame_idx,phrase_pos_prob,smoothed_score,verdict\n";
  std::vector<skws_emission> buf(64);
  auto drain = [&] {
    std::size_t n = 0;
    do {
      check(skws_session_drain(session.p, buf.data(), nullptr, buf.size(), &n));
      for (std::size_t i = 0; i < n; ++i)
        std::printf("%zu,%.9f,%.9f,%s\n", buf[i].frame, buf[i].positive_prob,
                    buf[i].smoothed_score, verdict_name(buf[i].verdict));
    } while (n == buf.size());
  };
  for (std::size_t at = 0; at < frames; at += f.chunk) {
    const std::size_t n = std::min(f.chunk, frames - at);
    check(skws_session_push(session.p, data.get() + at * dim, n, dim, nullptr));
    drain();
  }
  check(skws_session_finish(session.p, nullptr));
  drain();

  skws_verdict v = SKWS_PENDING;
  std::size_t at = 0;
  check(skws_session_decision(session.p, &v, &at));
  std::fflush(stdout);
  std::cerr << "decision=" << verdict_name(v) << " frame=" << at << "\n";
  return v == SKWS_CANCELLED ? kExitCancelled : 0;
}

struct BenchFlags {
  std::string model;
  std::vector<std::size_t> lengths = {80, 800};
  std::size_t repeats = 5;
};

int run_bench(const Common& c, const BenchFlags& f) {
  ModelPtr model;
  if (f.model.empty()) {
    std::string ov;
    if (!c.precision.empty()) ov += "precision=" + c.precision + "\n";
    const std::string cfg = c.config(SKWS_SCOPE_MODEL, ov);
    check(skws_model_create(cfg.c_str(), c.seed.value_or(1), &model.p));
  } else {
    check(skws_model_load(f.model.c_str(), c.load_precision(), &model.p));
  }
  Buffer csv;
  check(skws_bench(model.p, f.lengths.data(), f.lengths.size(), f.repeats, c.seed.value_or(1),
                   &csv.p));
  std::cout << csv.str();
  return 0;
}

int run_mask(const Common& c, std::size_t shift, std::size_t frames) {
  Buffer grid;
  double diff = 0;
  check(skws_mask_report(shift, frames, c.seed.value_or(1), &grid.p, &diff));
  std::cout << grid.str();
  std::printf("max_abs_diff=%.3e\n", diff);
  return 0;
}

int run_gradcheck(const Common& c, double tolerance) {
  if (!c.precision.empty() && c.precision != "f64")
    usage_error("gradcheck always runs at 64-bit precision");
  const std::string cfg = c.config(SKWS_SCOPE_MODEL, "");
  std::cout << "tensor,entries,max_rel_error,passed\n";
  auto on_entry = [](const skws_gradcheck_entry* e, void*) {
    std::printf("%s,%zu,%.3e,%s\n", e->name, e->entries, e->max_rel_error,
                e->passed ? "yes" : "no");
  };
  int ok = 0;
  check(skws_gradcheck(cfg.c_str(), c.seed.value_or(1), tolerance, on_entry, nullptr, &ok));
  std::printf("all_passed=%s\n", ok ? "yes" : "no");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming transformer keyword spotting engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(skws_version()));

  Common common;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic trigger-phrase corpus");
  gen->add_option("--out", gen_out, "output directory")->required();

  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  tr->add_option("--data", tf.data, "corpus directory")->required();
  tr->add_option("--out", tf.out, "checkpoint path")->required();
  tr->add_option("--metrics", tf.metrics, "write per-epoch metrics CSV here");
  tr->add_option("--epochs", tf.epochs);
  tr->add_option("--batch-size", tf.batch_size);
  tr->add_option("--lr", tf.lr);

  EvalFlags ef;
  auto* ev = app.add_subcommand("eval", "DET sweep over a corpus split");
  ev->add_option("--model", ef.model, "checkpoint path")->required();
  ev->add_option("--data", ef.data, "corpus directory")->required();
  ev->add_option("--split", ef.split)->check(CLI::IsMember({"train", "dev", "test"}));
  ev->add_option("--post-trigger-frames,-K", ef.post_trigger_frames,
                 "frames scored after the trigger end");
  ev->add_option("--det", ef.det, "write the DET CSV here instead of stdout");

  StreamFlags sf;
  auto* st = app.add_subcommand("stream", "stream a feature file through a session");
  st->add_option("--model", sf.model, "checkpoint path")->required();
  st->add_option("--features", sf.features, "feature file")->required();
  st->add_option("--threshold", sf.threshold, "cancel below this smoothed score");
  st->add_option("--trigger-frame", sf.trigger_frame, "first scored frame (0-based)");
  st->add_option("--chunk", sf.chunk, "frames per push");

  BenchFlags bf;
  auto* be = app.add_subcommand("bench", "full-pass vs streaming timing");
  be->add_option("--model", bf.model, "checkpoint path (default: fresh model)");
  be->add_option("--lengths", bf.lengths, "sequence lengths")->delimiter(',');
  be->add_option("--repeats", bf.repeats);

  std::size_t mask_shift = 2, mask_frames = 6;
  auto* ma = app.add_subcommand("mask", "print the streaming attention mask");
  ma->add_option("--shift,-S", mask_shift);
  ma->add_option("--frames,-T", mask_frames);

  double tolerance = 1e-4;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc->add_option("--tol", tolerance);

  for (auto* sub : {gen, tr, ev, st, be, ma, gc}) common.add_to(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen(common, gen_out);
    if (tr->parsed()) return run_train(common, tf);
    if (ev->parsed()) return run_eval(common, ef);
    if (st->parsed()) return run_stream(common, sf);
    if (be->parsed()) return run_bench(common, bf);
    if (ma->parsed()) return run_mask(common, mask_shift, mask_frames);
    if (gc->parsed()) return run_gradcheck(common, tolerance);
  } catch (const Failure& f) {
    return exit_code(f.status);
  }
  return 1;
}

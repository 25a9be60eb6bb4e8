// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "skws/skws.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <exception>
#include <memory>
#include <new>
#include <set>
#include <string>
#include <variant>

#include "evaluation.hpp"
#include "training.hpp"

struct skws_model {
  std::variant<skws::Model<float>, skws::Model<double>> impl;
};

struct skws_session {
  std::variant<skws::StreamingSession<float>, skws::StreamingSession<double>> impl;
  std::deque<skws::FrameEmission> queue;
};

struct skws_corpus {
  skws::Corpus impl;
};

namespace {

thread_local std::string g_last_error;

skws_status status_of(skws::ErrorKind k) {
  switch (k) {
    case skws::ErrorKind::Usage: return SKWS_ERR_USAGE;
    case skws::ErrorKind::Shape: return SKWS_ERR_SHAPE;
    case skws::ErrorKind::State: return SKWS_ERR_STATE;
    case skws::ErrorKind::Format: return SKWS_ERR_FORMAT;
    case skws::ErrorKind::Io: return SKWS_ERR_IO;
    case skws::ErrorKind::Numeric: return SKWS_ERR_NUMERIC;
  }
  return SKWS_ERR_INTERNAL;
}

template <typename Fn>
skws_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SKWS_OK;
  } catch (const skws::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return SKWS_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  skws::require(p != nullptr, skws::ErrorKind::Usage, std::string(what) + " must not be null");
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_string(char** out, const std::string& s) {
  need(out, "output pointer");
  *out = copy_string(s);
}

skws::FeatureSequence frames_from(const float* data, std::size_t n, std::size_t dim) {
  if (n > 0) need(data, "frames");
  return skws::FeatureSequence(n, dim, std::vector<float>(data, data + n * dim));
}

skws::ConfigMap parse_optional(const char* text) {
  return text ? skws::parse_config_text(text) : skws::ConfigMap{};
}

template <typename Fn>
decltype(auto) visit_model(const skws_model* m, Fn&& fn) {
  need(m, "model");
  return std::visit(std::forward<Fn>(fn), m->impl);
}

void enqueue(skws_session* s, std::vector<skws::FrameEmission>&& e, size_t* n_emitted) {
  if (n_emitted) *n_emitted = e.size();
  for (auto& x : e) s->queue.push_back(std::move(x));
}

}  // namespace

extern "C" {

const char* skws_version(void) { return "1.0.0"; }

const char* skws_last_error(void) { return g_last_error.c_str(); }

const char* skws_status_name(skws_status status) {
  switch (status) {
    case SKWS_OK: return "ok";
    case SKWS_ERR_USAGE: return "usage";
    case SKWS_ERR_FORMAT: return "format";
    case SKWS_ERR_NUMERIC: return "numeric";
    case SKWS_ERR_STATE: return "state";
    case SKWS_ERR_SHAPE: return "shape";
    case SKWS_ERR_IO: return "io";
    case SKWS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void skws_buffer_free(void* buffer) { std::free(buffer); }

skws_status skws_default_model_config(char** out) {
  return guarded([&] { put_string(out, skws::ModelConfig{}.to_text()); });
}

skws_status skws_default_corpus_spec(char** out) {
  return guarded(
      [&] { put_string(out, skws::format_config_text(skws::CorpusSpec{}.to_map())); });
}

skws_status skws_config_merge(const char* base, const char* overrides, char** out) {
  return guarded([&] {
    skws::ConfigMap merged = parse_optional(base);
    for (auto& [k, v] : parse_optional(overrides)) merged[k] = v;
    put_string(out, skws::format_config_text(merged));
  });
}

skws_status skws_config_check(const char* text, unsigned scopes) {
  return guarded([&] {
    std::set<std::string> allowed;
    if (scopes & SKWS_SCOPE_MODEL)
      allowed.insert(skws::model_config_keys().begin(), skws::model_config_keys().end());
    if (scopes & SKWS_SCOPE_TRAIN)
      allowed.insert(skws::train_config_keys().begin(), skws::train_config_keys().end());
    if (scopes & SKWS_SCOPE_CORPUS)
      for (const auto& [k, v] : skws::CorpusSpec{}.to_map()) allowed.insert(k);
    for (const auto& [k, v] : parse_optional(text))
      skws::require(allowed.count(k) > 0, skws::ErrorKind::Usage, "unknown config key '" + k + "'");
  });
}

skws_status skws_model_create(const char* config_text, uint64_t seed, skws_model** out) {
  return guarded([&] {
    need(out, "output pointer");
    const auto cfg = skws::ModelConfig::from_map(parse_optional(config_text));
    if (cfg.precision == skws::Precision::F64)
      *out = new skws_model{skws::Model<double>::init(cfg, seed)};
    else
      *out = new skws_model{skws::Model<float>::init(cfg, seed)};
  });
}

skws_status skws_model_load(const char* path, skws_precision precision, skws_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output pointer");
    skws::require(precision == SKWS_F32 || precision == SKWS_F64 || precision == SKWS_NATIVE,
                  skws::ErrorKind::Usage, "unknown precision");
    const bool f64 = precision == SKWS_NATIVE
                         ? skws::checkpoint_precision(path) == skws::Precision::F64
                         : precision == SKWS_F64;
    if (f64)
      *out = new skws_model{skws::load_checkpoint<double>(path)};
    else
      *out = new skws_model{skws::load_checkpoint<float>(path)};
  });
}

skws_status skws_model_save(const skws_model* model, const char* path) {
  return guarded([&] {
    need(path, "path");
    visit_model(model, [&](const auto& m) { skws::save_checkpoint(m, path); });
  });
}

void skws_model_free(skws_model* model) { delete model; }

skws_status skws_model_config(const skws_model* model, char** out) {
  return guarded(
      [&] { visit_model(model, [&](const auto& m) { put_string(out, m.config.to_text()); }); });
}

skws_status skws_model_info_get(const skws_model* model, skws_model_info* info) {
  return guarded([&] {
    need(info, "info");
    visit_model(model, [&](const auto& m) {
      const auto& c = m.config;
      *info = {c.feature_dim,
               c.d_model,
               c.n_layers,
               c.vocab_size,
               c.block_shift,
               m.params.parameter_count(),
               c.precision == skws::Precision::F64 ? SKWS_F64 : SKWS_F32};
    });
  });
}

skws_status skws_model_forward(const skws_model* model, const float* frames, size_t n_frames,
                               size_t dim, double* phrase_pos_probs, double* phonetic_log_probs) {
  return guarded([&] {
    if (n_frames > 0) need(phrase_pos_probs, "phrase_pos_probs");
    visit_model(model, [&](const auto& m) {
      const auto out = skws::forward_full(frames_from(frames, n_frames, dim), m.params, m.config);
      const auto probs = skws::phrase_positive_probs(out.phrase_logits);
      std::copy(probs.begin(), probs.end(), phrase_pos_probs);
      if (phonetic_log_probs)
        for (auto v : out.phonetic_log_probs.values()) *phonetic_log_probs++ = v;
    });
  });
}

skws_status skws_session_create(const skws_model* model, skws_session** out) {
  return guarded([&] {
    need(out, "output pointer");
    visit_model(model, [&](const auto& m) {
      using Real = typename std::decay_t<decltype(m.params.phrase.weight)>::value_type;
      *out = new skws_session{skws::StreamingSession<Real>(m), {}};
    });
  });
}

void skws_session_free(skws_session* session) { delete session; }

skws_status skws_session_set_policy(skws_session* session, double threshold,
                                    size_t trigger_frame) {
  return guarded([&] {
    need(session, "session");
    skws::require(std::isfinite(threshold), skws::ErrorKind::Usage, "threshold must be finite");
    std::visit([&](auto& s) { s.set_policy({threshold, trigger_frame}); }, session->impl);
  });
}

skws_status skws_session_push(skws_session* session, const float* frames, size_t n_frames,
                              size_t dim, size_t* n_emitted) {
  return guarded([&] {
    need(session, "session");
    const auto f = frames_from(frames, n_frames, dim);
    std::visit([&](auto& s) { enqueue(session, s.push(f), n_emitted); }, session->impl);
  });
}

skws_status skws_session_finish(skws_session* session, size_t* n_emitted) {
  return guarded([&] {
    need(session, "session");
    std::visit([&](auto& s) { enqueue(session, s.finish(), n_emitted); }, session->impl);
  });
}

skws_status skws_session_drain(skws_session* session, skws_emission* out,
                               double* phonetic_log_probs, size_t capacity, size_t* n_out) {
  return guarded([&] {
    need(session, "session");
    need(n_out, "n_out");
    if (capacity > 0) need(out, "output array");
    std::size_t n = 0;
    while (n < capacity && !session->queue.empty()) {
      const skws::FrameEmission& e = session->queue.front();
      out[n] = {e.frame, e.positive_prob, e.smoothed_score,
                static_cast<skws_verdict>(static_cast<int>(e.verdict))};
      if (phonetic_log_probs)
        for (double v : e.phonetic_log_probs) *phonetic_log_probs++ = v;
      session->queue.pop_front();
      ++n;
    }
    *n_out = n;
  });
}

skws_status skws_session_smoothed_score(const skws_session* session, double* score) {
  return guarded([&] {
    need(session, "session");
    need(score, "score");
    *score = std::visit([](const auto& s) { return s.smoothed_score(); }, session->impl);
  });
}

skws_status skws_session_decision(const skws_session* session, skws_verdict* verdict,
                                  size_t* frame) {
  return guarded([&] {
    need(session, "session");
    const auto d = std::visit([](const auto& s) { return s.decision(); }, session->impl);
    if (verdict) *verdict = static_cast<skws_verdict>(static_cast<int>(d.verdict));
    if (frame) *frame = d.frame;
  });
}

skws_status skws_session_stats_get(const skws_session* session, skws_session_stats* stats) {
  return guarded([&] {
    need(session, "session");
    need(stats, "stats");
    const auto st = std::visit([](const auto& s) { return s.stats(); }, session->impl);
    *stats = {st.blocks, st.frames_consumed, st.state_bytes, 0, 0, 0};
    if (!st.block_seconds.empty()) {
      stats->block_median_seconds = skws::median(st.block_seconds);
      double sum = 0;
      for (double b : st.block_seconds) sum += b;
      stats->block_mean_seconds = sum / static_cast<double>(st.block_seconds.size());
      stats->block_p95_seconds = skws::percentile(st.block_seconds, 0.95);
    }
  });
}

skws_status skws_features_read(const char* path, float** data, size_t* n_frames, size_t* dim) {
  return guarded([&] {
    need(path, "path");
    need(data, "data");
    need(n_frames, "n_frames");
    need(dim, "dim");
    const auto f = skws::read_features(path);
    auto* buf = static_cast<float*>(std::malloc(std::max<std::size_t>(1, f.size()) * sizeof(float)));
    if (!buf) throw std::bad_alloc();
    std::copy(f.values().begin(), f.values().end(), buf);
    *data = buf;
    *n_frames = f.rows();
    *dim = f.cols();
  });
}

skws_status skws_features_write(const char* path, const float* data, size_t n_frames,
                                size_t dim) {
  return guarded([&] {
    need(path, "path");
    skws::write_features(path, frames_from(data, n_frames, dim));
  });
}

skws_status skws_corpus_generate(const char* spec_text, const char* dir, skws_corpus** out) {
  return guarded([&] {
    need(out, "output pointer");
    const auto spec = skws::CorpusSpec::from_map(parse_optional(spec_text));
    auto corpus = std::make_unique<skws_corpus>(skws_corpus{skws::generate_corpus(spec)});
    if (dir) skws::write_corpus(corpus->impl, dir);
    *out = corpus.release();
  });
}

skws_status skws_corpus_load(const char* dir, skws_corpus** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "output pointer");
    *out = new skws_corpus{skws::read_corpus(dir)};
  });
}

void skws_corpus_free(skws_corpus* corpus) { delete corpus; }

skws_status skws_corpus_size(const skws_corpus* corpus, const char* split, size_t* n) {
  return guarded([&] {
    need(corpus, "corpus");
    need(split, "split");
    need(n, "n");
    *n = corpus->impl.split(split).size();
  });
}

void skws_train_options_default(skws_train_options* opts) {
  if (!opts) return;
  const skws::TrainOptions d;
  *opts = {d.epochs,   d.batch_size, d.adam.lr,    d.adam.beta1,
           d.adam.beta2, d.adam.eps, d.clip_norm, d.seed};
}

namespace {

skws::TrainOptions to_internal(const skws_train_options& o) {
  skws::TrainOptions t;
  t.epochs = o.epochs;
  t.batch_size = o.batch_size;
  t.adam = {o.lr, o.beta1, o.beta2, o.eps};
  t.clip_norm = o.clip_norm;
  t.seed = o.seed;
  return t;
}

}  // namespace

skws_status skws_train_options_parse(const char* config_text, skws_train_options* opts) {
  return guarded([&] {
    need(opts, "opts");
    const auto t = skws::TrainOptions::from_map(parse_optional(config_text), to_internal(*opts));
    *opts = {t.epochs, t.batch_size, t.adam.lr, t.adam.beta1, t.adam.beta2, t.adam.eps,
             t.clip_norm, opts->seed};
  });
}

const char* skws_metrics_csv_header(void) {
  static const std::string h = skws::metrics_csv_header();
  return h.c_str();
}

skws_status skws_train(skws_model* model, const skws_corpus* corpus,
                       const skws_train_options* opts, skws_epoch_callback callback, void* user) {
  return guarded([&] {
    need(model, "model");
    need(corpus, "corpus");
    need(opts, "opts");
    const auto t = to_internal(*opts);
    skws::EpochCallback cb;
    if (callback) {
      cb = [&](const skws::EpochMetrics& e) {
        const std::string row = skws::metrics_csv_row(e);
        const skws_epoch_metrics m{e.epoch,        e.ctc_loss, e.phrase_loss, e.phrase_acc,
                                   e.wall_seconds, e.skipped,  row.c_str()};
        callback(&m, user);
      };
    }
    std::visit([&](auto& m) { skws::train(m, corpus->impl.train, corpus->impl.dev, t, cb); },
               model->impl);
  });
}

skws_status skws_gradcheck(const char* config_text, uint64_t seed, double tolerance,
                           skws_gradcheck_callback callback, void* user, int* all_passed) {
  return guarded([&] {
    skws::require(tolerance > 0, skws::ErrorKind::Usage, "tolerance must be positive");
    const auto cfg = skws::ModelConfig::from_map(parse_optional(config_text));
    const auto rep = skws::gradcheck(cfg, seed, tolerance);
    if (callback)
      for (const auto& e : rep.tensors) {
        const skws_gradcheck_entry c{e.name.c_str(), e.max_rel_error, e.entries, e.passed ? 1 : 0};
        callback(&c, user);
      }
    if (all_passed) *all_passed = rep.all_passed() ? 1 : 0;
  });
}

skws_status skws_eval(const skws_model* model, const skws_corpus* corpus, const char* split,
                      size_t post_trigger_frames, skws_eval_summary* summary, char** det_csv) {
  return guarded([&] {
    need(corpus, "corpus");
    need(split, "split");
    const auto res = visit_model(model, [&](const auto& m) {
      return skws::evaluate(m, corpus->impl.split(split), corpus->impl.spec.trigger,
                            post_trigger_frames);
    });
    if (summary) {
      const auto& s = res.summary;
      *summary = {s.post_trigger_frames, s.positives,          s.negatives,
                  s.ftr_at_1pct_frr,     s.vtd_true_accept,     s.vtd_confusable_accept,
                  s.vtd_random_accept};
    }
    if (det_csv) *det_csv = copy_string(skws::det_csv(res.det));
  });
}

skws_status skws_bench(const skws_model* model, const size_t* lengths, size_t n_lengths,
                       size_t repeats, uint64_t seed, char** csv) {
  return guarded([&] {
    if (n_lengths > 0) need(lengths, "lengths");
    const std::vector<std::size_t> lens(lengths, lengths + n_lengths);
    const auto rows =
        visit_model(model, [&](const auto& m) { return skws::bench(m, lens, repeats, seed); });
    std::string out = skws::bench_csv_header() + "\n";
    for (const auto& r : rows) out += skws::bench_csv_row(r) + "\n";
    put_string(csv, out);
  });
}

skws_status skws_mask_report(size_t shift, size_t frames, uint64_t seed, char** grid,
                             double* max_abs_diff) {
  return guarded([&] {
    const skws::ModelConfig toy;
    const auto rep = skws::mask_report(shift, frames, toy.d_model, toy.n_heads, toy.n_layers, seed);
    if (grid) *grid = copy_string(rep.grid);
    if (max_abs_diff) *max_abs_diff = rep.max_abs_diff;
  });
}

}  // extern "C"

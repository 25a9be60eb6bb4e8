// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "binary_io.hpp"

namespace skws {

namespace fs = std::filesystem;

double TokenAlphabet::max_pairwise_cosine() const {
  double worst = -1.0;
  for (std::size_t a = 0; a < prototypes.size(); ++a)
    for (std::size_t b = a + 1; b < prototypes.size(); ++b) {
      double dot = 0;
      for (std::size_t k = 0; k < prototypes[a].size(); ++k)
        dot += prototypes[a][k] * prototypes[b][k];
      worst = std::max(worst, dot);
    }
  return worst;
}

TokenAlphabet TokenAlphabet::generate(std::size_t vocab, std::size_t feature_dim,
                                      double max_cosine, Rng& rng) {
  require(vocab >= 1 && feature_dim >= 1, ErrorKind::Usage,
          "alphabet needs at least one token and one feature");
  TokenAlphabet alpha;
  constexpr int kMaxAttempts = 100000;
  int attempts = 0;
  while (alpha.prototypes.size() < vocab) {
    require(++attempts <= kMaxAttempts, ErrorKind::Usage,
            "cannot place " + std::to_string(vocab) + " prototypes in " +
                std::to_string(feature_dim) + " dims with cosine < " + format_real(max_cosine));
    std::vector<double> v(feature_dim);
    double norm = 0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (double& x : v) x /= norm;
    bool ok = true;
    for (const auto& p : alpha.prototypes) {
      double dot = 0;
      for (std::size_t k = 0; k < feature_dim; ++k) dot += p[k] * v[k];
      if (dot >= max_cosine) {
        ok = false;
        break;
      }
    }
    if (ok) alpha.prototypes.push_back(std::move(v));
  }
  return alpha;
}

std::string to_string(UtteranceKind k) {
  switch (k) {
    case UtteranceKind::True:
      return "true";
    case UtteranceKind::Confusable:
      return "conf";
    case UtteranceKind::Random:
      return "rand";
  }
  return "rand";
}

UtteranceKind kind_from_id(const std::string& id) {
  if (id.starts_with("true-")) return UtteranceKind::True;
  if (id.starts_with("conf-")) return UtteranceKind::Confusable;
  if (id.starts_with("rand-")) return UtteranceKind::Random;
  fail(ErrorKind::Format, "utterance id '" + id + "' has no kind prefix");
}

namespace {

std::string join_tokens(const std::vector<std::int32_t>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(tokens[i]);
  }
  return s;
}

std::vector<std::int32_t> split_tokens(const std::string& s, const std::string& what) {
  std::vector<std::int32_t> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tok.size() && used > 0, ErrorKind::Format,
            what + ": '" + tok + "' is not an integer token id");
    out.push_back(static_cast<std::int32_t>(v));
  }
  return out;
}

bool contains_sequence(const std::vector<std::int32_t>& hay,
                       const std::vector<std::int32_t>& needle) {
  return !needle.empty() &&
         std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

void CorpusSpec::validate() const {
  require(n_true > 0 && n_confusable > 0 && n_random > 0, ErrorKind::Usage,
          "corpus needs a nonzero count for every class (true, confusable, random)");
  require(!trigger.empty(), ErrorKind::Usage, "trigger phrase is empty");
  require(divergence_point <= trigger.size(), ErrorKind::Usage,
          "divergence point exceeds trigger length");
  require(vocab_size >= 2 && feature_dim >= 1 && frames_per_token >= 1, ErrorKind::Usage,
          "vocab_size >= 2, feature_dim >= 1 and frames_per_token >= 1 are required");
  auto in_vocab = [&](const std::vector<std::int32_t>& v, const char* what) {
    for (std::int32_t t : v)
      require(t >= 0 && static_cast<std::size_t>(t) < vocab_size, ErrorKind::Usage,
              std::string(what) + " token " + std::to_string(t) + " is outside the vocabulary");
  };
  in_vocab(trigger, "trigger");
  in_vocab(true_continuation, "true continuation");
  in_vocab(confusable_continuation, "confusable continuation");
  require(!true_continuation.empty() && !confusable_continuation.empty(), ErrorKind::Usage,
          "continuation token sets must be nonempty");
  require(continuation_purity >= 0.0 && continuation_purity <= 1.0, ErrorKind::Usage,
          "continuation_purity must be in [0, 1]");
  require(sigma >= 0.0, ErrorKind::Usage, "sigma must be non-negative");
  require(train_fraction > 0 && dev_fraction >= 0 && train_fraction + dev_fraction < 1.0,
          ErrorKind::Usage, "split fractions must leave room for a test split");
  require(random_tokens >= 1, ErrorKind::Usage, "random_tokens must be >= 1");
}

ConfigMap CorpusSpec::to_map() const {
  ConfigMap m;
  m["confusable_continuation"] = join_tokens(confusable_continuation);
  m["continuation_purity"] = format_real(continuation_purity);
  m["continuation_tokens"] = std::to_string(continuation_tokens);
  m["dev_fraction"] = format_real(dev_fraction);
  m["divergence_point"] = std::to_string(divergence_point);
  m["feature_dim"] = std::to_string(feature_dim);
  m["frames_per_token"] = std::to_string(frames_per_token);
  m["max_jitter"] = std::to_string(max_jitter);
  m["max_prototype_cosine"] = format_real(max_prototype_cosine);
  m["n_confusable"] = std::to_string(n_confusable);
  m["n_random"] = std::to_string(n_random);
  m["n_true"] = std::to_string(n_true);
  m["random_tokens"] = std::to_string(random_tokens);
  m["seed"] = std::to_string(seed);
  m["sigma"] = format_real(sigma);
  m["train_fraction"] = format_real(train_fraction);
  m["trigger"] = join_tokens(trigger);
  m["true_continuation"] = join_tokens(true_continuation);
  m["vocab_size"] = std::to_string(vocab_size);
  return m;
}

CorpusSpec CorpusSpec::from_map(const ConfigMap& m) {
  CorpusSpec s;
  auto tokens = [&](const char* key, std::vector<std::int32_t>& dst) {
    if (auto it = m.find(key); it != m.end()) dst = split_tokens(it->second, key);
  };
  tokens("confusable_continuation", s.confusable_continuation);
  s.continuation_purity = config_real(m, "continuation_purity", s.continuation_purity);
  s.continuation_tokens = config_count(m, "continuation_tokens", s.continuation_tokens);
  s.dev_fraction = config_real(m, "dev_fraction", s.dev_fraction);
  s.divergence_point = config_count(m, "divergence_point", s.divergence_point);
  s.feature_dim = config_count(m, "feature_dim", s.feature_dim);
  s.frames_per_token = config_count(m, "frames_per_token", s.frames_per_token);
  s.max_jitter = config_count(m, "max_jitter", s.max_jitter);
  s.max_prototype_cosine = config_real(m, "max_prototype_cosine", s.max_prototype_cosine);
  s.n_confusable = config_count(m, "n_confusable", s.n_confusable);
  s.n_random = config_count(m, "n_random", s.n_random);
  s.n_true = config_count(m, "n_true", s.n_true);
  s.random_tokens = config_count(m, "random_tokens", s.random_tokens);
  s.seed = config_count(m, "seed", s.seed);
  s.sigma = config_real(m, "sigma", s.sigma);
  s.train_fraction = config_real(m, "train_fraction", s.train_fraction);
  tokens("trigger", s.trigger);
  tokens("true_continuation", s.true_continuation);
  s.vocab_size = config_count(m, "vocab_size", s.vocab_size);
  s.validate();
  return s;
}

const std::vector<Utterance>& Corpus::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  fail(ErrorKind::Usage, "unknown split '" + name + "' (expected train, dev or test)");
}

namespace {

std::int32_t draw_from(const std::vector<std::int32_t>& set, Rng& rng) {
  return set[static_cast<std::size_t>(rng.below(set.size()))];
}

Utterance render(const CorpusSpec& spec, const TokenAlphabet& alpha, UtteranceKind kind,
                 std::size_t index, Rng rng) {
  Utterance u;
  char id[32];
  std::snprintf(id, sizeof id, "%s-%05zu", to_string(kind).c_str(), index);
  u.id = id;
  u.phrase_label = kind == UtteranceKind::True ? 1 : 0;

  const auto vocab = static_cast<std::int32_t>(spec.vocab_size);
  switch (kind) {
    case UtteranceKind::True:
    case UtteranceKind::Confusable: {
      const bool positive = kind == UtteranceKind::True;
      for (std::size_t i = 0; i < spec.trigger.size(); ++i) {
        if (positive || i < spec.divergence_point) {
          u.tokens.push_back(spec.trigger[i]);
        } else {
          std::int32_t t;
          do {
            t = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab)));
          } while (t == spec.trigger[i]);
          u.tokens.push_back(t);
        }
      }
      const auto& own = positive ? spec.true_continuation : spec.confusable_continuation;
      const auto& other = positive ? spec.confusable_continuation : spec.true_continuation;
      for (std::size_t i = 0; i < spec.continuation_tokens; ++i)
        u.tokens.push_back(draw_from(rng.uniform() < spec.continuation_purity ? own : other, rng));
      break;
    }
    case UtteranceKind::Random: {
      do {
        u.tokens.clear();
        for (std::size_t i = 0; i < spec.random_tokens; ++i)
          u.tokens.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab))));
      } while (contains_sequence(u.tokens, spec.trigger));
      break;
    }
  }

  const std::size_t jitter = static_cast<std::size_t>(rng.below(spec.max_jitter + 1));
  const std::size_t frames = jitter + u.tokens.size() * spec.frames_per_token;
  u.trigger_end_frame = jitter + spec.trigger.size() * spec.frames_per_token;
  u.features = FeatureSequence(frames, spec.feature_dim);
  std::size_t t = 0;
  for (; t < jitter; ++t)
    for (std::size_t k = 0; k < spec.feature_dim; ++k)
      u.features(t, k) = static_cast<float>(spec.sigma * rng.normal());
  for (std::int32_t tok : u.tokens) {
    const auto& proto = alpha.prototypes[static_cast<std::size_t>(tok)];
    for (std::size_t r = 0; r < spec.frames_per_token; ++r, ++t)
      for (std::size_t k = 0; k < spec.feature_dim; ++k)
        u.features(t, k) = static_cast<float>(proto[k] + spec.sigma * rng.normal());
  }
  return u;
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus c;
  c.spec = spec;
  const Rng root(spec.seed);
  Rng alpha_rng = root.fork(0);
  c.alphabet = TokenAlphabet::generate(spec.vocab_size, spec.feature_dim,
                                       spec.max_prototype_cosine, alpha_rng);

  auto emit = [&](UtteranceKind kind, std::size_t count, std::uint64_t salt) {
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * count));
    const auto n_dev = static_cast<std::size_t>(std::floor(spec.dev_fraction * count));
    const Rng kind_rng = root.fork(salt);
    for (std::size_t i = 0; i < count; ++i) {
      Utterance u = render(spec, c.alphabet, kind, i, kind_rng.fork(i + 1));
      if (i < n_train)
        c.train.push_back(std::move(u));
      else if (i < n_train + n_dev)
        c.dev.push_back(std::move(u));
      else
        c.test.push_back(std::move(u));
    }
  };
  emit(UtteranceKind::True, spec.n_true, 1);
  emit(UtteranceKind::Confusable, spec.n_confusable, 2);
  emit(UtteranceKind::Random, spec.n_random, 3);
  return c;
}

std::string feature_bytes(const FeatureSequence& f) {
  require(all_finite(f), ErrorKind::Numeric, "feature sequence contains non-finite values");
  ByteWriter w;
  w.bytes(std::string_view(kFeatureMagic, sizeof(kFeatureMagic) - 1));
  w.scalar<std::uint16_t>(kFeatureVersion);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(f.rows()));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(f.cols()));
  for (float v : f.values()) w.scalar<float>(v);
  return w.buffer();
}

FeatureSequence features_from_bytes(const std::string& bytes, const std::string& context) {
  ByteReader r(bytes, context);
  require(r.bytes(sizeof(kFeatureMagic) - 1) ==
              std::string_view(kFeatureMagic, sizeof(kFeatureMagic) - 1),
          ErrorKind::Format, context + ": bad magic");
  const auto version = r.scalar<std::uint16_t>();
  require(version == kFeatureVersion, ErrorKind::Format,
          context + ": unsupported version " + std::to_string(version));
  const auto frames = r.scalar<std::uint32_t>();
  const auto dim = r.scalar<std::uint32_t>();
  const std::uint64_t expected = std::uint64_t{frames} * dim * sizeof(float);
  require(r.remaining() == expected, ErrorKind::Format,
          context + ": header declares " + std::to_string(frames) + "x" + std::to_string(dim) +
              " (" + std::to_string(expected) + " payload bytes) but " +
              std::to_string(r.remaining()) + " bytes follow");
  FeatureSequence f(frames, dim);
  for (float& v : f.values()) v = r.scalar<float>();
  for (std::size_t i = 0; i < f.size(); ++i)
    require(std::isfinite(f.data()[i]), ErrorKind::Format,
            context + ": non-finite value at frame " + std::to_string(i / dim) + ", dim " +
                std::to_string(i % dim));
  return f;
}

void write_features(const std::string& path, const FeatureSequence& f) {
  write_text_file(path, feature_bytes(f));
}

FeatureSequence read_features(const std::string& path) {
  return features_from_bytes(read_text_file(path), path);
}

std::string format_labels(const std::vector<LabelRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    require(!r.id.empty() && r.id.find_first_of("\t\n") == std::string::npos, ErrorKind::Usage,
            "utterance id must be nonempty without tabs or newlines");
    out += r.id + "\t" + std::to_string(r.phrase_label) + "\t" +
           std::to_string(r.trigger_end_frame) + "\t" + join_tokens(r.tokens) + "\n";
  }
  return out;
}

std::vector<LabelRecord> parse_labels(const std::string& text, std::size_t vocab_size) {
  std::vector<LabelRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "labels line " + std::to_string(lineno);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    require(fields.size() == 4, ErrorKind::Format,
            where + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    LabelRecord r;
    r.id = fields[0];
    require(!r.id.empty(), ErrorKind::Format, where + ": empty utterance id");
    require(fields[1] == "0" || fields[1] == "1", ErrorKind::Format,
            where + ": phrase label must be 0 or 1");
    r.phrase_label = fields[1] == "1" ? 1 : 0;
    const auto frame = split_tokens(fields[2], where);
    require(frame.size() == 1 && frame[0] >= 0, ErrorKind::Format,
            where + ": trigger_end_frame must be a non-negative integer");
    r.trigger_end_frame = static_cast<std::size_t>(frame[0]);
    r.tokens = split_tokens(fields[3], where);
    for (std::int32_t t : r.tokens)
      require(t >= 0 && static_cast<std::size_t>(t) < vocab_size, ErrorKind::Format,
              where + ": token id " + std::to_string(t) + " outside vocabulary of " +
                  std::to_string(vocab_size));
    out.push_back(std::move(r));
  }
  return out;
}

void write_labels(const std::string& path, const std::vector<LabelRecord>& records) {
  write_text_file(path, format_labels(records));
}

std::vector<LabelRecord> read_labels(const std::string& path, std::size_t vocab_size) {
  return parse_labels(read_text_file(path), vocab_size);
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
  write_text_file((fs::path(dir) / "corpus.txt").string(),
                  format_config_text(corpus.spec.to_map()));
  for (const char* name : {"train", "dev", "test"}) {
    const fs::path sub = fs::path(dir) / name;
    fs::create_directories(sub, ec);
    require(!ec, ErrorKind::Io, "cannot create '" + sub.string() + "': " + ec.message());
    std::vector<LabelRecord> records;
    for (const Utterance& u : corpus.split(name)) {
      write_features((sub / (u.id + ".feat")).string(), u.features);
      records.push_back({u.id, u.phrase_label, u.trigger_end_frame, u.tokens});
    }
    write_labels((sub / "labels.tsv").string(), records);
  }
}

Corpus read_corpus(const std::string& dir) {
  Corpus c;
  c.spec = CorpusSpec::from_map(parse_config_text(read_text_file((fs::path(dir) / "corpus.txt").string())));
  Rng alpha_rng = Rng(c.spec.seed).fork(0);
  c.alphabet = TokenAlphabet::generate(c.spec.vocab_size, c.spec.feature_dim,
                                       c.spec.max_prototype_cosine, alpha_rng);
  for (const char* name : {"train", "dev", "test"}) {
    const fs::path sub = fs::path(dir) / name;
    auto& dst = name == std::string("train") ? c.train : name == std::string("dev") ? c.dev : c.test;
    for (LabelRecord& r : read_labels((sub / "labels.tsv").string(), c.spec.vocab_size)) {
      Utterance u;
      u.features = read_features((sub / (r.id + ".feat")).string());
      require(u.features.cols() == c.spec.feature_dim, ErrorKind::Format,
              "utterance '" + r.id + "' has " + std::to_string(u.features.cols()) +
                  " features per frame, corpus declares " + std::to_string(c.spec.feature_dim));
      u.id = std::move(r.id);
      u.phrase_label = r.phrase_label;
      u.trigger_end_frame = r.trigger_end_frame;
      u.tokens = std::move(r.tokens);
      kind_from_id(u.id);
      dst.push_back(std::move(u));
    }
  }
  return c;
}

}  // namespace skws

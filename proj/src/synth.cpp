#include "vens/synth.hpp"

#include "vens/rng.hpp"

namespace vens {

namespace {

std::string filler_token(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%03d", i);
  return buf;
}

std::string keyword_token(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "kw%02d", i);
  return buf;
}

std::vector<ClassificationExample> make_split(int n, const SynthConfig& cfg, Rng rng) {
  const int n_filler = cfg.vocab_size - cfg.num_keywords;
  std::vector<ClassificationExample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int true_label = rng.uniform_int(2);
    const int len = cfg.min_len + rng.uniform_int(cfg.max_len - cfg.min_len + 1);
    ClassificationExample ex;
    ex.tokens.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) ex.tokens.push_back(filler_token(rng.uniform_int(n_filler)));
    if (true_label == 1) {
      const int inserts = 1 + rng.uniform_int(2);
      for (int j = 0; j < inserts; ++j) {
        const int pos = rng.uniform_int(len);
        ex.tokens[static_cast<std::size_t>(pos)] =
            keyword_token(rng.uniform_int(cfg.num_keywords));
      }
    }
    const bool flip = rng.uniform() < cfg.label_noise;
    ex.label = flip ? 1 - true_label : true_label;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

SynthData make_synthetic_classification(const SynthConfig& config) {
  if (config.num_keywords >= config.vocab_size) {
    throw ConfigError("synth: keywords must leave room for filler tokens");
  }
  if (config.min_len < 1 || config.max_len < config.min_len) {
    throw ConfigError("synth: bad sentence length range");
  }
  Rng root(config.seed);
  SynthData data;
  data.labels.add_or_lookup("neg");
  data.labels.add_or_lookup("pos");
  data.train = make_split(config.n_train, config, root.fork("train"));
  data.valid = make_split(config.n_valid, config, root.fork("valid"));
  data.test = make_split(config.n_test, config, root.fork("test"));
  return data;
}

}  // namespace vens

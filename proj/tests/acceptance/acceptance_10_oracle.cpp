// Soundness of the oracle recognizer on rendered utterances.

#include "criteria.hpp"
#include "mist/rng.hpp"
#include "mist/synth.hpp"

using namespace mist;
using acceptance::fmt;

int main() {
  acceptance::Criteria log("oracle");
  World w = make_world(DatasetConfig{});
  Rng rng = Rng::stream(w.config.seed, "acceptance.oracle");
  const std::size_t n = 1000;
  double clean_ter = 0.0, noisy_ter = 0.0;
  std::size_t clean_style = 0, noisy_style = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = w.config.min_length + rng.index(w.config.max_length - w.config.min_length + 1);
    std::vector<std::size_t> c(len);
    for (auto& t : c) t = rng.index(w.config.vocab);
    const std::size_t s = rng.index(w.config.num_styles);
    Recognition clean = oracle_recognize(w, render(w, c, s, rng, 0.0));
    Recognition noisy = oracle_recognize(w, render(w, c, s, rng));
    clean_ter += token_error_rate(clean.tokens, c);
    noisy_ter += token_error_rate(noisy.tokens, c);
    clean_style += clean.style == s;
    noisy_style += noisy.style == s;
  }
  clean_ter /= n;
  noisy_ter /= n;
  log.check("noiseless round trip", clean_ter == 0.0, fmt("TER %.6f over %zu utterances, required 0", clean_ter, n));
  log.check("noisy round trip", noisy_ter < 0.01,
            fmt("TER %.6f at sigma %.2f, limit 0.01", noisy_ter, w.config.noise));
  log.check("clean style accuracy", clean_style == n, fmt("%zu / %zu", clean_style, n));
  log.info("noisy style accuracy", fmt("%zu / %zu", noisy_style, n));
  log.info("separability", fmt("min separation %.4f vs 6 sigma %.4f", w.min_separation, 6 * w.config.noise));
  return log.finish();
}

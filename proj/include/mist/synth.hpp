#pragma once

// Synthetic style/content task with exact ground truth.
//
// Content is a token sequence; each token is rendered to one frame as
//   x_t = g_s * R[c_t] + mu_s + sigma * eps_t
// where (g_s, mu_s) are the hidden parameters of style s and R is a fixed
// rendering codebook. Because the rendering is affine per style, a brute-force
// search over styles and tokens inverts it exactly; that inverse is the
// recognizer used to score synthesized output.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mist/tensor.hpp"

namespace mist {

class Rng;

struct DatasetConfig {
  std::uint64_t seed = 7;
  std::size_t vocab = 16;        // V
  std::size_t num_styles = 8;    // S
  std::size_t frame_dim = 8;     // d_x
  double noise = 0.05;           // sigma
  double gain_min = 0.5;
  double gain_max = 2.0;
  double offset_scale = 1.0;     // mu_s ~ normal(0, offset_scale) per dimension
  double codebook_scale = 1.0;   // R ~ normal(0, codebook_scale) per entry
  std::size_t min_length = 4;
  std::size_t max_length = 12;
  std::size_t pretrain_size = 1000;
  std::size_t heldout_size = 200;  // single-style, for judging pretraining
  std::size_t train_size = 1000;
  std::size_t eval_pairs = 100;
};

struct StyleParams {
  std::size_t id = 0;
  double gain = 1.0;
  std::vector<double> offset;  // d_x
};

/// Row-major [L, d_x] frame matrix.
struct Frames {
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t j) const { return values[t * dim + j]; }
  Tensor tensor() const { return Tensor::from({length, dim}, values); }
  static Frames from_tensor(const Tensor& t);
  bool operator==(const Frames&) const = default;
};

struct Utterance {
  std::vector<std::size_t> content;
  Frames frames;
  std::size_t style = 0;
  bool operator==(const Utterance&) const = default;
};

/// Input text c paired with a reference rendered from different content c_ref.
struct EvalPair {
  std::vector<std::size_t> content;
  Frames reference;
  std::size_t ref_style = 0;
  std::vector<std::size_t> ref_content;
  bool operator==(const EvalPair&) const = default;
};

/// Everything the generator and the oracle recognizer know.
struct World {
  DatasetConfig config;
  Tensor codebook;  // R, [V, d_x]
  std::vector<StyleParams> styles;
  double min_separation = 0.0;  // min over styles and token pairs of ||g_s (R_i - R_j)||
  bool separable = false;       // min_separation > 6 sigma
  double codebook_rescale = 1.0;  // factor applied to the raw draw to restore separability

  /// Noise-free rendered mean of token k in style s.
  std::vector<double> token_mean(std::size_t style, std::size_t token) const;
};

struct Splits {
  std::vector<Utterance> pretrain;  // style 0 only
  std::vector<Utterance> heldout;   // style 0 only
  std::vector<Utterance> train;     // all styles
  std::vector<EvalPair> eval_pairs;
};

struct Recognition {
  std::vector<std::size_t> tokens;
  std::size_t style = 0;
  double residual = 0.0;
};

/// Draws style parameters and a codebook. If the draw misses the separability
/// margin the codebook is scaled up until it clears it.
World make_world(const DatasetConfig& cfg);

/// Renders content in a style; noise_scale overrides sigma (0 gives clean frames).
Frames render(const World& world, std::span<const std::size_t> content, std::size_t style, Rng& rng,
              double noise_scale);
Frames render(const World& world, std::span<const std::size_t> content, std::size_t style, Rng& rng);

/// Brute-force inverse: for each style, nearest token per frame; the style
/// with the smallest total squared residual wins. Ties go to the lowest style
/// id, then the lowest token id.
Recognition oracle_recognize(const World& world, const Frames& frames);

double token_error_rate(std::span<const std::size_t> hyp, std::span<const std::size_t> ref);

Splits make_splits(const World& world);

// ---- JSON-lines dataset files ---------------------------------------------

std::string utterance_to_json(const Utterance& u);
Utterance utterance_from_json(const std::string& line);
std::string eval_pair_to_json(const EvalPair& p);
EvalPair eval_pair_from_json(const std::string& line);

void write_utterances(const std::filesystem::path& path, const std::vector<Utterance>& data);
std::vector<Utterance> read_utterances(const std::filesystem::path& path);
void write_eval_pairs(const std::filesystem::path& path, const std::vector<EvalPair>& data);
std::vector<EvalPair> read_eval_pairs(const std::filesystem::path& path);

void write_world(const std::filesystem::path& path, const World& world);
World read_world(const std::filesystem::path& path);

/// Writes world.json, manifest.json and the four split files into `dir`.
void write_dataset(const std::filesystem::path& dir, const World& world, const Splits& splits);

struct Dataset {
  World world;
  Splits splits;
};
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mist

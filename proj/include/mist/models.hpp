#pragma once

// The networks of the two-stage pipeline: content encoder, style encoder with
// its token bank, decoder (plus the throwaway pretraining decoder), and the
// statistics network of the mutual-information estimator.
//
// All per-position maps take a stacked [N, d] matrix so a whole mini-batch of
// variable-length sequences runs as one matmul; `Segments` records where each
// sequence starts and ends inside that stack.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mist/gradcheck.hpp"
#include "mist/rng.hpp"
#include "mist/tensor.hpp"

namespace mist {

enum class Pooling { kMean, kMax };

struct ModelConfig {
  std::size_t vocab = 16;            // V
  std::size_t embed_dim = 16;        // d_e
  std::size_t content_dim = 16;      // d_c
  std::size_t style_dim = 16;        // d_s
  std::size_t frame_dim = 8;         // d_x
  std::size_t style_hidden = 32;     // d_h
  std::size_t num_tokens = 10;       // K
  std::size_t decoder_hidden = 64;
  std::size_t pretrain_decoder_hidden = 32;
  std::size_t statistics_hidden = 64;
  Pooling pooling = Pooling::kMean;
};

using Segments = std::vector<std::pair<std::size_t, std::size_t>>;

/// Row-segment table for sequences of the given lengths stacked end to end.
Segments make_segments(std::span<const std::size_t> lengths);
/// Owner index (sequence number) of every stacked row.
std::vector<std::size_t> segment_owner(const Segments& segments);

/// Affine map x W + b, W stored [in, out].
struct Dense {
  Tensor weight;
  Tensor bias;

  Dense() = default;
  Dense(std::size_t in, std::size_t out, Rng& rng);  // Glorot-uniform weight, zero bias
  Tensor operator()(const Tensor& x) const { return add_bias(matmul(x, weight), bias); }
  void append_params(const std::string& prefix, ParamList& out) const;
  std::size_t in_dim() const { return weight.dim(0); }
  std::size_t out_dim() const { return weight.dim(1); }
};

Tensor normal_init(Shape shape, double stddev, Rng& rng);

class ContentEncoder {
 public:
  ContentEncoder() = default;
  ContentEncoder(const ModelConfig& cfg, Rng& rng);

  /// [L, d_c] content vectors; row t depends only on tokens[t].
  Tensor encode(std::span<const std::size_t> tokens) const;

  void freeze();
  bool frozen() const { return frozen_; }
  ParamList params() const;
  std::size_t vocab() const { return codebook_.dim(0); }
  std::size_t output_dim() const { return layer2_.out_dim(); }

 private:
  Tensor codebook_;
  Dense layer1_;
  Dense layer2_;
  bool frozen_ = false;
};

/// K trainable style tokens, [K, d_s].
struct StyleTokenBank {
  Tensor tokens;
  std::size_t size() const { return tokens.dim(0); }
};

struct StyleCode {
  Tensor z;             // [B, d_s]
  Tensor coefficients;  // [B, K], rows on the simplex
};

class StyleEncoder {
 public:
  StyleEncoder() = default;
  StyleEncoder(const ModelConfig& cfg, Rng& rng);

  /// Style vectors for a stack of frame sequences.
  StyleCode encode(const Tensor& frames, const Segments& segments) const;
  /// Single sequence convenience: frames [L, d_x] -> z [1, d_s].
  StyleCode encode(const Tensor& frames) const;

  ParamList params() const;
  StyleTokenBank& bank() { return bank_; }
  const StyleTokenBank& bank() const { return bank_; }
  Pooling pooling() const { return pooling_; }

 private:
  Dense frame_layer_;
  Dense logit_layer_;
  StyleTokenBank bank_;
  Pooling pooling_ = Pooling::kMean;
};

class Decoder {
 public:
  Decoder() = default;
  Decoder(const ModelConfig& cfg, Rng& rng);

  /// content [N, d_c] and per-row style [N, d_s] -> frames [N, d_x].
  Tensor decode(const Tensor& content, const Tensor& style_rows) const;
  /// content [L, d_c] and one style vector [1, d_s] or [d_s].
  Tensor decode_sequence(const Tensor& content, const Tensor& z) const;

  ParamList params() const;

 private:
  Dense hidden_;
  Dense output_;
};

/// Stage-1 decoder: content only. Discarded after pretraining.
class PretrainDecoder {
 public:
  PretrainDecoder() = default;
  PretrainDecoder(const ModelConfig& cfg, Rng& rng);

  Tensor decode(const Tensor& content) const;
  ParamList params() const;

 private:
  Dense hidden_;
  Dense output_;
};

class StatisticsNetwork {
 public:
  StatisticsNetwork() = default;
  StatisticsNetwork(std::size_t y_dim, std::size_t z_dim, std::size_t hidden, Rng& rng);

  /// y [B, d_y], z [B, d_z] -> statistics [B, 1].
  Tensor operator()(const Tensor& y, const Tensor& z) const;
  /// Hidden-layer input to the relu, [B, hidden].
  Tensor preactivation(const Tensor& y, const Tensor& z) const;
  ParamList params() const;
  void zero_output_layer();

 private:
  Dense hidden_;
  Dense output_;
};

/// Copies values from `src` into the same-named tensors of `dst`, checking shapes.
void assign_params(const ParamList& dst, const ParamList& src);
/// Bitwise equality of values, matching tensors by name.
bool params_equal(const ParamList& a, const ParamList& b);
/// Deep copy of values into fresh leaves.
ParamList clone_params(const ParamList& params);

}  // namespace mist

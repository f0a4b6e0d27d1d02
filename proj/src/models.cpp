#include "mist/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

namespace mist {

Segments make_segments(std::span<const std::size_t> lengths) {
  Segments s;
  s.reserve(lengths.size());
  std::size_t begin = 0;
  for (std::size_t len : lengths) {
    s.emplace_back(begin, begin + len);
    begin += len;
  }
  return s;
}

std::vector<std::size_t> segment_owner(const Segments& segments) {
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < segments.size(); ++i)
    for (std::size_t r = segments[i].first; r < segments[i].second; ++r) owner.push_back(i);
  return owner;
}

Tensor normal_init(Shape shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Dense::Dense(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (double& x : w) x = rng.uniform(-a, a);
  weight = Tensor::from({in, out}, std::move(w), true);
  bias = Tensor::zeros({out}, true);
}

void Dense::append_params(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

// ---- content encoder -------------------------------------------------------

ContentEncoder::ContentEncoder(const ModelConfig& cfg, Rng& rng)
    : codebook_(normal_init({cfg.vocab, cfg.embed_dim}, 0.5, rng)),
      layer1_(cfg.embed_dim, cfg.content_dim, rng),
      layer2_(cfg.content_dim, cfg.content_dim, rng) {}

Tensor ContentEncoder::encode(std::span<const std::size_t> tokens) const {
  for (std::size_t t : tokens)
    if (t >= vocab())
      throw std::invalid_argument("encode_content: token " + std::to_string(t) + " outside vocabulary of " +
                                  std::to_string(vocab()));
  Tensor e = gather_rows(codebook_, tokens);
  return tanh(layer2_(tanh(layer1_(e))));
}

void ContentEncoder::freeze() {
  for (auto& p : params()) p.tensor.set_requires_grad(false);
  frozen_ = true;
}

ParamList ContentEncoder::params() const {
  ParamList out{{"content_encoder.codebook", codebook_}};
  layer1_.append_params("content_encoder.layer1", out);
  layer2_.append_params("content_encoder.layer2", out);
  return out;
}

// ---- style encoder ---------------------------------------------------------

StyleEncoder::StyleEncoder(const ModelConfig& cfg, Rng& rng)
    : frame_layer_(cfg.frame_dim, cfg.style_hidden, rng),
      logit_layer_(cfg.style_hidden, cfg.num_tokens, rng),
      bank_{normal_init({cfg.num_tokens, cfg.style_dim}, 0.5, rng)},
      pooling_(cfg.pooling) {}

StyleCode StyleEncoder::encode(const Tensor& frames, const Segments& segments) const {
  if (segments.empty()) throw std::invalid_argument("encode_style: no sequences");
  for (const auto& [b, e] : segments)
    if (e <= b) throw std::invalid_argument("encode_style: empty frame sequence");
  Tensor h = tanh(frame_layer_(frames));
  Tensor pooled;
  if (pooling_ == Pooling::kMax) {
    pooled = segment_max(h, segments);
  } else {
    // mean pooling as a [B, N] averaging matrix
    std::vector<double> w(segments.size() * h.rows(), 0.0);
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const double inv = 1.0 / static_cast<double>(segments[i].second - segments[i].first);
      for (std::size_t r = segments[i].first; r < segments[i].second; ++r) w[i * h.rows() + r] = inv;
    }
    pooled = matmul(Tensor::from({segments.size(), h.rows()}, std::move(w)), h);
  }
  Tensor coefficients = softmax(logit_layer_(pooled));
  return {matmul(coefficients, bank_.tokens), coefficients};
}

StyleCode StyleEncoder::encode(const Tensor& frames) const {
  if (frames.rank() != 2 || frames.rows() == 0) throw std::invalid_argument("encode_style: empty frame sequence");
  return encode(frames, Segments{{0, frames.rows()}});
}

ParamList StyleEncoder::params() const {
  ParamList out;
  frame_layer_.append_params("style_encoder.frame_layer", out);
  logit_layer_.append_params("style_encoder.logit_layer", out);
  out.push_back({"style_encoder.tokens", bank_.tokens});
  return out;
}

// ---- decoders --------------------------------------------------------------

Decoder::Decoder(const ModelConfig& cfg, Rng& rng)
    : hidden_(cfg.content_dim + cfg.style_dim, cfg.decoder_hidden, rng),
      output_(cfg.decoder_hidden, cfg.frame_dim, rng) {}

Tensor Decoder::decode(const Tensor& content, const Tensor& style_rows) const {
  if (content.rank() != 2 || style_rows.rank() != 2 || content.rows() != style_rows.rows() ||
      content.cols() + style_rows.cols() != hidden_.in_dim())
    throw ShapeError("decode: content " + shape_str(content.shape()) + " and style " +
                     shape_str(style_rows.shape()) + " do not match decoder input width " +
                     std::to_string(hidden_.in_dim()));
  return output_(tanh(hidden_(concat(content, style_rows, 1))));
}

Tensor Decoder::decode_sequence(const Tensor& content, const Tensor& z) const {
  if (content.rank() != 2) throw ShapeError("decode: content must be [L, d_c], got " + shape_str(content.shape()));
  Tensor zrow = z.rank() == 1 ? reshape(z, {1, z.numel()}) : z;
  if (zrow.rank() != 2 || zrow.rows() != 1)
    throw ShapeError("decode: expected one style vector, got " + shape_str(z.shape()));
  std::vector<std::size_t> zeros(content.rows(), 0);
  return decode(content, gather_rows(zrow, zeros));
}

ParamList Decoder::params() const {
  ParamList out;
  hidden_.append_params("decoder.hidden", out);
  output_.append_params("decoder.output", out);
  return out;
}

PretrainDecoder::PretrainDecoder(const ModelConfig& cfg, Rng& rng)
    : hidden_(cfg.content_dim, cfg.pretrain_decoder_hidden, rng),
      output_(cfg.pretrain_decoder_hidden, cfg.frame_dim, rng) {}

Tensor PretrainDecoder::decode(const Tensor& content) const { return output_(tanh(hidden_(content))); }

ParamList PretrainDecoder::params() const {
  ParamList out;
  hidden_.append_params("pretrain_decoder.hidden", out);
  output_.append_params("pretrain_decoder.output", out);
  return out;
}

// ---- statistics network ----------------------------------------------------

StatisticsNetwork::StatisticsNetwork(std::size_t y_dim, std::size_t z_dim, std::size_t hidden, Rng& rng)
    : hidden_(y_dim + z_dim, hidden, rng), output_(hidden, 1, rng) {}

Tensor StatisticsNetwork::operator()(const Tensor& y, const Tensor& z) const {
  return output_(relu(preactivation(y, z)));
}

Tensor StatisticsNetwork::preactivation(const Tensor& y, const Tensor& z) const { return hidden_(concat(y, z, 1)); }

ParamList StatisticsNetwork::params() const {
  ParamList out;
  hidden_.append_params("statistics.hidden", out);
  output_.append_params("statistics.output", out);
  return out;
}

void StatisticsNetwork::zero_output_layer() {
  for (auto t : {output_.weight, output_.bias})
    for (double& v : t.mutable_values()) v = 0.0;
}

// ---- parameter utilities ---------------------------------------------------

void assign_params(const ParamList& dst, const ParamList& src) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& p : src) by_name[p.name] = &p.tensor;
  for (const auto& p : dst) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw std::invalid_argument("missing parameter '" + p.name + "'");
    if (it->second->shape() != p.tensor.shape())
      throw ShapeError("parameter '" + p.name + "': expected shape " + shape_str(p.tensor.shape()) + ", got " +
                       shape_str(it->second->shape()));
    auto t = p.tensor;
    auto v = it->second->values();
    std::copy(v.begin(), v.end(), t.mutable_values().begin());
  }
}

bool params_equal(const ParamList& a, const ParamList& b) {
  if (a.size() != b.size()) return false;
  for (const auto& pa : a) {
    auto it = std::find_if(b.begin(), b.end(), [&](const NamedTensor& pb) { return pb.name == pa.name; });
    if (it == b.end() || it->tensor.shape() != pa.tensor.shape()) return false;
    auto va = pa.tensor.values();
    auto vb = it->tensor.values();
    if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

ParamList clone_params(const ParamList& params) {
  ParamList out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({p.name, p.tensor.detach()});
  return out;
}

}  // namespace mist

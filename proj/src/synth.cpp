#include "mist/synth.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mist/config.hpp"
#include "mist/io.hpp"
#include "mist/rng.hpp"

namespace mist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kRescaleHeadroom = 1.25;

double separation(const Tensor& codebook, const std::vector<StyleParams>& styles) {
  const std::size_t v = codebook.dim(0), d = codebook.dim(1);
  auto r = codebook.values();
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = i + 1; j < v; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += (r[i * d + k] - r[j * d + k]) * (r[i * d + k] - r[j * d + k]);
      min_dist = std::min(min_dist, std::sqrt(s));
    }
  double min_gain = std::numeric_limits<double>::infinity();
  for (const auto& st : styles) min_gain = std::min(min_gain, st.gain);
  return min_gain * min_dist;
}

std::vector<std::size_t> draw_content(const DatasetConfig& cfg, Rng& rng) {
  const std::size_t len = cfg.min_length + rng.index(cfg.max_length - cfg.min_length + 1);
  std::vector<std::size_t> c(len);
  for (auto& t : c) t = rng.index(cfg.vocab);
  return c;
}

std::vector<Utterance> make_utterances(const World& world, const std::string& split, std::size_t n,
                                       bool single_style) {
  std::vector<Utterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // per-utterance stream: generation order does not matter
    Rng rng = Rng::stream(world.config.seed, split + "/" + std::to_string(i));
    Utterance u;
    u.style = single_style ? 0 : rng.index(world.config.num_styles);
    u.content = draw_content(world.config, rng);
    u.frames = render(world, u.content, u.style, rng);
    out.push_back(std::move(u));
  }
  return out;
}

json frames_to_json(const Frames& f) {
  json rows = json::array();
  for (std::size_t t = 0; t < f.length; ++t)
    rows.push_back(std::vector<double>(f.values.begin() + static_cast<std::ptrdiff_t>(t * f.dim),
                                       f.values.begin() + static_cast<std::ptrdiff_t>((t + 1) * f.dim)));
  return rows;
}

Frames frames_from_json(const json& rows) {
  Frames f;
  f.length = rows.size();
  for (const auto& r : rows) {
    auto v = r.get<std::vector<double>>();
    if (f.dim == 0) f.dim = v.size();
    if (v.size() != f.dim || v.empty()) throw std::invalid_argument("frames: ragged or empty frame rows");
    f.values.insert(f.values.end(), v.begin(), v.end());
  }
  return f;
}

template <typename T, typename F>
void write_lines(const fs::path& path, const std::vector<T>& data, F to_line) {
  std::string out;
  for (const auto& d : data) {
    out += to_line(d);
    out += '\n';
  }
  atomic_write(path, out);
}

template <typename F>
auto read_lines(const fs::path& path, F from_line) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<decltype(from_line(std::string{}))> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(from_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

Frames Frames::from_tensor(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("frames: expected [L, d_x], got " + shape_str(t.shape()));
  return Frames{t.rows(), t.cols(), {t.values().begin(), t.values().end()}};
}

std::vector<double> World::token_mean(std::size_t style, std::size_t token) const {
  const std::size_t d = codebook.dim(1);
  const auto& st = styles.at(style);
  std::vector<double> m(d);
  for (std::size_t j = 0; j < d; ++j) m[j] = st.gain * codebook.at(token, j) + st.offset[j];
  return m;
}

World make_world(const DatasetConfig& cfg) {
  if (cfg.vocab < 2 || cfg.num_styles < 1 || cfg.frame_dim < 1) throw std::invalid_argument("dataset: degenerate sizes");
  if (cfg.min_length < 1 || cfg.max_length < cfg.min_length) throw std::invalid_argument("dataset: bad length range");
  if (!(cfg.gain_min > 0.0 && cfg.gain_max >= cfg.gain_min)) throw std::invalid_argument("dataset: bad gain range");
  if (cfg.noise < 0.0) throw std::invalid_argument("dataset: negative noise");

  World w;
  w.config = cfg;
  Rng style_rng = Rng::stream(cfg.seed, "styles");
  for (std::size_t s = 0; s < cfg.num_styles; ++s) {
    StyleParams st{.id = s, .gain = style_rng.uniform(cfg.gain_min, cfg.gain_max), .offset = {}};
    st.offset.resize(cfg.frame_dim);
    for (double& m : st.offset) m = style_rng.normal(0.0, cfg.offset_scale);
    w.styles.push_back(std::move(st));
  }
  Rng codebook_rng = Rng::stream(cfg.seed, "codebook");
  const double margin = 6.0 * cfg.noise;
  std::vector<double> r(cfg.vocab * cfg.frame_dim);
  for (double& x : r) x = codebook_rng.normal(0.0, cfg.codebook_scale);
  w.codebook = Tensor::from({cfg.vocab, cfg.frame_dim}, r);
  w.min_separation = separation(w.codebook, w.styles);
  if (!(w.min_separation > margin) && w.min_separation > 0.0) {
    // separation is linear in the codebook scale
    w.codebook_rescale = kRescaleHeadroom * margin / w.min_separation;
    for (double& x : r) x *= w.codebook_rescale;
    w.codebook = Tensor::from({cfg.vocab, cfg.frame_dim}, std::move(r));
    w.min_separation = separation(w.codebook, w.styles);
  }
  w.separable = w.min_separation > margin;
  return w;
}

Frames render(const World& world, std::span<const std::size_t> content, std::size_t style, Rng& rng,
              double noise_scale) {
  const auto& cfg = world.config;
  if (style >= world.styles.size())
    throw std::invalid_argument("render: style " + std::to_string(style) + " out of range");
  const std::size_t d = cfg.frame_dim;
  Frames f{content.size(), d, std::vector<double>(content.size() * d)};
  const auto& st = world.styles[style];
  for (std::size_t t = 0; t < content.size(); ++t) {
    if (content[t] >= cfg.vocab)
      throw std::invalid_argument("render: token " + std::to_string(content[t]) + " out of range");
    for (std::size_t j = 0; j < d; ++j)
      f.values[t * d + j] = st.gain * world.codebook.at(content[t], j) + st.offset[j] + noise_scale * rng.normal();
  }
  return f;
}

Frames render(const World& world, std::span<const std::size_t> content, std::size_t style, Rng& rng) {
  return render(world, content, style, rng, world.config.noise);
}

Recognition oracle_recognize(const World& world, const Frames& frames) {
  const std::size_t v = world.config.vocab, d = world.config.frame_dim;
  if (frames.length > 0 && frames.dim != d)
    throw std::invalid_argument("oracle_recognize: frame width " + std::to_string(frames.dim) + " != " +
                                std::to_string(d));
  Recognition best;
  best.residual = std::numeric_limits<double>::infinity();
  std::vector<double> means(v * d);
  for (const auto& st : world.styles) {
    for (std::size_t k = 0; k < v; ++k)
      for (std::size_t j = 0; j < d; ++j) means[k * d + j] = st.gain * world.codebook.at(k, j) + st.offset[j];
    Recognition cand{.tokens = std::vector<std::size_t>(frames.length), .style = st.id, .residual = 0.0};
    for (std::size_t t = 0; t < frames.length; ++t) {
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < v; ++k) {
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double e = frames.values[t * d + j] - means[k * d + j];
          dist += e * e;
        }
        if (dist < best_dist) {
          best_dist = dist;
          cand.tokens[t] = k;
        }
      }
      cand.residual += best_dist;
    }
    if (cand.residual < best.residual) best = std::move(cand);
  }
  return best;
}

double token_error_rate(std::span<const std::size_t> hyp, std::span<const std::size_t> ref) {
  if (hyp.size() != ref.size())
    throw std::invalid_argument("token_error_rate: length mismatch " + std::to_string(hyp.size()) + " vs " +
                                std::to_string(ref.size()));
  if (ref.empty()) throw std::invalid_argument("token_error_rate: empty sequences");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) errors += hyp[i] != ref[i];
  return static_cast<double>(errors) / static_cast<double>(ref.size());
}

Splits make_splits(const World& world) {
  const auto& cfg = world.config;
  Splits s;
  s.pretrain = make_utterances(world, "pretrain", cfg.pretrain_size, true);
  s.heldout = make_utterances(world, "heldout", cfg.heldout_size, true);
  s.train = make_utterances(world, "train", cfg.train_size, false);
  for (std::size_t i = 0; i < cfg.eval_pairs; ++i) {
    Rng rng = Rng::stream(cfg.seed, "eval/" + std::to_string(i));
    EvalPair p;
    p.content = draw_content(cfg, rng);
    do {
      p.ref_content = draw_content(cfg, rng);
    } while (p.ref_content == p.content);
    p.ref_style = rng.index(cfg.num_styles);
    p.reference = render(world, p.ref_content, p.ref_style, rng);
    s.eval_pairs.push_back(std::move(p));
  }
  return s;
}

// ---- serialization ---------------------------------------------------------

std::string utterance_to_json(const Utterance& u) {
  return json{{"c", u.content}, {"x", frames_to_json(u.frames)}, {"s", u.style}}.dump();
}

Utterance utterance_from_json(const std::string& line) {
  const json j = json::parse(line);
  Utterance u{j.at("c").get<std::vector<std::size_t>>(), frames_from_json(j.at("x")), j.at("s").get<std::size_t>()};
  if (u.content.size() != u.frames.length) throw std::invalid_argument("utterance: content/frame length mismatch");
  return u;
}

std::string eval_pair_to_json(const EvalPair& p) {
  return json{{"c", p.content}, {"x_ref", frames_to_json(p.reference)}, {"s_ref", p.ref_style}, {"c_ref", p.ref_content}}
      .dump();
}

EvalPair eval_pair_from_json(const std::string& line) {
  const json j = json::parse(line);
  EvalPair p{j.at("c").get<std::vector<std::size_t>>(), frames_from_json(j.at("x_ref")),
             j.at("s_ref").get<std::size_t>(), j.at("c_ref").get<std::vector<std::size_t>>()};
  if (p.ref_content.size() != p.reference.length) throw std::invalid_argument("eval pair: c_ref/x_ref length mismatch");
  return p;
}

void write_utterances(const fs::path& path, const std::vector<Utterance>& data) {
  write_lines(path, data, utterance_to_json);
}

std::vector<Utterance> read_utterances(const fs::path& path) { return read_lines(path, utterance_from_json); }

void write_eval_pairs(const fs::path& path, const std::vector<EvalPair>& data) {
  write_lines(path, data, eval_pair_to_json);
}

std::vector<EvalPair> read_eval_pairs(const fs::path& path) { return read_lines(path, eval_pair_from_json); }

void write_world(const fs::path& path, const World& world) {
  json styles = json::array();
  for (const auto& st : world.styles) styles.push_back({{"id", st.id}, {"gain", st.gain}, {"offset", st.offset}});
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < world.codebook.dim(0); ++k) {
    auto v = world.codebook.values().subspan(k * world.codebook.dim(1), world.codebook.dim(1));
    rows.emplace_back(v.begin(), v.end());
  }
  json j{{"config", dataset_config_to_json(world.config)},
         {"codebook", rows},
         {"styles", styles},
         {"min_separation", world.min_separation},
         {"separable", world.separable},
         {"codebook_rescale", world.codebook_rescale}};
  atomic_write(path, j.dump(2) + "\n");
}

World read_world(const fs::path& path) {
  const json j = json::parse(read_text(path));
  World w;
  w.config = dataset_config_from_json(j.at("config"));
  auto rows = j.at("codebook").get<std::vector<std::vector<double>>>();
  std::vector<double> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  w.codebook = Tensor::from({w.config.vocab, w.config.frame_dim}, std::move(flat));
  for (const auto& s : j.at("styles"))
    w.styles.push_back({s.at("id").get<std::size_t>(), s.at("gain").get<double>(), s.at("offset").get<std::vector<double>>()});
  w.min_separation = j.at("min_separation").get<double>();
  w.separable = j.at("separable").get<bool>();
  w.codebook_rescale = j.at("codebook_rescale").get<double>();
  return w;
}

void write_dataset(const fs::path& dir, const World& world, const Splits& splits) {
  write_world(dir / "world.json", world);
  write_utterances(dir / "pretrain.jsonl", splits.pretrain);
  write_utterances(dir / "heldout.jsonl", splits.heldout);
  write_utterances(dir / "train.jsonl", splits.train);
  write_eval_pairs(dir / "eval_pairs.jsonl", splits.eval_pairs);
  json manifest{{"seed", world.config.seed},
                {"separability",
                 {{"min_separation", world.min_separation},
                  {"required", 6.0 * world.config.noise},
                  {"pass", world.separable},
                  {"codebook_rescale", world.codebook_rescale}}},
                {"files",
                 {{"pretrain.jsonl", splits.pretrain.size()},
                  {"heldout.jsonl", splits.heldout.size()},
                  {"train.jsonl", splits.train.size()},
                  {"eval_pairs.jsonl", splits.eval_pairs.size()}}}};
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  for (const char* f : {"world.json", "pretrain.jsonl", "heldout.jsonl", "train.jsonl", "eval_pairs.jsonl"})
    if (!fs::exists(dir / f)) throw std::runtime_error("dataset file missing: " + (dir / f).string());
  Dataset d;
  d.world = read_world(dir / "world.json");
  d.splits.pretrain = read_utterances(dir / "pretrain.jsonl");
  d.splits.heldout = read_utterances(dir / "heldout.jsonl");
  d.splits.train = read_utterances(dir / "train.jsonl");
  d.splits.eval_pairs = read_eval_pairs(dir / "eval_pairs.jsonl");
  return d;
}

}  // namespace mist

#include "mist/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mist/mine.hpp"

namespace mist {

namespace {

Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Magnitudes in [0.1, 1] with random sign: keeps relu/abs away from their kink.
Tensor away_from_zero(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return Tensor::from(std::move(shape), std::move(v));
}

Tensor normal(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

// Contract an op's output with fixed random weights so every output element
// reaches the scalar loss with a distinct coefficient.
Tensor contract(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

GradientCase unary_case(std::string name, std::function<Tensor(const Tensor&)> op,
                        std::function<Tensor(Rng&)> input, Shape out_shape) {
  return {name, [=](std::uint64_t seed) {
            Rng rng = Rng::stream(seed, "gradcheck." + name);
            Tensor a = input(rng);
            Tensor w = uniform(out_shape, rng, -1.0, 1.0);
            return GradientProblem{[=] { return contract(op(a), w); }, {{"a", a}}};
          }};
}

GradientCase binary_case(std::string name, std::function<Tensor(const Tensor&, const Tensor&)> op, Shape a_shape,
                         Shape b_shape, Shape out_shape) {
  return {name, [=](std::uint64_t seed) {
            Rng rng = Rng::stream(seed, "gradcheck." + name);
            Tensor a = uniform(a_shape, rng, -1.0, 1.0);
            Tensor b = uniform(b_shape, rng, -1.0, 1.0);
            Tensor w = uniform(out_shape, rng, -1.0, 1.0);
            return GradientProblem{[=] { return contract(op(a, b), w); }, {{"a", a}, {"b", b}}};
          }};
}

// Central differences are meaningless within a step of a relu kink, so seeded
// points whose hidden pre-activations come that close are redrawn.
constexpr double kKinkMargin = 1e-3;

bool off_kink(const StatisticsNetwork& t, const MineBatch& b) {
  for (const Tensor& y : {b.y, b.y_shuffled}) {
    const Tensor pre = t.preactivation(y, b.z);
    for (double v : pre.values())
      if (std::fabs(v) < kKinkMargin) return false;
  }
  return true;
}

std::vector<std::size_t> random_tokens(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<std::size_t> t(n);
  for (auto& x : t) x = rng.index(vocab);
  return t;
}

ParamList join(std::initializer_list<ParamList> lists) {
  ParamList out;
  for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

// Two sequences of lengths 3 and 4, stacked.
struct NetworkFixture {
  std::vector<std::size_t> tokens;
  Segments segments = make_segments(std::vector<std::size_t>{3, 4});
  std::vector<std::size_t> owner = segment_owner(segments);
  Tensor frames;
  Tensor target;

  NetworkFixture(const ModelConfig& cfg, Rng& rng)
      : tokens(random_tokens(7, cfg.vocab, rng)), frames(normal({7, cfg.frame_dim}, rng)),
        target(normal({7, cfg.frame_dim}, rng)) {}
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct FaultGuard {
  explicit FaultGuard(const std::string& op) { debug::inject_gradient_fault(op); }
  ~FaultGuard() { debug::inject_gradient_fault(""); }
};

}  // namespace

std::vector<GradientCase> op_gradient_cases() {
  using S = Shape;
  std::vector<GradientCase> c;
  c.push_back(binary_case("matmul", [](auto& a, auto& b) { return matmul(a, b); }, S{3, 4}, S{4, 5}, S{3, 5}));
  c.push_back(binary_case("add", [](auto& a, auto& b) { return add(a, b); }, S{3, 4}, S{3, 4}, S{3, 4}));
  c.push_back(binary_case("sub", [](auto& a, auto& b) { return sub(a, b); }, S{3, 4}, S{3, 4}, S{3, 4}));
  c.push_back(binary_case("mul", [](auto& a, auto& b) { return mul(a, b); }, S{3, 4}, S{3, 4}, S{3, 4}));
  c.push_back(binary_case("add_bias", [](auto& a, auto& b) { return add_bias(a, b); }, S{3, 4}, S{4}, S{3, 4}));
  c.push_back(binary_case("concat[axis=0]", [](auto& a, auto& b) { return concat(a, b, 0); }, S{2, 3}, S{4, 3},
                          S{6, 3}));
  c.push_back(binary_case("concat[axis=1]", [](auto& a, auto& b) { return concat(a, b, 1); }, S{3, 2}, S{3, 4},
                          S{3, 6}));
  c.push_back(binary_case("concat[rank1]", [](auto& a, auto& b) { return concat(a, b, 0); }, S{3}, S{2}, S{5}));

  auto plain = [](S s) { return [s](Rng& r) { return uniform(s, r, -1.0, 1.0); }; };
  c.push_back(unary_case("reshape", [](auto& a) { return reshape(a, {4, 3}); }, plain({3, 4}), {4, 3}));
  c.push_back(unary_case("scale", [](auto& a) { return scale(a, 1.7); }, plain({3, 4}), {3, 4}));
  c.push_back(unary_case("add_scalar", [](auto& a) { return add_scalar(a, 0.3); }, plain({3, 4}), {3, 4}));
  c.push_back(unary_case("tanh", [](auto& a) { return tanh(a); }, plain({3, 4}), {3, 4}));
  c.push_back(unary_case("exp", [](auto& a) { return exp(a); }, plain({3, 4}), {3, 4}));
  c.push_back(unary_case("log", [](auto& a) { return log(a); }, [](Rng& r) { return uniform({3, 4}, r, 0.5, 2.0); },
                         {3, 4}));
  c.push_back(unary_case("relu", [](auto& a) { return relu(a); }, [](Rng& r) { return away_from_zero({3, 4}, r); },
                         {3, 4}));
  c.push_back(unary_case("abs", [](auto& a) { return abs(a); }, [](Rng& r) { return away_from_zero({3, 4}, r); },
                         {3, 4}));
  c.push_back(unary_case("softmax", [](auto& a) { return softmax(a); }, plain({3, 4}), {3, 4}));
  c.push_back(unary_case("sum", [](auto& a) { return sum(a); }, plain({3, 4}), {}));
  c.push_back(unary_case("mean", [](auto& a) { return mean(a); }, plain({3, 4}), {}));
  c.push_back(unary_case("mean[axis=0]", [](auto& a) { return mean(a, 0); }, plain({3, 4}), {4}));
  c.push_back(unary_case("mean[axis=1]", [](auto& a) { return mean(a, 1); }, plain({3, 4}), {3}));
  c.push_back(unary_case("log_sum_exp", [](auto& a) { return log_sum_exp(a); }, plain({3, 4}), {}));
  c.push_back(unary_case("log_sum_exp[axis=1]", [](auto& a) { return log_sum_exp(a, 1); }, plain({3, 4}), {3}));
  c.push_back(unary_case(
      "gather_rows", [](auto& a) { return gather_rows(a, std::vector<std::size_t>{0, 2, 2, 4}); }, plain({5, 3}),
      {4, 3}));
  c.push_back(unary_case(
      "segment_max",
      [](auto& a) { return segment_max(a, std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {2, 6}}); },
      plain({6, 3}), {2, 3}));
  return c;
}

std::vector<GradientCase> network_gradient_cases(const ModelConfig& cfg) {
  std::vector<GradientCase> c;

  c.push_back({"content_encoder+pretrain_decoder/l1", [cfg](std::uint64_t seed) {
                 Rng rng = Rng::stream(seed, "gradcheck.content");
                 ContentEncoder enc(cfg, rng);
                 PretrainDecoder dec(cfg, rng);
                 NetworkFixture f(cfg, rng);
                 return GradientProblem{[=] { return mean(abs(sub(dec.decode(enc.encode(f.tokens)), f.target))); },
                                        join({enc.params(), dec.params()})};
               }});

  for (Pooling pool : {Pooling::kMean, Pooling::kMax}) {
    ModelConfig pc = cfg;
    pc.pooling = pool;
    const std::string tag = pool == Pooling::kMean ? "mean" : "max";
    c.push_back({"style_encoder[" + tag + "]+decoder/l1", [pc](std::uint64_t seed) {
                   Rng rng = Rng::stream(seed, "gradcheck.style");
                   ContentEncoder enc(pc, rng);
                   StyleEncoder style(pc, rng);
                   Decoder dec(pc, rng);
                   NetworkFixture f(pc, rng);
                   Tensor y = enc.encode(f.tokens);
                   return GradientProblem{[=] {
                                            Tensor z = style.encode(f.frames, f.segments).z;
                                            return mean(abs(sub(dec.decode(y, gather_rows(z, f.owner)), f.target)));
                                          },
                                          join({style.params(), dec.params()})};
                 }});
  }

  c.push_back({"statistics/dv", [cfg](std::uint64_t seed) {
                 Rng rng = Rng::stream(seed, "gradcheck.statistics");
                 StatisticsNetwork t(cfg.content_dim, cfg.style_dim, cfg.statistics_hidden, rng);
                 const std::size_t b = 6;
                 MineBatch batch;
                 do {
                   Tensor y = normal({b, cfg.content_dim}, rng);
                   Tensor z = normal({b, cfg.style_dim}, rng);
                   batch = make_mine_batch(y, z, rng);
                 } while (!off_kink(t, batch));
                 return GradientProblem{[=] { return dv_lower_bound(t, batch).raw; }, t.params()};
               }});

  // Full stage-2 objective: L1 + lambda * DV through the sampled content
  // vectors and the style vectors, against every trainable network.
  c.push_back({"style_encoder+decoder+statistics/l1+dv", [cfg](std::uint64_t seed) {
                 Rng rng = Rng::stream(seed, "gradcheck.total");
                 ContentEncoder enc(cfg, rng);
                 StyleEncoder style(cfg, rng);
                 Decoder dec(cfg, rng);
                 NetworkFixture f(cfg, rng);
                 Tensor y = enc.encode(f.tokens);
                 Tensor y_sampled = gather_rows(y, std::vector<std::size_t>{1, 5}).detach();
                 const MineBatch at_init = make_mine_batch(y_sampled, style.encode(f.frames, f.segments).z, {1, 0});
                 StatisticsNetwork t;
                 do {
                   t = StatisticsNetwork(cfg.content_dim, cfg.style_dim, cfg.statistics_hidden, rng);
                 } while (!off_kink(t, at_init));
                 return GradientProblem{[=] {
                                          Tensor z = style.encode(f.frames, f.segments).z;
                                          Tensor recon = mean(abs(sub(dec.decode(y, gather_rows(z, f.owner)), f.target)));
                                          MineEstimate mi = dv_lower_bound(t, make_mine_batch(y_sampled, z, {1, 0}));
                                          return add(recon, scale(mi.raw, 0.5));
                                        },
                                        join({style.params(), dec.params(), t.params()})};
               }});
  return c;
}

GradCheckReport run_gradient_case(const GradientCase& c, std::uint64_t seed, double tolerance) {
  GradientProblem p = c.build(seed);
  return finite_difference_check(p.loss, p.params, 1e-5, tolerance);
}

std::vector<SelfTestCheck> run_selftest(const SelfTestOptions& opts, std::ostream& out) {
  std::vector<SelfTestCheck> checks;
  auto record = [&](std::string name, bool ok, std::string detail) {
    out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << "\n";
    out.flush();
    checks.push_back({std::move(name), ok, std::move(detail)});
  };
  FaultGuard guard(opts.fault_op);

  for (const auto& [cases, points, prefix] :
       {std::tuple{op_gradient_cases(), opts.op_points, "grad:op:"},
        std::tuple{network_gradient_cases(), opts.network_points, "grad:net:"}}) {
    for (const auto& c : cases) {
      double worst = 0.0;
      bool ok = true;
      for (std::size_t p = 0; p < points; ++p) {
        GradCheckReport r = run_gradient_case(c, 1000 + p);
        ok = ok && r.ok();
        worst = std::max(worst, r.max_rel_error());
      }
      record(prefix + c.name, ok, "max_rel_error=" + fmt("%.3g", worst));
    }
  }

  {
    ModelConfig cfg;
    Rng rng = Rng::stream(5, "selftest.style");
    StyleEncoder enc(cfg, rng);
    Tensor frames = normal({9, cfg.frame_dim}, rng);
    StyleCode code = enc.encode(frames, make_segments(std::vector<std::size_t>{4, 5}));
    const auto coef = code.coefficients.values();
    const auto tok = enc.bank().tokens.values();
    const auto z = code.z.values();
    const std::size_t k = cfg.num_tokens, d = cfg.style_dim;
    double sum_err = 0.0, hull_err = 0.0, min_coef = 1.0;
    for (std::size_t b = 0; b < 2; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        s += coef[b * k + i];
        min_coef = std::min(min_coef, coef[b * k + i]);
      }
      sum_err = std::max(sum_err, std::fabs(s - 1.0));
      for (std::size_t j = 0; j < d; ++j) {
        double combo = 0.0;
        for (std::size_t i = 0; i < k; ++i) combo += coef[b * k + i] * tok[i * d + j];
        hull_err = std::max(hull_err, std::fabs(combo - z[b * d + j]));
      }
    }
    record("softmax:rows_sum_to_one", sum_err <= 1e-12 && min_coef >= 0.0, "max|sum-1|=" + fmt("%.3g", sum_err));
    record("style:convex_hull", hull_err <= 1e-10 && min_coef >= 0.0, "max|z-a.tokens|=" + fmt("%.3g", hull_err));
  }

  {
    Rng rng = Rng::stream(6, "selftest.jensen");
    StatisticsNetwork t(4, 3, 16, rng);
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 20; ++trial) {
      Tensor y = normal({16, 4}, rng), z = normal({16, 3}, rng);
      std::vector<std::size_t> identity(16);
      for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
      worst = std::max(worst, dv_lower_bound(t, make_mine_batch(y, z, identity)).raw_value());
    }
    record("dv:identity_permutation_nonpositive", worst <= 0.0, "max_estimate=" + fmt("%.3g", worst));

    t.zero_output_layer();
    Tensor y = normal({16, 4}, rng), z = normal({16, 3}, rng);
    const double v = dv_lower_bound(t, make_mine_batch(y, z, rng)).raw_value();
    record("dv:constant_statistics_zero", v == 0.0, "estimate=" + fmt("%.3g", v));
  }

  {
    Rng rng = Rng::stream(7, "selftest.gaussian");
    const double est = estimate_gaussian_mi(0.0, opts.gaussian_steps, rng);
    record("mine:gaussian_rho0", std::fabs(est) < 0.05, "estimate=" + fmt("%.4f", est));
  }
  return checks;
}

}  // namespace mist

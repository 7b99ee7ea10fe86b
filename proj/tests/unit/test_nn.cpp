#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "doctest.h"
#include "metashift/common/error.hpp"
#include "metashift/common/rng.hpp"
#include "metashift/nn/checkpoint.hpp"
#include "metashift/nn/gradient_check.hpp"
#include "metashift/nn/network.hpp"
#include "metashift/nn/optimizer.hpp"

using namespace metashift;
using namespace metashift::nn;

namespace {

template <class T>
BasicBatch<T> random_batch(int n, int samples, std::uint64_t seed) {
  BasicBatch<T> b(n, 2, samples);
  Rng rng(seed);
  for (auto& v : b.data) v = static_cast<T>(rng.normal());
  return b;
}

std::vector<std::uint8_t> alternating_labels(int n) {
  std::vector<std::uint8_t> y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<std::uint8_t>(i % 2);
  return y;
}

// conv(2->1, k=3) + GAP + dense(1->1)
ArchitectureSpec toy_spec() {
  ArchitectureSpec s;
  s.conv = {{2, 1, 3}};
  s.mlp = {{1, 1}};
  return s;
}

// 64-bit reference: central differences over every parameter.
BasicParameters<double> numeric_grads(const BasicParameters<double>& p, const BasicBatch<double>& b,
                                      std::span<const std::uint8_t> y, double h) {
  BasicParameters<double> probe = p;
  BasicParameters<double> g(p.spec());
  auto v = probe.flat();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double saved = v[i];
    v[i] = saved + h;
    const double up = loss_only(probe, b, y);
    v[i] = saved - h;
    const double down = loss_only(probe, b, y);
    v[i] = saved;
    g.flat()[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("architecture") {
  TEST_CASE("mini layout") {
    auto s = build_architecture(ArchSize::mini);
    REQUIRE(s.conv.size() == 2);
    CHECK(s.conv[0].in_channels == 2);
    CHECK(s.conv[0].out_channels == 4);
    CHECK(s.conv[1].out_channels == 8);
    CHECK(s.pool_after == std::vector<int>{1});
    REQUIRE(s.mlp.size() == 3);
    CHECK(s.mlp[0].in_dim == 8);
    CHECK(s.mlp[0].out_dim == 8);
    CHECK(s.mlp[1].out_dim == 16);
    CHECK(s.mlp[2].out_dim == 1);
    CHECK(s.gap_dim() == 8);
  }

  TEST_CASE("huge layout") {
    auto s = build_architecture(ArchSize::huge);
    REQUIRE(s.conv.size() == 4);
    CHECK(s.conv.back().out_channels == 192);
    CHECK(s.conv[0].kernel == 5);
    CHECK(s.pool_after.size() == 2);
    REQUIRE(s.mlp.size() == 4);
    CHECK(s.mlp[0].out_dim == 192);
    CHECK(s.mlp[1].out_dim == 384);
    CHECK(s.mlp[2].out_dim == 192);
    CHECK(s.mlp[3].out_dim == 1);
    CHECK(s.output_length(500) == 125);
  }

  TEST_CASE("every named variant validates and chains") {
    for (auto a : {ArchSize::mini, ArchSize::small, ArchSize::big, ArchSize::huge}) {
      auto s = build_architecture(a);
      CHECK_NOTHROW(validate(s));
      CHECK(parse_arch_size(to_string(a)) == a);
    }
    CHECK_THROWS_AS(parse_arch_size("gigantic"), ValidationError);
  }

  TEST_CASE("count_params") {
    CHECK(count_params(toy_spec()) == 2 * 1 * 3 + 1 + 1 + 1);
    ArchitectureSpec t;
    t.conv = {{2, 4, 3}};
    t.mlp = {{4, 1}};
    CHECK(count_params(t) == 33);

    // conv(2->4,k3) then dense widths w, 2w: recount from the closed form
    auto with_widths = [](int w) {
      ArchitectureSpec s;
      s.conv = {{2, 4, 3}};
      s.mlp = {{4, w}, {w, 2 * w}, {2 * w, 1}};
      return s;
    };
    for (int w : {4, 8, 16}) {
      const std::size_t expected = 28 + (4 * w + w) + (w * 2 * w + 2 * w) + (2 * w + 1);
      CHECK(count_params(with_widths(w)) == expected);
    }
    // mini with kernel 3 everywhere: 28 + 104 + 72 + 144 + 17
    CHECK(count_params(build_architecture(ArchSize::mini)) == 365);
    MESSAGE("parameter counts: mini=", count_params(build_architecture(ArchSize::mini)),
            " small=", count_params(build_architecture(ArchSize::small)),
            " big=", count_params(build_architecture(ArchSize::big)),
            " huge=", count_params(build_architecture(ArchSize::huge)));
  }

  TEST_CASE("broken chains are rejected") {
    ArchitectureSpec s = toy_spec();
    s.mlp = {{2, 1}};
    CHECK_THROWS_AS(validate(s), ValidationError);
    s = toy_spec();
    s.mlp = {{1, 3}};
    CHECK_THROWS_AS(validate(s), ValidationError);
  }
}

TEST_SUITE("parameters") {
  TEST_CASE("init is deterministic and seed sensitive") {
    auto spec = build_architecture(ArchSize::mini);
    auto a = init_params(spec, 7);
    auto b = init_params(spec, 7);
    auto c = init_params(spec, 8);
    CHECK(a == b);
    CHECK_FALSE(a.flat()[0] == c.flat()[0]);
    CHECK(a.all_finite());
  }

  TEST_CASE("shapes follow the architecture") {
    auto spec = build_architecture(ArchSize::mini);
    auto p = init_params(spec, 1);
    CHECK(p.size() == count_params(spec));
    CHECK(p.weights(0).size() == 4 * 2 * 3);
    CHECK(p.bias(0).size() == 4);
    CHECK(p.weights(2).size() == 8 * 8);
    CHECK(p.weights(4).size() == 16);
    CHECK(p.bias(4).size() == 1);
    for (std::size_t l = 0; l < spec.num_layers(); ++l)
      for (float b : p.bias(l)) CHECK(b == 0.0f);
  }

  TEST_CASE("weights respect the fan-in bound") {
    auto spec = build_architecture(ArchSize::small);
    auto p = init_params(spec, 3);
    const double bound = std::sqrt(6.0 / (16 * 3));
    for (float w : p.weights(1)) CHECK(std::abs(w) <= bound);
  }
}

TEST_SUITE("forward") {
  TEST_CASE("zero parameters give p = 0.5 and loss ln 2") {
    ParameterSet p(build_architecture(ArchSize::mini));
    auto b = random_batch<float>(4, 40, 1);
    auto fwd = forward(p, b);
    for (float prob : fwd.probs) CHECK(prob == doctest::Approx(0.5f));
    auto y = alternating_labels(4);
    auto lg = loss_and_grads(p, fwd.cache, y);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  }

  TEST_CASE("probabilities lie strictly inside (0, 1)") {
    auto p = init_params(build_architecture(ArchSize::small), 4);
    auto b = random_batch<float>(6, 50, 2);
    for (float prob : forward(p, b).probs) {
      CHECK(prob > 0.0f);
      CHECK(prob < 1.0f);
    }
  }

  TEST_CASE("toy net matches hand evaluation") {
    BasicParameters<double> p(toy_spec());
    auto w = p.weights(0);
    double vals[] = {1, 0, -1, 0.5, 0.5, 0.5};
    std::copy(std::begin(vals), std::end(vals), w.begin());
    p.bias(0)[0] = 0.1;
    p.weights(1)[0] = 2.0;
    p.bias(1)[0] = -1.0;
    BasicBatch<double> b(1, 2, 4);
    double x[] = {1, 2, 3, 4, 1, -1, 1, -1};
    std::copy(std::begin(x), std::end(x), b.data.begin());
    auto fwd = forward(p, b);
    // pre-activations [-1.9, -1.4, -2.4, 3.1] -> ReLU -> mean 0.775 -> 2*0.775 - 1
    CHECK(fwd.cache.gap_out[0] == doctest::Approx(0.775));
    CHECK(fwd.cache.logits[0] == doctest::Approx(0.55));
    CHECK(fwd.probs[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.55))));
  }

  TEST_CASE("shape mismatch names the layer") {
    auto p = init_params(build_architecture(ArchSize::mini), 1);
    Batch b(2, 3, 20);
    try {
      forward(p, b);
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("conv layer 0") != std::string::npos);
    }
    Batch too_short(2, 2, 1);
    CHECK_THROWS_AS(forward(p, too_short), ValidationError);
  }

  TEST_CASE("max-pool ties route to the earliest index") {
    ArchitectureSpec s;
    s.conv = {{2, 1, 1}};
    s.pool_after = {0};
    s.mlp = {{1, 1}};
    BasicParameters<double> p(s);
    p.weights(0)[0] = 1.0;
    p.weights(1)[0] = 1.0;
    BasicBatch<double> b(1, 2, 4);
    double x[] = {2, 2, 1, 3, 0, 0, 0, 0};
    std::copy(std::begin(x), std::end(x), b.data.begin());
    auto fwd = forward(p, b);
    REQUIRE(fwd.cache.pool_argmax[0].size() == 2);
    CHECK(fwd.cache.pool_argmax[0][0] == 0);
    CHECK(fwd.cache.pool_argmax[0][1] == 3);
    std::uint8_t y[] = {1};
    auto g = loss_and_grads(p, fwd.cache, y).grads;
    // gradient reaches the conv weight only through positions 0 and 3 (values 2 and 3),
    // each with GAP weight 1/2
    const double dlogit = 1.0 / (1.0 + std::exp(-2.5)) - 1.0;
    CHECK(g.weights(0)[0] == doctest::Approx(dlogit * 0.5 * (2 + 3)));
    CHECK(g.weights(0)[1] == doctest::Approx(0.0));
  }
}

TEST_SUITE("loss and gradients") {
  TEST_CASE("analytic gradients match finite differences on mini") {
    auto p = init_params(build_architecture(ArchSize::mini), 11).cast<double>();
    auto b = random_batch<double>(8, 32, 5);
    auto y = alternating_labels(8);
    auto fwd = forward(p, b);
    auto analytic = loss_and_grads(p, fwd.cache, y).grads;
    auto numeric = numeric_grads(p, b, y, 1e-3);
    double worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double a = analytic.flat()[i], n = numeric.flat()[i];
      const double diff = std::abs(a - n);
      if (diff > 1e-9) worst = std::max(worst, diff / std::max(std::abs(a), std::abs(n)));
    }
    CHECK(worst < 1e-4);
  }

  TEST_CASE("duplicating every sample leaves loss and gradients unchanged") {
    auto p = init_params(build_architecture(ArchSize::mini), 2).cast<double>();
    auto b = random_batch<double>(4, 24, 9);
    auto y = alternating_labels(4);
    BasicBatch<double> dup(8, 2, 24);
    std::vector<std::uint8_t> ydup;
    for (int i = 0; i < 4; ++i)
      for (int r = 0; r < 2; ++r) {
        std::copy(b.item(i).begin(), b.item(i).end(), dup.item(2 * i + r).begin());
        ydup.push_back(y[i]);
      }
    auto a = loss_and_grads(p, forward(p, b).cache, y);
    auto d = loss_and_grads(p, forward(p, dup).cache, ydup);
    CHECK(a.loss == doctest::Approx(d.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(a.grads.flat()[i] == doctest::Approx(d.grads.flat()[i]).epsilon(1e-10));
  }

  TEST_CASE("shuffling the batch leaves loss and gradients unchanged") {
    auto p = init_params(build_architecture(ArchSize::mini), 5).cast<double>();
    auto b = random_batch<double>(6, 24, 10);
    auto y = alternating_labels(6);
    int order[] = {3, 0, 5, 1, 4, 2};
    BasicBatch<double> s(6, 2, 24);
    std::vector<std::uint8_t> ys;
    for (int i = 0; i < 6; ++i) {
      std::copy(b.item(order[i]).begin(), b.item(order[i]).end(), s.item(i).begin());
      ys.push_back(y[order[i]]);
    }
    auto a = loss_and_grads(p, forward(p, b).cache, y);
    auto c = loss_and_grads(p, forward(p, s).cache, ys);
    CHECK(a.loss == doctest::Approx(c.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(a.grads.flat()[i] == doctest::Approx(c.grads.flat()[i]).epsilon(1e-10));
  }

  TEST_CASE("BCE stays finite for extreme logits") {
    for (double z = -50; z <= 50; z += 0.5) {
      for (std::uint8_t y : {0, 1}) {
        const double l = bce_from_logit(z, y);
        CHECK(std::isfinite(l));
        CHECK(l >= 0.0);
      }
      CHECK(std::isfinite(bce_from_logit(static_cast<float>(z), 1)));
    }
    CHECK(bce_from_logit(50.0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bce_from_logit(-50.0, 1) == doctest::Approx(50.0));
  }

  TEST_CASE("labels outside {0,1} are rejected") {
    auto p = init_params(build_architecture(ArchSize::mini), 1);
    auto b = random_batch<float>(2, 16, 1);
    auto fwd = forward(p, b);
    std::uint8_t bad[] = {0, 2};
    CHECK_THROWS_AS(loss_and_grads(p, fwd.cache, bad), ValidationError);
    std::uint8_t short_labels[] = {0};
    CHECK_THROWS_AS(loss_and_grads(p, fwd.cache, short_labels), ValidationError);
  }
}

TEST_SUITE("optimizers") {
  TEST_CASE("sgd arithmetic") {
    ArchitectureSpec s = toy_spec();
    ParameterSet p(s), g(s);
    p.flat()[0] = 1.0f;
    g.flat()[0] = 0.5f;
    sgd_step(p, g, 0.01f);
    CHECK(p.flat()[0] == doctest::Approx(0.995f));

    ParameterSet zero(s);
    auto before = p;
    sgd_step(p, zero, 0.01f);
    CHECK(p == before);

    sgd_step(p, g, 0.01f);
    sgd_step(p, g, 0.01f);
    CHECK(p.flat()[0] == doctest::Approx(0.995f - 2 * 0.01f * 0.5f));
  }

  TEST_CASE("sgd rejects non-finite gradients") {
    ParameterSet p(toy_spec()), g(toy_spec());
    g.flat()[1] = std::nanf("");
    CHECK_THROWS_AS(sgd_step(p, g, 0.1f), NumericalError);
  }

  TEST_CASE("adam: zero gradient on fresh state is a no-op") {
    auto p = init_params(build_architecture(ArchSize::mini), 3);
    auto before = p;
    OptimizerState st;
    adam_step(p, ParameterSet(p.spec()), st, 1e-3f);
    CHECK(p == before);
    CHECK(st.step == 1);
  }

  TEST_CASE("adam: first step moves each element by about lr") {
    ParameterSet p(toy_spec()), g(toy_spec());
    const float gv[] = {0.3f, -2.0f, 1e-3f, 5.0f, -0.01f};
    for (std::size_t i = 0; i < 5; ++i) g.flat()[i] = gv[i];
    OptimizerState st;
    adam_step(p, g, st, 0.01f);
    for (std::size_t i = 0; i < 5; ++i) {
      // bias-corrected m/sqrt(v) = g/|g| on the first step
      const double expected = -0.01 * gv[i] / (std::abs(gv[i]) + 1e-8);
      CHECK(p.flat()[i] == doctest::Approx(expected).epsilon(1e-5));
    }
  }

  TEST_CASE("adam is a pure function of its inputs") {
    auto p1 = init_params(build_architecture(ArchSize::mini), 3);
    auto p2 = p1;
    auto g = init_params(build_architecture(ArchSize::mini), 4);
    OptimizerState s1, s2;
    for (int i = 0; i < 3; ++i) {
      adam_step(p1, g, s1, 1e-3f);
      adam_step(p2, g, s2, 1e-3f);
    }
    CHECK(p1 == p2);
    CHECK(s1.first_moment == s2.first_moment);
  }
}

TEST_SUITE("gradient check") {
  TEST_CASE("mini passes, including on an all-zero batch, deterministically") {
    auto spec = build_architecture(ArchSize::mini);
    auto b = random_batch<double>(8, 32, 21);
    auto y = alternating_labels(8);
    const double e1 = gradient_check(spec, 1, b, y);
    const double e2 = gradient_check(spec, 1, b, y);
    CHECK(e1 < 1e-4);
    CHECK(e1 == e2);
    BasicBatch<double> zero(8, 2, 32);
    const double ez = gradient_check(spec, 1, zero, y);
    CHECK(std::isfinite(ez));
    CHECK(ez < 1e-4);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip is bit exact") {
    auto p = init_params(build_architecture(ArchSize::small), 17);
    auto bytes = encode_checkpoint(p);
    CHECK(bytes.substr(0, 4) == "MSNN");
    CHECK(decode_checkpoint(bytes) == p);
  }

  TEST_CASE("format errors") {
    auto bytes = encode_checkpoint(init_params(build_architecture(ArchSize::mini), 1));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);

    auto version = bytes;
    version[4] = 9;
    CHECK_THROWS_WITH_AS(decode_checkpoint(version), doctest::Contains("version"), FormatError);

    auto truncated = bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_WITH_AS(decode_checkpoint(truncated), doctest::Contains("missing 3 bytes"),
                         FormatError);
  }

  TEST_CASE("custom specs decode against an explicit spec") {
    BasicParameters<float> p(toy_spec());
    p.flat()[2] = 1.5f;
    CHECK(decode_checkpoint(encode_checkpoint(p), toy_spec()) == p);
    CHECK_THROWS_AS(decode_checkpoint(encode_checkpoint(p)), FormatError);
  }
}

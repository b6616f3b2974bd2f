#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hpgan/error.hpp"
#include "hpgan/networks.hpp"
#include "hpgan/ops.hpp"
#include "../support/fixtures.hpp"

using namespace hpgan;
using hpgan::test_support::random_tensor;
using hpgan::test_support::tiny_config;

namespace {

Tensor unit_signal(std::mt19937_64& rng, Shape shape = {2, 24}) { return random_tensor(std::move(shape), rng, 0, 1); }

}  // namespace

TEST(Networks, PooledExtents) {
  EXPECT_EQ(pooled_extent(0), 24u);
  EXPECT_EQ(pooled_extent(1), 12u);
  EXPECT_EQ(pooled_extent(2), 6u);
  EXPECT_EQ(pooled_extent(3), 3u);
  EXPECT_EQ(pooled_extent(4), 2u);
}

TEST(Networks, DefaultConfigShapes) {
  ModelConfig c;  // kernel 7, 3 blocks, latent 64, H 4
  Rng rng(0);
  const Models m = build_models(c, rng);
  std::mt19937_64 drng(1);
  const Tensor x = unit_signal(drng);
  const Tensor z = encode(m.encoder, x);
  EXPECT_EQ(z.shape(), (Shape{64}));
  const HypothesisSet h = generate(m.generator, z, Tensor::zeros({64}), 0);
  EXPECT_EQ(h.conditioned.size(), 4u);
  EXPECT_EQ(h.noise_sample.shape(), (Shape{2, 24}));
  const FeatureStack f = discriminate(m.discriminator, x);
  EXPECT_EQ(f.per_block.size(), 3u);
  EXPECT_EQ(f.score.rank(), 0u);
  EXPECT_GT(f.score.item(), 0.0);
  EXPECT_LT(f.score.item(), 1.0);
}

// Every topology of the grid builds and round-trips shapes.
TEST(Networks, AllGridTopologies) {
  std::mt19937_64 drng(2);
  const Tensor x = unit_signal(drng, {3, 2, 24});
  for (std::size_t k = 3; k <= 13; k += 2) {
    for (std::size_t b = 2; b <= 4; ++b) {
      ModelConfig c = tiny_config();
      c.kernel_size = k;
      c.n_blocks = b;
      Rng rng(k * 10 + b);
      const Models m = build_models(c, rng);
      const Tensor z = encode(m.encoder, x);
      ASSERT_EQ(z.shape(), (Shape{3, c.latent_dim})) << k << "/" << b;
      const HypothesisSet h = generate(m.generator, z, Tensor::zeros(z.shape()), rng);
      for (const Tensor& y : h.conditioned) {
        EXPECT_EQ(y.shape(), (Shape{3, 2, 24})) << k << "/" << b;
        for (double v : y.data()) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
        }
      }
      const FeatureStack f = discriminate(m.discriminator, h.conditioned[0]);
      EXPECT_EQ(f.per_block.size(), b);
      EXPECT_EQ(f.per_block.back().dim(2), pooled_extent(b));
      EXPECT_EQ(f.embedding.shape(), (Shape{3, m.discriminator.embedding_dim()}));
      EXPECT_EQ(f.score.shape(), (Shape{3}));
    }
  }
}

TEST(Networks, ParameterCountIsPureFunctionOfConfig) {
  const ModelConfig c = tiny_config();
  Rng a(1), b(99);
  const Models ma = build_models(c, a);
  const Models mb = build_models(c, b);
  EXPECT_EQ(ma.parameter_count(), mb.parameter_count());
  // Encoder with kernel 3, 2 blocks, base 4, latent 8: convs 2->4, 4->4, 4->8, 8->8;
  // dense 8*6 -> 16 -> 8.
  const std::size_t enc = (4 * 2 * 3 + 4) + (4 * 4 * 3 + 4) + (8 * 4 * 3 + 8) + (8 * 8 * 3 + 8) + (48 * 16 + 16) +
                          (16 * 8 + 8);
  EXPECT_EQ(ma.encoder.parameter_count(), enc);
}

TEST(Networks, ParameterNamesAreUnique) {
  Rng rng(3);
  const Models m = build_models(tiny_config(), rng);
  std::set<std::string> names;
  for (const Parameter* p : m.all_parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
  EXPECT_TRUE(names.contains("generator.head1.weight"));
  EXPECT_TRUE(names.contains("discriminator.dense1.bias"));
}

TEST(Networks, BiasesStartAtZero) {
  Rng rng(3);
  const Models m = build_models(tiny_config(), rng);
  for (const Parameter* p : m.all_parameters()) {
    if (p->name.ends_with(".bias")) {
      for (double v : p->value.data()) EXPECT_EQ(v, 0.0) << p->name;
    }
  }
}

TEST(Networks, EncodeIsDeterministic) {
  Rng rng(4);
  const Models m = build_models(tiny_config(), rng);
  std::mt19937_64 drng(5);
  const Tensor x = unit_signal(drng);
  const Tensor z1 = encode(m.encoder, x);
  const Tensor z2 = encode(m.encoder, x);
  EXPECT_TRUE(std::equal(z1.data().begin(), z1.data().end(), z2.data().begin()));
}

TEST(Networks, EncodeRejectsUnnormalisedInput) {
  Rng rng(4);
  const Models m = build_models(tiny_config(), rng);
  Tensor x = Tensor::filled({2, 24}, 0.5);
  x.mutable_data()[7] = 1.01;
  EXPECT_THROW(encode(m.encoder, x), DataError);
  x.mutable_data()[7] = -0.0009;
  EXPECT_NO_THROW(encode(m.encoder, x));
  EXPECT_THROW(encode(m.encoder, Tensor::filled({2, 23}, 0.5)), ShapeError);
}

TEST(Networks, EncodeIsSensitiveToEveryInputElement) {
  Rng rng(6);
  const Models m = build_models(tiny_config(), rng);
  std::mt19937_64 drng(7);
  Tensor x = unit_signal(drng);
  x.set_requires_grad();
  backward(ops::sum(ops::mul(encode(m.encoder, x), Tensor::filled({8}, 1.0))));
  std::size_t nonzero = 0;
  for (double g : x.grad()) nonzero += g != 0.0;
  EXPECT_GT(nonzero, 40u);
}

TEST(Networks, SingleHeadWithoutMh) {
  ModelConfig c = tiny_config();
  c.use_mh = false;
  c.n_hypotheses = 4;
  Rng rng(8);
  const Models m = build_models(c, rng);
  EXPECT_EQ(m.generator.n_heads(), 1u);
  const HypothesisSet h = generate(m.generator, Tensor::zeros({8}), Tensor::zeros({8}), rng);
  EXPECT_EQ(h.conditioned.size(), 1u);
  EXPECT_EQ(h.noise_head, 0u);
}

TEST(Networks, VariationalEncoderEmitsMeanAndLogVar) {
  ModelConfig c = tiny_config();
  c.use_vb = true;
  Rng rng(9);
  const Models m = build_models(c, rng);
  std::mt19937_64 drng(1);
  const EncoderOutput out = m.encoder.forward(unit_signal(drng, {4, 2, 24}));
  EXPECT_EQ(out.mean.shape(), (Shape{4, 8}));
  EXPECT_EQ(out.log_var.shape(), (Shape{4, 8}));
}

TEST(Networks, GenerateChecksExtents) {
  Rng rng(10);
  const Models m = build_models(tiny_config(), rng);
  EXPECT_THROW(generate(m.generator, Tensor::zeros({7}), Tensor::zeros({7}), 0), ShapeError);
  EXPECT_THROW(generate(m.generator, Tensor::zeros({8}), Tensor::zeros({8}), 5), ShapeError);
}

TEST(Networks, DiscriminatorSelfDistanceIsZero) {
  Rng rng(11);
  const Models m = build_models(tiny_config(), rng);
  std::mt19937_64 drng(3);
  const Tensor x = unit_signal(drng);
  const FeatureStack a = discriminate(m.discriminator, x);
  const FeatureStack b = discriminate(m.discriminator, x);
  EXPECT_EQ(ops::sq_l2_distance(a.embedding, b.embedding).item(), 0.0);
}

TEST(Networks, NoiseHeadIsUniform) {
  Rng rng(12);
  const Models m = build_models(tiny_config(), rng);
  std::size_t counts[2] = {0, 0};
  NoGradGuard g;
  for (int i = 0; i < 400; ++i) ++counts[generate(m.generator, Tensor::zeros({8}), Tensor::zeros({8}), rng).noise_head];
  EXPECT_GT(counts[0], 150u);
  EXPECT_GT(counts[1], 150u);
}

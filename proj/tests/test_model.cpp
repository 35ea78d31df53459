#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dtpnet/gradcheck.hpp"
#include "dtpnet/model.hpp"
#include "support.hpp"

using namespace dtp;
using dtptest::random_tensor;

namespace {

DTPNetConfig toy_config() {
  DTPNetConfig c;
  c.encoder_filters = 8;
  c.encoder_kernel = 4;
  c.conv_channels = 8;
  c.conv_kernel = 3;
  c.blocks_per_pyramid = 2;
  c.pyramid_repeats = 1;
  c.growth_channels = 4;
  return c;
}

}  // namespace

TEST_CASE("build is reproducible from the seed") {
  const DTPNetConfig config = toy_config();
  const auto m1 = build<float>(config, 99);
  const auto m2 = build<float>(config, 99);
  CHECK(dtptest::bit_equal(m1.encoder_weight.values, m2.encoder_weight.values));
  CHECK(dtptest::bit_equal(m1.merge_weight.values, m2.merge_weight.values));
  for (std::size_t b = 0; b < m1.blocks.size(); ++b) {
    CHECK(dtptest::bit_equal(m1.blocks[b].dilated.values,
                             m2.blocks[b].dilated.values));
  }
  const auto m3 = build<float>(config, 100);
  CHECK_FALSE(
      dtptest::bit_equal(m1.encoder_weight.values, m3.encoder_weight.values));
}

TEST_CASE("full-scale EMG architecture has 35 blocks") {
  DTPNetConfig c;
  c.encoder_filters = 454;
  c.encoder_kernel = 23;  // odd kernel needs the explicit stride
  c.stride_override = 11;
  c.conv_channels = 440;
  c.conv_kernel = 5;
  c.blocks_per_pyramid = 5;
  c.pyramid_repeats = 7;
  c.validate();
  CHECK(c.num_blocks() == 35);
  const auto model = build<float>(c, 1);
  CHECK(model.blocks.size() == 35);
}

TEST_CASE("dense channel schedule of the toy config") {
  const DTPNetConfig c = toy_config();
  CHECK(c.block_input_channels(0) == 8);
  CHECK(c.block_input_channels(1) == 12);
  CHECK(c.merge_input_channels() == 16);

  const auto model = build<float>(c, 5);
  CHECK(model.blocks[0].bottleneck.shape == std::vector<int>{4, 8, 1});
  CHECK(model.blocks[1].bottleneck.shape == std::vector<int>{4, 12, 1});
  CHECK(model.merge_weight.shape == std::vector<int>{8, 16, 1});
}

TEST_CASE("odd encoder kernel without a stride override is rejected") {
  DTPNetConfig c = toy_config();
  c.encoder_kernel = 23;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.stride_override = 11;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config JSON round trip and unknown field rejection") {
  DTPNetConfig c = toy_config();
  c.connectivity = Connectivity::Residual;
  c.dilation_mode = DilationMode::Flat;
  const std::string text = config_to_json(c);
  const DTPNetConfig back = config_from_json(text);
  CHECK(back.encoder_filters == c.encoder_filters);
  CHECK(back.growth() == c.growth());
  CHECK(back.connectivity == Connectivity::Residual);
  CHECK(back.dilation_mode == DilationMode::Flat);

  CHECK_THROWS_AS(config_from_json("{\"N\": 8, \"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{\"L\": 0}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
}

TEST_CASE("encode length, zero preservation and linearity") {
  DTPNetConfig c = toy_config();
  c.encoder_filters = 16;
  c.encoder_kernel = 32;
  const auto model = build<float>(c, 17);

  Rng rng(3);
  const auto x = random_tensor<float>({1, 512}, rng);
  const auto z = encode(model, x);
  CHECK(z.dim(0) == 16);
  CHECK(z.dim(1) == 2 * 512 / 32 - 1);  // 31

  const Tensor<float> zero({1, 512});
  const auto z0 = encode(model, zero);
  for (float v : z0.values) CHECK(v == 0.f);

  Tensor<float> x2({1, 512});
  for (std::size_t i = 0; i < x2.size(); ++i) x2.values[i] = 2.f * x.values[i];
  const auto z2 = encode(model, x2);
  for (std::size_t i = 0; i < z.size(); ++i)
    CHECK(z2.values[i] == doctest::Approx(2.f * z.values[i]).epsilon(1e-5));

  CHECK_THROWS_AS(encode(model, random_tensor<float>({1, 500}, rng)),
                  ShapeError);
}

TEST_CASE("encoder and decoder satisfy superposition") {
  DTPNetConfig c = toy_config();
  c.encoder_kernel = 8;
  const auto model = build<float>(c, 19);
  Rng rng(20);
  const auto a = random_tensor<float>({1, 64}, rng);
  const auto b = random_tensor<float>({1, 64}, rng);
  const float alpha = 1.7f, beta = -0.6f;

  Tensor<float> mixed({1, 64});
  for (std::size_t i = 0; i < mixed.size(); ++i)
    mixed.values[i] = alpha * a.values[i] + beta * b.values[i];
  const auto za = encode(model, a);
  const auto zb = encode(model, b);
  const auto zm = encode(model, mixed);
  for (std::size_t i = 0; i < zm.size(); ++i) {
    const double expect = static_cast<double>(alpha) * za.values[i] +
                          static_cast<double>(beta) * zb.values[i];
    CHECK(std::fabs(zm.values[i] - expect) /
              std::max(1.0, std::fabs(expect)) <
          1e-5);
  }

  // decoder: the transposed convolution with the decoder kernel
  const auto frames = za.shape;
  const auto fa = random_tensor<float>(frames, rng);
  const auto fb = random_tensor<float>(frames, rng);
  Tensor<float> fm(frames);
  for (std::size_t i = 0; i < fm.size(); ++i)
    fm.values[i] = alpha * fa.values[i] + beta * fb.values[i];
  const int stride = c.stride();
  const auto ya = conv_transpose1d(fa, model.decoder_weight, stride);
  const auto yb = conv_transpose1d(fb, model.decoder_weight, stride);
  const auto ym = conv_transpose1d(fm, model.decoder_weight, stride);
  for (std::size_t i = 0; i < ym.size(); ++i) {
    const double expect = static_cast<double>(alpha) * ya.values[i] +
                          static_cast<double>(beta) * yb.values[i];
    CHECK(std::fabs(ym.values[i] - expect) /
              std::max(1.0, std::fabs(expect)) <
          1e-5);
  }
}

TEST_CASE("separate keeps shape and zero") {
  for (Connectivity conn :
       {Connectivity::Dense, Connectivity::Residual, Connectivity::None}) {
    DTPNetConfig c = toy_config();
    c.connectivity = conn;
    const auto model = build<float>(c, 23);
    Rng rng(4);
    const auto z = random_tensor<float>({8, 31}, rng);
    const auto s = separate(model, z);
    CHECK(s.shape == z.shape);

    const Tensor<float> zero({8, 31});
    const auto s0 = separate(model, zero);
    for (float v : s0.values) CHECK(v == 0.f);

    CHECK_THROWS_AS(separate(model, random_tensor<float>({5, 31}, rng)),
                    ShapeError);
  }
}

TEST_CASE("dense and plain cascades disagree on shared weights") {
  DTPNetConfig dense_cfg = toy_config();
  DTPNetConfig none_cfg = toy_config();
  none_cfg.connectivity = Connectivity::None;
  const auto dense_model = build<float>(dense_cfg, 7);
  auto none_model = build<float>(none_cfg, 7);
  // share what is shareable: encoder weights have identical shapes
  none_model.encoder_weight = dense_model.encoder_weight;

  Rng rng(8);
  const auto z = random_tensor<float>({8, 31}, rng);
  const auto a = separate(dense_model, z);
  const auto b = separate(none_model, z);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    differ = differ || a.values[i] != b.values[i];
  CHECK(differ);
}

TEST_CASE("forward output length equals input length") {
  DTPNetConfig c = toy_config();
  c.encoder_kernel = 16;
  c.encoder_filters = 16;
  const auto model = build<float>(c, 31);
  Rng rng(9);
  for (int t_len : {64, 128, 512}) {
    const auto x = random_tensor<float>({1, t_len}, rng);
    const auto y = forward(model, x);
    CHECK(y.shape == std::vector<int>{1, t_len});
  }
  const Tensor<float> zero({1, 64});
  const auto y0 = forward(model, zero);
  for (float v : y0.values) CHECK(v == 0.f);
}

TEST_CASE("forward zero preservation holds for every variant") {
  const DTPNetConfig base = toy_config();
  for (AblationVariant variant : kAllVariants) {
    const auto model = build<float>(ablation_variant(variant, base), 13);
    const Tensor<float> zero({1, 64});
    const auto y = forward(model, zero);
    for (float v : y.values) CHECK(v == 0.f);
  }
}

TEST_CASE("denoise_any_length pads and trims") {
  DTPNetConfig c = toy_config();
  c.encoder_kernel = 16;
  const auto model = build<float>(c, 37);
  Rng rng(10);

  // aligned input goes straight through forward
  const auto aligned = random_tensor<float>({1, 128}, rng);
  const auto direct = forward(model, aligned);
  const auto via_any = denoise_any_length(model, aligned);
  CHECK(dtptest::bit_equal(direct.values, via_any.values));

  // T = 100 pads to 104 internally and trims back
  const auto odd = random_tensor<float>({1, 100}, rng);
  const auto y = denoise_any_length(model, odd);
  CHECK(y.shape == std::vector<int>{1, 100});

  Tensor<float> padded({1, 104});
  std::copy(odd.values.begin(), odd.values.end(), padded.values.begin());
  const auto y_padded = forward(model, padded);
  for (int i = 0; i < 100; ++i) CHECK(y.at(0, i) == y_padded.at(0, i));

  CHECK_THROWS_AS(denoise_any_length(model, random_tensor<float>({1, 8}, rng)),
                  ShapeError);
}

TEST_CASE("ablation variants set connectivity and dilation") {
  const DTPNetConfig base = toy_config();

  const DTPNetConfig basenet = ablation_variant(AblationVariant::Basenet, base);
  CHECK(basenet.connectivity == Connectivity::None);
  CHECK(basenet.dilation_mode == DilationMode::Flat);
  for (int b = 0; b < basenet.num_blocks(); ++b)
    CHECK(basenet.dilation_of(b) == 1);

  const DTPNetConfig proposed =
      ablation_variant(AblationVariant::TpbDense, base);
  CHECK(proposed.connectivity == Connectivity::Dense);
  CHECK(proposed.dilation_mode == DilationMode::Pyramid);

  const DTPNetConfig res = ablation_variant(AblationVariant::TpbRes, base);
  CHECK(res.connectivity == Connectivity::Residual);
  const auto res_model = build<float>(res, 3);
  for (const auto& block : res_model.blocks) {
    CHECK(block.bottleneck.shape == res_model.blocks[0].bottleneck.shape);
    CHECK(block.out.dim(0) == res.encoder_filters);
  }

  CHECK(variant_from_name("tpb_dense") == AblationVariant::TpbDense);
  CHECK_THROWS_AS(variant_from_name("nope"), ConfigError);
}

TEST_CASE("dilation schedule is 2^(j mod M) under pyramid mode") {
  DTPNetConfig c = toy_config();
  c.blocks_per_pyramid = 3;
  c.pyramid_repeats = 2;
  const auto model = build<float>(c, 41);
  const int expected[] = {1, 2, 4, 1, 2, 4};
  for (int b = 0; b < 6; ++b)
    CHECK(model.blocks[static_cast<std::size_t>(b)].dilation == expected[b]);
}

TEST_CASE("param_count matches the hand count") {
  DTPNetConfig c;
  c.encoder_filters = 2;
  c.encoder_kernel = 4;
  c.conv_channels = 2;
  c.conv_kernel = 3;
  c.blocks_per_pyramid = 1;
  c.pyramid_repeats = 1;
  c.growth_channels = 2;
  // encoder 8 + decoder 8 + bottleneck 4 + dilated 12 + out 4 + merge 8
  CHECK(param_count(c) == 44);
}

TEST_CASE("param_count follows the dense closed form in R") {
  // closed form: encoder + decoder + merge + sum over blocks of
  // B*C_in(i) + H*B*P + B*H with C_in(i) = N + i*B
  DTPNetConfig c = toy_config();
  for (int repeats : {1, 2, 4}) {
    c.pyramid_repeats = repeats;
    const int blocks = c.num_blocks();
    const std::int64_t growth = c.growth();
    std::int64_t expect = 0;
    expect += 2ll * c.encoder_filters * c.encoder_kernel;
    for (int i = 0; i < blocks; ++i) {
      expect += growth * (c.encoder_filters + i * growth);
      expect += static_cast<std::int64_t>(c.conv_channels) * growth *
                c.conv_kernel;
      expect += growth * c.conv_channels;
    }
    expect += static_cast<std::int64_t>(c.encoder_filters) *
              (c.encoder_filters + blocks * growth);
    CHECK(param_count(c) == expect);
  }
}

TEST_CASE("flops estimate is 2 MACs per weight per frame") {
  DTPNetConfig c;
  c.encoder_filters = 2;
  c.encoder_kernel = 4;
  c.conv_channels = 2;
  c.conv_kernel = 3;
  c.blocks_per_pyramid = 1;
  c.pyramid_repeats = 1;
  c.growth_channels = 2;
  // every conv output has K frames here, so flops = 2 * params * K
  const int t_len = 16;
  const int frames = 2 * t_len / 4 - 1;
  CHECK(flops_estimate(c, t_len) == 2 * 44 * frames);
}

TEST_CASE("gradient reaches every weight under dense connectivity") {
  const DTPNetConfig c = toy_config();
  const auto model = build<float>(c, 55);
  Rng rng(56);
  const auto x = random_tensor<float>({1, 64}, rng);
  const auto target = random_tensor<float>({1, 64}, rng);

  Tape<float> tape;
  const ForwardGraph g = build_forward(tape, model, x, true);
  const int loss = tape.mse_loss(g.output, tape.leaf(target, false));
  tape.backward(loss);

  for (int id : g.weights) {
    const Tensor<float>& grad = tape.grad(id);
    REQUIRE(grad.size() > 0);
    double norm = 0.0;
    for (float v : grad.values) norm += static_cast<double>(v) * v;
    CHECK(norm > 0.0);
  }
}

TEST_CASE("full forward graph passes the gradient check on a toy config") {
  DTPNetConfig c = toy_config();
  c.encoder_filters = 4;
  c.encoder_kernel = 4;
  c.conv_channels = 4;
  c.growth_channels = 2;
  const auto model = build<double>(c, 77);
  Rng rng(78);
  const auto x = random_tensor<double>({1, 32}, rng);
  const auto target = random_tensor<double>({1, 32}, rng);

  std::vector<Tensor<double>> inputs;
  for (const auto& [name, w] : model.named_params()) inputs.push_back(*w);
  inputs.push_back(x);

  const auto report = finite_difference_check(
      [&](Tape<double>& tape, const std::vector<int>& leaves) {
        std::vector<int> weight_leaves(leaves.begin(), leaves.end() - 1);
        const ForwardGraph g =
            build_forward_from_leaves(tape, c, weight_leaves, leaves.back());
        return tape.mse_loss(g.output, tape.leaf(target, false));
      },
      inputs);
  CHECK(report.finite);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("frame dual reconstruction") {
  // identity rows padded with extra filters reconstruct exactly
  const int kernel = 4, filters = 6;
  Tensor<float> w({filters, 1, kernel});
  for (int i = 0; i < kernel; ++i) w.at(i, 0, i) = 1.f;
  w.at(4, 0, 0) = 0.5f;  // extra rows keep full column rank
  w.at(5, 0, 2) = -0.25f;

  Rng rng(91);
  const auto x = random_tensor<float>({1, 16}, rng);
  const auto exact = frame_dual_reconstruction(w, 2, x);
  CHECK(exact.relative_error < 1e-6);

  // random full-rank bank
  const auto wr = random_tensor<float>({12, 1, 8}, rng);
  const auto xr = random_tensor<float>({1, 64}, rng);
  const auto res = frame_dual_reconstruction(wr, 4, xr);
  CHECK(res.relative_error <= 1e-4);

  // N < L refused
  const auto wn = random_tensor<float>({4, 1, 8}, rng);
  CHECK_THROWS_AS(frame_dual_reconstruction(wn, 4, xr), MetricDomainError);

  // rank-deficient bank refused
  Tensor<float> rank1({8, 1, 4});
  for (int f = 0; f < 8; ++f)
    for (int i = 0; i < 4; ++i) rank1.at(f, 0, i) = static_cast<float>(f + 1);
  CHECK_THROWS_AS(frame_dual_reconstruction(rank1, 2, x), MetricDomainError);
}

TEST_CASE("length contract across arbitrary lengths") {
  DTPNetConfig c = toy_config();
  c.encoder_kernel = 16;
  const auto model = build<float>(c, 61);
  Rng rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const int t_len = rng.uniform_int(16, 400);
    const auto x = random_tensor<float>({1, t_len}, rng);
    CHECK(denoise_any_length(model, x).dim(1) == t_len);
  }
}

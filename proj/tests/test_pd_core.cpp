#include <catch2/catch_amalgamated.hpp>

#include "pdiae/blocks.hpp"
#include "pdiae/grad_check.hpp"
#include "test_util.hpp"

using namespace pdiae;

namespace {

SigT sig_from_grid(Tape& t, const ComplexGrid& g) {
  return {g.sizes, cconstant(t, g.values)};
}

ComplexGrid grid_from_sig(const Tape& t, const SigT& s) {
  return ComplexGrid(s.sizes, cval(t, s.v));
}

void fill(ParamStore& store, const std::string& name, double v) {
  for (auto& x : store.at(name).data) x = v;
}

}  // namespace

TEST_CASE("pd_encode passes DC through an all-ones rank-1 factorization") {
  EncoderSpec spec{"enc", 1, 8, 1};
  ParamStore store;
  Rng rng(1);
  init_encoder(store, spec, rng);
  fill(store, "enc.P.re", 1.0);
  fill(store, "enc.P.im", 0.0);
  fill(store, "enc.Q.re", 1.0);
  fill(store, "enc.Q.im", 0.0);

  ComplexGrid a(Shape{32});
  for (std::size_t i = 0; i < 32; ++i) a.values.re[i] = 1.0;
  Tape t(&store);
  SigT v = pd_encode(t, sig_from_grid(t, a), spec);
  REQUIRE(v.sizes == Shape{8});
  const ComplexArray out = cval(t, v.v);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(out.re[i] == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(out.im[i]) < 1e-12);
  }
}

TEST_CASE("pd_encode annihilates content outside the retained band") {
  EncoderSpec spec{"enc", 1, 12, 2};
  ParamStore store;
  Rng rng(2);
  init_encoder(store, spec, rng);

  // pure mode k=10, outside the centered m=12 band [-6,5]
  ComplexGrid a(Shape{32});
  for (std::size_t j = 0; j < 32; ++j) {
    a.values.re[j] = std::cos(kTau * 10.0 * double(j) / 32.0);
    a.values.im[j] = std::sin(kTau * 10.0 * double(j) / 32.0);
  }
  Tape t(&store);
  SigT v = pd_encode(t, sig_from_grid(t, a), spec);
  const ComplexArray out = cval(t, v.v);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    CHECK(std::abs(out.re[i]) < 1e-12);
    CHECK(std::abs(out.im[i]) < 1e-12);
  }
}

TEST_CASE("pd_encode output does not depend on the sampling grid") {
  EncoderSpec spec{"enc", 1, 12, 3};
  ParamStore store;
  Rng rng(3);
  init_encoder(store, spec, rng);
  const auto poly = testutil::random_trig_poly(5, 40);  // degree < m/2

  Tape t(&store);
  SigT v32 = pd_encode(t, sig_from_grid(t, poly.sample(32)), spec);
  SigT v128 = pd_encode(t, sig_from_grid(t, poly.sample(128)), spec);
  CHECK(max_abs_diff(cval(t, v32.v), cval(t, v128.v)) < 1e-9);
}

TEST_CASE("pd_encode is linear in the input signal") {
  EncoderSpec spec{"enc", 1, 8, 2};
  ParamStore store;
  Rng rng(4);
  init_encoder(store, spec, rng);
  const ComplexGrid a = testutil::random_grid(Shape{24}, 41);
  const ComplexGrid b = testutil::random_grid(Shape{24}, 42);
  const double alpha = 1.7, beta = -0.6;

  ComplexGrid mix(Shape{24});
  for (std::size_t i = 0; i < 24; ++i) {
    mix.values.re[i] = alpha * a.values.re[i] + beta * b.values.re[i];
    mix.values.im[i] = alpha * a.values.im[i] + beta * b.values.im[i];
  }
  Tape t(&store);
  const ComplexArray va = cval(t, pd_encode(t, sig_from_grid(t, a), spec).v);
  const ComplexArray vb = cval(t, pd_encode(t, sig_from_grid(t, b), spec).v);
  const ComplexArray vm = cval(t, pd_encode(t, sig_from_grid(t, mix), spec).v);
  for (std::size_t i = 0; i < vm.numel(); ++i) {
    CHECK(vm.re[i] ==
          Catch::Approx(alpha * va.re[i] + beta * vb.re[i]).margin(1e-12));
    CHECK(vm.im[i] ==
          Catch::Approx(alpha * va.im[i] + beta * vb.im[i]).margin(1e-12));
  }
}

TEST_CASE("pd_encode rejects grids below the retained band") {
  EncoderSpec spec{"enc", 1, 12, 1};
  ParamStore store;
  Rng rng(5);
  init_encoder(store, spec, rng);
  Tape t(&store);
  SigT a = sig_from_grid(t, testutil::random_grid(Shape{8}, 43));
  CHECK_THROWS_AS(pd_encode(t, a, spec), Error);
}

TEST_CASE("identity-configured decoder reproduces the band projection") {
  const std::size_t m = 8, s = 48;
  EncoderSpec enc{"enc", 1, m, 1};
  DecoderSpec dec = make_decoder_spec("dec", 1, m, 1, {8, 8});
  ParamStore store;
  Rng rng(6);
  init_encoder(store, enc, rng);
  init_decoder(store, dec, rng);
  fill(store, "enc.P.re", 1.0);
  fill(store, "enc.P.im", 0.0);
  fill(store, "enc.Q.re", 1.0);
  fill(store, "enc.Q.im", 0.0);
  fill(store, "dec.Qt.re", 1.0);
  fill(store, "dec.Qt.im", 0.0);
  // zero the coordinate net, then bias the output pair to 1 + 0i
  for (int l = 0; l < 3; ++l) {
    fill(store, "dec.pt.w" + std::to_string(l), 0.0);
    fill(store, "dec.pt.b" + std::to_string(l), 0.0);
  }
  store.at("dec.pt.b2")[0] = 1.0;

  const ComplexGrid a = testutil::random_grid(Shape{s}, 44);
  Tape t(&store);
  SigT v = pd_encode(t, sig_from_grid(t, a), enc);
  SigT b = pd_decode(t, v, dec, Shape{s});

  // oracle: band projection via truncate + synthesis
  const ComplexGrid proj = fft_inverse(truncate(fft_forward(a), Shape{m}), Shape{s});
  CHECK(max_abs_diff(cval(t, b.v), proj.values) < 1e-9);
}

TEST_CASE("pd_decode of a zero latent is zero at any size") {
  DecoderSpec dec = make_decoder_spec("dec", 1, 6, 2, {8, 8});
  ParamStore store;
  Rng rng(7);
  init_decoder(store, dec, rng);
  Tape t(&store);
  SigT u{Shape{6}, cconstant(t, ComplexArray(Shape{6}))};
  for (std::size_t s : {6u, 17u, 64u}) {
    SigT b = pd_decode(t, u, dec, Shape{s});
    const ComplexArray out = cval(t, b.v);
    for (std::size_t i = 0; i < out.numel(); ++i) {
      CHECK(out.re[i] == 0.0);
      CHECK(out.im[i] == 0.0);
    }
  }
}

TEST_CASE("pd_decode outputs at two sizes sample the same function") {
  DecoderSpec dec = make_decoder_spec("dec", 1, 12, 3);
  ParamStore store;
  Rng rng(8);
  init_decoder(store, dec, rng);

  Tape t(&store);
  SigT u = sig_from_grid(t, testutil::random_grid(Shape{12}, 45));
  const ComplexGrid b48 = grid_from_sig(t, pd_decode(t, u, dec, Shape{48}));
  const ComplexGrid b96 = grid_from_sig(t, pd_decode(t, u, dec, Shape{96}));
  const ComplexGrid down = resample(b96, 48, ResampleMethod::spectral);
  CHECK(max_abs_diff(b48.values, down.values) < 1e-8);
}

TEST_CASE("pd_decode rejects sizes below the band") {
  DecoderSpec dec = make_decoder_spec("dec", 1, 12, 1, {4});
  ParamStore store;
  Rng rng(9);
  init_decoder(store, dec, rng);
  Tape t(&store);
  SigT u = sig_from_grid(t, testutil::random_grid(Shape{12}, 46));
  CHECK_THROWS_AS(pd_decode(t, u, dec, Shape{8}), Error);
}

TEST_CASE("coordnet constant output from a unit bias") {
  CoordNetSpec spec{"net", 1, 2, {8, 8}};
  ParamStore store;
  Rng rng(10);
  init_coordnet(store, spec, rng);
  for (int l = 0; l < 3; ++l) fill(store, "net.w" + std::to_string(l), 0.0);
  fill(store, "net.b0", 0.0);
  fill(store, "net.b1", 0.0);
  RealArray& b2 = store.at("net.b2");
  b2[0] = 1.0; b2[1] = 0.0; b2[2] = 1.0; b2[3] = 0.0;

  const auto out = coordnet_eval(store, spec, {{0.1}, {0.5}, {0.9}});
  for (std::size_t i = 0; i < out.numel(); ++i) {
    CHECK(out.re[i] == 1.0);
    CHECK(out.im[i] == 0.0);
  }
}

TEST_CASE("coordnet batch evaluation matches single points") {
  CoordNetSpec spec{"net", 2, 3, {8, 8}};
  ParamStore store;
  Rng rng(11);
  init_coordnet(store, spec, rng);
  const std::vector<std::vector<double>> pts = {
      {0.0, 0.3}, {0.25, 0.75}, {0.9, 0.1}, {0.5, 0.5}};
  const auto batch = coordnet_eval(store, spec, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto one = coordnet_eval(store, spec, {pts[i]});
    for (std::size_t k = 0; k < spec.K; ++k) {
      CHECK(batch.re[i * spec.K + k] == one.re[k]);
      CHECK(batch.im[i * spec.K + k] == one.im[k]);
    }
  }
}

TEST_CASE("coordnet gradients pass a finite-difference check") {
  CoordNetSpec spec{"net", 1, 2, {8, 8}};
  ParamStore store;
  Rng rng(12);
  init_coordnet(store, spec, rng);
  const RealArray feats = periodic_features(grid_coords(Shape{16}));
  auto f = [&](Tape& t) {
    Var out = coordnet_forward(t, spec, t.constant(feats));
    return t.sum(t.mul(out, out));
  };
  CHECK(grad_check(store, f) < 1e-4);
}

TEST_CASE("zeroed block with a merge bias emits a constant field") {
  BlockSpec blk = make_block_spec(
      "blk", 1, 4, 1, 2, {ChannelKind::identity, ChannelKind::fourier}, 8,
      {4, 4});
  ParamStore store;
  Rng rng(13);
  init_block(store, blk, rng);
  for (auto& [name, arr] : store.slots)
    for (auto& v : arr.data) v = 0.0;
  store.at("blk.merge.b.re")[0] = 2.0;
  store.at("blk.merge.b.re")[1] = -1.0;
  store.at("blk.merge.b.im")[0] = 0.5;

  for (std::size_t s : {16u, 33u}) {
    Tape t(&store);
    std::vector<SigT> in = {
        sig_from_grid(t, testutil::random_grid(Shape{s}, 47)),
        sig_from_grid(t, testutil::random_grid(Shape{s}, 48))};
    const auto out = pd_block_forward(t, in, blk);
    REQUIRE(out.size() == 2);
    for (std::size_t j = 0; j < s; ++j) {
      CHECK(t.val(out[0].v.re)[j] == 2.0);
      CHECK(t.val(out[0].v.im)[j] == 0.5);
      CHECK(t.val(out[1].v.re)[j] == -1.0);
      CHECK(t.val(out[1].v.im)[j] == 0.0);
    }
  }
}

TEST_CASE("block outputs agree across grid sizes after spectral resample") {
  BlockSpec blk = make_block_spec(
      "blk", 1, 6, 2, 2, {ChannelKind::identity, ChannelKind::fourier}, 12,
      {8, 8});
  ParamStore store;
  Rng rng(14);
  init_block(store, blk, rng);

  const auto p0 = testutil::random_trig_poly(2, 49);  // degree < m/2 = 3
  const auto p1 = testutil::random_trig_poly(2, 50);

  Tape t(&store);
  std::vector<SigT> in32 = {sig_from_grid(t, p0.sample(32)),
                            sig_from_grid(t, p1.sample(32))};
  std::vector<SigT> in64 = {sig_from_grid(t, p0.sample(64)),
                            sig_from_grid(t, p1.sample(64))};
  const auto out32 = pd_block_forward(t, in32, blk);
  const auto out64 = pd_block_forward(t, in64, blk);
  for (std::size_t chn = 0; chn < 2; ++chn) {
    const ComplexGrid a = grid_from_sig(t, out32[chn]);
    const ComplexGrid b = resample(grid_from_sig(t, out64[chn]), 32,
                                   ResampleMethod::spectral);
    CHECK(max_abs_diff(a.values, b.values) < 1e-8);
  }
}

TEST_CASE("single-channel block with identity merge is encode-FNN-decode") {
  BlockSpec blk =
      make_block_spec("blk", 1, 4, 2, 1, {ChannelKind::identity}, 8, {4, 4});
  ParamStore store;
  Rng rng(15);
  init_block(store, blk, rng);
  fill(store, "blk.merge.W.re", 0.0);
  fill(store, "blk.merge.W.im", 0.0);
  store.at("blk.merge.W.re")[0] = 1.0;
  fill(store, "blk.merge.b.re", 0.0);
  fill(store, "blk.merge.b.im", 0.0);

  const ComplexGrid a = testutil::random_grid(Shape{16}, 51);
  Tape t(&store);
  const auto out = pd_block_forward(t, {sig_from_grid(t, a)}, blk);

  const auto& ch = blk.channels[0];
  SigT v = pd_encode(t, sig_from_grid(t, a), ch.enc);
  Var mixed = midfnn_forward(t, ch.mid, flatten_latents(t, {v}));
  SigT u = unflatten_latents(t, mixed, 1, blk.mode_shape())[0];
  SigT b = pd_decode(t, u, ch.dec, Shape{16});

  CHECK(max_abs_diff(cval(t, out[0].v), cval(t, b.v)) == 0.0);
}

TEST_CASE("every block parameter gets a usable gradient") {
  BlockSpec blk = make_block_spec(
      "blk", 1, 4, 2, 2, {ChannelKind::identity, ChannelKind::fourier}, 8,
      {4, 4});
  ParamStore store;
  Rng rng(16);
  init_block(store, blk, rng);
  const ComplexGrid a0 = testutil::random_grid(Shape{8}, 52);
  const ComplexGrid a1 = testutil::random_grid(Shape{8}, 53);

  auto f = [&](Tape& t) {
    std::vector<SigT> in = {sig_from_grid(t, a0), sig_from_grid(t, a1)};
    const auto out = pd_block_forward(t, in, blk);
    Var loss = csqnorm(t, out[0].v);
    return t.add(loss, csqnorm(t, out[1].v));
  };

  {
    Tape t(&store);
    const Gradients g = t.backprop(f(t));
    for (const auto& [name, arr] : g) {
      INFO(name);
      CHECK(arr.all_finite());
    }
  }
  GradCheckOptions opt;
  opt.max_coords_per_slot = 25;
  CHECK(grad_check(store, f, opt) < 1e-4);
}

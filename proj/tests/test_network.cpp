#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "pdiae/grad_check.hpp"
#include "pdiae/model.hpp"
#include "test_util.hpp"

using namespace pdiae;

namespace {

PdIaeConfig tiny_config() {
  PdIaeConfig cfg;
  cfg.d = 1;
  cfg.L = 1;
  cfg.K = 1;
  cfg.m = 4;
  cfg.c = 1;
  cfg.fourier_modes = 8;
  cfg.pt_hidden = {4, 4};
  cfg.seed = 99;
  return cfg;
}

void zero_all(ParamStore& store) {
  for (auto& [name, arr] : store.slots)
    for (auto& v : arr.data) v = 0.0;
}

std::string temp_path(const char* name) {
  return std::string("pdiae_test_") + name;
}

}  // namespace

TEST_CASE("lift with zero weights emits the bias at every point") {
  PdIaeConfig cfg = tiny_config();
  cfg.c = 3;
  PdIaeModel mdl = build_model(cfg);
  zero_all(mdl.store);
  mdl.store.at("lift.b.re")[0] = 1.5;
  mdl.store.at("lift.b.re")[2] = -2.0;
  mdl.store.at("lift.b.im")[1] = 0.25;

  for (std::size_t s : {8u, 21u}) {
    Tape t(&mdl.store);
    SigT f{Shape{s}, cconstant(t, testutil::random_grid(Shape{s}, 60).values)};
    const auto chans = lift(t, mdl, f);
    REQUIRE(chans.size() == 3);
    for (std::size_t j = 0; j < s; ++j) {
      CHECK(t.val(chans[0].v.re)[j] == 1.5);
      CHECK(t.val(chans[1].v.im)[j] == 0.25);
      CHECK(t.val(chans[2].v.re)[j] == -2.0);
    }
  }
}

TEST_CASE("lift commutes with translation when coordinate features are off") {
  PdIaeConfig cfg = tiny_config();
  cfg.c = 2;
  cfg.use_coords = false;
  PdIaeModel mdl = build_model(cfg);
  const std::size_t s = 12;
  const ComplexGrid f = testutil::random_grid(Shape{s}, 61);
  ComplexGrid shifted(Shape{s});
  for (std::size_t j = 0; j < s; ++j) {
    shifted.values.re[j] = f.values.re[(j + 1) % s];
    shifted.values.im[j] = f.values.im[(j + 1) % s];
  }
  Tape t(&mdl.store);
  const auto a = lift(t, mdl, SigT{Shape{s}, cconstant(t, f.values)});
  const auto b = lift(t, mdl, SigT{Shape{s}, cconstant(t, shifted.values)});
  for (std::size_t ch = 0; ch < 2; ++ch)
    for (std::size_t j = 0; j < s; ++j) {
      CHECK(t.val(b[ch].v.re)[j] == t.val(a[ch].v.re)[(j + 1) % s]);
      CHECK(t.val(b[ch].v.im)[j] == t.val(a[ch].v.im)[(j + 1) % s]);
    }
}

TEST_CASE("lift gradients pass a finite-difference check") {
  PdIaeConfig cfg = tiny_config();
  cfg.c = 2;
  PdIaeModel mdl = build_model(cfg);
  const ComplexGrid f = testutil::random_grid(Shape{8}, 62);
  auto fn = [&](Tape& t) {
    const auto chans = lift(t, mdl, SigT{Shape{8}, cconstant(t, f.values)});
    Var loss = csqnorm(t, chans[0].v);
    return t.add(loss, csqnorm(t, chans[1].v));
  };
  CHECK(grad_check(mdl.store, fn) < 1e-4);
}

TEST_CASE("pass-through configuration reproduces the lift bias field") {
  PdIaeConfig cfg = tiny_config();
  PdIaeModel mdl = build_model(cfg);
  zero_all(mdl.store);
  mdl.store.at("lift.b.re")[0] = 0.75;
  mdl.store.at("lift.b.im")[0] = -0.25;
  mdl.store.at("skip.0.1.W.re")[0] = 1.0;  // identity skip
  mdl.store.at("proj.W.re")[0] = 1.0;      // identity-like projection

  const ComplexGrid f = testutil::random_grid(Shape{16}, 63);
  const ComplexGrid out = model_eval(mdl, f, Shape{16});
  for (std::size_t j = 0; j < 16; ++j) {
    CHECK(out.values.re[j] == Catch::Approx(0.75).margin(1e-12));
    CHECK(out.values.im[j] == Catch::Approx(-0.25).margin(1e-12));
  }
}

TEST_CASE("model outputs agree across input grids after resampling") {
  PdIaeConfig cfg;
  cfg.d = 1;
  cfg.L = 2;
  cfg.K = 2;
  cfg.m = 8;
  cfg.c = 3;
  cfg.fourier_modes = 16;
  cfg.pt_hidden = {8, 8};
  cfg.seed = 7;
  PdIaeModel mdl = build_model(cfg);

  const auto poly = testutil::random_trig_poly(3, 64);  // degree < m/2
  const ComplexGrid out32 = model_eval(mdl, poly.sample(32), Shape{32});
  const ComplexGrid out64 = model_eval(mdl, poly.sample(64), Shape{64});
  const ComplexGrid down = resample(out64, 32, ResampleMethod::spectral);
  CHECK(max_abs_diff(out32.values, down.values) < 1e-7);
}

TEST_CASE("model_forward is deterministic and honors s_out exactly") {
  PdIaeConfig cfg = tiny_config();
  cfg.L = 2;
  cfg.c = 2;
  PdIaeModel mdl = build_model(cfg);
  const ComplexGrid f = testutil::random_grid(Shape{16}, 65);

  const ComplexGrid a = model_eval(mdl, f, Shape{16});
  const ComplexGrid b = model_eval(mdl, f, Shape{16});
  CHECK(max_abs_diff(a.values, b.values) == 0.0);

  for (std::size_t s_out : {4u, 9u, 16u, 40u}) {
    const ComplexGrid o = model_eval(mdl, f, Shape{s_out});
    CHECK(o.sizes == Shape{s_out});
  }
  CHECK_THROWS_AS(model_eval(mdl, f, Shape{2}), Error);
}

TEST_CASE("skip connection structure matches the dense wiring") {
  PdIaeConfig cfg = tiny_config();
  cfg.L = 4;
  PdIaeModel mdl = build_model(cfg);
  std::size_t skip_maps = 0;
  for (const auto& [name, arr] : mdl.store.slots)
    if (name.rfind("skip.", 0) == 0 && name.find(".W.re") != std::string::npos)
      ++skip_maps;
  CHECK(skip_maps == cfg.L * (cfg.L + 1) / 2);
  CHECK(mdl.store.slots.count("lift.W.re") == 1);
  CHECK(mdl.store.slots.count("proj.W.re") == 1);
}

TEST_CASE("param_count matches a hand count on the minimal config") {
  PdIaeConfig cfg;
  cfg.d = 1;
  cfg.L = 1;
  cfg.K = 1;
  cfg.m = 2;
  cfg.c = 1;
  cfg.fourier_modes = 2;
  cfg.pt_hidden = {4};
  cfg.seed = 1;
  // lift: complex 1x3 weights + 1 bias          -> 6 + 2 = 8
  // per channel: P,Q complex [1,2] each         -> 8
  //   mid width 4: 3*(16+4)                     -> 60
  //   Qt complex [1,2] -> 4; coordnet 2->4->2: (4*2+4)+(2*4+2) = 22 -> 26
  //both channels: 2*(8+60+26) = 188; merge: complex 1x2 + 1 bias = 6
  // skips: 1 * (2+2) = 4; projection: complex 1x1 + 1 = 4
  const std::size_t expected = 8 + 188 + 6 + 4 + 4;
  const ParamBreakdown pb = param_count(cfg);
  CHECK(pb.total() == expected);
  PdIaeModel mdl = build_model(cfg);
  CHECK(mdl.store.total_params() == expected);
}

TEST_CASE("param_count tracks rank doubling and matches the store walk") {
  PdIaeConfig cfg;
  cfg.d = 1;
  cfg.L = 2;
  cfg.K = 2;
  cfg.m = 8;
  cfg.c = 2;
  cfg.pt_hidden = {8, 8};
  const ParamBreakdown pb1 = param_count(cfg);
  CHECK(pb1.total() == build_model(cfg).store.total_params());

  PdIaeConfig cfg2 = cfg;
  cfg2.K = 4;
  const ParamBreakdown pb2 = param_count(cfg2);
  CHECK(pb2.total() == build_model(cfg2).store.total_params());

  // doubling K adds exactly the P/Q/Qt/coordnet-output increments
  const std::size_t M = cfg.M();
  const std::size_t nch = cfg.channels.size();
  const std::size_t d_enc = cfg.L * nch * 2 * 2 * M * (cfg2.K - cfg.K);
  const std::size_t d_qt = cfg.L * nch * 2 * M * (cfg2.K - cfg.K);
  const std::size_t d_pt =
      cfg.L * nch * (cfg.pt_hidden.back() + 1) * 2 * (cfg2.K - cfg.K);
  CHECK(pb2.total() - pb1.total() == d_enc + d_qt + d_pt);
}

TEST_CASE("2d param_count matches the store walk") {
  PdIaeConfig cfg;
  cfg.d = 2;
  cfg.L = 1;
  cfg.K = 2;
  cfg.m = 4;
  cfg.c = 2;
  cfg.pt_hidden = {8};
  CHECK(param_count(cfg).total() == build_model(cfg).store.total_params());
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
  PdIaeConfig cfg = tiny_config();
  cfg.L = 2;
  cfg.c = 2;
  PdIaeModel mdl = build_model(cfg);
  mdl.stats = NormStats{-0.3, 1.7, 0.1, 42.0};
  Rng rng(66);
  for (auto& [name, arr] : mdl.store.slots)
    for (auto& v : arr.data) v = rng.normal();

  const std::string path = temp_path("ckpt.pd");
  save_checkpoint(mdl, path);
  const PdIaeModel back = load_checkpoint(path);

  CHECK(back.cfg.L == cfg.L);
  CHECK(back.cfg.seed == cfg.seed);
  CHECK(back.stats.in_min == mdl.stats.in_min);
  CHECK(back.stats.out_max == mdl.stats.out_max);
  REQUIRE(back.store.slots.size() == mdl.store.slots.size());
  for (const auto& [name, arr] : mdl.store.slots) {
    const RealArray& b = back.store.at(name);
    REQUIRE(b.shape == arr.shape);
    for (std::size_t i = 0; i < arr.numel(); ++i) CHECK(b[i] == arr[i]);
  }

  const ComplexGrid f = testutil::random_grid(Shape{8}, 67);
  const ComplexGrid o1 = model_eval(mdl, f, Shape{8});
  const ComplexGrid o2 = model_eval(back, f, Shape{8});
  CHECK(max_abs_diff(o1.values, o2.values) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects corruption") {
  PdIaeModel mdl = build_model(tiny_config());
  const std::string path = temp_path("ckpt_bad.pd");
  save_checkpoint(mdl, path);

  SECTION("bad magic") {
    std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
    fs.seekp(0);
    fs.write("XXXXXXXX", 8);
    fs.close();
    CHECK_THROWS_WITH(load_checkpoint(path),
                      Catch::Matchers::ContainsSubstring("bad header"));
  }
  SECTION("truncated payload") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), (std::streamsize)(bytes.size() - 64));
    out.close();
    CHECK_THROWS_WITH(load_checkpoint(path),
                      Catch::Matchers::ContainsSubstring("truncated"));
  }
  std::remove(path.c_str());
}

TEST_CASE("full tiny-model gradient survives a finite-difference audit") {
  PdIaeConfig cfg = tiny_config();  // L=1, c=1, m=4, K=1
  PdIaeModel mdl = build_model(cfg);
  const ComplexGrid f = testutil::random_grid(Shape{8}, 68);
  const ComplexGrid g = testutil::random_grid(Shape{8}, 69);
  auto fn = [&](Tape& t) {
    SigT out = model_forward_t(t, mdl, SigT{Shape{8}, cconstant(t, f.values)},
                               Shape{8});
    CVar diff = csub(t, out.v, cconstant(t, g.values));
    return t.scale(csqnorm(t, diff), 1.0 / 8.0);
  };
  GradCheckOptions opt;
  opt.max_coords_per_slot = 20;
  CHECK(grad_check(mdl.store, fn, opt) < 1e-3);
}

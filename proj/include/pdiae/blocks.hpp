#pragma once

#include <string>
#include <vector>

#include "pdiae/grid.hpp"
#include "pdiae/rng.hpp"
#include "pdiae/tape.hpp"

namespace pdiae {

// A complex grid living on a tape: node pair plus its grid sizes.
struct SigT {
  Shape sizes;
  CVar v;
};

constexpr double kTau = 6.283185307179586476925286766559;

// ---- shared tape helpers ---------------------------------------------------

// Complex matrix product via four real products.
inline CVar cmatmul(Tape& t, CVar a, CVar b) {
  Var re = t.sub(t.matmul(a.re, b.re), t.matmul(a.im, b.im));
  Var im = t.add(t.matmul(a.re, b.im), t.matmul(a.im, b.re));
  return {re, im};
}

// Broadcast a column [c] across n grid points as a [c,n] field.
inline Var broadcast_col(Tape& t, Var col, std::size_t c, std::size_t n) {
  Var col2d = t.slice(col, 0, Shape{c, 1});
  Var ones = t.constant(RealArray(Shape{1, n}, std::vector<double>(n, 1.0)));
  return t.matmul(col2d, ones);
}

inline CVar broadcast_ccol(Tape& t, CVar col, std::size_t c, std::size_t n) {
  return {broadcast_col(t, col.re, c, n), broadcast_col(t, col.im, c, n)};
}

// Periodic coordinate features (cos 2*pi*x, sin 2*pi*x per axis) as a
// [2d, n] matrix. Raw coordinates have a jump at the domain wrap that leaks
// high frequencies into everything downstream; these features are exactly
// band-limited.
inline RealArray periodic_features(const std::vector<std::vector<double>>& coords) {
  if (coords.empty()) throw Error("periodic_features: no points");
  const std::size_t d = coords[0].size();
  const std::size_t n = coords.size();
  RealArray f(Shape{2 * d, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      f[(2 * a) * n + i] = std::cos(kTau * coords[i][a]);
      f[(2 * a + 1) * n + i] = std::sin(kTau * coords[i][a]);
    }
  return f;
}

// ---- rank-factorized encoder ------------------------------------------------

// Learnable frequency/latent bases, one contiguous length-M row per rank so
// rank slices are cheap. M = m^d.
struct EncoderSpec {
  std::string prefix;
  std::size_t d = 1, m = 0, K = 1;

  std::size_t M() const {
    std::size_t r = 1;
    for (std::size_t a = 0; a < d; ++a) r *= m;
    return r;
  }
  Shape mode_shape() const { return Shape(d, m); }
};

inline void init_encoder(ParamStore& store, const EncoderSpec& spec, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(spec.K));
  for (const char* mat : {"P", "Q"}) {
    for (const char* part : {".re", ".im"}) {
      RealArray a(Shape{spec.K, spec.M()});
      for (auto& v : a.data) v = rng.uniform(-bound, bound);
      store.add(spec.prefix + "." + mat + part, std::move(a));
    }
  }
}

// Forward transform, centered truncation to the m-band, per-rank pointwise
// products and synthesis onto the fixed m^d latent grid:
//   v = sum_k q_k . ifft(p_k . truncate(fft(a)))
// The output never depends on the input grid size, which is the whole point.
inline SigT pd_encode(Tape& t, const SigT& a, const EncoderSpec& spec) {
  if (a.sizes.size() != spec.d)
    throw Error("pd_encode: input rank != " + std::to_string(spec.d));
  for (auto s : a.sizes)
    if (s < spec.m)
      throw Error("pd_encode: grid " + shape_str(a.sizes) +
                  " smaller than retained modes m=" + std::to_string(spec.m));
  const Shape mshape = spec.mode_shape();
  const std::size_t n_in = shape_numel(a.sizes);

  CVar hat = cfft(t, a.v, (int)spec.d, -1);
  CVar sp = cgather(t, hat, standard_map(mshape, a.sizes), mshape);
  sp = cscale(t, sp, 1.0 / double(n_in));

  CVar P = cparam(t, spec.prefix + ".P");
  CVar Q = cparam(t, spec.prefix + ".Q");
  const IndexMap to_std = standard_map(mshape, mshape);
  CVar acc{-1, -1};
  for (std::size_t k = 0; k < spec.K; ++k) {
    CVar pk = cslice(t, P, k * spec.M(), mshape);
    CVar filtered = cmul(t, pk, sp);
    CVar lat = cfft(t, cembed(t, filtered, to_std, mshape), (int)spec.d, +1);
    CVar qk = cslice(t, Q, k * spec.M(), mshape);
    CVar term = cmul(t, qk, lat);
    acc = (k == 0) ? term : cadd(t, acc, term);
  }
  return {mshape, acc};
}

// ---- coordinate network ------------------------------------------------------

// Small tanh net evaluated at arbitrary grid coordinates; produces the K
// complex spatial basis functions of a decoder. Activations are applied to
// real values; complex outputs are assembled from 2K real units.
struct CoordNetSpec {
  std::string prefix;
  std::size_t d = 1, K = 1;
  std::vector<std::size_t> hidden{32, 32};

  std::size_t in_dim() const { return 2 * d; }
  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{in_dim()};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(2 * K);
    return w;
  }
};

inline void init_coordnet(ParamStore& store, const CoordNetSpec& spec,
                          Rng& rng) {
  const auto w = spec.widths();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double bound = 1.0 / std::sqrt(double(w[l]));
    RealArray wm(Shape{w[l + 1], w[l]});
    for (auto& v : wm.data) v = rng.uniform(-bound, bound);
    store.add(spec.prefix + ".w" + std::to_string(l), std::move(wm));
    // Small nonzero biases: an exactly odd network has structurally zero
    // bias gradients on symmetric grids, which stalls those coordinates.
    RealArray bv(Shape{w[l + 1]});
    for (auto& v : bv.data) v = rng.uniform(-0.01, 0.01);
    store.add(spec.prefix + ".b" + std::to_string(l), std::move(bv));
  }
}

// Returns the [2K, n] output matrix; row 2k is Re p_k, row 2k+1 is Im p_k.
inline Var coordnet_forward(Tape& t, const CoordNetSpec& spec, Var features) {
  const std::size_t n = t.val(features).shape[1];
  const auto w = spec.widths();
  Var h = features;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    Var wm = t.param(spec.prefix + ".w" + std::to_string(l));
    Var b = t.param(spec.prefix + ".b" + std::to_string(l));
    Var z = t.add(t.matmul(wm, h), broadcast_col(t, b, w[l + 1], n));
    h = (l + 2 < w.size()) ? t.tanh_op(z) : z;  // linear output layer
  }
  return h;
}

// Plain (non-tape) evaluation: one row of K complex values per coordinate.
inline ComplexArray coordnet_eval(ParamStore& store, const CoordNetSpec& spec,
                                  const std::vector<std::vector<double>>& coords) {
  for (const auto& pt : coords)
    for (double x : pt)
      if (!std::isfinite(x)) throw Error("coordnet_eval: non-finite coordinate");
  Tape t(&store);
  Var out = coordnet_forward(t, spec, t.constant(periodic_features(coords)));
  const RealArray& o = t.val(out);
  const std::size_t n = coords.size();
  ComplexArray res(Shape{n, spec.K});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < spec.K; ++k) {
      res.re[i * spec.K + k] = o[(2 * k) * n + i];
      res.im[i * spec.K + k] = o[(2 * k + 1) * n + i];
    }
  return res;
}

// ---- rank-factorized decoder -------------------------------------------------

// Frequency basis is a fixed matrix over the retained band (zero padding
// nulls every mode outside it); the spatial basis must follow the output
// grid wherever it lands, hence the coordinate net.
struct DecoderSpec {
  std::string prefix;
  std::size_t d = 1, m = 0, K = 1;
  CoordNetSpec pt;

  std::size_t M() const {
    std::size_t r = 1;
    for (std::size_t a = 0; a < d; ++a) r *= m;
    return r;
  }
  Shape mode_shape() const { return Shape(d, m); }
};

inline DecoderSpec make_decoder_spec(const std::string& prefix, std::size_t d,
                                     std::size_t m, std::size_t K,
                                     std::vector<std::size_t> hidden = {32, 32}) {
  DecoderSpec spec;
  spec.prefix = prefix;
  spec.d = d;
  spec.m = m;
  spec.K = K;
  spec.pt = CoordNetSpec{prefix + ".pt", d, K, std::move(hidden)};
  return spec;
}

inline void init_decoder(ParamStore& store, const DecoderSpec& spec, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(spec.K));
  for (const char* part : {".re", ".im"}) {
    RealArray a(Shape{spec.K, spec.M()});
    for (auto& v : a.data) v = rng.uniform(-bound, bound);
    store.add(spec.prefix + ".Qt" + part, std::move(a));
  }
  init_coordnet(store, spec.pt, rng);
}

// b = sum_k ptilde_k . ifft(pad(qtilde_k . fft(u), s)), defined for any
// output size s >= m. `features` must be periodic_features of the s-grid
// coordinates; pass -1 to have it built here.
inline SigT pd_decode(Tape& t, const SigT& u, const DecoderSpec& spec,
                      const Shape& out_sizes, Var features = -1) {
  const Shape mshape = spec.mode_shape();
  if (u.sizes != mshape)
    throw Error("pd_decode: latent shape " + shape_str(u.sizes) +
                " != " + shape_str(mshape));
  if (out_sizes.size() != spec.d) throw Error("pd_decode: rank mismatch");
  for (auto s : out_sizes)
    if (s < spec.m)
      throw Error("pd_decode: output size " + shape_str(out_sizes) +
                  " below retained modes m=" + std::to_string(spec.m));
  const std::size_t n = shape_numel(out_sizes);

  CVar uhat = cfft(t, u.v, (int)spec.d, -1);
  CVar sp = cgather(t, uhat, standard_map(mshape, mshape), mshape);
  sp = cscale(t, sp, 1.0 / double(spec.M()));

  if (features < 0)
    features = t.constant(periodic_features(grid_coords(out_sizes)));
  Var pt_rows = coordnet_forward(t, spec.pt, features);

  CVar Qt = cparam(t, spec.prefix + ".Qt");
  const IndexMap to_std = standard_map(mshape, out_sizes);
  CVar acc{-1, -1};
  for (std::size_t k = 0; k < spec.K; ++k) {
    CVar qk = cslice(t, Qt, k * spec.M(), mshape);
    CVar filtered = cmul(t, qk, sp);
    CVar big = cembed(t, filtered, to_std, out_sizes);
    CVar g = cfft(t, big, (int)spec.d, +1);
    CVar pk{t.slice(pt_rows, (2 * k) * n, out_sizes),
            t.slice(pt_rows, (2 * k + 1) * n, out_sizes)};
    CVar term = cmul(t, pk, g);
    acc = (k == 0) ? term : cadd(t, acc, term);
  }
  return {out_sizes, acc};
}

// ---- latent FNN ---------------------------------------------------------------

// Maps the flattened re/im pairs of all working channels jointly; two tanh
// hidden layers of the same width, linear out.
struct MidFnnSpec {
  std::string prefix;
  std::size_t width = 0;  // 2 * c * M
};

inline void init_midfnn(ParamStore& store, const MidFnnSpec& spec, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(spec.width));
  for (int l = 0; l < 3; ++l) {
    RealArray wm(Shape{spec.width, spec.width});
    for (auto& v : wm.data) v = rng.uniform(-bound, bound);
    store.add(spec.prefix + ".w" + std::to_string(l), std::move(wm));
    RealArray bv(Shape{spec.width});
    for (auto& v : bv.data) v = rng.uniform(-0.01, 0.01);
    store.add(spec.prefix + ".b" + std::to_string(l), std::move(bv));
  }
}

inline Var midfnn_forward(Tape& t, const MidFnnSpec& spec, Var x) {
  Var h = x;
  for (int l = 0; l < 3; ++l) {
    Var wm = t.param(spec.prefix + ".w" + std::to_string(l));
    Var b = t.param(spec.prefix + ".b" + std::to_string(l));
    Var z = t.add(t.matmul(wm, h), b);
    h = (l < 2) ? t.tanh_op(z) : z;
  }
  return h;
}

// Flatten c latents as [ch0.re, ch0.im, ch1.re, ...] into one real vector.
inline Var flatten_latents(Tape& t, const std::vector<SigT>& latents) {
  std::vector<Var> parts;
  std::size_t total = 0;
  for (const SigT& l : latents) {
    parts.push_back(l.v.re);
    parts.push_back(l.v.im);
    total += 2 * shape_numel(l.sizes);
  }
  return t.concat(parts, Shape{total});
}

inline std::vector<SigT> unflatten_latents(Tape& t, Var x, std::size_t c,
                                           const Shape& mshape) {
  const std::size_t M = shape_numel(mshape);
  std::vector<SigT> out;
  out.reserve(c);
  for (std::size_t i = 0; i < c; ++i) {
    CVar v{t.slice(x, (2 * i) * M, mshape), t.slice(x, (2 * i + 1) * M, mshape)};
    out.push_back({mshape, v});
  }
  return out;
}

// ---- multi-channel block -------------------------------------------------------

enum class ChannelKind { identity, fourier };

inline const char* channel_name(ChannelKind k) {
  return k == ChannelKind::identity ? "identity" : "fourier";
}

// One transform channel worth of parameters: encoder/mid/decoder shared
// across the c working channels, with the mid FNN mixing them jointly.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::identity;
  EncoderSpec enc;
  MidFnnSpec mid;
  DecoderSpec dec;
};

struct BlockSpec {
  std::string prefix;
  std::size_t d = 1, m = 0, K = 1, c = 1;
  // Retained band of the Fourier transform channel. The frequency domain has
  // no grid-independent finite discretization other than a fixed centered
  // band, so the channel truncates to this many modes and lays them out on a
  // fixed-size grid; inputs band-limited within it lose nothing.
  std::size_t fourier_modes = 0;
  std::vector<ChannelSpec> channels;

  Shape mode_shape() const { return Shape(d, m); }
  std::size_t M() const { return shape_numel(mode_shape()); }
};

inline BlockSpec make_block_spec(const std::string& prefix, std::size_t d,
                                 std::size_t m, std::size_t K, std::size_t c,
                                 const std::vector<ChannelKind>& kinds,
                                 std::size_t fourier_modes = 0,
                                 std::vector<std::size_t> pt_hidden = {32, 32}) {
  BlockSpec blk;
  blk.prefix = prefix;
  blk.d = d;
  blk.m = m;
  blk.K = K;
  blk.c = c;
  blk.fourier_modes = fourier_modes ? fourier_modes : 2 * m;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    ChannelSpec ch;
    ch.kind = kinds[i];
    const std::string cp = prefix + ".ch" + std::to_string(i);
    ch.enc = EncoderSpec{cp + ".enc", d, m, K};
    ch.mid = MidFnnSpec{cp + ".mid", 2 * c * blk.M()};
    ch.dec = make_decoder_spec(cp + ".dec", d, m, K, pt_hidden);
    blk.channels.push_back(std::move(ch));
  }
  return blk;
}

inline void init_block(ParamStore& store, const BlockSpec& blk, Rng& rng) {
  for (const auto& ch : blk.channels) {
    init_encoder(store, ch.enc, rng);
    init_midfnn(store, ch.mid, rng);
    init_decoder(store, ch.dec, rng);
  }
  // Merge map starts near "keep the identity channel" so a freshly built
  // block is close to a stable pass-through.
  const std::size_t in_ch = blk.channels.size() * blk.c;
  RealArray wre(Shape{blk.c, in_ch});
  RealArray wim(Shape{blk.c, in_ch});
  for (std::size_t i = 0; i < wre.numel(); ++i) {
    wre[i] = rng.uniform(-0.01, 0.01);
    wim[i] = rng.uniform(-0.01, 0.01);
  }
  for (std::size_t ch = 0; ch < blk.c; ++ch) wre[ch * in_ch + ch] += 1.0;
  store.add(blk.prefix + ".merge.W.re", std::move(wre));
  store.add(blk.prefix + ".merge.W.im", std::move(wim));
  store.add(blk.prefix + ".merge.b.re", RealArray(Shape{blk.c}));
  store.add(blk.prefix + ".merge.b.im", RealArray(Shape{blk.c}));
}

// Fixed-band Fourier transform of a signal: centered coefficients of the
// lowest `modes` frequencies, laid out on a grid of that size.
inline SigT fourier_channel_in(Tape& t, const SigT& a, const Shape& modes) {
  CVar hat = cfft(t, a.v, (int)a.sizes.size(), -1);
  CVar sp = cgather(t, hat, standard_map(modes, a.sizes), modes);
  sp = cscale(t, sp, 1.0 / double(shape_numel(a.sizes)));
  return {modes, sp};
}

// Inverse of the above back onto the original grid (synthesis of the band).
inline SigT fourier_channel_out(Tape& t, const SigT& spec_sig,
                                const Shape& out_sizes) {
  CVar big = cembed(t, spec_sig.v, standard_map(spec_sig.sizes, out_sizes),
                    out_sizes);
  CVar g = cfft(t, big, (int)out_sizes.size(), +1);
  return {out_sizes, g};
}

inline Shape fourier_band_for(const BlockSpec& blk, const Shape& in_sizes) {
  Shape band(blk.d);
  for (std::size_t a = 0; a < blk.d; ++a)
    band[a] = std::min<std::size_t>(blk.fourier_modes, in_sizes[a]);
  return band;
}

// encoder -> mid FNN -> decoder per transform channel, channels merged by a
// pointwise complex linear map. Output grid size equals input grid size.
inline std::vector<SigT> pd_block_forward(Tape& t, const std::vector<SigT>& a,
                                          const BlockSpec& blk) {
  if (a.size() != blk.c)
    throw Error("pd_block_forward: expected " + std::to_string(blk.c) +
                " working channels, got " + std::to_string(a.size()));
  const Shape in_sizes = a[0].sizes;
  const std::size_t n = shape_numel(in_sizes);
  std::vector<SigT> outputs;  // channels.size() * c signals on in_sizes
  outputs.reserve(blk.channels.size() * blk.c);

  for (const auto& ch : blk.channels) {
    const bool fourier = ch.kind == ChannelKind::fourier;
    const Shape band = fourier_band_for(blk, in_sizes);

    std::vector<SigT> latents;
    latents.reserve(blk.c);
    Var features = -1;  // decoder features shared across working channels
    for (std::size_t i = 0; i < blk.c; ++i) {
      SigT sig = fourier ? fourier_channel_in(t, a[i], band) : a[i];
      latents.push_back(pd_encode(t, sig, ch.enc));
    }
    Var mixed = midfnn_forward(t, ch.mid, flatten_latents(t, latents));
    std::vector<SigT> u = unflatten_latents(t, mixed, blk.c, blk.mode_shape());
    const Shape dec_sizes = fourier ? band : in_sizes;
    for (std::size_t i = 0; i < blk.c; ++i) {
      if (features < 0)
        features = t.constant(periodic_features(grid_coords(dec_sizes)));
      SigT b = pd_decode(t, u[i], ch.dec, dec_sizes, features);
      outputs.push_back(fourier ? fourier_channel_out(t, b, in_sizes) : b);
    }
  }

  // Pointwise merge: stack as a [channels*c, n] matrix and mix with a
  // complex weight matrix plus per-channel bias.
  std::vector<CVar> stack_parts;
  for (const SigT& s : outputs) stack_parts.push_back(s.v);
  const std::size_t in_ch = outputs.size();
  CVar S = cconcat(t, stack_parts, Shape{in_ch, n});
  CVar W = cparam(t, blk.prefix + ".merge.W");
  CVar bias = cparam(t, blk.prefix + ".merge.b");
  CVar mixed = cadd(t, cmatmul(t, W, S), broadcast_ccol(t, bias, blk.c, n));

  std::vector<SigT> result;
  result.reserve(blk.c);
  for (std::size_t chn = 0; chn < blk.c; ++chn) {
    CVar row{t.slice(mixed.re, chn * n, in_sizes),
             t.slice(mixed.im, chn * n, in_sizes)};
    result.push_back({in_sizes, row});
  }
  return result;
}

}  // namespace pdiae

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pdiae/blocks.hpp"

namespace pdiae {

// Architecture hyperparameters. Parameter shapes depend only on these, never
// on any grid size.
struct PdIaeConfig {
  std::size_t d = 1;
  std::size_t L = 4;   // blocks
  std::size_t K = 3;   // factorization rank
  std::size_t m = 12;  // retained modes per axis, even
  std::size_t c = 8;   // working channel width
  std::size_t fourier_modes = 0;  // 0 -> defaults to 2m
  std::vector<ChannelKind> channels{ChannelKind::identity, ChannelKind::fourier};
  std::vector<std::size_t> pt_hidden{32, 32};
  bool use_coords = true;
  std::uint64_t seed = 1729;

  std::size_t effective_fourier_modes() const {
    return fourier_modes ? fourier_modes : 2 * m;
  }
  std::size_t M() const {
    std::size_t r = 1;
    for (std::size_t a = 0; a < d; ++a) r *= m;
    return r;
  }
  std::size_t lift_inputs() const { return 1 + (use_coords ? 2 * d : 0); }

  void validate() const {
    if (d < 1 || d > 2) throw Error("config: d must be 1 or 2");
    if (L < 1) throw Error("config: L must be >= 1");
    if (K < 1) throw Error("config: K must be >= 1");
    if (m < 2 || m % 2 != 0)
      throw Error("config: m must be even and >= 2, got " + std::to_string(m) +
                  " (odd m makes the centered band ambiguous)");
    if (c < 1) throw Error("config: c must be >= 1");
    if (channels.empty()) throw Error("config: at least one channel");
    if (effective_fourier_modes() < m)
      throw Error("config: fourier_modes must be >= m");
  }
};

// Min-max normalization statistics, computed on the training split and
// carried with the model so evaluation can undo the scaling.
struct NormStats {
  double in_min = 0.0, in_max = 1.0;
  double out_min = 0.0, out_max = 1.0;
};

struct PdIaeModel {
  PdIaeConfig cfg;
  ParamStore store;
  std::vector<BlockSpec> blocks;
  NormStats stats;
};

namespace model_detail {

inline std::string skip_prefix(std::size_t j, std::size_t i) {
  return "skip." + std::to_string(j) + "." + std::to_string(i);
}

inline void init_pointwise_map(ParamStore& store, const std::string& prefix,
                               std::size_t rows, std::size_t cols, Rng& rng,
                               double weight_bound) {
  for (const char* part : {".re", ".im"}) {
    RealArray w(Shape{rows, cols});
    for (auto& v : w.data) v = rng.uniform(-weight_bound, weight_bound);
    store.add(prefix + ".W" + part, std::move(w));
    RealArray b(Shape{rows});
    for (auto& v : b.data) v = rng.uniform(-0.01, 0.01);
    store.add(prefix + ".b" + part, std::move(b));
  }
}

}  // namespace model_detail

inline PdIaeModel build_model(const PdIaeConfig& cfg) {
  cfg.validate();
  PdIaeModel mdl;
  mdl.cfg = cfg;
  Rng rng(cfg.seed);

  model_detail::init_pointwise_map(mdl.store, "lift", cfg.c, cfg.lift_inputs(),
                                   rng, 1.0 / std::sqrt(double(cfg.lift_inputs())));
  for (std::size_t i = 0; i < cfg.L; ++i) {
    BlockSpec blk = make_block_spec("blk" + std::to_string(i), cfg.d, cfg.m,
                                    cfg.K, cfg.c, cfg.channels,
                                    cfg.effective_fourier_modes(), cfg.pt_hidden);
    init_block(mdl.store, blk, rng);
    mdl.blocks.push_back(std::move(blk));
  }
  // Skip affines start near zero so a fresh model is dominated by the block
  // path; one map per (j, i) pair with j < i.
  for (std::size_t i = 1; i <= cfg.L; ++i)
    for (std::size_t j = 0; j < i; ++j)
      model_detail::init_pointwise_map(mdl.store, model_detail::skip_prefix(j, i),
                                       cfg.c, cfg.c, rng, 0.02);
  model_detail::init_pointwise_map(mdl.store, "proj", 1, cfg.c, rng,
                                   1.0 / std::sqrt(double(cfg.c)));
  return mdl;
}

// ---- forward ----------------------------------------------------------------

// Pointwise complex affine map applied to a channel stack [rows x n].
inline CVar pointwise_map(Tape& t, const std::string& prefix, CVar stack,
                          std::size_t rows, std::size_t n) {
  CVar W = cparam(t, prefix + ".W");
  CVar b = cparam(t, prefix + ".b");
  return cadd(t, cmatmul(t, W, stack), broadcast_ccol(t, b, rows, n));
}

inline CVar stack_channels(Tape& t, const std::vector<SigT>& chans) {
  std::vector<CVar> parts;
  parts.reserve(chans.size());
  for (const SigT& s : chans) parts.push_back(s.v);
  const std::size_t n = shape_numel(chans[0].sizes);
  return cconcat(t, parts, Shape{chans.size(), n});
}

inline std::vector<SigT> split_channels(Tape& t, CVar stack, std::size_t rows,
                                        const Shape& sizes) {
  const std::size_t n = shape_numel(sizes);
  std::vector<SigT> out;
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r)
    out.push_back({sizes, {t.slice(stack.re, r * n, sizes),
                           t.slice(stack.im, r * n, sizes)}});
  return out;
}

// Pointwise lift: value channel plus periodic coordinate features mapped to
// c working channels. Grid size is preserved.
inline std::vector<SigT> lift(Tape& t, const PdIaeModel& mdl, const SigT& f) {
  if (f.sizes.size() != mdl.cfg.d)
    throw Error("lift: input rank " + std::to_string(f.sizes.size()) +
                " != config d=" + std::to_string(mdl.cfg.d));
  const std::size_t n = shape_numel(f.sizes);
  std::vector<CVar> rows{f.v};
  if (mdl.cfg.use_coords) {
    RealArray feats = periodic_features(grid_coords(f.sizes));
    rows.push_back({t.constant(feats),
                    t.constant(RealArray(Shape{2 * mdl.cfg.d, n}))});
  }
  CVar stack = cconcat(t, rows, Shape{mdl.cfg.lift_inputs(), n});
  CVar lifted = pointwise_map(t, "lift", stack, mdl.cfg.c, n);
  return split_channels(t, lifted, mdl.cfg.c, f.sizes);
}

// Spectral resample as tape ops (band truncation keeps it differentiable).
inline SigT resample_t(Tape& t, const SigT& g, const Shape& sizes) {
  if (sizes == g.sizes) return g;
  const std::size_t d = g.sizes.size();
  Shape mid(d);
  for (std::size_t a = 0; a < d; ++a) mid[a] = std::min(sizes[a], g.sizes[a]);
  CVar hat = cfft(t, g.v, (int)d, -1);
  CVar sp = cgather(t, hat, standard_map(mid, g.sizes), mid);
  sp = cscale(t, sp, 1.0 / double(shape_numel(g.sizes)));
  CVar big = cembed(t, sp, standard_map(mid, sizes), sizes);
  return {sizes, cfft(t, big, (int)d, +1)};
}

// Full network: lift, L blocks with dense skip connections, projection, and
// a final spectral resample when the requested output grid differs.
inline SigT model_forward_t(Tape& t, const PdIaeModel& mdl, const SigT& f,
                            const Shape& s_out) {
  const PdIaeConfig& cfg = mdl.cfg;
  for (auto s : f.sizes)
    if (s < cfg.m)
      throw Error("model_forward: input grid " + shape_str(f.sizes) +
                  " below m=" + std::to_string(cfg.m));
  for (auto s : s_out)
    if (s < cfg.m)
      throw Error("model_forward: output grid " + shape_str(s_out) +
                  " below m=" + std::to_string(cfg.m));
  const std::size_t n = shape_numel(f.sizes);

  std::vector<std::vector<SigT>> acts;  // acts[i] = a_i, c channels each
  acts.push_back(lift(t, mdl, f));
  for (std::size_t i = 1; i <= cfg.L; ++i) {
    std::vector<SigT> base = pd_block_forward(t, acts[i - 1], mdl.blocks[i - 1]);
    CVar acc = stack_channels(t, base);
    for (std::size_t j = 0; j < i; ++j) {
      CVar prev = stack_channels(t, acts[j]);
      CVar skipped = pointwise_map(t, model_detail::skip_prefix(j, i), prev,
                                   cfg.c, n);
      acc = cadd(t, acc, skipped);
    }
    acts.push_back(split_channels(t, acc, cfg.c, f.sizes));
  }
  CVar projected =
      pointwise_map(t, "proj", stack_channels(t, acts[cfg.L]), 1, n);
  SigT out{f.sizes, {t.slice(projected.re, 0, f.sizes),
                     t.slice(projected.im, 0, f.sizes)}};
  return resample_t(t, out, s_out);
}

// Plain evaluation on a throwaway tape.
inline ComplexGrid model_eval(const PdIaeModel& mdl, const ComplexGrid& f,
                              const Shape& s_out) {
  Tape t(&mdl.store);
  SigT sig{f.sizes, cconstant(t, f.values)};
  SigT out = model_forward_t(t, mdl, sig, s_out);
  return ComplexGrid(out.sizes, cval(t, out.v));
}

// ---- parameter accounting -----------------------------------------------------

struct ParamBreakdown {
  std::size_t lift = 0;
  std::size_t encoders = 0;
  std::size_t midfnns = 0;
  std::size_t decoders = 0;
  std::size_t merges = 0;
  std::size_t skips = 0;
  std::size_t projection = 0;

  std::size_t blocks() const { return encoders + midfnns + decoders + merges; }
  std::size_t total() const { return lift + blocks() + skips + projection; }
};

inline std::size_t fnn_param_count(const std::vector<std::size_t>& widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += widths[l + 1] * widths[l] + widths[l + 1];
  return n;
}

// Closed-form count; matches an exhaustive walk of the slots exactly, and is
// independent of every grid size by construction.
inline ParamBreakdown param_count(const PdIaeConfig& cfg) {
  cfg.validate();
  const std::size_t M = cfg.M();
  const std::size_t nch = cfg.channels.size();
  ParamBreakdown pb;
  pb.lift = 2 * cfg.c * cfg.lift_inputs() + 2 * cfg.c;
  pb.encoders = cfg.L * nch * (2 * 2 * cfg.K * M);
  const std::size_t width = 2 * cfg.c * M;
  pb.midfnns = cfg.L * nch * 3 * (width * width + width);
  std::vector<std::size_t> pt_widths{2 * cfg.d};
  pt_widths.insert(pt_widths.end(), cfg.pt_hidden.begin(), cfg.pt_hidden.end());
  pt_widths.push_back(2 * cfg.K);
  pb.decoders = cfg.L * nch * (2 * cfg.K * M + fnn_param_count(pt_widths));
  pb.merges = cfg.L * (2 * cfg.c * (nch * cfg.c) + 2 * cfg.c);
  pb.skips = (cfg.L * (cfg.L + 1) / 2) * (2 * cfg.c * cfg.c + 2 * cfg.c);
  pb.projection = 2 * cfg.c + 2;
  return pb;
}

// ---- checkpoint io --------------------------------------------------------------

// Layout: 8-byte magic, u64 little-endian manifest length, UTF-8 manifest
// (config key=value lines, then one line per parameter), then raw float64
// payloads in manifest order. Complex arrays appear as their .re slot
// followed by their .im slot.
constexpr char kCheckpointMagic[8] = {'P', 'D', 'I', 'A', 'E', '1', '\0', '\0'};

namespace model_detail {

inline std::string channels_str(const std::vector<ChannelKind>& chans) {
  std::string s;
  for (std::size_t i = 0; i < chans.size(); ++i) {
    if (i) s += ",";
    s += channel_name(chans[i]);
  }
  return s;
}

inline std::vector<ChannelKind> parse_channels(const std::string& s) {
  std::vector<ChannelKind> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "identity") out.push_back(ChannelKind::identity);
    else if (tok == "fourier") out.push_back(ChannelKind::fourier);
    else throw Error("checkpoint: unknown channel kind '" + tok + "'");
  }
  return out;
}

inline std::string size_list_str(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace model_detail

inline void save_checkpoint(const PdIaeModel& mdl, const std::string& path) {
  std::ostringstream manifest;
  const PdIaeConfig& c = mdl.cfg;
  manifest << "config.d=" << c.d << "\n"
           << "config.L=" << c.L << "\n"
           << "config.K=" << c.K << "\n"
           << "config.m=" << c.m << "\n"
           << "config.c=" << c.c << "\n"
           << "config.fourier_modes=" << c.fourier_modes << "\n"
           << "config.channels=" << model_detail::channels_str(c.channels) << "\n"
           << "config.pt_hidden=" << model_detail::size_list_str(c.pt_hidden) << "\n"
           << "config.use_coords=" << (c.use_coords ? 1 : 0) << "\n"
           << "config.seed=" << c.seed << "\n"
           << "stats.in_min=" << model_detail::fmt_double(mdl.stats.in_min) << "\n"
           << "stats.in_max=" << model_detail::fmt_double(mdl.stats.in_max) << "\n"
           << "stats.out_min=" << model_detail::fmt_double(mdl.stats.out_min) << "\n"
           << "stats.out_max=" << model_detail::fmt_double(mdl.stats.out_max) << "\n";
  for (const auto& [name, arr] : mdl.store.slots) {
    manifest << "param " << name << " f64";
    for (std::size_t i = 0; i < arr.shape.size(); ++i)
      manifest << (i ? "," : " ") << arr.shape[i];
    manifest << "\n";
  }
  const std::string text = manifest.str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("save_checkpoint: cannot open " + path);
  out.write(kCheckpointMagic, 8);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(text.data(), (std::streamsize)text.size());
  for (const auto& [name, arr] : mdl.store.slots)
    out.write(reinterpret_cast<const char*>(arr.data.data()),
              (std::streamsize)(arr.numel() * sizeof(double)));
  if (!out) throw Error("save_checkpoint: write failed for " + path);
}

inline PdIaeModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw Error("load_checkpoint: bad header in " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  if (in.gcount() != 8) throw Error("load_checkpoint: truncated header");
  std::string text(len, '\0');
  in.read(text.data(), (std::streamsize)len);
  if ((std::uint64_t)in.gcount() != len)
    throw Error("load_checkpoint: truncated manifest");

  PdIaeConfig cfg;
  NormStats stats;
  std::vector<std::pair<std::string, Shape>> params;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (line.rfind("param ", 0) == 0) {
      std::istringstream ls(line);
      std::string tag, name, dtype, shape_csv;
      ls >> tag >> name >> dtype >> shape_csv;
      if (dtype != "f64")
        throw Error("load_checkpoint: unsupported dtype " + dtype);
      Shape shape;
      for (auto v : model_detail::parse_size_list(shape_csv)) shape.push_back(v);
      params.emplace_back(name, shape);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("load_checkpoint: malformed manifest line '" + line + "'");
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "config.d") cfg.d = std::stoull(val);
    else if (key == "config.L") cfg.L = std::stoull(val);
    else if (key == "config.K") cfg.K = std::stoull(val);
    else if (key == "config.m") cfg.m = std::stoull(val);
    else if (key == "config.c") cfg.c = std::stoull(val);
    else if (key == "config.fourier_modes") cfg.fourier_modes = std::stoull(val);
    else if (key == "config.channels") cfg.channels = model_detail::parse_channels(val);
    else if (key == "config.pt_hidden") cfg.pt_hidden = model_detail::parse_size_list(val);
    else if (key == "config.use_coords") cfg.use_coords = val == "1";
    else if (key == "config.seed") cfg.seed = std::stoull(val);
    else if (key == "stats.in_min") stats.in_min = std::stod(val);
    else if (key == "stats.in_max") stats.in_max = std::stod(val);
    else if (key == "stats.out_min") stats.out_min = std::stod(val);
    else if (key == "stats.out_max") stats.out_max = std::stod(val);
    else throw Error("load_checkpoint: unknown manifest key '" + key + "'");
  }

  PdIaeModel mdl = build_model(cfg);
  mdl.stats = stats;
  if (params.size() != mdl.store.slots.size())
    throw Error("load_checkpoint: manifest lists " +
                std::to_string(params.size()) + " parameters, config implies " +
                std::to_string(mdl.store.slots.size()));
  for (const auto& [name, shape] : params) {
    RealArray& slot = mdl.store.at(name);  // throws on unknown name
    if (slot.shape != shape)
      throw Error("load_checkpoint: shape mismatch for " + name + ": file " +
                  shape_str(shape) + " vs config " + shape_str(slot.shape));
    in.read(reinterpret_cast<char*>(slot.data.data()),
            (std::streamsize)(slot.numel() * sizeof(double)));
    if ((std::size_t)in.gcount() != slot.numel() * sizeof(double))
      throw Error("load_checkpoint: truncated payload at " + name);
    if (!slot.all_finite())
      throw Error("load_checkpoint: non-finite values in " + name);
  }
  char extra;
  if (in.read(&extra, 1))
    throw Error("load_checkpoint: trailing bytes after payload");
  return mdl;
}

}  // namespace pdiae

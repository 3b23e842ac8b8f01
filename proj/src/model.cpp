#include "vw4c/model.hpp"

#include <cmath>
#include <cstring>

#include "vw4c/errors.hpp"

namespace vw4c::model {

namespace {

constexpr double kLogSigmaMin = -30.0;
constexpr double kLogSigmaMax = 10.0;

Grid4D concat_channels(const Grid4D& a, const Grid4D& b) {
  const Shape4& sa = a.shape();
  const Shape4& sb = b.shape();
  if (sa.b != sb.b || sa.h != sb.h || sa.w != sb.w) {
    throw ConfigError("concat_channels: incompatible shapes " + sa.str() + " vs " + sb.str());
  }
  Grid4D out(sa.b, sa.c + sb.c, sa.h, sa.w);
  const int64_t plane = int64_t(sa.h) * sa.w;
  for (int n = 0; n < sa.b; ++n) {
    std::memcpy(out.data() + size_t(n) * (sa.c + sb.c) * plane,
                a.data() + size_t(n) * sa.c * plane, size_t(sa.c) * plane * sizeof(double));
    std::memcpy(out.data() + (size_t(n) * (sa.c + sb.c) + sa.c) * plane,
                b.data() + size_t(n) * sb.c * plane, size_t(sb.c) * plane * sizeof(double));
  }
  return out;
}

void split_channels(const Grid4D& x, int c_first, Grid4D& first, Grid4D& second) {
  const Shape4& s = x.shape();
  const int c_second = s.c - c_first;
  first = Grid4D(s.b, c_first, s.h, s.w);
  second = Grid4D(s.b, c_second, s.h, s.w);
  const int64_t plane = int64_t(s.h) * s.w;
  for (int n = 0; n < s.b; ++n) {
    std::memcpy(first.data() + size_t(n) * c_first * plane,
                x.data() + size_t(n) * s.c * plane, size_t(c_first) * plane * sizeof(double));
    std::memcpy(second.data() + size_t(n) * c_second * plane,
                x.data() + (size_t(n) * s.c + c_first) * plane,
                size_t(c_second) * plane * sizeof(double));
  }
}

void fill_normal(ParamTensor& p, double stddev, RngStream& rng) {
  for (double& v : p.value) v = stddev * rng.normal();
}

// Decoder stage j upsamples from this many input channels.
int decoder_in_channels(const ModelConfig& cfg, int level) {
  return level == cfg.levels - 1 ? cfg.deepest_width() : cfg.width_at(level + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// config / params
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (levels < 1) throw ConfigError("ModelConfig: levels must be >= 1");
  if (in_channels < 1 || out_channels < 1) {
    throw ConfigError("ModelConfig: channel counts must be positive");
  }
  if (latent_dim < 1) throw ConfigError("ModelConfig: latent_dim must be positive");
  if (base_width < 1) throw ConfigError("ModelConfig: base_width must be positive");
  if (input_size % (1 << levels) != 0 || input_size < (1 << levels)) {
    throw ConfigError("ModelConfig: input_size " + std::to_string(input_size) +
                      " not divisible by 2^levels = " + std::to_string(1 << levels));
  }
  if (groups < 1 || base_width % groups != 0) {
    throw ConfigError("ModelConfig: base_width " + std::to_string(base_width) +
                      " not divisible by groups " + std::to_string(groups));
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("ModelConfig: dropout_rate must be in [0, 1)");
  }
}

void VUNetParams::for_each(const std::function<void(const std::string&, ParamTensor&)>& fn) {
  for (size_t l = 0; l < encoder.size(); ++l) {
    const std::string p = "enc" + std::to_string(l) + ".";
    for (int r = 0; r < 4; ++r) {
      fn(p + "conv" + std::to_string(r) + ".w", encoder[l].conv[size_t(r)].w);
      fn(p + "conv" + std::to_string(r) + ".b", encoder[l].conv[size_t(r)].b);
      fn(p + "norm" + std::to_string(r) + ".gamma", encoder[l].norm[size_t(r)].gamma);
      fn(p + "norm" + std::to_string(r) + ".beta", encoder[l].norm[size_t(r)].beta);
    }
    fn(p + "conv4.w", encoder[l].conv[4].w);
    fn(p + "conv4.b", encoder[l].conv[4].b);
  }
  fn("mu.w", mu_head.w);
  fn("mu.b", mu_head.b);
  fn("logsigma.w", logsigma_head.w);
  fn("logsigma.b", logsigma_head.b);
  fn("latent_proj.w", latent_proj.w);
  fn("latent_proj.b", latent_proj.b);
  for (size_t j = 0; j < decoder.size(); ++j) {
    const std::string p = "dec" + std::to_string(j) + ".";
    fn(p + "tconv.w", decoder[j].tconv.w);
    fn(p + "tconv.b", decoder[j].tconv.b);
    fn(p + "conv.w", decoder[j].conv.w);
    fn(p + "conv.b", decoder[j].conv.b);
    fn(p + "norm.gamma", decoder[j].norm.gamma);
    fn(p + "norm.beta", decoder[j].norm.beta);
  }
  fn("head.w", head.w);
  fn("head.b", head.b);
}

void VUNetParams::for_each(
    const std::function<void(const std::string&, const ParamTensor&)>& fn) const {
  const_cast<VUNetParams*>(this)->for_each(
      [&fn](const std::string& name, ParamTensor& p) { fn(name, p); });
}

int64_t VUNetParams::total_count() const {
  int64_t total = 0;
  for_each([&total](const std::string&, const ParamTensor& p) { total += p.count(); });
  return total;
}

void VUNetParams::zero_grads() {
  for_each([](const std::string&, ParamTensor& p) { p.zero_grad(); });
}

VUNetParams init_params(const ModelConfig& cfg, RngStream& rng) {
  cfg.validate();
  VUNetParams params;
  params.encoder.resize(size_t(cfg.levels));
  params.decoder.resize(size_t(cfg.levels));

  for (int l = 0; l < cfg.levels; ++l) {
    const int cin = l == 0 ? cfg.in_channels : cfg.width_at(l - 1);
    const int w = cfg.width_at(l);
    DenseBlockParams& blk = params.encoder[size_t(l)];
    for (int r = 0; r < 5; ++r) {
      const int conv_in = r == 0 ? cin : w;
      blk.conv[size_t(r)].w = ParamTensor({w, conv_in, 3, 3});
      blk.conv[size_t(r)].b = ParamTensor({w});
      fill_normal(blk.conv[size_t(r)].w, std::sqrt(2.0 / (conv_in * 9.0)), rng);
    }
    for (int r = 0; r < 4; ++r) {
      blk.norm[size_t(r)].gamma = ParamTensor({w});
      blk.norm[size_t(r)].beta = ParamTensor({w});
      std::fill(blk.norm[size_t(r)].gamma.value.begin(), blk.norm[size_t(r)].gamma.value.end(),
                1.0);
    }
  }

  const int flat = cfg.flat_features();
  params.mu_head.w = ParamTensor({cfg.latent_dim, flat});
  params.mu_head.b = ParamTensor({cfg.latent_dim});
  fill_normal(params.mu_head.w, std::sqrt(2.0 / flat), rng);
  params.logsigma_head.w = ParamTensor({cfg.latent_dim, flat});
  params.logsigma_head.b = ParamTensor({cfg.latent_dim});
  fill_normal(params.logsigma_head.w, std::sqrt(2.0 / flat), rng);
  params.latent_proj.w = ParamTensor({flat, cfg.latent_dim});
  params.latent_proj.b = ParamTensor({flat});
  // starts 20x below He scale: the KL term holds sigma near 2^-1/2, and a
  // full-scale projection would flood the decoder with sample noise
  fill_normal(params.latent_proj.w, 0.05 * std::sqrt(2.0 / cfg.latent_dim), rng);

  for (int j = 0; j < cfg.levels; ++j) {
    const int cin = decoder_in_channels(cfg, j);
    const int w = cfg.width_at(j);
    DecoderStageParams& st = params.decoder[size_t(j)];
    st.tconv.w = ParamTensor({cin, w, 2, 2});
    st.tconv.b = ParamTensor({w});
    fill_normal(st.tconv.w, std::sqrt(2.0 / (cin * 4.0)), rng);
    st.conv.w = ParamTensor({w, 2 * w, 3, 3});
    st.conv.b = ParamTensor({w});
    fill_normal(st.conv.w, std::sqrt(2.0 / (2.0 * w * 9.0)), rng);
    st.norm.gamma = ParamTensor({w});
    st.norm.beta = ParamTensor({w});
    std::fill(st.norm.gamma.value.begin(), st.norm.gamma.value.end(), 1.0);
  }

  params.head.w = ParamTensor({cfg.out_channels, cfg.base_width, 1, 1});
  params.head.b = ParamTensor({cfg.out_channels});
  fill_normal(params.head.w, std::sqrt(2.0 / cfg.base_width), rng);
  return params;
}

int64_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  int64_t total = 0;
  auto conv_count = [](int64_t co, int64_t ci, int64_t kh, int64_t kw) {
    return co * ci * kh * kw + co;
  };
  for (int l = 0; l < cfg.levels; ++l) {
    const int cin = l == 0 ? cfg.in_channels : cfg.width_at(l - 1);
    const int w = cfg.width_at(l);
    total += conv_count(w, cin, 3, 3);          // conv0
    total += 4 * conv_count(w, w, 3, 3);        // conv1..4
    total += 4 * 2 * int64_t(w);                // gamma/beta per repeat
  }
  const int64_t flat = cfg.flat_features();
  total += 2 * (int64_t(cfg.latent_dim) * flat + cfg.latent_dim);  // mu + logsigma heads
  total += flat * cfg.latent_dim + flat;                           // latent projection
  for (int j = 0; j < cfg.levels; ++j) {
    const int cin = decoder_in_channels(cfg, j);
    const int w = cfg.width_at(j);
    total += conv_count(w, cin, 2, 2);      // tconv ([cin, w, 2, 2] + bias)
    total += conv_count(w, 2 * w, 3, 3);    // post-concat conv
    total += 2 * int64_t(w);                // norm
  }
  total += conv_count(cfg.out_channels, cfg.base_width, 1, 1);  // head
  return total;
}

std::vector<std::string> dense_block_layer_sequence() {
  std::vector<std::string> seq;
  for (int r = 0; r < 4; ++r) {
    seq.insert(seq.end(), {"conv", "elu", "group_norm", "dropout2d"});
  }
  seq.insert(seq.end(), {"conv", "elu"});
  return seq;
}

// ---------------------------------------------------------------------------
// dense block
// ---------------------------------------------------------------------------

Grid4D dense_block(const Grid4D& x, const DenseBlockParams& p, const ModelConfig& cfg,
                   bool training, RngStream& rng, BlockTrace* trace) {
  if (trace) {
    trace->conv_in.clear();
    trace->act_in.clear();
    trace->norm_in.clear();
    trace->drop.assign(4, nn::DropoutMask{});
  }
  Grid4D cur = x;
  for (int r = 0; r < 4; ++r) {
    if (trace) trace->conv_in.push_back(cur);
    Grid4D c = nn::conv2d(cur, p.conv[size_t(r)].w, p.conv[size_t(r)].b, 1, 1);
    if (trace) trace->act_in.push_back(c);
    Grid4D e = nn::elu(c);
    if (trace) trace->norm_in.push_back(e);
    Grid4D g = nn::group_norm(e, cfg.groups, p.norm[size_t(r)].gamma, p.norm[size_t(r)].beta);
    cur = nn::dropout2d(g, cfg.dropout_rate, training, rng, trace ? &trace->drop[size_t(r)] : nullptr);
  }
  if (trace) trace->conv_in.push_back(cur);
  Grid4D c = nn::conv2d(cur, p.conv[4].w, p.conv[4].b, 1, 1);
  if (trace) trace->act_in.push_back(c);
  return nn::elu(c);
}

Grid4D dense_block_backward(const BlockTrace& trace, DenseBlockParams& p,
                            const ModelConfig& cfg, const Grid4D& grad_out) {
  Grid4D g = nn::elu_backward(trace.act_in[4], grad_out);
  g = nn::conv2d_backward(trace.conv_in[4], p.conv[4].w, p.conv[4].b, g, 1, 1);
  for (int r = 3; r >= 0; --r) {
    g = nn::dropout2d_backward(trace.drop[size_t(r)], g);
    g = nn::group_norm_backward(trace.norm_in[size_t(r)], cfg.groups, p.norm[size_t(r)].gamma,
                                p.norm[size_t(r)].beta, g);
    g = nn::elu_backward(trace.act_in[size_t(r)], g);
    g = nn::conv2d_backward(trace.conv_in[size_t(r)], p.conv[size_t(r)].w, p.conv[size_t(r)].b,
                            g, 1, 1);
  }
  return g;
}

// ---------------------------------------------------------------------------
// bottleneck
// ---------------------------------------------------------------------------

std::vector<double> reparameterize(const LatentDistribution& latent, LatentMode mode,
                                   RngStream& rng, std::vector<double>* eps_out) {
  const size_t n = size_t(latent.batch) * latent.dim;
  std::vector<double> z(n);
  std::vector<double> eps(n, 0.0);
  if (mode == LatentMode::sample) {
    for (size_t i = 0; i < n; ++i) eps[i] = rng.normal();
  }
  for (size_t i = 0; i < n; ++i) z[i] = latent.mu[i] + latent.sigma[i] * eps[i];
  if (eps_out) *eps_out = std::move(eps);
  return z;
}

// ---------------------------------------------------------------------------
// VUNet
// ---------------------------------------------------------------------------

VUNet::VUNet(ModelConfig cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  RngStream rng(init_seed);
  params_ = init_params(cfg_, rng);
}

VUNet::VUNet(ModelConfig cfg, VUNetParams params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
}

EncodeResult VUNet::encode(const Grid4D& x, bool training, RngStream& rng,
                           EncoderTrace* trace) const {
  const Shape4& s = x.shape();
  if (s.c != cfg_.in_channels || s.h != cfg_.input_size || s.w != cfg_.input_size) {
    throw ConfigError("encode: input " + s.str() + " does not match config (C=" +
                      std::to_string(cfg_.in_channels) + ", S=" +
                      std::to_string(cfg_.input_size) + ")");
  }
  if (trace) trace->blocks.assign(size_t(cfg_.levels), BlockTrace{});

  EncodeResult result;
  Grid4D cur = x;
  for (int l = 0; l < cfg_.levels; ++l) {
    Grid4D out = dense_block(cur, params_.encoder[size_t(l)], cfg_, training, rng,
                             trace ? &trace->blocks[size_t(l)] : nullptr);
    cur = nn::max_pool2d(out, 2);
    result.skips.push_back(std::move(out));
  }

  const int flat = cfg_.flat_features();
  LatentDistribution latent;
  latent.batch = s.b;
  latent.dim = cfg_.latent_dim;
  latent.mu.resize(size_t(s.b) * cfg_.latent_dim);
  latent.sigma.resize(size_t(s.b) * cfg_.latent_dim);
  std::vector<double> logsigma_raw(size_t(s.b) * cfg_.latent_dim);

  for (int n = 0; n < s.b; ++n) {
    std::vector<double> features(cur.data() + size_t(n) * flat,
                                 cur.data() + size_t(n + 1) * flat);
    std::vector<double> mu = nn::dense(features, params_.mu_head.w, params_.mu_head.b);
    std::vector<double> ls = nn::dense(features, params_.logsigma_head.w, params_.logsigma_head.b);
    for (int i = 0; i < cfg_.latent_dim; ++i) {
      const size_t k = size_t(n) * cfg_.latent_dim + i;
      latent.mu[k] = mu[size_t(i)];
      logsigma_raw[k] = ls[size_t(i)];
      latent.sigma[k] = std::exp(std::clamp(ls[size_t(i)], kLogSigmaMin, kLogSigmaMax));
    }
  }

  if (trace) {
    trace->flat.assign(cur.data(), cur.data() + size_t(s.b) * flat);
    trace->logsigma_raw = std::move(logsigma_raw);
  }
  result.latent = std::move(latent);
  return result;
}

Grid4D VUNet::reconstruct_latent(const std::vector<double>& z, int batch) const {
  const int dim = cfg_.latent_dim;
  if (int64_t(z.size()) != int64_t(batch) * dim) {
    throw ConfigError("reconstruct_latent: z length " + std::to_string(z.size()) +
                      " != batch*latent_dim");
  }
  const int s = cfg_.bottleneck_size();
  Grid4D start(batch, cfg_.deepest_width(), s, s);
  const int flat = cfg_.flat_features();
  for (int n = 0; n < batch; ++n) {
    std::vector<double> zb(z.begin() + size_t(n) * dim, z.begin() + size_t(n + 1) * dim);
    std::vector<double> f = nn::dense(zb, params_.latent_proj.w, params_.latent_proj.b);
    std::copy(f.begin(), f.end(), start.data() + size_t(n) * flat);
  }
  return start;
}

Grid4D VUNet::decode(const Grid4D& start, const std::vector<Grid4D>& skips, bool training,
                     RngStream& rng, DecoderTrace* trace) const {
  if (int(skips.size()) != cfg_.levels) {
    throw ConfigError("decode: expected " + std::to_string(cfg_.levels) + " skips, got " +
                      std::to_string(skips.size()));
  }
  if (trace) trace->stages.assign(size_t(cfg_.levels), StageTrace{});

  Grid4D cur = start;
  for (int j = cfg_.levels - 1; j >= 0; --j) {
    const DecoderStageParams& st = params_.decoder[size_t(j)];
    StageTrace* t = trace ? &trace->stages[size_t(j)] : nullptr;
    if (t) t->tconv_in = cur;
    Grid4D up = nn::transposed_conv2d(cur, st.tconv.w, st.tconv.b, 2, 0);
    if (t) t->tconv_out = up;
    Grid4D u = nn::elu(up);
    const Shape4& ss = skips[size_t(j)].shape();
    if (ss.h != u.shape().h || ss.w != u.shape().w || ss.c != cfg_.width_at(j)) {
      throw ConfigError("decode: skip " + std::to_string(j) + " shape " + ss.str() +
                        " does not mirror decoder stage output " + u.shape().str());
    }
    Grid4D cat = concat_channels(u, skips[size_t(j)]);
    if (t) t->concat_in = cat;
    Grid4D c = nn::conv2d(cat, st.conv.w, st.conv.b, 1, 1);
    if (t) t->conv_out = c;
    Grid4D e = nn::elu(c);
    if (t) t->norm_in = e;
    Grid4D g = nn::group_norm(e, cfg_.groups, st.norm.gamma, st.norm.beta);
    cur = nn::dropout2d(g, cfg_.dropout_rate, training, rng, t ? &t->drop : nullptr);
  }
  if (trace) trace->head_in = cur;
  return nn::conv2d(cur, params_.head.w, params_.head.b, 1, 0);
}

Grid4D VUNet::forward(const Grid4D& x, LatentMode mode, RngStream& rng, bool training,
                      LatentDistribution* latent_out, ForwardTrace* trace) const {
  EncodeResult enc = encode(x, training, rng, trace ? &trace->enc : nullptr);
  std::vector<double> eps;
  std::vector<double> z = reparameterize(enc.latent, mode, rng, &eps);
  Grid4D start = reconstruct_latent(z, x.shape().b);
  Grid4D y = decode(start, enc.skips, training, rng, trace ? &trace->dec : nullptr);
  if (latent_out) *latent_out = enc.latent;
  if (trace) {
    trace->batch = x.shape().b;
    trace->skips = std::move(enc.skips);
    trace->latent = std::move(enc.latent);
    trace->z = std::move(z);
    trace->eps = std::move(eps);
  }
  return y;
}

Grid4D VUNet::backward(const ForwardTrace& trace, const Grid4D& grad_y,
                       const std::vector<double>& grad_mu,
                       const std::vector<double>& grad_sigma) {
  const int batch = trace.batch;
  const int dim = cfg_.latent_dim;
  const int flat = cfg_.flat_features();
  const size_t latent_n = size_t(batch) * dim;
  if (grad_mu.size() != latent_n || grad_sigma.size() != latent_n) {
    throw ConfigError("backward: latent gradient size mismatch");
  }

  // decoder
  Grid4D g = nn::conv2d_backward(trace.dec.head_in, params_.head.w, params_.head.b, grad_y, 1, 0);
  std::vector<Grid4D> grad_skips(size_t(cfg_.levels));
  for (int j = 0; j < cfg_.levels; ++j) {
    const StageTrace& t = trace.dec.stages[size_t(j)];
    DecoderStageParams& st = params_.decoder[size_t(j)];
    g = nn::dropout2d_backward(t.drop, g);
    g = nn::group_norm_backward(t.norm_in, cfg_.groups, st.norm.gamma, st.norm.beta, g);
    g = nn::elu_backward(t.conv_out, g);
    g = nn::conv2d_backward(t.concat_in, st.conv.w, st.conv.b, g, 1, 1);
    Grid4D g_up, g_skip;
    split_channels(g, cfg_.width_at(j), g_up, g_skip);
    grad_skips[size_t(j)] = std::move(g_skip);
    g_up = nn::elu_backward(t.tconv_out, g_up);
    g = nn::transposed_conv2d_backward(t.tconv_in, st.tconv.w, st.tconv.b, g_up, 2, 0);
  }

  // latent projection: g now holds d loss / d start
  std::vector<double> grad_z(latent_n, 0.0);
  for (int n = 0; n < batch; ++n) {
    std::vector<double> zb(trace.z.begin() + size_t(n) * dim,
                           trace.z.begin() + size_t(n + 1) * dim);
    std::vector<double> gf(g.data() + size_t(n) * flat, g.data() + size_t(n + 1) * flat);
    std::vector<double> gz = nn::dense_backward(zb, params_.latent_proj.w, params_.latent_proj.b, gf);
    std::copy(gz.begin(), gz.end(), grad_z.begin() + size_t(n) * dim);
  }

  // reparameterization + clamped exp
  std::vector<double> grad_mu_total(latent_n), grad_logsigma(latent_n);
  for (size_t i = 0; i < latent_n; ++i) {
    grad_mu_total[i] = grad_z[i] + grad_mu[i];
    const double grad_sigma_total = grad_z[i] * trace.eps[i] + grad_sigma[i];
    const double raw = trace.enc.logsigma_raw[i];
    const bool clamped = raw < kLogSigmaMin || raw > kLogSigmaMax;
    grad_logsigma[i] = clamped ? 0.0 : grad_sigma_total * trace.latent.sigma[i];
  }

  // bottleneck heads back to flattened features
  std::vector<double> grad_flat(size_t(batch) * flat, 0.0);
  for (int n = 0; n < batch; ++n) {
    std::vector<double> features(trace.enc.flat.begin() + size_t(n) * flat,
                                 trace.enc.flat.begin() + size_t(n + 1) * flat);
    std::vector<double> gmu(grad_mu_total.begin() + size_t(n) * dim,
                            grad_mu_total.begin() + size_t(n + 1) * dim);
    std::vector<double> gls(grad_logsigma.begin() + size_t(n) * dim,
                            grad_logsigma.begin() + size_t(n + 1) * dim);
    std::vector<double> gf1 = nn::dense_backward(features, params_.mu_head.w, params_.mu_head.b, gmu);
    std::vector<double> gf2 =
        nn::dense_backward(features, params_.logsigma_head.w, params_.logsigma_head.b, gls);
    for (int i = 0; i < flat; ++i) {
      grad_flat[size_t(n) * flat + i] = gf1[size_t(i)] + gf2[size_t(i)];
    }
  }

  // encoder, deepest level first
  const int s = cfg_.bottleneck_size();
  Grid4D cur_grad(batch, cfg_.deepest_width(), s, s);
  std::copy(grad_flat.begin(), grad_flat.end(), cur_grad.data());
  for (int l = cfg_.levels - 1; l >= 0; --l) {
    Grid4D g_prepool = nn::max_pool2d_backward(trace.skips[size_t(l)], cur_grad, 2);
    const Grid4D& gs = grad_skips[size_t(l)];
    for (int64_t i = 0; i < g_prepool.size(); ++i) g_prepool.data()[i] += gs.data()[i];
    cur_grad = dense_block_backward(trace.enc.blocks[size_t(l)], params_.encoder[size_t(l)],
                                    cfg_, g_prepool);
  }
  return cur_grad;
}

EnsembleResult VUNet::predict_ensemble(const Grid4D& x, int n, RngStream& rng) const {
  if (n < 1) throw ConfigError("predict_ensemble: n must be >= 1");
  EnsembleResult result;
  result.members.reserve(size_t(n));
  for (int k = 0; k < n; ++k) {
    result.members.push_back(forward(x, LatentMode::sample, rng, false));
  }
  const Grid4D& first = result.members.front();
  result.mean = Grid4D::zeros_like(first);
  result.std = Grid4D::zeros_like(first);
  const int64_t count = first.size();
  for (const Grid4D& m : result.members) {
    for (int64_t i = 0; i < count; ++i) result.mean.data()[i] += m.data()[i];
  }
  for (int64_t i = 0; i < count; ++i) result.mean.data()[i] /= double(n);
  for (const Grid4D& m : result.members) {
    for (int64_t i = 0; i < count; ++i) {
      const double d = m.data()[i] - result.mean.data()[i];
      result.std.data()[i] += d * d;
    }
  }
  for (int64_t i = 0; i < count; ++i) result.std.data()[i] = std::sqrt(result.std.data()[i] / n);
  return result;
}

}  // namespace vw4c::model

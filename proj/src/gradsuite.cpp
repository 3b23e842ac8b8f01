#include "vw4c/gradsuite.hpp"

#include <cmath>

#include "vw4c/model.hpp"
#include "vw4c/nn.hpp"
#include "vw4c/rng.hpp"
#include "vw4c/tensor.hpp"

namespace vw4c::nn {

namespace {

Grid4D random_grid(int b, int c, int h, int w, RngStream& rng, double scale = 1.0) {
  Grid4D g(b, c, h, w);
  for (double& v : g.values()) v = scale * (2.0 * rng.uniform() - 1.0);
  return g;
}

void fill_random(ParamTensor& p, RngStream& rng, double scale = 1.0) {
  for (double& v : p.value) v = scale * (2.0 * rng.uniform() - 1.0);
}

double dot(const Grid4D& a, const Grid4D& b) {
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

SuiteCheck check_conv2d() {
  RngStream rng(1001);
  Grid4D x = random_grid(2, 4, 8, 8, rng);
  ParamTensor w({3, 4, 3, 3});
  fill_random(w, rng);
  ParamTensor b({3});
  fill_random(b, rng);
  Grid4D coeff = random_grid(2, 3, 8, 8, rng);
  w.zero_grad();
  b.zero_grad();
  Grid4D gx = conv2d_backward(x, w, b, coeff, 1, 1);
  auto loss = [&] { return dot(conv2d(x, w, b, 1, 1), coeff); };
  RngStream probe(1);
  GradCheckReport rep = grad_check(
      loss, {{"x", x.data(), gx.data(), size_t(x.size())},
             {"w", w.value.data(), w.grad.data(), w.value.size()},
             {"b", b.value.data(), b.grad.data(), b.value.size()}},
      1e-4, 40, &probe);
  return {"conv2d", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_transposed_conv2d() {
  RngStream rng(1002);
  Grid4D x = random_grid(2, 4, 4, 4, rng);
  ParamTensor w({4, 3, 2, 2});
  fill_random(w, rng);
  ParamTensor b({3});
  fill_random(b, rng);
  Grid4D probe_y = transposed_conv2d(x, w, b, 2, 0);
  Grid4D coeff = random_grid(probe_y.shape().b, probe_y.shape().c, probe_y.shape().h,
                             probe_y.shape().w, rng);
  w.zero_grad();
  b.zero_grad();
  Grid4D gx = transposed_conv2d_backward(x, w, b, coeff, 2, 0);
  auto loss = [&] { return dot(transposed_conv2d(x, w, b, 2, 0), coeff); };
  RngStream probe(2);
  GradCheckReport rep = grad_check(
      loss, {{"x", x.data(), gx.data(), size_t(x.size())},
             {"w", w.value.data(), w.grad.data(), w.value.size()},
             {"b", b.value.data(), b.grad.data(), b.value.size()}},
      1e-4, 40, &probe);
  return {"transposed_conv2d", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_elu() {
  RngStream rng(1003);
  Grid4D x = random_grid(2, 4, 8, 8, rng, 2.0);
  for (double& v : x.values()) {
    if (std::fabs(v) < 1e-3) v += 0.1;  // stay off the kink
  }
  Grid4D coeff = random_grid(2, 4, 8, 8, rng);
  Grid4D gx = elu_backward(x, coeff);
  auto loss = [&] { return dot(elu(x), coeff); };
  RngStream probe(3);
  GradCheckReport rep =
      grad_check(loss, {{"x", x.data(), gx.data(), size_t(x.size())}}, 1e-5, 60, &probe);
  return {"elu", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_group_norm() {
  RngStream rng(1004);
  Grid4D x = random_grid(2, 4, 6, 6, rng, 2.0);
  ParamTensor gamma({4}), beta({4});
  for (auto& v : gamma.value) v = 0.5 + rng.uniform();
  fill_random(beta, rng);
  Grid4D coeff = random_grid(2, 4, 6, 6, rng);
  gamma.zero_grad();
  beta.zero_grad();
  Grid4D gx = group_norm_backward(x, 2, gamma, beta, coeff);
  auto loss = [&] { return dot(group_norm(x, 2, gamma, beta), coeff); };
  RngStream probe(4);
  GradCheckReport rep = grad_check(
      loss, {{"x", x.data(), gx.data(), size_t(x.size())},
             {"gamma", gamma.value.data(), gamma.grad.data(), gamma.value.size()},
             {"beta", beta.value.data(), beta.grad.data(), beta.value.size()}},
      1e-5, 40, &probe);
  return {"group_norm", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_dropout2d() {
  RngStream rng(1005);
  Grid4D x = random_grid(2, 4, 6, 6, rng);
  Grid4D coeff = random_grid(2, 4, 6, 6, rng);
  const uint64_t mask_seed = 77;
  RngStream mask_rng(mask_seed);
  DropoutMask mask;
  dropout2d(x, 0.4, true, mask_rng, &mask);
  Grid4D gx = dropout2d_backward(mask, coeff);
  auto loss = [&] {
    RngStream replay(mask_seed);  // frozen mask
    return dot(dropout2d(x, 0.4, true, replay), coeff);
  };
  RngStream probe(5);
  GradCheckReport rep =
      grad_check(loss, {{"x", x.data(), gx.data(), size_t(x.size())}}, 1e-5, 60, &probe);
  return {"dropout2d", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_max_pool2d() {
  RngStream rng(1006);
  Grid4D x = random_grid(2, 4, 8, 8, rng);
  Grid4D coeff = random_grid(2, 4, 4, 4, rng);
  Grid4D gx = max_pool2d_backward(x, coeff, 2);
  auto loss = [&] { return dot(max_pool2d(x, 2), coeff); };
  RngStream probe(6);
  GradCheckReport rep =
      grad_check(loss, {{"x", x.data(), gx.data(), size_t(x.size())}}, 1e-5, 60, &probe);
  return {"max_pool2d", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_dense() {
  RngStream rng(1007);
  ParamTensor w({6, 10});
  fill_random(w, rng);
  ParamTensor b({6});
  fill_random(b, rng);
  std::vector<double> x(10);
  for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
  std::vector<double> coeff(6);
  for (auto& v : coeff) v = 2.0 * rng.uniform() - 1.0;
  w.zero_grad();
  b.zero_grad();
  std::vector<double> gx = dense_backward(x, w, b, coeff);
  auto loss = [&] {
    std::vector<double> y = dense(x, w, b);
    double acc = 0.0;
    for (size_t i = 0; i < y.size(); ++i) acc += coeff[i] * y[i];
    return acc;
  };
  GradCheckReport rep = grad_check(
      loss, {{"x", x.data(), gx.data(), x.size()},
             {"w", w.value.data(), w.grad.data(), w.value.size()},
             {"b", b.value.data(), b.grad.data(), b.value.size()}});
  return {"dense", rep.max_rel_error, 1e-5, rep.max_rel_error < 1e-5};
}

SuiteCheck check_end_to_end() {
  model::ModelConfig cfg;
  cfg.in_channels = 3;
  cfg.out_channels = 8;
  cfg.levels = 2;
  cfg.base_width = 4;
  cfg.latent_dim = 8;
  cfg.dropout_rate = 0.0;
  cfg.groups = 4;
  cfg.input_size = 8;
  model::VUNet net(cfg, 1008);
  RngStream rng(1009);
  Grid4D x = random_grid(1, cfg.in_channels, cfg.input_size, cfg.input_size, rng, 0.5);
  Grid4D coeff = random_grid(1, cfg.out_channels, cfg.input_size, cfg.input_size, rng);
  std::vector<double> cmu(size_t(cfg.latent_dim)), csig(size_t(cfg.latent_dim));
  for (auto& v : cmu) v = 2.0 * rng.uniform() - 1.0;
  for (auto& v : csig) v = 2.0 * rng.uniform() - 1.0;

  const uint64_t fwd_seed = 2020;
  auto loss = [&] {
    RngStream fwd(fwd_seed);
    LatentDistribution latent;
    Grid4D y = net.forward(x, model::LatentMode::sample, fwd, false, &latent);
    double acc = dot(y, coeff);
    for (int i = 0; i < cfg.latent_dim; ++i) {
      acc += cmu[size_t(i)] * latent.mu[size_t(i)] + csig[size_t(i)] * latent.sigma[size_t(i)];
    }
    return acc;
  };
  net.params().zero_grads();
  RngStream fwd(fwd_seed);
  model::ForwardTrace trace;
  net.forward(x, model::LatentMode::sample, fwd, false, nullptr, &trace);
  net.backward(trace, coeff, cmu, csig);

  std::vector<GradBuffer> buffers;
  net.params().for_each([&buffers](const std::string& name, ParamTensor& p) {
    buffers.push_back({name, p.value.data(), p.grad.data(), p.value.size()});
  });
  RngStream probe(7);
  GradCheckReport rep = grad_check(loss, buffers, 1e-4, 1, &probe);
  return {"vunet_end_to_end", rep.max_rel_error, 1e-4, rep.max_rel_error < 1e-4};
}

}  // namespace

std::vector<SuiteCheck> run_gradient_suite() {
  return {
      check_conv2d(),     check_transposed_conv2d(), check_elu(),
      check_group_norm(), check_dropout2d(),         check_max_pool2d(),
      check_dense(),      check_end_to_end(),
  };
}

}  // namespace vw4c::nn

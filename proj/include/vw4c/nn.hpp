#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vw4c/rng.hpp"
#include "vw4c/tensor.hpp"

// Differentiable layer primitives. Forwards are pure functions of their
// inputs; each has a matching backward that accumulates into ParamTensor
// gradients and returns the gradient w.r.t. the input. Callers keep the
// forward inputs around and hand them back to the backward.
namespace vw4c::nn {

// ---------------------------------------------------------------------------
// Convolution. Weight layout [out_ch, in_ch, kh, kw], zero padding.
// Output spatial size: floor((H + 2*padding - kh) / stride) + 1.
// ---------------------------------------------------------------------------
Grid4D conv2d(const Grid4D& x, const ParamTensor& w, const ParamTensor& b,
              int stride = 1, int padding = 0);
Grid4D conv2d_backward(const Grid4D& x, ParamTensor& w, ParamTensor& b,
                       const Grid4D& grad_out, int stride = 1, int padding = 0);

// ---------------------------------------------------------------------------
// Transposed convolution, the adjoint of conv2d under a shared zero-bias
// weight. Weight layout [in_ch, out_ch, kh, kw].
// Output spatial size: (H - 1)*stride - 2*padding + kh.
// ---------------------------------------------------------------------------
Grid4D transposed_conv2d(const Grid4D& x, const ParamTensor& w, const ParamTensor& b,
                         int stride = 1, int padding = 0);
Grid4D transposed_conv2d_backward(const Grid4D& x, ParamTensor& w, ParamTensor& b,
                                  const Grid4D& grad_out, int stride = 1, int padding = 0);

// ---------------------------------------------------------------------------
// ELU: x if x > 0 else alpha*(exp(x) - 1).
// ---------------------------------------------------------------------------
Grid4D elu(const Grid4D& x, double alpha = 1.0);
Grid4D elu_backward(const Grid4D& x, const Grid4D& grad_out, double alpha = 1.0);

// ---------------------------------------------------------------------------
// Group normalization over (sample, group). Pre-affine output has zero mean
// and unit variance per group (up to eps); gamma/beta are per channel.
// Zero-variance groups yield zero pre-affine output.
// ---------------------------------------------------------------------------
Grid4D group_norm(const Grid4D& x, int groups, const ParamTensor& gamma,
                  const ParamTensor& beta, double eps = 1e-5);
Grid4D group_norm_backward(const Grid4D& x, int groups, ParamTensor& gamma,
                           ParamTensor& beta, const Grid4D& grad_out, double eps = 1e-5);

// ---------------------------------------------------------------------------
// Channel dropout: whole (sample, channel) planes are zeroed with the given
// probability during training; survivors are scaled by 1/(1-rate).
// The drawn mask (one multiplier per plane) is what backward needs.
// ---------------------------------------------------------------------------
struct DropoutMask {
  int batch = 0;
  int channels = 0;
  std::vector<double> scale;  // batch*channels entries, 0 or 1/(1-rate)
};

Grid4D dropout2d(const Grid4D& x, double rate, bool training, RngStream& rng,
                 DropoutMask* mask_out = nullptr);
Grid4D dropout2d_backward(const DropoutMask& mask, const Grid4D& grad_out);

// ---------------------------------------------------------------------------
// Max pooling over non-overlapping windows. Gradient routes to the first
// maximal element in row-major order.
// ---------------------------------------------------------------------------
Grid4D max_pool2d(const Grid4D& x, int window = 2);
Grid4D max_pool2d_backward(const Grid4D& x, const Grid4D& grad_out, int window = 2);

// ---------------------------------------------------------------------------
// Fully connected: y = w*x + b, weight layout [m, n] row-major.
// ---------------------------------------------------------------------------
std::vector<double> dense(const std::vector<double>& x, const ParamTensor& w,
                          const ParamTensor& b);
std::vector<double> dense_backward(const std::vector<double>& x, ParamTensor& w,
                                   ParamTensor& b, const std::vector<double>& grad_out);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.
// ---------------------------------------------------------------------------

// One buffer to probe: values get perturbed, analytic grads get compared.
struct GradBuffer {
  std::string name;
  double* value = nullptr;
  const double* grad = nullptr;
  size_t count = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_buffer;
  size_t worst_index = 0;
};

// `loss` evaluates the scalar objective at the current buffer values.
// Analytic gradients must already be stored in each buffer's grad array.
// Probes every element, or `max_probes` rng-chosen elements per buffer when
// max_probes > 0. Relative error uses max(|analytic|, |central|, 1e-8).
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<GradBuffer>& buffers, double eps = 1e-4,
                           int max_probes = -1, RngStream* rng = nullptr);

}  // namespace vw4c::nn

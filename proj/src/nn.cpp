#include "vw4c/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vw4c::nn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

int conv_out_extent(int in, int pad, int k, int stride) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

Grid4D conv2d(const Grid4D& x, const ParamTensor& w, const ParamTensor& b,
              int stride, int padding) {
  const Shape4& s = x.shape();
  require(w.shape().size() == 4, "conv2d: weight must be rank 4");
  const int co = w.shape()[0], ci = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  require(s.c == ci, "conv2d: input channels " + std::to_string(s.c) +
                         " != kernel in_channels " + std::to_string(ci));
  require(int64_t(b.count()) == co, "conv2d: bias length " + std::to_string(b.count()) +
                                        " != out_channels " + std::to_string(co));
  require(stride >= 1 && padding >= 0, "conv2d: bad stride/padding");
  require(s.h + 2 * padding >= kh && s.w + 2 * padding >= kw,
          "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
              " does not fit padded input " + s.str());

  const int ho = conv_out_extent(s.h, padding, kh, stride);
  const int wo = conv_out_extent(s.w, padding, kw, stride);
  Grid4D y(s.b, co, ho, wo);

  const double* xd = x.data();
  const double* wd = w.value.data();
  double* yd = y.data();

  if (stride == 1) {
    // shift-and-accumulate: contiguous inner loops, borders handled by ranges
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int n = 0; n < s.b; ++n) {
      for (int oc = 0; oc < co; ++oc) {
        double* out = yd + (size_t(n) * co + oc) * ho * wo;
        const double bias = b.value[size_t(oc)];
        for (int64_t i = 0; i < int64_t(ho) * wo; ++i) out[i] = bias;
        for (int ic = 0; ic < ci; ++ic) {
          const double* xplane = xd + (size_t(n) * s.c + ic) * s.h * s.w;
          const double* wplane = wd + (size_t(oc) * ci + ic) * kh * kw;
          for (int ky = 0; ky < kh; ++ky) {
            const int oy_lo = std::max(0, padding - ky);
            const int oy_hi = std::min(ho, s.h + padding - ky);
            for (int kx = 0; kx < kw; ++kx) {
              const double wv = wplane[size_t(ky) * kw + kx];
              const int ox_lo = std::max(0, padding - kx);
              const int ox_hi = std::min(wo, s.w + padding - kx);
              for (int oy = oy_lo; oy < oy_hi; ++oy) {
                const double* xr =
                    xplane + size_t(oy - padding + ky) * s.w + (ox_lo - padding + kx);
                double* yr = out + size_t(oy) * wo + ox_lo;
                for (int i = 0; i < ox_hi - ox_lo; ++i) yr[i] += wv * xr[i];
              }
            }
          }
        }
      }
    }
    return y;
  }

#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int n = 0; n < s.b; ++n) {
    for (int oc = 0; oc < co; ++oc) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b.value[size_t(oc)];
          for (int ic = 0; ic < ci; ++ic) {
            const double* xplane = xd + (size_t(n) * s.c + ic) * s.h * s.w;
            const double* wplane = wd + (size_t(oc) * ci + ic) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= s.h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= s.w) continue;
                acc += xplane[size_t(iy) * s.w + ix] * wplane[size_t(ky) * kw + kx];
              }
            }
          }
          yd[((size_t(n) * co + oc) * ho + oy) * wo + ox] = acc;
        }
      }
    }
  }
  return y;
}

Grid4D conv2d_backward(const Grid4D& x, ParamTensor& w, ParamTensor& b,
                       const Grid4D& grad_out, int stride, int padding) {
  const Shape4& s = x.shape();
  const int co = w.shape()[0], ci = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  const Shape4& g = grad_out.shape();
  require(g.b == s.b && g.c == co, "conv2d_backward: grad shape mismatch " + g.str());

  const double* xd = x.data();
  const double* gd = grad_out.data();
  const double* wd = w.value.data();

  // bias gradient
  for (int oc = 0; oc < co; ++oc) {
    double acc = 0.0;
    for (int n = 0; n < g.b; ++n) {
      const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
      for (int i = 0; i < g.h * g.w; ++i) acc += gplane[i];
    }
    b.grad[size_t(oc)] += acc;
  }

  // weight gradient: disjoint writes per (oc, ic, ky, kx)
  double* wg = w.grad.data();
  if (stride == 1) {
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int oc = 0; oc < co; ++oc) {
      for (int ic = 0; ic < ci; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
          const int oy_lo = std::max(0, padding - ky);
          const int oy_hi = std::min(g.h, s.h + padding - ky);
          for (int kx = 0; kx < kw; ++kx) {
            const int ox_lo = std::max(0, padding - kx);
            const int ox_hi = std::min(g.w, s.w + padding - kx);
            double acc = 0.0;
            for (int n = 0; n < s.b; ++n) {
              const double* xplane = xd + (size_t(n) * s.c + ic) * s.h * s.w;
              const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
              for (int oy = oy_lo; oy < oy_hi; ++oy) {
                const double* xr =
                    xplane + size_t(oy - padding + ky) * s.w + (ox_lo - padding + kx);
                const double* gr = gplane + size_t(oy) * g.w + ox_lo;
                for (int i = 0; i < ox_hi - ox_lo; ++i) acc += gr[i] * xr[i];
              }
            }
            wg[((size_t(oc) * ci + ic) * kh + ky) * kw + kx] += acc;
          }
        }
      }
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int oc = 0; oc < co; ++oc) {
      for (int ic = 0; ic < ci; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            double acc = 0.0;
            for (int n = 0; n < s.b; ++n) {
              const double* xplane = xd + (size_t(n) * s.c + ic) * s.h * s.w;
              const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
              for (int oy = 0; oy < g.h; ++oy) {
                const int iy = oy * stride - padding + ky;
                if (iy < 0 || iy >= s.h) continue;
                for (int ox = 0; ox < g.w; ++ox) {
                  const int ix = ox * stride - padding + kx;
                  if (ix < 0 || ix >= s.w) continue;
                  acc += gplane[size_t(oy) * g.w + ox] * xplane[size_t(iy) * s.w + ix];
                }
              }
            }
            wg[((size_t(oc) * ci + ic) * kh + ky) * kw + kx] += acc;
          }
        }
      }
    }
  }

  // input gradient
  Grid4D gx(s.b, s.c, s.h, s.w);
  double* gxd = gx.data();
  if (stride == 1) {
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int n = 0; n < s.b; ++n) {
      for (int ic = 0; ic < ci; ++ic) {
        double* gxp = gxd + (size_t(n) * s.c + ic) * s.h * s.w;
        for (int oc = 0; oc < co; ++oc) {
          const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
          const double* wplane = wd + (size_t(oc) * ci + ic) * kh * kw;
          for (int ky = 0; ky < kh; ++ky) {
            // oy = iy + padding - ky must land in [0, g.h)
            const int iy_lo = std::max(0, ky - padding);
            const int iy_hi = std::min(s.h, g.h + ky - padding);
            for (int kx = 0; kx < kw; ++kx) {
              const double wv = wplane[size_t(ky) * kw + kx];
              const int ix_lo = std::max(0, kx - padding);
              const int ix_hi = std::min(s.w, g.w + kx - padding);
              for (int iy = iy_lo; iy < iy_hi; ++iy) {
                const double* gr =
                    gplane + size_t(iy + padding - ky) * g.w + (ix_lo + padding - kx);
                double* xr = gxp + size_t(iy) * s.w + ix_lo;
                for (int i = 0; i < ix_hi - ix_lo; ++i) xr[i] += wv * gr[i];
              }
            }
          }
        }
      }
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int n = 0; n < s.b; ++n) {
      for (int ic = 0; ic < ci; ++ic) {
        for (int iy = 0; iy < s.h; ++iy) {
          for (int ix = 0; ix < s.w; ++ix) {
            double acc = 0.0;
            for (int oc = 0; oc < co; ++oc) {
              const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
              const double* wplane = wd + (size_t(oc) * ci + ic) * kh * kw;
              for (int ky = 0; ky < kh; ++ky) {
                const int num_y = iy + padding - ky;
                if (num_y < 0 || num_y % stride != 0) continue;
                const int oy = num_y / stride;
                if (oy >= g.h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                  const int num_x = ix + padding - kx;
                  if (num_x < 0 || num_x % stride != 0) continue;
                  const int ox = num_x / stride;
                  if (ox >= g.w) continue;
                  acc += gplane[size_t(oy) * g.w + ox] * wplane[size_t(ky) * kw + kx];
                }
              }
            }
            gxd[((size_t(n) * s.c + ic) * s.h + iy) * s.w + ix] = acc;
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// transposed_conv2d
// ---------------------------------------------------------------------------

Grid4D transposed_conv2d(const Grid4D& x, const ParamTensor& w, const ParamTensor& b,
                         int stride, int padding) {
  const Shape4& s = x.shape();
  require(w.shape().size() == 4, "transposed_conv2d: weight must be rank 4");
  const int ci = w.shape()[0], co = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  require(s.c == ci, "transposed_conv2d: input channels " + std::to_string(s.c) +
                         " != kernel in_channels " + std::to_string(ci));
  require(int64_t(b.count()) == co,
          "transposed_conv2d: bias length mismatch vs out_channels " + std::to_string(co));
  require(stride >= 1 && padding >= 0, "transposed_conv2d: bad stride/padding");

  const int ho = (s.h - 1) * stride - 2 * padding + kh;
  const int wo = (s.w - 1) * stride - 2 * padding + kw;
  require(ho > 0 && wo > 0, "transposed_conv2d: non-positive output size for input " + s.str());

  Grid4D y(s.b, co, ho, wo);
  const double* xd = x.data();
  const double* wd = w.value.data();
  double* yd = y.data();

  // scatter: each thread owns one (sample, out-channel) plane
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int n = 0; n < s.b; ++n) {
    for (int oc = 0; oc < co; ++oc) {
      double* out = yd + (size_t(n) * co + oc) * ho * wo;
      const double bias = b.value[size_t(oc)];
      for (int64_t i = 0; i < int64_t(ho) * wo; ++i) out[i] = bias;
      for (int ic = 0; ic < ci; ++ic) {
        const double* xplane = xd + (size_t(n) * ci + ic) * s.h * s.w;
        const double* wplane = wd + (size_t(ic) * co + oc) * kh * kw;
        for (int iy = 0; iy < s.h; ++iy) {
          for (int ix = 0; ix < s.w; ++ix) {
            const double v = xplane[size_t(iy) * s.w + ix];
            const int base_oy = iy * stride - padding;
            const int base_ox = ix * stride - padding;
            for (int ky = 0; ky < kh; ++ky) {
              const int oy = base_oy + ky;
              if (oy < 0 || oy >= ho) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ox = base_ox + kx;
                if (ox < 0 || ox >= wo) continue;
                out[size_t(oy) * wo + ox] += v * wplane[size_t(ky) * kw + kx];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

Grid4D transposed_conv2d_backward(const Grid4D& x, ParamTensor& w, ParamTensor& b,
                                  const Grid4D& grad_out, int stride, int padding) {
  const Shape4& s = x.shape();
  const int ci = w.shape()[0], co = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  const Shape4& g = grad_out.shape();
  require(g.b == s.b && g.c == co, "transposed_conv2d_backward: grad shape mismatch " + g.str());

  const double* xd = x.data();
  const double* gd = grad_out.data();
  const double* wd = w.value.data();

  for (int oc = 0; oc < co; ++oc) {
    double acc = 0.0;
    for (int n = 0; n < g.b; ++n) {
      const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
      for (int i = 0; i < g.h * g.w; ++i) acc += gplane[i];
    }
    b.grad[size_t(oc)] += acc;
  }

  double* wg = w.grad.data();
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int ic = 0; ic < ci; ++ic) {
    for (int oc = 0; oc < co; ++oc) {
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < s.b; ++n) {
            const double* xplane = xd + (size_t(n) * ci + ic) * s.h * s.w;
            const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
            for (int iy = 0; iy < s.h; ++iy) {
              const int oy = iy * stride - padding + ky;
              if (oy < 0 || oy >= g.h) continue;
              const double* xr = xplane + size_t(iy) * s.w;
              const double* gr = gplane + size_t(oy) * g.w;
              for (int ix = 0; ix < s.w; ++ix) {
                const int ox = ix * stride - padding + kx;
                if (ox < 0 || ox >= g.w) continue;
                acc += xr[ix] * gr[ox];
              }
            }
          }
          wg[((size_t(ic) * co + oc) * kh + ky) * kw + kx] += acc;
        }
      }
    }
  }

  // grad w.r.t. input: each thread owns one (sample, in-channel) plane
  Grid4D gx(s.b, ci, s.h, s.w);
  double* gxd = gx.data();
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int n = 0; n < s.b; ++n) {
    for (int ic = 0; ic < ci; ++ic) {
      double* gxp = gxd + (size_t(n) * ci + ic) * s.h * s.w;
      for (int oc = 0; oc < co; ++oc) {
        const double* gplane = gd + (size_t(n) * co + oc) * g.h * g.w;
        const double* wplane = wd + (size_t(ic) * co + oc) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const double wv = wplane[size_t(ky) * kw + kx];
            for (int iy = 0; iy < s.h; ++iy) {
              const int oy = iy * stride - padding + ky;
              if (oy < 0 || oy >= g.h) continue;
              const double* gr = gplane + size_t(oy) * g.w;
              double* xr = gxp + size_t(iy) * s.w;
              for (int ix = 0; ix < s.w; ++ix) {
                const int ox = ix * stride - padding + kx;
                if (ox < 0 || ox >= g.w) continue;
                xr[ix] += wv * gr[ox];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// elu
// ---------------------------------------------------------------------------

Grid4D elu(const Grid4D& x, double alpha) {
  Grid4D y = x;
  for (double& v : y.values()) {
    if (v <= 0.0) v = alpha * std::expm1(v);
  }
  return y;
}

Grid4D elu_backward(const Grid4D& x, const Grid4D& grad_out, double alpha) {
  require(x.shape() == grad_out.shape(), "elu_backward: shape mismatch");
  Grid4D gx = grad_out;
  const double* xd = x.data();
  double* gd = gx.data();
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) {
    if (xd[i] <= 0.0) gd[i] *= alpha * std::exp(xd[i]);
  }
  return gx;
}

// ---------------------------------------------------------------------------
// group_norm
// ---------------------------------------------------------------------------

Grid4D group_norm(const Grid4D& x, int groups, const ParamTensor& gamma,
                  const ParamTensor& beta, double eps) {
  const Shape4& s = x.shape();
  require(groups >= 1 && s.c % groups == 0,
          "group_norm: channels " + std::to_string(s.c) + " not divisible by groups " +
              std::to_string(groups));
  require(int64_t(gamma.count()) == s.c && int64_t(beta.count()) == s.c,
          "group_norm: gamma/beta length must equal channel count " + std::to_string(s.c));

  const int cpg = s.c / groups;
  const int64_t plane = int64_t(s.h) * s.w;
  const int64_t group_n = cpg * plane;
  Grid4D y(s.b, s.c, s.h, s.w);
  const double* xd = x.data();
  double* yd = y.data();

  for (int n = 0; n < s.b; ++n) {
    for (int g = 0; g < groups; ++g) {
      const double* base = xd + (size_t(n) * s.c + size_t(g) * cpg) * plane;
      double mean = 0.0;
      for (int64_t i = 0; i < group_n; ++i) mean += base[i];
      mean /= double(group_n);
      double var = 0.0;
      for (int64_t i = 0; i < group_n; ++i) {
        const double d = base[i] - mean;
        var += d * d;
      }
      var /= double(group_n);
      const double ivar = 1.0 / std::sqrt(var + eps);
      double* out = yd + (size_t(n) * s.c + size_t(g) * cpg) * plane;
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        const double ga = gamma.value[size_t(c)];
        const double be = beta.value[size_t(c)];
        for (int64_t i = 0; i < plane; ++i) {
          out[size_t(cc) * plane + i] =
              ga * ((base[size_t(cc) * plane + i] - mean) * ivar) + be;
        }
      }
    }
  }
  return y;
}

Grid4D group_norm_backward(const Grid4D& x, int groups, ParamTensor& gamma,
                           ParamTensor& beta, const Grid4D& grad_out, double eps) {
  const Shape4& s = x.shape();
  require(x.shape() == grad_out.shape(), "group_norm_backward: shape mismatch");
  const int cpg = s.c / groups;
  const int64_t plane = int64_t(s.h) * s.w;
  const int64_t group_n = cpg * plane;

  Grid4D gx(s.b, s.c, s.h, s.w);
  const double* xd = x.data();
  const double* gd = grad_out.data();
  double* gxd = gx.data();

  for (int n = 0; n < s.b; ++n) {
    for (int g = 0; g < groups; ++g) {
      const size_t off = (size_t(n) * s.c + size_t(g) * cpg) * plane;
      const double* xb = xd + off;
      const double* gb = gd + off;

      double mean = 0.0;
      for (int64_t i = 0; i < group_n; ++i) mean += xb[i];
      mean /= double(group_n);
      double var = 0.0;
      for (int64_t i = 0; i < group_n; ++i) {
        const double d = xb[i] - mean;
        var += d * d;
      }
      var /= double(group_n);
      const double ivar = 1.0 / std::sqrt(var + eps);

      // accumulate per-channel affine grads and group-level reductions
      double sum_dxhat = 0.0;
      double sum_dxhat_xc = 0.0;  // sum of dxhat * (x - mean)
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        const double ga = gamma.value[size_t(c)];
        double dgamma = 0.0, dbeta = 0.0;
        for (int64_t i = 0; i < plane; ++i) {
          const double xc = xb[size_t(cc) * plane + i] - mean;
          const double go = gb[size_t(cc) * plane + i];
          dgamma += go * xc * ivar;
          dbeta += go;
          const double dxhat = go * ga;
          sum_dxhat += dxhat;
          sum_dxhat_xc += dxhat * xc;
        }
        gamma.grad[size_t(c)] += dgamma;
        beta.grad[size_t(c)] += dbeta;
      }

      const double dvar = sum_dxhat_xc * (-0.5) * ivar * ivar * ivar;
      const double dmean = -sum_dxhat * ivar;
      double* gxb = gxd + off;
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        const double ga = gamma.value[size_t(c)];
        for (int64_t i = 0; i < plane; ++i) {
          const double xc = xb[size_t(cc) * plane + i] - mean;
          const double dxhat = gb[size_t(cc) * plane + i] * ga;
          gxb[size_t(cc) * plane + i] =
              dxhat * ivar + dvar * 2.0 * xc / double(group_n) + dmean / double(group_n);
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// dropout2d
// ---------------------------------------------------------------------------

Grid4D dropout2d(const Grid4D& x, double rate, bool training, RngStream& rng,
                 DropoutMask* mask_out) {
  require(rate >= 0.0 && rate < 1.0,
          "dropout2d: rate must be in [0, 1), got " + std::to_string(rate));
  const Shape4& s = x.shape();

  if (!training || rate == 0.0) {
    if (mask_out) {
      mask_out->batch = s.b;
      mask_out->channels = s.c;
      mask_out->scale.assign(size_t(s.b) * s.c, 1.0);
    }
    return x;
  }

  const double keep_scale = 1.0 / (1.0 - rate);
  DropoutMask mask;
  mask.batch = s.b;
  mask.channels = s.c;
  mask.scale.resize(size_t(s.b) * s.c);
  for (auto& m : mask.scale) m = (rng.uniform() < rate) ? 0.0 : keep_scale;

  Grid4D y(s.b, s.c, s.h, s.w);
  const int64_t plane = int64_t(s.h) * s.w;
  const double* xd = x.data();
  double* yd = y.data();
  for (int n = 0; n < s.b; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double m = mask.scale[size_t(n) * s.c + c];
      const double* src = xd + (size_t(n) * s.c + c) * plane;
      double* dst = yd + (size_t(n) * s.c + c) * plane;
      for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] * m;
    }
  }
  if (mask_out) *mask_out = std::move(mask);
  return y;
}

Grid4D dropout2d_backward(const DropoutMask& mask, const Grid4D& grad_out) {
  const Shape4& s = grad_out.shape();
  require(mask.batch == s.b && mask.channels == s.c, "dropout2d_backward: mask shape mismatch");
  Grid4D gx(s.b, s.c, s.h, s.w);
  const int64_t plane = int64_t(s.h) * s.w;
  const double* gd = grad_out.data();
  double* gxd = gx.data();
  for (int n = 0; n < s.b; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double m = mask.scale[size_t(n) * s.c + c];
      const double* src = gd + (size_t(n) * s.c + c) * plane;
      double* dst = gxd + (size_t(n) * s.c + c) * plane;
      for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] * m;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// max_pool2d
// ---------------------------------------------------------------------------

Grid4D max_pool2d(const Grid4D& x, int window) {
  const Shape4& s = x.shape();
  require(window >= 1, "max_pool2d: window must be positive");
  require(s.h % window == 0 && s.w % window == 0,
          "max_pool2d: spatial dims " + s.str() + " not divisible by window " +
              std::to_string(window));
  const int ho = s.h / window, wo = s.w / window;
  Grid4D y(s.b, s.c, ho, wo);
  for (int n = 0; n < s.b; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double best = x.at(n, c, oy * window, ox * window);
          for (int ky = 0; ky < window; ++ky) {
            for (int kx = 0; kx < window; ++kx) {
              best = std::max(best, x.at(n, c, oy * window + ky, ox * window + kx));
            }
          }
          y.at(n, c, oy, ox) = best;
        }
      }
    }
  }
  return y;
}

Grid4D max_pool2d_backward(const Grid4D& x, const Grid4D& grad_out, int window) {
  const Shape4& s = x.shape();
  const Shape4& g = grad_out.shape();
  require(g.b == s.b && g.c == s.c && g.h == s.h / window && g.w == s.w / window,
          "max_pool2d_backward: grad shape mismatch " + g.str());
  Grid4D gx(s.b, s.c, s.h, s.w);
  for (int n = 0; n < s.b; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < g.h; ++oy) {
        for (int ox = 0; ox < g.w; ++ox) {
          // first maximal element in row-major order
          int by = oy * window, bx = ox * window;
          double best = x.at(n, c, by, bx);
          for (int ky = 0; ky < window; ++ky) {
            for (int kx = 0; kx < window; ++kx) {
              const double v = x.at(n, c, oy * window + ky, ox * window + kx);
              if (v > best) {
                best = v;
                by = oy * window + ky;
                bx = ox * window + kx;
              }
            }
          }
          gx.at(n, c, by, bx) += grad_out.at(n, c, oy, ox);
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// dense
// ---------------------------------------------------------------------------

std::vector<double> dense(const std::vector<double>& x, const ParamTensor& w,
                          const ParamTensor& b) {
  require(w.shape().size() == 2, "dense: weight must be rank 2");
  const int m = w.shape()[0], n = w.shape()[1];
  require(int64_t(x.size()) == n, "dense: input length " + std::to_string(x.size()) +
                                      " != weight columns " + std::to_string(n));
  require(int64_t(b.count()) == m, "dense: bias length mismatch vs rows " + std::to_string(m));
  std::vector<double> y(size_t(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = b.value[size_t(i)];
    const double* row = w.value.data() + size_t(i) * n;
    for (int j = 0; j < n; ++j) acc += row[j] * x[size_t(j)];
    y[size_t(i)] = acc;
  }
  return y;
}

std::vector<double> dense_backward(const std::vector<double>& x, ParamTensor& w,
                                   ParamTensor& b, const std::vector<double>& grad_out) {
  const int m = w.shape()[0], n = w.shape()[1];
  require(int64_t(grad_out.size()) == m, "dense_backward: grad length mismatch");
  require(int64_t(x.size()) == n, "dense_backward: input length mismatch");
  std::vector<double> gx(size_t(n), 0.0);
  for (int i = 0; i < m; ++i) {
    const double g = grad_out[size_t(i)];
    b.grad[size_t(i)] += g;
    double* wgrow = w.grad.data() + size_t(i) * n;
    const double* wrow = w.value.data() + size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      wgrow[j] += g * x[size_t(j)];
      gx[size_t(j)] += g * wrow[j];
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// grad_check
// ---------------------------------------------------------------------------

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<GradBuffer>& buffers, double eps,
                           int max_probes, RngStream* rng) {
  GradCheckReport report;
  for (const GradBuffer& buf : buffers) {
    std::vector<size_t> indices;
    if (max_probes > 0 && size_t(max_probes) < buf.count) {
      require(rng != nullptr, "grad_check: rng required for subsampled probing");
      for (int k = 0; k < max_probes; ++k) indices.push_back(size_t(rng->uniform_int(buf.count)));
    } else {
      indices.resize(buf.count);
      for (size_t i = 0; i < buf.count; ++i) indices[i] = i;
    }
    for (size_t idx : indices) {
      const double saved = buf.value[idx];
      buf.value[idx] = saved + eps;
      const double fp = loss();
      buf.value[idx] = saved - eps;
      const double fm = loss();
      buf.value[idx] = saved;
      const double central = (fp - fm) / (2.0 * eps);
      const double analytic = buf.grad[idx];
      const double denom = std::max({std::fabs(analytic), std::fabs(central), 1e-8});
      const double rel = std::fabs(analytic - central) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_buffer = buf.name;
        report.worst_index = idx;
      }
    }
  }
  return report;
}

}  // namespace vw4c::nn

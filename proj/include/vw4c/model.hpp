#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vw4c/latent.hpp"
#include "vw4c/nn.hpp"
#include "vw4c/rng.hpp"
#include "vw4c/tensor.hpp"

// The variational U-Net: a dense-block encoder with max-pool downsampling,
// a Gaussian bottleneck sampled via reparameterization, a latent-to-image
// projection, and a transposed-convolution decoder joined to the encoder by
// channel-concatenated skip connections.
namespace vw4c::model {

struct ModelConfig {
  int in_channels = 35;
  int out_channels = 128;
  int levels = 4;
  int base_width = 32;   // doubled per level
  int latent_dim = 512;
  double dropout_rate = 0.2;
  int groups = 4;
  int input_size = 32;   // 256 at full scale

  void validate() const;

  int width_at(int level) const { return base_width << level; }
  int deepest_width() const { return width_at(levels - 1); }
  int bottleneck_size() const { return input_size >> levels; }
  int flat_features() const { return deepest_width() * bottleneck_size() * bottleneck_size(); }
};

enum class LatentMode { sample, mean };

// Parameter groupings -------------------------------------------------------

struct ConvParams {
  ParamTensor w, b;
};
struct NormParams {
  ParamTensor gamma, beta;
};
struct DenseParams {
  ParamTensor w, b;
};

// 4 repeats of conv/elu/group_norm/dropout2d, then conv/elu.
struct DenseBlockParams {
  std::array<ConvParams, 5> conv;
  std::array<NormParams, 4> norm;
};

// One decoder level: transposed conv (2x upsample), skip concat, conv, norm.
struct DecoderStageParams {
  ConvParams tconv;
  ConvParams conv;
  NormParams norm;
};

struct VUNetParams {
  std::vector<DenseBlockParams> encoder;  // index = level, shallowest first
  DenseParams mu_head;
  DenseParams logsigma_head;
  DenseParams latent_proj;
  std::vector<DecoderStageParams> decoder;  // index = level, shallowest first
  ConvParams head;                          // 1x1 output conv

  // Visits every ParamTensor in a fixed canonical order with a stable name.
  void for_each(const std::function<void(const std::string&, ParamTensor&)>& fn);
  void for_each(const std::function<void(const std::string&, const ParamTensor&)>& fn) const;
  int64_t total_count() const;
  void zero_grads();
};

// He-style init: weights ~ N(0, sqrt(2/fan_in)), biases 0, gamma 1, beta 0.
VUNetParams init_params(const ModelConfig& cfg, RngStream& rng);

// Closed-form parameter total for a config, stage by stage.
int64_t param_count(const ModelConfig& cfg);

// Layer-kind sequence of a dense block, for introspection.
std::vector<std::string> dense_block_layer_sequence();

// Forward traces ------------------------------------------------------------

struct BlockTrace {
  std::vector<Grid4D> conv_in;         // 5
  std::vector<Grid4D> act_in;          // 5, conv outputs feeding ELU
  std::vector<Grid4D> norm_in;         // 4, ELU outputs feeding group norm
  std::vector<nn::DropoutMask> drop;   // 4
};

struct EncoderTrace {
  std::vector<BlockTrace> blocks;
  std::vector<double> flat;          // batch * flat_features
  std::vector<double> logsigma_raw;  // pre-clamp, batch * latent_dim
};

struct StageTrace {
  Grid4D tconv_in;
  Grid4D tconv_out;   // pre-ELU
  Grid4D concat_in;   // conv input: [upsampled | skip] along channels
  Grid4D conv_out;    // pre-ELU
  Grid4D norm_in;
  nn::DropoutMask drop;
};

struct DecoderTrace {
  std::vector<StageTrace> stages;  // index = level, shallowest first
  Grid4D head_in;
};

struct ForwardTrace {
  int batch = 0;
  EncoderTrace enc;
  std::vector<Grid4D> skips;  // pre-pool activations, shallowest first
  LatentDistribution latent;
  std::vector<double> z;      // batch * latent_dim
  std::vector<double> eps;    // noise used by sampling; zeros in mean mode
  DecoderTrace dec;
};

// Block-level ops -----------------------------------------------------------

Grid4D dense_block(const Grid4D& x, const DenseBlockParams& p, const ModelConfig& cfg,
                   bool training, RngStream& rng, BlockTrace* trace = nullptr);
Grid4D dense_block_backward(const BlockTrace& trace, DenseBlockParams& p,
                            const ModelConfig& cfg, const Grid4D& grad_out);

// z = mu + sigma * eps (sample) or z = mu (mean). Gradients flow to mu and
// sigma through the sample, never through eps.
std::vector<double> reparameterize(const LatentDistribution& latent, LatentMode mode,
                                   RngStream& rng, std::vector<double>* eps_out = nullptr);

struct EncodeResult {
  std::vector<Grid4D> skips;
  LatentDistribution latent;
};

struct EnsembleResult {
  std::vector<Grid4D> members;
  Grid4D mean;
  Grid4D std;
};

// The model -----------------------------------------------------------------

class VUNet {
public:
  VUNet(ModelConfig cfg, uint64_t init_seed);
  VUNet(ModelConfig cfg, VUNetParams params);

  const ModelConfig& config() const { return cfg_; }
  VUNetParams& params() { return params_; }
  const VUNetParams& params() const { return params_; }

  EncodeResult encode(const Grid4D& x, bool training, RngStream& rng,
                      EncoderTrace* trace = nullptr) const;

  // Projects z (batch * latent_dim) to the decoder's starting feature map.
  Grid4D reconstruct_latent(const std::vector<double>& z, int batch) const;

  Grid4D decode(const Grid4D& start, const std::vector<Grid4D>& skips, bool training,
                RngStream& rng, DecoderTrace* trace = nullptr) const;

  Grid4D forward(const Grid4D& x, LatentMode mode, RngStream& rng, bool training = false,
                 LatentDistribution* latent_out = nullptr, ForwardTrace* trace = nullptr) const;

  // Accumulates parameter gradients from d loss / d output plus the direct
  // (mu, sigma) contributions of the KL term. Returns d loss / d input.
  Grid4D backward(const ForwardTrace& trace, const Grid4D& grad_y,
                  const std::vector<double>& grad_mu, const std::vector<double>& grad_sigma);

  EnsembleResult predict_ensemble(const Grid4D& x, int n, RngStream& rng) const;

private:
  ModelConfig cfg_;
  VUNetParams params_;
};

}  // namespace vw4c::model

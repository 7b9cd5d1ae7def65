#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corridornav/rng.hpp"

namespace corridornav::nn {

// Planar image/activation tensor, channel-major (c, then y, then x).
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}

  double& at(int ci, int y, int x) {
    return v[(static_cast<size_t>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    return v[(static_cast<size_t>(ci) * h + y) * w + x];
  }
  size_t size() const { return v.size(); }
};

enum class LayerKind { Conv, Pool, Dense };

// Conv layers are 3x3-style same-padding (pad = kernel/2), stride 1.
// Pool layers are 2x2 max pooling with stride 2 (floor semantics on odd dims).
// The dense layer flattens and must be last, with out_features 1.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 3;
  bool relu = true;  // conv only
};

struct RegressorSpec {
  int input_c = 3;
  int input_h = 45;
  int input_w = 80;
  std::vector<LayerSpec> layers;

  // Throws std::invalid_argument when the stack is inconsistent.
  void validate() const;
  size_t param_count() const;
};

// The compact default: 4 conv+ReLU blocks with 2x2 pools, one dense scalar.
RegressorSpec default_regressor_spec(int input_w = 80, int input_h = 45);

struct ParamBlock {
  std::vector<double> w;
  std::vector<double> b;
};

struct Model {
  RegressorSpec spec;
  std::vector<ParamBlock> params;  // one entry per layer (empty for pools)
};

// He-style init: conv weights ~ N(0, sqrt(2/(c*k^2))) with c the layer's
// output channel count; dense weights ~ N(0, sqrt(2/fan_in)); biases zero.
// Deterministic per seed.
Model init_weights(const RegressorSpec& spec, uint64_t seed);

// Per-layer activations kept for the backward pass.
struct Workspace {
  std::vector<Tensor> acts;        // acts[0] = input, acts[i+1] = layer i output
  std::vector<std::vector<int>> pool_argmax;  // per layer (empty for non-pool)
};

// Scalar prediction. Throws std::invalid_argument on shape mismatch.
double forward(const Model& model, const Tensor& input);
double forward(const Model& model, const Tensor& input, Workspace& ws);

// Gradient of d_out w.r.t. every parameter, into grads (same shape as
// model.params). Requires the workspace of the matching forward call.
void backward(const Model& model, const Workspace& ws, double d_out,
              std::vector<ParamBlock>& grads);

void zero_grads(const Model& model, std::vector<ParamBlock>& grads);

// Eq.-style mean absolute error over a batch; the subgradient at exact ties
// is 0. Throws std::invalid_argument on empty or mismatched batches.
double mae_loss(const std::vector<double>& predicted, const std::vector<double>& target);

struct TrainConfig {
  double lr = 0.001;
  double momentum = 0.9;
  double l2 = 1e-4;
  int batch_size = 32;
  int plateau_window = 5;
  double plateau_tol = 1e-4;  // relative spread that still counts as "same"
  double lr_factor = 5.0;
  double lr_floor = 1e-15;
  int max_epochs = 30;
  uint64_t seed = 0;
};

enum class LrDecision { Keep, Reduced, Stop };

struct LrStep {
  LrDecision decision = LrDecision::Keep;
  double lr = 0.0;
};

// Plateau schedule: when the last plateau_window losses agree to within
// plateau_tol (relative), divide lr by lr_factor; stop once it would fall
// below lr_floor. history is the recent loss window, oldest first.
LrStep lr_step(const std::vector<double>& history, double lr, const TrainConfig& config);

struct TrainSample {
  Tensor input;
  double label = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_curve;  // one entry per iteration (mini-batch)
  std::vector<double> lr_curve;    // lr in effect at each iteration
  int epochs_run = 0;
  bool stopped_by_lr_floor = false;
};

// SGD with momentum and L2 on all parameters:
//   v <- momentum * v + (g + l2 * p);  p <- p - lr * v
// Deterministic per (samples order, config.seed). Throws on an empty set.
TrainResult train(const std::vector<TrainSample>& samples, const RegressorSpec& spec,
                  const TrainConfig& config);

// Versioned container: magic, version, JSON descriptor, little-endian f32
// parameter blob. save is the inverse of load up to f32 rounding.
void save_model(const Model& model, const std::string& path,
                const std::string& target_name);
struct LoadedModel {
  Model model;
  std::string target_name;
};
LoadedModel load_model(const std::string& path);

}  // namespace corridornav::nn

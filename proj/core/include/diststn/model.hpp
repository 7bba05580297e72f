#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "diststn/optim.hpp"
#include "diststn/stn.hpp"
#include "diststn/tape.hpp"
#include "diststn/tensor.hpp"

namespace diststn {

// Architecture of the encoder/decoder pair. The encoder is three conv+relu
// layers: 4x4 stride 2, 4x4 stride 2, 3x3 stride 1 (padding 1 each), so the
// feature maps are (image_size/4)^2. Its last layer's channels are split into
// identity maps f and pose maps r. The decoder mirrors it with transposed
// convolutions and a linear last layer.
struct ModelConfig {
  std::size_t image_size = 64;
  std::size_t num_classes = 10;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 32;
  std::size_t identity_channels = 24;
  std::size_t pose_channels = 24;

  std::size_t feature_extent() const { return image_size / 4; }
  std::size_t feature_channels() const { return identity_channels + pose_channels; }
  std::size_t identity_size() const { return identity_channels * feature_extent() * feature_extent(); }
  std::size_t pose_size() const { return pose_channels * feature_extent() * feature_extent(); }

  // Throws InvalidArgument for unusable settings.
  void validate() const;

  // 16x16 images, 2+2 feature channels: small enough for full gradient checks.
  static ModelConfig tiny(std::size_t num_classes = 3);
};

// Hidden widths of the pose-discrepancy network; its output is 6 affine values.
inline constexpr std::size_t kPoseHidden1 = 60;
inline constexpr std::size_t kPoseHidden2 = 30;
inline constexpr std::size_t kPoseOutputs = 6;

// Coefficients of the cross-reconstruction (alpha) and self-reconstruction
// (beta) terms.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
};

class DistStnModel {
 public:
  DistStnModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  LossWeights& loss_weights() { return weights_; }
  const LossWeights& loss_weights() const { return weights_; }

  // encoder, decoder, pose, classifier, in that order.
  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  ParamGroup& group(std::string_view name);
  const ParamGroup& group(std::string_view name) const;
  const Tensor& param(std::string_view group_name, std::string_view param_name) const;

  // "group.param" -> tensor, in a fixed order.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::size_t parameter_count() const;

  // Deep copy, including optimizer momentum.
  DistStnModel clone() const;
  // Overwrites parameter values (not momentum) with those of `other`.
  void copy_values_from(const DistStnModel& other);
  void zero_grad();

 private:
  ModelConfig config_;
  LossWeights weights_;
  std::vector<ParamGroup> groups_;
};

struct DisentangledFeatures {
  Tensor identity;  // f [identity_channels x h x w]
  Tensor pose;      // r [pose_channels x h x w]
};

// Images are [1 x S x S] tensors.
Tensor image_tensor(std::span<const float> pixels, std::size_t size);

DisentangledFeatures encode(Tape& tape, const DistStnModel& model, const Tensor& image);
Tensor decode(Tape& tape, const DistStnModel& model, const Tensor& identity, const Tensor& pose);
// Six affine values warping r_from onto r_to.
Tensor pose_discrepancy(Tape& tape, const DistStnModel& model, const Tensor& pose_from, const Tensor& pose_to);
Tensor class_logits(Tape& tape, const DistStnModel& model, const Tensor& identity);
std::vector<double> classify(const DistStnModel& model, const Tensor& identity);

struct LossBreakdown {
  double classification = 0.0;
  double cross_reconstruction = 0.0;
  double self_reconstruction_i = 0.0;
  double self_reconstruction_j = 0.0;
  double total = 0.0;
};

struct PairLoss {
  Tensor total;
  LossBreakdown terms;
};

// CE(f_i, y_i) + alpha*mae(x_j, decode(f_j, warp(r_i)))
//   + beta*mae(x_i, decode(f_i, r_i)) + beta*mae(x_j, decode(f_j, r_j)).
// The second label takes no part in the objective; it is accepted so callers
// can pass a labelled pair through unchanged.
PairLoss pair_loss(Tape& tape, const DistStnModel& model, const Tensor& x_i, std::size_t y_i, const Tensor& x_j,
                   std::size_t y_j);

// Classification term alone: the single-sample objective of the plain CNN.
Tensor sample_loss(Tape& tape, const DistStnModel& model, const Tensor& x, std::size_t y);

// Argmax of the class probabilities of encode(x).f; ties go to the lowest index.
std::size_t predict(const DistStnModel& model, const Tensor& image);

struct CrossReconstruction {
  Tensor self;   // decode(f_1, r_1)
  Tensor cross;  // decode(f_1, warp(r_2 by P(r_2, r_1)))
};
CrossReconstruction cross_reconstruct(const DistStnModel& model, const Tensor& x_1, const Tensor& x_2);

}  // namespace diststn

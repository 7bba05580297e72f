#include "diststn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "diststn/errors.hpp"
#include "diststn/nn.hpp"
#include "diststn/ops.hpp"

namespace diststn {

namespace {

constexpr ConvGeometry kDown{2, 1};
constexpr ConvGeometry kSame{1, 1};

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// He-uniform for layers followed by relu, LeCun-uniform for linear outputs.
double relu_bound(double fan_in) { return std::sqrt(6.0 / fan_in); }
double linear_bound(double fan_in) { return std::sqrt(3.0 / fan_in); }

}  // namespace

void ModelConfig::validate() const {
  if (image_size < 8 || image_size % 4 != 0) {
    throw InvalidArgument("image size must be a multiple of 4 and at least 8, got " + std::to_string(image_size));
  }
  if (num_classes < 2) throw InvalidArgument("need at least 2 classes");
  if (conv1_channels == 0 || conv2_channels == 0 || identity_channels == 0 || pose_channels == 0) {
    throw InvalidArgument("channel counts must be positive");
  }
}

ModelConfig ModelConfig::tiny(std::size_t num_classes) {
  ModelConfig c;
  c.image_size = 16;
  c.num_classes = num_classes;
  c.conv1_channels = 2;
  c.conv2_channels = 3;
  c.identity_channels = 2;
  c.pose_channels = 2;
  return c;
}

DistStnModel::DistStnModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const ModelConfig& c = config_;
  const std::size_t fc = c.feature_channels();

  ParamGroup encoder{"encoder", false, {}};
  encoder.add("conv1.weight", uniform_tensor({c.conv1_channels, 1, 4, 4}, relu_bound(16.0), rng));
  encoder.add("conv1.bias", Tensor({c.conv1_channels}));
  encoder.add("conv2.weight",
              uniform_tensor({c.conv2_channels, c.conv1_channels, 4, 4}, relu_bound(16.0 * c.conv1_channels), rng));
  encoder.add("conv2.bias", Tensor({c.conv2_channels}));
  encoder.add("conv3.weight", uniform_tensor({fc, c.conv2_channels, 3, 3}, relu_bound(9.0 * c.conv2_channels), rng));
  encoder.add("conv3.bias", Tensor({fc}));

  // Transposed-conv weights are [in x out x kh x kw]; each output pixel sees
  // in*kh*kw/stride^2 inputs.
  ParamGroup decoder{"decoder", false, {}};
  decoder.add("deconv1.weight", uniform_tensor({fc, c.conv2_channels, 3, 3}, relu_bound(9.0 * fc), rng));
  decoder.add("deconv1.bias", Tensor({c.conv2_channels}));
  decoder.add("deconv2.weight",
              uniform_tensor({c.conv2_channels, c.conv1_channels, 4, 4}, relu_bound(4.0 * c.conv2_channels), rng));
  decoder.add("deconv2.bias", Tensor({c.conv1_channels}));
  decoder.add("deconv3.weight", uniform_tensor({c.conv1_channels, 1, 4, 4}, linear_bound(4.0 * c.conv1_channels), rng));
  decoder.add("deconv3.bias", Tensor({1}));

  // Last layer starts at the identity transform.
  const std::size_t pose_in = 2 * c.pose_size();
  ParamGroup pose{"pose", true, {}};
  pose.add("fc1.weight", uniform_tensor({kPoseHidden1, pose_in}, relu_bound(static_cast<double>(pose_in)), rng));
  pose.add("fc1.bias", Tensor({kPoseHidden1}));
  pose.add("fc2.weight", uniform_tensor({kPoseHidden2, kPoseHidden1}, relu_bound(kPoseHidden1), rng));
  pose.add("fc2.bias", Tensor({kPoseHidden2}));
  pose.add("fc3.weight", Tensor({kPoseOutputs, kPoseHidden2}));
  pose.add("fc3.bias", AffineParams::identity().to_tensor());

  ParamGroup classifier{"classifier", false, {}};
  classifier.add("weight", uniform_tensor({c.num_classes, c.identity_size()},
                                          linear_bound(static_cast<double>(c.identity_size())), rng));
  classifier.add("bias", Tensor({c.num_classes}));

  groups_.push_back(std::move(encoder));
  groups_.push_back(std::move(decoder));
  groups_.push_back(std::move(pose));
  groups_.push_back(std::move(classifier));
}

ParamGroup& DistStnModel::group(std::string_view name) {
  for (auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw InvalidArgument("no parameter group " + std::string(name));
}

const ParamGroup& DistStnModel::group(std::string_view name) const {
  return const_cast<DistStnModel*>(this)->group(name);
}

const Tensor& DistStnModel::param(std::string_view group_name, std::string_view param_name) const {
  for (const auto& p : group(group_name).params) {
    if (p.name == param_name) return p.value;
  }
  throw InvalidArgument("no parameter " + std::string(group_name) + "." + std::string(param_name));
}

std::vector<std::pair<std::string, Tensor>> DistStnModel::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& g : groups_) {
    for (const auto& p : g.params) out.emplace_back(g.name + "." + p.name, p.value);
  }
  return out;
}

std::size_t DistStnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.parameter_count();
  return n;
}

DistStnModel DistStnModel::clone() const {
  DistStnModel copy = *this;
  for (auto& g : copy.groups_) {
    for (auto& p : g.params) p.value = p.value.clone();
  }
  return copy;
}

void DistStnModel::copy_values_from(const DistStnModel& other) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (std::size_t i = 0; i < groups_[g].params.size(); ++i) {
      auto src = other.groups_.at(g).params.at(i).value.data();
      auto dst = groups_[g].params[i].value.data();
      if (src.size() != dst.size()) throw ShapeMismatch("copy_values_from: architectures differ");
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
}

void DistStnModel::zero_grad() {
  for (auto& g : groups_) g.zero_grad();
}

Tensor image_tensor(std::span<const float> pixels, std::size_t size) {
  if (pixels.size() != size * size) {
    throw ShapeMismatch("image of " + std::to_string(pixels.size()) + " pixels is not " + std::to_string(size) +
                        "x" + std::to_string(size));
  }
  return Tensor({1, size, size}, std::vector<double>(pixels.begin(), pixels.end()));
}

DisentangledFeatures encode(Tape& tape, const DistStnModel& model, const Tensor& image) {
  const ModelConfig& c = model.config();
  if (image.shape() != Shape{1, c.image_size, c.image_size}) {
    throw ShapeMismatch("encode: expected image [1x" + std::to_string(c.image_size) + "x" +
                        std::to_string(c.image_size) + "], got " + shape_to_string(image.shape()));
  }
  Tensor h = conv2d(tape, image, model.param("encoder", "conv1.weight"), kDown);
  h = relu(tape, add_channel_bias(tape, h, model.param("encoder", "conv1.bias")));
  h = conv2d(tape, h, model.param("encoder", "conv2.weight"), kDown);
  h = relu(tape, add_channel_bias(tape, h, model.param("encoder", "conv2.bias")));
  h = conv2d(tape, h, model.param("encoder", "conv3.weight"), kSame);
  h = relu(tape, add_channel_bias(tape, h, model.param("encoder", "conv3.bias")));
  auto [f, r] = split_channels(tape, h, c.identity_channels);
  return {f, r};
}

Tensor decode(Tape& tape, const DistStnModel& model, const Tensor& identity, const Tensor& pose) {
  const ModelConfig& c = model.config();
  const Shape f_shape{c.identity_channels, c.feature_extent(), c.feature_extent()};
  const Shape r_shape{c.pose_channels, c.feature_extent(), c.feature_extent()};
  if (identity.shape() != f_shape || pose.shape() != r_shape) {
    throw ShapeMismatch("decode: features " + shape_to_string(identity.shape()) + " / " +
                        shape_to_string(pose.shape()) + " do not match the model");
  }
  Tensor h = concat_channels(tape, identity, pose);
  h = conv2d_transpose(tape, h, model.param("decoder", "deconv1.weight"), kSame);
  h = relu(tape, add_channel_bias(tape, h, model.param("decoder", "deconv1.bias")));
  h = conv2d_transpose(tape, h, model.param("decoder", "deconv2.weight"), kDown);
  h = relu(tape, add_channel_bias(tape, h, model.param("decoder", "deconv2.bias")));
  h = conv2d_transpose(tape, h, model.param("decoder", "deconv3.weight"), kDown);
  return add_channel_bias(tape, h, model.param("decoder", "deconv3.bias"));
}

Tensor pose_discrepancy(Tape& tape, const DistStnModel& model, const Tensor& pose_from, const Tensor& pose_to) {
  const ModelConfig& c = model.config();
  const Shape r_shape{c.pose_channels, c.feature_extent(), c.feature_extent()};
  if (pose_from.shape() != r_shape || pose_to.shape() != r_shape) {
    throw ShapeMismatch("pose_discrepancy: pose maps " + shape_to_string(pose_from.shape()) + " / " +
                        shape_to_string(pose_to.shape()) + " do not match the model");
  }
  Tensor h = reshape(tape, concat_channels(tape, pose_from, pose_to), {2 * c.pose_size()});
  h = relu(tape, dense(tape, h, model.param("pose", "fc1.weight"), model.param("pose", "fc1.bias")));
  h = relu(tape, dense(tape, h, model.param("pose", "fc2.weight"), model.param("pose", "fc2.bias")));
  return dense(tape, h, model.param("pose", "fc3.weight"), model.param("pose", "fc3.bias"));
}

Tensor class_logits(Tape& tape, const DistStnModel& model, const Tensor& identity) {
  Tensor flat = reshape(tape, identity, {identity.size()});
  return dense(tape, flat, model.param("classifier", "weight"), model.param("classifier", "bias"));
}

std::vector<double> classify(const DistStnModel& model, const Tensor& identity) {
  Tape off(false);
  return softmax(class_logits(off, model, identity).data());
}

namespace {

// Pose maps of `from` warped onto the pose of `to`.
Tensor transported_pose(Tape& tape, const DistStnModel& model, const Tensor& pose_from, const Tensor& pose_to) {
  const std::size_t extent = model.config().feature_extent();
  Tensor theta = pose_discrepancy(tape, model, pose_from, pose_to);
  return grid_sample(tape, pose_from, affine_grid(tape, theta, extent, extent));
}

}  // namespace

PairLoss pair_loss(Tape& tape, const DistStnModel& model, const Tensor& x_i, std::size_t y_i, const Tensor& x_j,
                   std::size_t /*y_j*/) {
  const LossWeights& w = model.loss_weights();
  DisentangledFeatures fi = encode(tape, model, x_i);
  DisentangledFeatures fj = encode(tape, model, x_j);

  Tensor cls = softmax_cross_entropy(tape, class_logits(tape, model, fi.identity), y_i);
  Tensor cross = mae_loss(tape, x_j, decode(tape, model, fj.identity, transported_pose(tape, model, fi.pose, fj.pose)));
  Tensor self_i = mae_loss(tape, x_i, decode(tape, model, fi.identity, fi.pose));
  Tensor self_j = mae_loss(tape, x_j, decode(tape, model, fj.identity, fj.pose));

  Tensor total = add(tape, cls, scale(tape, cross, w.alpha));
  total = add(tape, total, scale(tape, self_i, w.beta));
  total = add(tape, total, scale(tape, self_j, w.beta));

  LossBreakdown terms{cls.item(), cross.item(), self_i.item(), self_j.item(), total.item()};
  return {total, terms};
}

Tensor sample_loss(Tape& tape, const DistStnModel& model, const Tensor& x, std::size_t y) {
  DisentangledFeatures f = encode(tape, model, x);
  return softmax_cross_entropy(tape, class_logits(tape, model, f.identity), y);
}

std::size_t predict(const DistStnModel& model, const Tensor& image) {
  Tape off(false);
  const std::vector<double> p = classify(model, encode(off, model, image).identity);
  // max_element returns the first maximum.
  return static_cast<std::size_t>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
}

CrossReconstruction cross_reconstruct(const DistStnModel& model, const Tensor& x_1, const Tensor& x_2) {
  Tape off(false);
  DisentangledFeatures f1 = encode(off, model, x_1);
  DisentangledFeatures f2 = encode(off, model, x_2);
  Tensor self = decode(off, model, f1.identity, f1.pose);
  Tensor cross = decode(off, model, f1.identity, transported_pose(off, model, f2.pose, f1.pose));
  return {self, cross};
}

}  // namespace diststn

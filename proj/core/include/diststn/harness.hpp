#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diststn/data_synth.hpp"
#include "diststn/model.hpp"
#include "diststn/optim.hpp"
#include "diststn/split.hpp"

namespace diststn {

// ---------------------------------------------------------------------------
// Data in tensor form

struct LabeledImages {
  std::vector<Tensor> images;  // [1 x S x S]
  std::vector<std::size_t> labels;
  std::vector<double> aspects;

  std::size_t size() const { return images.size(); }
};

LabeledImages materialize(std::span<const TargetChip> chips, std::span<const std::size_t> indices);
LabeledImages materialize(std::span<const TargetChip> chips);

struct SplitData {
  LabeledImages train;
  LabeledImages validation;
  LabeledImages test;
};
SplitData materialize(std::span<const TargetChip> chips, const PaaSplit& split);

// ---------------------------------------------------------------------------
// Pair sampling

using IndexPair = std::pair<std::size_t, std::size_t>;

// Two seeded permutations of [0, n) zipped positionwise. A position where
// both agree is swapped with a later slot of the second permutation, so every
// pair has distinct members. Reshuffled per (seed, epoch).
// Throws TooFewSamples when n < 2.
std::vector<IndexPair> pair_stream(std::size_t n, std::uint64_t seed, std::size_t epoch);

// Seeded permutation of [0, n) for single-sample training.
std::vector<std::size_t> sample_stream(std::size_t n, std::uint64_t seed, std::size_t epoch);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.004;
  WeightDecayMode decay_mode = WeightDecayMode::kCoupled;
  LossWeights loss{1.0, 1.0};
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidArgument
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double classification = 0.0;
  double cross_reconstruction = 0.0;
  double self_reconstruction_i = 0.0;
  double self_reconstruction_j = 0.0;
  double total = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct TrainHooks {
  // Replaces validation accuracy as the early-stopping metric.
  std::function<double(const DistStnModel&)> validation_metric;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  DistStnModel model;  // snapshot with the best validation metric
  std::vector<EpochReport> epochs;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

// Pairwise objective with SGD+momentum, gradients averaged per batch of pairs.
// Keeps the snapshot with the best validation metric; stops after `patience`
// epochs without strict improvement or at max_epochs.
TrainResult train(DistStnModel model, const SplitData& data, const TrainConfig& config, const TrainHooks& hooks = {});

// Plain CNN: encoder trunk + classifier, cross-entropy only, one sample at a
// time, same optimizer and early stopping.
TrainResult baseline_cnn_train(DistStnModel model, const SplitData& data, const TrainConfig& config,
                               const TrainHooks& hooks = {});

// ---------------------------------------------------------------------------
// Evaluation

inline constexpr std::size_t kAspectBins = 36;

struct AccuracyReport {
  double overall = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::size_t> class_correct, class_total;
  std::array<std::size_t, kAspectBins> bin_correct{}, bin_total{};
  std::vector<std::size_t> predictions;

  double class_accuracy(std::size_t c) const;
  double bin_accuracy(std::size_t bin) const;
};

// Throws EmptySet for an empty set.
AccuracyReport evaluate(const DistStnModel& model, const LabeledImages& set);
// Accounting over precomputed predictions.
AccuracyReport tally(std::span<const std::size_t> predictions, const LabeledImages& set, std::size_t num_classes);

struct ArcAccuracy {
  double seen = 0.0;
  double unseen = 0.0;
  std::size_t seen_total = 0;
  std::size_t unseen_total = 0;
  double deficit() const { return seen - unseen; }
};

// Accuracy on `classes`, split by whether the aspect lies in `arc`.
ArcAccuracy arc_accuracy(const AccuracyReport& report, const LabeledImages& set, const std::set<std::uint32_t>& classes,
                         Arc arc);

// ---------------------------------------------------------------------------
// Reporting

// One row per epoch then a "best" summary row.
std::string metrics_csv(const TrainResult& result);
// epoch,wall_seconds rows (kept apart so metrics files are reproducible).
std::string timing_csv(const TrainResult& result);

// Binary 16-bit portable graymap (P5, maxval 65535, big-endian samples).
std::vector<std::uint8_t> encode_pgm16(std::span<const double> pixels, std::size_t width, std::size_t height);

struct ReconstructionRow {
  double mae_self_vs_cross = 0.0;  // mae(x_hat_1, x_tilde_1)
  double mae_inputs = 0.0;         // mae(x_1, x_2)
};

struct ReconstructionSummary {
  std::vector<ReconstructionRow> rows;
  std::vector<std::filesystem::path> files;
  double mean_self_vs_cross() const;
  double mean_inputs() const;
};

// Per pair, a column of four S x S tiles (x_1, x_2, x_hat_1, x_tilde_1) scaled
// together to the full 16-bit range, written as pair_NNN.pgm; plus
// summary.csv. With an empty out_dir only the numbers are computed.
ReconstructionSummary reconstruction_report(const DistStnModel& model, std::span<const std::pair<Tensor, Tensor>> pairs,
                                            const std::filesystem::path& out_dir);

}  // namespace diststn

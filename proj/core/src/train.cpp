#include <chrono>

#include "diststn/errors.hpp"
#include "diststn/harness.hpp"
#include "diststn/ops.hpp"

namespace diststn {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(momentum > 0.0) || !(weight_decay > 0.0)) {
    throw InvalidArgument("learning rate, momentum and weight decay must be positive");
  }
  if (momentum >= 1.0) throw InvalidArgument("momentum must be below 1");
  if (loss.alpha < 0.0 || loss.beta < 0.0) throw InvalidArgument("loss weights must be non-negative");
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
}

LabeledImages materialize(std::span<const TargetChip> chips, std::span<const std::size_t> indices) {
  LabeledImages out;
  out.images.reserve(indices.size());
  for (std::size_t i : indices) {
    const TargetChip& c = chips[i];
    out.images.push_back(image_tensor(c.image, c.size));
    out.labels.push_back(c.class_id);
    out.aspects.push_back(c.aspect_deg);
  }
  return out;
}

LabeledImages materialize(std::span<const TargetChip> chips) {
  std::vector<std::size_t> all(chips.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return materialize(chips, all);
}

SplitData materialize(std::span<const TargetChip> chips, const PaaSplit& split) {
  return {materialize(chips, split.train), materialize(chips, split.validation), materialize(chips, split.test)};
}

namespace {

// Runs one optimizer step per batch of `work` items. `item_loss` records one
// item's loss on a tape, scaled by `weight`, and adds its terms to `sums`.
template <typename Item, typename ItemLoss>
void run_epoch(DistStnModel& model, const std::vector<Item>& work, const TrainConfig& config, ItemLoss&& item_loss,
               LossBreakdown& sums) {
  const SgdOptions sgd{config.lr, config.momentum, config.weight_decay, config.decay_mode};
  for (std::size_t start = 0; start < work.size(); start += config.batch_size) {
    const std::size_t end = std::min(work.size(), start + config.batch_size);
    const double weight = 1.0 / static_cast<double>(end - start);
    for (std::size_t k = start; k < end; ++k) {
      Tape tape;
      Tensor loss = item_loss(tape, work[k], weight, sums);
      backward(loss, tape);
    }
    sgd_momentum_step(model.groups(), sgd);
  }
}

template <typename EpochFn>
TrainResult fit(DistStnModel model, const SplitData& data, const TrainConfig& config, const TrainHooks& hooks,
                EpochFn&& epoch_fn) {
  config.validate();
  model.loss_weights() = config.loss;
  model.zero_grad();
  auto metric = [&](const DistStnModel& m) {
    if (hooks.validation_metric) return hooks.validation_metric(m);
    return evaluate(m, data.validation).overall;
  };

  TrainResult result{model.clone(), {}, 0, -1.0};
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    EpochReport report = epoch_fn(model, epoch);
    report.epoch = epoch;
    report.val_accuracy = metric(model);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.epochs.push_back(report);
    if (hooks.on_epoch) hooks.on_epoch(report);

    if (report.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = report.val_accuracy;
      result.best_epoch = epoch;
      result.model.copy_values_from(model);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace

TrainResult train(DistStnModel model, const SplitData& data, const TrainConfig& config, const TrainHooks& hooks) {
  const LabeledImages& set = data.train;
  return fit(std::move(model), data, config, hooks, [&](DistStnModel& m, std::size_t epoch) {
    const auto pairs = pair_stream(set.size(), config.seed, epoch);
    LossBreakdown sums;
    run_epoch(m, pairs, config,
              [&](Tape& tape, const IndexPair& p, double weight, LossBreakdown& acc) {
                PairLoss pl = pair_loss(tape, m, set.images[p.first], set.labels[p.first], set.images[p.second],
                                        set.labels[p.second]);
                acc.classification += pl.terms.classification;
                acc.cross_reconstruction += pl.terms.cross_reconstruction;
                acc.self_reconstruction_i += pl.terms.self_reconstruction_i;
                acc.self_reconstruction_j += pl.terms.self_reconstruction_j;
                acc.total += pl.terms.total;
                return scale(tape, pl.total, weight);
              },
              sums);
    const double n = static_cast<double>(pairs.size());
    EpochReport r;
    r.classification = sums.classification / n;
    r.cross_reconstruction = sums.cross_reconstruction / n;
    r.self_reconstruction_i = sums.self_reconstruction_i / n;
    r.self_reconstruction_j = sums.self_reconstruction_j / n;
    r.total = sums.total / n;
    return r;
  });
}

TrainResult baseline_cnn_train(DistStnModel model, const SplitData& data, const TrainConfig& config,
                               const TrainHooks& hooks) {
  const LabeledImages& set = data.train;
  if (set.size() == 0) throw TooFewSamples("no training samples");
  TrainConfig cfg = config;
  cfg.loss = {0.0, 0.0};
  return fit(std::move(model), data, cfg, hooks, [&](DistStnModel& m, std::size_t epoch) {
    const auto order = sample_stream(set.size(), cfg.seed, epoch);
    LossBreakdown sums;
    run_epoch(m, order, cfg,
              [&](Tape& tape, std::size_t i, double weight, LossBreakdown& acc) {
                Tensor loss = sample_loss(tape, m, set.images[i], set.labels[i]);
                acc.classification += loss.item();
                return scale(tape, loss, weight);
              },
              sums);
    EpochReport r;
    r.classification = sums.classification / static_cast<double>(order.size());
    r.total = r.classification;
    return r;
  });
}

}  // namespace diststn

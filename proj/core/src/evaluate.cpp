#include <algorithm>
#include <cmath>

#include "diststn/errors.hpp"
#include "diststn/harness.hpp"

namespace diststn {

namespace {

std::size_t aspect_bin(double aspect_deg) {
  const auto bin = static_cast<std::size_t>(normalize_degrees(aspect_deg) / (360.0 / kAspectBins));
  return std::min(bin, kAspectBins - 1);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double AccuracyReport::class_accuracy(std::size_t c) const { return ratio(class_correct.at(c), class_total.at(c)); }

double AccuracyReport::bin_accuracy(std::size_t bin) const { return ratio(bin_correct.at(bin), bin_total.at(bin)); }

AccuracyReport tally(std::span<const std::size_t> predictions, const LabeledImages& set, std::size_t num_classes) {
  if (set.size() == 0) throw EmptySet("cannot evaluate an empty set");
  if (predictions.size() != set.size()) throw ShapeMismatch("one prediction per sample required");
  AccuracyReport r;
  r.class_correct.assign(num_classes, 0);
  r.class_total.assign(num_classes, 0);
  r.predictions.assign(predictions.begin(), predictions.end());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t label = set.labels[i];
    if (label >= num_classes) throw LabelOutOfRange("label " + std::to_string(label) + " outside the model's classes");
    const bool hit = predictions[i] == label;
    const std::size_t bin = aspect_bin(set.aspects[i]);
    r.total++;
    r.class_total[label]++;
    r.bin_total[bin]++;
    if (hit) {
      r.correct++;
      r.class_correct[label]++;
      r.bin_correct[bin]++;
    }
  }
  r.overall = ratio(r.correct, r.total);
  return r;
}

AccuracyReport evaluate(const DistStnModel& model, const LabeledImages& set) {
  if (set.size() == 0) throw EmptySet("cannot evaluate an empty set");
  std::vector<std::size_t> predictions;
  predictions.reserve(set.size());
  for (const auto& image : set.images) predictions.push_back(predict(model, image));
  return tally(predictions, set, model.config().num_classes);
}

ArcAccuracy arc_accuracy(const AccuracyReport& report, const LabeledImages& set, const std::set<std::uint32_t>& classes,
                         Arc arc) {
  std::size_t seen_hit = 0, unseen_hit = 0;
  ArcAccuracy a;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!classes.count(static_cast<std::uint32_t>(set.labels[i]))) continue;
    const bool hit = report.predictions.at(i) == set.labels[i];
    if (in_arc(set.aspects[i], arc)) {
      a.seen_total++;
      seen_hit += hit;
    } else {
      a.unseen_total++;
      unseen_hit += hit;
    }
  }
  a.seen = ratio(seen_hit, a.seen_total);
  a.unseen = ratio(unseen_hit, a.unseen_total);
  return a;
}

}  // namespace diststn

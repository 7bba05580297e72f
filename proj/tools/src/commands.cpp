#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "diststn/checkpoint.hpp"
#include "diststn/chip_io.hpp"
#include "diststn/errors.hpp"
#include "diststn/gradcheck_suite.hpp"
#include "diststn/split.hpp"
#include "run_manifest.hpp"

namespace diststn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

json train_config_json(const TrainArgs& a) {
  return {{"split", a.split.string()},
          {"lr", a.train.lr},
          {"momentum", a.train.momentum},
          {"weight_decay", a.train.weight_decay},
          {"decay", a.decoupled_decay ? "decoupled" : "coupled"},
          {"alpha", a.train.loss.alpha},
          {"beta", a.train.loss.beta},
          {"max_epochs", a.train.max_epochs},
          {"patience", a.train.patience},
          {"batch", a.train.batch_size},
          {"baseline", a.baseline},
          {"channels", {a.conv1, a.conv2, a.identity, a.pose}}};
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  ArcAccuracy arc;
  fs::path checkpoint;
};

ModelConfig model_config_for(const TrainArgs& a, const Dataset& d) {
  if (d.chips.empty()) throw EmptySet("dataset has no chips");
  std::uint32_t max_class = 0;
  for (const auto& c : d.chips) max_class = std::max(max_class, c.class_id);
  ModelConfig mc;
  mc.image_size = d.chips.front().size;
  mc.num_classes = max_class + 1;
  mc.conv1_channels = a.conv1;
  mc.conv2_channels = a.conv2;
  mc.identity_channels = a.identity;
  mc.pose_channels = a.pose;
  mc.validate();
  return mc;
}

// Trains every seed of `a` into out/seed_<s>/ and writes out/summary.csv.
std::vector<SeedOutcome> train_seeds(const TrainArgs& a, const LoadedSplit& loaded, const SplitData& data,
                                     const fs::path& out) {
  const ModelConfig mc = model_config_for(a, loaded.dataset);
  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t seed : a.seeds) {
    TrainConfig cfg = a.train;
    cfg.seed = seed;
    cfg.decay_mode = a.decoupled_decay ? WeightDecayMode::kDecoupled : WeightDecayMode::kCoupled;
    TrainHooks hooks;
    hooks.on_epoch = [seed](const EpochReport& r) {
      std::printf("seed %llu epoch %zu loss %.6f cls %.6f val_acc %.4f\n", static_cast<unsigned long long>(seed),
                  r.epoch, r.total, r.classification, r.val_accuracy);
      std::fflush(stdout);
    };
    DistStnModel init(mc, seed);
    TrainResult result = a.baseline ? baseline_cnn_train(std::move(init), data, cfg, hooks)
                                    : train(std::move(init), data, cfg, hooks);

    const fs::path dir = out / ("seed_" + std::to_string(seed));
    SeedOutcome o;
    o.seed = seed;
    o.best_epoch = result.best_epoch;
    o.epochs_run = result.epochs.size();
    o.val_accuracy = result.best_val_accuracy;
    o.checkpoint = dir / "model.ckpt";
    save_checkpoint(result.model, o.checkpoint);
    write_text(dir / "metrics.csv", metrics_csv(result));
    write_text(dir / "timing.csv", timing_csv(result));
    if (data.test.size() > 0) {
      const AccuracyReport rep = evaluate(result.model, data.test);
      o.test_accuracy = rep.overall;
      if (!loaded.split.noncoop_classes.empty()) {
        o.arc = arc_accuracy(rep, data.test, loaded.split.noncoop_classes, loaded.split.noncoop_arc);
      }
    }
    std::printf("seed %llu best_epoch %zu val_acc %.4f test_acc %.4f\n", static_cast<unsigned long long>(seed),
                o.best_epoch, o.val_accuracy, o.test_accuracy);
    outcomes.push_back(o);
  }

  std::ostringstream csv;
  csv << "seed,best_epoch,epochs_run,val_accuracy,test_accuracy,seen_arc_accuracy,unseen_arc_accuracy\n";
  double val = 0.0, test = 0.0, seen = 0.0, unseen = 0.0;
  for (const auto& o : outcomes) {
    csv << o.seed << ',' << o.best_epoch << ',' << o.epochs_run << ',' << num(o.val_accuracy) << ','
        << num(o.test_accuracy) << ',' << num(o.arc.seen) << ',' << num(o.arc.unseen) << '\n';
    val += o.val_accuracy;
    test += o.test_accuracy;
    seen += o.arc.seen;
    unseen += o.arc.unseen;
  }
  const double n = static_cast<double>(outcomes.size());
  csv << "mean,,," << num(val / n) << ',' << num(test / n) << ',' << num(seen / n) << ',' << num(unseen / n) << '\n';
  write_text(out / "summary.csv", csv.str());
  std::printf("mean val_acc %.4f test_acc %.4f over %zu seeds\n", val / n, test / n, outcomes.size());
  return outcomes;
}

// Images selected by --split/--subset or --dataset.
LabeledImages load_images(const EvalArgs& a, std::set<std::uint32_t>* noncoop, Arc* arc) {
  if (!a.split.empty()) {
    LoadedSplit loaded = read_split_manifest(a.split);
    const auto& chips = loaded.dataset.chips;
    if (noncoop) *noncoop = loaded.split.noncoop_classes;
    if (arc) *arc = loaded.split.noncoop_arc;
    if (a.subset == "train") return materialize(chips, loaded.split.train);
    if (a.subset == "validation") return materialize(chips, loaded.split.validation);
    if (a.subset == "test") return materialize(chips, loaded.split.test);
    if (a.subset == "all") return materialize(chips);
    throw InvalidArgument("subset must be train, validation, test or all");
  }
  if (!a.dataset.empty()) return materialize(read_dataset(a.dataset).chips);
  throw InvalidArgument("one of --split or --dataset is required");
}

}  // namespace

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv) {
  RunManifest m;
  m.command = "generate";
  m.argv = argv;
  const auto& d = a.dataset;
  m.config = {{"classes", d.num_classes},   {"scatterers", d.scatterers},
              {"size", d.size},             {"angle_step", d.angle_step_deg},
              {"train_depression", d.train_depression_deg},
              {"test_depression", d.test_depression_deg},
              {"speckle", d.speckle},       {"looks", d.looks}};
  m.seeds = {d.seed};
  m.artifacts = {kManifestName, "chips/"};
  m.write(a.out);

  const auto chips = generate_dataset(d);
  write_dataset(chips, a.out);
  std::printf("%zu chips (%zu classes x %zu aspects x 2 depressions) -> %s\n", chips.size(), d.num_classes,
              aspect_steps(d.angle_step_deg), a.out.string().c_str());
  return 0;
}

int cmd_split(const SplitArgs& a, const std::vector<std::string>& argv) {
  const Dataset dataset = read_dataset(a.dataset);
  std::set<std::uint32_t> classes;
  for (const auto& c : dataset.chips) classes.insert(c.class_id);
  if (a.noncoop > classes.size()) {
    throw InvalidArgument("--noncoop must be in [0, " + std::to_string(classes.size()) + "]");
  }

  RunManifest m;
  m.command = "split";
  m.argv = argv;
  m.config = {{"dataset", a.dataset.string()},         {"noncoop", a.noncoop},
              {"arc", a.arc},                          {"coop_fraction", a.coop_fraction},
              {"val_fraction", a.val_fraction}};
  m.seeds = {a.seed};
  m.artifacts = {a.out.filename().string()};
  m.write(a.out.parent_path().empty() ? fs::path(".") : a.out.parent_path());

  SplitOptions o;
  o.noncoop_classes = choose_noncoop_classes(classes.size(), a.noncoop, a.seed);
  o.arc = parse_arc(a.arc);
  o.coop_fraction = a.coop_fraction;
  o.val_fraction = a.val_fraction;
  o.seed = a.seed;
  const PaaSplit split = build_paa_split(dataset.chips, o);
  const auto problems = validate_split(split, dataset.chips);
  for (const auto& p : problems) std::fprintf(stderr, "split problem: %s\n", p.c_str());
  if (!problems.empty()) return 1;
  write_split_manifest(split, dataset, a.dataset, a.out);

  std::string ids;
  for (auto c : split.noncoop_classes) ids += (ids.empty() ? "" : " ") + std::to_string(c);
  std::printf("train %zu validation %zu test %zu; non-cooperative classes [%s] restricted to %s -> %s\n",
              split.train.size(), split.validation.size(), split.test.size(), ids.c_str(),
              to_string(split.noncoop_arc).c_str(), a.out.string().c_str());
  return 0;
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  RunManifest m;
  m.command = "train";
  m.argv = argv;
  m.config = train_config_json(a);
  m.seeds = a.seeds;
  m.artifacts = {"summary.csv"};
  for (auto s : a.seeds) {
    const std::string d = "seed_" + std::to_string(s) + "/";
    m.artifacts.insert(m.artifacts.end(), {d + "model.ckpt", d + "metrics.csv", d + "timing.csv"});
  }

  a.train.validate();
  const LoadedSplit loaded = read_split_manifest(a.split);
  const SplitData data = materialize(loaded.dataset.chips, loaded.split);
  m.write(a.out);
  train_seeds(a, loaded, data, a.out);
  return 0;
}

int cmd_gridsearch(const GridArgs& a, const std::vector<std::string>& argv) {
  if (a.alphas.empty() || a.betas.empty()) throw InvalidArgument("alpha and beta lists must be non-empty");
  auto cell_name = [](double alpha, double beta) { return "alpha_" + num(alpha) + "_beta_" + num(beta); };

  RunManifest m;
  m.command = "gridsearch";
  m.argv = argv;
  m.config = train_config_json(a.base);
  m.config["alphas"] = a.alphas;
  m.config["betas"] = a.betas;
  m.seeds = a.base.seeds;
  m.artifacts = {"grid.csv", "best/"};
  for (double al : a.alphas) {
    for (double be : a.betas) m.artifacts.push_back("cells/" + cell_name(al, be) + "/");
  }

  a.base.train.validate();
  const LoadedSplit loaded = read_split_manifest(a.base.split);
  const SplitData data = materialize(loaded.dataset.chips, loaded.split);
  m.write(a.base.out);

  std::ostringstream csv;
  csv << "alpha,beta,mean_val_accuracy,mean_test_accuracy\n";
  double best_val = -1.0;
  fs::path best_cell;
  for (double al : a.alphas) {
    for (double be : a.betas) {
      TrainArgs cell = a.base;
      cell.train.loss = {al, be};
      const fs::path dir = a.base.out / "cells" / cell_name(al, be);
      std::printf("cell alpha=%s beta=%s\n", num(al).c_str(), num(be).c_str());
      const auto outcomes = train_seeds(cell, loaded, data, dir);
      double val = 0.0, test = 0.0;
      for (const auto& o : outcomes) {
        val += o.val_accuracy;
        test += o.test_accuracy;
      }
      val /= static_cast<double>(outcomes.size());
      test /= static_cast<double>(outcomes.size());
      csv << num(al) << ',' << num(be) << ',' << num(val) << ',' << num(test) << '\n';
      if (val > best_val) {
        best_val = val;
        best_cell = dir;
      }
    }
  }
  write_text(a.base.out / "grid.csv", csv.str());

  const fs::path best = a.base.out / "best";
  fs::remove_all(best);
  fs::copy(best_cell, best, fs::copy_options::recursive);
  std::printf("best cell %s (mean val_acc %.4f) copied to %s\n", best_cell.filename().string().c_str(), best_val,
              best.string().c_str());
  return 0;
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  RunManifest m;
  m.command = "eval";
  m.argv = argv;
  m.config = {{"checkpoint", a.checkpoint.string()},
              {"split", a.split.string()},
              {"dataset", a.dataset.string()},
              {"subset", a.subset}};
  m.artifacts = {"accuracy.csv"};

  const DistStnModel model = load_checkpoint(a.checkpoint);
  std::set<std::uint32_t> noncoop;
  Arc arc = Arc::kFirstHalf;
  const LabeledImages set = load_images(a, &noncoop, &arc);
  m.write(a.out);
  const AccuracyReport rep = evaluate(model, set);

  std::ostringstream csv;
  csv << "metric,key,correct,total,accuracy\n";
  csv << "overall,," << rep.correct << ',' << rep.total << ',' << num(rep.overall) << '\n';
  for (std::size_t c = 0; c < rep.class_total.size(); ++c) {
    if (rep.class_total[c] == 0) continue;
    csv << "class," << c << ',' << rep.class_correct[c] << ',' << rep.class_total[c] << ','
        << num(rep.class_accuracy(c)) << '\n';
  }
  for (std::size_t b = 0; b < kAspectBins; ++b) {
    if (rep.bin_total[b] == 0) continue;
    csv << "aspect_bin," << b * (360 / kAspectBins) << ',' << rep.bin_correct[b] << ',' << rep.bin_total[b] << ','
        << num(rep.bin_accuracy(b)) << '\n';
  }
  if (!noncoop.empty()) {
    const ArcAccuracy arcs = arc_accuracy(rep, set, noncoop, arc);
    csv << "noncoop_seen_arc,,," << arcs.seen_total << ',' << num(arcs.seen) << '\n';
    csv << "noncoop_unseen_arc,,," << arcs.unseen_total << ',' << num(arcs.unseen) << '\n';
  }
  write_text(a.out / "accuracy.csv", csv.str());
  std::printf("accuracy %.4f (%zu/%zu)\n", rep.overall, rep.correct, rep.total);
  return 0;
}

int cmd_reconstruct(const ReconstructArgs& a, const std::vector<std::string>& argv) {
  RunManifest m;
  m.command = "reconstruct";
  m.argv = argv;
  m.config = {{"checkpoint", a.source.checkpoint.string()},
              {"split", a.source.split.string()},
              {"dataset", a.source.dataset.string()},
              {"subset", a.source.subset},
              {"pairs", a.pairs}};
  m.seeds = {a.seed};
  m.artifacts = {"summary.csv"};
  char name[32];
  for (std::size_t k = 0; k < a.pairs; ++k) {
    std::snprintf(name, sizeof name, "pair_%03zu.pgm", k);
    m.artifacts.push_back(name);
  }

  const DistStnModel model = load_checkpoint(a.source.checkpoint);
  const LabeledImages set = load_images(a.source, nullptr, nullptr);
  m.write(a.source.out);
  const auto stream = pair_stream(set.size(), a.seed, 1);
  if (a.pairs > stream.size()) throw InvalidArgument("asked for more pairs than the set provides");
  std::vector<std::pair<Tensor, Tensor>> pairs;
  for (std::size_t k = 0; k < a.pairs; ++k) pairs.emplace_back(set.images[stream[k].first], set.images[stream[k].second]);
  const ReconstructionSummary s = reconstruction_report(model, pairs, a.source.out);
  std::printf("%zu grids; mean mae(self, cross) %.6f vs mean mae(x1, x2) %.6f\n", s.files.size(),
              s.mean_self_vs_cross(), s.mean_inputs());
  return 0;
}

int cmd_gradcheck(const GradcheckArgs& a, const std::vector<std::string>& argv) {
  std::vector<GradScope> scopes;
  if (a.scope == "all") {
    scopes = {GradScope::kOps, GradScope::kStn, GradScope::kModel};
  } else {
    scopes = {parse_grad_scope(a.scope)};
  }

  RunManifest m;
  m.command = "gradcheck";
  m.argv = argv;
  m.config = {{"scope", a.scope},
              {"tol", a.options.tol},
              {"step", a.options.step},
              {"max_coords", a.options.max_coords_per_input}};
  m.seeds = {a.seed};
  m.artifacts = {"gradcheck.csv"};
  m.write(a.out);

  std::ostringstream csv;
  csv << "scope,check,passed,max_rel_error,checked,failed,excluded\n";
  bool ok = true;
  for (GradScope scope : scopes) {
    for (const auto& r : run_gradcheck_suite(scope, a.options, a.seed)) {
      std::printf("%-5s %-28s %s\n", to_string(scope).c_str(), r.name.c_str(), r.report.summary().c_str());
      csv << to_string(scope) << ',' << r.name << ',' << (r.report.passed() ? 1 : 0) << ','
          << num(r.report.max_rel_error) << ',' << r.report.checked << ',' << r.report.failures.size() << ','
          << r.report.excluded.size() << '\n';
      ok = ok && r.report.passed();
    }
  }
  write_text(a.out / "gradcheck.csv", csv.str());
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace diststn::cli

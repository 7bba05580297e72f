#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "diststn/errors.hpp"
#include "diststn/version.hpp"
#include "run_manifest.hpp"

namespace {

using namespace diststn;
using namespace diststn::cli;

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--split", a.split, "Split manifest (JSON)")->required();
  cmd->add_option("--alpha", a.train.loss.alpha, "Cross-reconstruction weight")->capture_default_str();
  cmd->add_option("--beta", a.train.loss.beta, "Self-reconstruction weight")->capture_default_str();
  cmd->add_option("--lr", a.train.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--momentum", a.train.momentum, "Momentum")->capture_default_str();
  cmd->add_option("--wd", a.train.weight_decay, "Weight decay")->capture_default_str();
  cmd->add_flag("--decoupled-decay", a.decoupled_decay, "Apply weight decay outside the momentum buffer");
  cmd->add_option("--epochs", a.train.max_epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--patience", a.train.patience, "Early-stopping patience")->capture_default_str();
  cmd->add_option("--batch", a.train.batch_size, "Pairs (or samples) per optimizer step")->capture_default_str();
  cmd->add_option("--seeds", a.seeds, "Seeds, one run each")->delimiter(',')->capture_default_str();
  cmd->add_option("--conv1", a.conv1, "First encoder width")->capture_default_str();
  cmd->add_option("--conv2", a.conv2, "Second encoder width")->capture_default_str();
  cmd->add_option("--identity-channels", a.identity, "Identity feature channels")->capture_default_str();
  cmd->add_option("--pose-channels", a.pose, "Pose feature channels")->capture_default_str();
}

void add_source_options(CLI::App* cmd, EvalArgs& a) {
  cmd->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  auto* split = cmd->add_option("--split", a.split, "Split manifest");
  auto* dataset = cmd->add_option("--dataset", a.dataset, "Dataset directory (all chips)");
  split->excludes(dataset);
  cmd->add_option("--subset", a.subset, "train, validation, test or all (with --split)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  const auto root = output_root();

  CLI::App app{"Disentangled spatial transformer network experiments on synthetic SAR chips", "diststn"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  gen.out = root / "dataset";
  auto* generate = app.add_subcommand("generate", "Render a synthetic chip dataset");
  generate->add_option("--classes", gen.dataset.num_classes, "Number of target classes")->capture_default_str();
  generate->add_option("--scatterers", gen.dataset.scatterers, "Scatterers per class template")->capture_default_str();
  generate->add_option("--size", gen.dataset.size, "Chip side length in pixels")->capture_default_str();
  generate->add_option("--angle-step", gen.dataset.angle_step_deg, "Aspect step in degrees")->capture_default_str();
  generate->add_option("--seed", gen.dataset.seed, "Seed")->capture_default_str();
  generate->add_option("--looks", gen.dataset.looks, "Speckle looks")->capture_default_str();
  generate->add_flag("!--no-speckle", gen.dataset.speckle, "Render noise-free chips");
  generate->add_option("--out", gen.out, "Output directory")->capture_default_str();

  SplitArgs sp;
  sp.out = root / "split.json";
  auto* split = app.add_subcommand("split", "Build a partial-aspect-angle split");
  split->add_option("--dataset", sp.dataset, "Dataset directory")->required();
  split->add_option("--noncoop", sp.noncoop, "Number of arc-restricted classes")->capture_default_str();
  split->add_option("--arc", sp.arc, "first_half or second_half")->capture_default_str();
  split->add_option("--coop-fraction", sp.coop_fraction, "Share of each cooperative class's chips kept")
      ->capture_default_str();
  split->add_option("--val-fraction", sp.val_fraction, "Share of training chips held out for validation")
      ->capture_default_str();
  split->add_option("--seed", sp.seed, "Seed")->capture_default_str();
  split->add_option("--out", sp.out, "Split manifest path")->capture_default_str();

  TrainArgs tr;
  tr.out = root / "train";
  auto* train = app.add_subcommand("train", "Train DistSTN (or the baseline CNN) for each seed");
  add_train_options(train, tr);
  train->add_flag("--baseline", tr.baseline, "Train the plain CNN baseline instead");
  train->add_option("--out", tr.out, "Output directory")->capture_default_str();

  GridArgs grid;
  grid.base.out = root / "gridsearch";
  auto* gridsearch = app.add_subcommand("gridsearch", "Select alpha and beta by mean validation accuracy");
  add_train_options(gridsearch, grid.base);
  gridsearch->add_option("--alphas", grid.alphas, "Alpha values")->delimiter(',')->capture_default_str();
  gridsearch->add_option("--betas", grid.betas, "Beta values")->delimiter(',')->capture_default_str();
  gridsearch->add_option("--out", grid.base.out, "Output directory")->capture_default_str();

  EvalArgs ev;
  ev.out = root / "eval";
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint, overall, per class and per aspect bin");
  add_source_options(eval, ev);
  eval->add_option("--out", ev.out, "Output directory")->capture_default_str();

  ReconstructArgs rec;
  rec.source.out = root / "reconstruct";
  auto* reconstruct = app.add_subcommand("reconstruct", "Self and cross reconstruction grids");
  add_source_options(reconstruct, rec.source);
  reconstruct->add_option("--pairs", rec.pairs, "Number of pairs")->capture_default_str();
  reconstruct->add_option("--seed", rec.seed, "Pair sampling seed")->capture_default_str();
  reconstruct->add_option("--out", rec.source.out, "Output directory")->capture_default_str();

  GradcheckArgs gc;
  gc.out = root / "gradcheck";
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--scope", gc.scope, "ops, stn, model or all")->capture_default_str();
  gradcheck->add_option("--tol", gc.options.tol, "Relative error tolerance")->capture_default_str();
  gradcheck->add_option("--step", gc.options.step, "Central-difference step")->capture_default_str();
  gradcheck->add_option("--max-coords", gc.options.max_coords_per_input,
                        "Coordinates sampled per input, 0 for all")
      ->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "Probe seed")->capture_default_str();
  gradcheck->add_option("--out", gc.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(gen, args);
    if (*split) return cmd_split(sp, args);
    if (*train) return cmd_train(tr, args);
    if (*gridsearch) return cmd_gridsearch(grid, args);
    if (*eval) return cmd_eval(ev, args);
    if (*reconstruct) return cmd_reconstruct(rec, args);
    if (*gradcheck) return cmd_gradcheck(gc, args);
  } catch (const diststn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

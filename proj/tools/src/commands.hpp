#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diststn/data_synth.hpp"
#include "diststn/grad_check.hpp"
#include "diststn/harness.hpp"
#include "diststn/model.hpp"

namespace diststn::cli {

struct GenerateArgs {
  DatasetOptions dataset;
  std::filesystem::path out;
};

struct SplitArgs {
  std::filesystem::path dataset;
  std::size_t noncoop = 0;
  std::string arc = "first_half";
  double coop_fraction = 0.5;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct TrainArgs {
  std::filesystem::path split;
  TrainConfig train;
  bool decoupled_decay = false;
  bool baseline = false;
  std::vector<std::uint64_t> seeds{0};
  std::size_t conv1 = 16, conv2 = 32, identity = 24, pose = 24;
  std::filesystem::path out;
};

struct GridArgs {
  TrainArgs base;
  std::vector<double> alphas{0.1, 0.5, 1.0, 2.0};
  std::vector<double> betas{0.1, 0.5, 1.0, 2.0};
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path split;
  std::filesystem::path dataset;
  std::string subset = "test";
  std::filesystem::path out;
};

struct ReconstructArgs {
  EvalArgs source;
  std::size_t pairs = 10;
  std::uint64_t seed = 0;
};

struct GradcheckArgs {
  std::string scope = "all";
  GradCheckOptions options;
  std::uint64_t seed = 7;
  std::filesystem::path out;
};

// Each returns the process exit status. argv is recorded in the manifest.
int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv);
int cmd_split(const SplitArgs& a, const std::vector<std::string>& argv);
int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv);
int cmd_gridsearch(const GridArgs& a, const std::vector<std::string>& argv);
int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv);
int cmd_reconstruct(const ReconstructArgs& a, const std::vector<std::string>& argv);
int cmd_gradcheck(const GradcheckArgs& a, const std::vector<std::string>& argv);

}  // namespace diststn::cli

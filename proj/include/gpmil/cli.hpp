#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpmil/data.hpp"
#include "gpmil/inference.hpp"

namespace gpmil {

// Everything the subcommands need, filled by the argument parser. A flat
// key=value config file may supply any option; explicit flags win.
struct RunConfig {
  std::string data_path;
  std::string val_path;
  std::string model_path;
  std::string out_path;
  std::string log_path;

  ModelConfig model;
  KernelParams kernel;
  bool lengthscale_set = false;  // default lengthscale is the feature count

  std::string psi_family = "hs";  // "hs" or "gamma"
  double alpha = 1.0;
  double beta = 4.0;

  int pca_components = 0;  // 0 disables PCA

  SynthConfig synth;

  // bench
  std::vector<int> inducing_grid = {50, 100, 200};
  std::vector<double> alpha_grid = {0.5, 1.0};
  std::vector<double> beta_grid = {1.0, 2.5, 4.0};
  int splits = 5;
  double test_fraction = 0.2;
  int bench_epochs = 30;
  bool bench_hyperopt = false;

  std::uint64_t verify_seed = 0;
};

GsmDensity make_density(const RunConfig& rc);

int cmd_train(const RunConfig& rc);
int cmd_predict(const RunConfig& rc);
int cmd_eval(const RunConfig& rc);
int cmd_gen(const RunConfig& rc);
int cmd_verify(const RunConfig& rc);
int cmd_bench(const RunConfig& rc);

// Parses argv, dispatches, and maps failures to exit codes: 0 success,
// 1 verification failure, 2 data/usage errors, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace gpmil

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fgnn/errors.hpp"

namespace fgnn::cli {

// Raised when a numerical check fails (gradient check, non-finite loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

struct SynthArgs {
  std::size_t items = 50;
  std::size_t sessions = 2000;
  std::size_t min_length = 2;
  std::size_t max_length = 10;
  double concentration = 0.04;
  std::uint64_t seed = 7;
  std::filesystem::path out;
};

struct PreprocessArgs {
  std::filesystem::path input;
  std::string format = "canonical";
  double test_fraction = 0.1;
  double train_fraction = 1.0;
  std::size_t min_support = 5;
  std::size_t min_length = 2;
  std::filesystem::path out;
};

// Training settings shared by train and ablate: an optional config file,
// then explicit overrides (`--set key=value`, then `--seed`).
struct TrainingArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
};

struct TrainArgs {
  TrainingArgs training;
  std::filesystem::path data;
  bool eval_each_epoch = false;
  std::filesystem::path out;
};

struct EvaluateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::vector<std::size_t> ks = {5, 10, 20};
  bool exclude_seen = false;
  double knn_lambda = 20.0;
  std::filesystem::path out;
};

struct AblateArgs {
  TrainingArgs training;
  std::filesystem::path data;
  std::vector<std::string> variants = {"set2set", "mean", "sum", "max"};
  std::vector<std::size_t> ks = {5, 10, 20};
  std::size_t short_threshold = 5;
  std::filesystem::path out;
};

struct GradcheckArgs {
  std::size_t items = 6;
  std::size_t dim = 8;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t steps = 2;
  std::size_t length = 6;
  std::string combine = "mean";
  std::vector<std::string> readouts = {"set2set", "mean", "sum", "max", "last_attention"};
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  std::filesystem::path out;  // optional
};

void run_synth(const SynthArgs& args);
void run_preprocess(const PreprocessArgs& args);
void run_train(const TrainArgs& args);
void run_evaluate(const EvaluateArgs& args);
void run_ablate(const AblateArgs& args);
void run_gradcheck(const GradcheckArgs& args);

}  // namespace fgnn::cli

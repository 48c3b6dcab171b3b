// fgnn: command-line front end. Exit codes: 0 success, 2 usage or config,
// 3 data or file integrity, 4 numerical check failure, 1 anything else.

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumerical = 4 };

void add_training_flags(CLI::App& cmd, fgnn::cli::TrainingArgs& args) {
  cmd.add_option("--config", args.config_path, "key = value training config file");
  cmd.add_option("--set", args.overrides, "override one config key (key=value), repeatable");
  cmd.add_option("--seed", args.seed, "random seed (overrides the config file)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fgnn::cli;
  CLI::App app{"FGNN session-based recommender"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic Markov-chain click corpus");
  c_synth->add_option("--items", synth.items, "item count")->capture_default_str();
  c_synth->add_option("--sessions", synth.sessions, "session count")->capture_default_str();
  c_synth->add_option("--min-length", synth.min_length)->capture_default_str();
  c_synth->add_option("--max-length", synth.max_length)->capture_default_str();
  c_synth->add_option("--concentration", synth.concentration,
                      "fraction of items reachable from each item")
      ->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--out", synth.out, "output directory")->required();

  PreprocessArgs prep;
  auto* c_prep = app.add_subcommand("preprocess", "filter, split and augment a click log");
  c_prep->add_option("--input", prep.input, "click log")->required();
  c_prep->add_option("--format", prep.format, "canonical | yoochoose | diginetica")
      ->capture_default_str();
  c_prep->add_option("--test-fraction", prep.test_fraction)->capture_default_str();
  c_prep->add_option("--train-fraction", prep.train_fraction,
                     "most recent share of the remaining sessions kept for training")
      ->capture_default_str();
  c_prep->add_option("--min-support", prep.min_support)->capture_default_str();
  c_prep->add_option("--min-length", prep.min_length)->capture_default_str();
  c_prep->add_option("--out", prep.out, "dataset directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_training_flags(*c_train, tr.training);
  c_train->add_option("--data", tr.data, "dataset directory from preprocess")->required();
  c_train->add_flag("--eval-each-epoch", tr.eval_each_epoch,
                    "log R@20 and MRR@20 on the test split after every epoch");
  c_train->add_option("--out", tr.out, "run directory")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "score a checkpoint against the baselines");
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--data", ev.data, "dataset directory")->required();
  c_eval->add_option("--ks", ev.ks, "cutoffs")->delimiter(',')->capture_default_str();
  c_eval->add_flag("--exclude-seen", ev.exclude_seen,
                   "Item-KNN never recommends items already in the prefix");
  c_eval->add_option("--knn-lambda", ev.knn_lambda)->capture_default_str();
  c_eval->add_option("--out", ev.out, "report directory")->required();

  AblateArgs ab;
  auto* c_ablate = app.add_subcommand("ablate", "train each readout variant and compare");
  add_training_flags(*c_ablate, ab.training);
  c_ablate->add_option("--data", ab.data, "dataset directory")->required();
  c_ablate->add_option("--variants", ab.variants, "readouts to compare")
      ->delimiter(',')
      ->capture_default_str();
  c_ablate->add_option("--ks", ab.ks)->delimiter(',')->capture_default_str();
  c_ablate->add_option("--short-threshold", ab.short_threshold,
                       "prefixes up to this length count as short")
      ->capture_default_str();
  c_ablate->add_option("--out", ab.out, "report directory")->required();

  GradcheckArgs gc;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  c_grad->add_option("--items", gc.items)->capture_default_str();
  c_grad->add_option("--dim", gc.dim)->capture_default_str();
  c_grad->add_option("--layers", gc.layers)->capture_default_str();
  c_grad->add_option("--heads", gc.heads)->capture_default_str();
  c_grad->add_option("--steps", gc.steps)->capture_default_str();
  c_grad->add_option("--length", gc.length, "clicks in the random test session")
      ->capture_default_str();
  c_grad->add_option("--combine", gc.combine, "mean | concat")->capture_default_str();
  c_grad->add_option("--readouts", gc.readouts)->delimiter(',')->capture_default_str();
  c_grad->add_option("--tolerance", gc.tolerance)->capture_default_str();
  c_grad->add_option("--seed", gc.seed)->capture_default_str();
  c_grad->add_option("--out", gc.out, "optional report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_synth) run_synth(synth);
    if (*c_prep) run_preprocess(prep);
    if (*c_train) run_train(tr);
    if (*c_eval) run_evaluate(ev);
    if (*c_ablate) run_ablate(ab);
    if (*c_grad) run_gradcheck(gc);
  } catch (const fgnn::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const fgnn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fgnn::IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kData;
  } catch (const fgnn::IndexError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical check failed: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fgnn/checkpoint.hpp"
#include "fgnn/config.hpp"
#include "fgnn/data.hpp"
#include "fgnn/eval.hpp"
#include "fgnn/gradcheck.hpp"
#include "fgnn/model.hpp"
#include "fgnn/train.hpp"

namespace fgnn::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

std::string join(const std::vector<std::size_t>& parts) {
  std::vector<std::string> s;
  for (const auto v : parts) s.push_back(std::to_string(v));
  return join(s);
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

// Provenance: every resolved setting of the run, one key=value per line.
void write_echo(const fs::path& dir, const std::string& command, KeyValues values) {
  values["command"] = command;
  write_text(dir / "config.echo", format_key_values(values));
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path.string());
}

TrainingConfig resolve_training(const TrainingArgs& args) {
  KeyValues values;
  if (!args.config_path.empty()) values = load_key_values(args.config_path);
  for (const auto& o : args.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects key=value, got '" + o + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    values[trim(o.substr(0, eq))] = trim(o.substr(eq + 1));
  }
  if (args.seed >= 0) values["seed"] = std::to_string(args.seed);
  auto config = apply_key_values(values);
  config.validate();
  return config;
}

void check_finite(const EpochLog& log) {
  if (!std::isfinite(log.train_loss)) {
    throw NumericalError("training loss became non-finite in epoch " + std::to_string(log.epoch));
  }
}

json epoch_json(const EpochLog& log) {
  json j = {{"epoch", log.epoch}, {"lr", log.lr}, {"train_loss", log.train_loss},
            {"steps", log.steps}};
  if (log.test_recall) j["test_recall"] = *log.test_recall;
  if (log.test_mrr) j["test_mrr"] = *log.test_mrr;
  return j;
}

Dataset load_data(const fs::path& dir) {
  require_file(dir / "manifest.json", "dataset manifest");
  return load_dataset(dir);
}

}  // namespace

void run_synth(const SynthArgs& args) {
  const auto sessions = synth_generate({.items = args.items,
                                        .sessions = args.sessions,
                                        .min_length = args.min_length,
                                        .max_length = args.max_length,
                                        .concentration = args.concentration,
                                        .seed = args.seed});
  prepare_out(args.out);
  std::ofstream csv(args.out / "sessions.csv", std::ios::binary);
  write_canonical_csv(csv, sessions);
  if (!csv) throw DataError("cannot write " + (args.out / "sessions.csv").string());
  write_echo(args.out, "synth",
             {{"items", std::to_string(args.items)},
              {"sessions", std::to_string(args.sessions)},
              {"min_length", std::to_string(args.min_length)},
              {"max_length", std::to_string(args.max_length)},
              {"concentration", number(args.concentration)},
              {"seed", std::to_string(args.seed)}});
  std::size_t clicks = 0;
  for (const auto& s : sessions) clicks += s.size();
  std::cout << "wrote " << sessions.size() << " sessions, " << clicks << " clicks to "
            << (args.out / "sessions.csv").string() << "\n";
}

void run_preprocess(const PreprocessArgs& args) {
  const auto format = parse_log_format(args.format);
  require_file(args.input, "input log");
  std::ifstream in(args.input, std::ios::binary);
  if (!in) throw DataError("cannot read " + args.input.string());
  LoadResult loaded;
  try {
    loaded = load_events(in, format);
  } catch (const DataError& e) {
    throw DataError(args.input.string() + ": " + e.what());
  }
  if (loaded.skipped_rows > 0) {
    std::cerr << args.input.string() << ": skipped " << loaded.skipped_rows
              << " unparsable rows (first at line";
    for (const auto l : loaded.skipped_lines) std::cerr << " " << l;
    std::cerr << ")\n";
  }
  const auto keyed = sessionize(loaded.events);
  const auto filtered = filter_sessions(keyed, args.min_support, args.min_length);
  const auto ds = temporal_split(filtered.sessions, filtered.vocab,
                                 {args.test_fraction, args.train_fraction});
  prepare_out(args.out);
  save_dataset(args.out, ds);

  const auto& s = ds.stats;
  const json stats = {{"clicks", s.clicks},
                      {"train_sessions", s.train_sessions},
                      {"test_sessions", s.test_sessions},
                      {"train_examples", s.train_examples},
                      {"test_examples", s.test_examples},
                      {"items", s.items},
                      {"avg_length", s.avg_length},
                      {"dropped_test_examples", s.dropped_test_examples},
                      {"skipped_rows", loaded.skipped_rows}};
  write_text(args.out / "stats.json", stats.dump(2) + "\n");
  write_echo(args.out, "preprocess",
             {{"input", args.input.string()},
              {"format", args.format},
              {"test_fraction", number(args.test_fraction)},
              {"train_fraction", number(args.train_fraction)},
              {"min_support", std::to_string(args.min_support)},
              {"min_length", std::to_string(args.min_length)}});
  std::cout << "clicks " << s.clicks << "\ntrain sessions " << s.train_sessions
            << "\ntest sessions " << s.test_sessions << "\ntrain examples " << s.train_examples
            << "\ntest examples " << s.test_examples << "\nitems " << s.items
            << "\navg length " << s.avg_length << "\n";
}

void run_train(const TrainArgs& args) {
  const auto config = resolve_training(args.training);
  const auto ds = load_data(args.data);
  prepare_out(args.out);
  auto echo = to_key_values(config);
  echo["data"] = args.data.string();
  write_echo(args.out, "train", echo);

  std::ofstream log(args.out / "train_log.jsonl", std::ios::binary);
  TrainOptions options;
  options.evaluate_each_epoch = args.eval_each_epoch;
  options.on_epoch = [&](const EpochLog& e) {
    check_finite(e);
    log << epoch_json(e).dump() << "\n";
    log.flush();
    std::cout << "epoch " << e.epoch << "  lr " << e.lr << "  loss " << e.train_loss;
    if (e.test_mrr) std::cout << "  R@20 " << *e.test_recall << "  MRR@20 " << *e.test_mrr;
    std::cout << std::endl;
  };
  const auto result = train(config, ds, options);
  if (!log) throw DataError("cannot write " + (args.out / "train_log.jsonl").string());
  save_checkpoint(args.out / "model.ckpt", config, result.params, &result.adam);
  std::cout << "checkpoint written to " << (args.out / "model.ckpt").string() << "\n";
}

void run_evaluate(const EvaluateArgs& args) {
  require_file(args.checkpoint, "checkpoint");
  const auto ckpt = load_checkpoint(args.checkpoint);
  const auto ds = load_data(args.data);
  if (ckpt.params.config.item_count != ds.vocab.size()) {
    throw DataError("checkpoint covers " + std::to_string(ckpt.params.config.item_count) +
                    " items but dataset " + args.data.string() + " has " +
                    std::to_string(ds.vocab.size()));
  }
  const auto sessions = sessions_from_examples(ds.train_examples);
  const std::size_t m = ds.vocab.size();
  const ModelRanker model(ckpt.params);
  const PopRanker pop(sessions, m);
  const SPopRanker spop(sessions, m);
  const ItemKnnRanker knn(sessions, m, args.knn_lambda, args.exclude_seen);
  std::vector<EvalReport> reports;
  for (const Ranker* r : std::initializer_list<const Ranker*>{&model, &pop, &spop, &knn}) {
    reports.push_back(evaluate(*r, ds.test_examples, args.ks));
  }
  prepare_out(args.out);
  std::string jsonl;
  for (const auto& r : reports) jsonl += to_jsonl(r);
  write_text(args.out / "metrics.jsonl", jsonl);
  const auto table = format_table(reports);
  write_text(args.out / "metrics.txt", table);
  write_echo(args.out, "evaluate",
             {{"checkpoint", args.checkpoint.string()},
              {"data", args.data.string()},
              {"ks", join(args.ks)},
              {"exclude_seen", args.exclude_seen ? "true" : "false"},
              {"knn_lambda", number(args.knn_lambda)}});
  std::cout << table;
}

void run_ablate(const AblateArgs& args) {
  const auto base = resolve_training(args.training);
  const auto ds = load_data(args.data);
  const auto [short_test, long_test] = split_by_length(ds.test_examples, args.short_threshold);
  prepare_out(args.out);
  auto echo = to_key_values(base);
  echo["data"] = args.data.string();
  echo["variants"] = join(args.variants);
  echo["ks"] = join(args.ks);
  echo["short_threshold"] = std::to_string(args.short_threshold);
  write_echo(args.out, "ablate", echo);

  const std::vector<std::pair<std::string, std::span<const TrainingExample>>> segments = {
      {"all", ds.test_examples}, {"short", short_test}, {"long", long_test}};
  std::map<std::string, std::vector<EvalReport>> tables;
  std::string jsonl;
  for (const auto& variant : args.variants) {
    auto config = base;
    config.readout = parse_readout_kind(variant);
    TrainOptions options;
    options.on_epoch = check_finite;
    const auto result = train(config, ds, options);
    const ModelRanker ranker(result.params, variant);
    for (const auto& [segment, examples] : segments) {
      if (examples.empty()) continue;
      const auto report = evaluate(ranker, examples, args.ks);
      for (const auto& row : report.rows) {
        jsonl += json{{"variant", variant},      {"segment", segment}, {"K", row.k},
                      {"recall", row.recall},    {"mrr", row.mrr},
                      {"n_test", report.n_test}}
                     .dump() +
                 "\n";
      }
      tables[segment].push_back(report);
    }
    std::cerr << "trained " << variant << "\n";
  }
  std::string text;
  const std::string threshold = std::to_string(args.short_threshold);
  for (const auto& [segment, title] :
       std::vector<std::pair<std::string, std::string>>{
           {"all", "All test examples"},
           {"short", "Short (prefix <= " + threshold + ")"},
           {"long", "Long (prefix > " + threshold + ")"}}) {
    if (!tables.count(segment)) continue;
    text += title + "\n" + format_table(tables[segment]) + "\n";
  }
  write_text(args.out / "ablation.jsonl", jsonl);
  write_text(args.out / "ablation.txt", text);
  std::cout << text;
}

void run_gradcheck(const GradcheckArgs& args) {
  if (args.items < 2) throw UsageError("gradcheck needs at least 2 items");
  if (args.length < 2) throw UsageError("gradcheck session length must be >= 2");
  std::mt19937_64 seq_rng(args.seed);
  std::uniform_int_distribution<std::size_t> pick(0, args.items - 1);
  std::vector<std::size_t> session(args.length);
  for (auto& v : session) v = pick(seq_rng);
  const std::vector<TrainingExample> examples = {
      {{session.begin(), session.end() - 1}, session.back()}};

  double worst = 0.0;
  std::ostringstream lines;
  for (const auto& name : args.readouts) {
    ModelConfig config;
    config.item_count = args.items;
    config.dim = args.dim;
    config.layers = args.layers;
    config.heads = args.heads;
    config.readout_steps = args.steps;
    config.combine = parse_head_combine(args.combine);
    config.readout = parse_readout_kind(name);
    Rng rng(args.seed);
    const auto params = make_model(config, 0.5, rng);
    const auto report = check_model_gradients(params, examples);
    worst = std::max(worst, report.max_rel_error);
    lines << name << ": " << report.tensors.size() << " tensors, max rel err "
          << report.max_rel_error << "\n";
  }
  const bool pass = worst <= args.tolerance;
  std::ostringstream verdict;
  verdict << (pass ? "PASS" : "FAIL") << ", max rel err " << worst << " (tolerance "
          << args.tolerance << ")\n";
  std::cout << lines.str() << verdict.str();
  if (!args.out.empty()) {
    prepare_out(args.out);
    write_text(args.out / "gradcheck.txt", lines.str() + verdict.str());
    write_echo(args.out, "gradcheck",
               {{"items", std::to_string(args.items)},
                {"dim", std::to_string(args.dim)},
                {"layers", std::to_string(args.layers)},
                {"heads", std::to_string(args.heads)},
                {"steps", std::to_string(args.steps)},
                {"length", std::to_string(args.length)},
                {"combine", args.combine},
                {"readouts", join(args.readouts)},
                {"tolerance", number(args.tolerance)},
                {"seed", std::to_string(args.seed)}});
  }
  if (!pass) throw NumericalError("gradient check exceeded tolerance");
}

}  // namespace fgnn::cli

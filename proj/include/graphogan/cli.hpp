// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. `run_cli` is the whole program; main() only
// forwards to it so the commands can be driven from tests.
#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graphogan/graphogan.hpp"

namespace graphogan::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFault = 3 };

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  return out;
}

inline void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

inline std::vector<std::u32string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read '" + path + "'");
  std::vector<std::u32string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(utf8::decode(line));
  }
  return out;
}

inline void print_warnings(const Warnings& w, std::ostream& err) {
  for (const auto& m : w) err << "warning: " << m << '\n';
}

}  // namespace detail

struct AlignArgs {
  std::string input, output;
};

/// Columns: lemma, form, lemma_prefix, stem, form_prefix, lemma_suffix|form_suffix.
inline void cmd_align(const AlignArgs& a, std::ostream& err) {
  Warnings w;
  const Dataset ds = load_dataset(a.input, a.input, &w);
  auto out = detail::open_output(a.output);
  for (std::size_t i = 0; i < ds.triples.size(); ++i) {
    const auto& t = ds.triples[i];
    auto c = stem_candidates(t.lemma, t.form);
    if (c.empty()) {
      w.push_back("row " + std::to_string(i + 1) + " is not alignable; skipped");
      continue;
    }
    const auto& d = c.front();
    out << utf8::encode(t.lemma) << '\t' << utf8::encode(t.form) << '\t' << utf8::encode(d.lemma_prefix) << '\t'
        << utf8::encode(d.stem) << '\t' << utf8::encode(d.form_prefix) << '\t' << utf8::encode(d.lemma_suffix)
        << '|' << utf8::encode(d.form_suffix) << '\n';
  }
  detail::close_output(out, a.output);
  detail::print_warnings(w, err);
}

struct TrainArgs {
  std::string input, checkpoint, loss_csv, samples, config_file;
  TrainConfig config;
};

inline void cmd_train(TrainArgs a, std::ostream& out, std::ostream& err) {
  if (a.loss_csv.empty()) a.loss_csv = a.checkpoint + ".loss.csv";
  if (a.samples.empty()) a.samples = a.checkpoint + ".samples.txt";
  Warnings w;
  const Dataset ds = load_dataset(a.input, a.input, &w);
  const Alphabet alphabet = build_alphabet(ds);
  const auto stems = training_stems(ds, &w);
  auto result = train(stems, alphabet, a.config, &w);
  detail::print_warnings(w, err);

  save_checkpoint(a.checkpoint, to_checkpoint(result.model));
  auto loss = detail::open_output(a.loss_csv);
  write_loss_csv(loss, result.history);
  detail::close_output(loss, a.loss_csv);
  auto samples = detail::open_output(a.samples);
  write_sample_log(samples, result.history);
  detail::close_output(samples, a.samples);

  out << "steps=" << result.history.steps() << '\n';
  if (result.history.steps() >= 100) out << "regime=" << regime_name(classify_regime(result.history)) << '\n';
}

struct HallucinateArgs {
  std::string input, output, method = "random", checkpoint, config_file;
  std::size_t n = kDefaultHallucinations;
  std::uint64_t seed = 0;
  double smoothing = kDefaultTrigramSmoothing;
  unsigned shards = 1;
  bool provenance = false;
};

inline std::unique_ptr<StemGenerator> make_generator(const HallucinateArgs& a, const Dataset& ds, Warnings* w) {
  if (a.method == "random") return std::make_unique<RandomStemGenerator>(build_alphabet(ds));
  if (a.method == "trigram") {
    return std::make_unique<TrigramStemGenerator>(TrigramModel::fit(training_stems(ds, w), a.smoothing));
  }
  if (a.method == "gan") {
    if (a.checkpoint.empty()) throw Error(Errc::missing_model, "method 'gan' needs --checkpoint");
    return std::make_unique<GanStemGenerator>(from_checkpoint(load_checkpoint(a.checkpoint)));
  }
  throw Error(Errc::invalid_argument, "unknown method '" + a.method + "'");
}

inline void cmd_hallucinate(const HallucinateArgs& a, std::ostream& err) {
  Warnings w;
  const Dataset ds = load_dataset(a.input, a.input, &w);
  const auto gen = make_generator(a, ds, &w);
  const Dataset fake = hallucinate(ds, *gen, {a.n, a.seed, a.shards}, &w);
  detail::print_warnings(w, err);
  auto out = detail::open_output(a.output);
  for (const auto& t : fake.triples) {
    out << serialize_row(t);
    if (a.provenance) out << '\t' << method_name(gen->method());
    out << '\n';
  }
  detail::close_output(out, a.output);
}

struct EvalArgs {
  std::string pred, gold;
};

inline void cmd_eval(const EvalArgs& a, std::ostream& out) {
  write_eval_report(out, evaluate(detail::read_lines(a.pred), detail::read_lines(a.gold)));
}

struct SampleArgs {
  std::string checkpoint, output;
  std::size_t n = 10;
  std::uint64_t seed = 0;
  std::size_t clean_len = 0;  // 0 keeps raw strings
};

inline void cmd_sample(const SampleArgs& a, std::ostream& out) {
  const GanModel m = from_checkpoint(load_checkpoint(a.checkpoint));
  Rng rng(a.seed);
  std::ostringstream buf;
  for (const auto& raw : sample_raw(m, a.n, rng)) {
    buf << utf8::encode(a.clean_len ? clean(raw, a.clean_len, m.alphabet.pad_glyph()) : raw) << '\n';
  }
  if (a.output.empty()) {
    out << buf.str();
  } else {
    auto f = detail::open_output(a.output);
    f << buf.str();
    detail::close_output(f, a.output);
  }
}

namespace detail {

/// Splices `--key value` pairs from a `--config` file in front of the
/// subcommand's own arguments, so explicit flags (parsed later) win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty()) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == args[0])) {
      throw CLI::ConfigError("section [" + item.parents[0] + "] does not match subcommand " + args[0]);
    }
    if (item.name.empty() || item.name == "config") continue;
    injected.push_back("--" + item.name);
    injected.insert(injected.end(), item.inputs.begin(), item.inputs.end());
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace detail

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::numeric_fault: return kNumericFault;
    case Errc::invalid_argument:
    case Errc::missing_model: return kUsage;
    default: return kDataError;
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Stem hallucination toolkit: align, train, hallucinate, eval, sample"};
  app.require_subcommand(1);

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Write the stem decomposition of every row as TSV");
  align->add_option("-i,--input", align_args.input, "Unimorph TSV file")->required()->check(CLI::ExistingFile);
  align->add_option("-o,--output", align_args.output, "Decomposition TSV")->required();

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train the GAN on the stems of a dataset");
  tr->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  tr->add_option("--config", train_args.config_file, "key=value file; command-line flags take precedence");
  tr->add_option("-i,--input", train_args.input, "Unimorph TSV file")->required()->check(CLI::ExistingFile);
  tr->add_option("-c,--checkpoint", train_args.checkpoint, "Checkpoint output path")->required();
  tr->add_option("--loss-csv", train_args.loss_csv, "Loss history CSV (default <checkpoint>.loss.csv)");
  tr->add_option("--samples", train_args.samples, "Sample log (default <checkpoint>.samples.txt)");
  tr->add_option("--seed", train_args.config.seed, "Random seed")->required();
  tr->add_option("--epochs", train_args.config.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--batch-size", train_args.config.batch_size, "Real examples per step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  tr->add_option("--generator-lr", train_args.config.generator_lr)->capture_default_str()->check(CLI::NonNegativeNumber);
  tr->add_option("--discriminator-lr", train_args.config.discriminator_lr)
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--sample-every", train_args.config.sample_every, "Epochs between logged samples (0 = off)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--generator-hidden", train_args.config.generator_hidden)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--discriminator-hidden", train_args.config.discriminator_hidden)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  HallucinateArgs hal_args;
  auto* hal = app.add_subcommand("hallucinate", "Emit artificial triples by stem replacement");
  hal->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  hal->add_option("--config", hal_args.config_file, "key=value file; command-line flags take precedence");
  hal->add_option("-i,--input", hal_args.input, "Unimorph TSV file")->required()->check(CLI::ExistingFile);
  hal->add_option("-o,--output", hal_args.output, "Output TSV")->required();
  hal->add_option("-m,--method", hal_args.method, "Stem generator")
      ->capture_default_str()
      ->check(CLI::IsMember({"random", "trigram", "gan"}));
  hal->add_option("-n,--n", hal_args.n, "Number of triples")->capture_default_str()->check(CLI::PositiveNumber);
  hal->add_option("--seed", hal_args.seed, "Random seed")->required();
  hal->add_option("-c,--checkpoint", hal_args.checkpoint, "GAN checkpoint (method gan)");
  hal->add_option("--smoothing", hal_args.smoothing, "Trigram add-k constant")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  hal->add_option("--shards", hal_args.shards, "Independent seeded shards run in parallel")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  hal->add_flag("--provenance", hal_args.provenance, "Append the method name as a 4th column");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Accuracy and mean Levenshtein distance of aligned line files");
  ev->add_option("-p,--pred", eval_args.pred, "Predictions, one per line")->required()->check(CLI::ExistingFile);
  ev->add_option("-g,--gold", eval_args.gold, "Gold labels, one per line")->required()->check(CLI::ExistingFile);

  SampleArgs sample_args;
  auto* sm = app.add_subcommand("sample", "Draw strings from a trained generator");
  sm->add_option("-c,--checkpoint", sample_args.checkpoint)->required()->check(CLI::ExistingFile);
  sm->add_option("-n,--n", sample_args.n, "Number of samples")->capture_default_str();
  sm->add_option("--seed", sample_args.seed, "Random seed")->required();
  sm->add_option("--clean", sample_args.clean_len, "Clean to at most this many characters (0 = raw)")
      ->capture_default_str();
  sm->add_option("-o,--output", sample_args.output, "Write here instead of stdout");

  try {
    auto args = detail::expand_config({argv + std::min(argc, 1), argv + argc});
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*align) cmd_align(align_args, err);
    if (*tr) cmd_train(train_args, out, err);
    if (*hal) cmd_hallucinate(hal_args, err);
    if (*ev) cmd_eval(eval_args, out);
    if (*sm) cmd_sample(sample_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace graphogan::cli

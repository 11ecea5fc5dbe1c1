// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero if any fail.
//
//   acceptance --cli <path to graphogan> [--data-dir <dir with *-train-low files>]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "graphogan/graphogan.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace graphogan;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void fail(Outcome& o, const std::string& why) {
  o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += why;
}

void note(Outcome& o, const std::string& what) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
}

// Library defaults: 500 epochs, batch 32, hidden 100, learning rates 1e-3.
TrainConfig cv_train_config() {
  TrainConfig cfg;
  cfg.seed = 1;
  return cfg;
}

const std::vector<std::u32string>& cv_training_stems() {
  static const auto stems = testing::cv_stems(100, 7);
  return stems;
}

// Shared between the GAN sanity check and the pipeline check.
std::optional<GanModel> cv_model;

// ------------------------------------------------------------------ 1

Outcome gradients() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = check_gan_gradients(5, 8, 3, seed, 1e-4, 1e-5);
    for (const GradientReport* g : {&r.generator, &r.discriminator, &r.adversarial}) {
      worst = std::max(worst, g->max_relative_error);
      checked += g->checked;
      if (!g->passed()) fail(o, "seed " + std::to_string(seed) + ": " + g->failures.front());
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 30.0) fail(o, "took " + fmt("%.1f", secs) + " s");
  note(o, std::to_string(checked) + " entries, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + " s");
  return o;
}

// ------------------------------------------------------------------ 2

Outcome levenshtein_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<std::u32string> words{U""};
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() < 4) {
      words.push_back(words[i] + U'a');
      words.push_back(words[i] + U'b');
    }
  }
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i; j < words.size(); ++j) {
      const auto d = levenshtein(words[i], words[j]);
      ++pairs;
      if (d != testing::levenshtein_recursive(words[i], words[j]) || d != levenshtein(words[j], words[i])) {
        fail(o, "mismatch on " + utf8::encode(words[i]) + "/" + utf8::encode(words[j]));
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 10.0) fail(o, "took " + fmt("%.1f", secs) + " s");
  note(o, std::to_string(words.size()) + " strings, " + std::to_string(pairs) + " unordered pairs, " +
              fmt("%.2f", secs) + " s");
  return o;
}

// ------------------------------------------------------------------ 3

Outcome codec_round_trip() {
  Outcome o;
  const auto a = Alphabet::from_symbols({U'a', U'b', U'c', U'ç', U'd', U'ü', U'm', U'ş', U'k', U'ł'});
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> len(1, static_cast<std::size_t>(kFrameLength));
  std::size_t bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto s = random_stem(a, len(rng), rng);
    if (strip_pad(decode(encode_stem(s, a), a), a.pad_glyph()) != s) ++bad;
  }
  if (bad) fail(o, std::to_string(bad) + " stems changed");
  note(o, "1000 stems");
  return o;
}

// ------------------------------------------------------------------ 4

bool has_triple_run(const std::u32string& s) {
  for (std::size_t i = 2; i < s.size(); ++i)
    if (s[i] == s[i - 1] && s[i] == s[i - 2]) return true;
  return false;
}

Outcome cleaning() {
  Outcome o;
  const std::u32string symbols = U"0abş";  // small alphabet so runs are common
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, symbols.size() - 1);
  std::uniform_int_distribution<std::size_t> target(1, 10);
  std::size_t bad = 0;
  for (int k = 0; k < 10000; ++k) {
    std::u32string raw;
    for (int i = 0; i < 10; ++i) raw.push_back(symbols[pick(rng)]);
    const std::size_t t = target(rng);
    const auto c = clean(raw, t);
    if (clean(c, t) != c || c.find(U'0') != std::u32string::npos || has_triple_run(c) || c.size() > t) ++bad;
  }
  if (bad) fail(o, std::to_string(bad) + " of 10000 violate a property");
  if (clean(U"dümç000000", 10) != U"dümç") fail(o, "dümç000000 not cleaned to dümç");
  if (clean(U"şşşşşşşşşş", 10) != U"şş") fail(o, "şşşşşşşşşş not cleaned to şş");
  note(o, "10000 raw strings plus dümç000000 and şşşşşşşşşş");
  return o;
}

// ------------------------------------------------------------------ 5

Outcome loss_bounds() {
  Outcome o;
  const auto t0 = Clock::now();
  // Two corpora: the consonant/vowel language and a corpus over wider Unicode.
  std::vector<std::vector<std::u32string>> corpora{cv_training_stems(), {}};
  const auto wide = Alphabet::from_symbols({U'd', U'ü', U'm', U'ç', U'ş', U'k', U'ł', U'ë', U'ô', U'a', U'ò'});
  Rng rng(5);
  std::uniform_int_distribution<std::size_t> len(2, 8);
  for (int k = 0; k < 100; ++k) corpora[1].push_back(random_stem(wide, len(rng), rng));

  std::size_t steps = 0;
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    TrainConfig cfg;
    cfg.seed = 10 + c;
    cfg.epochs = 500;
    Dataset ds{"corpus", {}};
    for (const auto& s : corpora[c]) ds.triples.push_back({s, s, {"X"}});
    const auto r = train(corpora[c], build_alphabet(ds), cfg);
    const auto& h = r.history;
    for (std::size_t i = 0; i < h.steps(); ++i) {
      if (!(h.discriminator[i] >= -1.0 && h.discriminator[i] <= 1.0 && h.generator[i] >= 0.0 &&
            h.generator[i] <= 1.0)) {
        fail(o, "corpus " + std::to_string(c) + " step " + std::to_string(i + 1) + " out of bounds");
        break;
      }
    }
    steps += h.steps();
    const Regime regime = classify_regime(h);
    if (regime != Regime::saturated && regime != Regime::oscillating) fail(o, "unknown regime");
    note(o, "corpus " + std::to_string(c) + ": " + regime_name(regime));
  }
  note(o, std::to_string(steps) + " steps, " + fmt("%.0f", seconds_since(t0)) + " s");
  return o;
}

// ------------------------------------------------------------------ 6

Outcome gan_sanity() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto& stems = cv_training_stems();
  const auto a = build_alphabet(testing::cv_dataset(stems));
  if (a.real_symbols().size() != 10) fail(o, "alphabet has " + std::to_string(a.real_symbols().size()) + " symbols");
  const auto cfg = cv_train_config();
  auto r = train(stems, a, cfg);
  Rng rng(6);
  std::size_t hits = 0;
  for (const auto& raw : sample_raw(r.model, 200, rng)) {
    hits += testing::matches_cv_pattern(clean(raw, static_cast<std::size_t>(kFrameLength), a.pad_glyph()));
  }
  const double rate = static_cast<double>(hits) / 200.0;
  const double baseline = testing::uniform_cv_match_rate(stems);
  const double secs = seconds_since(t0);
  if (rate < 0.5) fail(o, "match rate " + fmt("%.3f", rate) + " < 0.5");
  if (baseline >= 0.1) fail(o, "baseline " + fmt("%.4f", baseline) + " >= 0.1");
  if (secs >= 600.0) fail(o, "took " + fmt("%.0f", secs) + " s");
  note(o, "match " + fmt("%.3f", rate) + " vs uniform baseline " + fmt("%.4f", baseline) + " after " +
              std::to_string(cfg.epochs) + " epochs, " + fmt("%.0f", secs) + " s");
  cv_model = std::move(r.model);
  return o;
}

// ------------------------------------------------------------------ 7

// Trigram samples against uniform samples, both scored under a model of the
// held-out stems. Lengths of the random samples follow the training stems.
bool quality_ordering(const std::vector<std::u32string>& train_stems, const std::vector<std::u32string>& held_out,
                      std::uint64_t seed, std::string& detail) {
  Dataset ds{"q", {}};
  for (const auto& s : train_stems) ds.triples.push_back({s, s, {"X"}});
  const auto a = build_alphabet(ds);
  const TrigramStemGenerator tri(trigram_fit(train_stems, kDefaultTrigramSmoothing));
  const RandomStemGenerator rnd(a);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, train_stems.size() - 1);
  std::vector<std::u32string> tri_samples, rnd_samples;
  for (int k = 0; k < 1000; ++k) {
    const auto len = train_stems[pick(rng)].size();
    tri_samples.push_back(tri.propose(len, rng));
    rnd_samples.push_back(rnd.propose(len, rng));
  }
  const double h_tri = sample_quality(tri_samples, held_out).cross_entropy;
  const double h_rnd = sample_quality(rnd_samples, held_out).cross_entropy;
  detail = "trigram " + fmt("%.3f", h_tri) + " vs random " + fmt("%.3f", h_rnd) + " bits";
  return h_tri < h_rnd;
}

Outcome trigram_quality(const std::string& data_dir) {
  Outcome o;
  {
    const auto t0 = Clock::now();
    std::string d;
    if (!quality_ordering(cv_training_stems(), testing::cv_stems(100, 8), 7, d)) fail(o, "synthetic: " + d);
    const double secs = seconds_since(t0);
    if (secs >= 60.0) fail(o, "synthetic took " + fmt("%.0f", secs) + " s");
    note(o, "synthetic: " + d);
  }
  std::vector<fs::path> files;
  if (!data_dir.empty() && fs::is_directory(data_dir)) {
    for (const auto& e : fs::directory_iterator(data_dir)) {
      if (e.is_regular_file() && e.path().filename().string().ends_with("-train-low")) files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto t0 = Clock::now();
    const std::string lang = f.filename().string().substr(0, f.filename().string().size() - 10);
    Warnings w;
    const auto stems = training_stems(load_dataset(f.string(), lang, &w), &w);
    if (stems.size() < 4) {
      fail(o, lang + ": too few stems");
      continue;
    }
    // Alternate rows into fit and held-out halves.
    std::vector<std::u32string> fit, held;
    for (std::size_t i = 0; i < stems.size(); ++i) (i % 2 ? held : fit).push_back(stems[i]);
    std::string d;
    if (!quality_ordering(fit, held, 7, d)) fail(o, lang + ": " + d);
    const double secs = seconds_since(t0);
    if (secs >= 60.0) fail(o, lang + " took " + fmt("%.0f", secs) + " s");
    note(o, lang + ": " + d);
  }
  note(o, std::to_string(files.size()) + " train-low files found");
  return o;
}

// ------------------------------------------------------------------ CLI helpers

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

int run_cli(const std::string& cli, const std::vector<std::string>& args, const std::string& stdout_path = "") {
  std::string cmd = quote(cli);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += stdout_path.empty() ? " > /dev/null" : " > " + quote(stdout_path);
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ------------------------------------------------------------------ 8

struct BaseKey {
  std::vector<std::string> tags;
  StemDecomposition d;
};

bool explained_by(const Triple& t, const BaseKey& b) {
  const auto& d = b.d;
  const std::size_t n = d.stem.size();
  if (t.tags != b.tags) return false;
  if (t.lemma.size() != d.lemma_prefix.size() + n + d.lemma_suffix.size()) return false;
  if (t.form.size() != d.form_prefix.size() + n + d.form_suffix.size()) return false;
  if (!t.lemma.starts_with(d.lemma_prefix) || !t.lemma.ends_with(d.lemma_suffix)) return false;
  if (!t.form.starts_with(d.form_prefix) || !t.form.ends_with(d.form_suffix)) return false;
  const auto stem = t.lemma.substr(d.lemma_prefix.size(), n);
  return t.form.substr(d.form_prefix.size(), n) == stem && stem.find(U'0') == std::u32string::npos;
}

Outcome pipeline_scale(const std::string& cli, const fs::path& dir) {
  Outcome o;
  const auto ds = testing::cv_dataset(cv_training_stems());
  const auto input = (dir / "cv.tsv").string();
  save_dataset(input, ds);
  std::vector<BaseKey> bases;
  for (const auto& t : ds.triples) bases.push_back({t.tags, best_stem(t.lemma, t.form)});

  const auto ckpt = (dir / "cv.ckpt").string();
  if (!cv_model) {
    fail(o, "no trained model available for the gan method");
  } else {
    save_checkpoint(ckpt, to_checkpoint(*cv_model));
  }

  const std::map<std::string, double> limits{{"random", 60.0}, {"trigram", 60.0}, {"gan", 300.0}};
  for (const auto& [method, limit] : limits) {
    if (method == "gan" && !cv_model) continue;
    const auto out = (dir / ("halluc_" + method + ".tsv")).string();
    std::vector<std::string> args{"hallucinate", "-i", input, "-o", out, "-m", method, "--seed", "8"};
    if (method == "gan") args.insert(args.end(), {"-c", ckpt});
    const auto t0 = Clock::now();
    const int code = run_cli(cli, args);
    const double secs = seconds_since(t0);
    if (code != 0) {
      fail(o, method + ": exit code " + std::to_string(code));
      continue;
    }
    std::istringstream in(testing::read_bytes(out));
    std::string line;
    std::size_t rows = 0, invalid = 0;
    while (std::getline(in, line)) {
      ++rows;
      try {
        const Triple t = parse_row(line, rows);
        if (std::none_of(bases.begin(), bases.end(), [&](const BaseKey& b) { return explained_by(t, b); })) ++invalid;
      } catch (const Error&) {
        ++invalid;
      }
    }
    if (rows != 10000) fail(o, method + ": " + std::to_string(rows) + " rows");
    if (invalid) fail(o, method + ": " + std::to_string(invalid) + " invalid rows");
    if (secs >= limit) fail(o, method + " took " + fmt("%.1f", secs) + " s");
    note(o, method + " " + std::to_string(rows) + " rows in " + fmt("%.1f", secs) + " s");
  }
  return o;
}

// ------------------------------------------------------------------ 9

Outcome determinism(const std::string& cli, const fs::path& dir) {
  Outcome o;
  const auto input = (dir / "det.tsv").string();
  save_dataset(input, testing::cv_dataset(testing::cv_stems(100, 9)));
  testing::write_text((dir / "pred.txt").string(), "baka\nmitoka\ndemi\n");
  testing::write_text((dir / "gold.txt").string(), "baka\nmitaka\ndem\n");
  const auto config = (dir / "frozen.conf").string();
  testing::write_text(config, "epochs=2\ngenerator-hidden=16\ndiscriminator-hidden=16\ngenerator-lr=0\n");

  // Each run writes into its own directory; file names are relative to it.
  auto commands = [&](const fs::path& d) {
    const auto p = [&](const char* name) { return (d / name).string(); };
    return std::vector<std::pair<std::vector<std::string>, std::string>>{
        {{"align", "-i", input, "-o", p("align.tsv")}, ""},
        {{"train", "-i", input, "-c", p("model.ckpt"), "--seed", "3", "--epochs", "3", "--generator-hidden", "16",
          "--discriminator-hidden", "16", "--sample-every", "1"},
         p("train.out")},
        {{"hallucinate", "-i", input, "-o", p("random.tsv"), "-m", "random", "--seed", "4", "-n", "500"}, ""},
        {{"hallucinate", "-i", input, "-o", p("trigram.tsv"), "-m", "trigram", "--seed", "4", "-n", "500",
          "--provenance"},
         ""},
        // A few epochs leave the trained generator emitting only pad, which
        // hallucinate rightly refuses; a frozen generator still emits symbols.
        {{"train", "-i", input, "-c", p("frozen.ckpt"), "--seed", "3", "--config", config}, ""},
        {{"hallucinate", "-i", input, "-o", p("gan.tsv"), "-m", "gan", "-c", p("frozen.ckpt"), "--seed", "4", "-n",
          "500", "--shards", "3"},
         ""},
        {{"sample", "-c", p("model.ckpt"), "-n", "20", "--seed", "5", "-o", p("samples.txt")}, ""},
        {{"eval", "-p", (dir / "pred.txt").string(), "-g", (dir / "gold.txt").string()}, p("eval.out")},
    };
  };
  const fs::path runs[2] = {dir / "run_a", dir / "run_b"};
  for (const auto& d : runs) {
    fs::create_directories(d);
    for (const auto& [args, stdout_path] : commands(d)) {
      const int code = run_cli(cli, args, stdout_path);
      if (code != 0) fail(o, args.front() + ": exit code " + std::to_string(code));
    }
  }
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(runs[0])) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(runs[1])) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    const auto a = runs[0] / n, b = runs[1] / n;
    if (!fs::exists(a) || !fs::exists(b)) {
      fail(o, n + " missing in one run");
    } else if (testing::read_bytes(a.string()) != testing::read_bytes(b.string())) {
      fail(o, n + " differs");
    } else if (fs::file_size(a) == 0 && n != "align.tsv") {
      fail(o, n + " is empty");
    }
  }
  note(o, std::to_string(names.size()) + " files compared");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli, data_dir;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") {
      cli = argv[i + 1];
    } else if (flag == "--data-dir") {
      data_dir = argv[i + 1];
    }
  }
  if (cli.empty()) {
    std::cerr << "usage: acceptance --cli <graphogan binary> [--data-dir <dir>]\n";
    return 2;
  }
  testing::TempDir tmp;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 gradient check, 5 seeds, hidden 8, V 5, T 10", gradients},
      {"AC2 levenshtein vs recursive oracle", levenshtein_oracle},
      {"AC3 codec round trip", codec_round_trip},
      {"AC4 cleaning properties", cleaning},
      {"AC5 loss bounds over 500 epochs", loss_bounds},
      {"AC6 GAN learns consonant/vowel stems", gan_sanity},
      {"AC7 trigram beats random on cross-entropy", [&] { return trigram_quality(data_dir); }},
      {"AC8 10000 valid triples per method", [&] { return pipeline_scale(cli, tmp.path); }},
      {"AC9 CLI determinism", [&] { return determinism(cli, tmp.path); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      fail(o, std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << " (" << o.detail << ")" << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   charsoft_acceptance [--only=<name>] [--cli=<path to charsoft>]
//
// Exit status is non-zero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "charsoft/centroid.hpp"
#include "charsoft/config.hpp"
#include "charsoft/embed.hpp"
#include "charsoft/hashing.hpp"
#include "charsoft/loss.hpp"
#include "charsoft/numeric.hpp"
#include "charsoft/pipeline.hpp"
#include "charsoft/recognizer.hpp"
#include "charsoft/softlabel.hpp"
#include "charsoft/textio.hpp"
#include "support.hpp"

using namespace charsoft;
namespace t = charsoft::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string cli_path;

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + cli_path + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome loss_reduction() {
  Rng rng(20240101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + rng.below(60);
    const std::size_t n = 1 + rng.below(12);
    Eigen::MatrixXd logits = t::random_matrix(rng, k, n, 0.5 + 5.0 * rng.uniform01());
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    std::vector<int> labels;
    std::vector<bool> mask;
    for (std::size_t p = 0; p < n; ++p) {
      labels.push_back(static_cast<int>(rng.below(k)));
      targets(labels.back(), static_cast<Eigen::Index>(p)) = 1.0;
      mask.push_back(rng.uniform01() < 0.9);
    }
    worst = std::max(worst, std::abs(kl_loss(targets, logits, mask).total - cross_entropy(labels, logits, mask).total));
  }

  const RunConfig cfg;
  const CharVocab vocab = cfg.vocab();
  const Corpus corpus = build_corpus(cfg);
  const Dataset dataset = build_dataset(cfg, corpus);
  WordList words;
  for (const auto& s : dataset.samples) words.add(s.word);
  const SoftLabelSet degenerate = onehot_softlabels(words, vocab);
  TrainConfig tc = cfg.train;
  const std::string onehot_log = format_training_log(train(tc, dataset, vocab, nullptr).log);
  tc.label_mode = LabelMode::kSoft;
  const std::string soft_log = format_training_log(train(tc, dataset, vocab, &degenerate).log);
  const bool identical = onehot_log == soft_log;
  return {worst <= 1e-12 && identical,
          "max |kl - ce| over 1000 instances = " + fmt("%.3g", worst) + "; " + std::to_string(tc.epochs) +
              "-epoch onehot vs degenerate-soft logs " + (identical ? "bit-identical" : "DIFFER")};
}

Outcome gradient_correctness() {
  const double h = 1e-5;
  Rng rng(77);
  double worst_loss = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t k = 2 + rng.below(40);
    const std::size_t n = 1 + rng.below(10);
    const Eigen::MatrixXd logits = t::random_matrix(rng, k, n, 0.5 + 4.0 * rng.uniform01());
    Eigen::MatrixXd targets(logits.rows(), logits.cols());
    for (Eigen::Index p = 0; p < targets.cols(); ++p) targets.col(p) = t::random_distribution(rng, k, rng.uniform01() < 0.5);
    const std::vector<bool> mask(n, true);
    const Eigen::MatrixXd g = kl_loss_grad(targets, logits, mask);
    for (Eigen::Index e = 0; e < logits.size(); ++e) {
      Eigen::MatrixXd up = logits, down = logits;
      up.data()[e] += h;
      down.data()[e] -= h;
      const double fd = (kl_loss(targets, up, mask).total - kl_loss(targets, down, mask).total) / (2 * h);
      worst_loss = std::max(worst_loss, t::fd_relative_error(g.data()[e], fd));
    }
  }

  const CharVocab vocab = build_vocab("abo0l1");
  const GlyphBank bank(vocab, GlyphBankParams{6, 0.1, 0.05, {{'o', '0'}, {'l', '1'}}, 5});
  double worst_net = 0.0;
  std::size_t checked = 0;
  for (int i = 0; i < 50; ++i) {
    const WordList words = t::random_wordlist(rng, "abo0l1", 3, 1, 5);
    const Dataset d = make_dataset(words, vocab, bank, 1, rng.next_u64());
    RecognizerParams p = RecognizerParams::random(6, 4, vocab.k(), rng.next_u64());
    for (auto* m : p.tensors()) *m += t::random_matrix(rng, m->rows(), m->cols(), 0.3);
    const bool soft = i % 2 == 1;
    std::vector<std::vector<SoftColumn>> targets(d.samples.size());
    if (soft) {
      for (std::size_t s = 0; s < d.samples.size(); ++s) {
        for (int label : d.samples[s].labels) {
          targets[s].push_back({t::random_distribution(rng, vocab.k(), true), label, ColumnOrigin::kRetained});
        }
      }
    }
    auto loss = [&](RecognizerParams* grad) {
      double total = 0.0;
      for (std::size_t s = 0; s < d.samples.size(); ++s) {
        total += sample_loss_and_grad(p, d.samples[s], targets[s], true, vocab.eos(), grad);
      }
      return total;
    };
    RecognizerParams grad = RecognizerParams::zeros(6, 4, vocab.k());
    loss(&grad);
    auto pt = p.tensors();
    auto gt = grad.tensors();
    for (std::size_t ti = 0; ti < pt.size(); ++ti) {
      for (Eigen::Index e = 0; e < pt[ti]->size(); ++e) {
        const double saved = pt[ti]->data()[e];
        pt[ti]->data()[e] = saved + h;
        const double up = loss(nullptr);
        pt[ti]->data()[e] = saved - h;
        const double down = loss(nullptr);
        pt[ti]->data()[e] = saved;
        worst_net = std::max(worst_net, t::fd_relative_error(gt[ti]->data()[e], (up - down) / (2 * h)));
        ++checked;
      }
    }
  }
  return {worst_loss < 1e-4 && worst_net < 1e-4,
          "max rel error: loss gradient " + fmt("%.3g", worst_loss) + ", network backprop " + fmt("%.3g", worst_net) +
              " over " + std::to_string(checked) + " parameters in 50 batches"};
}

Outcome distribution_validity() {
  RunConfig cfg;
  const CharVocab vocab = cfg.vocab();
  const Corpus corpus = build_corpus(cfg);
  const WordList dict = centroid_dictionary(cfg, corpus);
  const EmbeddingSet emb = synth_embed(dict, vocab, cfg.embed);
  const CentroidMatrix w = estimate_centroids(emb, vocab);
  const double threshold = 0.85;
  const double off = (1.0 - threshold) / static_cast<double>(vocab.k() - 1);

  std::size_t columns = 0, fallbacks = 0, violations = 0;
  bool idempotent = true;
  for (double temperature : {0.05, 0.1, 0.15, 1.0}) {
    const SoftLabelSet set = generate_softlabels(emb, w, {threshold, temperature, true});
    for (const auto& wl : set.entries()) {
      for (const auto& c : wl.columns) {
        ++columns;
        bool ok = std::abs(c.probs.sum() - 1.0) <= 1e-9 && c.probs[c.label] >= threshold && argmax(c.probs) == c.label;
        if (c.origin == ColumnOrigin::kFallback) {
          ++fallbacks;
          for (Eigen::Index i = 0; i < c.probs.size(); ++i) ok = ok && c.probs[i] == (i == c.label ? threshold : off);
        }
        violations += !ok;
      }
    }
    idempotent = idempotent && format_softlabels(apply_threshold(set)) == format_softlabels(set);
  }
  return {violations == 0 && idempotent && fallbacks > 0,
          std::to_string(columns) + " columns at 4 temperatures, " + std::to_string(fallbacks) + " fallbacks, " +
              std::to_string(violations) + " violations; post-processing " + (idempotent ? "idempotent" : "NOT idempotent")};
}

Outcome centroid_oracle() {
  const CharVocab vocab = default_vocab();
  Rng rng(4242);
  double worst = 0.0;
  bool scale_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    WordList words;
    std::size_t total = 0;
    while (total < 200) {
      const std::string w = t::random_word(rng, "abcdefghij0123", 1, std::min<std::size_t>(9, 200 - total));
      if (words.add(w)) total += w.size();
    }
    const std::size_t dim = 1 + rng.below(16);
    EmbeddingSet set = t::random_embeddings(rng, words, dim, std::exp(2.0 * rng.normal()));
    const double shift = 50.0 * rng.normal();
    for (auto& r : set.records) r.vectors.array() += shift;

    // Naive oracle: sum then divide.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(vocab.k()));
    std::vector<double> counts(vocab.k(), 0.0);
    for (const auto& r : set.records) {
      const auto cls = vocab.encode(r.word);
      for (std::size_t j = 0; j < cls.size(); ++j) {
        sums.col(cls[j]) += r.vectors.col(static_cast<Eigen::Index>(j));
        counts[static_cast<std::size_t>(cls[j])] += 1.0;
      }
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] > 0) sums.col(static_cast<Eigen::Index>(c)) /= counts[c];
    }

    const CentroidMatrix whole = estimate_centroids(set, vocab);
    const std::span<const EmbeddingRecord> all(set.records);
    const std::size_t cut = 1 + rng.below(all.size() - 1);
    const CentroidMatrix merged =
        merge_centroids(estimate_centroids(all.first(cut), dim, vocab), estimate_centroids(all.subspan(cut), dim, vocab));
    EmbeddingSet shuffled = set;
    for (std::size_t i = shuffled.records.size(); i > 1; --i) std::swap(shuffled.records[i - 1], shuffled.records[rng.below(i)]);
    const CentroidMatrix permuted = estimate_centroids(shuffled, vocab);
    worst = std::max({worst, t::max_abs_diff(whole.prototypes, sums), t::max_abs_diff(merged.prototypes, sums),
                      t::max_abs_diff(permuted.prototypes, sums)});

    EmbeddingSet scaled = set;
    const double s = std::ldexp(1.0, static_cast<int>(rng.below(41)) - 20);
    for (auto& r : scaled.records) r.vectors *= s;
    scale_ok = scale_ok && t::bit_equal(estimate_centroids(scaled, vocab).prototypes, whole.prototypes * s);
  }
  return {worst <= 1e-12 && scale_ok, "200 instances of 200 occurrences: max deviation from naive mean " +
                                          fmt("%.3g", worst) + " (streaming, merged, permuted); scaling " +
                                          (scale_ok ? "exact" : "BROKEN")};
}

Outcome mislabel_rate() {
  const WordList words = demo_words(500, derive_seed(1, "corpus/in-domain"));
  const CharVocab vocab = default_vocab();
  const EmbeddingSet emb = synth_embed(words, vocab, SynthParams{64, 1, 0.05, 2});
  const CentroidMatrix w = estimate_centroids(emb, vocab);
  const SoftLabelSet set = generate_softlabels(emb, w, {0.85, 1.0, true});
  const SoftLabelSet raw_dot = generate_softlabels(emb, w, {0.85, 1.0, false});
  const double rate = set.stats.mislabel_rate();
  return {rate <= 0.008, "d=64 radius=1 noise=0.05 over 500 words (" + std::to_string(set.stats.char_columns) +
                             " characters): mislabel rate " + fmt("%.4f", rate) + " (unnormalized scores: " +
                             fmt("%.4f", raw_dot.stats.mislabel_rate()) + ")"};
}

Outcome ab_run() {
  if (cli_path.empty()) return {false, "charsoft CLI not available"};
  t::TempDir dir("accept-ab");
  if (run_cli("init-config --out '" + (dir / "demo.cfg").string() + "'", dir / "init.log") != 0) {
    return {false, "init-config failed"};
  }
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_cli("ab-run --config '" + (dir / "demo.cfg").string() + "' --seeds 5 --report '" +
                             (dir / "ab.txt").string() + "'",
                         dir / "ab.log");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rc != 0) return {false, "ab-run exited with " + std::to_string(rc)};
  const std::string report = read_file(dir / "ab.txt");
  std::printf("%s", report.c_str());
  double onehot = -1, soft = -1, margin = 0;
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string seed, mode;
    double word, chr, edit, amb;
    if (fields >> seed >> mode >> word >> chr >> edit >> amb && seed == "mean") (mode == "soft" ? soft : onehot) = amb;
    if (line.rfind("ambiguous_margin=", 0) == 0) margin = std::stod(line.substr(17));
  }
  const bool table = onehot >= 0 && soft >= 0;
  // The child runs single-threaded, so wall time bounds its CPU time.
  return {table && soft >= onehot && wall < 300.0,
          "mean ambiguous-pair char accuracy soft " + fmt("%.4f", soft) + " vs onehot " + fmt("%.4f", onehot) +
              " (margin " + fmt("%+.4f", margin) + "); " + fmt("%.1f", wall) + " s"};
}

Outcome determinism_roundtrip() {
  if (cli_path.empty()) return {false, "charsoft CLI not available"};
  t::TempDir dir("accept-det");
  std::ofstream(dir / "run.cfg") << "train.epochs = 3\ncorpus.demo_words = 200\ncorpus.demo_generic = 1500\n"
                                    "corpus.n_generic = 400\n";
  // Each command runs twice into run0/ and run1/; outputs must hash equal.
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps = {
      {"demo-corpus --out-dir {o} --seed 9 --words 300 --generic 2000", {"all.txt", "train.txt", "heldout.txt", "generic.txt"}},
      {"sample-dict --generic {i}/generic.txt --in-domain {i}/train.txt --exclude {i}/heldout.txt --n 800 --seed 3 --out {o}/dict.txt",
       {"dict.txt"}},
      {"synth-embed --words {i}/dict.txt --dim 32 --seed 5 --out {o}/e.emb", {"e.emb"}},
      {"centroids --embeddings {i}/e.emb --out {o}/c.cen", {"c.cen"}},
      {"softlabels --embeddings {i}/e.emb --centroids {i}/c.cen --temperature 0.1 --out {o}/s.sl --stats {o}/s.stats",
       {"s.sl", "s.stats"}},
      {"project --embeddings {i}/e.emb --centroids {i}/c.cen --out-csv {o}/p.csv", {"p.csv"}},
      {"train --config {c} --out-params {o}/onehot.bin --log {o}/onehot.log", {"onehot.bin", "onehot.log"}},
      {"eval --params {i}/onehot.bin --dataset {c} --report {o}/eval.txt", {"eval.txt"}},
      {"ab-run --config {c} --seeds 1 --report {o}/ab.txt", {"ab.txt"}},
      {"init-config --out {o}/default.cfg", {"default.cfg"}},
  };
  const fs::path base = dir.path();
  const fs::path input = base / "run0";  // later steps read the first run's artifacts
  for (const char* d : {"run0", "run1"}) fs::create_directories(base / d);
  std::size_t compared = 0;
  for (const auto& [tmpl, outputs] : steps) {
    for (const char* d : {"run0", "run1"}) {
      std::string args = tmpl;
      for (const auto& [key, value] :
           {std::pair<std::string, std::string>{"{o}", "'" + (base / d).string() + "'"},
            {"{i}", "'" + input.string() + "'"},
            {"{c}", "'" + (base / "run.cfg").string() + "'"}}) {
        for (std::size_t pos; (pos = args.find(key)) != std::string::npos;) args.replace(pos, key.size(), value);
      }
      if (run_cli(args, base / "cli.log") != 0) {
        return {false, "command failed: charsoft " + args + ": " + read_file(base / "cli.log")};
      }
    }
    for (const auto& out : outputs) {
      if (hash_file((base / "run0" / out).string()) != hash_file((base / "run1" / out).string())) {
        return {false, "output " + out + " differs between identical runs"};
      }
      ++compared;
    }
  }
  const std::size_t commands = steps.size();

  // Canonical files re-serialize byte-identically after a load.
  const CharVocab vocab = default_vocab();
  const std::string emb_text = read_file(input / "e.emb");
  const std::string cen_text = read_file(input / "c.cen");
  const std::string sl_text = read_file(input / "s.sl");
  const bool emb_rt = format_embeddings(parse_embeddings(emb_text)) == emb_text;
  const bool cen_rt = format_centroids(parse_centroids(cen_text)) == cen_text;
  const bool sl_rt = format_softlabels(parse_softlabels(sl_text, vocab)) == sl_text;
  const bool params_rt =
      [&] {
        const std::string blob = read_file(input / "onehot.bin");
        ParamsStamp stamp;
        const RecognizerParams p = deserialize_params(blob, &stamp);
        return serialize_params(p, stamp) == blob;
      }();
  const bool all_rt = emb_rt && cen_rt && sl_rt && params_rt;
  return {all_rt, std::to_string(commands) + " commands, " + std::to_string(compared) +
                      " outputs hash-identical across reruns; round-trip EMB " + (emb_rt ? "ok" : "FAIL") + ", CEN " +
                      (cen_rt ? "ok" : "FAIL") + ", SL " + (sl_rt ? "ok" : "FAIL") + ", params " +
                      (params_rt ? "ok" : "FAIL")};
}

Outcome dictionary_protocol() {
  WordList generic;
  for (std::size_t i = 0; i < 90000; ++i) generic.add("w" + std::to_string(i), WordSource::kGeneric);
  Rng rng(5);
  WordList test_words, in_domain;
  for (std::size_t i = 0; i < 9000; ++i) test_words.add(generic[rng.below(generic.size())]);
  for (std::size_t i = 0; i < 3000; ++i) in_domain.add(generic[rng.below(generic.size())]);
  const std::string shared = test_words[0];
  in_domain.add(shared);

  const WordList a = sample_dictionary(generic, in_domain, test_words, 30000, 11);
  const WordList b = sample_dictionary(generic, in_domain, test_words, 30000, 11);
  const WordList c = sample_dictionary(generic, in_domain, test_words, 30000, 12);
  std::size_t leaks = 0;
  for (const auto& e : a.entries()) leaks += test_words.contains(e.word) && !in_domain.contains(e.word);
  for (const auto& e : c.entries()) leaks += test_words.contains(e.word) && !in_domain.contains(e.word);

  // Many small random instances, where overlaps are frequent.
  for (int trial = 0; trial < 2000; ++trial) {
    const WordList g = t::random_wordlist(rng, "ab", 12, 1, 4);
    WordList tw, id;
    for (const auto& e : g.entries()) {
      const double u = rng.uniform01();
      if (u < 0.4) tw.add(e.word);
      if (u > 0.3 && u < 0.5) id.add(e.word);
    }
    std::size_t avail = 0;
    for (const auto& e : g.entries()) avail += !tw.contains(e.word);
    const WordList dict = sample_dictionary(g, id, tw, rng.below(avail + 1), rng.next_u64());
    for (const auto& e : dict.entries()) {
      leaks += tw.contains(e.word) && !id.contains(e.word);
    }
  }
  const bool reproducible = a.words() == b.words();
  const bool seed_sensitive = a.words() != c.words();
  return {leaks == 0 && reproducible && seed_sensitive && a.contains(shared),
          "30k of 90k: " + std::to_string(a.size()) + " words, reproducible " + (reproducible ? "yes" : "NO") +
              ", seed-sensitive " + (seed_sensitive ? "yes" : "NO") + "; test-exclusive leaks " + std::to_string(leaks) +
              " (incl. 2000 random instances)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--only=", 0) == 0) {
      only = arg.substr(7);
    } else if (arg.rfind("--cli=", 0) == 0) {
      cli_path = arg.substr(6);
    } else {
      std::fprintf(stderr, "usage: %s [--only=<criterion>] [--cli=<charsoft>]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"loss_reduction", loss_reduction},
      {"gradient_correctness", gradient_correctness},
      {"distribution_validity", distribution_validity},
      {"centroid_oracle", centroid_oracle},
      {"mislabel_rate", mislabel_rate},
      {"ab_run", ab_run},
      {"determinism_roundtrip", determinism_roundtrip},
      {"dictionary_protocol", dictionary_protocol},
  };
  int failures = 0;
  bool matched = false;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && only != name) continue;
    matched = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !out.pass;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}

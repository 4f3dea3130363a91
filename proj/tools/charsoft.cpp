// charsoft: command-line driver for the soft-label pipeline.
//
// Every command validates its inputs before writing anything, writes its
// outputs atomically, and stamps them with a digest of the command line and
// input contents. Failures print one line `E<code> <kind>: <message>` to
// stderr and exit with <code>.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "charsoft/centroid.hpp"
#include "charsoft/config.hpp"
#include "charsoft/embed.hpp"
#include "charsoft/error.hpp"
#include "charsoft/hashing.hpp"
#include "charsoft/pipeline.hpp"
#include "charsoft/projection.hpp"
#include "charsoft/recognizer.hpp"
#include "charsoft/rng.hpp"
#include "charsoft/softlabel.hpp"
#include "charsoft/textio.hpp"
#include "charsoft/vocab.hpp"

namespace fs = std::filesystem;
using namespace charsoft;

namespace {

/// Digest of a command invocation: name, options, and input file contents.
class Stamp {
 public:
  explicit Stamp(std::string_view command) { h_.update("charsoft-cli/v1:").update(command); }

  Stamp& arg(std::string_view key, std::string_view value) {
    h_.update("\n").update(key).update("=").update(value);
    return *this;
  }
  Stamp& file(std::string_view key, const fs::path& path) {
    return arg(key, "file:" + to_hex64(hash_file(path.string())));
  }
  std::string hex() const { return h_.hex(); }

 private:
  Fnv1a h_;
};

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw PreconditionError(std::string(what) + " not found: " + path.string());
  }
}

/// Outputs must not alias inputs; commands never modify what they read.
void check_outputs(std::initializer_list<fs::path> inputs, std::initializer_list<fs::path> outputs) {
  for (const auto& out : outputs) {
    if (out.empty()) continue;
    const auto parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) throw PreconditionError("output directory does not exist: " + parent.string());
    for (const auto& in : inputs) {
      if (!in.empty() && fs::exists(out) && fs::equivalent(in, out)) {
        throw PreconditionError("output " + out.string() + " would overwrite an input");
      }
    }
  }
}

CharVocab make_vocab(const std::string& chars, const std::string& case_policy) {
  return build_vocab(chars, parse_case_policy(case_policy));
}

// ---------------------------------------------------------------------------

struct SampleDictArgs {
  fs::path generic, in_domain, exclude, out;
  std::size_t n = 30000;
  std::uint64_t seed = 0;
  std::string case_policy = "fold_lower";
};

void run_sample_dict(const SampleDictArgs& a) {
  require_file(a.generic, "generic word list");
  require_file(a.in_domain, "in-domain word list");
  if (!a.exclude.empty()) require_file(a.exclude, "exclusion word list");
  check_outputs({a.generic, a.in_domain, a.exclude}, {a.out});
  const CasePolicy policy = parse_case_policy(a.case_policy);
  const WordList generic = read_wordlist(a.generic, WordSource::kGeneric, policy);
  const WordList in_domain = read_wordlist(a.in_domain, WordSource::kInDomain, policy);
  const WordList exclude = a.exclude.empty() ? WordList{} : read_wordlist(a.exclude, WordSource::kInDomain, policy);
  const WordList dict = sample_dictionary(generic, in_domain, exclude, a.n, a.seed);

  Stamp stamp("sample-dict");
  stamp.file("generic", a.generic).file("in_domain", a.in_domain);
  if (!a.exclude.empty()) stamp.file("exclude", a.exclude);
  stamp.arg("n", std::to_string(a.n)).arg("seed", std::to_string(a.seed)).arg("case", a.case_policy);
  std::string text = "# cfg=" + stamp.hex() + " rng=" + std::string(kRngAlgorithm) +
                     " seed=" + std::to_string(a.seed) + " n_generic=" + std::to_string(a.n) +
                     " in_domain=" + std::to_string(in_domain.size()) + '\n';
  text += format_wordlist(dict);
  write_file_atomic(a.out, text);
  std::printf("wrote %zu words (%zu in-domain, %zu generic) to %s\n", dict.size(), in_domain.size(),
              dict.size() - in_domain.size(), a.out.c_str());
}

struct SynthEmbedArgs {
  fs::path words, out;
  std::size_t dim = 64;
  std::size_t radius = 1;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::string vocab{kDefaultCharSet};
  std::string case_policy = "fold_lower";
  bool decimal = false;
};

void run_synth_embed(const SynthEmbedArgs& a) {
  require_file(a.words, "word list");
  check_outputs({a.words}, {a.out});
  const CharVocab vocab = make_vocab(a.vocab, a.case_policy);
  const WordList words = read_wordlist(a.words, WordSource::kInDomain, vocab.case_policy());
  EmbeddingSet set = synth_embed(words, vocab, SynthParams{a.dim, a.radius, a.noise, a.seed});
  Stamp stamp("synth-embed");
  stamp.file("words", a.words)
      .arg("dim", std::to_string(a.dim))
      .arg("radius", std::to_string(a.radius))
      .arg("noise", format_scalar(a.noise))
      .arg("seed", std::to_string(a.seed))
      .arg("vocab", a.vocab)
      .arg("case", a.case_policy);
  set.metadata["cfg"] = stamp.hex();
  save_embeddings(set, a.out, a.decimal ? FloatFormat::kDecimal : FloatFormat::kHex);
  std::printf("wrote %zu records (dim=%zu) to %s\n", set.records.size(), set.dim, a.out.c_str());
}

struct CentroidArgs {
  fs::path embeddings, out;
  std::string vocab{kDefaultCharSet};
  std::string case_policy = "fold_lower";
};

void run_centroids(const CentroidArgs& a) {
  require_file(a.embeddings, "embedding file");
  check_outputs({a.embeddings}, {a.out});
  const CharVocab vocab = make_vocab(a.vocab, a.case_policy);
  const EmbeddingSet set = load_embeddings(a.embeddings);
  CentroidMatrix w = estimate_centroids(set, vocab);
  Stamp stamp("centroids");
  stamp.file("embeddings", a.embeddings).arg("vocab", a.vocab).arg("case", a.case_policy);
  w.metadata["cfg"] = stamp.hex();
  save_centroids(w, a.out);
  std::printf("wrote %zu centroids (dim=%zu, %zu occurrences) to %s\n", w.k(), w.dim(), w.total_count(),
              a.out.c_str());
  for (int c : w.unsupported_chars()) {
    std::fprintf(stderr, "warning: class '%s' has no samples\n", vocab.symbol(c).c_str());
  }
}

struct SoftLabelArgs {
  fs::path embeddings, centroids, out, stats;
  double threshold = kDefaultThreshold;
  double temperature = 1.0;
  int normalize = 1;
};

void run_softlabels(const SoftLabelArgs& a) {
  require_file(a.embeddings, "embedding file");
  require_file(a.centroids, "centroid file");
  check_outputs({a.embeddings, a.centroids}, {a.out, a.stats});
  const EmbeddingSet set = load_embeddings(a.embeddings);
  const CentroidMatrix w = load_centroids(a.centroids);
  SoftLabelSet labels = generate_softlabels(set, w, SoftLabelParams{a.threshold, a.temperature, a.normalize != 0});
  Stamp stamp("softlabels");
  stamp.file("embeddings", a.embeddings)
      .file("centroids", a.centroids)
      .arg("T", format_scalar(a.threshold))
      .arg("temperature", format_scalar(a.temperature))
      .arg("normalize", std::to_string(a.normalize));
  labels.metadata["cfg"] = stamp.hex();
  save_softlabels(labels, a.out);
  if (!a.stats.empty()) write_file_atomic(a.stats, format_stats(labels));
  std::printf("wrote %zu words; mislabel_rate=%s fallback_rate=%s\n", labels.size(),
              format_scalar(labels.stats.mislabel_rate()).c_str(),
              format_scalar(labels.stats.fallback_rate()).c_str());
}

struct ProjectArgs {
  fs::path embeddings, centroids, out_csv;
};

void run_project(const ProjectArgs& a) {
  require_file(a.embeddings, "embedding file");
  if (!a.centroids.empty()) require_file(a.centroids, "centroid file");
  check_outputs({a.embeddings, a.centroids}, {a.out_csv});
  const EmbeddingSet set = load_embeddings(a.embeddings);
  std::optional<CentroidMatrix> w;
  if (!a.centroids.empty()) w = load_centroids(a.centroids);
  const Projection proj = project_embeddings(set, w ? &*w : nullptr);
  Stamp stamp("project");
  stamp.file("embeddings", a.embeddings);
  if (w) stamp.file("centroids", a.centroids);
  write_file_atomic(a.out_csv, "# cfg=" + stamp.hex() + '\n' + format_projection_csv(proj));
  std::printf("wrote %zu rows; variance pc1=%s pc2=%s\n", proj.rows.size(),
              format_scalar(proj.components.variances[0]).c_str(),
              format_scalar(proj.components.variances[1]).c_str());
}

struct TrainArgs {
  fs::path config, out_params, log;
  std::string labels = "onehot";
};

void run_train(const TrainArgs& a) {
  require_file(a.config, "config");
  const bool onehot = a.labels == "onehot";
  if (!onehot) require_file(a.labels, "soft-label file");
  check_outputs({a.config, onehot ? fs::path() : fs::path(a.labels)}, {a.out_params, a.log});
  const RunConfig cfg = load_run_config(a.config);
  cfg.validate();
  const CharVocab vocab = cfg.vocab();
  std::optional<SoftLabelSet> labels;
  if (!onehot) labels = load_softlabels(a.labels, vocab);

  const Corpus corpus = build_corpus(cfg);
  const Dataset dataset = build_dataset(cfg, corpus);
  TrainConfig tc = cfg.train;
  tc.label_mode = onehot ? LabelMode::kOneHot : LabelMode::kSoft;
  const TrainResult result = train(tc, dataset, vocab, labels ? &*labels : nullptr);

  Stamp stamp("train");
  stamp.arg("config", to_hex64(config_hash(cfg)));
  if (onehot) {
    stamp.arg("labels", "onehot");
  } else {
    stamp.file("labels", a.labels);
  }
  const std::uint64_t stamp_hash = fnv1a(stamp.hex());
  save_params(result.params, ParamsStamp{stamp_hash, dataset.hash()}, a.out_params);
  if (!a.log.empty()) {
    write_file_atomic(a.log, format_training_log(result.log, {{"cfg", stamp.hex()},
                                                              {"dataset", to_hex64(dataset.hash())},
                                                              {"labels", std::string(to_string(tc.label_mode))}}));
  }
  const auto& last = result.log.empty() ? EpochLog{} : result.log.back();
  std::printf("trained %zu epochs (%s labels); final train_loss=%s val_loss=%s\n", result.log.size(),
              std::string(to_string(tc.label_mode)).c_str(), format_scalar(last.train_loss).c_str(),
              format_scalar(last.val_loss).c_str());
}

struct EvalArgs {
  fs::path params, dataset, report;
};

void run_eval(const EvalArgs& a) {
  require_file(a.params, "parameter file");
  require_file(a.dataset, "dataset config");
  check_outputs({a.params, a.dataset}, {a.report});
  ParamsStamp pstamp;
  const RecognizerParams params = load_params(a.params, &pstamp);
  const RunConfig cfg = load_run_config(a.dataset);
  cfg.validate();
  const CharVocab vocab = cfg.vocab();
  const Corpus corpus = build_corpus(cfg);
  const Dataset dataset = build_dataset(cfg, corpus);
  if (dataset.hash() != pstamp.dataset_hash) {
    throw PreconditionError("parameters were trained on dataset " + to_hex64(pstamp.dataset_hash) +
                            " but the given config produces dataset " + to_hex64(dataset.hash()));
  }
  if (params.k() != vocab.k() || params.feature_dim() != cfg.glyph_dim) {
    throw PreconditionError("parameter shapes do not match the dataset config");
  }
  const GlyphBank bank(vocab, cfg.glyph_params());
  const Metrics m = evaluate(params, dataset, bank, vocab.eos(), Split::kTest);
  Stamp stamp("eval");
  stamp.file("params", a.params).arg("dataset", to_hex64(dataset.hash()));
  write_file_atomic(a.report, format_metrics(m, {{"cfg", stamp.hex()}, {"dataset", to_hex64(dataset.hash())}}));
  std::printf("word_accuracy=%s char_accuracy=%s ambiguous_char_accuracy=%s\n",
              format_scalar(m.word_accuracy).c_str(), format_scalar(m.char_accuracy).c_str(),
              format_scalar(m.ambiguous_char_accuracy).c_str());
}

struct AbArgs {
  fs::path config, report;
  std::size_t seeds = 5;
};

void run_ab_cmd(const AbArgs& a) {
  require_file(a.config, "config");
  check_outputs({a.config}, {a.report});
  const RunConfig cfg = load_run_config(a.config);
  cfg.validate();
  const AbReport report = run_ab(cfg, a.seeds);
  Stamp stamp("ab-run");
  stamp.arg("config", to_hex64(config_hash(cfg))).arg("seeds", std::to_string(a.seeds));
  const std::string text = format_ab_report(report, {{"cfg", stamp.hex()}});
  write_file_atomic(a.report, text);
  std::fputs(text.c_str(), stdout);
}

struct DemoCorpusArgs {
  fs::path out_dir;
  std::uint64_t seed = 1;
  std::size_t words = 500;
  std::size_t generic = 5000;
};

void run_demo_corpus(const DemoCorpusArgs& a) {
  if (!fs::is_directory(a.out_dir)) throw PreconditionError("output directory does not exist: " + a.out_dir.string());
  const WordList all = demo_words(a.words, derive_seed(a.seed, "corpus/in-domain"));
  WordList train_words, test_words;
  for (const auto& e : all.entries()) {
    (split_of(e.word) == Split::kTrain ? train_words : test_words).add(e.word);
  }
  const WordList generic = demo_words(a.generic, derive_seed(a.seed, "corpus/generic"));
  Stamp stamp("demo-corpus");
  stamp.arg("seed", std::to_string(a.seed)).arg("words", std::to_string(a.words)).arg("generic", std::to_string(a.generic));
  const std::string head = "# cfg=" + stamp.hex() + " rng=" + std::string(kRngAlgorithm) + '\n';
  write_file_atomic(a.out_dir / "all.txt", head + format_wordlist(all));
  write_file_atomic(a.out_dir / "train.txt", head + format_wordlist(train_words));
  write_file_atomic(a.out_dir / "heldout.txt", head + format_wordlist(test_words));
  write_file_atomic(a.out_dir / "generic.txt", head + format_wordlist(generic));
  std::printf("wrote %zu words (%zu train, %zu held out) and %zu generic words to %s\n", all.size(),
              train_words.size(), test_words.size(), generic.size(), a.out_dir.c_str());
}

void run_validate(const fs::path& embeddings) {
  require_file(embeddings, "embedding file");
  std::vector<std::string> warnings;
  const EmbeddingSet set = load_embeddings(embeddings, &warnings);
  std::printf("ok dim=%zu count=%zu provenance=%s occurrences=%zu warnings=%zu\n", set.dim, set.records.size(),
              std::string(to_string(set.provenance)).c_str(), set.total_occurrences(), warnings.size());
  for (const auto& w : warnings) std::printf("warning: %s\n", w.c_str());
}

void run_init_config(const fs::path& out) {
  check_outputs({}, {out});
  write_file_atomic(out, format_run_config(RunConfig{}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft character labels from language-model embeddings, plus a desk-scale recognizer"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  SampleDictArgs sd;
  auto* c_sd = app.add_subcommand("sample-dict", "In-domain words plus a seeded generic sample, test words excluded");
  c_sd->add_option("--generic", sd.generic, "Generic dictionary (one word per line)")->required();
  c_sd->add_option("--in-domain", sd.in_domain, "Training-set words, always kept")->required();
  c_sd->add_option("--exclude", sd.exclude, "Test words removed from the generic pool");
  c_sd->add_option("--n", sd.n, "Number of generic words to draw")->capture_default_str();
  c_sd->add_option("--seed", sd.seed, "Sampling seed")->capture_default_str();
  c_sd->add_option("--case", sd.case_policy, "fold_lower|keep")->capture_default_str();
  c_sd->add_option("--out", sd.out, "Output word list")->required();

  SynthEmbedArgs se;
  auto* c_se = app.add_subcommand("synth-embed", "Deterministic synthetic contextual character embeddings");
  c_se->add_option("--words", se.words, "Word list")->required();
  c_se->add_option("--dim", se.dim, "Embedding dimension")->capture_default_str();
  c_se->add_option("--radius", se.radius, "Context radius")->capture_default_str();
  c_se->add_option("--noise", se.noise, "Gaussian noise standard deviation")->capture_default_str();
  c_se->add_option("--seed", se.seed, "Seed")->capture_default_str();
  c_se->add_option("--vocab", se.vocab, "Character set")->capture_default_str();
  c_se->add_option("--case", se.case_policy, "fold_lower|keep")->capture_default_str();
  c_se->add_flag("--decimal", se.decimal, "Write decimal floats (debugging; not bit-exact)");
  c_se->add_option("--out", se.out, "Output EMB file")->required();

  CentroidArgs ce;
  auto* c_ce = app.add_subcommand("centroids", "Per-class mean of contextual embeddings");
  c_ce->add_option("--embeddings", ce.embeddings, "EMB file")->required();
  c_ce->add_option("--vocab", ce.vocab, "Character set")->capture_default_str();
  c_ce->add_option("--case", ce.case_policy, "fold_lower|keep")->capture_default_str();
  c_ce->add_option("--out", ce.out, "Output CEN file")->required();

  SoftLabelArgs sl;
  auto* c_sl = app.add_subcommand("softlabels", "Prototype-softmax soft labels with threshold post-processing");
  c_sl->add_option("--embeddings", sl.embeddings, "EMB file")->required();
  c_sl->add_option("--centroids", sl.centroids, "CEN file")->required();
  c_sl->add_option("--T", sl.threshold, "Label probability threshold in (0.5, 1)")->capture_default_str();
  c_sl->add_option("--temperature", sl.temperature, "Softmax temperature")->capture_default_str();
  c_sl->add_option("--normalize", sl.normalize, "L2-normalize vectors and prototypes (0|1)")->capture_default_str();
  c_sl->add_option("--out", sl.out, "Output SL file")->required();
  c_sl->add_option("--stats", sl.stats, "Statistics report (key=value)");

  ProjectArgs pr;
  auto* c_pr = app.add_subcommand("project", "2-D principal-component view of embeddings and centroids");
  c_pr->add_option("--embeddings", pr.embeddings, "EMB file")->required();
  c_pr->add_option("--centroids", pr.centroids, "CEN file");
  c_pr->add_option("--out-csv", pr.out_csv, "Output CSV")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train the recognizer on the configured glyph dataset");
  c_tr->add_option("--config", tr.config, "Run config")->required();
  c_tr->add_option("--labels", tr.labels, "'onehot' or an SL file")->capture_default_str();
  c_tr->add_option("--out-params", tr.out_params, "Output parameter blob")->required();
  c_tr->add_option("--log", tr.log, "Training log CSV");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Greedy-decode the test split and report metrics");
  c_ev->add_option("--params", ev.params, "Parameter blob")->required();
  c_ev->add_option("--dataset", ev.dataset, "Run config that regenerates the dataset")->required();
  c_ev->add_option("--report", ev.report, "Output metrics (key=value)")->required();

  AbArgs ab;
  auto* c_ab = app.add_subcommand("ab-run", "One-hot versus soft-label training over several seeds");
  c_ab->add_option("--config", ab.config, "Run config")->required();
  c_ab->add_option("--seeds", ab.seeds, "Number of seeds")->capture_default_str();
  c_ab->add_option("--report", ab.report, "Output comparison table")->required();

  DemoCorpusArgs dc;
  auto* c_dc = app.add_subcommand("demo-corpus", "Write the built-in demo word lists");
  c_dc->add_option("--out-dir", dc.out_dir, "Existing output directory")->required();
  c_dc->add_option("--seed", dc.seed, "Corpus seed")->capture_default_str();
  c_dc->add_option("--words", dc.words, "In-domain word count")->capture_default_str();
  c_dc->add_option("--generic", dc.generic, "Generic word count")->capture_default_str();

  fs::path validate_path;
  auto* c_va = app.add_subcommand("validate", "Check an EMB file against the interchange format");
  c_va->add_option("--embeddings", validate_path, "EMB file")->required();

  fs::path init_out;
  auto* c_ic = app.add_subcommand("init-config", "Write the default run config");
  c_ic->add_option("--out", init_out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::fprintf(stderr, "E2 usage: %s\n", msg.c_str());
    return static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (c_sd->parsed()) run_sample_dict(sd);
    else if (c_se->parsed()) run_synth_embed(se);
    else if (c_ce->parsed()) run_centroids(ce);
    else if (c_sl->parsed()) run_softlabels(sl);
    else if (c_pr->parsed()) run_project(pr);
    else if (c_tr->parsed()) run_train(tr);
    else if (c_ev->parsed()) run_eval(ev);
    else if (c_ab->parsed()) run_ab_cmd(ab);
    else if (c_dc->parsed()) run_demo_corpus(dc);
    else if (c_va->parsed()) run_validate(validate_path);
    else if (c_ic->parsed()) run_init_config(init_out);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::fprintf(stderr, "E%d %s: %s\n", static_cast<int>(e.kind()), to_string(e.kind()), msg.c_str());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "E%d %s: %s\n", static_cast<int>(ErrorKind::kPrecondition),
                 to_string(ErrorKind::kPrecondition), e.what());
    return static_cast<int>(ErrorKind::kPrecondition);
  }
  return 0;
}

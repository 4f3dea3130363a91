#include "charsoft/pipeline.hpp"

#include <array>
#include <cstdio>

#include "charsoft/error.hpp"
#include "charsoft/rng.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

namespace {

constexpr std::array<std::string_view, 30> kOnsets = {
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t",
    "v", "w", "z", "br", "cl", "dr", "fl", "gr", "pl", "qu", "sh", "st", "th", "tr", "ch"};
constexpr std::array<std::string_view, 10> kVowels = {"a", "e", "i", "o", "u", "ai", "ea", "ou", "oo", "y"};
constexpr std::array<std::string_view, 13> kCodas = {"", "", "", "n", "s", "l", "r", "t", "m", "ng", "st", "x", "k"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& items) {
  return items[static_cast<std::size_t>(rng.below(N))];
}

std::string syllable_word(Rng& rng) {
  std::string w;
  const auto syllables = 1 + rng.below(3);
  for (std::uint64_t s = 0; s < syllables; ++s) {
    if (s > 0 || rng.uniform01() < 0.85) w += pick(rng, kOnsets);
    w += pick(rng, kVowels);
    if (s + 1 == syllables || rng.uniform01() < 0.3) w += pick(rng, kCodas);
  }
  return w;
}

std::string number_word(Rng& rng) {
  if (rng.uniform01() < 0.3) return std::to_string(1900 + rng.below(130));
  const auto digits = 1 + rng.below(4);
  std::string w(1, static_cast<char>('1' + rng.below(9)));
  for (std::uint64_t i = 1; i < digits; ++i) {
    // trailing zeros are common in real numbers ("100", "2000")
    w += rng.uniform01() < 0.35 ? '0' : static_cast<char>('0' + rng.below(10));
  }
  return w;
}

std::string code_word(Rng& rng) {
  std::string w;
  const auto letters = 1 + rng.below(3);
  for (std::uint64_t i = 0; i < letters; ++i) w += static_cast<char>('a' + rng.below(26));
  w += number_word(rng).substr(0, 1 + rng.below(3));
  return w;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

WordList demo_words(std::size_t count, std::uint64_t seed) {
  WordList out;
  Rng rng(derive_seed(seed, "demo_words"));
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100 * count + 1000) {
      throw PreconditionError("demo word generator cannot produce " + std::to_string(count) + " distinct words");
    }
    const double u = rng.uniform01();
    std::string w = u < 0.7 ? syllable_word(rng) : (u < 0.88 ? number_word(rng) : code_word(rng));
    if (w.size() < 2 || w.size() > 10) continue;
    out.add(std::move(w), WordSource::kInDomain);
  }
  return out;
}

Corpus build_corpus(const RunConfig& config) {
  const CharVocab vocab = config.vocab();
  Corpus corpus;
  WordList all = config.train_words.empty()
                     ? demo_words(config.demo_words, derive_seed(config.corpus_seed, "corpus/in-domain"))
                     : read_wordlist(config.train_words, WordSource::kInDomain, config.case_policy);
  corpus.recognizer_words = filter_to_vocab(all, vocab, OovPolicy::kDropWord).words;
  if (corpus.recognizer_words.empty()) throw PreconditionError("no recognizer words remain after vocabulary filtering");
  for (const auto& e : corpus.recognizer_words.entries()) {
    if (split_of(e.word) == Split::kTrain) {
      corpus.in_domain.add(e.word, WordSource::kInDomain);
    } else {
      corpus.held_out.add(e.word, WordSource::kInDomain);
    }
  }
  WordList generic = config.generic_words.empty()
                         ? demo_words(config.demo_generic, derive_seed(config.corpus_seed, "corpus/generic"))
                         : read_wordlist(config.generic_words, WordSource::kGeneric, config.case_policy);
  const FilterResult filtered = filter_to_vocab(generic, vocab, OovPolicy::kDropWord);
  for (const auto& e : filtered.words.entries()) {
    corpus.generic.add(e.word, WordSource::kGeneric);
  }
  return corpus;
}

WordList centroid_dictionary(const RunConfig& config, const Corpus& corpus) {
  WordList exclude = corpus.held_out;
  if (!config.exclude_words.empty()) {
    const WordList extra = read_wordlist(config.exclude_words, WordSource::kInDomain, config.case_policy);
    for (const auto& e : extra.entries()) {
      exclude.add(e.word);
    }
  }
  return sample_dictionary(corpus.generic, corpus.in_domain, exclude, config.n_generic, config.corpus_seed);
}

LabelArtifacts build_labels(const RunConfig& config, const Corpus& corpus) {
  const CharVocab vocab = config.vocab();
  LabelArtifacts a{centroid_dictionary(config, corpus), {}, {}, SoftLabelSet(vocab, config.softlabel)};
  a.embeddings = synth_embed(a.dictionary, vocab, config.embed);
  a.centroids = estimate_centroids(a.embeddings, vocab);
  a.labels = generate_softlabels(a.embeddings, a.centroids, config.softlabel);
  return a;
}

Dataset build_dataset(const RunConfig& config, const Corpus& corpus) {
  const CharVocab vocab = config.vocab();
  const GlyphBank bank(vocab, config.glyph_params());
  return make_dataset(corpus.recognizer_words, vocab, bank, config.samples_per_word, config.data_seed);
}

Metrics AbReport::mean(LabelMode mode) const {
  Metrics m;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    ++n;
    m.samples += r.metrics.samples;
    m.ambiguous_chars += r.metrics.ambiguous_chars;
    m.word_accuracy += r.metrics.word_accuracy;
    m.char_accuracy += r.metrics.char_accuracy;
    m.avg_edit_distance += r.metrics.avg_edit_distance;
    m.ambiguous_char_accuracy += r.metrics.ambiguous_char_accuracy;
  }
  if (n > 0) {
    const auto d = static_cast<double>(n);
    m.word_accuracy /= d;
    m.char_accuracy /= d;
    m.avg_edit_distance /= d;
    m.ambiguous_char_accuracy /= d;
  }
  return m;
}

double AbReport::ambiguous_margin() const {
  return mean(LabelMode::kSoft).ambiguous_char_accuracy - mean(LabelMode::kOneHot).ambiguous_char_accuracy;
}

AbReport run_ab(const RunConfig& config, std::size_t seeds) {
  if (seeds == 0) throw PreconditionError("ab-run needs at least one seed");
  config.validate();
  const CharVocab vocab = config.vocab();
  AbReport report;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const RunConfig cfg = config.with_seed_offset(s);
    const Corpus corpus = build_corpus(cfg);
    const LabelArtifacts labels = build_labels(cfg, corpus);
    const Dataset dataset = build_dataset(cfg, corpus);
    const GlyphBank bank(vocab, cfg.glyph_params());
    report.soft_label_fallback_rate += labels.labels.stats.fallback_rate() / static_cast<double>(seeds);
    report.soft_label_mislabel_rate += labels.labels.stats.mislabel_rate() / static_cast<double>(seeds);
    for (LabelMode mode : {LabelMode::kOneHot, LabelMode::kSoft}) {
      TrainConfig tc = cfg.train;
      tc.label_mode = mode;
      const TrainResult trained = train(tc, dataset, vocab, mode == LabelMode::kSoft ? &labels.labels : nullptr);
      AbRow row;
      row.seed_offset = s;
      row.mode = mode;
      row.metrics = evaluate(trained.params, dataset, bank, vocab.eos(), Split::kTest);
      if (!trained.log.empty()) {
        row.final_train_loss = trained.log.back().train_loss;
        row.final_val_loss = trained.log.back().val_loss;
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string format_ab_report(const AbReport& report, const std::map<std::string, std::string>& stamp) {
  std::string out;
  for (const auto& [key, value] : stamp) out += "# " + key + '=' + value + '\n';
  auto line = [](std::string seed, std::string_view mode, const Metrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-6s %-7s %9s %9s %9s %13s %10zu\n", seed.c_str(),
                  std::string(mode).c_str(), fixed(m.word_accuracy).c_str(), fixed(m.char_accuracy).c_str(),
                  fixed(m.avg_edit_distance).c_str(), fixed(m.ambiguous_char_accuracy).c_str(),
                  m.ambiguous_chars);
    return std::string(buf);
  };
  char head[256];
  std::snprintf(head, sizeof head, "%-6s %-7s %9s %9s %9s %13s %10s\n", "seed", "mode", "word_acc",
                "char_acc", "edit_dist", "amb_char_acc", "amb_chars");
  out += head;
  for (const auto& r : report.rows) out += line(std::to_string(r.seed_offset), to_string(r.mode), r.metrics);
  out += line("mean", "onehot", report.mean(LabelMode::kOneHot));
  out += line("mean", "soft", report.mean(LabelMode::kSoft));
  const double margin = report.ambiguous_margin();
  out += "ambiguous_margin=" + std::string(margin >= 0 ? "+" : "") + fixed(margin) + '\n';
  out += "soft_not_worse=" + std::string(margin >= 0 ? "1" : "0") + '\n';
  out += "soft_label_fallback_rate=" + fixed(report.soft_label_fallback_rate) + '\n';
  out += "soft_label_mislabel_rate=" + fixed(report.soft_label_mislabel_rate) + '\n';
  return out;
}

}  // namespace charsoft

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "charsoft/centroid.hpp"
#include "charsoft/config.hpp"
#include "charsoft/embed.hpp"
#include "charsoft/recognizer.hpp"
#include "charsoft/softlabel.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft {

/// Pronounceable lowercase words mixed with numbers and short
/// letter-digit codes; digits appear in digit runs, letters in letter runs.
WordList demo_words(std::size_t count, std::uint64_t seed);

/// Word lists feeding one run.
struct Corpus {
  WordList recognizer_words;  // every word that gets glyph images
  WordList in_domain;         // training-split words
  WordList held_out;          // validation and test words
  WordList generic;
};

Corpus build_corpus(const RunConfig& config);

/// in-domain words plus the generic sample, filtered to the vocabulary.
WordList centroid_dictionary(const RunConfig& config, const Corpus& corpus);

struct LabelArtifacts {
  WordList dictionary;
  EmbeddingSet embeddings;
  CentroidMatrix centroids;
  SoftLabelSet labels;
};

/// dictionary -> synthetic embeddings -> centroids -> soft labels.
LabelArtifacts build_labels(const RunConfig& config, const Corpus& corpus);

Dataset build_dataset(const RunConfig& config, const Corpus& corpus);

struct AbRow {
  std::uint64_t seed_offset = 0;
  LabelMode mode = LabelMode::kOneHot;
  Metrics metrics;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
};

struct AbReport {
  std::vector<AbRow> rows;
  double soft_label_fallback_rate = 0.0;  // mean over seeds
  double soft_label_mislabel_rate = 0.0;

  Metrics mean(LabelMode mode) const;
  /// Mean soft minus mean one-hot ambiguous-pair character accuracy.
  double ambiguous_margin() const;
};

/// One-hot versus soft-label training on seeds 0..seeds-1, evaluated on the
/// test split.
AbReport run_ab(const RunConfig& config, std::size_t seeds);

std::string format_ab_report(const AbReport& report, const std::map<std::string, std::string>& stamp = {});

}  // namespace charsoft

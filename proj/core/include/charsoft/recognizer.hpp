#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "charsoft/softlabel.hpp"
#include "charsoft/vocab.hpp"

namespace charsoft {

// ---------------------------------------------------------------------------
// Synthetic glyph data

struct GlyphBankParams {
  std::size_t feature_dim = 32;
  double noise_scale = 0.1;
  /// Euclidean distance between the two prototypes of an ambiguity pair.
  double delta = 0.05;
  std::vector<std::pair<char, char>> ambiguity_pairs;
  std::uint64_t seed = 0;
};

/// Unit-norm feature prototype per character class. EOS and PAD have the
/// zero prototype: the end-of-word step shows no glyph.
class GlyphBank {
 public:
  GlyphBank(const CharVocab& vocab, GlyphBankParams params);

  const Eigen::MatrixXd& prototypes() const noexcept { return prototypes_; }
  auto prototype(int cls) const { return prototypes_.col(cls); }
  const GlyphBankParams& params() const noexcept { return params_; }
  const std::vector<std::pair<int, int>>& pairs() const noexcept { return pairs_; }
  /// True for classes that belong to any ambiguity pair.
  bool is_ambiguous(int cls) const;
  std::size_t feature_dim() const noexcept { return params_.feature_dim; }

 private:
  GlyphBankParams params_;
  Eigen::MatrixXd prototypes_;  // feature_dim x k
  std::vector<std::pair<int, int>> pairs_;
  std::vector<bool> ambiguous_;
};

enum class Split { kTrain, kVal, kTest };

/// 80/10/10 assignment keyed only by the word, so every image of a word
/// lands in the same split.
Split split_of(std::string_view word) noexcept;

struct Sample {
  std::string word;
  std::vector<int> labels;   // characters then EOS
  Eigen::MatrixXd features;  // feature_dim x labels.size()
  Split split = Split::kTrain;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t max_word_length = 0;

  std::vector<const Sample*> select(Split split) const;
  /// Digest of words, labels and feature bits.
  std::uint64_t hash() const;
};

/// Each sample's step features are prototype(char) + N(0, noise^2 I); the
/// EOS step is pure noise. Throws PreconditionError for an empty list.
Dataset make_dataset(const WordList& words, const CharVocab& vocab, const GlyphBank& bank,
                     std::size_t samples_per_word, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model

/// Single-layer tanh recurrent decoder conditioned on the previous character:
///   a_t = U x_t + E[prev_t] + R h_{t-1} + b,  h_t = tanh(a_t),  z_t = O h_t + c
struct RecognizerParams {
  Eigen::MatrixXd input_proj;   // h x f
  Eigen::MatrixXd embed;        // h x k
  Eigen::MatrixXd recurrent;    // h x h
  Eigen::MatrixXd bias;         // h x 1
  Eigen::MatrixXd output;       // k x h
  Eigen::MatrixXd output_bias;  // k x 1

  static constexpr std::size_t kTensorCount = 6;

  static RecognizerParams zeros(std::size_t f, std::size_t h, std::size_t k);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static RecognizerParams random(std::size_t f, std::size_t h, std::size_t k, std::uint64_t seed);

  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(input_proj.cols()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(input_proj.rows()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(output.rows()); }
  std::size_t parameter_count() const noexcept;

  std::array<Eigen::MatrixXd*, kTensorCount> tensors();
  std::array<const Eigen::MatrixXd*, kTensorCount> tensors() const;

  bool finite() const;
};

struct ForwardCache {
  Eigen::MatrixXd hidden;  // h x (steps + 1); column 0 is h_0 = 0
  Eigen::MatrixXd logits;  // k x steps
};

/// Teacher-forced pass. prev_chars[t] is the class fed at step t; step 0
/// receives EOS as the begin token. Throws PreconditionError on shape mismatch.
ForwardCache forward(const RecognizerParams& params, const Eigen::MatrixXd& features,
                     std::span<const int> prev_chars);

/// Backpropagation through time given d loss / d logits.
RecognizerParams backward(const RecognizerParams& params, const Eigen::MatrixXd& features,
                          std::span<const int> prev_chars, const ForwardCache& cache,
                          const Eigen::MatrixXd& dlogits);

/// EOS followed by labels[0..n-2].
std::vector<int> teacher_inputs(std::span<const int> labels, int bos);

/// Greedy autoregressive decoding. Steps past the available features see a
/// zero feature vector. Stops at EOS or after max_steps characters.
std::vector<int> greedy_decode(const RecognizerParams& params, const Eigen::MatrixXd& features,
                               int eos, std::size_t max_steps);

// ---------------------------------------------------------------------------
// Training

enum class LabelMode { kOneHot, kSoft };

std::string_view to_string(LabelMode mode) noexcept;

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LabelMode label_mode = LabelMode::kOneHot;
  bool teacher_forcing = true;
  std::size_t hidden = 64;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-word loss over the epoch's batches
  double val_loss = 0.0;    // mean per-word one-hot cross-entropy, teacher forced
};

struct TrainResult {
  RecognizerParams params;
  std::vector<EpochLog> log;
};

/// Loss of one sample and, when `grad` is non-null, its parameter gradient
/// added into `grad`. Empty `targets` selects one-hot cross-entropy against
/// the sample labels; otherwise one soft column per step is required.
double sample_loss_and_grad(const RecognizerParams& params, const Sample& sample,
                            std::span<const SoftColumn> targets, bool teacher_forcing, int eos,
                            RecognizerParams* grad);

/// Inputs fed back from the model's own argmax predictions.
std::vector<int> free_running_inputs(const RecognizerParams& params,
                                     const Eigen::MatrixXd& features, int bos);

/// Minibatch Adam over the training split. Soft mode requires `labels`
/// covering every training word. Throws NumericError naming the epoch when
/// the loss stops being finite.
TrainResult train(const TrainConfig& config, const Dataset& dataset, const CharVocab& vocab,
                  const SoftLabelSet* labels);

std::string format_training_log(std::span<const EpochLog> log,
                                const std::map<std::string, std::string>& stamp = {});

// ---------------------------------------------------------------------------
// Evaluation

struct Metrics {
  std::size_t samples = 0;
  double word_accuracy = 0.0;
  /// Position-aligned matches over gold characters.
  double char_accuracy = 0.0;
  double avg_edit_distance = 0.0;
  /// char_accuracy restricted to gold characters in an ambiguity pair.
  double ambiguous_char_accuracy = 0.0;
  std::size_t ambiguous_chars = 0;
};

std::size_t edit_distance(std::span<const int> a, std::span<const int> b);

/// Metrics from gold and predicted class sequences (EOS excluded).
Metrics score_predictions(std::span<const std::vector<int>> gold,
                          std::span<const std::vector<int>> predicted, const GlyphBank& bank);

/// Greedy decoding of every sample in `split`, capped at twice the longest word.
Metrics evaluate(const RecognizerParams& params, const Dataset& dataset, const GlyphBank& bank,
                 int eos, Split split = Split::kTest);

std::string format_metrics(const Metrics& m, const std::map<std::string, std::string>& stamp = {});

// ---------------------------------------------------------------------------
// Parameter files

struct ParamsStamp {
  std::uint64_t config_hash = 0;
  std::uint64_t dataset_hash = 0;
};

std::string serialize_params(const RecognizerParams& params, const ParamsStamp& stamp);
void save_params(const RecognizerParams& params, const ParamsStamp& stamp,
                 const std::filesystem::path& path);
RecognizerParams deserialize_params(std::string_view blob, ParamsStamp* stamp = nullptr);
RecognizerParams load_params(const std::filesystem::path& path, ParamsStamp* stamp = nullptr);

}  // namespace charsoft

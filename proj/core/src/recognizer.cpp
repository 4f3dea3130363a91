#include "charsoft/recognizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "charsoft/error.hpp"
#include "charsoft/hashing.hpp"
#include "charsoft/loss.hpp"
#include "charsoft/numeric.hpp"
#include "charsoft/rng.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

namespace {

Eigen::VectorXd gaussian_unit(Rng& rng, Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  } while (v.norm() == 0.0);
  return v.normalized();
}

}  // namespace

// ---------------------------------------------------------------------------
// GlyphBank

GlyphBank::GlyphBank(const CharVocab& vocab, GlyphBankParams params) : params_(std::move(params)) {
  const auto f = static_cast<Eigen::Index>(params_.feature_dim);
  if (f < 2) throw PreconditionError("glyph feature dimension must be >= 2");
  if (!(params_.noise_scale >= 0.0) || !std::isfinite(params_.noise_scale)) {
    throw PreconditionError("glyph noise scale must be finite and >= 0");
  }
  if (!(params_.delta > 0.0 && params_.delta <= 2.0)) {
    throw PreconditionError("ambiguity distance delta must lie in (0, 2]");
  }
  const auto k = static_cast<Eigen::Index>(vocab.k());
  prototypes_ = Eigen::MatrixXd::Zero(f, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    if (c == vocab.eos() || c == vocab.pad()) continue;
    Rng rng(derive_seed(params_.seed, "glyph/prototype", static_cast<std::uint64_t>(c)));
    prototypes_.col(c) = gaussian_unit(rng, f);
  }
  ambiguous_.assign(vocab.k(), false);
  const double angle = 2.0 * std::asin(params_.delta / 2.0);
  for (std::size_t p = 0; p < params_.ambiguity_pairs.size(); ++p) {
    const auto [ca, cb] = params_.ambiguity_pairs[p];
    const auto a = vocab.index_of(ca);
    const auto b = vocab.index_of(cb);
    if (!a || !b || *a >= static_cast<int>(vocab.num_chars()) ||
        *b >= static_cast<int>(vocab.num_chars())) {
      throw PreconditionError(std::string("ambiguity pair '") + ca + cb + "' is outside the vocabulary");
    }
    if (*a == *b) throw PreconditionError(std::string("ambiguity pair '") + ca + cb + "' repeats a class");
    const Eigen::VectorXd anchor = prototypes_.col(*a);
    Rng rng(derive_seed(params_.seed, "glyph/pair", p));
    Eigen::VectorXd u;
    do {
      u = gaussian_unit(rng, f);
      u -= u.dot(anchor) * anchor;
    } while (u.norm() < 1e-8);
    u.normalize();
    // Unit vector at chord distance delta from the anchor.
    prototypes_.col(*b) = std::cos(angle) * anchor + std::sin(angle) * u;
    pairs_.emplace_back(*a, *b);
    ambiguous_[static_cast<std::size_t>(*a)] = true;
    ambiguous_[static_cast<std::size_t>(*b)] = true;
  }
}

bool GlyphBank::is_ambiguous(int cls) const {
  return cls >= 0 && static_cast<std::size_t>(cls) < ambiguous_.size() &&
         ambiguous_[static_cast<std::size_t>(cls)];
}

// ---------------------------------------------------------------------------
// Dataset

Split split_of(std::string_view word) noexcept {
  const auto bucket = fnv1a(word) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kVal : Split::kTest;
}

std::vector<const Sample*> Dataset::select(Split split) const {
  std::vector<const Sample*> out;
  for (const auto& s : samples) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

std::uint64_t Dataset::hash() const {
  Fnv1a h;
  h.update("dataset/v1").update_u64(samples.size()).update_u64(max_word_length);
  for (const auto& s : samples) {
    h.update(s.word).update_u64(static_cast<std::uint64_t>(s.split));
    for (int c : s.labels) h.update_u64(static_cast<std::uint64_t>(c));
    h.update_u64(static_cast<std::uint64_t>(s.features.rows()));
    for (Eigen::Index i = 0; i < s.features.size(); ++i) {
      h.update_u64(std::bit_cast<std::uint64_t>(s.features.data()[i]));
    }
  }
  return h.digest();
}

Dataset make_dataset(const WordList& words, const CharVocab& vocab, const GlyphBank& bank,
                     std::size_t samples_per_word, std::uint64_t seed) {
  if (words.empty()) throw PreconditionError("cannot build a dataset from an empty word list");
  if (samples_per_word == 0) throw PreconditionError("samples_per_word must be positive");
  Dataset ds;
  const double noise = bank.params().noise_scale;
  const auto f = static_cast<Eigen::Index>(bank.feature_dim());
  for (const auto& e : words.entries()) {
    std::vector<int> labels = vocab.encode(e.word);
    labels.push_back(vocab.eos());
    ds.max_word_length = std::max(ds.max_word_length, e.word.size());
    const Split split = split_of(e.word);
    for (std::size_t s = 0; s < samples_per_word; ++s) {
      Rng rng(derive_seed(seed, "glyph/sample", mix64(fnv1a(e.word)) + s));
      Sample sample{e.word, labels, Eigen::MatrixXd(f, static_cast<Eigen::Index>(labels.size())), split};
      for (std::size_t t = 0; t < labels.size(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        sample.features.col(col) = bank.prototype(labels[t]);
        if (noise > 0.0) {
          for (Eigen::Index d = 0; d < f; ++d) sample.features(d, col) += noise * rng.normal();
        }
      }
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Model

RecognizerParams RecognizerParams::zeros(std::size_t f, std::size_t h, std::size_t k) {
  const auto F = static_cast<Eigen::Index>(f);
  const auto H = static_cast<Eigen::Index>(h);
  const auto K = static_cast<Eigen::Index>(k);
  return {Eigen::MatrixXd::Zero(H, F), Eigen::MatrixXd::Zero(H, K), Eigen::MatrixXd::Zero(H, H),
          Eigen::MatrixXd::Zero(H, 1), Eigen::MatrixXd::Zero(K, H), Eigen::MatrixXd::Zero(K, 1)};
}

RecognizerParams RecognizerParams::random(std::size_t f, std::size_t h, std::size_t k,
                                          std::uint64_t seed) {
  RecognizerParams p = zeros(f, h, k);
  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& m, double fan_in) {
    const double scale = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform01() - 1.0);
  };
  fill(p.input_proj, static_cast<double>(f));
  fill(p.embed, 1.0);
  fill(p.recurrent, static_cast<double>(h));
  fill(p.output, static_cast<double>(h));
  return p;
}

std::size_t RecognizerParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

std::array<Eigen::MatrixXd*, RecognizerParams::kTensorCount> RecognizerParams::tensors() {
  return {&input_proj, &embed, &recurrent, &bias, &output, &output_bias};
}

std::array<const Eigen::MatrixXd*, RecognizerParams::kTensorCount> RecognizerParams::tensors() const {
  return {&input_proj, &embed, &recurrent, &bias, &output, &output_bias};
}

bool RecognizerParams::finite() const {
  return std::all_of(tensors().begin(), tensors().end(), [](const auto* t) { return t->allFinite(); });
}

ForwardCache forward(const RecognizerParams& params, const Eigen::MatrixXd& features,
                     std::span<const int> prev_chars) {
  const Eigen::Index steps = features.cols();
  if (features.rows() != params.input_proj.cols()) {
    throw PreconditionError("feature dimension " + std::to_string(features.rows()) +
                            " does not match model input " + std::to_string(params.input_proj.cols()));
  }
  if (prev_chars.size() != static_cast<std::size_t>(steps)) {
    throw PreconditionError("one previous character is needed per step");
  }
  const Eigen::Index h = params.input_proj.rows();
  ForwardCache cache;
  cache.hidden = Eigen::MatrixXd::Zero(h, steps + 1);
  Eigen::MatrixXd pre = params.input_proj * features;
  for (Eigen::Index t = 0; t < steps; ++t) {
    const int prev = prev_chars[static_cast<std::size_t>(t)];
    if (prev < 0 || prev >= params.embed.cols()) throw PreconditionError("previous character out of range");
    pre.col(t) += params.embed.col(prev) + params.recurrent * cache.hidden.col(t) + params.bias;
    cache.hidden.col(t + 1) = pre.col(t).array().tanh();
  }
  cache.logits = params.output * cache.hidden.rightCols(steps);
  cache.logits.colwise() += params.output_bias.col(0);
  return cache;
}

RecognizerParams backward(const RecognizerParams& params, const Eigen::MatrixXd& features,
                          std::span<const int> prev_chars, const ForwardCache& cache,
                          const Eigen::MatrixXd& dlogits) {
  const Eigen::Index steps = features.cols();
  const Eigen::Index h = params.input_proj.rows();
  RecognizerParams g = RecognizerParams::zeros(params.feature_dim(), params.hidden(), params.k());
  const auto hidden_out = cache.hidden.rightCols(steps);
  g.output = dlogits * hidden_out.transpose();
  g.output_bias = dlogits.rowwise().sum();

  Eigen::MatrixXd dpre(h, steps);
  Eigen::VectorXd carry = Eigen::VectorXd::Zero(h);
  const Eigen::MatrixXd dhidden = params.output.transpose() * dlogits;
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Eigen::VectorXd dh = dhidden.col(t) + carry;
    dpre.col(t) = dh.array() * (1.0 - cache.hidden.col(t + 1).array().square());
    carry = params.recurrent.transpose() * dpre.col(t);
  }
  g.input_proj = dpre * features.transpose();
  g.recurrent = dpre * cache.hidden.leftCols(steps).transpose();
  g.bias = dpre.rowwise().sum();
  for (Eigen::Index t = 0; t < steps; ++t) g.embed.col(prev_chars[static_cast<std::size_t>(t)]) += dpre.col(t);
  return g;
}

std::vector<int> teacher_inputs(std::span<const int> labels, int bos) {
  std::vector<int> prev;
  prev.reserve(labels.size());
  prev.push_back(bos);
  for (std::size_t t = 0; t + 1 < labels.size(); ++t) prev.push_back(labels[t]);
  if (labels.empty()) prev.clear();
  return prev;
}

std::vector<int> free_running_inputs(const RecognizerParams& params, const Eigen::MatrixXd& features,
                                     int bos) {
  std::vector<int> prev;
  prev.reserve(static_cast<std::size_t>(features.cols()));
  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(params.input_proj.rows());
  int last = bos;
  for (Eigen::Index t = 0; t < features.cols(); ++t) {
    prev.push_back(last);
    const Eigen::VectorXd pre = params.input_proj * features.col(t) + params.embed.col(last) +
                                params.recurrent * hidden + params.bias;
    hidden = pre.array().tanh();
    last = argmax(params.output * hidden + params.output_bias);
  }
  return prev;
}

std::vector<int> greedy_decode(const RecognizerParams& params, const Eigen::MatrixXd& features,
                               int eos, std::size_t max_steps) {
  std::vector<int> out;
  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(params.input_proj.rows());
  const Eigen::VectorXd blank = Eigen::VectorXd::Zero(params.input_proj.cols());
  int prev = eos;
  for (std::size_t t = 0; t < max_steps; ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    const Eigen::VectorXd pre = params.input_proj * (col < features.cols() ? Eigen::VectorXd(features.col(col)) : blank) +
                                params.embed.col(prev) + params.recurrent * hidden + params.bias;
    hidden = pre.array().tanh();
    const int next = argmax(params.output * hidden + params.output_bias);
    if (next == eos) break;
    out.push_back(next);
    prev = next;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

std::string_view to_string(LabelMode mode) noexcept {
  return mode == LabelMode::kOneHot ? "onehot" : "soft";
}

double sample_loss_and_grad(const RecognizerParams& params, const Sample& sample,
                            std::span<const SoftColumn> targets, bool teacher_forcing, int eos,
                            RecognizerParams* grad) {
  const std::vector<int> prev = teacher_forcing ? teacher_inputs(sample.labels, eos)
                                                : free_running_inputs(params, sample.features, eos);
  const ForwardCache cache = forward(params, sample.features, prev);
  const std::vector<bool> mask(sample.labels.size(), true);
  double loss = 0.0;
  Eigen::MatrixXd dlogits;
  if (targets.empty()) {
    loss = cross_entropy(sample.labels, cache.logits, mask).total;
    if (grad) dlogits = cross_entropy_grad(sample.labels, cache.logits, mask);
  } else {
    if (targets.size() != sample.labels.size()) {
      throw PreconditionError("soft labels for '" + sample.word + "' do not match its length");
    }
    const Eigen::MatrixXd d = targets_matrix(targets);
    loss = kl_loss(d, cache.logits, mask).total;
    if (grad) dlogits = kl_loss_grad(d, cache.logits, mask);
  }
  if (grad) {
    const RecognizerParams g = backward(params, sample.features, prev, cache, dlogits);
    auto dst = grad->tensors();
    auto src = g.tensors();
    for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
  }
  return loss;
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, const CharVocab& vocab,
                  const SoftLabelSet* labels) {
  if (config.batch_size == 0 || config.hidden == 0) {
    throw PreconditionError("batch size and hidden size must be positive");
  }
  if (!(config.learning_rate >= 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.epsilon > 0.0)) {
    throw PreconditionError("invalid optimizer hyperparameters");
  }
  const auto train_set = dataset.select(Split::kTrain);
  const auto val_set = dataset.select(Split::kVal);
  if (train_set.empty()) throw PreconditionError("dataset has no training samples");

  const bool soft = config.label_mode == LabelMode::kSoft;
  std::vector<std::span<const SoftColumn>> targets(train_set.size());
  if (soft) {
    if (!labels) throw PreconditionError("soft label mode requires a soft-label set");
    if (!(labels->vocab() == vocab)) throw PreconditionError("soft labels use a different vocabulary");
    std::string missing;
    std::size_t missing_count = 0;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      const WordLabels* wl = labels->find(train_set[i]->word);
      if (!wl) {
        if (missing_count++ < 10) missing += (missing.empty() ? "" : ", ") + train_set[i]->word;
        continue;
      }
      targets[i] = wl->columns;
    }
    if (missing_count > 0) {
      throw PreconditionError(std::to_string(missing_count) + " training word(s) lack soft labels: " + missing);
    }
  }

  const std::size_t f = dataset.samples.front().features.rows();
  TrainResult result;
  result.params = RecognizerParams::random(f, config.hidden, vocab.k(), derive_seed(config.seed, "train/init"));
  RecognizerParams& params = result.params;
  RecognizerParams m = RecognizerParams::zeros(f, config.hidden, vocab.k());
  RecognizerParams v = m;
  std::size_t step = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(config.seed, "train/shuffle", epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.below(i))]);
    }

    double epoch_loss = 0.0;
    EpochLog entry;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        RecognizerParams grad = RecognizerParams::zeros(f, config.hidden, vocab.k());
        for (std::size_t b = start; b < end; ++b) {
          const std::size_t idx = order[b];
          epoch_loss += sample_loss_and_grad(params, *train_set[idx], targets[idx],
                                             config.teacher_forcing, vocab.eos(), &grad);
        }
        if (!std::isfinite(epoch_loss)) {
          throw NumericError("non-finite batch loss");
        }
        ++step;
        const double scale = 1.0 / static_cast<double>(end - start);
        const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
        const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
        auto p = params.tensors();
        auto g = grad.tensors();
        auto mt = m.tensors();
        auto vt = v.tensors();
        for (std::size_t t = 0; t < p.size(); ++t) {
          const Eigen::ArrayXXd gs = g[t]->array() * scale;
          mt[t]->array() = config.beta1 * mt[t]->array() + (1.0 - config.beta1) * gs;
          vt[t]->array() = config.beta2 * vt[t]->array() + (1.0 - config.beta2) * gs.square();
          p[t]->array() -= config.learning_rate * (mt[t]->array() / correction1) /
                           ((vt[t]->array() / correction2).sqrt() + config.epsilon);
        }
      }

      entry.epoch = epoch;
      entry.train_loss = epoch_loss / static_cast<double>(train_set.size());
      double val = 0.0;
      for (const Sample* s : val_set) val += sample_loss_and_grad(params, *s, {}, true, vocab.eos(), nullptr);
      entry.val_loss = val_set.empty() ? 0.0 : val / static_cast<double>(val_set.size());
    } catch (const NumericError& e) {
      throw NumericError("training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(entry.train_loss) || !std::isfinite(entry.val_loss) || !params.finite()) {
      throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (non-finite loss)");
    }
    result.log.push_back(entry);
  }
  return result;
}

std::string format_training_log(std::span<const EpochLog> log,
                                const std::map<std::string, std::string>& stamp) {
  std::string out;
  if (!stamp.empty()) {
    out += '#';
    for (const auto& [key, value] : stamp) out += ' ' + key + '=' + value;
    out += '\n';
  }
  out += "epoch,train_loss,val_loss\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + ',' + format_scalar(e.train_loss) + ',' + format_scalar(e.val_loss) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

std::size_t edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

Metrics score_predictions(std::span<const std::vector<int>> gold,
                          std::span<const std::vector<int>> predicted, const GlyphBank& bank) {
  if (gold.size() != predicted.size()) throw PreconditionError("gold and predicted counts differ");
  Metrics m;
  m.samples = gold.size();
  if (gold.empty()) return m;
  std::size_t words = 0, chars = 0, char_hits = 0, amb_hits = 0, edits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    const auto& p = predicted[i];
    if (g == p) ++words;
    edits += edit_distance(g, p);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const bool hit = j < p.size() && p[j] == g[j];
      ++chars;
      char_hits += hit ? 1 : 0;
      if (bank.is_ambiguous(g[j])) {
        ++m.ambiguous_chars;
        amb_hits += hit ? 1 : 0;
      }
    }
  }
  const auto n = static_cast<double>(gold.size());
  m.word_accuracy = static_cast<double>(words) / n;
  m.char_accuracy = chars == 0 ? 0.0 : static_cast<double>(char_hits) / static_cast<double>(chars);
  m.avg_edit_distance = static_cast<double>(edits) / n;
  m.ambiguous_char_accuracy =
      m.ambiguous_chars == 0 ? 0.0 : static_cast<double>(amb_hits) / static_cast<double>(m.ambiguous_chars);
  return m;
}

Metrics evaluate(const RecognizerParams& params, const Dataset& dataset, const GlyphBank& bank,
                 int eos, Split split) {
  std::vector<std::vector<int>> gold;
  std::vector<std::vector<int>> predicted;
  const std::size_t cap = 2 * dataset.max_word_length;
  for (const Sample* s : dataset.select(split)) {
    gold.emplace_back(s->labels.begin(), s->labels.end() - 1);
    predicted.push_back(greedy_decode(params, s->features, eos, cap));
  }
  return score_predictions(gold, predicted, bank);
}

std::string format_metrics(const Metrics& m, const std::map<std::string, std::string>& stamp) {
  std::string out;
  for (const auto& [key, value] : stamp) out += key + '=' + value + '\n';
  out += "samples=" + std::to_string(m.samples) + '\n';
  out += "word_accuracy=" + format_scalar(m.word_accuracy) + '\n';
  out += "char_accuracy=" + format_scalar(m.char_accuracy) + '\n';
  out += "avg_edit_distance=" + format_scalar(m.avg_edit_distance) + '\n';
  out += "ambiguous_char_accuracy=" + format_scalar(m.ambiguous_char_accuracy) + '\n';
  out += "ambiguous_chars=" + std::to_string(m.ambiguous_chars) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Parameter files

namespace {

constexpr char kParamsMagic[8] = {'C', 'S', 'P', 'A', 'R', 'A', 'M', 'S'};
constexpr std::uint32_t kParamsVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view blob) : blob_(blob) {}
  std::uint64_t get(int bytes) {
    if (pos_ + static_cast<std::size_t>(bytes) > blob_.size()) throw SchemaError("parameter file is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob_[pos_++])) << (8 * i);
    }
    return v;
  }
  bool done() const { return pos_ == blob_.size(); }

 private:
  std::string_view blob_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_params(const RecognizerParams& params, const ParamsStamp& stamp) {
  std::string out(kParamsMagic, sizeof kParamsMagic);
  put_u32(out, kParamsVersion);
  put_u32(out, static_cast<std::uint32_t>(params.feature_dim()));
  put_u32(out, static_cast<std::uint32_t>(params.hidden()));
  put_u32(out, static_cast<std::uint32_t>(params.k()));
  put_u64(out, stamp.config_hash);
  put_u64(out, stamp.dataset_hash);
  for (const auto* t : params.tensors()) {
    for (Eigen::Index i = 0; i < t->size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(t->data()[i]));
  }
  return out;
}

void save_params(const RecognizerParams& params, const ParamsStamp& stamp, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_params(params, stamp));
}

RecognizerParams deserialize_params(std::string_view blob, ParamsStamp* stamp) {
  if (blob.size() < sizeof kParamsMagic || std::memcmp(blob.data(), kParamsMagic, sizeof kParamsMagic) != 0) {
    throw SchemaError("not a recognizer parameter file");
  }
  Reader r(blob.substr(sizeof kParamsMagic));
  if (r.get(4) != kParamsVersion) throw SchemaError("unsupported parameter file version");
  const auto f = r.get(4);
  const auto h = r.get(4);
  const auto k = r.get(4);
  if (f == 0 || h == 0 || k == 0 || f > 1u << 20 || h > 1u << 20 || k > 1u << 20) {
    throw SchemaError("parameter file has invalid shape header");
  }
  ParamsStamp st;
  st.config_hash = r.get(8);
  st.dataset_hash = r.get(8);
  RecognizerParams p = RecognizerParams::zeros(f, h, k);
  for (auto* t : p.tensors()) {
    for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = std::bit_cast<double>(r.get(8));
  }
  if (!r.done()) throw SchemaError("parameter file has trailing bytes");
  if (!p.finite()) throw NumericError("parameter file contains non-finite weights");
  if (stamp) *stamp = st;
  return p;
}

RecognizerParams load_params(const std::filesystem::path& path, ParamsStamp* stamp) {
  return deserialize_params(read_file(path), stamp);
}

}  // namespace charsoft

#include <gtest/gtest.h>

#include "charsoft/error.hpp"
#include "charsoft/loss.hpp"
#include "charsoft/numeric.hpp"
#include "charsoft/recognizer.hpp"
#include "charsoft/softlabel.hpp"
#include "support.hpp"

using namespace charsoft;
namespace t = charsoft::testing;

namespace {

const CharVocab& small_vocab() {
  static const CharVocab v = build_vocab("abo0l1");
  return v;
}

GlyphBank small_bank(double noise = 0.1) {
  return GlyphBank(small_vocab(), GlyphBankParams{8, noise, 0.05, {{'o', '0'}, {'l', '1'}}, 3});
}

Dataset small_dataset(std::size_t words, std::uint64_t seed) {
  Rng rng(seed);
  const WordList list = t::random_wordlist(rng, "abo0l1", words, 2, 6);
  return make_dataset(list, small_vocab(), small_bank(), 2, seed);
}

double batch_loss(const RecognizerParams& p, const std::vector<Sample>& batch,
                  const std::vector<std::vector<SoftColumn>>& targets, int eos, RecognizerParams* grad) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += sample_loss_and_grad(p, batch[i], targets[i], true, eos, grad);
  }
  return total;
}

}  // namespace

TEST(GlyphBank, PrototypesAndPairs) {
  const GlyphBank bank = small_bank();
  const CharVocab& v = small_vocab();
  for (int c = 0; c < static_cast<int>(v.num_chars()); ++c) EXPECT_NEAR(bank.prototype(c).norm(), 1.0, 1e-12);
  EXPECT_EQ(bank.prototype(v.eos()).norm(), 0.0);
  const int o = *v.index_of('o'), zero = *v.index_of('0');
  EXPECT_NEAR((bank.prototype(o) - bank.prototype(zero)).norm(), 0.05, 1e-12);
  EXPECT_TRUE(bank.is_ambiguous(o));
  EXPECT_FALSE(bank.is_ambiguous(*v.index_of('a')));
  EXPECT_THROW(GlyphBank(v, GlyphBankParams{8, 0.1, 0.05, {{'o', 'q'}}, 3}), PreconditionError);
  EXPECT_THROW(GlyphBank(v, GlyphBankParams{8, 0.1, 0.0, {{'o', '0'}}, 3}), PreconditionError);
}

TEST(GlyphBank, NoiselessFeaturesAreExactPrototypes) {
  const CharVocab& v = small_vocab();
  const GlyphBank bank(v, GlyphBankParams{8, 0.0, 0.05, {}, 3});
  const Dataset d = make_dataset(WordList{"ab01"}, v, bank, 1, 1);
  const Sample& s = d.samples[0];
  for (int j = 0; j < 4; ++j) EXPECT_TRUE(t::bit_equal(s.features.col(j), bank.prototype(s.labels[j])));
}

TEST(GlyphBank, AmbiguousPairHasPositiveBayesError) {
  const CharVocab& v = small_vocab();
  const GlyphBank bank(v, GlyphBankParams{8, 0.2, 0.05, {{'o', '0'}}, 3});
  const int o = *v.index_of('o'), zero = *v.index_of('0');
  Rng rng(1);
  std::size_t errors = 0;
  const std::size_t n = 2000;
  for (std::size_t i = 0; i < n; ++i) {
    const int truth = i % 2 ? o : zero;
    const Eigen::VectorXd x = bank.prototype(truth) + t::random_vector(rng, 8, 0.2);
    const int guess = (x - bank.prototype(o)).norm() < (x - bank.prototype(zero)).norm() ? o : zero;
    errors += guess != truth;
  }
  EXPECT_GT(errors, n / 10);
}

TEST(Dataset, DeterministicPerSeed) {
  const Dataset a = small_dataset(20, 5);
  const Dataset b = small_dataset(20, 5);
  EXPECT_EQ(a.hash(), b.hash());
  Rng rng(5);
  const Dataset c = make_dataset(t::random_wordlist(rng, "abo0l1", 20, 2, 6), small_vocab(), small_bank(), 2, 6);
  EXPECT_NE(a.hash(), c.hash());
  for (const auto& s : a.samples) {
    EXPECT_EQ(s.labels.back(), small_vocab().eos());
    EXPECT_EQ(s.split, split_of(s.word));
  }
}

TEST(Dataset, SplitIsRoughlyEightyTenTen) {
  std::size_t counts[3] = {0, 0, 0};
  for (int i = 0; i < 20000; ++i) counts[static_cast<int>(split_of("w" + std::to_string(i)))]++;
  EXPECT_NEAR(counts[0] / 20000.0, 0.8, 0.02);
  EXPECT_NEAR(counts[1] / 20000.0, 0.1, 0.02);
  EXPECT_NEAR(counts[2] / 20000.0, 0.1, 0.02);
}

TEST(Recognizer, ZeroWeightsGiveUniformOutput) {
  const CharVocab& v = small_vocab();
  const RecognizerParams p = RecognizerParams::zeros(8, 5, v.k());
  Rng rng(2);
  const Eigen::MatrixXd x = t::random_matrix(rng, 8, 4);
  const std::vector<int> prev{v.eos(), 0, 1, 2};
  const ForwardCache cache = forward(p, x, prev);
  for (Eigen::Index s = 0; s < 4; ++s) {
    const Eigen::VectorXd probs = softmax(cache.logits.col(s));
    for (Eigen::Index i = 0; i < probs.size(); ++i) EXPECT_NEAR(probs[i], 1.0 / v.k(), 1e-15);
  }
}

TEST(Recognizer, BackpropMatchesCentralDifferences) {
  const CharVocab& v = small_vocab();
  const int eos = v.eos();
  Rng rng(42);
  double worst = 0.0;
  for (int instance = 0; instance < 5; ++instance) {
    RecognizerParams p = RecognizerParams::random(8, 5, v.k(), rng.next_u64());
    for (auto* m : p.tensors()) *m += t::random_matrix(rng, m->rows(), m->cols(), 0.3);
    const Dataset d = small_dataset(3, 100 + instance);
    std::vector<Sample> batch(d.samples.begin(), d.samples.begin() + 3);
    std::vector<std::vector<SoftColumn>> targets(3);
    for (std::size_t i = 0; i < 3; ++i) {
      if (instance % 2 == 0) continue;  // one-hot path
      for (int label : batch[i].labels) {
        targets[i].push_back({t::random_distribution(rng, v.k(), true), label, ColumnOrigin::kRetained});
      }
    }
    RecognizerParams grad = RecognizerParams::zeros(8, 5, v.k());
    batch_loss(p, batch, targets, eos, &grad);
    const double h = 1e-5;
    auto tensors = p.tensors();
    auto gtensors = grad.tensors();
    for (std::size_t tix = 0; tix < tensors.size(); ++tix) {
      for (Eigen::Index i = 0; i < tensors[tix]->size(); ++i) {
        const double saved = tensors[tix]->data()[i];
        tensors[tix]->data()[i] = saved + h;
        const double up = batch_loss(p, batch, targets, eos, nullptr);
        tensors[tix]->data()[i] = saved - h;
        const double down = batch_loss(p, batch, targets, eos, nullptr);
        tensors[tix]->data()[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double an = gtensors[tix]->data()[i];
        worst = std::max(worst, t::fd_relative_error(an, fd));
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Recognizer, TeacherInputsShiftLabels) {
  EXPECT_EQ(teacher_inputs(std::vector<int>{3, 1, 6}, 6), (std::vector<int>{6, 3, 1}));
}

TEST(Training, ZeroLearningRateLeavesParametersUntouched) {
  const Dataset d = small_dataset(40, 9);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.hidden = 6;
  cfg.learning_rate = 0.0;
  const TrainResult r = train(cfg, d, small_vocab(), nullptr);
  const RecognizerParams init = RecognizerParams::random(8, 6, small_vocab().k(), derive_seed(cfg.seed, "train/init"));
  const auto a = r.params.tensors();
  const auto b = init.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(t::bit_equal(*a[i], *b[i]));
}

TEST(Training, DegenerateSoftLabelsReproduceOneHotExactly) {
  const Dataset d = small_dataset(60, 10);
  WordList words;
  for (const auto& s : d.samples) words.add(s.word);
  const SoftLabelSet onehot = onehot_softlabels(words, small_vocab());
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.hidden = 8;
  const TrainResult a = train(cfg, d, small_vocab(), nullptr);
  cfg.label_mode = LabelMode::kSoft;
  const TrainResult b = train(cfg, d, small_vocab(), &onehot);
  EXPECT_EQ(format_training_log(a.log), format_training_log(b.log));
  const auto pa = a.params.tensors();
  const auto pb = b.params.tensors();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(t::bit_equal(*pa[i], *pb[i]));
}

TEST(Training, LossDecreasesOverFirstEpochs) {
  const Dataset d = small_dataset(150, 11);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.hidden = 16;
  const TrainResult r = train(cfg, d, small_vocab(), nullptr);
  ASSERT_EQ(r.log.size(), 5u);
  for (std::size_t e = 1; e < r.log.size(); ++e) EXPECT_LT(r.log[e].train_loss, r.log[e - 1].train_loss) << e;
  EXPECT_TRUE(r.params.finite());
}

TEST(Training, SoftModeNeedsLabelsForEveryTrainingWord) {
  const Dataset d = small_dataset(30, 12);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.label_mode = LabelMode::kSoft;
  EXPECT_THROW(train(cfg, d, small_vocab(), nullptr), PreconditionError);
  const SoftLabelSet partial = onehot_softlabels(WordList{d.samples[0].word}, small_vocab());
  EXPECT_THROW(train(cfg, d, small_vocab(), &partial), PreconditionError);
}

TEST(Training, DivergenceNamesEpoch) {
  const Dataset d = small_dataset(30, 13);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e308;  // the second Adam step overflows
  try {
    train(cfg, d, small_vocab(), nullptr);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(Metrics, EditDistanceKnownValues) {
  const auto enc = [](std::string_view s) { return std::vector<int>(s.begin(), s.end()); };
  EXPECT_EQ(edit_distance(enc("kitten"), enc("sitting")), 3u);
  EXPECT_EQ(edit_distance(enc(""), enc("abc")), 3u);
  EXPECT_EQ(edit_distance(enc("abc"), enc("abc")), 0u);
}

TEST(Metrics, EdgeCases) {
  const GlyphBank bank = small_bank();
  const CharVocab& v = small_vocab();
  const std::vector<std::vector<int>> gold{v.encode("ab0"), v.encode("o1")};
  const Metrics perfect = score_predictions(gold, gold, bank);
  EXPECT_EQ(perfect.word_accuracy, 1.0);
  EXPECT_EQ(perfect.char_accuracy, 1.0);
  EXPECT_EQ(perfect.avg_edit_distance, 0.0);
  EXPECT_EQ(perfect.ambiguous_chars, 3u);

  const std::vector<std::vector<int>> empty{{}, {}};
  const Metrics none = score_predictions(gold, empty, bank);
  EXPECT_EQ(none.word_accuracy, 0.0);
  EXPECT_EQ(none.char_accuracy, 0.0);
  EXPECT_EQ(none.avg_edit_distance, 2.5);

  const std::vector<std::vector<int>> swapped{v.encode("abo"), v.encode("o1")};
  const Metrics m = score_predictions(gold, swapped, bank);
  EXPECT_EQ(m.word_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.char_accuracy, 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(m.ambiguous_char_accuracy, 2.0 / 3.0);
  const std::vector<std::vector<int>> short_list{{}};
  EXPECT_THROW(score_predictions(gold, short_list, bank), PreconditionError);
}

TEST(Params, RoundTripBitExactly) {
  const RecognizerParams p = RecognizerParams::random(8, 5, 9, 77);
  const ParamsStamp stamp{0x1234, 0xabcd};
  const std::string blob = serialize_params(p, stamp);
  ParamsStamp back_stamp;
  const RecognizerParams back = deserialize_params(blob, &back_stamp);
  EXPECT_EQ(back_stamp.config_hash, 0x1234u);
  EXPECT_EQ(back_stamp.dataset_hash, 0xabcdu);
  const auto a = p.tensors();
  const auto b = back.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(t::bit_equal(*a[i], *b[i]));
  EXPECT_EQ(serialize_params(back, back_stamp), blob);
  EXPECT_THROW(deserialize_params(blob.substr(0, blob.size() - 1)), SchemaError);
  EXPECT_THROW(deserialize_params("XX" + blob.substr(2)), SchemaError);
}

TEST(Decode, StopsAtEosAndRespectsCap) {
  const CharVocab& v = small_vocab();
  RecognizerParams p = RecognizerParams::zeros(8, 3, v.k());
  p.output_bias(v.eos(), 0) = 5.0;
  EXPECT_TRUE(greedy_decode(p, Eigen::MatrixXd::Zero(8, 3), v.eos(), 10).empty());
  p.output_bias(v.eos(), 0) = 0.0;
  p.output_bias(0, 0) = 5.0;
  EXPECT_EQ(greedy_decode(p, Eigen::MatrixXd::Zero(8, 3), v.eos(), 7).size(), 7u);
}

#include "doctest.h"

#include <cmath>
#include <numeric>

#include "twrnnt/synthetic.h"
#include "twrnnt/training.h"

using namespace twrnnt;

namespace {

SyntheticCorpus small_corpus(std::uint64_t seed, int train = 50) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.split_sizes = {0, train, 0, 20, 20};
  return generate_synthetic_dataset(spec);
}

TrainingConfig small_config() {
  TrainingConfig c;
  c.dims = ModelDims{8, 16, 10};
  c.epochs = 2;
  return c;
}

std::vector<const Utterance *> pointers(const std::vector<Utterance> &v, size_t n) {
  std::vector<const Utterance *> out;
  for (size_t i = 0; i < std::min(n, v.size()); ++i) out.push_back(&v[i]);
  return out;
}

}  // namespace

TEST_CASE("batch loss: standard mode is the token-normalised transducer loss") {
  auto corpus = small_corpus(1);
  auto cfg = small_config();
  auto model = TransducerModel::random(cfg.dims, 3);
  auto batch = pointers(corpus.splits[1], 5);
  auto r = batch_loss_and_grad(model, batch, cfg);
  double total = 0;
  int tokens = 0;
  for (const Utterance *u : batch) {
    total += rnnt_loss(model_forward(model, u->features, u->tokens), u->tokens);
    tokens += static_cast<int>(u->tokens.size());
  }
  CHECK(r.tokens == tokens);
  CHECK(std::abs(r.loss - total / tokens) < 1e-12);
}

TEST_CASE("batch loss: alpha 0 collapses weighted modes onto standard") {
  auto corpus = small_corpus(2);
  auto cfg = small_config();
  auto data = score_confidences(TransducerModel::random(cfg.dims, 4), corpus.splits[1]);
  auto model = TransducerModel::random(cfg.dims, 5);
  auto batch = pointers(data, 8);
  cfg.weights.alpha = 0;
  const auto standard = batch_loss_and_grad(model, batch, cfg);
  for (auto mode : {WeightingMode::kUtteranceWeights, WeightingMode::kTokenWeights}) {
    cfg.mode = mode;
    const auto w = batch_loss_and_grad(model, batch, cfg);
    CHECK(w.loss == standard.loss);
    CHECK(w.grad == standard.grad);
  }
}

TEST_CASE("batch loss: utterance weights scale whole utterances") {
  auto corpus = small_corpus(3);
  auto cfg = small_config();
  auto model = TransducerModel::random(cfg.dims, 6);
  std::vector<Utterance> two(corpus.splits[1].begin(), corpus.splits[1].begin() + 2);
  two[0].confidences = std::vector<double>(two[0].tokens.size(), 0.25);
  two[1].confidences = std::vector<double>(two[1].tokens.size(), 0.75);
  cfg.mode = WeightingMode::kUtteranceWeights;
  cfg.weights.alpha = 1;
  auto r = batch_loss_and_grad(model, pointers(two, 2), cfg);
  const double l0 = rnnt_loss(model_forward(model, two[0].features, two[0].tokens), two[0].tokens);
  const double l1 = rnnt_loss(model_forward(model, two[1].features, two[1].tokens), two[1].tokens);
  const double tokens = static_cast<double>(two[0].tokens.size() + two[1].tokens.size());
  CHECK(std::abs(r.loss - (0.5 * l0 + 1.5 * l1) / tokens) < 1e-12);
}

TEST_CASE("batch loss: float32 lattices track float64") {
  auto corpus = small_corpus(4);
  auto cfg = small_config();
  auto model = TransducerModel::random(cfg.dims, 7);
  auto batch = pointers(corpus.splits[1], 4);
  auto a = batch_loss_and_grad(model, batch, cfg);
  cfg.precision = Precision::kFloat32;
  auto b = batch_loss_and_grad(model, batch, cfg);
  CHECK(std::abs(a.loss - b.loss) < 1e-4 * a.loss);
  CHECK((a.grad - b.grad).norm() < 1e-3 * a.grad.norm());
}

TEST_CASE("training reduces the loss on a 50-utterance clean set") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto corpus = small_corpus(seed);
    TrainingConfig cfg;
    cfg.epochs = 10;
    cfg.seed = seed;
    auto r = train_model(corpus.splits[1], cfg);
    REQUIRE_FALSE(r.diverged);
    const size_t k = 7;  // batches per epoch
    const double first = std::accumulate(r.batch_losses.begin(), r.batch_losses.begin() + k, 0.0);
    const double last = std::accumulate(r.batch_losses.end() - k, r.batch_losses.end(), 0.0);
    CHECK(last < 0.5 * first);
  }
}

TEST_CASE("training is deterministic and honours the step budget") {
  auto corpus = small_corpus(5);
  auto cfg = small_config();
  cfg.steps = 11;
  auto a = train_model(corpus.splits[1], cfg);
  auto b = train_model(corpus.splits[1], cfg);
  CHECK(a.batch_losses.size() == 11);
  CHECK(a.batch_losses == b.batch_losses);
  CHECK(a.model.parameters() == b.model.parameters());
}

TEST_CASE("mixed training draws both sources") {
  auto corpus = small_corpus(6);
  auto cfg = small_config();
  cfg.epochs = 1;
  std::vector<Utterance> labeled(corpus.splits[1].begin(), corpus.splits[1].begin() + 10);
  std::vector<Utterance> pseudo(corpus.splits[1].begin() + 10, corpus.splits[1].end());
  auto r = train_model_mixed(labeled, pseudo, cfg);
  CHECK(r.batch_losses.size() == 7);
  cfg.labeled_fraction = 1.5;
  CHECK_THROWS_AS(train_model_mixed(labeled, pseudo, cfg), ConfigError);
  cfg.labeled_fraction = 0.1;
  CHECK_THROWS_AS(train_model_mixed(labeled, {}, cfg), DataError);
}

TEST_CASE("divergence is reported, not thrown") {
  auto corpus = small_corpus(7);
  auto cfg = small_config();
  cfg.adam.lr = 1e305;
  auto r = train_model(corpus.splits[1], cfg);
  CHECK(r.diverged);
  CHECK_FALSE(r.failure.empty());
}

TEST_CASE("noiseless single-frame tokens are learned almost perfectly") {
  SyntheticSpec spec;
  spec.noise = 0;
  spec.max_frames_per_token = 1;
  spec.split_sizes = {0, 200, 0, 0, 100};
  auto corpus = generate_synthetic_dataset(spec);
  TrainingConfig cfg;
  cfg.epochs = 15;
  auto r = train_model(corpus.splits[1], cfg);
  CHECK(evaluate_wer(r.model, corpus.splits[4]) < 0.02);
}

TEST_CASE("pseudo labels carry teacher confidences") {
  auto corpus = small_corpus(8);
  auto cfg = small_config();
  cfg.epochs = 4;
  auto teacher = train_model(corpus.splits[1], cfg).model;
  auto p = pseudo_label(teacher, corpus.splits[3]);
  for (const auto &u : p) {
    CHECK_FALSE(u.tokens.empty());
    REQUIRE(u.confidences);
    CHECK(u.confidences->size() == u.tokens.size());
    for (double c : *u.confidences) {
      CHECK(c > 0.0);
      CHECK(c <= 1.0);
    }
  }
}

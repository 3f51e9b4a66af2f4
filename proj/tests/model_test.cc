#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "test_util.h"
#include "twrnnt/model.h"
#include "twrnnt/oracle.h"
#include "twrnnt/weighted_loss.h"

using namespace twrnnt;

namespace {

Eigen::MatrixXd random_features(std::uint64_t seed, int T, int D) {
  Rng rng = make_rng(seed, {kStreamTest, 2});
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(T, D);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return x;
}

}  // namespace

TEST_CASE("parameter count is a function of the dimensions") {
  ModelDims d{8, 32, 10};
  CHECK(TransducerModel::parameter_count(d) ==
        32 * 8 + 32 + 11 * 32 + 32 * 32 + 32 + 11 * 32 + 11);
  CHECK(TransducerModel(d).parameters().size() == TransducerModel::parameter_count(d));
}

TEST_CASE("model_forward") {
  ModelDims d{4, 6, 3};
  auto x = random_features(1, 5, 4);
  SUBCASE("zero parameters give uniform rows") {
    auto lat = model_forward(TransducerModel(d), x, {0, 2});
    CHECK((lat.table().array() - std::log(0.25)).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("deterministic and normalised") {
    auto m = TransducerModel::random(d, 7);
    auto a = model_forward(m, x, {1, 1, 0});
    auto b = model_forward(TransducerModel::random(d, 7), x, {1, 1, 0});
    CHECK(a.table() == b.table());
    CHECK(a.max_normalization_error() < 1e-9);
  }
  SUBCASE("shape errors") {
    auto m = TransducerModel::random(d, 7);
    CHECK_THROWS_AS(model_forward(m, random_features(1, 5, 3), {0}), DataError);
    CHECK_THROWS_AS(model_forward(m, x, {3}), DataError);
  }
  SUBCASE("rows agree with the per-prefix row function") {
    auto m = TransducerModel::random(d, 8);
    LabelSequence y{2, 0};
    auto lat = model_forward(m, x, y);
    auto rebuilt = materialize_lattice(5, 3, y, model_rows(m, x));
    CHECK((lat.table() - rebuilt.table()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("model_backward matches finite differences through the weighted loss") {
  ModelDims d{3, 5, 3};
  auto m = TransducerModel::random(d, 11);
  auto x = random_features(2, 4, 3);
  LabelSequence y{2, 0, 1};
  std::vector<double> w{1.4, 0.2, 1.4};
  auto objective = [&](const TransducerModel &mm) {
    return weighted_rnnt_loss(model_forward(mm, x, y), y, std::span<const double>(w));
  };
  ForwardCache cache;
  auto lat = model_forward(m, x, y, &cache);
  auto g = model_backward(m, cache, weighted_rnnt_loss_grad(lat, y, std::span<const double>(w)));

  Rng rng = make_rng(3, {kStreamTest});
  std::uniform_int_distribution<Eigen::Index> pick(0, m.parameters().size() - 1);
  for (int i = 0; i < 10; ++i) {
    const Eigen::Index j = pick(rng);
    const double h = 1e-5;
    TransducerModel plus = m, minus = m;
    plus.parameters()(j) += h;
    minus.parameters()(j) -= h;
    const double numeric = (objective(plus) - objective(minus)) / (2 * h);
    CHECK(oracle::relative_error(g(j), numeric) < 1e-3);
  }
}

TEST_CASE("model_backward edge cases") {
  ModelDims d{3, 4, 2};
  auto m = TransducerModel::random(d, 12);
  auto x1 = random_features(4, 3, 3), x2 = random_features(5, 2, 3);
  LabelSequence y1{1, 0}, y2{1};
  SUBCASE("zero lattice gradient") {
    auto lat = model_forward(m, x1, y1);
    auto g = model_backward(m, x1, y1, Table<double>::Zero(lat.table().rows(), lat.table().cols()));
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("batch gradient is the sum of utterance gradients") {
    auto g1 = model_backward(m, x1, y1, rnnt_loss_grad(model_forward(m, x1, y1), y1));
    auto g2 = model_backward(m, x2, y2, rnnt_loss_grad(model_forward(m, x2, y2), y2));
    auto total = [&](const TransducerModel &mm) {
      return rnnt_loss(model_forward(mm, x1, y1), y1) + rnnt_loss(model_forward(mm, x2, y2), y2);
    };
    const Eigen::Index j = 7;
    TransducerModel plus = m, minus = m;
    plus.parameters()(j) += 1e-5;
    minus.parameters()(j) -= 1e-5;
    CHECK(oracle::relative_error(g1(j) + g2(j), (total(plus) - total(minus)) / 2e-5) < 1e-3);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(model_backward(m, x1, y1, Table<double>::Zero(2, 3)), DataError);
  }
}

TEST_CASE("optimisers") {
  Eigen::VectorXd p(3), g(3);
  p << 1.0, 2.0, 3.0;
  g << 0.5, -1.0, 0.0;
  SUBCASE("sgd") {
    sgd_step(p, g, 1.0);
    CHECK(p(0) == 0.5);
    CHECK(p(1) == 3.0);
    CHECK_THROWS_AS(sgd_step(p, g, 0.0), ConfigError);
  }
  SUBCASE("adam first step moves by lr * sign(g)") {
    AdamState s;
    Eigen::VectorXd before = p;
    adam_step(p, s, g, AdamHyper{0.01});
    CHECK(p(0) - before(0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p(1) - before(1) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(p(2) == before(2));
  }
  SUBCASE("NaN gradient leaves everything untouched") {
    AdamState s;
    adam_step(p, s, g, AdamHyper{});
    AdamState saved = s;
    Eigen::VectorXd before = p;
    g(1) = std::nan("");
    CHECK_THROWS_AS(adam_step(p, s, g, AdamHyper{}), NumericalError);
    CHECK_THROWS_AS(sgd_step(p, g, 0.1), NumericalError);
    CHECK(p == before);
    CHECK(s.step == saved.step);
    CHECK(s.m == saved.m);
  }
}

TEST_CASE("greedy_decode") {
  SUBCASE("blank everywhere gives an empty hypothesis") {
    Table<double> t(3 * 1, 3);
    for (int r = 0; r < 3; ++r) t.row(r) << std::log(0.2), std::log(0.2), std::log(0.6);
    auto res = greedy_decode(PosteriorLattice<double>(3, 0, 2, t));
    CHECK(res.tokens.empty());
    CHECK(res.done);
  }
  SUBCASE("T=1 with a dominant token then blank") {
    Table<double> t(2, 3);
    t << std::log(0.1), std::log(0.8), std::log(0.1),
         std::log(0.1), std::log(0.1), std::log(0.8);
    auto res = greedy_decode(PosteriorLattice<double>(1, 1, 2, t));
    CHECK(res.tokens == LabelSequence{1});
  }
  SUBCASE("symbol cap terminates decoding") {
    ModelDims d{2, 3, 2};
    auto res = greedy_decode(TransducerModel(d), Eigen::MatrixXd::Zero(3, 2), 4);
    CHECK(res.tokens.size() == 12);
    CHECK_FALSE(res.done);
  }
  SUBCASE("seeded model is deterministic") {
    ModelDims d{4, 8, 5};
    auto x = random_features(9, 12, 4);
    auto a = greedy_decode(TransducerModel::random(d, 3), x);
    auto b = greedy_decode(TransducerModel::random(d, 3), x);
    CHECK(a.tokens == b.tokens);
  }
}

TEST_CASE("checkpoint round trip") {
  ModelDims d{3, 4, 2};
  auto m = TransducerModel::random(d, 5);
  AdamState s;
  Eigen::VectorXd g = Eigen::VectorXd::Constant(m.parameters().size(), 0.1);
  adam_step(m.parameters(), s, g, AdamHyper{});
  const std::string path = "model_test_checkpoint.json";
  save_checkpoint(path, m, &s);
  AdamState s2;
  auto m2 = load_checkpoint(path, &s2);
  CHECK(m2.dims() == d);
  CHECK(m2.parameters() == m.parameters());
  CHECK(s2.m == s.m);
  CHECK(s2.v == s.v);
  CHECK(s2.step == 1);
  std::remove(path.c_str());
  nlohmann::json bad = checkpoint_to_json(m, nullptr);
  bad["version"] = 7;
  CHECK_THROWS_AS(checkpoint_from_json(bad), DataError);
}

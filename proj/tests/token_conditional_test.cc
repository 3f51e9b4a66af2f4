#include "doctest.h"

#include <cmath>
#include <map>

#include "test_util.h"
#include "twrnnt/oracle.h"
#include "twrnnt/token_conditional.h"

using namespace twrnnt;

TEST_CASE("emission_forward: T=1, U=1") {
  Rng rng = make_rng(10, {kStreamTest});
  auto lat = testing::random_lattice(rng, 1, 1, 3);
  auto ef = emission_forward(lat, {2});
  CHECK(ef.joint(0, 1) == doctest::Approx(lat(0, 0, 2)));
  CHECK(ef.prefix_logp(0) == 0.0);
}

TEST_CASE("emission_forward: U=0 is rejected") {
  Rng rng = make_rng(11, {kStreamTest});
  auto lat = testing::random_lattice(rng, 3, 0, 3);
  CHECK_THROWS_AS(emission_forward(lat, {}), DataError);
}

// Four frames, y = (C, A).  Every partial alignment that emits A at frame t
// starts from C emitted at some frame t' <= t and takes blanks in between;
// grouping the brute-force partial paths by emission frame must reproduce
// joint(t, 2) exactly.
TEST_CASE("emission_forward: partial paths from C to A over four frames") {
  const int C = 2, A = 0;
  Rng rng = make_rng(12, {kStreamTest});
  auto lat = testing::random_lattice(rng, 4, 2, 3);
  LabelSequence y{C, A};
  auto ef = emission_forward(lat, y);

  std::map<int, std::vector<double>> by_frame;
  std::map<int, int> starts_into_last_frame;
  for (const auto &path : oracle::enumerate_prefix(4, 2)) {
    const auto frames = path.frames();
    by_frame[frames.back()].push_back(oracle::path_logp(lat, y, path));
    if (frames.back() == 3) {
      // frame at which C was emitted
      for (size_t i = 0; i < path.steps.size(); ++i)
        if (path.steps[i] == oracle::Step::kEmit) {
          ++starts_into_last_frame[frames[i]];
          break;
        }
    }
  }
  REQUIRE(by_frame.size() == 4);
  for (auto &[t, logps] : by_frame)
    CHECK(std::abs(ef.joint(t, 2) - log_sum_exp<double>(logps)) < 1e-12);
  // C may have been emitted at any of the four frames before A at the last.
  CHECK(starts_into_last_frame.size() == 4);
}

TEST_CASE("emission_forward: prefix masses match partial enumeration") {
  Rng rng = make_rng(13, {kStreamTest});
  auto lat = testing::random_lattice(rng, 5, 3, 4);
  LabelSequence y{3, 1, 3};
  auto ef = emission_forward(lat, y);
  for (int u = 0; u <= 3; ++u)
    CHECK(std::abs(std::exp(ef.prefix_logp(u)) -
                   std::exp(oracle::exact_prefix_logp(lat, y, u))) < 1e-10);
  for (int u = 1; u <= 3; ++u) CHECK(ef.prefix_logp(u) <= ef.prefix_logp(u - 1));
}

TEST_CASE("emission_forward: direct and running-prefix sums agree") {
  for (std::uint64_t s = 0; s < 300; ++s) {
    auto inst = testing::random_instance(s, 12, 6, 5);
    if (inst.labels.empty()) continue;
    auto direct = emission_forward(inst.lattice, inst.labels, BlankRunSum::kDirect);
    auto fast = emission_forward(inst.lattice, inst.labels);
    for (Eigen::Index i = 0; i < direct.joint.size(); ++i) {
      const double a = direct.joint.data()[i], b = fast.joint.data()[i];
      if (a == kLogZero<double>) {
        CHECK(b == kLogZero<double>);
      } else {
        CHECK(std::abs(a - b) < 1e-12);
      }
    }
  }
}

TEST_CASE("emission_forward: first column depends only on leading blanks") {
  Rng rng = make_rng(14, {kStreamTest});
  auto lat = testing::random_lattice(rng, 4, 2, 3);
  LabelSequence y{1, 2};
  auto ef = emission_forward(lat, y);
  double blanks = 0;
  for (int t = 0; t < 4; ++t) {
    CHECK(ef.joint(t, 1) == doctest::Approx(blanks + lat(t, 0, 1)).epsilon(1e-14));
    blanks += lat.blank(t, 0);
  }
}

TEST_CASE("conditional_profile examples") {
  Rng rng = make_rng(15, {kStreamTest});
  SUBCASE("T=1, U=1") {
    auto lat = testing::random_lattice(rng, 1, 1, 3);
    auto p = conditional_profile(lat, {0});
    CHECK(p.conditionals()(0) == doctest::Approx(std::exp(lat(0, 0, 0))));
    CHECK(std::exp(p.final_blank_logp) == doctest::Approx(std::exp(lat.blank(0, 1))));
  }
  SUBCASE("telescoping identity") {
    for (std::uint64_t s = 0; s < 200; ++s) {
      auto inst = testing::random_instance(s + 500);
      if (inst.labels.empty()) continue;
      auto p = conditional_profile(inst.lattice, inst.labels);
      CHECK(std::abs(p.loglik_check + rnnt_loss(inst.lattice, inst.labels)) < 1e-9);
      for (int u = 0; u < p.size(); ++u) {
        CHECK(p.conditionals()(u) > 0.0);
        CHECK(p.conditionals()(u) <= 1.0);
      }
    }
  }
  SUBCASE("identical rows: equal conditionals in the long-utterance limit") {
    // With a finite horizon later tokens have fewer frames left, so c_u
    // decreases in u; as T grows every c_u tends to p_token / (1 - p_blank).
    auto uniform = [](int T, int U) {
      Table<double> t = Table<double>::Constant(static_cast<Eigen::Index>(T) * (U + 1), 3,
                                                std::log(1.0 / 3));
      return PosteriorLattice<double>(T, U, 2, t);
    };
    LabelSequence y{0, 1, 0};
    auto short_c = conditional_profile(uniform(3, 3), y).conditionals();
    CHECK(short_c(0) > short_c(1));
    CHECK(short_c(1) > short_c(2));
    auto long_c = conditional_profile(uniform(200, 3), y).conditionals();
    for (int u = 0; u < 3; ++u) CHECK(std::abs(long_c(u) - 0.5) < 1e-12);
  }
}

TEST_CASE("conditional_profile: zero-probability prefix names the position") {
  Table<double> t(2 * 3, 3);  // T=2, U=2, |V|=2; token 1 impossible everywhere
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    t.row(r) << std::log(0.5), -INFINITY, std::log(0.5);
  PosteriorLattice<double> lat(2, 2, 2, t);
  try {
    conditional_profile(lat, {1, 0});
    FAIL("expected an error");
  } catch (const NumericalError &e) {
    CHECK(std::string(e.what()).find("u=2") != std::string::npos);
  }
}

TEST_CASE("next_token_distribution") {
  Rng rng = make_rng(16, {kStreamTest});
  SUBCASE("T=1, u=1 is the softmax row with blank as end") {
    auto lat = testing::random_lattice(rng, 1, 0, 3);
    auto d = next_token_distribution(lat, {}, 1);
    for (int k = 0; k <= 3; ++k)
      CHECK(d(k) == doctest::Approx(std::exp(lat(0, 0, k))).epsilon(1e-14));
  }
  SUBCASE("sums to one on a fully specified transducer") {
    auto rows = testing::synthetic_transducer(77, 3);
    for (LabelSequence prefix : {LabelSequence{}, LabelSequence{0},
                                 LabelSequence{2, 1}, LabelSequence{1, 1, 0}}) {
      auto d = next_token_distribution(3, 3, prefix, rows);
      CHECK(std::abs(d.sum() - 1.0) < 1e-9);
    }
  }
  SUBCASE("matches ratios of enumerated prefix masses") {
    auto rows = testing::synthetic_transducer(78, 2);
    LabelSequence prefix{1, 0};
    auto d = next_token_distribution(3, 2, prefix, rows);
    auto base = materialize_lattice(3, 2, prefix, rows);
    const double p_prefix = oracle::exact_prefix_logp(base, prefix, 2);
    for (int k = 0; k < 2; ++k) {
      LabelSequence ext = prefix;
      ext.push_back(k);
      auto lat = materialize_lattice(3, 2, ext, rows);
      CHECK(std::abs(d(k) - std::exp(oracle::exact_prefix_logp(lat, ext, 3) - p_prefix)) < 1e-10);
    }
    CHECK(std::abs(d(2) - std::exp(oracle::exact_sequence_logp(base, prefix) - p_prefix)) < 1e-10);
  }
  SUBCASE("zero-probability prefix") {
    Table<double> t(2, 3);  // T=1, U=1
    t << -INFINITY, 0.0, -INFINITY, std::log(0.5), std::log(0.5), -INFINITY;
    PosteriorLattice<double> lat(1, 1, 2, t);
    CHECK_THROWS_AS(next_token_distribution(lat, {0}, 2), NumericalError);
  }
}

#include <doctest.h>

#include <cmath>

#include "cogeffort/dataprep.hpp"
#include "cogeffort/error.hpp"
#include "cogeffort/rng.hpp"
#include "cogeffort/training.hpp"
#include "cogeffort/trees.hpp"
#include "support/oracles.hpp"

using namespace cogeffort;

namespace {

struct Labeled {
  Matrix x;
  std::vector<int> y;
};

Labeled noisy_problem(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Labeled p;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = rng.normal();
    const double s = row[0] + 0.5 * row[1] * row[1] - 0.3 + 0.7 * rng.normal();
    p.x.push_back(row);
    p.y.push_back(s > 0 ? 1 : 0);
  }
  return p;
}

// The partition of training points induced by a threshold on one feature.
std::vector<bool> partition(const Matrix& x, std::size_t f, double threshold) {
  std::vector<bool> left;
  for (const auto& r : x) left.push_back(r[f] <= threshold);
  return left;
}

}  // namespace

TEST_SUITE("trees") {

TEST_CASE("a single-class forest predicts that class everywhere") {
  Matrix x{{0.0}, {1.0}, {2.0}, {3.0}};
  const auto m = train_random_forest(x, {1, 1, 1, 1});
  for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
  CHECK(m.predict(std::vector<double>{-5.0}) == 1);
  CHECK(m.vote_fraction(std::vector<double>{10.0}) == 1.0);
}

TEST_CASE("one-dimensional separable data splits once at the midpoint") {
  Matrix x{{0.0}, {1.0}, {2.0}, {3.0}};
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  const auto m = train_random_forest(x, {0, 0, 1, 1}, p);
  const Tree& t = m.trees.front();
  CHECK(t.depth() == 1);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold == doctest::Approx(1.5));
  CHECK(t.nodes[0].gain == doctest::Approx(0.5));
  CHECK(m.predict(std::vector<double>{1.4}) == 0);
  CHECK(m.predict(std::vector<double>{1.6}) == 1);
}

TEST_CASE("root gini gain equals a brute-force search") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = noisy_problem(60, 4, seed);
    ForestParams fp;
    fp.n_trees = 1;
    fp.bootstrap = false;
    fp.max_features = 4;
    const auto m = train_random_forest(p.x, p.y, fp);
    CHECK(m.trees[0].nodes[0].gain == doctest::Approx(oracle::brute_force_gini_gain(p.x, p.y)).epsilon(1e-12));
  }
}

TEST_CASE("forest trees respect the depth limit and vote ties go to class 0") {
  const auto p = noisy_problem(120, 6, 6);
  ForestParams fp;
  fp.n_trees = 2;
  fp.max_depth = 3;
  const auto m = train_random_forest(p.x, p.y, fp);
  for (const auto& t : m.trees) CHECK(t.depth() <= 3);
  for (const auto& row : p.x) {
    if (m.vote_fraction(row) == 0.5) CHECK(m.predict(row) == 0);
  }
  fp.n_trees = 0;
  CHECK_THROWS_AS(train_random_forest(p.x, p.y, fp), ConfigError);
}

TEST_CASE("a forest fits a noisy problem better than chance and is deterministic") {
  const auto tr = noisy_problem(300, 6, 7), te = noisy_problem(200, 6, 8);
  const auto m = train_random_forest(tr.x, tr.y);
  CHECK(accuracy(te.y, m.predict(te.x)) > 0.7);
  const auto again = train_random_forest(tr.x, tr.y);
  CHECK(to_json(again) == to_json(m));
}

TEST_CASE("zero boosting rounds predict the prior") {
  Matrix x{{0.0}, {1.0}, {2.0}, {3.0}, {4.0}};
  GbtParams p;
  p.n_rounds = 0;
  const auto m = train_gbt(x, {1, 1, 1, 0, 0}, p);
  CHECK(m.trees.empty());
  CHECK(m.probability(std::vector<double>{9.0}) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(m.base_score == doctest::Approx(std::log(0.6 / 0.4)).epsilon(1e-12));
}

TEST_CASE("boosting fits an eight-point separable set within fifty rounds") {
  // Separable by x0 + x1 > 1.
  Matrix x{{0.1, 0.2}, {0.5, 0.3}, {0.2, 0.6}, {0.7, 0.1},
           {0.9, 0.4}, {0.6, 0.8}, {0.3, 0.9}, {1.0, 1.0}};
  std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
  GbtParams p;
  p.n_rounds = 50;
  const auto m = train_gbt(x, y, p);
  CHECK(accuracy(y, m.predict(x)) == 1.0);

  std::vector<double> r;
  for (int v : y) r.push_back(v - 0.5);
  const auto stump = oracle::exhaustive_sse_stump(x, r);
  const TreeNode& root = m.trees.at(0).nodes.at(0);
  CHECK(static_cast<std::size_t>(root.feature) == stump.feature);
  CHECK(partition(x, stump.feature, root.threshold) == partition(x, stump.feature, stump.threshold));
}

TEST_CASE("the first boosting tree's root is the best squared-error stump") {
  for (std::uint64_t seed = 11; seed <= 15; ++seed) {
    const auto prob = noisy_problem(40, 3, seed);
    GbtParams p;
    p.n_rounds = 1;
    p.max_depth = 1;
    const auto m = train_gbt(prob.x, prob.y, p);
    double mean = 0;
    for (int v : prob.y) mean += v;
    mean /= static_cast<double>(prob.y.size());
    std::vector<double> r;
    for (int v : prob.y) r.push_back(v - mean);
    const auto stump = oracle::exhaustive_sse_stump(prob.x, r);
    const TreeNode& root = m.trees.at(0).nodes.at(0);
    REQUIRE_FALSE(root.is_leaf());
    CHECK(static_cast<std::size_t>(root.feature) == stump.feature);
    CHECK(partition(prob.x, stump.feature, root.threshold) ==
          partition(prob.x, stump.feature, stump.threshold));
    CHECK(root.gain == doctest::Approx(stump.sse_reduction).epsilon(1e-9));

    // Leaf value is the Newton step sum(r) / sum(p (1 - p)) with p the prior.
    const double hess = mean * (1 - mean);
    for (int child : {root.left, root.right}) {
      double s = 0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < prob.x.size(); ++i) {
        const bool left = prob.x[i][stump.feature] <= root.threshold;
        if (left == (child == root.left)) {
          s += r[i];
          ++n;
        }
      }
      CHECK(m.trees[0].nodes[static_cast<std::size_t>(child)].value ==
            doctest::Approx(s / (static_cast<double>(n) * hess)).epsilon(1e-9));
    }
  }
}

TEST_CASE("boosting is invariant to strictly increasing feature transforms") {
  const auto p = noisy_problem(80, 3, 21);
  Matrix warped = p.x;
  for (auto& row : warped) {
    for (auto& v : row) v = std::exp(v) + v * v * v;
  }
  const auto a = train_gbt(p.x, p.y);
  const auto b = train_gbt(warped, p.y);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    CHECK(a.raw_score(p.x[i], a.trees.size()) ==
          doctest::Approx(b.raw_score(warped[i], b.trees.size())).epsilon(1e-12));
  }
}

TEST_CASE("training loss does not increase across rounds") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const auto p = noisy_problem(150, 5, seed);
    const auto m = train_gbt(p.x, p.y);
    double prev = gbt_logistic_loss(m, p.x, p.y, 0);
    for (std::size_t r = 1; r <= m.trees.size(); ++r) {
      const double cur = gbt_logistic_loss(m, p.x, p.y, r);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("models round trip through json") {
  const auto p = noisy_problem(100, 4, 41);
  ForestParams fp;
  fp.n_trees = 5;
  const auto rf = train_random_forest(p.x, p.y, fp);
  const auto rf2 = forest_from_json(nlohmann::json::parse(to_json(rf).dump()));
  const auto gbt = train_gbt(p.x, p.y);
  const auto gbt2 = gbt_from_json(nlohmann::json::parse(to_json(gbt).dump()));
  for (const auto& row : p.x) {
    CHECK(rf2.vote_fraction(row) == rf.vote_fraction(row));
    CHECK(gbt2.probability(row) == gbt.probability(row));
  }
  CHECK_THROWS_AS(gbt_from_json(to_json(rf)), DataError);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(train_gbt({}, {}), DataError);
  CHECK_THROWS_AS(train_gbt({{1.0}, {2.0}}, {0}), ShapeError);
  CHECK_THROWS_AS(train_gbt({{1.0}, {2.0}}, {0, 3}), DataError);
  GbtParams p;
  p.shrinkage = 0;
  CHECK_THROWS_AS(train_gbt({{1.0}, {2.0}}, {0, 1}, p), ConfigError);
  CHECK_THROWS_AS(accuracy({}, {}), ShapeError);
}

TEST_CASE("an all-zero latent reduces boosting to the majority class") {
  ModelConfig c;
  c.conv_filters = 4;
  c.gru_units = 3;
  c.dense_units = 4;
  Network net(c);
  for (const auto& name : net.trainable_names()) {
    if (name != "bn.gamma") net.params().at(name).fill(0.0);
  }
  Rng rng(51);
  auto rows = [&](std::size_t n, int ones) {
    std::vector<FeatureRow> out;
    for (std::size_t i = 0; i < n; ++i) {
      FeatureRow r;
      r.features.resize(12);
      for (auto& v : r.features) v = rng.normal();
      r.label = static_cast<int>(i) < ones ? 1 : 0;
      r.features[0] += 3.0 * r.label;
      out.push_back(r);
    }
    return out;
  };
  const auto train_rows = rows(60, 40), test_rows = rows(20, 15);
  const auto cmp = evaluate_latent_features(net, train_rows, test_rows);
  CHECK(cmp.latent_accuracy == doctest::Approx(0.75));
  CHECK(cmp.raw_accuracy > 0.9);
  CHECK(cmp.delta == doctest::Approx(cmp.latent_accuracy - cmp.raw_accuracy));
}

TEST_CASE("latent features of a trained network keep pace with raw features") {
  const auto trials = generate_cohort(CohortSpec{});
  PrepConfig pc;
  pc.seed = 7;
  const auto data = prepare(trials, pc);
  ModelConfig mc;
  mc.seed = 7;
  const auto model = train(mc, Dataset::from_rows(data.train_balanced),
                           Dataset::from_rows(data.parts.validation));
  GbtParams gp;
  gp.seed = 7;
  const auto cmp = evaluate_latent_features(model.network, data.train_balanced, data.parts.test, gp);
  CHECK(cmp.architecture == "cnn_gru");
  CHECK(cmp.latent_accuracy >= cmp.raw_accuracy - 0.05);
}

}  // TEST_SUITE

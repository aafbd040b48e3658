#include <doctest.h>

#include <cmath>

#include "cogeffort/error.hpp"
#include "cogeffort/explain.hpp"
#include "cogeffort/rng.hpp"
#include "support/oracles.hpp"

using namespace cogeffort;

namespace {

Matrix random_matrix(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, std::vector<double>(d));
  for (auto& r : m) {
    for (auto& v : r) v = rng.normal();
  }
  return m;
}

// Row-wise model from a scalar function of one row.
BatchModel rowwise(std::function<double(std::span<const double>)> f) {
  return [f](const Tensor& batch) {
    std::vector<double> out(batch.rows());
    for (std::size_t i = 0; i < batch.rows(); ++i) {
      out[i] = f(std::span<const double>(batch.raw()).subspan(i * batch.cols(), batch.cols()));
    }
    return out;
  };
}

std::vector<double> column(const Tensor& t, std::size_t c) {
  std::vector<double> out;
  for (std::size_t i = 0; i < t.rows(); ++i) out.push_back(t(i, c));
  return out;
}

}  // namespace

TEST_SUITE("explain") {

TEST_CASE("the prefrontal map splits sixteen optodes eight and eight") {
  const auto map = RegionMap::prefrontal();
  REQUIRE(map.regions.size() == 2);
  CHECK(map.regions[0].name == "LPFC");
  CHECK(map.regions[0].optodes == std::vector<int>{1, 2, 3, 4, 13, 14, 15, 16});
  CHECK(map.regions[1].name == "VMPFC");
  CHECK(map.regions[1].optodes.size() == 8);
  CHECK_NOTHROW(map.validate(16));

  RegionMap gap = map;
  gap.regions[1].optodes.pop_back();
  CHECK_THROWS_AS(gap.validate(16), ConfigError);
  RegionMap overlap = map;
  overlap.regions[1].optodes.push_back(1);
  CHECK_THROWS_AS(overlap.validate(16), ConfigError);
}

TEST_CASE("uniform loadings give 8m per region") {
  const double m = 0.37;
  Tensor loadings({16, 12});
  Rng rng(1);
  for (auto& v : loadings.values()) v = rng.uniform() < 0.5 ? m : -m;
  const auto table = region_contribution(loadings, RegionMap::prefrontal());
  REQUIRE(table.sums.size() == 12);
  for (const auto& row : table.sums) {
    CHECK(row[0] == doctest::Approx(8 * m).epsilon(1e-14));
    CHECK(row[1] == doctest::Approx(8 * m).epsilon(1e-14));
  }
}

TEST_CASE("a one-hot loading on optode 5 lands in VMPFC") {
  Tensor loadings({16, 2});
  loadings(4, 1) = -1.0;
  const auto table = region_contribution(loadings, RegionMap::prefrontal());
  CHECK(table.sums[1][0] == 0.0);
  CHECK(table.sums[1][1] == 1.0);
}

TEST_CASE("region sums add up to the column mass") {
  Rng rng(2);
  Tensor loadings({16, 4});
  for (auto& v : loadings.values()) v = rng.normal();
  const auto table = region_contribution(loadings, RegionMap::prefrontal());
  for (std::size_t j = 0; j < 4; ++j) {
    double mass = 0;
    for (std::size_t o = 0; o < 16; ++o) mass += std::abs(loadings(o, j));
    CHECK(table.sums[j][0] >= 0);
    CHECK(table.sums[j][0] + table.sums[j][1] == doctest::Approx(mass).epsilon(1e-13));
  }
  CHECK_THROWS_AS(region_contribution(Tensor({15, 4}), RegionMap::prefrontal()), ConfigError);
}

TEST_CASE("identical and negated columns correlate at plus and minus one") {
  Rng rng(3);
  Tensor pcs({30, 3});
  for (auto& v : pcs.values()) v = rng.normal();
  Tensor lat({30, 2});
  for (std::size_t i = 0; i < 30; ++i) {
    lat(i, 0) = pcs(i, 1);
    lat(i, 1) = -pcs(i, 2);
  }
  const auto c = latent_pca_correlation(lat, pcs);
  CHECK(c.r.shape() == Tensor::Shape{2, 3});
  CHECK(std::abs(c.r(0, 1) - 1.0) < 1e-12);
  CHECK(std::abs(c.r(1, 2) + 1.0) < 1e-12);
  CHECK(c.degenerate.empty());
}

TEST_CASE("correlations agree with a naive two-pass oracle") {
  Rng rng(4);
  Tensor lat({50, 8}), pcs({50, 12});
  for (auto& v : lat.values()) v = rng.normal();
  for (auto& v : pcs.values()) v = rng.normal();
  for (std::size_t i = 0; i < 50; ++i) lat(i, 3) += 0.8 * pcs(i, 5);
  const auto c = latent_pca_correlation(lat, pcs);
  for (std::size_t u = 0; u < 8; ++u) {
    for (std::size_t j = 0; j < 12; ++j) {
      const double expected = oracle::naive_pearson(column(lat, u), column(pcs, j));
      CHECK(std::abs(c.r(u, j) - expected) < 1e-12);
      CHECK(std::abs(c.r(u, j)) <= 1.0);
    }
  }
}

TEST_CASE("constant columns are flagged and too few rows are rejected") {
  Rng rng(5);
  Tensor lat({10, 2}), pcs({10, 2});
  for (auto& v : pcs.values()) v = rng.normal();
  for (std::size_t i = 0; i < 10; ++i) {
    lat(i, 0) = 3.0;
    lat(i, 1) = rng.normal();
  }
  const auto c = latent_pca_correlation(lat, pcs);
  CHECK(c.r(0, 0) == 0.0);
  CHECK(c.r(0, 1) == 0.0);
  CHECK(c.degenerate.size() == 2);
  CHECK(c.degenerate[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK_THROWS_AS(latent_pca_correlation(Tensor({2, 2}), Tensor({2, 2})), DataError);
  CHECK_THROWS_AS(latent_pca_correlation(Tensor({5, 2}), Tensor({4, 2})), ShapeError);
}

TEST_CASE("linear models get w_i times the deviation from the background mean") {
  Rng rng(6);
  const std::vector<double> w{0.5, -1.5, 2.0, 0.0, 3.0, -0.25, 1.0, 0.75};
  const auto model = rowwise([&](std::span<const double> x) {
    double s = 0.1;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
  });
  const Matrix bg = random_matrix(20, 8, rng);
  const std::vector<double> x = random_matrix(1, 8, rng)[0];
  const auto res = shapley_exact(model, x, bg);
  for (std::size_t i = 0; i < 8; ++i) {
    double mean = 0;
    for (const auto& r : bg) mean += r[i];
    mean /= 20;
    CHECK(std::abs(res.phi[i] - w[i] * (x[i] - mean)) < 1e-10);
  }
}

TEST_CASE("efficiency, symmetry and dummy axioms hold for a nonlinear model") {
  Rng rng(7);
  // Features 1 and 2 enter symmetrically; feature 4 is ignored.
  const auto model = rowwise([](std::span<const double> x) {
    return std::tanh(x[0] * x[1] * x[2] + x[1] + x[2]) + x[3] * x[3] + 0.5 * x[5];
  });
  const Matrix bg_raw = random_matrix(16, 6, rng);
  Matrix bg = bg_raw;
  // Make features 1 and 2 exchangeable in the value function.
  for (std::size_t i = 0; i < 8; ++i) {
    bg[i + 8] = bg[i];
    std::swap(bg[i + 8][1], bg[i + 8][2]);
  }
  std::vector<double> x = random_matrix(1, 6, rng)[0];
  x[2] = x[1];
  const auto res = shapley_exact(model, x, bg);
  double total = 0;
  for (double p : res.phi) total += p;
  CHECK(std::abs(total - (res.prediction - res.base_value)) < 1e-10);
  CHECK(std::abs(res.prediction - model(Tensor({1, 6}, x))[0]) < 1e-12);
  CHECK(std::abs(res.phi[1] - res.phi[2]) < 1e-10);
  CHECK(std::abs(res.phi[4]) < 1e-10);
}

TEST_CASE("four-feature values match the permutation oracle") {
  Rng rng(8);
  const auto model = rowwise([](std::span<const double> x) {
    return 1.0 / (1.0 + std::exp(-(x[0] * x[1] - 2 * x[2] + std::sin(x[3]) * x[0])));
  });
  const Matrix bg = random_matrix(12, 4, rng);
  const std::vector<double> x{0.7, -1.2, 0.4, 2.0};
  const auto values = coalition_values(model, x, bg);
  REQUIRE(values.size() == 16);
  // Recompute v(S) independently for the oracle.
  auto v = [&](unsigned mask) {
    double s = 0;
    for (const auto& r : bg) {
      std::vector<double> z = r;
      for (unsigned f = 0; f < 4; ++f) {
        if (mask & (1U << f)) z[f] = x[f];
      }
      s += model(Tensor({1, 4}, z))[0];
    }
    return s / static_cast<double>(bg.size());
  };
  for (unsigned m = 0; m < 16; ++m) CHECK(std::abs(values[m] - v(m)) < 1e-14);
  const auto expected = oracle::permutation_shapley(v, 4);
  const auto res = shapley_from_values(values, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(res.phi[i] - expected[i]) < 1e-12);
  CHECK(res.base_value == values[0]);
  CHECK(res.prediction == values[15]);
}

TEST_CASE("more than sixteen features is refused") {
  const auto model = rowwise([](std::span<const double>) { return 0.0; });
  const Matrix bg(2, std::vector<double>(17, 0.0));
  const std::vector<double> x(17, 1.0);
  try {
    shapley_exact(model, x, bg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sampling") != std::string::npos);
  }
  CHECK_THROWS_AS(shapley_exact(model, std::vector<double>(3, 0.0), Matrix{}), DataError);
}

TEST_CASE("background subsampling is seeded, ordered and capped") {
  Matrix rows;
  for (int i = 0; i < 300; ++i) rows.push_back({static_cast<double>(i)});
  const auto a = subsample_background(rows, 128, 5);
  REQUIRE(a.size() == 128);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i][0] > a[i - 1][0]);
  CHECK(subsample_background(rows, 128, 5) == a);
  CHECK_FALSE(subsample_background(rows, 128, 6) == a);
  CHECK(subsample_background(rows, 500, 5) == rows);
}

TEST_CASE("explaining a network satisfies efficiency on every sample") {
  Rng rng(9);
  ModelConfig c;
  c.gru_units = 6;
  Network net(c);
  auto rows = [&](std::size_t n) {
    std::vector<FeatureRow> out;
    for (std::size_t i = 0; i < n; ++i) {
      FeatureRow r;
      r.participant_id = "P" + std::to_string(i % 3 + 1);
      r.question_id = static_cast<int>(i) + 1;
      r.features.resize(12);
      for (auto& v : r.features) v = rng.normal();
      out.push_back(r);
    }
    return out;
  };
  std::vector<std::vector<double>> fit_rows;
  for (int i = 0; i < 40; ++i) {
    std::vector<double> r(16);
    for (auto& v : r) v = rng.normal();
    fit_rows.push_back(r);
  }
  const PcaModel pca = pca_fit(fit_rows, 12);
  const auto background = rows(30), correlation = rows(20), explained = rows(4);
  ExplainConfig cfg;
  cfg.background_cap = 16;
  const auto report = explain_model(net, pca, background, correlation, explained, cfg);
  CHECK(report.correlation.r.shape() == Tensor::Shape{6, 12});
  CHECK(report.regions.sums.size() == 12);
  REQUIRE(report.shapley.size() == 4);
  for (const auto& s : report.shapley) {
    double total = 0;
    for (double p : s.phi) total += p;
    CHECK(std::abs(total - (s.prediction - report.base_value)) < 1e-10);
  }
  const auto ranking = report.shapley_ranking();
  REQUIRE(ranking.size() == 6);
  for (std::size_t i = 1; i < ranking.size(); ++i) CHECK(ranking[i - 1].second >= ranking[i].second);
  const auto j = report.to_json();
  CHECK(j.contains("regions"));
  CHECK(j.contains("base_value"));
}

}  // TEST_SUITE

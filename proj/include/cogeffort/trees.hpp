#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogeffort/dataprep.hpp"
#include "cogeffort/network.hpp"

namespace cogeffort {

// Axis-aligned binary tree stored as a flat node array, root at index 0.
// A sample goes left when x[feature] <= threshold.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
  double gain = 0.0;             // impurity decrease achieved by the split
  double value = 0.0;            // boosting leaf score
  std::vector<int> class_counts;  // forest leaf payload {n0, n1}

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const;
  int depth() const;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 6;
  bool bootstrap = true;
  int max_features = 0;  // 0: floor(sqrt(D)), at least 1
  std::uint64_t seed = 42;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::size_t n_features = 0;

  /// Fraction of trees voting for class 1.
  double vote_fraction(std::span<const double> x) const;
  /// Majority vote, ties to class 0.
  int predict(std::span<const double> x) const;
  std::vector<int> predict(const Matrix& x) const;
};

ForestModel train_random_forest(const Matrix& x, const std::vector<int>& y,
                                const ForestParams& params = {});

struct GbtParams {
  int n_rounds = 100;
  int max_depth = 3;
  double shrinkage = 0.1;
  std::uint64_t seed = 42;
};

struct GbtModel {
  std::vector<Tree> trees;
  std::size_t n_features = 0;
  double base_score = 0.0;  // prior log-odds
  double shrinkage = 0.1;

  double raw_score(std::span<const double> x, std::size_t rounds) const;
  double probability(std::span<const double> x) const;
  /// Class 1 when the probability exceeds 0.5.
  int predict(std::span<const double> x) const;
  std::vector<int> predict(const Matrix& x) const;
};

/// Logistic loss; every round fits a regression tree to y - p by squared
/// error and sets each leaf to sum(y - p) / sum(p (1 - p)).
GbtModel train_gbt(const Matrix& x, const std::vector<int>& y, const GbtParams& params = {});

/// Mean logistic loss of the model truncated to its first `rounds` trees.
double gbt_logistic_loss(const GbtModel& model, const Matrix& x, const std::vector<int>& y,
                         std::size_t rounds);

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

nlohmann::json to_json(const Tree& tree);
nlohmann::json to_json(const ForestModel& model);
nlohmann::json to_json(const GbtModel& model);
ForestModel forest_from_json(const nlohmann::json& j);
GbtModel gbt_from_json(const nlohmann::json& j);

struct LatentComparison {
  double raw_accuracy = 0.0;
  double latent_accuracy = 0.0;
  double delta = 0.0;  // latent - raw
  std::string architecture;

  nlohmann::json to_json() const;
};

/// Boosted trees on the raw PC features versus on the network's latent
/// features, both scored on test_rows.
LatentComparison evaluate_latent_features(const Network& net,
                                          const std::vector<FeatureRow>& train_rows,
                                          const std::vector<FeatureRow>& test_rows,
                                          const GbtParams& params = {});

Matrix feature_matrix(const std::vector<FeatureRow>& rows);
std::vector<int> label_vector(const std::vector<FeatureRow>& rows);

}  // namespace cogeffort

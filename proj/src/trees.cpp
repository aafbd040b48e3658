#include "cogeffort/trees.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cogeffort/error.hpp"
#include "cogeffort/rng.hpp"
#include "cogeffort/training.hpp"

namespace cogeffort {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kProbClamp = 1e-12;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

void check_xy(const Matrix& x, const std::vector<int>& y, const char* who) {
  if (x.empty()) throw DataError(std::string(who) + ": empty training set");
  if (x.size() != y.size()) throw ShapeError(std::string(who) + ": row/label count mismatch");
  const std::size_t d = x.front().size();
  if (d == 0) throw ShapeError(std::string(who) + ": rows have no features");
  for (const auto& row : x) {
    if (row.size() != d) throw ShapeError(std::string(who) + ": ragged feature rows");
  }
  for (int label : y) {
    if (label != 0 && label != 1) throw DataError(std::string(who) + ": labels must be 0 or 1");
  }
}

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

std::vector<std::size_t> sorted_by_feature(const Matrix& x, const std::vector<std::size_t>& idx,
                                           int f) {
  std::vector<std::size_t> order = idx;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = x[a][f], vb = x[b][f];
    return va < vb || (va == vb && a < b);
  });
  return order;
}

double gini(double n0, double n1) {
  const double n = n0 + n1;
  if (n == 0) return 0.0;
  return 1.0 - (n0 * n0 + n1 * n1) / (n * n);
}

SplitChoice best_gini_split(const Matrix& x, const std::vector<int>& y,
                            const std::vector<std::size_t>& idx, const std::vector<int>& features) {
  double p0 = 0, p1 = 0;
  for (std::size_t i : idx) (y[i] ? p1 : p0) += 1;
  const double n = p0 + p1;
  const double parent = gini(p0, p1);
  SplitChoice best;
  for (int f : features) {
    const auto order = sorted_by_feature(x, idx, f);
    double l0 = 0, l1 = 0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      (y[order[k]] ? l1 : l0) += 1;
      const double a = x[order[k]][f], b = x[order[k + 1]][f];
      if (a == b) continue;
      const double nl = l0 + l1, nr = n - nl;
      const double gain = parent - (nl / n) * gini(l0, l1) - (nr / n) * gini(p0 - l0, p1 - l1);
      if (gain > best.gain) best = {f, midpoint(a, b), gain};
    }
  }
  return best;
}

// Reduction in the sum of squared residuals.
SplitChoice best_sse_split(const Matrix& x, const std::vector<double>& r,
                           const std::vector<std::size_t>& idx, std::size_t d) {
  double total = 0;
  for (std::size_t i : idx) total += r[i];
  const double n = static_cast<double>(idx.size());
  const double parent = total * total / n;
  SplitChoice best;
  for (std::size_t f = 0; f < d; ++f) {
    const auto order = sorted_by_feature(x, idx, static_cast<int>(f));
    double left = 0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      left += r[order[k]];
      const double a = x[order[k]][f], b = x[order[k + 1]][f];
      if (a == b) continue;
      const double nl = static_cast<double>(k + 1), nr = n - nl;
      const double right = total - left;
      const double gain = left * left / nl + right * right / nr - parent;
      if (gain > best.gain) best = {static_cast<int>(f), midpoint(a, b), gain};
    }
  }
  return best;
}

using SplitFn = std::function<SplitChoice(const std::vector<std::size_t>&)>;
using LeafFn = std::function<void(TreeNode&, const std::vector<std::size_t>&)>;

int grow(Tree& tree, const Matrix& x, const std::vector<std::size_t>& idx, int depth,
         int max_depth, const SplitFn& split, const LeafFn& leaf) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[id].depth = depth;
  SplitChoice s;
  if (depth < max_depth && idx.size() >= 2) s = split(idx);
  if (s.feature < 0 || s.gain <= kMinGain) {
    leaf(tree.nodes[id], idx);
    return id;
  }
  std::vector<std::size_t> left, right;
  for (std::size_t i : idx) (x[i][s.feature] <= s.threshold ? left : right).push_back(i);
  tree.nodes[id].feature = s.feature;
  tree.nodes[id].threshold = s.threshold;
  tree.nodes[id].gain = s.gain;
  const int l = grow(tree, x, left, depth + 1, max_depth, split, leaf);
  const int r = grow(tree, x, right, depth + 1, max_depth, split, leaf);
  tree.nodes[id].left = l;
  tree.nodes[id].right = r;
  return id;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  if (nodes.empty()) throw DataError("tree has no nodes");
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(x[node->feature] <= node->threshold ? node->left
                                                                              : node->right)];
  }
  return *node;
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

// ---- Random forest ---------------------------------------------------------------

double ForestModel::vote_fraction(std::span<const double> x) const {
  if (x.size() != n_features) throw ShapeError("forest: wrong feature count");
  int votes = 0;
  for (const auto& tree : trees) {
    const auto& c = tree.leaf_for(x).class_counts;
    votes += c[1] > c[0] ? 1 : 0;
  }
  return static_cast<double>(votes) / static_cast<double>(trees.size());
}

int ForestModel::predict(std::span<const double> x) const {
  return vote_fraction(x) > 0.5 ? 1 : 0;
}

std::vector<int> ForestModel::predict(const Matrix& x) const {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(predict(row));
  return out;
}

ForestModel train_random_forest(const Matrix& x, const std::vector<int>& y,
                                const ForestParams& params) {
  check_xy(x, y, "random forest");
  if (params.n_trees < 1) throw ConfigError("random forest: n_trees must be >= 1");
  if (params.max_depth < 0) throw ConfigError("random forest: max_depth must be >= 0");
  const std::size_t d = x.front().size();
  int m = params.max_features;
  if (m <= 0) m = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
  m = std::min(m, static_cast<int>(d));

  ForestModel model;
  model.n_features = d;
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(t)}));
    std::vector<std::size_t> idx(x.size());
    if (params.bootstrap) {
      for (auto& i : idx) i = rng.index(x.size());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    SplitFn split = [&](const std::vector<std::size_t>& node_idx) {
      rng.shuffle(all.begin(), all.end());
      std::vector<int> chosen(all.begin(), all.begin() + m);
      std::sort(chosen.begin(), chosen.end());
      return best_gini_split(x, y, node_idx, chosen);
    };
    LeafFn leaf = [&](TreeNode& node, const std::vector<std::size_t>& node_idx) {
      node.class_counts = {0, 0};
      for (std::size_t i : node_idx) ++node.class_counts[static_cast<std::size_t>(y[i])];
    };
    Tree tree;
    grow(tree, x, idx, 0, params.max_depth, split, leaf);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---- Gradient-boosted trees -----------------------------------------------------

double GbtModel::raw_score(std::span<const double> x, std::size_t rounds) const {
  if (x.size() != n_features) throw ShapeError("gbt: wrong feature count");
  double s = 0.0;
  const std::size_t n = std::min(rounds, trees.size());
  for (std::size_t t = 0; t < n; ++t) s += trees[t].leaf_for(x).value;
  return base_score + shrinkage * s;
}

double GbtModel::probability(std::span<const double> x) const {
  return sigmoid(raw_score(x, trees.size()));
}

int GbtModel::predict(std::span<const double> x) const { return probability(x) > 0.5 ? 1 : 0; }

std::vector<int> GbtModel::predict(const Matrix& x) const {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(predict(row));
  return out;
}

GbtModel train_gbt(const Matrix& x, const std::vector<int>& y, const GbtParams& params) {
  check_xy(x, y, "gbt");
  if (params.n_rounds < 0) throw ConfigError("gbt: n_rounds must be >= 0");
  if (params.max_depth < 0) throw ConfigError("gbt: max_depth must be >= 0");
  if (!(params.shrinkage > 0.0)) throw ConfigError("gbt: shrinkage must be positive");
  const std::size_t n = x.size(), d = x.front().size();

  GbtModel model;
  model.n_features = d;
  model.shrinkage = params.shrinkage;
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double prior = std::clamp(pos / static_cast<double>(n), kProbClamp, 1.0 - kProbClamp);
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<double> score(n, model.base_score), p(n), resid(n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = sigmoid(score[i]);
      resid[i] = y[i] - p[i];
    }
    SplitFn split = [&](const std::vector<std::size_t>& node_idx) {
      return best_sse_split(x, resid, node_idx, d);
    };
    LeafFn leaf = [&](TreeNode& node, const std::vector<std::size_t>& node_idx) {
      double g = 0, h = 0;
      for (std::size_t i : node_idx) {
        g += resid[i];
        h += p[i] * (1.0 - p[i]);
      }
      node.value = h > 0 ? g / std::max(h, kProbClamp) : 0.0;
    };
    Tree tree;
    grow(tree, x, idx, 0, params.max_depth, split, leaf);
    for (std::size_t i = 0; i < n; ++i) score[i] += params.shrinkage * tree.leaf_for(x[i]).value;
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double gbt_logistic_loss(const GbtModel& model, const Matrix& x, const std::vector<int>& y,
                         std::size_t rounds) {
  if (x.size() != y.size() || x.empty()) throw ShapeError("gbt loss: bad input sizes");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::clamp(sigmoid(model.raw_score(x[i], rounds)), kProbClamp,
                                1.0 - kProbClamp);
    total -= y[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(x.size());
}

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw ShapeError("accuracy: label vectors must be non-empty and equal length");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += y_true[i] == y_pred[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

// ---- Serialisation ---------------------------------------------------------------

nlohmann::json to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json j{{"feature", n.feature}, {"depth", n.depth}};
    if (n.is_leaf()) {
      if (!n.class_counts.empty()) j["class_counts"] = n.class_counts;
      j["value"] = n.value;
    } else {
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
      j["gain"] = n.gain;
    }
    nodes.push_back(std::move(j));
  }
  return {{"nodes", nodes}};
}

namespace {

Tree tree_from_json(const nlohmann::json& j) {
  Tree tree;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.depth = jn.at("depth").get<int>();
    if (n.is_leaf()) {
      n.value = jn.at("value").get<double>();
      if (jn.contains("class_counts")) n.class_counts = jn["class_counts"].get<std::vector<int>>();
    } else {
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
      n.gain = jn.at("gain").get<double>();
    }
    tree.nodes.push_back(std::move(n));
  }
  return tree;
}

}  // namespace

nlohmann::json to_json(const ForestModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(to_json(t));
  return {{"kind", "random_forest"}, {"n_features", model.n_features}, {"trees", trees}};
}

nlohmann::json to_json(const GbtModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(to_json(t));
  return {{"kind", "gbt"},
          {"n_features", model.n_features},
          {"base_score", model.base_score},
          {"shrinkage", model.shrinkage},
          {"trees", trees}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "random_forest") throw DataError("not a random forest model");
  ForestModel m;
  m.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

GbtModel gbt_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "gbt") throw DataError("not a gbt model");
  GbtModel m;
  m.n_features = j.at("n_features").get<std::size_t>();
  m.base_score = j.at("base_score").get<double>();
  m.shrinkage = j.at("shrinkage").get<double>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

// ---- Latent-feature comparison ---------------------------------------------------

Matrix feature_matrix(const std::vector<FeatureRow>& rows) {
  Matrix x;
  x.reserve(rows.size());
  for (const auto& r : rows) x.push_back(r.features);
  return x;
}

std::vector<int> label_vector(const std::vector<FeatureRow>& rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.label);
  return y;
}

nlohmann::json LatentComparison::to_json() const {
  return {{"raw_accuracy", raw_accuracy},
          {"latent_accuracy", latent_accuracy},
          {"delta", delta},
          {"architecture", architecture}};
}

LatentComparison evaluate_latent_features(const Network& net,
                                          const std::vector<FeatureRow>& train_rows,
                                          const std::vector<FeatureRow>& test_rows,
                                          const GbtParams& params) {
  if (train_rows.empty() || test_rows.empty()) {
    throw DataError("latent comparison needs non-empty train and test rows");
  }
  const auto width = static_cast<std::size_t>(net.config().input_width);
  const auto y_train = label_vector(train_rows);
  const auto y_test = label_vector(test_rows);

  LatentComparison out;
  out.architecture = to_string(net.config().architecture);
  const GbtModel raw = train_gbt(feature_matrix(train_rows), y_train, params);
  out.raw_accuracy = accuracy(y_test, raw.predict(feature_matrix(test_rows)));

  const Matrix latent_train = matrix_rows(net.extract_latent(reshape_for_model(train_rows, width)));
  const Matrix latent_test = matrix_rows(net.extract_latent(reshape_for_model(test_rows, width)));
  const GbtModel latent = train_gbt(latent_train, y_train, params);
  out.latent_accuracy = accuracy(y_test, latent.predict(latent_test));
  out.delta = out.latent_accuracy - out.raw_accuracy;
  return out;
}

}  // namespace cogeffort

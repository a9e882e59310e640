#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "snm/synthetic.hpp"
#include "snm/trees.hpp"

using namespace snm;

namespace {

// two binary attributes, two classes; a0 tracks the class on 14 of 16 rows,
// a1 on 10 of 16, so the root MaxOp gap is 4
TabularDataset toy_gap_dataset() {
  TabularDataset data;
  data.schema.class_name = "c";
  data.schema.class_labels = {"n", "y"};
  for (const char* name : {"a0", "a1"}) {
    AttributeSchema attr;
    attr.name = name;
    attr.domain = {"0", "1"};
    data.schema.attributes.push_back(attr);
  }
  data.columns.resize(2);
  for (int i = 0; i < 16; ++i) {
    const int label = i % 2;
    data.labels.push_back(label);
    data.columns[0].push_back(i < 2 ? 1 - label : label);
    data.columns[1].push_back(i < 6 ? 1 - label : label);
  }
  return data;
}

std::vector<int> all_rows(const TabularDataset& data) {
  std::vector<int> rows(static_cast<std::size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

TEST_CASE("max op counts the majority class per attribute value") {
  // A=0 -> (a:3, b:1), A=1 -> (a:0, b:2) gives 3 + 2
  TabularDataset data;
  data.schema.class_name = "c";
  data.schema.class_labels = {"a", "b"};
  AttributeSchema attr;
  attr.name = "A";
  attr.domain = {"0", "1"};
  data.schema.attributes.push_back(attr);
  data.columns.resize(1);
  const int a_vals[] = {0, 0, 0, 0, 1, 1};
  const int labels[] = {0, 0, 0, 1, 1, 1};
  for (int i = 0; i < 6; ++i) {
    data.columns[0].push_back(a_vals[i]);
    data.labels.push_back(labels[i]);
  }
  const BinnedDataset binned = BinnedDataset::from(data, 8);
  CHECK(max_op(binned, all_rows(data), 0) == 5);

  CHECK(max_op(binned, std::vector<int>{}, 0) == 0);
  CHECK(max_op(binned, std::vector<int>{3}, 0) == 1);
}

TEST_CASE("adding a row never decreases max op") {
  const TabularDataset data = toy_gap_dataset();
  const BinnedDataset binned = BinnedDataset::from(data, 8);
  std::vector<int> rows;
  for (int i = 0; i < data.rows(); ++i) {
    std::vector<int> grown = rows;
    grown.push_back(i);
    for (int a = 0; a < 2; ++a) {
      CHECK(max_op(binned, grown, a) >= max_op(binned, rows, a));
    }
    rows = grown;
  }
}

TEST_CASE("maxop utilities and gap") {
  const TabularDataset data = toy_gap_dataset();
  const BinnedDataset binned = BinnedDataset::from(data, 8);
  const auto rows = all_rows(data);
  const std::vector<int> attrs = {0, 1};
  CHECK(max_op(binned, rows, 0) == 14);
  CHECK(max_op(binned, rows, 1) == 10);
  CHECK(maxop_gap(binned, rows, attrs) == 4);
  const auto u = maxop_utilities(binned, rows, attrs);
  CHECK(u == std::vector<double>{1.0, 0.0});

  // a tied pair of attributes carries no gap
  const std::vector<int> same = {0, 0};
  CHECK(maxop_gap(binned, rows, same) == 0);
}

TEST_CASE("tree smooth sensitivity formula") {
  CHECK(tree_smooth_sensitivity(0, 0.5).value == 1.0);
  CHECK(tree_smooth_sensitivity(5, 0.5).value ==
        doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
  CHECK(tree_smooth_sensitivity(5, 0.5).value == doctest::Approx(0.0821).epsilon(1e-3));
  CHECK_THROWS_AS(tree_smooth_sensitivity(-1, 0.5), std::invalid_argument);
}

TEST_CASE("maxop smooth sensitivity matches brute force on an engineered table") {
  // records are (a0 value, a1 value, class) triples; the model enumerates the
  // 8 combinations in mixed radix
  const UtilityModel u = maxop_utility_model({2, 2}, 2);
  auto idx = [](int a0, int a1, int c) { return ((a0 * 2) + a1) * 2 + c; };
  Counts table(8, 0);
  // a0 separates classes perfectly (MaxOp 4); a1 is class-balanced in both
  // of its cells (MaxOp 2)
  table[static_cast<std::size_t>(idx(0, 0, 0))] = 1;
  table[static_cast<std::size_t>(idx(0, 1, 0))] = 1;
  table[static_cast<std::size_t>(idx(1, 0, 1))] = 1;
  table[static_cast<std::size_t>(idx(1, 1, 1))] = 1;

  const double beta = 0.3;
  const SmoothSensitivity brute = smooth_sensitivity_bruteforce(u, table, beta);
  std::vector<std::int64_t> scores = {4, 2};  // engineered gap k = 2
  const SmoothSensitivity analytic = indicator_gap_smooth_sensitivity(scores, beta);
  CHECK(analytic.value == doctest::Approx(brute.value).epsilon(1e-12));
  CHECK(analytic.witness_t == brute.witness_t);
  CHECK(analytic.value == doctest::Approx(std::exp(-2.0 * beta)).epsilon(1e-12));
}

TEST_CASE("leaf smooth sensitivity") {
  const std::vector<std::int64_t> votes = {22, 17, 8, 4, 0};
  const SmoothSensitivity s = leaf_smooth_sensitivity(votes, 0.4);
  CHECK(s.witness_t == 5);
  CHECK(s.value == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  const std::vector<std::int64_t> tie = {3, 3};
  CHECK(leaf_smooth_sensitivity(tie, 0.4).value == 1.0);

  const std::vector<std::int64_t> single = {10};
  CHECK(leaf_smooth_sensitivity(single, 0.4).value == 1.0);
}

TEST_CASE("leaf utility has global sensitivity one on enumerable universes") {
  const UtilityModel u = leaf_label_utility_model(3);
  double worst = 0.0;
  Counts counts(3, 0);
  for (counts[0] = 0; counts[0] <= 4; ++counts[0]) {
    for (counts[1] = 0; counts[1] <= 4; ++counts[1]) {
      for (counts[2] = 0; counts[2] <= 4; ++counts[2]) {
        worst = std::max(worst, local_sensitivity(u, counts));
      }
    }
  }
  CHECK(worst == 1.0);  // the declared global sensitivity is attained
}

TEST_CASE("leaf smooth sensitivity equals brute force on small count vectors") {
  for (int labels : {2, 3}) {
    const UtilityModel u = leaf_label_utility_model(labels);
    Counts counts(static_cast<std::size_t>(labels), 0);
    std::function<void(int, int)> sweep = [&](int coord, int remaining) {
      if (coord == labels) {
        if (database_size(counts) == 0) return;
        std::vector<std::int64_t> scores(counts.begin(), counts.end());
        for (double beta : {0.2, 0.6}) {
          const SmoothSensitivity brute =
              smooth_sensitivity_bruteforce(u, counts, beta);
          const SmoothSensitivity analytic =
              leaf_smooth_sensitivity(scores, beta);
          CAPTURE(counts);
          CHECK(analytic.value == doctest::Approx(brute.value).epsilon(1e-12));
        }
        return;
      }
      for (int c = 0; c <= remaining; ++c) {
        counts[static_cast<std::size_t>(coord)] = c;
        sweep(coord + 1, remaining - c);
      }
      counts[static_cast<std::size_t>(coord)] = 0;
    };
    sweep(0, 6);
  }
}

TEST_CASE("noisy count statistics") {
  Rng rng(41);
  double acc = 0.0, acc2 = 0.0;
  const int n = 100'000;
  const double eps = 0.5;
  for (int i = 0; i < n; ++i) {
    const double noisy = noisy_count(10, eps, rng);
    acc += noisy - 10.0;
    acc2 += (noisy - 10.0) * (noisy - 10.0);
  }
  const double mean = acc / n;
  const double var = acc2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(2.0 / (eps * eps) / n));
  CHECK(var == doctest::Approx(2.0 / (eps * eps)).epsilon(0.10));

  // vanishing noise at enormous budgets
  Rng rng2(43);
  double worst = 0.0, mean_high = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double noisy = noisy_count(7, 1e6, rng2);
    worst = std::max(worst, std::abs(noisy - 7.0));
    mean_high += (noisy - 7.0) / 1000.0;
  }
  CHECK(worst < 1e-4);
  CHECK(std::abs(mean_high) < 1e-6);
}

TEST_CASE("id3 with depth zero is a single leaf labeled by the noisy majority") {
  const TabularDataset full = toy_gap_dataset();
  std::vector<int> rows(15);  // 8 zeros, 7 ones: a clear majority
  std::iota(rows.begin(), rows.end(), 0);
  const TabularDataset data = subset_rows(full, rows);
  Id3Config config;
  config.depth = 0;
  config.epsilon = 1e6;
  config.rule = SplitRule::kSnmMaxOpLaplace;
  const Id3Model model = build_diffp_id3(data, config);
  CHECK(model.root.kind == TreeNode::Kind::kLeaf);
  CHECK(model.root.label == 0);
}

TEST_CASE("id3 at huge budgets recovers the noiseless greedy tree") {
  const TabularDataset data = synthetic_tabular(64, 2, 4);
  Id3Config noiseless;
  noiseless.depth = 2;
  noiseless.rule = SplitRule::kNoiseless;
  const Id3Model reference = build_diffp_id3(data, noiseless);

  for (SplitRule rule : {SplitRule::kSnmMaxOpLaplace, SplitRule::kSnmMaxOpStudentT,
                         SplitRule::kSnmMaxOpLln}) {
    Id3Config config;
    config.depth = 2;
    config.epsilon = 1e6;
    config.rule = rule;
    config.seed = 7;
    const Id3Model model = build_diffp_id3(data, config);
    CHECK(serialize_structure(model.root) == serialize_structure(reference.root));
    int agree = 0;
    for (int row = 0; row < data.rows(); ++row) {
      if (predict(model, data, row) == predict(reference, data, row)) ++agree;
    }
    CHECK(agree == data.rows());
  }
}

TEST_CASE("id3 budget ledger spends exactly epsilon at full depth") {
  const TabularDataset data = synthetic_tabular(64, 2, 4);
  Id3Config config;
  config.depth = 2;
  config.epsilon = 1.0;
  config.rule = SplitRule::kSnmMaxOpLaplace;
  config.seed = 11;
  const Id3Model model = build_diffp_id3(data, config);
  CHECK(model.ledger.unit_denominator == 6);  // 2 (depth + 1)
  CHECK(model.ledger.levels_reached == 3);
  CHECK(model.ledger.units_spent == 6);
  CHECK(model.ledger.spent_full_budget());
}

TEST_CASE("id3 is deterministic for a fixed seed") {
  const TabularDataset data = synthetic_tabular(64, 3, 8);
  Id3Config config;
  config.depth = 3;
  config.epsilon = 0.5;
  config.rule = SplitRule::kSnmMaxOpLaplace;
  config.seed = 1234;
  const Id3Model a = build_diffp_id3(data, config);
  const Id3Model b = build_diffp_id3(data, config);
  CHECK(serialize_model(a, data.schema) == serialize_model(b, data.schema));
}

TEST_CASE("id3 baselines with information gain build and predict") {
  const TabularDataset data = synthetic_tabular(64, 2, 8);
  for (SplitRule rule : {SplitRule::kEmInfoGain, SplitRule::kPfInfoGain}) {
    Id3Config config;
    config.depth = 2;
    config.epsilon = 2.0;
    config.rule = rule;
    const Id3Model model = build_diffp_id3(data, config);
    for (int row = 0; row < 4; ++row) {
      const int label = predict(model, data, row);
      CHECK(label >= 0);
      CHECK(label < 2);
    }
  }
}

TEST_CASE("forest structure ignores labels, budget and leaf mechanism") {
  const TabularDataset data = synthetic_tabular(128, 3, 8);
  ForestConfig a;
  a.trees = 8;
  a.depth = 3;
  a.epsilon = 0.05;
  a.leaf = LeafRule::kSnmLaplace;
  a.seed = 99;
  ForestConfig b = a;
  b.epsilon = 2.0;
  b.leaf = LeafRule::kEm;
  ForestConfig c = a;
  c.leaf = LeafRule::kNoiseless;

  const Forest fa = build_random_forest(data, a);
  const Forest fb = build_random_forest(data, b);
  const Forest fc = build_random_forest(data, c);
  CHECK(serialize_structure(fa) == serialize_structure(fb));
  CHECK(serialize_structure(fa) == serialize_structure(fc));
}

TEST_CASE("forest at huge budgets matches the noiseless labels") {
  const TabularDataset data = synthetic_tabular(256, 3, 0);
  ForestConfig noiseless;
  noiseless.trees = 8;
  noiseless.depth = 4;
  noiseless.leaf = LeafRule::kNoiseless;
  noiseless.seed = 5;
  const Forest reference = build_random_forest(data, noiseless);

  ForestConfig config = noiseless;
  config.epsilon = 1e6;
  config.leaf = LeafRule::kSnmLaplace;
  const Forest forest = build_random_forest(data, config);

  CHECK(serialize_structure(forest) == serialize_structure(reference));
  int agree = 0;
  for (int row = 0; row < data.rows(); ++row) {
    if (predict(forest, data, row) == predict(reference, data, row)) ++agree;
  }
  CHECK(agree >= data.rows() - 2);  // empty leaves draw uniform labels
}

TEST_CASE("forest rejects more trees than rows") {
  const TabularDataset data = synthetic_tabular(16, 1, 0);
  ForestConfig config;
  config.trees = 17;
  CHECK_THROWS_AS(build_random_forest(data, config), std::invalid_argument);
}

TEST_CASE("single-tree forest predicts like its tree") {
  const TabularDataset data = synthetic_tabular(64, 2, 0);
  ForestConfig config;
  config.trees = 1;
  config.depth = 3;
  config.leaf = LeafRule::kNoiseless;
  config.seed = 3;
  const Forest forest = build_random_forest(data, config);
  REQUIRE(forest.trees.size() == 1);
  for (int row = 0; row < data.rows(); ++row) {
    CHECK(predict(forest, data, row) ==
          predict(forest.trees[0], data, row, 2));
  }
}

TEST_CASE("separable data at huge budgets is classified almost perfectly") {
  const TabularDataset data = synthetic_tabular(2048, 3, 0);
  ForestConfig config;
  config.trees = 16;
  config.depth = 4;
  config.epsilon = 1e6;
  config.leaf = LeafRule::kSnmLaplace;
  config.seed = 17;
  const Forest forest = build_random_forest(data, config);
  int correct = 0;
  for (int row = 0; row < data.rows(); ++row) {
    if (predict(forest, data, row) == data.labels[static_cast<std::size_t>(row)]) {
      ++correct;
    }
  }
  CHECK(static_cast<double>(correct) / data.rows() >= 0.95);
}

TEST_CASE("continuous attributes split on narrowed uniform points") {
  TabularDataset data;
  data.schema.class_name = "c";
  data.schema.class_labels = {"n", "y"};
  AttributeSchema attr;
  attr.name = "x";
  attr.continuous = true;
  attr.lo = 0.0;
  attr.hi = 1.0;
  data.schema.attributes.push_back(attr);
  data.columns.resize(1);
  for (int i = 0; i < 64; ++i) {
    const double v = (i + 0.5) / 64.0;
    data.columns[0].push_back(v);
    data.labels.push_back(v < 0.5 ? 0 : 1);
  }
  ForestConfig config;
  config.trees = 4;
  config.depth = 6;
  config.leaf = LeafRule::kNoiseless;
  config.seed = 23;
  const Forest forest = build_random_forest(data, config);
  // the same continuous attribute may be reused down a path; splits must
  // stay inside the declared bounds
  std::function<void(const TreeNode&, double, double)> walk =
      [&](const TreeNode& node, double lo, double hi) {
        if (node.kind == TreeNode::Kind::kLeaf) return;
        REQUIRE(node.kind == TreeNode::Kind::kContinuous);
        CHECK(node.split_point >= lo);
        CHECK(node.split_point <= hi);
        walk(node.children[0], lo, node.split_point);
        walk(node.children[1], node.split_point, hi);
      };
  for (const TreeNode& tree : forest.trees) walk(tree, 0.0, 1.0);
}

TEST_CASE("the approval-voting counterexample reproduces") {
  const VotingCounterexampleReport report = reproduce_voting_counterexample();
  CHECK(report.p_x_c3 == doctest::Approx(0.04).epsilon(0.13));
  CHECK(std::abs(report.p_x_c3 - 0.04) < 0.005);
  CHECK(std::abs(report.p_y_c3 - 0.10) < 0.005);
  CHECK(report.envelope < report.p_y_c3);
  CHECK(report.violation_found);
  CHECK(report.matches_reported_values);
  CHECK(report.reproduced());
}

TEST_CASE("cross validation is deterministic and sane") {
  const TabularDataset data = synthetic_tabular(120, 2, 12);
  Id3Config config;
  config.depth = 2;
  config.epsilon = 2.0;
  config.rule = SplitRule::kSnmMaxOpLaplace;
  const EvalStats a = cross_validate_id3(data, config, 5, 2, 77);
  const EvalStats b = cross_validate_id3(data, config, 5, 2, 77);
  CHECK(a.mean_accuracy == b.mean_accuracy);
  CHECK(a.measurements == 10);
  CHECK(a.mean_accuracy >= 0.0);
  CHECK(a.mean_accuracy <= 1.0);
}

TEST_CASE("forest labeling: smooth noisy max holds up at a tiny budget") {
  // Large leaves put the smooth sensitivity far below the global one, so the
  // leaf labels survive eps = 0.05 while the exponential mechanism's weights
  // barely move off uniform. Golden run, seed 11: snm-lap 1.00, em 0.40.
  const TabularDataset data = synthetic_tabular(90112, 1, 0);
  ForestConfig snm;
  snm.trees = 32;
  snm.depth = 1;
  snm.epsilon = 0.05;
  snm.leaf = LeafRule::kSnmLaplace;
  snm.seed = 1;
  ForestConfig em = snm;
  em.leaf = LeafRule::kEm;
  const EvalStats s = holdout_forest(data, snm, 0.8, 10, 11);
  const EvalStats e = holdout_forest(data, em, 0.8, 10, 11);
  CHECK(s.mean_accuracy >= e.mean_accuracy - 0.02);
  CHECK(s.mean_accuracy > 0.99);
}

TEST_CASE("holdout evaluation is deterministic and sane") {
  const TabularDataset data = synthetic_tabular(200, 2, 0);
  ForestConfig config;
  config.trees = 8;
  config.depth = 3;
  config.epsilon = 1e6;
  config.leaf = LeafRule::kSnmLaplace;
  const EvalStats a = holdout_forest(data, config, 0.8, 3, 13);
  const EvalStats b = holdout_forest(data, config, 0.8, 3, 13);
  CHECK(a.mean_accuracy == b.mean_accuracy);
  CHECK(a.measurements == 3);
  CHECK(a.mean_accuracy > 0.9);  // separable data, vanishing noise
}

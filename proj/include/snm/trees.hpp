#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snm/analysis.hpp"
#include "snm/dataset.hpp"
#include "snm/rng.hpp"
#include "snm/sensitivity.hpp"

namespace snm {

// ---------------------------------------------------------------------------
// MaxOp split scoring
// ---------------------------------------------------------------------------

// Tabular data with every attribute discrete: continuous attributes are
// pre-binned into equal-width bins from their declared bounds, since the
// greedy split criterion and the ID3 recursion are defined over discrete
// attribute values.
struct BinnedDataset {
  std::vector<std::vector<int>> columns;  // [attribute][row] -> value index
  std::vector<int> domain_sizes;
  std::vector<int> labels;
  int class_count = 0;

  int rows() const { return static_cast<int>(labels.size()); }
  static BinnedDataset from(const TabularDataset& data, int continuous_bins);
};

int bin_of(const AttributeSchema& attr, double value, int continuous_bins);

// MaxOp(T, A): sum over the attribute's values of the largest class count.
// Empty row sets score 0. Adding a row never decreases the score.
std::int64_t max_op(const BinnedDataset& data, std::span<const int> rows,
                    int attribute);

// Indicator utility over candidate attributes: 1 for the argmax of MaxOp
// (lowest index on ties), 0 elsewhere.
std::vector<double> maxop_utilities(const BinnedDataset& data,
                                    std::span<const int> rows,
                                    std::span<const int> attributes);

// k: highest MaxOp minus second highest over the candidate attributes
// (0 on ties; a single candidate has no gap and yields 0 with a warning).
int maxop_gap(const BinnedDataset& data, std::span<const int> rows,
              std::span<const int> attributes);

// S = exp(-k beta), attained at t = k.
SmoothSensitivity tree_smooth_sensitivity(int k, double beta);

// count + Laplace(1/epsilon) noise; counting queries have sensitivity one.
double noisy_count(std::int64_t count, double epsilon, Rng& rng);

// ---------------------------------------------------------------------------
// Differentially private greedy ID3
// ---------------------------------------------------------------------------

struct TreeNode {
  enum class Kind { kLeaf, kDiscrete, kContinuous };
  Kind kind = Kind::kLeaf;
  int attribute = -1;
  double split_point = 0.0;            // continuous nodes
  std::vector<TreeNode> children;      // one per value, or {left, right}
  int label = -1;                      // leaves
  std::vector<std::int64_t> label_counts;  // kept pre-release, never serialized
};

enum class SplitRule {
  kNoiseless,  // plain greedy MaxOp; reference for the recovery tests
  kEmInfoGain,
  kPfInfoGain,
  kSnmMaxOpLaplace,
  kSnmMaxOpStudentT,
  kSnmMaxOpLln,
};

SplitRule split_rule_from_name(const std::string& name);
std::string split_rule_name(SplitRule rule);

struct Id3Config {
  int depth = 3;
  double epsilon = 1.0;
  SplitRule rule = SplitRule::kSnmMaxOpLaplace;
  double delta = 0.01;  // SNM-Laplace / SNM-LLN split selection
  int dof = 3;
  double sigma = 1.0;
  int continuous_bins = 8;
  std::uint64_t seed = 1;
};

// Exact budget accounting in integer units of eps / (2 (depth+1)): each
// recursion level reached charges two units (one noisy size count plus one
// selection or one round of leaf class counts; sibling nodes run on disjoint
// rows and compose in parallel). A full-depth tree spends exactly eps.
struct BudgetLedger {
  int unit_denominator = 0;
  int units_spent = 0;
  int levels_reached = 0;

  bool spent_full_budget() const { return units_spent == unit_denominator; }
};

struct Id3Model {
  TreeNode root;
  BudgetLedger ledger;
  int continuous_bins = 8;
};

Id3Model build_diffp_id3(const TabularDataset& data, const Id3Config& config);

int predict(const Id3Model& model, const TabularDataset& data, int row);

// ---------------------------------------------------------------------------
// Random forest with privately labeled leaves
// ---------------------------------------------------------------------------

enum class LeafRule {
  kNoiseless,
  kEm,
  kPf,
  kSnmLaplace,
  kSnmStudentT,
  kSnmLln,
};

LeafRule leaf_rule_from_name(const std::string& name);
std::string leaf_rule_name(LeafRule rule);

struct ForestConfig {
  int trees = 32;
  int depth = 4;
  double epsilon = 1.0;
  LeafRule leaf = LeafRule::kSnmLaplace;
  double delta = 0.01;
  int dof = 3;
  double sigma = 1.0;
  std::uint64_t seed = 1;
};

struct Forest {
  std::vector<TreeNode> trees;
};

// j: most frequent label count minus second most frequent (0 on ties or with
// a single label); S = exp(-j beta).
SmoothSensitivity leaf_smooth_sensitivity(std::span<const std::int64_t> counts,
                                          double beta);

// Splits the rows into `trees` disjoint chunks, grows one structure-random
// tree per chunk (structure reads only the schema, never the data), routes
// the chunk through it and labels each leaf with the configured mechanism at
// the full epsilon (leaves of one tree hold disjoint rows). Empty leaves get
// a uniform label at no privacy cost.
Forest build_random_forest(const TabularDataset& data,
                           const ForestConfig& config);

int predict(const TreeNode& tree, const TabularDataset& data, int row,
            int continuous_bins);
int predict(const Forest& forest, const TabularDataset& data, int row);

// Split topology only (no labels, no counts); byte-identical across epsilon
// and leaf-mechanism choices for a fixed seed.
std::string serialize_structure(const TreeNode& node);
std::string serialize_structure(const Forest& forest);

// Full model including leaf labels, with a stable field order.
std::string serialize_model(const Forest& forest, const TabularSchema& schema);
std::string serialize_model(const Id3Model& model, const TabularSchema& schema);

// ---------------------------------------------------------------------------
// Brute-force sensitivity models and the counterexample
// ---------------------------------------------------------------------------

// Leaf labeling as a UtilityModel over the label universe (records are label
// occurrences), for cross-checking leaf_smooth_sensitivity exhaustively.
UtilityModel leaf_label_utility_model(int label_count);

// MaxOp attribute selection as a UtilityModel whose records enumerate every
// (attribute value..., class) combination of a small all-discrete schema.
UtilityModel maxop_utility_model(const std::vector<int>& attr_domain_sizes,
                                 int class_count);

// Numeric reproduction of the approval-voting counterexample: scaling the
// exponential mechanism by the smooth sensitivity leaks. Vote counts
// [22, 8, 17, 4, 0], neighbor adds one C3 vote, eps = 1/2.
struct VotingCounterexampleReport {
  double p_x_c3 = 0.0;       // ~0.04
  double p_y_c3 = 0.0;       // ~0.10
  double envelope = 0.0;     // e^{0.5} * p_x_c3
  bool violation_found = false;
  bool matches_reported_values = false;

  bool reproduced() const { return violation_found && matches_reported_values; }
};

VotingCounterexampleReport reproduce_voting_counterexample();

// ---------------------------------------------------------------------------
// Evaluation harnesses
// ---------------------------------------------------------------------------

TabularDataset subset_rows(const TabularDataset& data,
                           std::span<const int> rows);

struct EvalStats {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int measurements = 0;
};

// repeats x k-fold cross validation; fold assignment is a seed-deterministic
// row shuffle that never looks at the labels.
EvalStats cross_validate_id3(const TabularDataset& data, Id3Config config,
                             int folds, int repeats, std::uint64_t seed);

// repeats x (train_fraction / rest) holdout evaluation.
EvalStats holdout_forest(const TabularDataset& data, ForestConfig config,
                         double train_fraction, int repeats,
                         std::uint64_t seed);

}  // namespace snm

#include "snm/trees.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "snm/mechanisms.hpp"

namespace snm {

namespace {

constexpr double kStopThreshold = 0.7071067811865476;  // sqrt(2)/2

int uniform_index(Rng& rng, int n) {
  const int i = static_cast<int>(rng.next_unit() * static_cast<double>(n));
  return std::min(i, n - 1);
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<std::vector<std::int64_t>> class_table(const BinnedDataset& data,
                                                   std::span<const int> rows,
                                                   int attribute) {
  std::vector<std::vector<std::int64_t>> table(
      static_cast<std::size_t>(data.domain_sizes[static_cast<std::size_t>(attribute)]),
      std::vector<std::int64_t>(static_cast<std::size_t>(data.class_count), 0));
  const auto& col = data.columns[static_cast<std::size_t>(attribute)];
  for (int row : rows) {
    ++table[static_cast<std::size_t>(col[static_cast<std::size_t>(row)])]
           [static_cast<std::size_t>(data.labels[static_cast<std::size_t>(row)])];
  }
  return table;
}

// Information gain in bits; the utility handed to the EM/PF baselines.
double info_gain(const BinnedDataset& data, std::span<const int> rows,
                 int attribute) {
  if (rows.empty()) return 0.0;
  const double n = static_cast<double>(rows.size());

  std::vector<std::int64_t> class_counts(
      static_cast<std::size_t>(data.class_count), 0);
  for (int row : rows) {
    ++class_counts[static_cast<std::size_t>(
        data.labels[static_cast<std::size_t>(row)])];
  }
  auto entropy = [](std::span<const std::int64_t> counts, double total) {
    double h = 0.0;
    for (std::int64_t c : counts) {
      if (c > 0) {
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
      }
    }
    return h;
  };
  const double h_class = entropy(class_counts, n);

  const auto table = class_table(data, rows, attribute);
  double h_cond = 0.0;
  for (const auto& cell : table) {
    const std::int64_t nj = std::accumulate(cell.begin(), cell.end(), std::int64_t{0});
    if (nj > 0) {
      h_cond += static_cast<double>(nj) / n * entropy(cell, static_cast<double>(nj));
    }
  }
  return h_class - h_cond;
}

}  // namespace

int bin_of(const AttributeSchema& attr, double value, int continuous_bins) {
  if (!attr.continuous) return static_cast<int>(value);
  const double span = attr.hi - attr.lo;
  const int bin = static_cast<int>((value - attr.lo) / span *
                                   static_cast<double>(continuous_bins));
  return std::clamp(bin, 0, continuous_bins - 1);
}

BinnedDataset BinnedDataset::from(const TabularDataset& data,
                                  int continuous_bins) {
  if (continuous_bins < 2) {
    throw std::invalid_argument("binning requires at least two bins");
  }
  BinnedDataset out;
  out.labels = data.labels;
  out.class_count = static_cast<int>(data.schema.class_labels.size());
  out.columns.resize(data.schema.attributes.size());
  out.domain_sizes.resize(data.schema.attributes.size());
  for (std::size_t a = 0; a < data.schema.attributes.size(); ++a) {
    const AttributeSchema& attr = data.schema.attributes[a];
    out.domain_sizes[a] = attr.continuous ? continuous_bins
                                          : static_cast<int>(attr.domain.size());
    out.columns[a].resize(data.columns[a].size());
    for (std::size_t r = 0; r < data.columns[a].size(); ++r) {
      out.columns[a][r] = bin_of(attr, data.columns[a][r], continuous_bins);
    }
  }
  return out;
}

std::int64_t max_op(const BinnedDataset& data, std::span<const int> rows,
                    int attribute) {
  if (rows.empty()) return 0;
  const auto table = class_table(data, rows, attribute);
  std::int64_t total = 0;
  for (const auto& cell : table) {
    total += *std::max_element(cell.begin(), cell.end());
  }
  return total;
}

std::vector<double> maxop_utilities(const BinnedDataset& data,
                                    std::span<const int> rows,
                                    std::span<const int> attributes) {
  std::vector<double> scores(attributes.size());
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    scores[i] = static_cast<double>(max_op(data, rows, attributes[i]));
  }
  const int best = argmax_lowest(scores);
  std::vector<double> u(attributes.size(), 0.0);
  u[static_cast<std::size_t>(best)] = 1.0;
  return u;
}

int maxop_gap(const BinnedDataset& data, std::span<const int> rows,
              std::span<const int> attributes) {
  if (attributes.empty()) {
    throw std::invalid_argument("maxop_gap: no candidate attributes");
  }
  if (attributes.size() == 1) {
    std::fputs("warning: maxop gap with a single candidate attribute is "
               "undefined, using 0\n", stderr);
    return 0;
  }
  std::int64_t top = -1, second = -1;
  for (int a : attributes) {
    const std::int64_t v = max_op(data, rows, a);
    if (v > top) {
      second = top;
      top = v;
    } else if (v > second) {
      second = v;
    }
  }
  return static_cast<int>(top - second);
}

SmoothSensitivity tree_smooth_sensitivity(int k, double beta) {
  if (k < 0 || !(beta > 0.0)) {
    throw std::invalid_argument("tree_smooth_sensitivity: k >= 0, beta > 0");
  }
  SmoothSensitivity s;
  s.beta = beta;
  s.witness_t = k;
  s.value = std::exp(-beta * static_cast<double>(k));
  return s;
}

double noisy_count(std::int64_t count, double epsilon, Rng& rng) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("noisy_count: epsilon > 0");
  const CalibratedNoise lap = standard_noise(NoiseKind::kLaplace);
  return static_cast<double>(count) + lap.sample(rng) / epsilon;
}

SplitRule split_rule_from_name(const std::string& name) {
  if (name == "none") return SplitRule::kNoiseless;
  if (name == "em") return SplitRule::kEmInfoGain;
  if (name == "pf") return SplitRule::kPfInfoGain;
  if (name == "snm-lap") return SplitRule::kSnmMaxOpLaplace;
  if (name == "snm-t") return SplitRule::kSnmMaxOpStudentT;
  if (name == "snm-lln") return SplitRule::kSnmMaxOpLln;
  throw std::invalid_argument("unknown split rule: " + name);
}

std::string split_rule_name(SplitRule rule) {
  switch (rule) {
    case SplitRule::kNoiseless: return "none";
    case SplitRule::kEmInfoGain: return "em";
    case SplitRule::kPfInfoGain: return "pf";
    case SplitRule::kSnmMaxOpLaplace: return "snm-lap";
    case SplitRule::kSnmMaxOpStudentT: return "snm-t";
    case SplitRule::kSnmMaxOpLln: return "snm-lln";
  }
  return "unknown";
}

LeafRule leaf_rule_from_name(const std::string& name) {
  if (name == "none") return LeafRule::kNoiseless;
  if (name == "em") return LeafRule::kEm;
  if (name == "pf") return LeafRule::kPf;
  if (name == "snm-lap") return LeafRule::kSnmLaplace;
  if (name == "snm-t") return LeafRule::kSnmStudentT;
  if (name == "snm-lln") return LeafRule::kSnmLln;
  throw std::invalid_argument("unknown leaf rule: " + name);
}

std::string leaf_rule_name(LeafRule rule) {
  switch (rule) {
    case LeafRule::kNoiseless: return "none";
    case LeafRule::kEm: return "em";
    case LeafRule::kPf: return "pf";
    case LeafRule::kSnmLaplace: return "snm-lap";
    case LeafRule::kSnmStudentT: return "snm-t";
    case LeafRule::kSnmLln: return "snm-lln";
  }
  return "unknown";
}

namespace {

struct Id3Builder {
  const BinnedDataset& data;
  const Id3Config& config;
  double eps_unit;  // epsilon / (2 (depth+1))
  BudgetLedger* ledger;
  Rng rng;

  int select_attribute(std::span<const int> rows,
                       std::span<const int> attrs) {
    if (config.rule == SplitRule::kNoiseless) {
      std::vector<double> scores(attrs.size());
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        scores[i] = static_cast<double>(max_op(data, rows, attrs[i]));
      }
      return attrs[static_cast<std::size_t>(argmax_lowest(scores))];
    }
    if (config.rule == SplitRule::kEmInfoGain ||
        config.rule == SplitRule::kPfInfoGain) {
      std::vector<double> gains(attrs.size());
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        gains[i] = info_gain(data, rows, attrs[i]);
      }
      // information gain ranges over [0, log2 |C|], which bounds its
      // sensitivity from above
      const double delta_u = std::log2(static_cast<double>(data.class_count));
      const auto result =
          config.rule == SplitRule::kEmInfoGain
              ? exponential_mechanism(gains, eps_unit, delta_u, rng)
              : permute_and_flip(gains, eps_unit, delta_u, rng);
      return attrs[static_cast<std::size_t>(result.chosen)];
    }

    // Smooth Noisy Max over the MaxOp indicator utility
    MechanismSpec spec;
    spec.id = config.rule == SplitRule::kSnmMaxOpLaplace ? MechanismId::kSnmLaplace
              : config.rule == SplitRule::kSnmMaxOpStudentT
                  ? MechanismId::kSnmStudentT
                  : MechanismId::kSnmLln;
    spec.delta = config.delta;
    spec.dof = config.dof;
    spec.sigma = config.sigma;
    const CalibratedNoise noise = mechanism_noise(spec, eps_unit);
    const std::vector<double> u = maxop_utilities(data, rows, attrs);
    std::vector<std::int64_t> scores(attrs.size());
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      scores[i] = max_op(data, rows, attrs[i]);
    }
    const SmoothSensitivity s =
        indicator_gap_smooth_sensitivity(scores, noise.beta);
    return attrs[static_cast<std::size_t>(
        snm_select(u, noise, s, /*monotonic=*/false, rng).chosen)];
  }

  TreeNode build(std::vector<int> rows, std::vector<int> attrs,
                 int depth_left) {
    const int level = config.depth - depth_left;
    if (ledger != nullptr && level + 1 > ledger->levels_reached) {
      ledger->levels_reached = level + 1;
      ledger->units_spent = 2 * ledger->levels_reached;
    }

    const bool private_mode = config.rule != SplitRule::kNoiseless;
    int t = 1;
    for (int a : attrs) {
      t = std::max(t, data.domain_sizes[static_cast<std::size_t>(a)]);
    }
    const double size_estimate =
        private_mode ? noisy_count(static_cast<std::int64_t>(rows.size()),
                                   eps_unit, rng)
                     : static_cast<double>(rows.size());

    const bool stop =
        attrs.empty() || depth_left == 0 ||
        size_estimate / (static_cast<double>(t) * data.class_count) <
            kStopThreshold;
    if (stop) {
      TreeNode leaf;
      leaf.kind = TreeNode::Kind::kLeaf;
      leaf.label_counts.assign(static_cast<std::size_t>(data.class_count), 0);
      for (int row : rows) {
        ++leaf.label_counts[static_cast<std::size_t>(
            data.labels[static_cast<std::size_t>(row)])];
      }
      std::vector<double> noisy(static_cast<std::size_t>(data.class_count));
      for (int c = 0; c < data.class_count; ++c) {
        noisy[static_cast<std::size_t>(c)] =
            private_mode
                ? noisy_count(leaf.label_counts[static_cast<std::size_t>(c)],
                              eps_unit, rng)
                : static_cast<double>(
                      leaf.label_counts[static_cast<std::size_t>(c)]);
      }
      leaf.label = argmax_lowest(noisy);
      return leaf;
    }

    const int chosen = select_attribute(rows, attrs);
    std::vector<int> remaining;
    for (int a : attrs) {
      if (a != chosen) remaining.push_back(a);
    }

    TreeNode node;
    node.kind = TreeNode::Kind::kDiscrete;
    node.attribute = chosen;
    const int values = data.domain_sizes[static_cast<std::size_t>(chosen)];
    std::vector<std::vector<int>> parts(static_cast<std::size_t>(values));
    const auto& col = data.columns[static_cast<std::size_t>(chosen)];
    for (int row : rows) {
      parts[static_cast<std::size_t>(col[static_cast<std::size_t>(row)])]
          .push_back(row);
    }
    node.children.reserve(static_cast<std::size_t>(values));
    for (auto& part : parts) {
      node.children.push_back(build(std::move(part), remaining, depth_left - 1));
    }
    return node;
  }
};

}  // namespace

Id3Model build_diffp_id3(const TabularDataset& data, const Id3Config& config) {
  if (config.depth < 0) throw std::invalid_argument("id3: depth >= 0 required");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("id3: epsilon > 0");
  if (data.rows() == 0) throw std::invalid_argument("id3: empty training data");

  const BinnedDataset binned = BinnedDataset::from(data, config.continuous_bins);

  Id3Model model;
  model.continuous_bins = config.continuous_bins;
  model.ledger.unit_denominator = 2 * (config.depth + 1);

  Id3Builder builder{binned, config,
                     config.epsilon / (2.0 * (config.depth + 1)),
                     config.rule == SplitRule::kNoiseless ? nullptr
                                                          : &model.ledger,
                     Rng(config.seed)};
  std::vector<int> rows(static_cast<std::size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<int> attrs(data.schema.attributes.size());
  std::iota(attrs.begin(), attrs.end(), 0);
  model.root = builder.build(std::move(rows), std::move(attrs), config.depth);
  return model;
}

int predict(const Id3Model& model, const TabularDataset& data, int row) {
  const TreeNode* node = &model.root;
  while (node->kind != TreeNode::Kind::kLeaf) {
    const AttributeSchema& attr =
        data.schema.attributes[static_cast<std::size_t>(node->attribute)];
    const double value = data.columns[static_cast<std::size_t>(node->attribute)]
                                     [static_cast<std::size_t>(row)];
    const int v = bin_of(attr, value, model.continuous_bins);
    node = &node->children[static_cast<std::size_t>(v)];
  }
  return node->label;
}

SmoothSensitivity leaf_smooth_sensitivity(std::span<const std::int64_t> counts,
                                          double beta) {
  if (counts.empty()) {
    throw std::invalid_argument("leaf_smooth_sensitivity: at least one label");
  }
  if (counts.size() == 1) {
    std::fputs("note: single-label leaf, smooth sensitivity set to 1 by "
               "convention\n", stderr);
    SmoothSensitivity s;
    s.beta = beta;
    s.witness_t = 0;
    s.value = 1.0;
    return s;
  }
  // exact: the label flips after (top - second) edits, plus one when the
  // runner-up sits at a higher index and a tie alone does not move the argmax
  return indicator_gap_smooth_sensitivity(counts, beta);
}

namespace {

struct RandomTreeBuilder {
  const TabularSchema& schema;

  // Bounds of continuous attributes narrow along the path; discrete
  // attributes are consumed. Structure never reads any data row.
  TreeNode build(Rng& rng, std::vector<bool> available,
                 std::vector<std::pair<double, double>> bounds,
                 int depth_left) {
    std::vector<int> candidates;
    for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
      if (available[a]) candidates.push_back(static_cast<int>(a));
    }
    if (depth_left == 0 || candidates.empty()) {
      TreeNode leaf;
      leaf.kind = TreeNode::Kind::kLeaf;
      return leaf;
    }

    const int attr = candidates[static_cast<std::size_t>(
        uniform_index(rng, static_cast<int>(candidates.size())))];
    const AttributeSchema& a = schema.attributes[static_cast<std::size_t>(attr)];

    TreeNode node;
    node.attribute = attr;
    if (a.continuous) {
      auto [lo, hi] = bounds[static_cast<std::size_t>(attr)];
      node.kind = TreeNode::Kind::kContinuous;
      node.split_point = lo + rng.next_unit() * (hi - lo);
      auto left_bounds = bounds;
      auto right_bounds = bounds;
      left_bounds[static_cast<std::size_t>(attr)] = {lo, node.split_point};
      right_bounds[static_cast<std::size_t>(attr)] = {node.split_point, hi};
      node.children.push_back(build(rng, available, left_bounds, depth_left - 1));
      node.children.push_back(build(rng, available, right_bounds, depth_left - 1));
    } else {
      node.kind = TreeNode::Kind::kDiscrete;
      available[static_cast<std::size_t>(attr)] = false;
      node.children.reserve(a.domain.size());
      for (std::size_t v = 0; v < a.domain.size(); ++v) {
        node.children.push_back(build(rng, available, bounds, depth_left - 1));
      }
    }
    return node;
  }
};

void route_rows(const TabularDataset& data, std::span<const int> rows,
                TreeNode& node) {
  if (node.kind == TreeNode::Kind::kLeaf) {
    node.label_counts.assign(data.schema.class_labels.size(), 0);
    for (int row : rows) {
      ++node.label_counts[static_cast<std::size_t>(
          data.labels[static_cast<std::size_t>(row)])];
    }
    return;
  }
  std::vector<std::vector<int>> parts(node.children.size());
  const auto& col = data.columns[static_cast<std::size_t>(node.attribute)];
  for (int row : rows) {
    const double value = col[static_cast<std::size_t>(row)];
    std::size_t child;
    if (node.kind == TreeNode::Kind::kContinuous) {
      child = value < node.split_point ? 0 : 1;
    } else {
      child = static_cast<std::size_t>(value);
    }
    parts[child].push_back(row);
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    route_rows(data, parts[i], node.children[i]);
  }
}

void label_leaves(TreeNode& node, const ForestConfig& config, int class_count,
                  Rng& label_rng) {
  if (node.kind != TreeNode::Kind::kLeaf) {
    for (TreeNode& child : node.children) {
      label_leaves(child, config, class_count, label_rng);
    }
    return;
  }
  const std::int64_t total = std::accumulate(
      node.label_counts.begin(), node.label_counts.end(), std::int64_t{0});
  if (total == 0) {
    // no data reached this leaf: uniform label, no privacy cost
    node.label = uniform_index(label_rng, class_count);
    return;
  }
  if (config.leaf == LeafRule::kNoiseless) {
    std::vector<double> counts(node.label_counts.begin(),
                               node.label_counts.end());
    node.label = argmax_lowest(counts);
    return;
  }

  std::vector<double> utilities(static_cast<std::size_t>(class_count), 0.0);
  {
    std::vector<double> counts(node.label_counts.begin(),
                               node.label_counts.end());
    utilities[static_cast<std::size_t>(argmax_lowest(counts))] = 1.0;
  }

  MechanismSpec spec;
  switch (config.leaf) {
    case LeafRule::kEm: spec.id = MechanismId::kEm; break;
    case LeafRule::kPf: spec.id = MechanismId::kPf; break;
    case LeafRule::kSnmLaplace: spec.id = MechanismId::kSnmLaplace; break;
    case LeafRule::kSnmStudentT: spec.id = MechanismId::kSnmStudentT; break;
    case LeafRule::kSnmLln: spec.id = MechanismId::kSnmLln; break;
    case LeafRule::kNoiseless: break;  // handled above
  }
  spec.delta = config.delta;
  spec.dof = config.dof;
  spec.sigma = config.sigma;

  SmoothSensitivity s;
  if (mechanism_is_snm(spec.id)) {
    const double beta = mechanism_noise(spec, config.epsilon).beta;
    s = leaf_smooth_sensitivity(node.label_counts, beta);
  }
  node.label = mechanism_select(spec, utilities, /*delta_u=*/1.0,
                                /*monotonic=*/false, s, config.epsilon,
                                label_rng);
}

}  // namespace

Forest build_random_forest(const TabularDataset& data,
                           const ForestConfig& config) {
  if (config.trees < 1) throw std::invalid_argument("forest: trees >= 1");
  if (config.depth < 0) throw std::invalid_argument("forest: depth >= 0");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("forest: epsilon > 0");
  if (config.trees > data.rows()) {
    throw std::invalid_argument(
        "forest: more trees than training rows, chunks would be empty");
  }

  const Rng base(config.seed);

  // disjoint chunks covering the training set
  std::vector<int> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = base.split(0xC0FFEEu);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(
        uniform_index(shuffle_rng, static_cast<int>(i)));
    std::swap(order[i - 1], order[j]);
  }

  const int n = data.rows();
  const int chunk_base = n / config.trees;
  const int chunk_extra = n % config.trees;

  Forest forest;
  forest.trees.reserve(static_cast<std::size_t>(config.trees));
  std::size_t cursor = 0;
  for (int tree = 0; tree < config.trees; ++tree) {
    const int chunk_size = chunk_base + (tree < chunk_extra ? 1 : 0);
    std::vector<int> chunk(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                           order.begin() + static_cast<std::ptrdiff_t>(cursor + chunk_size));
    cursor += static_cast<std::size_t>(chunk_size);

    // the structure stream never touches labels, counts or epsilon, so the
    // topology is identical across leaf-mechanism and budget choices
    Rng structure_rng = base.split2(0x57u, static_cast<std::uint64_t>(tree));
    RandomTreeBuilder builder{data.schema};
    std::vector<bool> available(data.schema.attributes.size(), true);
    std::vector<std::pair<double, double>> bounds;
    bounds.reserve(data.schema.attributes.size());
    for (const auto& attr : data.schema.attributes) {
      bounds.emplace_back(attr.lo, attr.hi);
    }
    TreeNode root = builder.build(structure_rng, available, bounds, config.depth);

    route_rows(data, chunk, root);
    Rng label_rng = base.split2(0x1A8u, static_cast<std::uint64_t>(tree));
    label_leaves(root, config, static_cast<int>(data.schema.class_labels.size()),
                 label_rng);
    forest.trees.push_back(std::move(root));
  }
  return forest;
}

int predict(const TreeNode& tree, const TabularDataset& data, int row,
            int continuous_bins) {
  const TreeNode* node = &tree;
  while (node->kind != TreeNode::Kind::kLeaf) {
    const double value = data.columns[static_cast<std::size_t>(node->attribute)]
                                     [static_cast<std::size_t>(row)];
    if (node->kind == TreeNode::Kind::kContinuous) {
      node = &node->children[value < node->split_point ? 0 : 1];
    } else {
      const AttributeSchema& attr =
          data.schema.attributes[static_cast<std::size_t>(node->attribute)];
      node = &node->children[static_cast<std::size_t>(
          bin_of(attr, value, continuous_bins))];
    }
  }
  return node->label;
}

int predict(const Forest& forest, const TabularDataset& data, int row) {
  std::vector<int> votes(data.schema.class_labels.size(), 0);
  for (const TreeNode& tree : forest.trees) {
    ++votes[static_cast<std::size_t>(predict(tree, data, row, /*bins=*/2))];
  }
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace {

nlohmann::ordered_json structure_json(const TreeNode& node) {
  nlohmann::ordered_json j;
  switch (node.kind) {
    case TreeNode::Kind::kLeaf:
      j["kind"] = "leaf";
      break;
    case TreeNode::Kind::kDiscrete:
      j["kind"] = "discrete";
      j["attribute"] = node.attribute;
      break;
    case TreeNode::Kind::kContinuous:
      j["kind"] = "continuous";
      j["attribute"] = node.attribute;
      j["split"] = node.split_point;
      break;
  }
  if (node.kind != TreeNode::Kind::kLeaf) {
    j["children"] = nlohmann::ordered_json::array();
    for (const TreeNode& child : node.children) {
      j["children"].push_back(structure_json(child));
    }
  }
  return j;
}

nlohmann::ordered_json model_json(const TreeNode& node) {
  nlohmann::ordered_json j = structure_json(node);
  if (node.kind == TreeNode::Kind::kLeaf) {
    j["label"] = node.label;
  } else {
    j["children"] = nlohmann::ordered_json::array();
    for (const TreeNode& child : node.children) {
      j["children"].push_back(model_json(child));
    }
  }
  return j;
}

}  // namespace

std::string serialize_structure(const TreeNode& node) {
  return structure_json(node).dump();
}

std::string serialize_structure(const Forest& forest) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const TreeNode& tree : forest.trees) j.push_back(structure_json(tree));
  return j.dump();
}

std::string serialize_model(const Forest& forest, const TabularSchema& schema) {
  nlohmann::ordered_json j;
  j["class_labels"] = schema.class_labels;
  j["trees"] = nlohmann::ordered_json::array();
  for (const TreeNode& tree : forest.trees) j["trees"].push_back(model_json(tree));
  return j.dump(2);
}

std::string serialize_model(const Id3Model& model, const TabularSchema& schema) {
  nlohmann::ordered_json j;
  j["class_labels"] = schema.class_labels;
  j["continuous_bins"] = model.continuous_bins;
  j["tree"] = model_json(model.root);
  return j.dump(2);
}

UtilityModel leaf_label_utility_model(int label_count) {
  UtilityModel u;
  u.outcome_count = label_count;
  u.global_sensitivity = 1.0;
  u.monotonic = false;
  u.evaluate = [](const Counts& counts, int r) {
    int best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
      if (counts[i] > counts[static_cast<std::size_t>(best)]) {
        best = static_cast<int>(i);
      }
    }
    return r == best ? 1.0 : 0.0;
  };
  u.smooth = [](const Counts& counts, double beta) {
    std::vector<std::int64_t> scores(counts.begin(), counts.end());
    return indicator_gap_smooth_sensitivity(scores, beta);
  };
  return u;
}

UtilityModel maxop_utility_model(const std::vector<int>& attr_domain_sizes,
                                 int class_count) {
  const int attrs = static_cast<int>(attr_domain_sizes.size());
  UtilityModel u;
  u.outcome_count = attrs;
  u.global_sensitivity = 1.0;
  u.monotonic = false;
  u.evaluate = [attr_domain_sizes, class_count, attrs](const Counts& counts,
                                                       int r) {
    // universe elements enumerate (value per attribute, class) in mixed radix
    std::vector<std::int64_t> maxop(static_cast<std::size_t>(attrs), 0);
    for (int a = 0; a < attrs; ++a) {
      const int domain = attr_domain_sizes[static_cast<std::size_t>(a)];
      std::vector<std::vector<std::int64_t>> table(
          static_cast<std::size_t>(domain),
          std::vector<std::int64_t>(static_cast<std::size_t>(class_count), 0));
      for (std::size_t e = 0; e < counts.size(); ++e) {
        if (counts[e] == 0) continue;
        std::size_t rest = e;
        const int cls = static_cast<int>(rest % static_cast<std::size_t>(class_count));
        rest /= static_cast<std::size_t>(class_count);
        for (int b = attrs - 1; b >= 0; --b) {
          const int dom = attr_domain_sizes[static_cast<std::size_t>(b)];
          const int value = static_cast<int>(rest % static_cast<std::size_t>(dom));
          rest /= static_cast<std::size_t>(dom);
          if (b == a) {
            table[static_cast<std::size_t>(value)][static_cast<std::size_t>(cls)] +=
                counts[e];
          }
        }
      }
      std::int64_t total = 0;
      for (const auto& cell : table) {
        total += *std::max_element(cell.begin(), cell.end());
      }
      maxop[static_cast<std::size_t>(a)] = total;
    }
    int best = 0;
    for (int a = 1; a < attrs; ++a) {
      if (maxop[static_cast<std::size_t>(a)] > maxop[static_cast<std::size_t>(best)]) {
        best = a;
      }
    }
    return r == best ? 1.0 : 0.0;
  };
  return u;
}

VotingCounterexampleReport reproduce_voting_counterexample() {
  const std::vector<std::int64_t> votes = {22, 8, 17, 4, 0};
  std::vector<std::int64_t> neighbor = votes;
  neighbor[2] += 1;  // one extra vote for C3
  const double eps = 0.5;

  auto indicator = [](const std::vector<std::int64_t>& counts) {
    std::vector<double> u(counts.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
      if (counts[i] > counts[best]) best = i;
    }
    u[best] = 1.0;
    return u;
  };

  // The flawed mechanism pairs the smooth sensitivity directly with epsilon,
  // which is exactly what the counterexample exploits.
  const SmoothSensitivity s_x = leaf_smooth_sensitivity(votes, eps);
  const SmoothSensitivity s_y = leaf_smooth_sensitivity(neighbor, eps);

  const std::vector<double> pmf_x =
      em_smooth_unsafe_pmf(indicator(votes), eps, s_x.value);
  const std::vector<double> pmf_y =
      em_smooth_unsafe_pmf(indicator(neighbor), eps, s_y.value);

  VotingCounterexampleReport report;
  report.p_x_c3 = pmf_x[2];
  report.p_y_c3 = pmf_y[2];
  report.envelope = std::exp(eps) * report.p_x_c3;
  report.violation_found = report.p_y_c3 > report.envelope;
  report.matches_reported_values = std::abs(report.p_x_c3 - 0.04) <= 0.005 &&
                                   std::abs(report.p_y_c3 - 0.10) <= 0.005;
  return report;
}

TabularDataset subset_rows(const TabularDataset& data,
                           std::span<const int> rows) {
  TabularDataset out;
  out.schema = data.schema;
  out.columns.resize(data.columns.size());
  for (std::size_t a = 0; a < data.columns.size(); ++a) {
    out.columns[a].reserve(rows.size());
    for (int row : rows) {
      out.columns[a].push_back(data.columns[a][static_cast<std::size_t>(row)]);
    }
  }
  out.labels.reserve(rows.size());
  for (int row : rows) {
    out.labels.push_back(data.labels[static_cast<std::size_t>(row)]);
  }
  return out;
}

namespace {

std::vector<int> shuffled_rows(int n, Rng rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(
        uniform_index(rng, static_cast<int>(i)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

EvalStats summarize(const std::vector<double>& accuracies) {
  EvalStats stats;
  stats.measurements = static_cast<int>(accuracies.size());
  for (double a : accuracies) stats.mean_accuracy += a;
  stats.mean_accuracy /= static_cast<double>(accuracies.size());
  double var = 0.0;
  for (double a : accuracies) {
    var += (a - stats.mean_accuracy) * (a - stats.mean_accuracy);
  }
  stats.std_accuracy =
      accuracies.size() > 1
          ? std::sqrt(var / static_cast<double>(accuracies.size() - 1))
          : 0.0;
  return stats;
}

}  // namespace

EvalStats cross_validate_id3(const TabularDataset& data, Id3Config config,
                             int folds, int repeats, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross validation: folds >= 2");
  if (data.rows() < folds) {
    throw std::invalid_argument("cross validation: fewer rows than folds");
  }
  const Rng base(seed);
  std::vector<double> accuracies;
  for (int rep = 0; rep < repeats; ++rep) {
    const auto order = shuffled_rows(data.rows(), base.split2(0xF01Du, rep));
    for (int fold = 0; fold < folds; ++fold) {
      std::vector<int> train, test;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (static_cast<int>(i % static_cast<std::size_t>(folds)) == fold) {
          test.push_back(order[i]);
        } else {
          train.push_back(order[i]);
        }
      }
      config.seed = base.split2(0x7123u, rep * folds + fold).state();
      const TabularDataset train_data = subset_rows(data, train);
      const Id3Model model = build_diffp_id3(train_data, config);
      int correct = 0;
      for (int row : test) {
        if (predict(model, data, row) ==
            data.labels[static_cast<std::size_t>(row)]) {
          ++correct;
        }
      }
      accuracies.push_back(static_cast<double>(correct) /
                           static_cast<double>(test.size()));
    }
  }
  return summarize(accuracies);
}

EvalStats holdout_forest(const TabularDataset& data, ForestConfig config,
                         double train_fraction, int repeats,
                         std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw std::invalid_argument("holdout: train fraction must lie in (0, 1)");
  }
  const Rng base(seed);
  std::vector<double> accuracies;
  for (int rep = 0; rep < repeats; ++rep) {
    const auto order = shuffled_rows(data.rows(), base.split2(0x8E1Du, rep));
    const std::size_t train_size = static_cast<std::size_t>(
        train_fraction * static_cast<double>(order.size()));
    std::vector<int> train(order.begin(),
                           order.begin() + static_cast<std::ptrdiff_t>(train_size));
    std::vector<int> test(order.begin() + static_cast<std::ptrdiff_t>(train_size),
                          order.end());
    if (train.empty() || test.empty()) {
      throw std::invalid_argument("holdout: split produced an empty part");
    }
    config.seed = base.split2(0x94EEu, rep).state();
    const TabularDataset train_data = subset_rows(data, train);
    const Forest forest = build_random_forest(train_data, config);
    int correct = 0;
    for (int row : test) {
      if (predict(forest, data, row) ==
          data.labels[static_cast<std::size_t>(row)]) {
        ++correct;
      }
    }
    accuracies.push_back(static_cast<double>(correct) /
                         static_cast<double>(test.size()));
  }
  return summarize(accuracies);
}

}  // namespace snm

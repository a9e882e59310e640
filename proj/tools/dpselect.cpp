// dpselect: seeded differentially private selection experiments.
//
// Subcommands: percentile, tree, forest, audit, bounds, counterexample.
// Exit codes: 0 success, 1 criteria failure (audit flag raised or the
// counterexample not reproducing), 2 configuration or I/O error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snm/analysis.hpp"
#include "snm/dataset.hpp"
#include "snm/parallel.hpp"
#include "snm/percentile.hpp"
#include "snm/report.hpp"
#include "snm/synthetic.hpp"
#include "snm/trees.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitCriteria = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string dataset;
  std::string schema;
  std::string out;
  std::vector<double> epsilons = {0.1, 1.0, 10.0, 100.0};
  double delta = 0.01;
  double sigma = 1.0;
  int dof = 3;
  std::int64_t trials = 1'000'000;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_data) {
  cmd->add_option("--epsilons", o.epsilons, "privacy budget grid");
  cmd->add_option("--delta", o.delta, "delta for approximate-DP mechanisms");
  cmd->add_option("--sigma", o.sigma, "Laplace Log-Normal sigma");
  cmd->add_option("--dof", o.dof, "Student's T degrees of freedom");
  cmd->add_option("--trials", o.trials, "Monte Carlo trials");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output file (stdout when omitted)");
  if (with_data) {
    cmd->add_option("--dataset", o.dataset,
                    "input CSV (bundled synthetic data when omitted)");
    cmd->add_option("--schema", o.schema, "JSON schema sidecar for tabular data");
  }
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    snm::write_text_file(out, content);
  }
}

snm::MechanismSpec make_spec(const std::string& name, const CommonOptions& o) {
  snm::MechanismSpec spec;
  spec.id = snm::mechanism_from_name(name);
  spec.delta = o.delta;
  spec.dof = o.dof;
  spec.sigma = o.sigma;
  return spec;
}

ordered_json common_config_json(const CommonOptions& o,
                                const std::vector<std::string>& mechanisms) {
  ordered_json j;
  j["mechanisms"] = mechanisms;
  j["epsilons"] = o.epsilons;
  j["delta"] = o.delta;
  j["sigma"] = o.sigma;
  j["dof"] = o.dof;
  j["trials"] = o.trials;
  j["seed"] = o.seed;
  if (!o.dataset.empty()) j["dataset"] = o.dataset;
  if (!o.schema.empty()) j["schema"] = o.schema;
  return j;
}

struct PercentileOptions {
  std::vector<std::string> mechanisms = {"em", "pf", "rnm-exp", "snm-lap", "snm-t"};
  std::string mode = "oracle";
  int p = 50;
  int synthetic_j = 5;
  double lambda = 100.0;
};

int run_percentile(const CommonOptions& o, const PercentileOptions& po) {
  snm::PercentileInstance inst;
  if (o.dataset.empty()) {
    inst = snm::synthetic_percentile_instance(po.synthetic_j, 101, po.p, po.lambda);
  } else {
    std::vector<double> values = snm::load_numeric_csv(o.dataset);
    std::sort(values.begin(), values.end());
    inst.data = std::move(values);
    inst.lambda = po.lambda > 0 ? po.lambda : inst.data.back();
    inst.p = po.p;
    inst.outcome_grid = snm::default_outcome_grid(inst.data, inst.lambda);
    inst.validate();
  }

  snm::PercentileExperimentConfig config;
  for (const std::string& name : po.mechanisms) {
    config.mechanisms.push_back(make_spec(name, o));
  }
  config.epsilons = o.epsilons;
  config.oracle = po.mode == "oracle";
  config.trials = o.trials;
  config.seed = o.seed;

  const auto rows = snm::run_percentile_experiment(inst, config);

  ordered_json cfg = common_config_json(o, po.mechanisms);
  cfg["mode"] = po.mode;
  cfg["p"] = po.p;
  cfg["n"] = inst.data.size();
  cfg["lambda"] = inst.lambda;
  if (o.dataset.empty()) cfg["synthetic_j"] = po.synthetic_j;

  std::vector<std::vector<std::string>> table;
  for (const auto& row : rows) {
    table.push_back({row.mechanism, snm::format_value(row.epsilon),
                     snm::format_value(row.aee), snm::format_value(row.bound),
                     std::to_string(row.j), snm::format_value(row.runtime_ms)});
  }
  emit(o.out, snm::render_csv(cfg.dump(),
                              {"mechanism", "epsilon", "aee", "bound", "j",
                               "runtime_ms"},
                              table));
  return kExitOk;
}

struct TabularOptions {
  std::vector<std::string> mechanisms = {"none", "em", "snm-lap"};
  int depth = 3;
  int folds = 10;
  int runs = 5;
  int bins = 8;
  int trees = 32;
  int synthetic_rows = 512;
  int synthetic_attrs = 3;
  int synthetic_flips = 32;
};

snm::TabularDataset load_or_synthesize(const CommonOptions& o,
                                       const TabularOptions& t) {
  if (o.dataset.empty()) {
    return snm::synthetic_tabular(t.synthetic_rows, t.synthetic_attrs,
                                  t.synthetic_flips);
  }
  if (o.schema.empty()) {
    throw std::runtime_error("a --schema sidecar is required with --dataset");
  }
  return snm::load_tabular_csv(o.dataset, snm::load_schema(o.schema));
}

std::vector<std::string> accuracy_rows(const std::string& application,
                                       const std::string& mechanism, double eps,
                                       const CommonOptions& o) {
  return {application, mechanism, snm::format_value(eps),
          snm::format_value(o.delta), "", "", "", std::to_string(o.seed), ""};
}

int run_tree(const CommonOptions& o, const TabularOptions& t) {
  const snm::TabularDataset data = load_or_synthesize(o, t);

  ordered_json cfg = common_config_json(o, t.mechanisms);
  cfg["depth"] = t.depth;
  cfg["folds"] = t.folds;
  cfg["runs"] = t.runs;
  cfg["bins"] = t.bins;
  if (o.dataset.empty()) {
    cfg["synthetic_rows"] = t.synthetic_rows;
    cfg["synthetic_attrs"] = t.synthetic_attrs;
    cfg["synthetic_flips"] = t.synthetic_flips;
  }

  std::vector<std::vector<std::string>> table;
  for (const std::string& name : t.mechanisms) {
    for (double eps : o.epsilons) {
      snm::Id3Config config;
      config.depth = t.depth;
      config.epsilon = eps;
      config.rule = snm::split_rule_from_name(name);
      config.delta = o.delta;
      config.dof = o.dof;
      config.sigma = o.sigma;
      config.continuous_bins = t.bins;
      const auto t0 = std::chrono::steady_clock::now();
      const snm::EvalStats stats =
          snm::cross_validate_id3(data, config, t.folds, t.runs, o.seed);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      auto mean_row = accuracy_rows("tree", name, eps, o);
      mean_row[4] = "accuracy_mean";
      mean_row[5] = snm::format_value(stats.mean_accuracy);
      mean_row[8] = snm::format_value(ms);
      auto std_row = accuracy_rows("tree", name, eps, o);
      std_row[4] = "accuracy_std";
      std_row[5] = snm::format_value(stats.std_accuracy);
      std_row[8] = snm::format_value(ms);
      table.push_back(std::move(mean_row));
      table.push_back(std::move(std_row));
    }
  }
  emit(o.out, snm::render_csv(cfg.dump(),
                              {"application", "mechanism", "epsilon", "delta",
                               "metric", "value", "bound", "seed", "runtime_ms"},
                              table));
  return kExitOk;
}

int run_forest(const CommonOptions& o, const TabularOptions& t, int runs) {
  const snm::TabularDataset data = load_or_synthesize(o, t);

  ordered_json cfg = common_config_json(o, t.mechanisms);
  cfg["trees"] = t.trees;
  cfg["depth"] = t.depth;
  cfg["runs"] = runs;
  if (o.dataset.empty()) {
    cfg["synthetic_rows"] = t.synthetic_rows;
    cfg["synthetic_attrs"] = t.synthetic_attrs;
    cfg["synthetic_flips"] = t.synthetic_flips;
  }

  std::vector<std::vector<std::string>> table;
  for (const std::string& name : t.mechanisms) {
    for (double eps : o.epsilons) {
      snm::ForestConfig config;
      config.trees = t.trees;
      config.depth = t.depth;
      config.epsilon = eps;
      config.leaf = snm::leaf_rule_from_name(name);
      config.delta = o.delta;
      config.dof = o.dof;
      config.sigma = o.sigma;
      const auto t0 = std::chrono::steady_clock::now();
      const snm::EvalStats stats = snm::holdout_forest(data, config, 0.8, runs, o.seed);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      auto mean_row = accuracy_rows("forest", name, eps, o);
      mean_row[4] = "accuracy_mean";
      mean_row[5] = snm::format_value(stats.mean_accuracy);
      mean_row[8] = snm::format_value(ms);
      auto std_row = accuracy_rows("forest", name, eps, o);
      std_row[4] = "accuracy_std";
      std_row[5] = snm::format_value(stats.std_accuracy);
      std_row[8] = snm::format_value(ms);
      table.push_back(std::move(mean_row));
      table.push_back(std::move(std_row));
    }
  }
  emit(o.out, snm::render_csv(cfg.dump(),
                              {"application", "mechanism", "epsilon", "delta",
                               "metric", "value", "bound", "seed", "runtime_ms"},
                              table));
  return kExitOk;
}

int run_audit(const CommonOptions& o, const std::string& mechanism,
              double epsilon, std::vector<std::int64_t> counts,
              int neighbor_label) {
  if (counts.empty()) counts = {22, 8, 17, 4, 0};  // the voting counterexample
  if (neighbor_label < 0 || neighbor_label >= static_cast<int>(counts.size())) {
    throw std::runtime_error("neighbor label out of range");
  }
  snm::Counts x(counts.begin(), counts.end());
  snm::Counts y = x;
  y[static_cast<std::size_t>(neighbor_label)] += 1;

  const snm::UtilityModel model =
      snm::leaf_label_utility_model(static_cast<int>(counts.size()));
  const snm::MechanismSpec spec = make_spec(mechanism, o);
  const snm::AuditReport report = snm::dp_audit(spec, model, x, y,
                                                {epsilon, o.delta}, o.trials,
                                                snm::Rng(o.seed));
  emit(o.out, report.to_json() + "\n");
  return report.any_flag ? kExitCriteria : kExitOk;
}

int run_bounds(const CommonOptions& o, const std::vector<double>& s_values,
               double delta_u, int r_count) {
  std::vector<std::vector<std::string>> table;
  for (double eps : o.epsilons) {
    for (double s : s_values) {
      table.push_back({snm::format_value(s), snm::format_value(delta_u),
                       snm::format_value(eps),
                       snm::format_value(snm::snm_error_bound(s, eps, r_count)),
                       snm::format_value(snm::rnm_error_bound(delta_u, eps, r_count))});
    }
  }
  ordered_json cfg;
  cfg["s_values"] = s_values;
  cfg["delta_u"] = delta_u;
  cfg["epsilons"] = o.epsilons;
  cfg["r_count"] = r_count;
  cfg["seed"] = o.seed;
  emit(o.out, snm::render_csv(cfg.dump(),
                              {"s", "delta_u", "epsilon", "snm_bound", "rnm_bound"},
                              table));
  return kExitOk;
}

int run_counterexample(const CommonOptions& o) {
  const snm::VotingCounterexampleReport report = snm::reproduce_voting_counterexample();
  ordered_json j;
  j["p_x_c3"] = report.p_x_c3;
  j["p_y_c3"] = report.p_y_c3;
  j["envelope"] = report.envelope;
  j["violation_found"] = report.violation_found;
  j["matches_reported_values"] = report.matches_reported_values;
  j["reproduced"] = report.reproduced();
  emit(o.out, j.dump(2) + "\n");
  return report.reproduced() ? kExitOk : kExitCriteria;
}

}  // namespace

int main(int argc, char** argv) {
  snm::par::apply_thread_cap();

  CLI::App app{"differentially private selection experiments"};
  app.require_subcommand(1);

  CommonOptions o;
  PercentileOptions po;
  TabularOptions to;
  int forest_runs = 10;
  std::string audit_mechanism = "snm-lap";
  double audit_epsilon = 0.5;
  std::vector<std::int64_t> audit_counts;
  int neighbor_label = 2;
  std::vector<double> s_values = {0.5};
  double delta_u = 1.0;
  int r_count = 8;

  CLI::App* percentile = app.add_subcommand("percentile", "percentile selection error");
  add_common(percentile, o, true);
  percentile->add_option("--mechanisms", po.mechanisms, "mechanisms to run");
  percentile->add_option("--mode", po.mode, "oracle or montecarlo")
      ->check(CLI::IsMember({"oracle", "montecarlo"}));
  percentile->add_option("--p", po.p, "percentile in [1, 99]");
  percentile->add_option("--j", po.synthetic_j, "repetition radius of the synthetic instance");
  percentile->add_option("--lambda", po.lambda, "value range upper bound");

  CLI::App* tree = app.add_subcommand("tree", "greedy decision tree accuracy");
  add_common(tree, o, true);
  tree->add_option("--mechanisms", to.mechanisms,
                   "split rules: none em pf snm-lap snm-t snm-lln");
  tree->add_option("--depth", to.depth, "maximum tree depth");
  tree->add_option("--folds", to.folds, "cross-validation folds");
  tree->add_option("--runs", to.runs, "cross-validation repetitions");
  tree->add_option("--bins", to.bins, "bins for continuous attributes");
  tree->add_option("--synthetic-rows", to.synthetic_rows, "rows of the bundled dataset");
  tree->add_option("--synthetic-attrs", to.synthetic_attrs, "noise attributes of the bundled dataset");
  tree->add_option("--synthetic-flips", to.synthetic_flips, "label flips of the bundled dataset");

  CLI::App* forest = app.add_subcommand("forest", "random forest accuracy");
  add_common(forest, o, true);
  forest->add_option("--mechanisms", to.mechanisms,
                     "leaf rules: none em pf snm-lap snm-t snm-lln");
  forest->add_option("--trees", to.trees, "forest size");
  forest->add_option("--depth", to.depth, "maximum tree depth");
  forest->add_option("--runs", forest_runs, "holdout repetitions");
  forest->add_option("--synthetic-rows", to.synthetic_rows, "rows of the bundled dataset");
  forest->add_option("--synthetic-attrs", to.synthetic_attrs, "noise attributes of the bundled dataset");
  forest->add_option("--synthetic-flips", to.synthetic_flips, "label flips of the bundled dataset");

  CLI::App* audit = app.add_subcommand("audit", "empirical differential privacy audit");
  add_common(audit, o, false);
  audit->add_option("--mechanism", audit_mechanism, "mechanism to audit");
  audit->add_option("--epsilon", audit_epsilon, "audited privacy budget");
  audit->add_option("--counts", audit_counts, "label counts of the base database");
  audit->add_option("--neighbor-label", neighbor_label, "label receiving one extra record");

  CLI::App* bounds = app.add_subcommand("bounds", "expected-error bound table");
  add_common(bounds, o, false);
  bounds->add_option("--s", s_values, "smooth sensitivity values");
  bounds->add_option("--delta-u", delta_u, "global sensitivity");
  bounds->add_option("--r-count", r_count, "outcome count");

  CLI::App* counterexample = app.add_subcommand(
      "counterexample", "reproduce the smooth-sensitivity exponential mechanism violation");
  add_common(counterexample, o, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(percentile)) return run_percentile(o, po);
    if (app.got_subcommand(tree)) return run_tree(o, to);
    if (app.got_subcommand(forest)) return run_forest(o, to, forest_runs);
    if (app.got_subcommand(audit)) {
      return run_audit(o, audit_mechanism, audit_epsilon, audit_counts,
                       neighbor_label);
    }
    if (app.got_subcommand(bounds)) return run_bounds(o, s_values, delta_u, r_count);
    if (app.got_subcommand(counterexample)) return run_counterexample(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}

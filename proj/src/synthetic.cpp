#include "snm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace snm {

PercentileInstance synthetic_percentile_instance(int j, int n, int p,
                                                 double lambda) {
  if (j < 0) throw std::invalid_argument("synthetic percentile: j >= 0");
  if (n < 4 * j + 7) {
    throw std::invalid_argument(
        "synthetic percentile: n too small for the requested j");
  }

  PercentileInstance inst;
  inst.lambda = lambda;
  inst.p = p;

  const double center = lambda / 2.0;
  const int k = percentile_index(n, p);
  // exactly j copies of the center value on each side of position k
  const int below = k - j;
  const int above = n - below - (2 * j + 1);
  if (below < 1 || above < 1) {
    throw std::invalid_argument(
        "synthetic percentile: percentile position leaves no room for flanks");
  }

  // flank values interleave towards the center from both ends; the top flank
  // value is pulled inward so the instance is not mirror-symmetric
  for (int i = 0; i < below; ++i) {
    inst.data.push_back(center * (static_cast<double>(i) + 1.0) /
                        (static_cast<double>(below) + 2.0));
  }
  for (int i = 0; i < 2 * j + 1; ++i) inst.data.push_back(center);
  for (int i = 0; i < above; ++i) {
    double v = lambda - (lambda - center) * (static_cast<double>(i) + 1.0) /
                            (static_cast<double>(above) + 2.0);
    if (i == 0) v = center + (v - center) * 0.55;
    inst.data.push_back(v);
  }
  std::sort(inst.data.begin(), inst.data.end());
  inst.outcome_grid = default_outcome_grid(inst.data, lambda);

  inst.validate();
  if (repetition_radius(inst) != j) {
    throw std::logic_error("synthetic percentile: constructed j is off");
  }
  return inst;
}

TabularDataset synthetic_tabular(int rows, int noise_attrs, int flipped_rows) {
  if (rows < 8 || rows % 4 != 0) {
    throw std::invalid_argument("synthetic tabular: rows must be a multiple of 4, >= 8");
  }
  if (noise_attrs < 0 || flipped_rows < 0 || flipped_rows > rows / 2) {
    throw std::invalid_argument("synthetic tabular: bad attribute/flip counts");
  }

  TabularDataset data;
  data.schema.class_name = "label";
  data.schema.class_labels = {"no", "yes"};

  AttributeSchema signal;
  signal.name = "a0";
  signal.continuous = false;
  signal.domain = {"0", "1"};
  data.schema.attributes.push_back(signal);
  for (int a = 1; a <= noise_attrs; ++a) {
    AttributeSchema attr;
    attr.name = "a" + std::to_string(a);
    attr.continuous = false;
    attr.domain = {"0", "1"};
    data.schema.attributes.push_back(attr);
  }

  data.columns.resize(data.schema.attributes.size());
  for (int i = 0; i < rows; ++i) {
    const int label = i % 2;
    data.labels.push_back(label);
    data.columns[0].push_back(i < flipped_rows ? 1 - label : label);
    for (int a = 1; a <= noise_attrs; ++a) {
      // period-2^{a+1} square waves stay exactly class-balanced
      data.columns[static_cast<std::size_t>(a)].push_back((i >> a) & 1);
    }
  }
  return data;
}

}  // namespace snm

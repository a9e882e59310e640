#pragma once

#include <string>
#include <vector>

namespace snm {

// Attribute domains are declared up front in a JSON schema sidecar; splits
// never consult the data to discover them.
struct AttributeSchema {
  std::string name;
  bool continuous = false;
  std::vector<std::string> domain;  // discrete attributes
  double lo = 0.0, hi = 0.0;        // continuous attributes
};

struct TabularSchema {
  std::vector<AttributeSchema> attributes;
  std::string class_name;
  std::vector<std::string> class_labels;

  int attribute_index(const std::string& name) const;  // -1 when missing
};

struct TabularDataset {
  TabularSchema schema;
  // column-major; discrete cells hold the domain index, continuous the value
  std::vector<std::vector<double>> columns;
  std::vector<int> labels;

  int rows() const { return static_cast<int>(labels.size()); }
};

// Schema sidecar format:
// {
//   "class": {"name": "...", "labels": ["...", ...]},
//   "attributes": [
//     {"name": "...", "kind": "discrete", "domain": ["...", ...]},
//     {"name": "...", "kind": "continuous", "min": 0.0, "max": 1.0}
//   ]
// }
TabularSchema load_schema(const std::string& path);
TabularSchema parse_schema(const std::string& json_text);

// CSV with a header row naming every schema attribute plus the class column.
// Values of discrete attributes and the class must be members of the declared
// domains. No quoting: fields must not contain commas.
TabularDataset load_tabular_csv(const std::string& csv_path,
                                const TabularSchema& schema);
TabularDataset parse_tabular_csv(const std::string& csv_text,
                                 const TabularSchema& schema);

// Single-column CSV of reals (optionally headed), for the percentile app.
std::vector<double> load_numeric_csv(const std::string& path);

}  // namespace snm

#include "snm/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace snm {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace and a possible trailing CR
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos
                         ? std::string()
                         : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

int TabularSchema::attribute_index(const std::string& name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

TabularSchema parse_schema(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  TabularSchema schema;
  schema.class_name = j.at("class").at("name").get<std::string>();
  schema.class_labels =
      j.at("class").at("labels").get<std::vector<std::string>>();
  if (schema.class_labels.empty()) {
    throw std::runtime_error("schema: class needs at least one label");
  }
  for (const auto& a : j.at("attributes")) {
    AttributeSchema attr;
    attr.name = a.at("name").get<std::string>();
    const std::string kind = a.at("kind").get<std::string>();
    if (kind == "discrete") {
      attr.continuous = false;
      attr.domain = a.at("domain").get<std::vector<std::string>>();
      if (attr.domain.empty()) {
        throw std::runtime_error("schema: discrete attribute '" + attr.name +
                                 "' needs a non-empty domain");
      }
    } else if (kind == "continuous") {
      attr.continuous = true;
      attr.lo = a.at("min").get<double>();
      attr.hi = a.at("max").get<double>();
      if (!(attr.lo < attr.hi)) {
        throw std::runtime_error("schema: continuous attribute '" + attr.name +
                                 "' needs min < max");
      }
    } else {
      throw std::runtime_error("schema: unknown attribute kind '" + kind + "'");
    }
    schema.attributes.push_back(std::move(attr));
  }
  if (schema.attributes.empty()) {
    throw std::runtime_error("schema: at least one attribute required");
  }
  return schema;
}

TabularSchema load_schema(const std::string& path) {
  return parse_schema(read_file(path));
}

TabularDataset parse_tabular_csv(const std::string& csv_text,
                                 const TabularSchema& schema) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");

  const std::vector<std::string> header = split_csv_line(line);
  std::vector<int> column_of(header.size(), -1);  // header pos -> attribute
  int class_pos = -1;
  for (std::size_t h = 0; h < header.size(); ++h) {
    if (header[h] == schema.class_name) {
      class_pos = static_cast<int>(h);
    } else {
      column_of[h] = schema.attribute_index(header[h]);
      if (column_of[h] < 0) {
        throw std::runtime_error("csv: column '" + header[h] +
                                 "' is not declared in the schema");
      }
    }
  }
  if (class_pos < 0) {
    throw std::runtime_error("csv: class column '" + schema.class_name +
                             "' missing");
  }
  for (const auto& attr : schema.attributes) {
    if (std::find(header.begin(), header.end(), attr.name) == header.end()) {
      throw std::runtime_error("csv: attribute column '" + attr.name +
                               "' missing");
    }
  }

  TabularDataset data;
  data.schema = schema;
  data.columns.resize(schema.attributes.size());

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("csv: line " + std::to_string(line_no) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " +
                               std::to_string(header.size()));
    }
    for (std::size_t h = 0; h < fields.size(); ++h) {
      if (static_cast<int>(h) == class_pos) {
        const auto it = std::find(schema.class_labels.begin(),
                                  schema.class_labels.end(), fields[h]);
        if (it == schema.class_labels.end()) {
          throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                   ": unknown class label '" + fields[h] + "'");
        }
        data.labels.push_back(
            static_cast<int>(it - schema.class_labels.begin()));
      } else {
        const auto& attr =
            schema.attributes[static_cast<std::size_t>(column_of[h])];
        double cell;
        if (attr.continuous) {
          try {
            cell = std::stod(fields[h]);
          } catch (...) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": '" + fields[h] + "' is not numeric");
          }
        } else {
          const auto it =
              std::find(attr.domain.begin(), attr.domain.end(), fields[h]);
          if (it == attr.domain.end()) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": '" + fields[h] +
                                     "' is not in the domain of " + attr.name);
          }
          cell = static_cast<double>(it - attr.domain.begin());
        }
        data.columns[static_cast<std::size_t>(column_of[h])].push_back(cell);
      }
    }
  }
  return data;
}

TabularDataset load_tabular_csv(const std::string& csv_path,
                                const TabularSchema& schema) {
  return parse_tabular_csv(read_file(csv_path), schema);
}

std::vector<double> load_numeric_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto fields = split_csv_line(line);
    if (fields.empty() || fields[0].empty()) continue;
    try {
      values.push_back(std::stod(fields[0]));
    } catch (...) {
      if (first) {  // tolerate a header line
        first = false;
        continue;
      }
      throw std::runtime_error("numeric csv: '" + fields[0] + "' is not a number");
    }
    first = false;
  }
  if (values.empty()) throw std::runtime_error("numeric csv: no values in " + path);
  return values;
}

}  // namespace snm

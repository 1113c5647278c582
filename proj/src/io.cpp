#include "bnkit/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace bnkit {
namespace {

[[noreturn]] void parse_fail(const std::string& where) { throw Error(ErrorCode::kParseError, where); }

const Json& require_field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) parse_fail(where + ": missing field \"" + key + "\"");
  return obj.at(key);
}

std::size_t as_index(const Json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    parse_fail(where + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                               : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::vector<std::vector<std::string>> csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!trim(line).empty()) rows.push_back(split_line(line));
    start = end + 1;
  }
  return rows;
}

void check_csv_token(const std::string& s) {
  if (s.empty() || s.find_first_of(",\n\r\"") != std::string::npos || s == kMissingToken) {
    throw Error(ErrorCode::kInvalidSchema, "label '" + s + "' cannot be written to CSV");
  }
}

}  // namespace

Json to_json(const Dag& dag) {
  Json j;
  Json vars = Json::array();
  for (const Variable& v : dag.variables()) vars.push_back(Json{{"name", v.name}, {"states", v.states}});
  j["variables"] = std::move(vars);
  Json edges = Json::array();
  for (const Edge& e : dag.edges()) edges.push_back(Json::array({e.parent, e.child}));
  j["edges"] = std::move(edges);
  return j;
}

Json to_json(const Network& net) {
  Json j = to_json(net.dag());
  Json cpts = Json::array();
  for (const Cpt& cpt : net.cpts()) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < cpt.num_configs(); ++r) {
      auto row = cpt.row(r);
      rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
    }
    cpts.push_back(Json{{"child", cpt.child()}, {"parents", cpt.parents()}, {"rows", std::move(rows)}});
  }
  j["cpts"] = std::move(cpts);
  return j;
}

Dag dag_from_json(const Json& j) {
  const Json& vars = require_field(j, "variables", "model");
  if (!vars.is_array()) parse_fail("model: \"variables\" must be an array");
  std::vector<Variable> variables;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "]";
    const Json& name = require_field(vars[i], "name", where);
    const Json& states = require_field(vars[i], "states", where);
    if (!name.is_string()) parse_fail(where + ".name: expected a string");
    if (!states.is_array()) parse_fail(where + ".states: expected an array");
    Variable v{name.get<std::string>(), {}};
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (!states[k].is_string()) parse_fail(where + ".states[" + std::to_string(k) + "]: expected a string");
      v.states.push_back(states[k].get<std::string>());
    }
    variables.push_back(std::move(v));
  }
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    const Json& arr = j.at("edges");
    if (!arr.is_array()) parse_fail("model: \"edges\" must be an array");
    for (std::size_t e = 0; e < arr.size(); ++e) {
      const std::string where = "edges[" + std::to_string(e) + "]";
      if (!arr[e].is_array() || arr[e].size() != 2) parse_fail(where + ": expected [parent, child]");
      const std::size_t p = as_index(arr[e][0], where);
      const std::size_t c = as_index(arr[e][1], where);
      if (p >= variables.size() || c >= variables.size()) parse_fail(where + ": variable index out of range");
      edges.push_back({p, c});
    }
  }
  return Dag(std::move(variables), std::move(edges));
}

Network network_from_json(const Json& j) {
  Dag dag = dag_from_json(j);
  const Json& arr = require_field(j, "cpts", "model");
  if (!arr.is_array()) parse_fail("model: \"cpts\" must be an array");
  std::vector<Cpt> cpts;
  for (std::size_t c = 0; c < arr.size(); ++c) {
    const std::string where = "cpts[" + std::to_string(c) + "]";
    const std::size_t child = as_index(require_field(arr[c], "child", where), where + ".child");
    if (child >= dag.size()) parse_fail(where + ".child: variable index out of range");
    std::vector<std::size_t> parents;
    for (const Json& p : require_field(arr[c], "parents", where)) parents.push_back(as_index(p, where + ".parents"));
    const Json& rows = require_field(arr[c], "rows", where);
    if (!rows.is_array()) parse_fail(where + ".rows: expected an array");
    const std::size_t r = dag.cardinality(child);
    std::vector<double> values;
    for (std::size_t row = 0; row < rows.size(); ++row) {
      const std::string rw = where + ".rows[" + std::to_string(row) + "]";
      if (!rows[row].is_array() || rows[row].size() != r) {
        throw Error(ErrorCode::kShapeMismatch, rw + ": expected " + std::to_string(r) + " probabilities");
      }
      for (const Json& v : rows[row]) {
        if (!v.is_number()) parse_fail(rw + ": expected numbers");
        values.push_back(v.get<double>());
      }
    }
    cpts.emplace_back(child, std::move(parents), rows.size(), r, std::move(values));
  }
  // CPTs may be listed in any order; the network stores them by child index.
  std::stable_sort(cpts.begin(), cpts.end(), [](const Cpt& a, const Cpt& b) { return a.child() < b.child(); });
  return renormalize_rows(Network(std::move(dag), std::move(cpts)));
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path.string() + "'");
  out << text;
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return parse_json(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

Network load_network(const std::filesystem::path& path) {
  Network net = network_from_json(read_json_file(path));
  require_valid(net);
  return net;
}

Dag load_dag(const std::filesystem::path& path) {
  Dag dag = dag_from_json(read_json_file(path));
  if (auto cycle = dag.find_cycle(); !cycle.empty()) {
    throw Error(ErrorCode::kCycleDetected, path.string() + ": structure contains a directed cycle");
  }
  return dag;
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  const auto& schema = data.schema();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    check_csv_token(schema[i].name);
    if (i) out += ',';
    out += schema[i].name;
  }
  out += '\n';
  for (const Assignment& r : data.records()) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      if (r[i] == kMissing) {
        out += kMissingToken;
      } else {
        const std::string& label = schema[i].states[static_cast<std::size_t>(r[i])];
        check_csv_token(label);
        out += label;
      }
    }
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text, const std::vector<Variable>& schema) {
  auto rows = csv_rows(text);
  if (rows.empty()) parse_fail("CSV: missing header row");
  const auto& header = rows.front();
  if (header.size() != schema.size()) {
    parse_fail("CSV row 1: header has " + std::to_string(header.size()) + " columns, expected " +
               std::to_string(schema.size()));
  }
  // column -> schema variable
  std::vector<std::size_t> column_var(header.size());
  std::vector<bool> seen(schema.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto it = std::find_if(schema.begin(), schema.end(), [&](const Variable& v) { return v.name == header[c]; });
    if (it == schema.end()) {
      parse_fail("CSV row 1, column " + std::to_string(c + 1) + ": unknown variable '" + header[c] + "'");
    }
    const auto v = static_cast<std::size_t>(it - schema.begin());
    if (seen[v]) parse_fail("CSV row 1, column " + std::to_string(c + 1) + ": duplicate column '" + header[c] + "'");
    seen[v] = true;
    column_var[c] = v;
  }
  Dataset data(schema);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      parse_fail("CSV row " + std::to_string(r + 1) + ": expected " + std::to_string(header.size()) + " cells");
    }
    Assignment rec(schema.size(), kMissing);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] == kMissingToken) continue;
      const Variable& var = schema[column_var[c]];
      auto k = var.state_index(row[c]);
      if (!k) {
        parse_fail("CSV row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) + ": unknown state '" +
                   row[c] + "' for variable '" + var.name + "'");
      }
      rec[column_var[c]] = *k;
    }
    data.add(std::move(rec));
  }
  return data;
}

Dataset dataset_from_csv(std::string_view text) {
  auto rows = csv_rows(text);
  if (rows.empty()) parse_fail("CSV: missing header row");
  std::vector<Variable> schema;
  for (const auto& name : rows.front()) schema.push_back({name, {}});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != schema.size()) {
      parse_fail("CSV row " + std::to_string(r + 1) + ": expected " + std::to_string(schema.size()) + " cells");
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& cell = rows[r][c];
      if (cell == kMissingToken) continue;
      auto& states = schema[c].states;
      if (std::find(states.begin(), states.end(), cell) == states.end()) states.push_back(cell);
    }
  }
  for (const Variable& v : schema) {
    if (v.states.size() < 2) {
      throw Error(ErrorCode::kInvalidSchema, "column '" + v.name +
                                                 "' shows fewer than 2 distinct states; supply a schema model");
    }
  }
  return dataset_from_csv(text, schema);
}

Dataset load_dataset(const std::filesystem::path& path, const std::vector<Variable>& schema) {
  try {
    return dataset_from_csv(read_text_file(path), schema);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  try {
    return dataset_from_csv(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

Assignment parse_evidence(const Dag& dag, std::string_view text) {
  Assignment evidence(dag.size(), kMissing);
  for (const std::string& item : split_line(text)) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "evidence item '" + item + "' is not of the form var=state");
    }
    const std::string name(trim(std::string_view(item).substr(0, eq)));
    const std::string label(trim(std::string_view(item).substr(eq + 1)));
    const std::size_t v = dag.index_of(name);
    auto k = dag.variable(v).state_index(label);
    if (!k) throw Error(ErrorCode::kUnknownState, "variable '" + name + "' has no state '" + label + "'");
    evidence[v] = *k;
  }
  return evidence;
}

}  // namespace bnkit

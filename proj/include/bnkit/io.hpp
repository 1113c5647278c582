#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "bnkit/dataset.hpp"
#include "bnkit/network.hpp"
#include "json.hpp"

namespace bnkit {

using Json = nlohmann::ordered_json;

// Model file:
//   {"variables":[{"name":..,"states":[..]}], "edges":[[parent,child],..],
//    "cpts":[{"child":i,"parents":[..],"rows":[[theta..],..]}]}
// Rows follow parent_config_index order. "cpts" may be omitted in structure-only
// files, which load through dag_from_json.

Json to_json(const Dag& dag);
Json to_json(const Network& net);

/// Parses the variables and edges. Throws ParseError.
Dag dag_from_json(const Json& j);
/// Parses and renormalizes near-unit rows; does not validate.
Network network_from_json(const Json& j);

/// Canonical text: two-space indented JSON plus a trailing newline.
std::string dump_json(const Json& j);
Json parse_json(std::string_view text);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Reads a model and rejects it unless validate_network accepts it.
Network load_network(const std::filesystem::path& path);
/// Reads variables and edges only; the graph must be acyclic.
Dag load_dag(const std::filesystem::path& path);

// Dataset file: CSV, header row of variable names, cells are state labels and
// "?" marks a missing value.
inline constexpr std::string_view kMissingToken = "?";

std::string dataset_to_csv(const Dataset& data);
/// Columns may appear in any order but must cover exactly the schema variables.
Dataset dataset_from_csv(std::string_view text, const std::vector<Variable>& schema);
/// Schema inferred from the data: states in order of first appearance.
Dataset dataset_from_csv(std::string_view text);
Dataset load_dataset(const std::filesystem::path& path, const std::vector<Variable>& schema);
Dataset load_dataset(const std::filesystem::path& path);

/// Evidence written as "var=label,var=label"; whitespace around tokens ignored.
Assignment parse_evidence(const Dag& dag, std::string_view text);

}  // namespace bnkit

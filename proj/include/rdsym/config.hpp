#pragma once

#include "rdsym/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string_view>

namespace rdsym {

/// "d1=1,d2=2,d3=5/9"; values accept p/q and decimals.
ParamSet parse_param_list(std::string_view text);

/// Number from a JSON number or a "p/q" string.
Number number_from_json(const nlohmann::json& j);

/// Subset of TOML: [tables], dotted keys, strings, integers, floats,
/// booleans, arrays (may span lines), inline tables, # comments.
nlohmann::json parse_toml(std::string_view text);

/// Reads .json or .toml by extension.
nlohmann::json load_config(const std::filesystem::path& path);

/// System/operator definition: a table case (`case`, `params`, optional `P`)
/// or an explicit record (`d`, `C`, `xi`, `eta`).
struct Definition {
  std::optional<int> case_id;
  ParamSet params;
  std::optional<Expr> P;
  std::optional<RDSystem> system;
  std::optional<QOperator> op;
};

Definition parse_definition(const nlohmann::json& j);

}  // namespace rdsym

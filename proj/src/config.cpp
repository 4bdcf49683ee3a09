#include "rdsym/config.hpp"

#include "rdsym/errors.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace rdsym {

ParamSet parse_param_list(std::string_view text) {
  ParamSet out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    pos = end + 1;
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) throw Error("malformed parameter '" + std::string(item) + "'");
    std::string key(item.substr(0, eq));
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    try {
      out[key] = Number::parse(item.substr(eq + 1));
    } catch (const Error& e) {
      throw Error("parameter " + key + ": " + e.what());
    }
  }
  return out;
}

Number number_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Number(j.get<std::int64_t>());
  if (j.is_number()) return Number::parse(j.dump());
  if (j.is_string()) return Number::parse(j.get<std::string>());
  throw Error("expected a number, got " + j.dump());
}

namespace {

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : s_(text) {}

  nlohmann::json run() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    for (;;) {
      skip_blank_lines();
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        auto path = key_path();
        skip_inline_ws();
        expect(']');
        table = &root;
        for (const auto& k : path) {
          auto& next = (*table)[k];
          if (next.is_null()) next = nlohmann::json::object();
          if (!next.is_object()) fail("key '" + k + "' is not a table");
          table = &next;
        }
      } else {
        auto path = key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        nlohmann::json* slot = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
          auto& next = (*slot)[path[i]];
          if (next.is_null()) next = nlohmann::json::object();
          slot = &next;
        }
        if (slot->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*slot)[path.back()] = value();
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
    throw Error("toml line " + std::to_string(line) + ": " + what);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }

  // Whitespace, newlines and comments (inside arrays and between statements).
  void skip_blank_lines() {
    for (;;) {
      skip_inline_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        ++pos_;
      else
        return;
    }
  }

  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (pos_ < s_.size() && s_[pos_] != '\n') fail("unexpected trailing text");
  }

  std::string key() {
    char c = peek();
    if (c == '"' || c == '\'') return string_value();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> path;
    skip_inline_ws();
    path.push_back(key());
    for (;;) {
      skip_inline_ws();
      if (peek() != '.') return path;
      ++pos_;
      skip_inline_ws();
      path.push_back(key());
    }
  }

  std::string string_value() {
    char quote = peek();
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      char c = s_[pos_++];
      if (c == '\n') fail("unterminated string");
      if (c == '\\' && quote == '"') {
        char e = peek();
        ++pos_;
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  nlohmann::json value() {
    char c = peek();
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      for (;;) {
        skip_blank_lines();
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(value());
        skip_blank_lines();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']'");
        }
      }
    }
    if (c == '{') {
      ++pos_;
      nlohmann::json obj = nlohmann::json::object();
      skip_inline_ws();
      if (peek() == '}') {
        ++pos_;
        return obj;
      }
      for (;;) {
        auto path = key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        nlohmann::json* slot = &obj;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) slot = &(*slot)[path[i]];
        (*slot)[path.back()] = value();
        skip_inline_ws();
        if (peek() == ',') {
          ++pos_;
          skip_inline_ws();
          continue;
        }
        expect('}');
        return obj;
      }
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != ',' &&
           s_[pos_] != ']' && s_[pos_] != '}' && s_[pos_] != '#')
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    if (digits.empty()) fail("expected a value");
    bool integral = digits.find_first_of(".eE") == std::string::npos;
    char* end = nullptr;
    if (integral) {
      long long v = std::strtoll(digits.c_str(), &end, 10);
      if (*end == '\0') return v;
    } else {
      double v = std::strtod(digits.c_str(), &end);
      if (*end == '\0') return v;
    }
    fail("malformed value '" + tok + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::array<Expr, 3> three_exprs(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) throw Error(std::string("'") + key + "' must be an array of three expressions");
  std::array<Expr, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = parse(j[k].get<std::string>());
  return out;
}

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return TomlReader(text).run(); }

nlohmann::json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto ext = path.extension().string();
  if (ext == ".toml") return parse_toml(buf.str());
  if (ext == ".json") {
    try {
      return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw Error("config " + path.string() + ": " + e.what());
    }
  }
  throw Error("config must be .json or .toml: " + path.string());
}

Definition parse_definition(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("definition must be an object");
  Definition d;
  try {
    if (j.contains("case")) d.case_id = j.at("case").get<int>();
    if (j.contains("params"))
      for (const auto& [k, v] : j.at("params").items()) d.params[k] = number_from_json(v);
    if (j.contains("P")) d.P = parse(j.at("P").get<std::string>());
    bool explicit_record = j.contains("d") || j.contains("C") || j.contains("xi") || j.contains("eta");
    if (explicit_record) {
      if (d.case_id) throw Error("definition mixes 'case' with an explicit record");
      for (const char* k : {"d", "C", "xi", "eta"})
        if (!j.contains(k)) throw Error(std::string("explicit definition needs '") + k + "'");
      const auto& dj = j.at("d");
      if (!dj.is_array() || dj.size() != 3) throw Error("'d' must be an array of three diffusivities");
      RDSystem sys;
      for (int k = 0; k < 3; ++k) sys.d[k] = number_from_json(dj[k]);
      sys.C = three_exprs(j.at("C"), "C");
      sys.label = "user system";
      // Parameters named in the record are substituted as constants.
      SubstitutionRules consts;
      for (const auto& [k, v] : d.params) consts[k] = Expr(v);
      for (auto& c : sys.C) c = substitute(c, consts);
      sys.validate();
      QOperator q;
      q.xi = substitute(parse(j.at("xi").get<std::string>()), consts);
      q.eta = three_exprs(j.at("eta"), "eta");
      for (auto& e : q.eta) e = substitute(e, consts);
      q.label = "user operator";
      d.system = sys;
      d.op = q;
    } else if (!d.case_id) {
      throw Error("definition needs 'case' or an explicit {d, C, xi, eta} record");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("definition: ") + e.what());
  }
  return d;
}

}  // namespace rdsym

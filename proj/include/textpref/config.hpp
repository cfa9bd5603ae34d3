#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/pipeline.hpp"

namespace textpref {

/// Expand ${VAR} from the environment. Unset variables are errors so a
/// missing secret fails loudly instead of being sent as an empty string.
inline std::string expand_env_vars(const std::string& in) {
  std::string out;
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '$' && i + 1 < in.size() && in[i + 1] == '{') {
      const std::size_t end = in.find('}', i + 2);
      if (end == std::string::npos)
        throw ValidationError("unterminated ${ in value: " + in);
      const std::string name = in.substr(i + 2, end - i - 2);
      const char* value = std::getenv(name.c_str());
      if (!value) throw ValidationError("environment variable not set: " + name);
      out += value;
      i = end + 1;
    } else {
      out += in[i++];
    }
  }
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r'))
    --b;
  return std::string(s.substr(a, b - a));
}

/// One scalar: quoted string (with ${VAR} interpolation) or bare
/// integer/float/bool token.
inline std::string toml_scalar(std::string_view raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) throw ValidationError(where + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ValidationError(where + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size() &&
          (v[i + 1] == '"' || v[i + 1] == '\\')) {
        out += v[i + 1];
        ++i;
      } else {
        out += v[i];
      }
    }
    return expand_env_vars(out);
  }
  for (char c : v)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
          c == '+' || c == '_' || c == 'e' || c == 'E'))
      throw ValidationError(where + ": bare value '" + v +
                            "' is not a number or boolean (quote strings)");
  return v;
}

}  // namespace detail

/// Flat TOML subset: `key = value` per line, values are strings, numbers,
/// booleans or single-line arrays of those; # comments. Quoted strings get
/// ${VAR} environment interpolation. Returns key -> list of scalar values.
inline std::map<std::string, std::vector<std::string>> parse_toml_file(
    const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::map<std::string, std::vector<std::string>> out;
  std::size_t pos = 0, line_no = 0;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string line = detail::trim(
        std::string_view(content).substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (line.empty() || line[0] == '#') {
      if (pos > content.size()) break;
      continue;
    }
    if (line[0] == '[')
      throw ValidationError(where + ": sections are not supported; use flat keys");

    // strip a trailing comment (only outside quotes)
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
      else if (line[i] == '#' && !quoted) {
        line = detail::trim(line.substr(0, i));
        break;
      }
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (out.count(key)) throw ValidationError(where + ": duplicate key '" + key + "'");

    std::vector<std::string> scalars;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw ValidationError(where + ": arrays must close on the same line");
      std::string body = value.substr(1, value.size() - 2);
      std::size_t i = 0;
      while (i < body.size()) {
        // split on commas outside quotes
        bool q = false;
        std::size_t j = i;
        for (; j < body.size(); ++j) {
          if (body[j] == '"' && (j == 0 || body[j - 1] != '\\')) q = !q;
          else if (body[j] == ',' && !q) break;
        }
        const std::string item = detail::trim(body.substr(i, j - i));
        if (!item.empty()) scalars.push_back(detail::toml_scalar(item, where));
        i = j + 1;
      }
    } else {
      scalars.push_back(detail::toml_scalar(value, where));
    }
    out.emplace(key, std::move(scalars));
    if (pos > content.size()) break;
  }
  return out;
}

/// Load a run configuration from TOML onto `cfg` (keys match the pipeline
/// CLI flags). Unknown keys are errors so typos cannot silently no-op.
inline void apply_run_config_file(const std::filesystem::path& path,
                                  RunConfig& cfg) {
  const auto kv = parse_toml_file(path);
  const auto one = [&](const std::string& key) -> const std::string& {
    const auto& values = kv.at(key);
    if (values.size() != 1)
      throw ValidationError(path.string() + ": key '" + key +
                            "' expects a single value");
    return values.front();
  };
  const auto as_u64 = [&](const std::string& key) {
    try {
      return std::stoull(one(key));
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": key '" + key +
                            "' is not an unsigned integer");
    }
  };
  const auto as_int = [&](const std::string& key) {
    try {
      return std::stoi(one(key));
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": key '" + key +
                            "' is not an integer");
    }
  };
  const auto as_double = [&](const std::string& key) {
    try {
      return std::stod(one(key));
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": key '" + key +
                            "' is not a number");
    }
  };
  const auto as_bool = [&](const std::string& key) {
    const std::string& v = one(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ValidationError(path.string() + ": key '" + key +
                          "' is not a boolean");
  };

  for (const auto& [key, values] : kv) {
    if (key == "seed") cfg.seed = as_u64(key);
    else if (key == "registry") cfg.registry_path = one(key);
    else if (key == "corpus") cfg.corpus_paths = values;
    else if (key == "templates") cfg.templates_dir = one(key);
    else if (key == "out-dir") cfg.out_dir = one(key);
    else if (key == "n") cfg.sample_n = as_u64(key);
    else if (key == "min") cfg.min_moved = as_int(key);
    else if (key == "max") cfg.max_moved = as_int(key);
    else if (key == "strict") cfg.strict = as_bool(key);
    else if (key == "allow-unknown") cfg.allow_unknown = as_bool(key);
    else if (key == "stub") cfg.stub_script = one(key);
    else if (key == "endpoint") cfg.endpoint = one(key);
    else if (key == "model") cfg.model_name = one(key);
    else if (key == "api-key") cfg.api_key = one(key);
    else if (key == "max-in-flight") cfg.max_in_flight = as_int(key);
    else if (key == "retries") cfg.max_retries = as_int(key);
    else if (key == "epsilon") cfg.epsilon = as_double(key);
    else if (key == "unparsed") cfg.unparsed = one(key);
    else if (key == "group-by") cfg.group_by = one(key);
    else if (key == "toy-lr") cfg.toy.lr = as_double(key);
    else if (key == "toy-epochs") cfg.toy.epochs = as_int(key);
    else if (key == "toy-batch") cfg.toy.batch_size = as_int(key);
    else if (key == "toy-dim")
      cfg.toy.dim = static_cast<std::uint32_t>(as_u64(key));
    else if (key == "toy-ngram") cfg.toy.ngram_order = as_int(key);
    else
      throw ValidationError(path.string() + ": unknown key '" + key + "'");
  }
}

}  // namespace textpref

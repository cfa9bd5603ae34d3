#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "textpref/error.hpp"
#include "textpref/io.hpp"

namespace textpref {

/// Per-language attributes used for degradation eligibility and metric
/// grouping. `code` is `<iso639-3>_<Script>`, e.g. `eng_Latn`.
struct LanguageMeta {
  std::string code;
  std::string script;
  std::string family;
  int resource_level = 0;               // 0..5
  bool degradable = true;               // space-delimited word order usable
  std::set<std::string> supported_by;   // model names
};

enum class ResourceClass { LR, HR };

/// HR iff resource level is 3, 4 or 5; LR iff 0, 1 or 2.
inline ResourceClass resource_class(const LanguageMeta& meta) {
  return meta.resource_level >= 3 ? ResourceClass::HR : ResourceClass::LR;
}

inline std::string_view to_string(ResourceClass c) {
  return c == ResourceClass::HR ? "HR" : "LR";
}

inline bool code_well_formed(std::string_view code) {
  if (code.size() != 8 || code[3] != '_') return false;
  for (int i = 0; i < 3; ++i)
    if (code[i] < 'a' || code[i] > 'z') return false;
  if (code[4] < 'A' || code[4] > 'Z') return false;
  for (int i = 5; i < 8; ++i)
    if (code[i] < 'a' || code[i] > 'z') return false;
  return true;
}

namespace detail {
inline void validate_meta(const LanguageMeta& m, const std::string& where) {
  if (!code_well_formed(m.code))
    throw ValidationError(where + ": field 'code': '" + m.code +
                          "' does not match <iso639-3>_<Script>");
  if (m.resource_level < 0 || m.resource_level > 5)
    throw ValidationError(where + ": field 'resource_level': must be 0..5, got " +
                          std::to_string(m.resource_level));
  if (m.script != m.code.substr(4))
    throw ValidationError(where + ": field 'script': '" + m.script +
                          "' does not equal the code suffix '" +
                          m.code.substr(4) + "'");
}
}  // namespace detail

/// Immutable after load; safe for shared concurrent reads.
class Registry {
 public:
  Registry() = default;

  void add(LanguageMeta meta) {
    detail::validate_meta(meta, "registry entry '" + meta.code + "'");
    auto [it, inserted] = entries_.emplace(meta.code, std::move(meta));
    if (!inserted)
      throw ValidationError("duplicate language code: " + it->first);
  }

  /// Lookup that never silently defaults.
  const LanguageMeta& at(std::string_view code) const {
    auto it = entries_.find(std::string(code));
    if (it == entries_.end())
      throw ValidationError("unknown language code: " + std::string(code));
    return it->second;
  }

  const LanguageMeta* find(std::string_view code) const {
    auto it = entries_.find(std::string(code));
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const std::map<std::string, LanguageMeta>& entries() const { return entries_; }

  /// CSV with header: code,script,family,resource_level,degradable,supported_by
  /// where supported_by is a semicolon-separated list.
  static Registry load(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.empty())
      throw ValidationError(path.string() + ": empty registry file");
    const std::vector<std::string> header = {
        "code", "script", "family", "resource_level", "degradable",
        "supported_by"};
    if (rows.front().fields != header)
      throw ValidationError(path.string() +
                            ": bad header, expected "
                            "code,script,family,resource_level,degradable,"
                            "supported_by");
    Registry reg;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& [line_no, fields] = rows[r];
      const std::string where = path.string() + ":" + std::to_string(line_no);
      if (fields.size() != 6)
        throw ValidationError(where + ": expected 6 fields, got " +
                              std::to_string(fields.size()));
      LanguageMeta m;
      m.code = fields[0];
      m.script = fields[1];
      m.family = fields[2];
      try {
        std::size_t pos = 0;
        m.resource_level = std::stoi(fields[3], &pos);
        if (pos != fields[3].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError(where + ": field 'resource_level': not an integer: '" +
                              fields[3] + "'");
      }
      if (fields[4] == "true") m.degradable = true;
      else if (fields[4] == "false") m.degradable = false;
      else
        throw ValidationError(where + ": field 'degradable': expected true/false, got '" +
                              fields[4] + "'");
      std::stringstream ss(fields[5]);
      std::string model;
      while (std::getline(ss, model, ';'))
        if (!model.empty()) m.supported_by.insert(model);
      try {
        reg.add(std::move(m));
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    return reg;
  }

  void save(const std::filesystem::path& path) const {
    std::ostringstream out;
    out << "code,script,family,resource_level,degradable,supported_by\n";
    for (const auto& [code, m] : entries_) {
      std::string supported;
      for (const auto& s : m.supported_by) {
        if (!supported.empty()) supported += ';';
        supported += s;
      }
      out << csv_escape(code) << ',' << csv_escape(m.script) << ','
          << csv_escape(m.family) << ',' << m.resource_level << ','
          << (m.degradable ? "true" : "false") << ',' << csv_escape(supported)
          << '\n';
    }
    write_file(path, out.str());
  }

 private:
  std::map<std::string, LanguageMeta> entries_;
};

}  // namespace textpref
